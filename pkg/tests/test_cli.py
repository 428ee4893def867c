import csv
import json
import subprocess
import sys

import pytest

from warehouse_layout.cli import main
from warehouse_layout.domain import load_config

FAST = ["--generations", "1", "--updates", "1"]


def test_gen_config(tmp_path):
    assert main(["gen-config", "--out", str(tmp_path), "tiny", "desk"]) == 0
    assert load_config(tmp_path / "tiny.json").name == "tiny"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["desk.json", "tiny.json"]
    with pytest.raises(SystemExit):
        main(["gen-config", "--out", str(tmp_path), "moon"])


def test_simulate_writes_manifest(tmp_path, capsys):
    routes = tmp_path / "routes.csv"
    assert main(["simulate", "--config", "tiny", "--layout", "1,2,2,1", "--seed", "3",
                 "--out", str(tmp_path), "--dump-routes", str(routes)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["layout"] == "1,2,2,1"
    assert (tmp_path / "heatmap.pgm").exists()
    assert next(csv.reader(routes.open())) == ["row", "col", "target", "direction", "distance"]
    printed = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert printed["reward"] == manifest["reward"]


def test_simulate_layout_from_file(tmp_path, capsys):
    lay = tmp_path / "layout.txt"
    lay.write_text("2,2,1,1\n")
    assert main(["simulate", "--config", "tiny", "--layout", f"@{lay}", "--out", str(tmp_path / "o")]) == 0


def test_config_path_and_bad_name(tmp_path):
    main(["gen-config", "--out", str(tmp_path), "tiny"])
    assert main(["simulate", "--config", str(tmp_path / "tiny.json"), "--layout", "1,1,1,1",
                 "--out", str(tmp_path / "o")]) == 0
    with pytest.raises(SystemExit):
        main(["simulate", "--config", "nowhere", "--layout", "1", "--out", str(tmp_path)])


def test_evolve(tmp_path):
    assert main(["evolve", "--config", "tiny", "--algo", "simu", "--out", str(tmp_path), *FAST]) == 0
    assert (tmp_path / "manifest.json").exists() and (tmp_path / "curve.csv").exists()


def test_oracle(tmp_path, capsys):
    assert main(["oracle", "--config", "tiny", "--seeds", "0", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "report.csv").read_text().splitlines()
    assert rows[0] == "rank,layout,mean_fitness" and len(rows) == 17
    assert "best layout" in capsys.readouterr().out


def test_compare(tmp_path):
    assert main(["compare", "--config", "tiny", "--algos", "random", "heuristic", "--runs", "2",
                 "--out", str(tmp_path), *FAST]) == 0
    assert len((tmp_path / "report.csv").read_text().splitlines()) == 3
    assert len((tmp_path / "runs.csv").read_text().splitlines()) == 5


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "warehouse_layout", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "simulate" in out.stdout
