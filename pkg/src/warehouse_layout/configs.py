"""Shipped warehouse instances and the generator behind ``gen-config``.

* ``desk``: 10x10 grid, 4 sources on the outer columns, 8 holes in the middle,
  15 robots, 3 destinations, 300 steps. Small enough for many repeated runs.
* ``tiny``: 6x6 grid with 4 holes and 2 destinations (16 layouts), used with
  the brute-force oracle.
* ``large``: 20x20 grid with the full-size parameters (12 sources, 20 holes,
  60 robots, 5 destinations, 1000 steps). The source and hole coordinates are
  our own placement (sources on the two outer columns, holes on an interior
  lattice), not a reproduction of any real warehouse.
"""

from __future__ import annotations

from pathlib import Path

from .domain import WarehouseConfig, save_config, validate_config

LARGE_P = (0.367, 0.267, 0.2, 0.133, 0.033)


def desk_config() -> WarehouseConfig:
    return WarehouseConfig(
        h=10,
        w=10,
        sources=((2, 1), (7, 1), (4, 10), (9, 10)),
        holes=((3, 4), (3, 7), (5, 3), (5, 8), (6, 3), (6, 8), (8, 4), (8, 7)),
        n_r=15,
        n_d=3,
        p=(0.5, 0.3, 0.2),
        T=300,
        name="desk",
    )


def tiny_config() -> WarehouseConfig:
    return WarehouseConfig(
        h=6,
        w=6,
        sources=((1, 1), (6, 6)),
        holes=((2, 2), (2, 5), (5, 2), (5, 5)),
        n_r=6,
        n_d=2,
        p=(0.8, 0.2),
        T=200,
        name="tiny",
    )


def large_config() -> WarehouseConfig:
    source_rows = (3, 6, 9, 12, 15, 18)
    sources = tuple((r, 1) for r in source_rows) + tuple((r, 20) for r in source_rows)
    holes = tuple((r, c) for r in (5, 8, 11, 14, 17) for c in (6, 9, 12, 15))
    return WarehouseConfig(
        h=20, w=20, sources=sources, holes=holes, n_r=60, n_d=5, p=LARGE_P, T=1000, name="large"
    )


SHIPPED = {"desk": desk_config, "tiny": tiny_config, "large": large_config}


def shipped_config(name: str) -> WarehouseConfig:
    try:
        return SHIPPED[name]()
    except KeyError:
        raise ValueError(f"unknown config {name!r}; choose from {sorted(SHIPPED)}") from None


def write_shipped(out_dir: str | Path, names=None) -> list[Path]:
    """Write the named shipped configs (all by default) as ``<name>.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in names or sorted(SHIPPED):
        cfg = shipped_config(name)
        validate_config(cfg)
        path = out / f"{name}.json"
        save_config(cfg, path)
        paths.append(path)
    return paths
