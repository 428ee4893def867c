"""Experiment orchestration: oracles, statistics, comparisons and file output.

Seeds
-----
Everything is derived from one master seed with ``derive_seed``:

* run ``k`` of a comparison or sweep uses ``derive_seed(master, STREAM_RUNS, k)``
  for every algorithm, so algorithm runs are paired by ``k``;
* the reported reward of a run is the mean over ``EVAL_SEEDS`` fresh
  simulations of its best layout, seeded ``derive_seed(run_seed, STREAM_REPORT, j)``;
* ablation data for seed ``s`` uses ``derive_seed(s, STREAM_DATA, 0, i)`` for
  sample ``i``; model init and training streams use paths ``(1, count)`` and
  ``(2, count)``.

The Random baseline has no "best layout" worth re-evaluating; its reported
reward is the mean fitness of all layouts it simulated.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .domain import Layout, WarehouseConfig, all_layouts, encode_layout, layout_space_size
from .evolution import (
    STREAM_DATA,
    STREAM_REPORT,
    STREAM_RUNS,
    EAParams,
    RunResult,
    derive_seed,
    noble_allocation,
    random_layout,
    run_algorithm,
    simulate_many,
)
from .parallel import map_ordered
from .simulator import SimOutcome, run
from .surrogate import SampleSet, init_model, train_online

log = logging.getLogger(__name__)

ORACLE_LIMIT = 10**5
EVAL_SEEDS = 5
BETA_TOL = 1e-12
BETA_MAX_ITER = 10_000
REFERENCE_ALGO = "tlea"
ALLOCATION_FRACTIONS = (0.25, 0.5, 0.75, 1.0)


class SpaceTooLarge(ValueError):
    pass


class DegenerateSample(ValueError):
    pass


# -- brute force -----------------------------------------------------------------


def _oracle_task(args) -> float:
    cfg, layout, seeds = args
    return float(np.mean([run(cfg, layout, s).reward for s in seeds]))


def brute_force_oracle(
    cfg: WarehouseConfig, seeds: Sequence[int], reverse: bool = False, jobs: int | None = None
) -> list[tuple[Layout, float]]:
    """Simulate every layout with every seed; best mean fitness first.

    Ties keep enumeration order (lexicographic in theta). ``reverse`` walks the
    space backwards, which must not change the ranking.
    """
    size = layout_space_size(cfg.n_h, cfg.n_d)
    if size > ORACLE_LIMIT:
        raise SpaceTooLarge(f"{size} layouts exceed the oracle limit of {ORACLE_LIMIT}")
    if not seeds:
        raise ValueError("the oracle needs at least one seed")
    layouts = all_layouts(cfg.n_h, cfg.n_d)
    order = list(range(len(layouts)))
    if reverse:
        order.reverse()
    means = dict(zip(order, map_ordered(_oracle_task, [(cfg, layouts[i], list(seeds)) for i in order], jobs)))
    ranked = sorted(range(len(layouts)), key=lambda i: (-means[i], i))
    return [(layouts[i], means[i]) for i in ranked]


# -- statistics ------------------------------------------------------------------


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < BETA_TOL:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class WelchResult:
    t: float
    p: float
    df: float


def welch_t(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Welch's unequal-variance t-test, two-sided."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise DegenerateSample(f"need at least 2 samples per group, got {len(a)} and {len(b)}")
    va = a.var(ddof=1) / len(a)
    vb = b.var(ddof=1) / len(b)
    if va + vb == 0.0:
        raise DegenerateSample("both groups have zero variance")
    t = float((a.mean() - b.mean()) / math.sqrt(va + vb))
    df = float((va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1)))
    return WelchResult(t, t_two_sided_p(t, df), df)


@dataclass
class StatRow:
    algorithm: str
    runs: int
    mean: float
    std: float
    t: float | None = None
    p: float | None = None


@dataclass
class StatReport:
    rows: list[StatRow]
    reference: str = REFERENCE_ALGO

    def row(self, algorithm: str) -> StatRow:
        for r in self.rows:
            if r.algorithm == algorithm:
                return r
        raise KeyError(algorithm)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["algorithm", "runs", "mean", "std", f"t_vs_{self.reference}", f"p_vs_{self.reference}"])
        for r in self.rows:
            wr.writerow([
                r.algorithm, r.runs, f"{r.mean:.4f}", f"{r.std:.4f}",
                "" if r.t is None else f"{r.t:.6f}", "" if r.p is None else f"{r.p:.6g}",
            ])
        return buf.getvalue()


def stat_report(rewards: dict[str, Sequence[float]], reference: str = REFERENCE_ALGO) -> StatReport:
    """Mean/std per algorithm; t-tests of ``reference`` against every other one."""
    rows = []
    for algo, vals in rewards.items():
        vals = np.asarray(vals, dtype=float)
        std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        row = StatRow(algo, len(vals), float(vals.mean()), std)
        if reference in rewards and algo != reference:
            try:
                res = welch_t(rewards[reference], vals)
                row.t, row.p = res.t, res.p
            except DegenerateSample as exc:
                log.warning("no t-test for %s: %s", algo, exc)
        rows.append(row)
    return StatReport(rows, reference)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xs, ys = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(xs @ xs) * float(ys @ ys))
    return float(xs @ ys / denom) if denom > 0 else 0.0


# -- running and reporting single runs -------------------------------------------


def run_seeds(master: int, runs: int) -> list[int]:
    return [derive_seed(master, STREAM_RUNS, k) for k in range(runs)]


def evaluation_seeds(run_seed: int, count: int = EVAL_SEEDS) -> list[int]:
    return [derive_seed(run_seed, STREAM_REPORT, j) for j in range(count)]


def evaluate_layout(cfg: WarehouseConfig, layout: Layout, seeds: Sequence[int]) -> list[SimOutcome]:
    return [run(cfg, layout, s) for s in seeds]


def reported_reward(cfg: WarehouseConfig, result: RunResult) -> tuple[float, list[SimOutcome]]:
    """The number a comparison table shows for one run (see module docstring)."""
    outcomes = evaluate_layout(cfg, result.best.layout, evaluation_seeds(result.seed))
    if result.algorithm == "random":
        return float(result.summary), outcomes
    return float(np.mean([o.reward for o in outcomes])), outcomes


@dataclass
class RunSummary:
    algorithm: str
    run: int
    seed: int
    reward: float
    best_layout: str
    best_fitness: float
    final_purity: float
    budget: dict
    curve_csv: str


def _run_task(args) -> RunSummary:
    algo, cfg, params, k, seed = args
    res = run_algorithm(algo, cfg, params, seed)
    reward, _ = reported_reward(cfg, res)
    purity = res.curve[-1].mean_purity if res.curve else 0.0
    log.info("%s run %d: reward %.1f", algo, k, reward)
    return RunSummary(algo, k, seed, reward, str(res.best.layout), float(res.best.sim_fitness),
                      purity, res.budget.to_dict(), res.curve_csv())


@dataclass
class Comparison:
    report: StatReport
    runs: dict[str, list[RunSummary]]

    def rewards(self, algorithm: str) -> list[float]:
        return [r.reward for r in self.runs[algorithm]]


def compare_algorithms(
    cfg: WarehouseConfig,
    algos: Sequence[str],
    runs: int,
    seed: int,
    params: EAParams,
    jobs: int | None = None,
) -> Comparison:
    """Run every algorithm ``runs`` times on paired seeds and t-test against TLEA."""
    if runs < 2:
        raise ValueError("a comparison needs at least 2 runs per algorithm")
    seeds = run_seeds(seed, runs)
    tasks = [(a, cfg, params, k, s) for a in algos for k, s in enumerate(seeds)]
    done = map_ordered(_run_task, tasks, jobs)
    by_algo: dict[str, list[RunSummary]] = {a: [] for a in algos}
    for summary in done:
        by_algo[summary.algorithm].append(summary)
    report = stat_report({a: [r.reward for r in by_algo[a]] for a in algos})
    return Comparison(report, by_algo)


@dataclass
class SweepRow:
    fraction: float
    noble_sims: int
    migrants: int
    mean: float
    std: float
    rewards: list[float]


def sweep_allocation(
    cfg: WarehouseConfig,
    fractions: Sequence[float],
    runs: int,
    seed: int,
    params: EAParams,
    jobs: int | None = None,
) -> list[SweepRow]:
    """TLEA at each noble share of the per-generation simulation budget."""
    rows = []
    seeds = run_seeds(seed, runs)
    for frac in fractions:
        p = noble_allocation(params, frac)
        if p.nC2 == 0:
            log.info("fraction %.2f: no migrants, noble-only evolution", frac)
        done = map_ordered(_run_task, [("tlea", cfg, p, k, s) for k, s in enumerate(seeds)], jobs)
        rewards = [r.reward for r in done]
        std = float(np.std(rewards, ddof=1)) if len(rewards) > 1 else 0.0
        rows.append(SweepRow(frac, p.noble_sims, p.nC2, float(np.mean(rewards)), std, rewards))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["fraction,noble_sims,migrants,mean,std"]
    for r in rows:
        lines.append(f"{r.fraction},{r.noble_sims},{r.migrants},{r.mean:.4f},{r.std:.4f}")
    return "\n".join(lines) + "\n"


# -- heatmap ablation ------------------------------------------------------------


@dataclass
class AblationRow:
    seed: int
    samples: int
    with_heatmap: bool
    mse: float
    pearson: float


def distinct_random_layouts(cfg: WarehouseConfig, count: int, rng: np.random.Generator) -> list[Layout]:
    size = layout_space_size(cfg.n_h, cfg.n_d)
    if count > size:
        raise ValueError(f"{count} distinct layouts requested from a space of {size}")
    seen: set[Layout] = set()
    out: list[Layout] = []
    while len(out) < count:
        l = random_layout(cfg, rng)
        if l not in seen:
            seen.add(l)
            out.append(l)
    return out


def ablation_data(cfg: WarehouseConfig, count: int, seed: int) -> tuple[list[Layout], list[SimOutcome]]:
    rng = np.random.default_rng(derive_seed(seed, STREAM_DATA))
    layouts = distinct_random_layouts(cfg, count, rng)
    seeds = [derive_seed(seed, STREAM_DATA, 0, i) for i in range(count)]
    return layouts, simulate_many(cfg, layouts, seeds)


def ablation_heatmap(
    cfg: WarehouseConfig,
    sample_counts: Sequence[int],
    seeds: Sequence[int],
    held_out: int = 500,
    updates: int = 5000,
    params: EAParams | None = None,
) -> list[AblationRow]:
    """Train with (lambda=1) and without (lambda=0) the heatmap head on the same
    samples; score reward predictions on a disjoint held-out set."""
    params = params or EAParams()
    rows = []
    for seed in seeds:
        n_train = max(sample_counts)
        layouts, outs = ablation_data(cfg, n_train + held_out, seed)
        X = np.stack([encode_layout(l, cfg.n_d) for l in layouts])
        test_x, test_g = X[n_train:], np.array([o.reward for o in outs[n_train:]], dtype=float)
        for count in sample_counts:
            for lam in (1.0, 0.0):
                samples = SampleSet.for_config(cfg)
                for x, o in zip(X[:count], outs[:count]):
                    samples.add(x, o.reward, o.heatmap)
                model = init_model(cfg, seed=derive_seed(seed, STREAM_DATA, 1, count),
                                   lam=lam, heat_scale=params.heat_scale)
                rng = np.random.default_rng(derive_seed(seed, STREAM_DATA, 2, count))
                train_online(model, samples, updates, rng, lr=params.lr, momentum=params.momentum,
                             batch_size=params.batch_size)
                _, g = model.forward(test_x.astype(model.dtype))
                pred = np.asarray(model.denormalize_reward(g), dtype=float)
                rows.append(AblationRow(seed, count, lam > 0, float(np.mean((pred - test_g) ** 2)),
                                        pearson(pred, test_g)))
                log.info("ablation seed %d, %d samples, lambda %.0f: mse %.1f pearson %.4f",
                         seed, count, lam, rows[-1].mse, rows[-1].pearson)
    return rows


def ablation_csv(rows: Sequence[AblationRow]) -> str:
    lines = ["seed,samples,heatmap,mse,pearson"]
    for r in rows:
        lines.append(f"{r.seed},{r.samples},{int(r.with_heatmap)},{r.mse:.4f},{r.pearson:.6f}")
    return "\n".join(lines) + "\n"


# -- artifacts -------------------------------------------------------------------


def heatmap_csv_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".csv")


def emit_heatmap_image(heat: np.ndarray, path: str | Path) -> tuple[Path, Path]:
    """Write ``heat`` as ``<path>.csv`` and a binary graymap ``<path>.pgm``.

    Both are drawn as a map: the first line/row is map row ``h``. The image is
    scaled linearly so the largest count is 255 (all zeros stay black).
    """
    heat = np.asarray(heat)
    if heat.ndim != 2 or (heat < 0).any():
        raise ValueError("heatmap must be a non-negative 2-D grid")
    base = Path(path)
    csv_path, pgm_path = base.with_suffix(".csv"), base.with_suffix(".pgm")
    picture = np.flipud(heat)
    with open(csv_path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(picture.astype(np.int64).tolist())
    top = heat.max()
    if top > 0:
        pixels = np.rint(picture.astype(float) * 255.0 / float(top)).astype(np.uint8)
    else:
        pixels = np.zeros(picture.shape, dtype=np.uint8)
    h, w = heat.shape
    with open(pgm_path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    return csv_path, pgm_path


def read_heatmap_csv(path: str | Path) -> np.ndarray:
    """Inverse of the CSV half of ``emit_heatmap_image`` (array row 0 = map row 1)."""
    with open(path, newline="") as fh:
        rows = [[int(v) for v in line] for line in csv.reader(fh) if line]
    return np.flipud(np.array(rows, dtype=np.int64))


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path} is not a binary graymap")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4], dtype=np.uint8, count=w * h).reshape(h, w)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    algorithm: str
    seed: int
    config: dict
    config_digest: str
    params: dict
    budget: dict = field(default_factory=dict)
    started: str = ""
    finished: str = ""
    artifacts: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def replay(self) -> RunResult:
        cfg = WarehouseConfig.from_dict(self.config)
        return run_algorithm(self.algorithm, cfg, EAParams(**self.params), self.seed)


def write_outcome(out_dir: str | Path, outcome: SimOutcome, extra: dict | None = None) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, pgm_path = emit_heatmap_image(outcome.heatmap, out / "heatmap")
    manifest = dict(outcome.manifest(), **(extra or {}))
    manifest["artifacts"] = {"heatmap_csv": csv_path.name, "heatmap_pgm": pgm_path.name}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def evolve_to_directory(
    cfg: WarehouseConfig, algorithm: str, params: EAParams, seed: int, out_dir: str | Path
) -> tuple[RunResult, RunManifest]:
    """One optimizer run with every artifact written under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    result = run_algorithm(algorithm, cfg, params, seed)
    reward, outcomes = reported_reward(cfg, result)
    finished = _now()

    (out / "curve.csv").write_text(result.curve_csv())
    (out / "layout.txt").write_text(str(result.best.layout) + "\n")
    emit_heatmap_image(outcomes[0].heatmap, out / "heatmap")
    lines = ["eval_seed,reward,loads,unloads"]
    lines += [f"{o.seed},{o.reward},{o.loads},{o.unloads}" for o in outcomes]
    (out / "report.csv").write_text("\n".join(lines) + "\n")

    manifest = RunManifest(
        algorithm=algorithm,
        seed=seed,
        config=cfg.to_dict(),
        config_digest=cfg.digest(),
        params=params.to_dict(),
        budget=result.budget.to_dict(),
        started=started,
        finished=finished,
        artifacts={k: k for k in ("curve.csv", "layout.txt", "heatmap.csv", "heatmap.pgm", "report.csv")},
        results={
            "best_layout": str(result.best.layout),
            "best_fitness": result.best.sim_fitness,
            "reported_reward": reward,
            "final_noble_purity": result.curve[-1].mean_purity if result.curve else None,
            **{k: v for k, v in result.extras.items() if k in ("cycle_k", "simulated_generations")},
        },
    )
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return result, manifest
