"""Genetic operators and the layout optimizers.

Algorithms: ``random`` and ``heuristic`` baselines, ``simu`` (simulation-only
GA), ``simu-ind`` and ``simu-gen`` (single population with individual- or
generation-based surrogate control) and ``tlea`` (noble/civilian two-layer
population with an online-trained surrogate).

Randomness comes from named streams derived from the master seed, so e.g.
``simu`` and ``tlea`` start from the same initial noble population, and every
simulation seed is a function of (master seed, generation, index) only.

Simulated fitness is noisy, and a converged population keeps re-simulating
the same layouts. By default each individual keeps the reward of its own
simulation. With ``pool_repeats`` a layout's fitness is instead the mean of all
its simulations so far, and the reported best is the top pooled mean.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol, Sequence

import numpy as np

from .domain import Layout, WarehouseConfig, encode_layout
from .routing import RouteTable
from .simulator import SimOutcome, route_table_for, run
from .surrogate import SampleSet, SurrogateModel, init_model, train_online

log = logging.getLogger(__name__)

SIMULATED = "simulated"
PREDICTED = "predicted"
UNSET = "unset"

# stream ids for np.random.SeedSequence([seed, stream])
STREAM_INIT = 1
STREAM_NOBLE = 2
STREAM_CIVILIAN = 3
STREAM_TRAIN = 4
STREAM_MODEL = 5
STREAM_SIM = 6
STREAM_ALLOC = 7
STREAM_RUNS = 8
STREAM_REPORT = 9
STREAM_DATA = 10


class UnsetFitness(ValueError):
    pass


class InfeasibleSplit(ValueError):
    pass


@dataclass
class Individual:
    layout: Layout
    fitness: float | None = None
    fitness_kind: str = UNSET
    purity: float = 0.0
    sim_fitness: float | None = None

    def set_simulated(self, value: float) -> None:
        self.fitness = float(value)
        self.sim_fitness = float(value)
        self.fitness_kind = SIMULATED

    def set_predicted(self, value: float) -> None:
        self.fitness = float(value)
        self.fitness_kind = PREDICTED


@dataclass
class LayeredPopulation:
    noble: list[Individual]
    civilian: list[Individual]


@dataclass(frozen=True)
class EAParams:
    nN: int = 100
    nC: int = 5000
    cN: float = 1.0
    cC: float = 1.0
    mN: float = 0.25
    mC: float = 0.25
    nC2: int = 50
    nR: int = 2500
    nU: int = 5000
    m2: int = 2
    generations: int = 60
    sims_per_gen: int = 200
    # simulated share of the bred noble children; None simulates all of them
    noble_sims: int | None = None
    lr: float = 1e-2
    momentum: float = 0.9
    batch_size: int = 32
    lam: float = 1.0
    # heatmap target multiplier after dividing by n_r * T; None means h * w
    heat_scale: float | None = None
    # a layout's simulated fitness is the mean over all of its simulations so far
    pool_repeats: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def full_params(**overrides) -> EAParams:
    """Budget of the 20x20 experiments (60 generations, 200 simulations each)."""
    return replace(EAParams(), **overrides)


def desk_params(**overrides) -> EAParams:
    """Scaled-down budget for the 10x10 desk instance (20 x 50 simulations)."""
    base = EAParams(
        nN=25,
        nC=500,
        nC2=12,
        nR=250,
        nU=200,
        generations=20,
        sims_per_gen=50,
        noble_sims=38,
    )
    return replace(base, **overrides)


def noble_allocation(params: EAParams, fraction: float) -> EAParams:
    """Split ``sims_per_gen`` between noble children and civilian migrants."""
    if not 0.0 < fraction <= 1.0:
        raise InfeasibleSplit(f"noble fraction {fraction} outside (0, 1]")
    total = params.sims_per_gen
    n1 = int(round(fraction * total))
    c2 = total - n1
    bred = 2 * n_pairs(params.nN, params.cN)
    if n1 < 1 or n1 > bred:
        raise InfeasibleSplit(f"{n1} noble simulations but only {bred} noble children per generation")
    if c2 > params.nC * (1 + 2 * params.cC):
        raise InfeasibleSplit(f"{c2} migrants exceed the civilian pool")
    return replace(params, noble_sims=n1, nC2=c2)


# -- operators -------------------------------------------------------------------


def crossover(a: Layout, b: Layout, rng: np.random.Generator, k: int | None = None) -> tuple[Layout, Layout]:
    """Single-point crossover; the cut ``k`` is drawn from 1..n_h-1 unless given."""
    if len(a) != len(b):
        raise ValueError(f"parents differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        return a, b
    if k is None:
        k = int(rng.integers(1, n))
    ta, tb = a.theta, b.theta
    return Layout(ta[:k] + tb[k:]), Layout(tb[:k] + ta[k:])


def mutate(layout: Layout, m2: int, rng: np.random.Generator) -> Layout:
    """Randomly permute the destinations of ``m2`` distinct holes."""
    n = len(layout)
    if not 2 <= m2 <= n:
        raise ValueError(f"m2={m2} outside 2..{n}")
    idx = rng.choice(n, size=m2, replace=False)
    perm = rng.permutation(m2)
    theta = list(layout.theta)
    vals = [theta[i] for i in idx]
    for i, j in zip(idx, perm):
        theta[i] = vals[j]
    return Layout(tuple(theta))


def select_top(pop: Sequence[Individual], k: int) -> list[Individual]:
    if k > len(pop):
        raise ValueError(f"cannot select {k} from {len(pop)}")
    for ind in pop:
        if ind.fitness is None:
            raise UnsetFitness("every individual needs a fitness before selection")
    order = sorted(range(len(pop)), key=lambda i: -pop[i].fitness)
    return [pop[i] for i in order[:k]]


def random_layout(cfg: WarehouseConfig, rng: np.random.Generator) -> Layout:
    return Layout(tuple(int(t) for t in rng.integers(1, cfg.n_d + 1, size=cfg.n_h)))


def heuristic_quotas(p: Sequence[float], n_h: int) -> list[tuple[int, int]]:
    """(destination, hole count) in claiming order: largest share first."""
    order = sorted(range(len(p)), key=lambda d: (-p[d], d))
    quotas = []
    left = n_h
    for pos, d in enumerate(order):
        q = left if pos == len(order) - 1 else min(left, int(round(p[d] * n_h)))
        quotas.append((d + 1, q))
        left -= q
    return quotas


def heuristic_layout(cfg: WarehouseConfig, table: RouteTable | None = None) -> Layout:
    """Destinations claim their share of holes, nearest (mean source distance) first."""
    if table is None:
        table = route_table_for(cfg)
    src = [cfg.cell_index(c) for c in cfg.sources]
    mean_dist = []
    for i in range(cfg.n_h):
        t = table.hole_target(i)
        mean_dist.append(float(np.mean(table.dist[t, src])))
    free = sorted(range(cfg.n_h), key=lambda i: (mean_dist[i], i))
    theta = [0] * cfg.n_h
    for dest, q in heuristic_quotas(cfg.p, cfg.n_h):
        for _ in range(q):
            theta[free.pop(0)] = dest
    return Layout(tuple(theta))


def n_pairs(pop_size: int, rate: float) -> int:
    return min(int(round(rate * pop_size)), pop_size * (pop_size - 1) // 2)


def draw_pairs(n: int, count: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """``count`` distinct unordered index pairs (i != j) from range(n)."""
    if count > n * (n - 1) // 2:
        raise ValueError(f"only {n * (n - 1) // 2} distinct pairs among {n} parents")
    seen: set[tuple[int, int]] = set()
    pairs: list[tuple[int, int]] = []
    while len(pairs) < count:
        need = count - len(pairs)
        a = rng.integers(0, n, size=2 * need + 8)
        b = rng.integers(0, n, size=2 * need + 8)
        for i, j in zip(a.tolist(), b.tolist()):
            if i == j:
                continue
            key = (i, j) if i < j else (j, i)
            if key in seen:
                continue
            seen.add(key)
            pairs.append((i, j))
            if len(pairs) == count:
                break
    return pairs


def breed(
    pop: Sequence[Individual], c_rate: float, m_rate: float, m2: int, rng: np.random.Generator
) -> list[Individual]:
    """Crossover ``c_rate * |pop|`` parent pairs, then mutate ``m_rate`` of the children."""
    children: list[Individual] = []
    for i, j in draw_pairs(len(pop), n_pairs(len(pop), c_rate), rng):
        a, b = pop[i], pop[j]
        ca, cb = crossover(a.layout, b.layout, rng)
        purity = (a.purity + b.purity) / 2.0
        children.append(Individual(ca, purity=purity))
        children.append(Individual(cb, purity=purity))
    n_mut = int(round(m_rate * len(children)))
    if n_mut and len(children[0].layout) >= m2:
        for k in rng.choice(len(children), size=n_mut, replace=False):
            children[k].layout = mutate(children[k].layout, m2, rng)
    return children


# -- evaluation ------------------------------------------------------------------


class Surrogate(Protocol):
    def predict(self, layouts: Sequence[Layout]) -> np.ndarray: ...

    def train(self, samples: SampleSet, n_u: int) -> None: ...


class NetworkSurrogate:
    """The fitness network plus its training stream."""

    def __init__(self, cfg: WarehouseConfig, params: EAParams, seed: int) -> None:
        self.cfg = cfg
        self.params = params
        self.model: SurrogateModel = init_model(
            cfg, seed=_derive(seed, STREAM_MODEL), lam=params.lam, heat_scale=params.heat_scale
        )
        self.rng = _stream(seed, STREAM_TRAIN)

    def predict(self, layouts: Sequence[Layout]) -> np.ndarray:
        return self.model.predict_many(list(layouts), self.cfg.n_d)

    def train(self, samples: SampleSet, n_u: int) -> None:
        train_online(self.model, samples, n_u, self.rng, lr=self.params.lr,
                     momentum=self.params.momentum, batch_size=self.params.batch_size)


class TableSurrogate:
    """Stand-in surrogate answering from a fixed fitness function (for tests)."""

    def __init__(self, fitness: Callable[[Layout], float]) -> None:
        self.fitness = fitness

    def predict(self, layouts: Sequence[Layout]) -> np.ndarray:
        return np.array([self.fitness(l) for l in layouts], dtype=float)

    def train(self, samples: SampleSet, n_u: int) -> None:
        pass


SimFn = Callable[[WarehouseConfig, Layout, int], SimOutcome]


@dataclass
class Budget:
    simulations: int = 0
    init_simulations: int = 0
    predictions: int = 0
    updates: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class Evaluator:
    """Runs simulations with derived seeds, counts them and records samples."""

    def __init__(self, cfg: WarehouseConfig, seed: int, simulate: SimFn | None = None,
                 keep_samples: bool = False, pool_repeats: bool = False) -> None:
        self.cfg = cfg
        self.seed = seed
        self.simulate_fn = simulate or run
        self.budget = Budget()
        self.samples = SampleSet.for_config(cfg) if keep_samples else None
        self.best: Individual | None = None
        self.pool_repeats = pool_repeats
        # layout -> [reward sum, simulation count], only when pooling
        self.history: dict[Layout, list[float]] = {}
        self.purity_of: dict[Layout, float] = {}

    def sim_seed(self, generation: int, index: int) -> int:
        return _derive(self.seed, STREAM_SIM, generation, index)

    def simulate(self, inds: Sequence[Individual], generation: int, initial: bool = False) -> None:
        seeds = [self.sim_seed(generation, k) for k in range(len(inds))]
        outcomes = simulate_many(self.cfg, [ind.layout for ind in inds], seeds, self.simulate_fn)
        for ind, out in zip(inds, outcomes):
            if self.samples is not None:
                self.samples.add(encode_layout(ind.layout, self.cfg.n_d), out.reward, out.heatmap)
            if not self.pool_repeats:
                ind.set_simulated(out.reward)
                if self.best is None or ind.sim_fitness > self.best.sim_fitness:
                    self.best = Individual(ind.layout, ind.sim_fitness, SIMULATED, ind.purity, ind.sim_fitness)
                continue
            acc = self.history.setdefault(ind.layout, [0.0, 0])
            acc[0] += out.reward
            acc[1] += 1
        if self.pool_repeats:
            for ind in inds:
                ind.set_simulated(self._mean(ind.layout))
                self.purity_of[ind.layout] = ind.purity
            self._pooled_best()
        if initial:
            self.budget.init_simulations += len(inds)
        else:
            self.budget.simulations += len(inds)

    def _mean(self, layout: Layout) -> float:
        total, count = self.history[layout]
        return total / count

    def refresh(self, inds: Sequence[Individual]) -> None:
        """Bring simulated individuals up to their layout's current pooled mean."""
        if self.pool_repeats:
            for ind in inds:
                if ind.fitness_kind == SIMULATED and ind.layout in self.history:
                    ind.set_simulated(self._mean(ind.layout))

    def _pooled_best(self) -> None:
        # re-simulation can lower the incumbent, so scan every pooled layout;
        # equal means prefer the better-sampled layout, then the earlier one
        layout = max(self.history, key=lambda l: (self._mean(l), self.history[l][1]))
        mean = self._mean(layout)
        self.best = Individual(layout, mean, SIMULATED, self.purity_of[layout], mean)

    def predict(self, surrogate: Surrogate, inds: Sequence[Individual]) -> None:
        if not inds:
            return
        values = surrogate.predict([ind.layout for ind in inds])
        for ind, v in zip(inds, values):
            ind.set_predicted(v)
        self.budget.predictions += len(inds)

    def train(self, surrogate: Surrogate, n_u: int) -> None:
        surrogate.train(self.samples, n_u)
        self.budget.updates += n_u


def simulate_many(cfg: WarehouseConfig, layouts: Sequence[Layout], seeds: Sequence[int],
                  simulate: SimFn = run, jobs: int | None = None) -> list[SimOutcome]:
    """Independent simulations; ``jobs > 1`` fans out to worker processes."""
    from .parallel import job_count, map_simulations

    jobs = job_count() if jobs is None else jobs
    if jobs > 1 and simulate is run and len(layouts) > 1:
        return map_simulations(cfg, layouts, seeds, jobs)
    return [simulate(cfg, l, s) for l, s in zip(layouts, seeds)]


def derive_seed(seed: int, *words: int) -> int:
    """64-bit seed derived from a master seed and a path of integers."""
    ss = np.random.SeedSequence([seed & ((1 << 64) - 1), *words])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


_derive = derive_seed


def _stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & ((1 << 64) - 1), stream]))


# -- run results -----------------------------------------------------------------


@dataclass
class CurveRow:
    generation: int
    best_fitness: float
    mean_purity: float
    simulations: int


@dataclass
class RunResult:
    algorithm: str
    seed: int
    best: Individual
    curve: list[CurveRow]
    budget: Budget
    params: EAParams | None = None
    # statistic the comparison tables report for baselines without a search
    summary: float | None = None
    extras: dict = field(default_factory=dict)

    def curve_csv(self) -> str:
        lines = ["generation,best_fitness,mean_noble_purity,simulations"]
        for r in self.curve:
            lines.append(f"{r.generation},{r.best_fitness:.6f},{r.mean_purity:.6f},{r.simulations}")
        return "\n".join(lines) + "\n"


def _mean_purity(pop: Sequence[Individual]) -> float:
    return float(np.mean([i.purity for i in pop])) if pop else 0.0


def _row(gen: int, ev: Evaluator, pop: Sequence[Individual]) -> CurveRow:
    return CurveRow(gen, ev.best.sim_fitness, _mean_purity(pop),
                    ev.budget.simulations + ev.budget.init_simulations)


def _initial_nobles(cfg: WarehouseConfig, size: int, seed: int) -> list[Individual]:
    rng = _stream(seed, STREAM_INIT)
    return [Individual(random_layout(cfg, rng), purity=1.0) for _ in range(size)]


# -- algorithms ------------------------------------------------------------------


def run_random(cfg: WarehouseConfig, params: EAParams, seed: int, simulate: SimFn | None = None) -> RunResult:
    """Simulate ``generations * sims_per_gen`` uniformly random layouts once each.

    ``summary`` is their mean fitness (what a random layout achieves on
    average); the curve tracks the best seen so far.
    """
    ev = Evaluator(cfg, seed, simulate, pool_repeats=params.pool_repeats)
    rng = _stream(seed, STREAM_CIVILIAN)
    curve = []
    total = 0.0
    count = 0
    for g in range(1, params.generations + 1):
        batch = [Individual(random_layout(cfg, rng)) for _ in range(params.sims_per_gen)]
        ev.simulate(batch, g)
        total += sum(i.sim_fitness for i in batch)
        count += len(batch)
        curve.append(_row(g, ev, batch))
    return RunResult("random", seed, ev.best, curve, ev.budget, params, summary=total / max(count, 1))


def run_heuristic(cfg: WarehouseConfig, params: EAParams, seed: int, simulate: SimFn | None = None) -> RunResult:
    ev = Evaluator(cfg, seed, simulate, pool_repeats=params.pool_repeats)
    ind = Individual(heuristic_layout(cfg), purity=1.0)
    ev.simulate([ind], 0, initial=True)
    return RunResult("heuristic", seed, ev.best, [_row(0, ev, [ind])], ev.budget, params)


def run_simu(cfg: WarehouseConfig, params: EAParams, seed: int, simulate: SimFn | None = None) -> RunResult:
    """Simulation-only GA: crossover, mutation, simulate children, keep the best ``nN``."""
    ev = Evaluator(cfg, seed, simulate, pool_repeats=params.pool_repeats)
    rng = _stream(seed, STREAM_NOBLE)
    pop = _initial_nobles(cfg, params.nN, seed)
    ev.simulate(pop, 0, initial=True)
    pop = select_top(pop, len(pop))
    curve = [_row(0, ev, pop)]
    for g in range(1, params.generations + 1):
        children = breed(pop, params.cN, params.mN, params.m2, rng)
        ev.simulate(children, g)
        ev.refresh(pop)
        pop = select_top(pop + children, params.nN)
        curve.append(_row(g, ev, pop))
    return RunResult("simu", seed, ev.best, curve, ev.budget, params)


def _single_population_init(cfg, params, seed, ev, surrogate):
    rng = _stream(seed, STREAM_CIVILIAN)
    pop = [Individual(random_layout(cfg, rng), purity=0.0) for _ in range(params.nC)]
    n_sim = min(params.sims_per_gen, len(pop))
    ev.simulate(pop[:n_sim], 0, initial=True)
    ev.train(surrogate, params.nU)
    ev.predict(surrogate, pop[n_sim:])
    return rng, select_top(pop, len(pop))


def _simulate_top_predicted(ev: Evaluator, children: list[Individual], count: int, gen: int) -> None:
    order = sorted(range(len(children)), key=lambda i: -children[i].fitness)
    ev.simulate([children[i] for i in order[:count]], gen)


def run_simu_ind(cfg: WarehouseConfig, params: EAParams, seed: int, simulate: SimFn | None = None,
                 surrogate: Surrogate | None = None) -> RunResult:
    """Single large population ranked by the surrogate; the top ``sims_per_gen``
    children of each generation are re-evaluated by simulation."""
    ev = Evaluator(cfg, seed, simulate, keep_samples=True, pool_repeats=params.pool_repeats)
    surrogate = surrogate or NetworkSurrogate(cfg, params, seed)
    rng, pop = _single_population_init(cfg, params, seed, ev, surrogate)
    curve = [_row(0, ev, pop)]
    for g in range(1, params.generations + 1):
        children = breed(pop, params.cC, params.mC, params.m2, rng)
        ev.predict(surrogate, children)
        _simulate_top_predicted(ev, children, params.sims_per_gen, g)
        ev.refresh(pop)
        pop = select_top(pop + children, params.nC)
        ev.train(surrogate, params.nU)
        curve.append(_row(g, ev, pop))
    return RunResult("simu-ind", seed, ev.best, curve, ev.budget, params)


def simu_gen_cycle(params: EAParams) -> int:
    """Surrogate-only generations that follow each simulated generation."""
    preds_per_sim = 2 * n_pairs(params.nC, params.cC) / params.sims_per_gen
    pop_ratio = params.nC / params.nN
    return max(1, int(round(preds_per_sim / pop_ratio)))


def run_simu_gen(cfg: WarehouseConfig, params: EAParams, seed: int, simulate: SimFn | None = None,
                 surrogate: Surrogate | None = None) -> RunResult:
    """Generation-based control: one generation spends the simulations of a
    whole cycle, the next ``k`` generations rely on the surrogate alone."""
    ev = Evaluator(cfg, seed, simulate, keep_samples=True, pool_repeats=params.pool_repeats)
    surrogate = surrogate or NetworkSurrogate(cfg, params, seed)
    k = simu_gen_cycle(params)
    log.info("simu-gen cycle: 1 simulated + %d surrogate generations", k)
    rng, pop = _single_population_init(cfg, params, seed, ev, surrogate)
    curve = [_row(0, ev, pop)]
    simulated_gens = 0
    for g in range(1, params.generations + 1):
        children = breed(pop, params.cC, params.mC, params.m2, rng)
        ev.predict(surrogate, children)
        pos = (g - 1) % (k + 1)
        if pos == 0:
            span = min(k + 1, params.generations - g + 1)
            _simulate_top_predicted(ev, children, span * params.sims_per_gen, g)
            simulated_gens += 1
        ev.refresh(pop)
        pop = select_top(pop + children, params.nC)
        ev.train(surrogate, params.nU)
        curve.append(_row(g, ev, pop))
    return RunResult("simu-gen", seed, ev.best, curve, ev.budget, params,
                     extras={"cycle_k": k, "simulated_generations": simulated_gens})


def run_tlea(cfg: WarehouseConfig, params: EAParams, seed: int, simulate: SimFn | None = None,
             surrogate: Surrogate | None = None) -> RunResult:
    """Two-layer evolution: a small simulated noble layer fed by a large civilian
    layer that is ranked by the surrogate."""
    ev = Evaluator(cfg, seed, simulate, keep_samples=True, pool_repeats=params.pool_repeats)
    surrogate = surrogate or NetworkSurrogate(cfg, params, seed)
    noble_rng = _stream(seed, STREAM_NOBLE)
    civ_rng = _stream(seed, STREAM_CIVILIAN)
    alloc_rng = _stream(seed, STREAM_ALLOC)

    nobles = _initial_nobles(cfg, params.nN, seed)
    ev.simulate(nobles, 0, initial=True)
    nobles = select_top(nobles, len(nobles))
    civilians = [Individual(random_layout(cfg, civ_rng), purity=0.0) for _ in range(params.nC)]
    pop = LayeredPopulation(nobles, civilians)

    curve = [_row(0, ev, pop.noble)]
    purity_trace = [_mean_purity(pop.noble)]
    for g in range(1, params.generations + 1):
        n1 = breed(pop.noble, params.cN, params.mN, params.m2, noble_rng)
        if params.noble_sims is not None and params.noble_sims < len(n1):
            keep = sorted(alloc_rng.choice(len(n1), size=params.noble_sims, replace=False).tolist())
            n1 = [n1[i] for i in keep]
        c1 = breed(pop.civilian, params.cC, params.mC, params.m2, civ_rng)

        pool = pop.civilian + c1
        ev.predict(surrogate, pool)
        ranked = select_top(pool, len(pool))
        n_up = min(params.nC2, len(ranked))
        c2 = ranked[:n_up]

        ev.simulate(n1 + c2, g)
        ev.refresh(pop.noble)
        merged = select_top(pop.noble + n1 + c2, len(pop.noble) + len(n1) + len(c2))
        n2, n3 = merged[: params.nN], merged[params.nN :]

        n_c3 = params.nC - len(n3) - params.nR
        if n_c3 < 0:
            raise InfeasibleSplit(f"|N3|={len(n3)} plus |R|={params.nR} exceed |C|={params.nC}")
        c3 = ranked[n_up : n_up + n_c3]
        r = [Individual(random_layout(cfg, civ_rng), purity=0.0) for _ in range(params.nR)]

        pop = LayeredPopulation(n2, n3 + c3 + r)
        ev.train(surrogate, params.nU)
        curve.append(_row(g, ev, pop.noble))
        purity_trace.append(_mean_purity(pop.noble))

    best = pop.noble[0]
    best = Individual(best.layout, best.sim_fitness, SIMULATED, best.purity, best.sim_fitness)
    return RunResult("tlea", seed, best, curve, ev.budget, params,
                     extras={"purity": purity_trace, "final_population": pop})


ALGORITHMS: dict[str, Callable[..., RunResult]] = {
    "random": run_random,
    "heuristic": run_heuristic,
    "simu": run_simu,
    "simu-ind": run_simu_ind,
    "simu-gen": run_simu_gen,
    "tlea": run_tlea,
}


def run_algorithm(name: str, cfg: WarehouseConfig, params: EAParams, seed: int, **kw) -> RunResult:
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}") from None
    return fn(cfg, params, seed, **kw)
