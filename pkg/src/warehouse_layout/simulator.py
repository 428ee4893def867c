"""Seeded multi-robot sorting simulation.

Robots follow the route table greedily: an empty robot heads for the nearest
source, a loaded robot for the nearest hole assigned its parcel's destination.
Each step robots are processed in ascending id (lower id = higher priority); a
robot moves only if its desired cell is free at that moment, i.e. empty or
already vacated by a robot that moved earlier in the same step and not yet
claimed by anyone else. Blocked robots that form a closed loop, each wanting
the cell of the next, then advance together. Loading and unloading happen when
a robot enters a source or a matching hole.

Every robot owns a Philox stream keyed by ``(robot_id << 64) | seed`` so a
run is a pure function of ``(cfg, layout, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .domain import Layout, WarehouseConfig, cumulative, sample_destination, validate_config
from .routing import RouteTable, build_route_table

SEED_MASK = (1 << 64) - 1


class PlacementError(RuntimeError):
    pass


@dataclass
class RobotState:
    id: int
    pos: tuple[int, int]
    cargo: int | None = None


@dataclass(eq=False)
class SimOutcome:
    reward: int
    heatmap: np.ndarray
    loads: int
    unloads: int
    seed: int

    def manifest(self) -> dict:
        return {"seed": self.seed, "reward": self.reward, "loads": self.loads, "unloads": self.unloads}

    def to_bytes(self) -> bytes:
        head = np.array([self.reward, self.loads, self.unloads, self.seed], dtype=np.uint64)
        return head.tobytes() + np.ascontiguousarray(self.heatmap, dtype=np.int64).tobytes()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SimOutcome) and self.to_bytes() == other.to_bytes()


@lru_cache(maxsize=32)
def route_table_for(cfg: WarehouseConfig) -> RouteTable:
    return build_route_table(cfg)


def robot_rng(seed: int, robot_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(robot_id << 64) | (seed & SEED_MASK)))


def choose_target(robot: RobotState, layout: Layout, table: RouteTable, cfg: WarehouseConfig) -> int | None:
    """Target id (sources first, then holes) for a robot, or None to hold."""
    idx = cfg.cell_index(robot.pos)
    if robot.cargo is None:
        cands = list(range(table.n_s))
    else:
        cands = [table.n_s + i for i, d in enumerate(layout.theta) if d == robot.cargo]
    if not cands:
        return None
    return min(cands, key=lambda t: (int(table.dist[t, idx]), t))


def build_policy(table: RouteTable, layout: Layout, n_d: int) -> list[list[int]]:
    """``policy[state][cell]`` is the next cell, or -1 to hold.

    State 0 is an empty robot, state ``d`` a robot carrying destination ``d``.
    """
    n_cells = table.h * table.w
    policy = []
    groups = [list(range(table.n_s))]
    for d in range(1, n_d + 1):
        groups.append([table.n_s + i for i, t in enumerate(layout.theta) if t == d])
    cells = np.arange(n_cells)
    for targets in groups:
        if not targets:
            policy.append([-1] * n_cells)
            continue
        dist = table.dist[targets]
        # argmin picks the first (lowest target index) among ties
        best = np.asarray(targets)[np.argmin(dist, axis=0)]
        policy.append(table.next_cell[best, cells].tolist())
    return policy


class Simulation:
    """Mutable state of one run; ``step`` advances it by one timestep."""

    def __init__(
        self,
        cfg: WarehouseConfig,
        layout: Layout,
        seed: int,
        fleet: Sequence[RobotState] | None = None,
        table: RouteTable | None = None,
    ) -> None:
        layout.validate(cfg)
        self.cfg = cfg
        self.layout = layout
        self.seed = int(seed)
        self.table = table if table is not None else route_table_for(cfg)
        self.policy = build_policy(self.table, layout, cfg.n_d)
        n_cells = cfg.h * cfg.w

        self.is_source = [False] * n_cells
        for c in cfg.sources:
            self.is_source[cfg.cell_index(c)] = True
        self.hole_dest = [0] * n_cells
        for c, d in zip(cfg.holes, layout.theta):
            self.hole_dest[cfg.cell_index(c)] = d

        if fleet is None:
            fleet = initial_fleet(cfg)
        if [r.id for r in fleet] != list(range(len(fleet))):
            raise ValueError("fleet ids must be 0..n-1 in order")
        self.pos = [cfg.cell_index(r.pos) for r in fleet]
        self.cargo = [r.cargo or 0 for r in fleet]
        self.occ = [-1] * n_cells
        for i, p in enumerate(self.pos):
            if self.occ[p] != -1:
                raise PlacementError(f"robots {self.occ[p]} and {i} share cell {cfg.index_cell(p)}")
            self.occ[p] = i

        self.rngs = [robot_rng(self.seed, i) for i in range(len(fleet))]
        self.cum = cumulative(cfg.p)
        self.heat = [0] * n_cells
        self.loads = 0
        self.unloads = 0
        self.t = 0
        self.last_moves: list[tuple[int, int, int]] = []

    @property
    def n_robots(self) -> int:
        return len(self.pos)

    def fleet(self) -> list[RobotState]:
        return [
            RobotState(i, self.cfg.index_cell(p), c or None)
            for i, (p, c) in enumerate(zip(self.pos, self.cargo))
        ]

    def step(self) -> tuple[int, int]:
        """Advance one timestep; returns (loads, unloads) of this step."""
        pos, cargo, occ, policy = self.pos, self.cargo, self.occ, self.policy
        n = len(pos)
        moved = [False] * n
        moves = []
        blocked = []
        for i in range(n):
            here = pos[i]
            want = policy[cargo[i]][here]
            if want >= 0 and want != here:
                if occ[want] == -1:
                    occ[here] = -1
                    occ[want] = i
                    pos[i] = want
                    moved[i] = True
                    moves.append((i, here, want))
                else:
                    blocked.append(i)
        if len(blocked) >= 4:
            moves.extend(self._rotate_cycles(moved, blocked))

        is_source, hole_dest, heat = self.is_source, self.hole_dest, self.heat
        first = self.t == 0
        loads = unloads = 0
        for i in range(n):
            here = pos[i]
            if moved[i] or first:
                if cargo[i] == 0:
                    if is_source[here]:
                        cargo[i] = sample_destination(self.cfg.p, self.rngs[i], self.cum)
                        loads += 1
                elif hole_dest[here] == cargo[i]:
                    cargo[i] = 0
                    unloads += 1
            heat[here] += 1
        self.t += 1
        self.loads += loads
        self.unloads += unloads
        self.last_moves = moves
        return loads, unloads

    def _rotate_cycles(self, moved: list[bool], blocked: list[int]) -> list[tuple[int, int, int]]:
        """Move closed loops of blocked robots, each wanting the next one's cell.

        Without this a fully occupied loop of the road network never drains.
        Loops have length >= 4 on the one-way grid, so nobody swaps.
        """
        pos, cargo, occ, policy = self.pos, self.cargo, self.occ, self.policy
        nxt: dict[int, int] = {}
        for i in blocked:
            j = occ[policy[cargo[i]][pos[i]]]
            if not moved[j]:
                nxt[i] = j
        state: dict[int, int] = {}  # 1 on current path, 2 done
        cycles = []
        for start in nxt:
            path = []
            i = start
            while i in nxt and i not in state:
                state[i] = 1
                path.append(i)
                i = nxt[i]
            if state.get(i) == 1:
                cycles.append(path[path.index(i):])
            for k in path:
                state[k] = 2
        moves = []
        for cyc in cycles:
            old = [pos[i] for i in cyc]
            for k, i in enumerate(cyc):
                dest = old[(k + 1) % len(cyc)]
                pos[i] = dest
                occ[dest] = i
                moved[i] = True
                moves.append((i, old[k], dest))
        return moves

    def heatmap(self) -> np.ndarray:
        """Occupancy counts shaped ``(h, w)``; array row 0 is map row 1."""
        return np.asarray(self.heat, dtype=np.int64).reshape(self.cfg.h, self.cfg.w)

    def outcome(self) -> SimOutcome:
        return SimOutcome(
            reward=self.loads + self.unloads,
            heatmap=self.heatmap(),
            loads=self.loads,
            unloads=self.unloads,
            seed=self.seed,
        )


def initial_fleet(cfg: WarehouseConfig) -> list[RobotState]:
    blocked = set(cfg.sources) | set(cfg.holes)
    fleet: list[RobotState] = []
    for r in range(1, cfg.h + 1):
        for c in range(1, cfg.w + 1):
            if len(fleet) == cfg.n_r:
                return fleet
            if (r, c) not in blocked:
                fleet.append(RobotState(len(fleet), (r, c)))
    if len(fleet) < cfg.n_r:
        raise PlacementError(f"{cfg.n_r} robots do not fit in {len(fleet)} free cells")
    return fleet


def run(cfg: WarehouseConfig, layout: Layout, seed: int, steps: int | None = None) -> SimOutcome:
    """Simulate ``cfg.T`` steps (or ``steps`` if given) and return the outcome."""
    validate_config(cfg)
    sim = Simulation(cfg, layout, seed)
    for _ in range(cfg.T if steps is None else steps):
        sim.step()
    return sim.outcome()


def evaluate(cfg: WarehouseConfig, layout: Layout, seed: int) -> float:
    return float(run(cfg, layout, seed).reward)
