"""One-way road network and the greedy look-up table robots route with.

Horizontal movement is fixed by row parity (odd rows go right, even rows go
left) and vertical movement by column parity (odd columns go down, even
columns go up), so no two adjacent cells are connected in both directions.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .domain import WarehouseConfig


class Direction(IntEnum):
    # value order doubles as the shortest-path tie-break order
    RIGHT = 0
    UP = 1
    LEFT = 2
    DOWN = 3

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]


_DELTAS = {
    Direction.RIGHT: (0, 1),
    Direction.UP: (1, 0),
    Direction.LEFT: (0, -1),
    Direction.DOWN: (-1, 0),
}

NO_STEP = -1
UNREACHABLE = -1


class UnreachableTarget(RuntimeError):
    pass


def legal_dirs(row: int, col: int, h: int, w: int) -> set[Direction]:
    if not (1 <= row <= h and 1 <= col <= w):
        raise ValueError(f"cell ({row}, {col}) outside {h}x{w} grid")
    dirs = {Direction.RIGHT if row % 2 == 1 else Direction.LEFT}
    dirs.add(Direction.DOWN if col % 2 == 1 else Direction.UP)
    out = set()
    for d in dirs:
        dr, dc = d.delta
        if 1 <= row + dr <= h and 1 <= col + dc <= w:
            out.add(d)
    return out


def neighbor(row: int, col: int, d: Direction) -> tuple[int, int]:
    dr, dc = d.delta
    return row + dr, col + dc


def build_graph(cfg: WarehouseConfig) -> dict[int, list[int]]:
    """Adjacency lists over flat cell indices (see ``WarehouseConfig.cell_index``)."""
    return grid_graph(cfg.h, cfg.w)


def grid_graph(h: int, w: int) -> dict[int, list[int]]:
    adj: dict[int, list[int]] = {}
    for r in range(1, h + 1):
        for c in range(1, w + 1):
            u = (r - 1) * w + (c - 1)
            adj[u] = []
            for d in sorted(legal_dirs(r, c, h, w)):
                nr, nc = neighbor(r, c, d)
                adj[u].append((nr - 1) * w + (nc - 1))
    return adj


def _reach(adj: dict[int, list[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def is_strongly_connected(adj: dict[int, list[int]]) -> bool:
    if not adj:
        return True
    rev: dict[int, list[int]] = {u: [] for u in adj}
    for u, vs in adj.items():
        for v in vs:
            rev[v].append(u)
    start = next(iter(adj))
    return len(_reach(adj, start)) == len(adj) and len(_reach(rev, start)) == len(adj)


@dataclass(frozen=True)
class RouteTable:
    """First step and hop distance from every cell to every target.

    Targets are numbered sources first, then holes. Arrays are indexed
    ``[target, cell]`` with flat cell indices; ``first_step`` holds a
    ``Direction`` value or ``NO_STEP``, ``next_cell`` the successor cell (the
    cell itself at the target), and ``dist`` the hop count.
    """

    h: int
    w: int
    n_s: int
    n_h: int
    first_step: np.ndarray
    next_cell: np.ndarray
    dist: np.ndarray

    @property
    def n_targets(self) -> int:
        return self.n_s + self.n_h

    @property
    def record_count(self) -> int:
        return int(self.dist.size)

    def source_target(self, i: int) -> int:
        return i

    def hole_target(self, i: int) -> int:
        return self.n_s + i

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["row", "col", "target", "direction", "distance"])
            for t in range(self.n_targets):
                for idx in range(self.h * self.w):
                    step = int(self.first_step[t, idx])
                    wr.writerow([
                        idx // self.w + 1,
                        idx % self.w + 1,
                        t,
                        Direction(step).name if step != NO_STEP else "",
                        int(self.dist[t, idx]),
                    ])


def build_route_table(cfg: WarehouseConfig) -> RouteTable:
    h, w = cfg.h, cfg.w
    n = h * w
    adj = build_graph(cfg)
    if not is_strongly_connected(adj):
        raise UnreachableTarget(f"one-way graph of {h}x{w} grid is not strongly connected")

    rev: list[list[int]] = [[] for _ in range(n)]
    for u, vs in adj.items():
        for v in vs:
            rev[v].append(u)

    # per-cell moves in tie-break order
    moves: list[list[tuple[int, int]]] = []
    for idx in range(n):
        r, c = idx // w + 1, idx % w + 1
        opts = []
        for d in sorted(legal_dirs(r, c, h, w)):
            nr, nc = neighbor(r, c, d)
            opts.append((int(d), (nr - 1) * w + (nc - 1)))
        moves.append(opts)

    targets = [cfg.cell_index(c) for c in cfg.sources] + [cfg.cell_index(c) for c in cfg.holes]
    k = len(targets)
    dist = np.full((k, n), UNREACHABLE, dtype=np.int32)
    first = np.full((k, n), NO_STEP, dtype=np.int8)
    nxt = np.tile(np.arange(n, dtype=np.int32), (k, 1))

    for t, goal in enumerate(targets):
        d = dist[t]
        d[goal] = 0
        queue = deque([goal])
        while queue:
            v = queue.popleft()
            for u in rev[v]:
                if d[u] == UNREACHABLE:
                    d[u] = d[v] + 1
                    queue.append(u)
        if (d == UNREACHABLE).any():
            bad = int(np.argmax(d == UNREACHABLE))
            raise UnreachableTarget(f"cell {cfg.index_cell(bad)} cannot reach target {t}")
        for idx in range(n):
            if idx == goal:
                continue
            want = d[idx] - 1
            for code, v in moves[idx]:
                if d[v] == want:
                    first[t, idx] = code
                    nxt[t, idx] = v
                    break

    return RouteTable(h=h, w=w, n_s=cfg.n_s, n_h=cfg.n_h, first_step=first, next_cell=nxt, dist=dist)
