"""Core value types shared by the simulator, the surrogate and the optimizers.

Cells are ``(row, col)`` pairs, 1-indexed, with row 1 at the bottom of the map.
A layout assigns a destination id in ``1..n_d`` to every hole, in the order the
holes are listed in the config.
"""

from __future__ import annotations

import bisect
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

Cell = tuple[int, int]

DISTRIBUTION_TOL = 1e-9


class ConfigError(ValueError):
    """Raised when a warehouse config violates one of its invariants."""


class OutOfBoundsCell(ConfigError):
    pass


class DuplicateCell(ConfigError):
    pass


class BadDistribution(ConfigError):
    pass


class NonPositiveCount(ConfigError):
    pass


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class WarehouseConfig:
    h: int
    w: int
    sources: tuple[Cell, ...]
    holes: tuple[Cell, ...]
    n_r: int
    n_d: int
    p: tuple[float, ...]
    T: int
    name: str = ""

    def __post_init__(self) -> None:
        # normalise lists coming from JSON into hashable tuples
        object.__setattr__(self, "sources", tuple(tuple(c) for c in self.sources))
        object.__setattr__(self, "holes", tuple(tuple(c) for c in self.holes))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))

    @property
    def n_s(self) -> int:
        return len(self.sources)

    @property
    def n_h(self) -> int:
        return len(self.holes)

    def cell_index(self, cell: Cell) -> int:
        """Row-major flat index of a cell (row 1, col 1 -> 0)."""
        r, c = cell
        return (r - 1) * self.w + (c - 1)

    def index_cell(self, idx: int) -> Cell:
        return (idx // self.w + 1, idx % self.w + 1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "h": self.h,
            "w": self.w,
            "n_r": self.n_r,
            "n_d": self.n_d,
            "T": self.T,
            "p": list(self.p),
            "sources": [list(c) for c in self.sources],
            "holes": [list(c) for c in self.holes],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "WarehouseConfig":
        cfg = cls(
            h=int(d["h"]),
            w=int(d["w"]),
            sources=tuple(tuple(c) for c in d["sources"]),
            holes=tuple(tuple(c) for c in d["holes"]),
            n_r=int(d["n_r"]),
            n_d=int(d["n_d"]),
            p=tuple(d["p"]),
            T=int(d["T"]),
            name=str(d.get("name", "")),
        )
        for key in ("n_s", "n_h"):
            if key in d and int(d[key]) != getattr(cfg, key):
                raise ConfigError(f"{key}={d[key]} disagrees with the coordinate list length")
        return cfg

    def digest(self) -> str:
        import hashlib

        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def validate_config(cfg: WarehouseConfig) -> None:
    for name in ("h", "w", "n_r", "n_d"):
        if getattr(cfg, name) < 1:
            raise NonPositiveCount(f"{name} must be >= 1, got {getattr(cfg, name)}")
    if cfg.T < 1:
        raise NonPositiveCount(f"T must be >= 1, got {cfg.T}")
    if cfg.n_s < 1:
        raise NonPositiveCount("at least one source is required")
    if cfg.n_h < 1:
        raise NonPositiveCount("at least one hole is required")

    seen: set[Cell] = set()
    for kind, cells in (("source", cfg.sources), ("hole", cfg.holes)):
        for cell in cells:
            if len(cell) != 2:
                raise OutOfBoundsCell(f"{kind} {cell} is not a (row, col) pair")
            r, c = cell
            if not (1 <= r <= cfg.h and 1 <= c <= cfg.w):
                raise OutOfBoundsCell(f"{kind} {cell} outside 1..{cfg.h} x 1..{cfg.w}")
            if cell in seen:
                raise DuplicateCell(f"{kind} {cell} listed twice")
            seen.add(cell)

    if len(cfg.p) != cfg.n_d:
        raise BadDistribution(f"p has {len(cfg.p)} entries, expected n_d={cfg.n_d}")
    if any(x < 0 or not np.isfinite(x) for x in cfg.p):
        raise BadDistribution(f"negative or non-finite proportion in {cfg.p}")
    if abs(sum(cfg.p) - 1.0) > DISTRIBUTION_TOL:
        raise BadDistribution(f"proportions sum to {sum(cfg.p)!r}, not 1")


def load_config(path: str | Path) -> WarehouseConfig:
    with open(path) as fh:
        cfg = WarehouseConfig.from_dict(json.load(fh))
    validate_config(cfg)
    return cfg


def save_config(cfg: WarehouseConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class Layout:
    """Destination id (1-based) for each hole."""

    theta: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", tuple(int(t) for t in self.theta))

    def __len__(self) -> int:
        return len(self.theta)

    def __str__(self) -> str:
        return ",".join(str(t) for t in self.theta)

    @classmethod
    def parse(cls, text: str) -> "Layout":
        parts = [p for p in text.replace(",", " ").split() if p]
        return cls(tuple(int(p) for p in parts))

    def validate(self, cfg: WarehouseConfig) -> None:
        if len(self.theta) != cfg.n_h:
            raise LayoutError(f"layout has {len(self.theta)} genes, config has {cfg.n_h} holes")
        bad = [t for t in self.theta if not 1 <= t <= cfg.n_d]
        if bad:
            raise LayoutError(f"destination ids {bad} outside 1..{cfg.n_d}")


def cumulative(p: Sequence[float]) -> list[float]:
    return list(itertools.accumulate(p))


def sample_destination(p: Sequence[float], rng: np.random.Generator, cum: Sequence[float] | None = None) -> int:
    """Draw a destination id with probability ``p[d-1]`` using exactly one uniform.

    ``cum`` may carry the precomputed cumulative sums of ``p``.
    """
    u = rng.random()
    if cum is None:
        cum = cumulative(p)
    # u * total guards against sums a hair below 1
    d = bisect.bisect_right(cum, u * cum[-1])
    # zero-probability tail entries must never be picked
    while d >= len(cum) or p[d] == 0.0:
        d -= 1
    return d + 1


def encode_layout(layout: Layout, n_d: int) -> np.ndarray:
    theta = np.asarray(layout.theta, dtype=np.int64)
    x = np.zeros(len(theta) * n_d)
    x[np.arange(len(theta)) * n_d + theta - 1] = 1.0
    return x


def encode_many(layouts: Sequence[Layout], n_d: int) -> np.ndarray:
    theta = np.array([l.theta for l in layouts], dtype=np.int64)
    n, n_h = theta.shape
    x = np.zeros((n, n_h * n_d))
    rows = np.repeat(np.arange(n), n_h)
    cols = (np.tile(np.arange(n_h) * n_d, n) + theta.ravel() - 1)
    x[rows, cols] = 1.0
    return x


def layout_space_size(n_h: int, n_d: int) -> int:
    if n_h < 1 or n_d < 1:
        raise ValueError("n_h and n_d must be >= 1")
    return n_d**n_h


def all_layouts(n_h: int, n_d: int) -> list[Layout]:
    return [Layout(t) for t in itertools.product(range(1, n_d + 1), repeat=n_h)]
