"""Graded time grids on [0, T] and reproducible Brownian path ensembles.

Paths are drawn from a counter-based generator (Philox) whose key is the pair
``(seed, path index)``, so path ``p`` is the same array no matter which block
or worker produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Ascending nodes ``t_0 = 0 < ... < t_N = T``, graded toward ``T``.

    Only absolute times are stored; ``T - t`` is formed on demand.
    """

    T: float
    nodes: np.ndarray
    q: float = 1.0

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def left(self) -> np.ndarray:
        """Left endpoints ``t_0 .. t_{N-1}``; all strictly below ``T``."""
        return self.nodes[:-1]

    def time_to_go(self) -> np.ndarray:
        """``T - t_i`` on the left endpoints."""
        return self.T - self.nodes[:-1]

    def index_at_or_before(self, t: float) -> int:
        """Largest node index ``i`` with ``t_i <= t``."""
        return int(np.searchsorted(self.nodes, t, side="right") - 1)

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.nodes - t)))

    def coarsened(self, factor: int) -> "TimeGrid":
        """The nested grid with ``N / factor`` cells (same ``T`` and ``q``)."""
        if factor < 1 or self.N % factor:
            raise ValueError(f"cannot coarsen N={self.N} by {factor}")
        coarse = build_grid(self.T, self.N // factor, self.q)
        if not np.array_equal(coarse.nodes, self.nodes[::factor]):
            raise ValueError("grids are not nested at this factor")
        return coarse

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return self.T == other.T and self.q == other.q and np.array_equal(self.nodes, other.nodes)

    def __hash__(self) -> int:
        return hash((self.T, self.q, self.N))


def build_grid(T: float, N: int, q: float = 2.0) -> TimeGrid:
    """Power-graded grid ``t_i = T (1 - (1 - i/N)^q)``; ``q = 1`` is uniform."""
    if not T > 0:
        raise ValueError(f"horizon must be positive, got T={T}")
    if int(N) != N or N < 2:
        raise ValueError(f"need at least 2 cells, got N={N}")
    if not q >= 1:
        raise ValueError(f"grading exponent must be >= 1, got q={q}")
    N = int(N)
    i = np.arange(N + 1)
    nodes = T * (1.0 - (1.0 - i / N) ** q)
    nodes[0] = 0.0
    nodes[-1] = T
    if not np.all(np.diff(nodes) > 0):
        raise ValueError("grid nodes are not strictly increasing (N too large for q)")
    return TimeGrid(T=float(T), nodes=nodes, q=float(q))


def _path_bitgen(seed: int, path: int) -> np.random.Philox:
    return np.random.Philox(key=(int(seed) & SEED_MASK) | (int(path) << 64))


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Discrete Brownian paths on a grid.

    ``values[p, i]`` is ``W`` at node ``t_i`` and ``increments[p, i]`` the step
    over cell ``i``.  ``first_path`` is the global index of row 0, so a bundle
    can be one block of a larger ensemble.

    ``subcell`` optionally holds one extra standard normal per cell, independent
    of the increments.  It carries the part of the path inside a cell that the
    node values do not see, and is used where a singular kernel has to be
    integrated exactly against ``dW`` over the most recent cell.
    """

    grid: TimeGrid
    increments: np.ndarray
    values: np.ndarray
    seed: int | None = None
    first_path: int = 0
    subcell: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]

    @property
    def path_ids(self) -> np.ndarray:
        return np.arange(self.first_path, self.first_path + self.n_paths)

    @classmethod
    def from_increments(cls, grid: TimeGrid, increments: np.ndarray, subcell: np.ndarray | None = None) -> "PathBundle":
        inc = np.atleast_2d(np.asarray(increments, dtype=np.float64))
        if inc.shape[1] != grid.N:
            raise ValueError(f"expected {grid.N} increments per path, got {inc.shape[1]}")
        values = np.zeros((inc.shape[0], grid.N + 1))
        np.cumsum(inc, axis=1, out=values[:, 1:])
        sub = np.zeros_like(inc) if subcell is None else np.atleast_2d(np.asarray(subcell, dtype=np.float64))
        return cls(grid=grid, increments=np.diff(values, axis=1), values=values, subcell=sub)

    def subcell_normals(self) -> np.ndarray:
        if self.subcell is not None:
            return self.subcell
        if self.seed is None:
            raise ValueError("bundle has neither stored subcell normals nor a seed")
        out = np.empty((self.n_paths, self.grid.N))
        for row, p in enumerate(self.path_ids):
            gen = np.random.Generator(_path_bitgen(self.seed, p).jumped())
            out[row] = gen.standard_normal(self.grid.N)
        object.__setattr__(self, "subcell", out)
        return out

    def coarsened(self, factor: int) -> "PathBundle":
        """Same Brownian paths observed on the nested coarser grid.

        Subcell normals are not carried over; they belong to the fine cells.
        """
        grid = self.grid.coarsened(factor)
        values = np.ascontiguousarray(self.values[:, ::factor])
        return PathBundle(grid=grid, increments=np.diff(values, axis=1), values=values,
                          seed=None, first_path=self.first_path,
                          subcell=np.zeros((self.n_paths, grid.N)))

    def with_future_replaced(self, index: int, increments: np.ndarray, subcell: np.ndarray | None = None) -> "PathBundle":
        """Copy with increments (and subcell normals) at cells ``>= index`` replaced."""
        values = self.values.copy()
        tail = np.broadcast_to(np.asarray(increments, dtype=np.float64), (self.n_paths, self.grid.N - index))
        values[:, index + 1:] = values[:, index:index + 1] + np.cumsum(tail, axis=1)
        sub = self.subcell_normals().copy()
        if subcell is not None:
            sub[:, index:] = subcell
        return PathBundle(grid=self.grid, increments=np.diff(values, axis=1), values=values,
                          seed=None, first_path=self.first_path, subcell=sub)


def generate_paths(grid: TimeGrid, n_paths: int, seed: int, first_path: int = 0) -> PathBundle:
    """Paths ``first_path .. first_path + n_paths - 1`` of the ensemble keyed by ``seed``."""
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    N = grid.N
    scale = np.sqrt(grid.dt)
    values = np.zeros((n_paths, N + 1))
    for row in range(n_paths):
        gen = np.random.Generator(_path_bitgen(seed, first_path + row))
        np.cumsum(gen.standard_normal(N) * scale, out=values[row, 1:])
    # increments are defined as node differences so W[i+1] - W[i] == dW[i] holds exactly
    return PathBundle(grid=grid, increments=np.diff(values, axis=1), values=values,
                      seed=int(seed), first_path=int(first_path))


def path_blocks(n_paths: int, block_size: int) -> Iterator[tuple[int, int]]:
    """``(first_path, count)`` pairs covering ``range(n_paths)`` in order."""
    if block_size < 1:
        raise ValueError("block_size must be positive")
    for start in range(0, n_paths, block_size):
        yield start, min(block_size, n_paths - start)
