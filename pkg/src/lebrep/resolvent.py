"""Neumann-series apparatus for ``beta_t = f(t) + int K(t,s) beta_s ds``.

``K(t,s) = -(T-t)^{-1} 1{s<=t}``.  ``K^0 = K`` and ``K^i`` is the kernel of the
(i+1)-fold composition, which has i+1 negative factors.  Closed form, for
``s <= t``::

    K^i(t,s) = -(T-t)^{-1} (1/i!) log((T-t)/(T-s))^i

and the series sums to ``-(T-s)^{-1} 1{s<=t}``, so the Neumann solution is
``M_t/(T-t) - int_0^t M_s (T-s)^{-2} ds``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import factorial
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid_paths import TimeGrid


@dataclass(frozen=True)
class ResolventTable:
    T: float
    nodes: np.ndarray          # sub-grid times, all < T
    order: int                 # truncation order m
    closed: np.ndarray         # (m+1, n, n): K^i(t_a, t_b)
    numeric: np.ndarray        # (m+1, n, n): K^i by quadrature composition
    partial_sums: np.ndarray   # (n, n): S_m from the closed form

    @property
    def limit(self) -> np.ndarray:
        """``sum_i K^i = -(T-s)^{-1} 1{s<=t}``."""
        t, s = self.nodes[:, None], self.nodes[None, :]
        return np.where(s <= t, -1.0 / (self.T - s), 0.0)

    def remainder_bound(self) -> np.ndarray:
        """Taylor bound ``(T-t)^{-1} L^{m+1} / (m+1)!`` with ``L = log((T-s)/(T-t))``."""
        t, s = self.nodes[:, None], self.nodes[None, :]
        L = np.where(s <= t, np.log((self.T - s) / (self.T - t)), 0.0)
        return np.where(s <= t, L ** (self.order + 1) / factorial(self.order + 1) / (self.T - t), 0.0)

    def max_sum_error(self) -> float:
        return float(np.max(np.abs(self.partial_sums - self.limit)))

    def max_composition_error(self, up_to: int | None = None) -> float:
        k = self.order if up_to is None else up_to
        return float(np.max(np.abs(self.numeric[:k + 1] - self.closed[:k + 1])))


def kernel_power(T: float, t: np.ndarray, s: np.ndarray, i: int) -> np.ndarray:
    t, s = np.broadcast_arrays(np.asarray(t, dtype=np.float64), np.asarray(s, dtype=np.float64))
    below = s <= t
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.log((T - t) / (T - s))
        val = -(x ** i) / factorial(i) / (T - t)
    return np.where(below, val, 0.0)


def coarsest_nodes(grid: TimeGrid, count: int = 64) -> np.ndarray:
    """Indices of the ``count`` left nodes whose cells are widest, ascending."""
    count = min(count, grid.N)
    order = np.argsort(-grid.dt, kind="stable")[:count]
    return np.sort(order)


def resolvent_table(grid: TimeGrid, m: int, nodes: np.ndarray | None = None, count: int = 64) -> ResolventTable:
    if m < 0:
        raise ValueError("truncation order must be non-negative")
    idx = coarsest_nodes(grid, count) if nodes is None else np.asarray(nodes)
    if np.any(idx >= grid.N) or np.any(idx < 0):
        raise ValueError("resolvent nodes must lie strictly below T")
    times = grid.nodes[idx]
    if np.any(times >= grid.T):
        raise ValueError("resolvent nodes must lie strictly below T")
    T = grid.T
    ta, sb = times[:, None], times[None, :]
    closed = np.stack([kernel_power(T, ta, sb, i) for i in range(m + 1)])
    numeric = np.empty_like(closed)
    numeric[0] = closed[0]
    for i in range(1, m + 1):
        # K^i(t,s) = -(T-t)^{-1} int_s^t K^{i-1}(r,s) dr, trapezoid over the sub-grid
        cum = cumulative_trapezoid(numeric[i - 1], times, axis=0, initial=0.0)
        inner = cum - np.diag(cum)[None, :]
        numeric[i] = np.where(sb <= ta, -inner / (T - ta), 0.0)
    return ResolventTable(T=T, nodes=times, order=m, closed=closed, numeric=numeric,
                          partial_sums=closed.sum(axis=0))


def write_resolvent_csv(table: ResolventTable, path: str | Path, numeric: bool = False) -> None:
    data = table.numeric if numeric else table.closed
    sums = data.sum(axis=0)
    n = len(table.nodes)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "s", "i_or_sum", "value"])
        for a in range(n):
            for b in range(a + 1):
                t, s = f"{table.nodes[a]:.17g}", f"{table.nodes[b]:.17g}"
                for i in range(table.order + 1):
                    w.writerow([t, s, i, f"{data[i, a, b]:.17g}"])
                w.writerow([t, s, "sum", f"{sums[a, b]:.17g}"])
