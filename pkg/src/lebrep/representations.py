"""Adapted rates ``beta`` with ``xi = int_0^T beta_u du``.

All constructions return a :class:`RateProcess` holding ``beta`` on the left
nodes ``t_0 .. t_{N-1}``; no kernel is ever evaluated at ``t = T``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid_paths import PathBundle, TimeGrid
from .payoffs import MartingalePath


@dataclass(frozen=True)
class RateProcess:
    grid: TimeGrid
    values: np.ndarray  # (n_paths, N)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]


def canonical_rate(M: MartingalePath, paths: PathBundle) -> RateProcess:
    """Minimal-norm rate ``M_0/T + int_0^t (T-u)^{-1} dM_u`` via left-point Ito sums."""
    grid = paths.grid
    beta = np.empty((paths.n_paths, grid.N))
    beta[:, 0] = M.initial / grid.T
    steps = M.integrand * paths.increments / grid.time_to_go()
    np.cumsum(steps[:, :-1], axis=1, out=beta[:, 1:])
    beta[:, 1:] += beta[:, :1]
    return RateProcess(grid, beta)


def lebesgue_form_rate(M: MartingalePath, grid: TimeGrid) -> RateProcess:
    """``M_t/(T-t) - int_0^t M_s (T-s)^{-2} ds`` from the martingale values alone.

    The ``(T-s)^{-2}`` kernel is integrated exactly over each cell with ``M``
    held at the left node, so a constant martingale returns ``c/T`` exactly.
    """
    ttg = grid.T - grid.nodes
    kernel_mass = 1.0 / ttg[1:-1] - 1.0 / ttg[:-2]      # cells 0 .. N-2
    acc = np.zeros((M.values.shape[0], grid.N))
    np.cumsum(M.values[:, :grid.N - 1] * kernel_mass, axis=1, out=acc[:, 1:])
    beta = M.values[:, :-1] / ttg[:-1] - acc
    return RateProcess(grid, beta)


def volterra_rate(M: MartingalePath, grid: TimeGrid) -> RateProcess:
    """Forward solve of ``beta_t = (M_t - int_0^t beta_u du) / (T - t)``."""
    ttg = grid.time_to_go()
    dt = grid.dt
    n = M.values.shape[0]
    beta = np.empty((n, grid.N))
    area = np.zeros(n)
    for i in range(grid.N):
        beta[:, i] = (M.values[:, i] - area) / ttg[i]
        area += beta[:, i] * dt[i]
    return RateProcess(grid, beta)


def alpha_from_p(p: float) -> float:
    """Fractional order that puts the factorization rate in ``L^{p,1}``."""
    if not 1 < p < 2:
        raise ValueError(f"p must lie in (1, 2), got {p}")
    return 0.75 - 1.0 / (2.0 * p)


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")


def kernel_weights(grid: TimeGrid, alpha: float, rows: np.ndarray) -> np.ndarray:
    """Cell averages of ``(t_i - u)^{-alpha}`` over cells ``j < i``.

    Row ``r`` corresponds to target node ``rows[r]``; columns run over cells
    ``0 .. max(rows) - 1`` and are zero for ``j >= rows[r]``.
    """
    t = grid.nodes
    dt = grid.dt
    ncol = int(rows.max()) if len(rows) else 0
    x = t[rows][:, None] - t[None, :ncol]                  # t_i - t_j
    h = dt[None, :ncol]
    valid = np.arange(ncol)[None, :] < rows[:, None]
    x = np.where(valid, x, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.minimum(h / x, 1.0)
        # x^{1-a} - (x-h)^{1-a}, written to avoid cancellation when h << x
        mass = -x ** (1.0 - alpha) * np.expm1((1.0 - alpha) * np.log1p(-ratio))
    w = mass / ((1.0 - alpha) * h)
    w[~valid] = 0.0
    return w


def riemann_liouville(M: MartingalePath, alpha: float, paths: PathBundle,
                      nodes: np.ndarray | None = None, row_block: int = 256) -> np.ndarray:
    """``R_t = int_0^t (t - u)^{-alpha} dM_u`` on the requested node indices.

    Cells strictly before the last one use product-integration weights against
    the left-point integrand.  On the last cell ``[t_{i-1}, t_i]`` the kernel
    blows up, so the integral is sampled exactly: jointly Gaussian with the
    increment, its part orthogonal to ``dW`` comes from the subcell normals.
    """
    _check_alpha(alpha)
    grid = paths.grid
    if nodes is None:
        nodes = np.arange(grid.N)
    nodes = np.asarray(nodes, dtype=np.intp)
    if np.any(nodes < 0) or np.any(nodes >= grid.N):
        raise ValueError("Riemann-Liouville nodes must be left nodes t_i < T")
    X = M.integrand * paths.increments
    Z = paths.subcell_normals()
    dt = grid.dt
    resid = np.sqrt(dt ** (1.0 - 2.0 * alpha) * (1.0 / (1.0 - 2.0 * alpha) - 1.0 / (1.0 - alpha) ** 2))
    out = np.zeros((paths.n_paths, len(nodes)))
    for start in range(0, len(nodes), row_block):
        rows = nodes[start:start + row_block]
        live = rows > 0
        if not live.any():
            continue
        r = rows[live]
        w = kernel_weights(grid, alpha, r)
        block = X[:, :w.shape[1]] @ w.T
        last = r - 1
        block += (resid[last] * M.integrand[:, last]) * Z[:, last]
        out[:, start:start + len(rows)][:, live] = block
    return out


def fractional_rate(M: MartingalePath, alpha: float, paths: PathBundle) -> RateProcess:
    """Factorization rate ``sin(a pi)/pi (T-t)^{a-1} R_t``."""
    _check_alpha(alpha)
    grid = paths.grid
    R = riemann_liouville(M, alpha, paths)
    beta = (np.sin(alpha * np.pi) / np.pi) * grid.time_to_go() ** (alpha - 1.0) * R
    return RateProcess(grid, beta)


def integrate_rate(beta: RateProcess) -> np.ndarray:
    """Left-point ``sum_i beta_i dt_i`` per path."""
    return np.sum(beta.values * beta.grid.dt, axis=1)


def write_rate_csv(beta: RateProcess, path: str | Path, path_ids: np.ndarray | None = None,
                   max_paths: int | None = None) -> None:
    ids = np.arange(beta.n_paths) if path_ids is None else np.asarray(path_ids)
    rows = beta.n_paths if max_paths is None else min(max_paths, beta.n_paths)
    t = beta.grid.left
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "t", "beta"])
        for r in range(rows):
            pid = int(ids[r])
            for ti, b in zip(t, beta.values[r]):
                w.writerow([pid, f"{ti:.17g}", f"{b:.17g}"])
