"""Terminal variables with closed-form closing martingales.

Each payoff exposes, on a :class:`PathBundle`, its terminal value ``xi``, the
martingale ``M_t = E[xi | F_t]`` on every node and the integrand ``sigma`` of
``dM = sigma dW`` on the left nodes ``t_i < T``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .grid_paths import PathBundle


@dataclass(frozen=True)
class MartingalePath:
    values: np.ndarray      # (n_paths, N + 1)
    integrand: np.ndarray   # (n_paths, N), sampled at t_0 .. t_{N-1}
    dt: np.ndarray          # (N,)

    @property
    def qv_increments(self) -> np.ndarray:
        return self.integrand ** 2 * self.dt

    @property
    def quadratic_variation(self) -> np.ndarray:
        qv = np.zeros_like(self.values)
        np.cumsum(self.qv_increments, axis=1, out=qv[:, 1:])
        return qv

    @property
    def terminal(self) -> np.ndarray:
        return self.values[:, -1]

    @property
    def initial(self) -> np.ndarray:
        return self.values[:, 0]

    @classmethod
    def constant(cls, c: float, paths: PathBundle) -> "MartingalePath":
        """``xi = c``: flat martingale, zero integrand."""
        n, N = paths.n_paths, paths.grid.N
        return cls(values=np.full((n, N + 1), float(c)), integrand=np.zeros((n, N)), dt=paths.grid.dt)


@dataclass(frozen=True)
class SigmaIntegral:
    """``xi = int_0^T sigma_u dW_u``.

    ``sigma`` is ``"cos_w"`` for the adapted choice ``cos(W_t)``, a number for a
    constant, or a callable of time for any other deterministic integrand.
    """

    sigma: Union[str, float, Callable[[np.ndarray], np.ndarray]] = 1.0

    @property
    def deterministic(self) -> bool:
        return not (isinstance(self.sigma, str) and self.sigma == "cos_w")

    def sigma_on_nodes(self, paths: PathBundle) -> np.ndarray:
        n, t = paths.n_paths, paths.grid.left
        if isinstance(self.sigma, str):
            if self.sigma != "cos_w":
                raise ValueError(f"unknown sigma {self.sigma!r}")
            return np.cos(paths.values[:, :-1])
        if callable(self.sigma):
            return np.broadcast_to(np.asarray(self.sigma(t), dtype=np.float64), (n, len(t))).copy()
        return np.full((n, len(t)), float(self.sigma))


@dataclass(frozen=True)
class PowerSigma:
    """``xi = int_0^T (T - u)^gamma dW_u``."""

    gamma: float

    def __post_init__(self) -> None:
        if not self.gamma > -0.5:
            raise ValueError(f"gamma must exceed -1/2 for a square-integrable xi, got {self.gamma}")

    deterministic = True

    def sigma_on_nodes(self, paths: PathBundle) -> np.ndarray:
        s = paths.grid.time_to_go() ** self.gamma
        return np.broadcast_to(s, (paths.n_paths, paths.grid.N)).copy()


@dataclass(frozen=True)
class TimeAverage:
    """``xi = int_0^T W_t dt`` (trapezoid rule on the grid)."""

    deterministic = True

    def sigma_on_nodes(self, paths: PathBundle) -> np.ndarray:
        return np.broadcast_to(paths.grid.time_to_go(), (paths.n_paths, paths.grid.N)).copy()


@dataclass(frozen=True)
class TerminalFunction:
    """``xi = g(W_T)`` with ``g(x) = x`` (``"identity"``) or ``g(x) = x^2 - T`` (``"square"``)."""

    g: str = "identity"

    def __post_init__(self) -> None:
        if self.g not in ("identity", "square"):
            raise ValueError(f"unsupported terminal function {self.g!r}")

    @property
    def deterministic(self) -> bool:
        return self.g == "identity"

    def derivative(self, w: np.ndarray) -> np.ndarray:
        return np.ones_like(w) if self.g == "identity" else 2.0 * w

    def sigma_on_nodes(self, paths: PathBundle) -> np.ndarray:
        return self.derivative(paths.values[:, :-1])


PayoffSpec = Union[SigmaIntegral, PowerSigma, TimeAverage, TerminalFunction]


def ito_integral(integrand: np.ndarray, paths: PathBundle) -> np.ndarray:
    """Left-point sums ``sum_{i<k} f(t_i) dW_i`` on every node ``t_k``."""
    f = np.broadcast_to(np.asarray(integrand, dtype=np.float64), paths.increments.shape)
    out = np.zeros((paths.n_paths, paths.grid.N + 1))
    np.cumsum(f * paths.increments, axis=1, out=out[:, 1:])
    return out


def evaluate_payoff(spec: PayoffSpec, paths: PathBundle) -> tuple[np.ndarray, MartingalePath]:
    grid = paths.grid
    sigma = spec.sigma_on_nodes(paths)
    if isinstance(spec, (SigmaIntegral, PowerSigma)):
        values = ito_integral(sigma, paths)
    elif isinstance(spec, TimeAverage):
        W = paths.values
        running = np.zeros_like(W)
        np.cumsum(0.5 * (W[:, :-1] + W[:, 1:]) * grid.dt, axis=1, out=running[:, 1:])
        values = running + W * (grid.T - grid.nodes)
    elif isinstance(spec, TerminalFunction):
        W = paths.values
        values = W.copy() if spec.g == "identity" else W ** 2 - grid.nodes
    else:
        raise TypeError(f"unknown payoff {spec!r}")
    M = MartingalePath(values=values, integrand=sigma, dt=grid.dt)
    return M.terminal.copy(), M


def bounded_integrand(spec: PayoffSpec) -> bool:
    """Whether the martingale integrand is bounded, as the factorization route needs."""
    if isinstance(spec, SigmaIntegral):
        return True
    if isinstance(spec, PowerSigma):
        return spec.gamma >= 0
    if isinstance(spec, TimeAverage):
        return True
    return isinstance(spec, TerminalFunction) and spec.g == "identity"


def payoff_from_dict(d: dict) -> PayoffSpec:
    variant = d.get("variant")
    if variant == "sigma_integral":
        sigma = d.get("sigma", 1.0)
        if not (sigma == "cos_w" or isinstance(sigma, (int, float))):
            raise ValueError(f"sigma must be 'cos_w' or a number, got {sigma!r}")
        return SigmaIntegral(sigma=sigma)
    if variant == "power_sigma":
        return PowerSigma(gamma=float(d["gamma"]))
    if variant == "time_average":
        return TimeAverage()
    if variant == "terminal_function":
        return TerminalFunction(g=d.get("g", "identity"))
    raise ValueError(f"unknown payoff variant {variant!r}")


def payoff_to_dict(spec: PayoffSpec) -> dict:
    if isinstance(spec, SigmaIntegral):
        if callable(spec.sigma):
            raise ValueError("callable sigma has no config form")
        return {"variant": "sigma_integral", "sigma": spec.sigma}
    if isinstance(spec, PowerSigma):
        return {"variant": "power_sigma", "gamma": spec.gamma}
    if isinstance(spec, TimeAverage):
        return {"variant": "time_average"}
    return {"variant": "terminal_function", "g": spec.g}
