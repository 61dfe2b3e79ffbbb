"""Regularity functionals, divergence verdicts, first-order and minimality checks.

Every functional is truncated at ``T - eps_k`` on the ladder
``eps_k = T 2^{-k}``, ``k = 3 .. K``.  Cells straddling the cut contribute
their partial mass, and singular kernels (``(T-t)^{-1}``) are integrated
exactly over each cell against the left-node value of the integrand.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .grid_paths import PathBundle, TimeGrid
from .payoffs import MartingalePath, PayoffSpec, PowerSigma, SigmaIntegral, TerminalFunction, TimeAverage
from .reduce import mean_se, pairwise_sum
from .representations import (RateProcess, canonical_rate, lebesgue_form_rate,
                              riemann_liouville, volterra_rate)

DIVERGENT_SLOPE = 0.5
FINITE_SLOPE = 0.05
FINITE_REL_INCREMENT = 0.01
TAIL_RUNGS = 3

FINITE, DIVERGENT, INCONCLUSIVE = "Finite", "Divergent", "Inconclusive"


@dataclass(frozen=True)
class Ladder:
    T: float
    ks: np.ndarray

    @property
    def eps(self) -> np.ndarray:
        return self.T * 2.0 ** (-self.ks.astype(np.float64))

    @property
    def log_inv_eps(self) -> np.ndarray:
        """``log(T/eps_k)``; slopes against it equal slopes against ``log(1/eps)``."""
        return self.ks * np.log(2.0)

    def __len__(self) -> int:
        return len(self.ks)


def make_ladder(T: float, K: int, k_min: int = 3) -> Ladder:
    if K < k_min + TAIL_RUNGS - 1:
        raise ValueError(f"ladder needs at least {TAIL_RUNGS} rungs, got k = {k_min}..{K}")
    return Ladder(T=T, ks=np.arange(k_min, K + 1))


def default_ladder(grid: TimeGrid, min_cells: int = 8, k_min: int = 3) -> Ladder:
    """Deepest ladder whose last window ``[T - eps_K, T)`` still holds ``min_cells`` cells."""
    left = grid.left
    K = k_min
    while True:
        eps = grid.T * 2.0 ** -(K + 1)
        if np.count_nonzero(left >= grid.T - eps) < min_cells:
            break
        K += 1
    return make_ladder(grid.T, max(K, k_min + TAIL_RUNGS - 1), k_min)


def truncated_sums(cell_values: np.ndarray, grid: TimeGrid, ladder: Ladder, kernel: str = "lebesgue") -> np.ndarray:
    """Per-path ``sum_i v_i * mass_i([t_i, t_{i+1}] cap [0, T - eps_k])`` for every rung.

    ``kernel="lebesgue"`` weighs by length, ``kernel="inverse"`` by
    ``int (T-t)^{-1} dt`` over the (partial) cell.  Values must be non-negative
    for the returned rows to be non-decreasing in ``k``.
    """
    v = np.asarray(cell_values, dtype=np.float64)
    t = grid.nodes
    if ladder.eps.min() < grid.dt[-1] or ladder.eps.max() > grid.T:
        raise ValueError("ladder finer than the grid resolves near T")
    cut = grid.T - ladder.eps
    ic = np.searchsorted(t, cut, side="right") - 1     # cell holding the cut
    imax = int(ic.max())
    if kernel == "lebesgue":
        full = grid.dt[:imax]
        partial = cut - t[ic]
    elif kernel == "inverse":
        full = np.log((grid.T - t[:imax]) / (grid.T - t[1:imax + 1]))
        partial = np.log((grid.T - t[ic]) / ladder.eps)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    C = np.zeros((v.shape[0], imax + 1))
    np.cumsum(v[:, :imax] * full, axis=1, out=C[:, 1:])
    return C[:, ic] + v[:, ic] * partial


@dataclass
class RegularityReport:
    functional: str
    eps: list
    values: list
    se: list
    slope: float
    slope_se: float
    tail_slope: float
    rel_increment: float
    verdict: str
    limit: float
    limit_se: float
    mc_se: float
    norms: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "functional": self.functional,
            "ladder": [{"epsilon": e, "value": v, "se": s} for e, v, s in zip(self.eps, self.values, self.se)],
            "slope": self.slope,
            "slope_se": self.slope_se,
            "tail_slope": self.tail_slope,
            "rel_increment": self.rel_increment,
            "verdict": self.verdict,
            "limit": self.limit,
            "limit_se": self.limit_se,
            "mc_se": self.mc_se,
            "norms": self.norms,
            "extras": self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _lsq_weights(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean()
    return xc / np.dot(xc, xc)


def classify(tail_slope: float, rel_increment: float) -> str:
    if tail_slope > DIVERGENT_SLOPE:
        return DIVERGENT
    if tail_slope < FINITE_SLOPE and rel_increment < FINITE_REL_INCREMENT:
        return FINITE
    return INCONCLUSIVE


def ladder_report(functional: str, per_path: np.ndarray, ladder: Ladder,
                  coarse_per_path: np.ndarray | None = None) -> RegularityReport:
    """Reduce per-path truncated values to a report.

    ``coarse_per_path`` is the same functional on the grid with every other
    node dropped; the fine/coarse gap at the last rung estimates the
    discretization error and enters ``limit_se`` next to the Monte Carlo SE and
    the tail extrapolation.
    """
    F = np.asarray(per_path, dtype=np.float64)
    mean, se = mean_se(F)
    x = ladder.log_inv_eps
    w_all = _lsq_weights(x)
    w_tail = _lsq_weights(x[-TAIL_RUNGS:])
    slope, slope_se = mean_se(np.sum(F * w_all, axis=1))
    tail_slope = float(np.dot(mean[-TAIL_RUNGS:], w_tail))
    last = float(mean[-1])
    inc = last - float(mean[-2])
    rel = 0.0 if last == 0 else abs(inc / last)
    verdict = classify(tail_slope, rel)

    d1, d2 = float(mean[-2] - mean[-3]), inc
    limit = last
    if d1 > 0 and 0 <= d2 < d1:
        limit = last + d2 * d2 / (d1 - d2)
    disc = 0.0
    if coarse_per_path is not None:
        disc = abs(last - float(pairwise_sum(np.asarray(coarse_per_path)[:, -1]) / F.shape[0]))
    mc = float(se[-1])
    limit_se = float(np.sqrt(mc ** 2 + (limit - last) ** 2 + disc ** 2))
    return RegularityReport(
        functional=functional, eps=[float(e) for e in ladder.eps], values=[float(v) for v in mean],
        se=[float(s) for s in se], slope=float(slope), slope_se=float(slope_se), tail_slope=tail_slope,
        rel_increment=rel, verdict=verdict, limit=limit, limit_se=limit_se, mc_se=mc,
        extras={"discretization": disc, "extrapolation": limit - last},
    )


def coarse_grid(grid: TimeGrid) -> TimeGrid | None:
    if grid.N % 2:
        return None
    try:
        return grid.coarsened(2)
    except ValueError:
        return None


# --- singular functional -------------------------------------------------

def singular_functional_paths(M: MartingalePath, grid: TimeGrid, ladder: Ladder) -> np.ndarray:
    return truncated_sums(M.integrand ** 2, grid, ladder, kernel="inverse")


def singular_functional(M: MartingalePath, grid: TimeGrid, ladder: Ladder | None = None) -> RegularityReport:
    """Truncations of ``int_0^T (T-t)^{-1} d<M>_t``."""
    ladder = ladder or default_ladder(grid)
    fine = singular_functional_paths(M, grid, ladder)
    coarse = None
    cg = coarse_grid(grid)
    if cg is not None:
        coarse = truncated_sums(M.integrand[:, ::2] ** 2, cg, ladder, kernel="inverse")
    return ladder_report("singular_functional", fine, ladder, coarse)


# --- norms of rates --------------------------------------------------------

def _norm_report(name: str, cell_values: np.ndarray, grid: TimeGrid, ladder: Ladder) -> tuple[RegularityReport, float, float]:
    fine = truncated_sums(cell_values, grid, ladder)
    coarse = None
    cg = coarse_grid(grid)
    if cg is not None:
        coarse = truncated_sums(cell_values[:, ::2], cg, ladder)
    report = ladder_report(name, fine, ladder, coarse)
    est, se = mean_se(np.sum(cell_values * grid.dt, axis=1))
    return report, float(est), float(se)


def l21_norm(beta: RateProcess, ladder: Ladder | None = None) -> RegularityReport:
    """``E int_0^T beta^2 du`` over the whole grid, plus the truncation ladder."""
    ladder = ladder or default_ladder(beta.grid)
    report, est, se = _norm_report("l21", beta.values ** 2, beta.grid, ladder)
    report.norms["l21"] = {"estimate": est, "se": se}
    return report


def lp1_norm(beta: RateProcess, p: float, ladder: Ladder | None = None) -> RegularityReport:
    """``E int_0^T |beta|^p du`` for ``1 <= p < 2``; the norm is its ``1/p`` power."""
    if not 1 <= p < 2:
        raise ValueError(f"p must lie in [1, 2), got {p}")
    ladder = ladder or default_ladder(beta.grid)
    report, est, se = _norm_report("lp1", np.abs(beta.values) ** p, beta.grid, ladder)
    report.norms["lp1"] = {"p": p, "estimate": est, "se": se}
    return report


# --- perturbations: first-order conditions and minimality -----------------

@dataclass(frozen=True)
class PerturbationSpec:
    """``gamma = chi/(s-t)`` on ``(t, s]`` and ``-chi/(T-s)`` on ``(s, T]``.

    ``chi`` is ``"tanh"`` (``tanh(W_t)``), ``"one"`` or ``"zero"``.  On the grid
    the two pieces are normalised by their discrete lengths so that
    ``sum gamma dt`` vanishes on every path.
    """

    t: float
    s: float
    chi: str = "tanh"

    def __post_init__(self) -> None:
        if not 0 <= self.t < self.s:
            raise ValueError(f"need 0 <= t < s, got t={self.t}, s={self.s}")
        if self.chi not in ("tanh", "one", "zero"):
            raise ValueError(f"unknown chi {self.chi!r}")

    def profile(self, grid: TimeGrid) -> np.ndarray:
        """Deterministic shape ``g`` with ``gamma_i = chi * g_i``."""
        if self.s >= grid.T:
            raise ValueError("pivot s must lie below T")
        k = grid.index_at_or_before(self.t)
        l = grid.index_at_or_before(self.s)
        if l <= k:
            raise ValueError("pivots t and s fall in the same grid cell")
        dt = grid.dt
        g = np.zeros(grid.N)
        g[k:l] = 1.0 / np.sum(dt[k:l])
        g[l:] = -1.0 / np.sum(dt[l:])
        return g

    def chi_values(self, paths: PathBundle) -> np.ndarray:
        if self.chi == "zero":
            return np.zeros(paths.n_paths)
        if self.chi == "one":
            return np.ones(paths.n_paths)
        return np.tanh(paths.values[:, paths.grid.index_at_or_before(self.t)])

    def gamma(self, paths: PathBundle) -> np.ndarray:
        return self.chi_values(paths)[:, None] * self.profile(paths.grid)[None, :]


@dataclass
class OrthogonalityResult:
    t: float
    s: float
    estimate: float
    se: float
    statistic: float


def orthogonality_paths(beta: RateProcess, spec: PerturbationSpec, paths: PathBundle) -> np.ndarray:
    return np.sum(beta.values * spec.gamma(paths) * beta.grid.dt, axis=1)


def _statistic(est: float, se: float) -> float:
    return 0.0 if se == 0 else est / se


def orthogonality_check(beta: RateProcess, perturbations: Sequence[PerturbationSpec],
                        paths: PathBundle) -> list[OrthogonalityResult]:
    """Estimate ``E int beta gamma du`` for each perturbation."""
    out = []
    for spec in perturbations:
        est, se = mean_se(orthogonality_paths(beta, spec, paths))
        out.append(OrthogonalityResult(spec.t, spec.s, float(est), float(se), _statistic(float(est), float(se))))
    return out


@dataclass
class MinimalityResult:
    t: float
    s: float
    step: float
    gap: float
    se: float


def minimality_paths(beta: RateProcess, spec: PerturbationSpec, paths: PathBundle, step: float) -> np.ndarray:
    dt = beta.grid.dt
    b = beta.values
    perturbed = b + step * spec.gamma(paths)
    return np.sum(perturbed ** 2 * dt, axis=1) - np.sum(b ** 2 * dt, axis=1)


def minimality_check(beta: RateProcess, perturbations: Sequence[PerturbationSpec], paths: PathBundle,
                     steps: Sequence[float] = (0.5, 1.0, 2.0)) -> list[MinimalityResult]:
    """Norm gaps ``||beta + e gamma||^2 - ||beta||^2`` on common paths."""
    out = []
    for spec in perturbations:
        for e in steps:
            gap, se = mean_se(minimality_paths(beta, spec, paths, e))
            out.append(MinimalityResult(spec.t, spec.s, float(e), float(gap), float(se)))
    return out


def default_perturbations(T: float) -> list[PerturbationSpec]:
    pivots = [(1 / 8, 1 / 4), (1 / 8, 1 / 2), (1 / 4, 1 / 2), (1 / 4, 3 / 4), (3 / 8, 5 / 8),
              (1 / 2, 3 / 4), (1 / 2, 7 / 8), (5 / 8, 15 / 16), (3 / 4, 7 / 8), (1 / 16, 31 / 32)]
    return [PerturbationSpec(a * T, b * T) for a, b in pivots]


# --- Veraar condition -------------------------------------------------------

def veraar_paths(M: MartingalePath, grid: TimeGrid) -> np.ndarray:
    """Inner integral ``int_0^{t_i} (T-t)^{-2} d<M>_t`` on left nodes, per path."""
    ttg = grid.T - grid.nodes
    mass = 1.0 / ttg[1:-1] - 1.0 / ttg[:-2]
    inner = np.zeros((M.integrand.shape[0], grid.N))
    np.cumsum(M.integrand[:, :-1] ** 2 * mass, axis=1, out=inner[:, 1:])
    return inner


def veraar_condition(M: MartingalePath, grid: TimeGrid, ladder: Ladder | None = None) -> tuple[np.ndarray, RegularityReport]:
    """Per-path ``int_0^T (int_0^s (T-t)^{-2} d<M>_t)^{1/2} ds`` and its ladder verdict."""
    ladder = ladder or default_ladder(grid)
    root = np.sqrt(veraar_paths(M, grid))
    values = np.sum(root * grid.dt, axis=1)
    fine = truncated_sums(root, grid, ladder)
    cg = coarse_grid(grid)
    coarse = truncated_sums(root[:, ::2], cg, ladder) if cg is not None else None
    report = ladder_report("veraar", fine, ladder, coarse)
    est, se = mean_se(values)
    report.extras.update({"estimate": float(est), "se": float(se)})
    return values, report


# --- terminal functions ----------------------------------------------------

def _gprime(g: str, w: np.ndarray) -> np.ndarray:
    if g == "identity":
        return np.ones_like(w)
    if g == "square":
        return 2.0 * w
    if g == "constant":
        return np.zeros_like(w)
    raise ValueError(f"unsupported terminal function {g!r}")


def gprime_divergence(g: str, paths: PathBundle, ladder: Ladder | None = None) -> RegularityReport:
    """Truncations of ``int_0^T g'(W_t)^2 / (T-t) dt`` against ``E[g'(W_T)^2]``."""
    grid = paths.grid
    ladder = ladder or default_ladder(grid)
    v = _gprime(g, paths.values[:, :-1]) ** 2
    fine = truncated_sums(v, grid, ladder, kernel="inverse")
    cg = coarse_grid(grid)
    coarse = truncated_sums(v[:, ::2], cg, ladder, kernel="inverse") if cg is not None else None
    report = ladder_report(f"gprime_{g}", fine, ladder, coarse)
    cmp_mean, cmp_se = mean_se(_gprime(g, paths.values[:, -1]) ** 2)
    report.extras.update({"comparison": float(cmp_mean), "comparison_se": float(cmp_se)})
    return report


# --- deterministic Girsanov drift -------------------------------------------

Deterministic = Union[float, int, Callable[[np.ndarray], np.ndarray], PayoffSpec]


def deterministic_on_nodes(f: Deterministic, grid: TimeGrid, what: str) -> np.ndarray:
    t = grid.left
    if isinstance(f, (int, float)) and not isinstance(f, bool):
        return np.full(len(t), float(f))
    if isinstance(f, PowerSigma):
        return grid.time_to_go() ** f.gamma
    if isinstance(f, TimeAverage):
        return grid.time_to_go()
    if isinstance(f, TerminalFunction) and f.deterministic:
        return np.ones(len(t))
    if isinstance(f, SigmaIntegral) and f.deterministic:
        return f.sigma_on_nodes(PathBundle.from_increments(grid, np.zeros((1, grid.N))))[0]
    if callable(f) and not isinstance(f, type):
        out = np.asarray(f(t), dtype=np.float64)
        if out.shape != t.shape:
            raise ValueError(f"{what} must be a deterministic function of time only")
        return out
    raise ValueError(f"{what} must be deterministic (number or function of time), got {f!r}")


@dataclass
class GirsanovReport:
    reference: RegularityReport
    weighted: RegularityReport
    difference: float
    difference_se: float
    weight_mean: float
    weight_se: float
    closed_form: float

    def to_dict(self) -> dict:
        return {
            "reference": self.reference.to_dict(),
            "weighted": self.weighted.to_dict(),
            "difference": self.difference,
            "difference_se": self.difference_se,
            "weight_mean": self.weight_mean,
            "weight_se": self.weight_se,
            "closed_form": self.closed_form,
        }


def girsanov_paths(sigma: np.ndarray, theta: np.ndarray, paths: PathBundle, ladder: Ladder) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Realized singular functionals of ``M^P`` and ``M^Q`` and the density per path."""
    grid = paths.grid
    dW = paths.increments
    dWq = dW + theta * grid.dt
    weights = np.exp(-np.sum(theta * dW, axis=1) - 0.5 * np.sum(theta ** 2 * grid.dt))
    fp = truncated_sums((sigma * dW) ** 2 / grid.dt, grid, ladder, kernel="inverse")
    fq = truncated_sums((sigma * dWq) ** 2 / grid.dt, grid, ladder, kernel="inverse")
    return fp, weights[:, None] * fq, weights


def girsanov_invariance(sigma: Deterministic, theta: Deterministic, paths: PathBundle,
                        ladder: Ladder | None = None) -> GirsanovReport:
    """Singular functional of ``xi = int sigma dW`` under P and under the drift change ``theta``.

    Under Q (density ``exp(-int theta dW - 1/2 int theta^2 dt)``) the closing
    martingale is ``int sigma dW^Q`` plus a constant, so its quadratic
    variation is that of ``M^P``.  Both estimates use realized squared
    increments; the Q one is importance weighted.
    """
    grid = paths.grid
    ladder = ladder or default_ladder(grid)
    s = deterministic_on_nodes(sigma, grid, "sigma")
    th = deterministic_on_nodes(theta, grid, "theta")
    fp, fq, weights = girsanov_paths(s, th, paths, ladder)
    rep_p = ladder_report("singular_functional_P", fp, ladder)
    rep_q = ladder_report("singular_functional_Q", fq, ladder)
    diff, diff_se = mean_se(fq[:, -1] - fp[:, -1])
    wm, wse = mean_se(weights)
    closed = truncated_sums((s ** 2)[None, :], grid, ladder, kernel="inverse")[0, -1]
    return GirsanovReport(rep_p, rep_q, float(diff), float(diff_se), float(wm), float(wse), float(closed))


# --- Riemann-Liouville law and three-way agreement ---------------------------

@dataclass
class VarianceCheck:
    t: float
    variance: float
    target: float
    rel_error: float


def rl_variance(M: MartingalePath, alpha: float, paths: PathBundle, times: Sequence[float]) -> list[VarianceCheck]:
    """Sample variance of ``R_t`` against ``t^{1-2a}/(1-2a)`` (unit integrand)."""
    from .reduce import sample_var

    grid = paths.grid
    idx = np.array([grid.nearest_index(t) for t in times])
    R = riemann_liouville(M, alpha, paths, nodes=idx)
    var = sample_var(R)
    out = []
    for j, i in enumerate(idx):
        ti = float(grid.nodes[i])
        target = ti ** (1 - 2 * alpha) / (1 - 2 * alpha)
        out.append(VarianceCheck(ti, float(var[j]), target, float(var[j] / target - 1.0)))
    return out


@dataclass
class AgreementReport:
    cutoff: float
    canonical_vs_lebesgue: float
    canonical_vs_volterra: float
    lebesgue_vs_volterra: float
    scale: float

    @property
    def max_discrepancy(self) -> float:
        return max(self.canonical_vs_lebesgue, self.canonical_vs_volterra, self.lebesgue_vs_volterra)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_discrepancy"] = self.max_discrepancy
        return d


def agreement_paths(M: MartingalePath, paths: PathBundle, cutoff_exponent: int = 6) -> np.ndarray:
    """Per path: max gaps canonical/Lebesgue, canonical/Volterra, Lebesgue/Volterra and ``max |M|``."""
    grid = paths.grid
    n = agreement_node_count(grid, cutoff_exponent)
    c = canonical_rate(M, paths).values[:, :n]
    l = lebesgue_form_rate(M, grid).values[:, :n]
    v = volterra_rate(M, grid).values[:, :n]
    return np.column_stack([
        np.max(np.abs(c - l), axis=1),
        np.max(np.abs(c - v), axis=1),
        np.max(np.abs(l - v), axis=1),
        np.max(np.abs(M.values[:, :n]), axis=1),
    ])


def agreement_node_count(grid: TimeGrid, cutoff_exponent: int = 6) -> int:
    return int(np.count_nonzero(grid.left <= grid.T * (1.0 - 2.0 ** -cutoff_exponent)))


def agreement_report(per_path: np.ndarray, grid: TimeGrid, cutoff_exponent: int = 6) -> AgreementReport:
    """``scale`` is the one-step discretization scale ``max_i dt_i (T - t_i)^{-2} * max |M|``."""
    n = agreement_node_count(grid, cutoff_exponent)
    worst = per_path.max(axis=0)
    step = float(np.max(grid.dt[:n] / grid.time_to_go()[:n] ** 2))
    return AgreementReport(
        cutoff=grid.T * (1.0 - 2.0 ** -cutoff_exponent),
        canonical_vs_lebesgue=float(worst[0]),
        canonical_vs_volterra=float(worst[1]),
        lebesgue_vs_volterra=float(worst[2]),
        scale=step * float(worst[3]),
    )


def rate_agreement(M: MartingalePath, paths: PathBundle, cutoff_exponent: int = 6) -> AgreementReport:
    """Pathwise gaps between the three rate constructions on ``t <= T(1 - 2^-c)``."""
    return agreement_report(agreement_paths(M, paths, cutoff_exponent), paths.grid, cutoff_exponent)
