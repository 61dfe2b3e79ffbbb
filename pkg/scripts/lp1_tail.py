"""Continuum ladder for E int |beta|^p of the fractional rate of W_T.

beta_t is Gaussian with variance (sin(a pi)/pi)^2 (T-t)^{2a-2} t^{1-2a}/(1-2a),
so E|beta_t|^p has a closed form and the truncated functional can be
integrated to machine precision.  The output shows what the ladder verdict
would be with no Monte Carlo or grid error at all.
"""

import argparse
from math import gamma, pi, sqrt

import numpy as np
from scipy.integrate import quad

from lebrep.diagnostics import TAIL_RUNGS, classify


def abs_moment(p: float) -> float:
    """E|Z|^p for a standard normal."""
    return 2 ** (p / 2) * gamma((p + 1) / 2) / sqrt(pi)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--alpha", type=float, default=None, help="default: 3/4 - 1/(2p)")
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--kmax", type=int, default=40)
    args = ap.parse_args()
    p, T = args.p, args.T
    a = args.alpha if args.alpha is not None else 0.75 - 1 / (2 * p)
    c = (np.sin(a * pi) / pi) ** 2 / (1 - 2 * a)

    A = abs_moment(p) * c ** (p / 2)
    e_end, e_start = p * (a - 1), p * (1 - 2 * a) / 2   # powers of (T-t) and t

    def tail(eps):
        """int_{T-eps}^T E|beta_t|^p dt with u = T - t and an algebraic weight u^e_end."""
        return quad(lambda u: A * (T - u) ** e_start, 0, eps, weight="alg", wvar=(e_end, 0))[0]

    total = quad(lambda t: A, 0, T, weight="alg", wvar=(e_start, e_end))[0]
    ks = np.arange(3, args.kmax + 1)
    F = np.array([total - tail(T * 2.0 ** -k) for k in ks])
    x = ks * np.log(2)
    print(f"alpha={a:.6f} p={p}  tail exponent 1+p(alpha-1) = {1 + p * (a - 1):.4f}  limit={total:.6f}")
    print(" K   F(eps_K)     tail_slope  rel_incr  verdict")
    for K in range(3 + TAIL_RUNGS - 1, args.kmax + 1, 2):
        j = K - 3
        xs, fs = x[j - 2:j + 1], F[j - 2:j + 1]
        slope = np.polyfit(xs, fs, 1)[0]
        rel = abs(fs[-1] - fs[-2]) / fs[-1]
        print(f"{K:2d}  {F[j]:.6f}  {slope:10.4f}  {rel:8.4f}  {classify(slope, rel)}")


if __name__ == "__main__":
    main()
