import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lebrep.grid_paths import build_grid, generate_paths
from lebrep.payoffs import MartingalePath, PowerSigma, SigmaIntegral, TerminalFunction, TimeAverage, evaluate_payoff
from lebrep.reduce import mean_se
from lebrep.representations import (RateProcess, alpha_from_p, canonical_rate, fractional_rate, integrate_rate,
                                    kernel_weights, lebesgue_form_rate, riemann_liouville, volterra_rate,
                                    write_rate_csv)


@pytest.fixture(scope="module")
def small():
    return generate_paths(build_grid(1.0, 256, 2.0), 64, seed=8)


def test_canonical_time_average_is_w(small):
    _, M = evaluate_payoff(TimeAverage(), small)
    beta = canonical_rate(M, small)
    assert np.allclose(beta.values, small.values[:, :-1], rtol=0, atol=1e-12)


def test_canonical_wt_variance_at_half():
    g = build_grid(1.0, 1024, 2.0)
    p = generate_paths(g, 10_000, seed=33)
    _, M = evaluate_payoff(TerminalFunction(), p)
    beta = canonical_rate(M, p)
    i = g.index_at_or_before(0.5)
    t = g.nodes[i]
    target = 1 / (1 - t) - 1.0
    assert abs(np.var(beta.values[:, i], ddof=1) / target - 1) <= 0.05


@pytest.mark.parametrize("c", [0.0, 1.0, -2.5])
def test_constant_payoff_all_forms(small, c):
    M = MartingalePath.constant(c, small)
    g = small.grid
    assert np.all(canonical_rate(M, small).values == c / g.T)
    np.testing.assert_allclose(lebesgue_form_rate(M, g).values, c / g.T, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(volterra_rate(M, g).values, c / g.T, rtol=1e-12, atol=1e-14)


def test_volterra_constant_uniform_exact():
    g = build_grid(1.0, 64, 1.0)
    p = generate_paths(g, 2, seed=0)
    beta = volterra_rate(MartingalePath.constant(1.0, p), g)
    assert beta.values[0, 0] == 1.0
    np.testing.assert_allclose(beta.values, 1.0, rtol=1e-13)


def test_integrate_constant_rate():
    g = build_grid(2.0, 32, 2.0)
    beta = RateProcess(g, np.full((3, 32), 1.5 / 2.0))
    np.testing.assert_allclose(integrate_rate(beta), 1.5, rtol=1e-14)


def test_time_average_reproduction_small_rms():
    g = build_grid(1.0, 2048, 2.0)
    p = generate_paths(g, 500, seed=44)
    xi, M = evaluate_payoff(TimeAverage(), p)
    err = integrate_rate(canonical_rate(M, p)) - xi
    assert np.sqrt(np.mean(err ** 2)) <= 3 * np.sqrt(g.dt.max())


def test_three_forms_agree_and_shrink():
    out = []
    base = generate_paths(build_grid(1.0, 4096, 2.0), 200, seed=55)
    for f in (4, 2, 1):
        p = base.coarsened(f) if f > 1 else base
        _, M = evaluate_payoff(TimeAverage(), p)
        g = p.grid
        n = np.count_nonzero(g.left <= 1 - 2 ** -6)
        c = canonical_rate(M, p).values[:, :n]
        l = lebesgue_form_rate(M, g).values[:, :n]
        v = volterra_rate(M, g).values[:, :n]
        out.append(max(np.abs(c - l).max(), np.abs(c - v).max()))
    assert out[0] > out[1] > out[2]


@pytest.mark.parametrize("build", [
    lambda M, p: canonical_rate(M, p),
    lambda M, p: lebesgue_form_rate(M, p.grid),
    lambda M, p: volterra_rate(M, p.grid),
    lambda M, p: fractional_rate(M, 0.3, p),
], ids=["canonical", "lebesgue", "volterra", "fractional"])
@settings(max_examples=15, deadline=None)
@given(i=st.integers(1, 60), seed=st.integers(0, 2 ** 32))
def test_adaptedness(build, i, seed):
    p = generate_paths(build_grid(1.0, 64, 2.0), 3, seed=seed)
    rng = np.random.default_rng(seed)
    q = p.with_future_replaced(i, rng.standard_normal((3, 64 - i)), rng.standard_normal((3, 64 - i)))
    for spec in (SigmaIntegral("cos_w"), TerminalFunction("identity")):
        _, Mp = evaluate_payoff(spec, p)
        _, Mq = evaluate_payoff(spec, q)
        bp, bq = build(Mp, p), build(Mq, q)
        assert np.array_equal(bp.values[:, :i + 1], bq.values[:, :i + 1])


def test_canonical_is_martingale():
    g = build_grid(1.0, 512, 2.0)
    p = generate_paths(g, 10_000, seed=66)
    _, M = evaluate_payoff(SigmaIntegral("cos_w"), p)
    beta = canonical_rate(M, p)
    idx = np.array([0, 64, 128, 256, 384, 448])
    m, se = mean_se(beta.values[:, idx])
    assert np.all(np.abs(m - m[0]) <= 4 * np.maximum(se, 1e-300))


def test_alpha_rule():
    assert alpha_from_p(1.5) == pytest.approx(5 / 12, abs=1e-15)
    for bad in (1.0, 2.0, 0.5):
        with pytest.raises(ValueError):
            alpha_from_p(bad)


@pytest.mark.parametrize("alpha", [0.0, 0.5, -0.1, 0.7])
def test_fractional_rejects_alpha(small, alpha):
    _, M = evaluate_payoff(TerminalFunction(), small)
    with pytest.raises(ValueError):
        fractional_rate(M, alpha, small)


@given(alpha=st.floats(0.01, 0.49), i=st.integers(1, 63))
def test_kernel_weights_integrate_exactly(alpha, i):
    """Weights times cell lengths sum to the exact kernel integral over [0, t_i]."""
    g = build_grid(1.0, 64, 2.0)
    w = kernel_weights(g, alpha, np.array([i]))[0]
    t = g.nodes[i]
    exact_excl_last = (t ** (1 - alpha) - (t - g.nodes[i - 1]) ** (1 - alpha)) / (1 - alpha)
    assert np.sum(w[:i - 1] * g.dt[:i - 1]) == pytest.approx(exact_excl_last, rel=1e-10, abs=1e-14)
    assert np.all(w[i:] == 0) and np.all(w[:i] > 0)


def test_rl_variance_moderate_sample():
    g = build_grid(1.0, 1024, 2.0)
    p = generate_paths(g, 6000, seed=77)
    _, M = evaluate_payoff(TerminalFunction(), p)
    idx = np.array([g.nearest_index(0.5)])
    R = riemann_liouville(M, 0.25, p, nodes=idx)[:, 0]
    t = g.nodes[idx[0]]
    assert abs(np.var(R, ddof=1) / (2 * np.sqrt(t)) - 1) <= 0.06


def test_fractional_reproduces_wt():
    g = build_grid(1.0, 2048, 2.0)
    p = generate_paths(g, 400, seed=88)
    xi, M = evaluate_payoff(TerminalFunction(), p)
    err = integrate_rate(fractional_rate(M, 5 / 12, p)) - xi
    assert np.sqrt(np.mean(err ** 2)) / np.std(xi) <= 0.05


def test_rate_csv(tmp_path, small):
    _, M = evaluate_payoff(TimeAverage(), small)
    beta = canonical_rate(M, small)
    f = tmp_path / "r.csv"
    write_rate_csv(beta, f, max_paths=2)
    lines = f.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "path,t,beta"
    assert len(lines) == 1 + 2 * small.grid.N
    pid, t, b = lines[5].split(",")
    assert float(b) == beta.values[0, 4] and float(t) == small.grid.nodes[4]
