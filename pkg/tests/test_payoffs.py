import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lebrep.grid_paths import PathBundle, build_grid, generate_paths
from lebrep.payoffs import (MartingalePath, PowerSigma, SigmaIntegral, TerminalFunction, TimeAverage,
                            evaluate_payoff, ito_integral, payoff_from_dict, payoff_to_dict)
from lebrep.reduce import mean_se

CATALOG = [SigmaIntegral(1.0), SigmaIntegral("cos_w"), PowerSigma(0.5), PowerSigma(-0.25), PowerSigma(1.0),
           TimeAverage(), TerminalFunction("identity"), TerminalFunction("square")]


@pytest.fixture(scope="module")
def paths():
    return generate_paths(build_grid(1.0, 512, 2.0), 10_000, seed=101)


def test_zero_path_time_average():
    g = build_grid(1.0, 16, 2.0)
    p = PathBundle.from_increments(g, np.zeros((1, 16)))
    xi, M = evaluate_payoff(TimeAverage(), p)
    assert xi[0] == 0.0 and np.all(M.values == 0.0)


def test_square_is_centered(paths):
    xi, _ = evaluate_payoff(TerminalFunction("square"), paths)
    m, se = mean_se(xi)
    assert abs(m) <= 4 * se


def test_power_one_matches_time_average_per_node():
    g = build_grid(1.0, 4096, 1.0)
    p = generate_paths(g, 200, seed=4)
    _, Mp = evaluate_payoff(PowerSigma(1.0), p)
    _, Ma = evaluate_payoff(TimeAverage(), p)
    # summation by parts leaves sum 0.5 dW dt, of size O(dt)
    assert np.max(np.abs(Mp.values - Ma.values)) <= 10 * g.dt.max()


def test_power_rejects_non_square_integrable():
    with pytest.raises(ValueError):
        PowerSigma(-0.5)
    with pytest.raises(ValueError):
        PowerSigma(-1.0)


def test_ito_integral_of_one_is_w(paths):
    assert np.array_equal(ito_integral(np.ones(paths.grid.N), paths), paths.values)


def test_ito_integral_of_w(paths):
    I = ito_integral(paths.values[:, :-1], paths)[:, -1]
    m, se = mean_se(I)
    assert abs(m) <= 4 * se
    assert abs(np.var(I, ddof=1) / 0.5 - 1) <= 0.05


@pytest.mark.parametrize("spec", CATALOG, ids=repr)
def test_ito_isometry(paths, spec):
    xi, M = evaluate_payoff(spec, paths)
    inc = M.values[:, -1] - M.values[:, 0]
    lhs = np.var(inc, ddof=1)
    qv = M.quadratic_variation[:, -1]
    rhs, rhs_se = mean_se(qv)
    n = len(inc)
    lhs_se = np.sqrt(np.var((inc - inc.mean()) ** 2, ddof=1) / n)
    assert abs(lhs - rhs) <= 4 * np.hypot(lhs_se, rhs_se)


@pytest.mark.parametrize("spec", CATALOG, ids=repr)
def test_martingale_mean_flat(paths, spec):
    _, M = evaluate_payoff(spec, paths)
    assert np.all(M.values[:, 0] == M.values[0, 0])
    idx = np.linspace(0, paths.grid.N, 9).astype(int)
    m, se = mean_se(M.values[:, idx])
    ok = np.abs(m - m[0]) <= 4 * np.maximum(se, 1e-300)
    assert ok[1:].all()


@pytest.mark.parametrize("spec", CATALOG, ids=repr)
def test_qv_nondecreasing(paths, spec):
    _, M = evaluate_payoff(spec, paths)
    assert np.all(np.diff(M.quadratic_variation[:50], axis=1) >= 0)


def test_time_average_terminal_is_trapezoid(paths):
    xi, M = evaluate_payoff(TimeAverage(), paths)
    W = paths.values
    trap = np.sum(0.5 * (W[:, 1:] + W[:, :-1]) * paths.grid.dt, axis=1)
    assert np.allclose(M.values[:, -1], trap, atol=1e-12)
    assert np.array_equal(xi, M.values[:, -1])


def test_sigma_integral_terminal_exact(paths):
    xi, M = evaluate_payoff(SigmaIntegral("cos_w"), paths)
    manual = np.sum(np.cos(paths.values[:, :-1]) * paths.increments, axis=1)
    assert np.allclose(xi, manual, rtol=0, atol=1e-12)


def test_constant_martingale():
    g = build_grid(1.0, 8, 2.0)
    M = MartingalePath.constant(2.5, generate_paths(g, 3, seed=0))
    assert np.all(M.values == 2.5) and np.all(M.integrand == 0)


@settings(deadline=None)
@given(st.sampled_from([
    {"variant": "sigma_integral", "sigma": "cos_w"}, {"variant": "sigma_integral", "sigma": 0.7},
    {"variant": "power_sigma", "gamma": 0.25}, {"variant": "time_average"},
    {"variant": "terminal_function", "g": "square"}]))
def test_payoff_dict_roundtrip(d):
    assert payoff_to_dict(payoff_from_dict(d)) == d


@pytest.mark.parametrize("d", [{"variant": "nope"}, {"variant": "terminal_function", "g": "cube"},
                               {"variant": "sigma_integral", "sigma": "sin_w"}, {"variant": "power_sigma", "gamma": -0.6}])
def test_payoff_dict_rejects(d):
    with pytest.raises(ValueError):
        payoff_from_dict(d)
