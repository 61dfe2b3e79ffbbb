from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from lebrep.grid_paths import build_grid
from lebrep.resolvent import coarsest_nodes, kernel_power, resolvent_table, write_resolvent_csv


def _composed(T, t, s, i):
    """Independent oracle: K^i by nested adaptive quadrature of K(t,r) K^{i-1}(r,s)."""
    if s > t:
        return 0.0
    if i == 0:
        return -1.0 / (T - t)
    val, _ = quad(lambda r: _composed(T, r, s, i - 1), s, t, epsabs=1e-13, epsrel=1e-12)
    return -val / (T - t)


def test_kernel_zero():
    assert kernel_power(1.0, 0.5, 0.25, 0) == -2.0
    assert kernel_power(1.0, 0.25, 0.5, 0) == 0.0


@pytest.mark.parametrize("i", [1, 2, 3])
def test_closed_form_matches_nested_quadrature(i):
    assert kernel_power(1.0, 0.75, 0.25, i) == pytest.approx(_composed(1.0, 0.75, 0.25, i), rel=1e-9)


@given(t=st.floats(0.0, 0.99), i=st.integers(1, 8))
def test_diagonal_vanishes(t, i):
    assert kernel_power(1.0, t, t, i) == 0.0


def test_series_example():
    s = sum(kernel_power(1.0, 0.75, 0.25, i) for i in range(11))
    assert abs(s - (-4.0 / 3.0)) <= 1e-3
    assert abs(-s - 1.0 / (1.0 - 0.25)) <= 1e-3


@given(m=st.integers(0, 12))
def test_remainder_bound_all_pairs(m):
    g = build_grid(1.0, 512, 2.0)
    idx = np.linspace(0, 500, 40).astype(int)
    tab = resolvent_table(g, m, nodes=idx)
    err = np.abs(tab.partial_sums - tab.limit)
    # floating-point allowance: a few ulps per summed term of size up to |limit|
    rounding = 4 * (m + 1) * np.finfo(float).eps * np.abs(tab.limit)
    assert np.all(err <= tab.remainder_bound() * (1 + 1e-9) + rounding)


def test_partial_sums_converge():
    g = build_grid(1.0, 256, 2.0)
    idx = np.arange(0, 200, 10)
    errs = [resolvent_table(g, m, nodes=idx).max_sum_error() for m in (2, 6, 12, 20)]
    assert errs == sorted(errs, reverse=True)


def test_numeric_composition_refines():
    g = build_grid(1.0, 1024, 1.0)
    coarse = resolvent_table(g, 3, nodes=np.arange(0, 768, 48)).max_composition_error()
    fine = resolvent_table(g, 3, nodes=np.arange(0, 768, 12)).max_composition_error()
    assert fine < coarse / 8


def test_coarsest_nodes_are_widest():
    g = build_grid(1.0, 128, 2.0)
    idx = coarsest_nodes(g, 16)
    assert np.array_equal(idx, np.arange(16))
    assert np.all(g.dt[idx].min() >= np.delete(g.dt, idx).max())


def test_rejects_terminal_node():
    g = build_grid(1.0, 16, 2.0)
    with pytest.raises(ValueError):
        resolvent_table(g, 3, nodes=np.array([0, 16]))
    with pytest.raises(ValueError):
        resolvent_table(g, -1)


def test_csv(tmp_path):
    g = build_grid(1.0, 64, 2.0)
    tab = resolvent_table(g, 2, nodes=np.array([0, 10, 20]))
    f = tmp_path / "r.csv"
    write_resolvent_csv(tab, f)
    lines = f.read_text().splitlines()
    assert lines[0] == "t,s,i_or_sum,value"
    assert len(lines) == 1 + 6 * 4
    t, s, tag, v = lines[-1].split(",")
    assert tag == "sum" and float(v) == tab.partial_sums[2, 2]
