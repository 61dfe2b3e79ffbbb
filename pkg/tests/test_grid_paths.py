import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lebrep.grid_paths import build_grid, generate_paths, path_blocks
from lebrep.reduce import mean_se, pairwise_sum


def test_uniform_grid():
    assert np.array_equal(build_grid(1.0, 4, 1.0).nodes, [0, 0.25, 0.5, 0.75, 1.0])
    assert np.array_equal(build_grid(2.0, 2, 1.0).nodes, [0, 1, 2])


def test_graded_grid_by_hand():
    np.testing.assert_allclose(build_grid(1.0, 4, 2.0).nodes, [0, 0.4375, 0.75, 0.9375, 1.0], rtol=0, atol=1e-15)


@pytest.mark.parametrize("T,N,q", [(0.0, 4, 1.0), (-1.0, 4, 1.0), (1.0, 1, 1.0), (1.0, 4, 0.5), (1.0, 2.5, 1.0)])
def test_grid_rejects(T, N, q):
    with pytest.raises(ValueError):
        build_grid(T, N, q)


@given(T=st.floats(0.1, 10.0), N=st.integers(2, 4096), q=st.floats(1.0, 3.0))
def test_grid_invariants(T, N, q):
    g = build_grid(T, N, q)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == T
    assert np.all(np.diff(g.nodes) > 0)
    assert np.all(g.left < T)
    if q > 1 and N > 2:
        # spacing shrinks toward T (q barely above 1 is uniform up to rounding)
        assert g.dt[-1] <= g.dt[0] * (1 + 1e-12)


@given(k=st.integers(1, 6))
def test_grid_nesting(k):
    g = build_grid(1.0, 2 ** 10, 2.0)
    c = g.coarsened(2 ** k)
    assert np.array_equal(c.nodes, g.nodes[:: 2 ** k])


def test_paths_exact_increments_and_determinism():
    g = build_grid(1.0, 64, 2.0)
    a = generate_paths(g, 5, seed=11)
    b = generate_paths(g, 5, seed=11)
    assert np.array_equal(a.increments, b.increments)
    assert np.array_equal(np.diff(a.values, axis=1), a.increments)
    assert np.all(a.values[:, 0] == 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), split=st.integers(1, 9))
def test_partition_independence(seed, split):
    g = build_grid(1.0, 32, 2.0)
    whole = generate_paths(g, 10, seed)
    parts = [generate_paths(g, n, seed, first_path=s) for s, n in path_blocks(10, split)]
    assert np.array_equal(np.vstack([p.values for p in parts]), whole.values)
    sub = np.vstack([p.subcell_normals() for p in parts])
    assert np.array_equal(sub, whole.subcell_normals())


def test_subcell_normals_independent_of_increments():
    g = build_grid(1.0, 256, 1.0)
    p = generate_paths(g, 400, seed=3)
    z = p.subcell_normals()
    scaled = p.increments / np.sqrt(g.dt)
    assert abs(np.corrcoef(z.ravel(), scaled.ravel())[0, 1]) < 0.01
    assert abs(z.var() - 1) < 0.01


def test_terminal_mean_single_step():
    g = build_grid(1.0, 2, 1.0)
    p = generate_paths(g, 100_000, seed=7)
    m, _ = mean_se(p.values[:, -1])
    assert abs(m) <= 4 * np.sqrt(1.0 / 100_000)


def test_quadratic_variation_uniform():
    g = build_grid(1.0, 1024, 1.0)
    p = generate_paths(g, 10_000, seed=5)
    qv = np.sum(p.increments ** 2, axis=1)
    assert abs(qv.mean() - 1.0) <= 0.02


def test_terminal_variance_chi_square_band():
    g = build_grid(1.0, 64, 2.0)
    n = 20_000
    p = generate_paths(g, n, seed=9)
    v = np.var(p.values[:, -1], ddof=1)
    assert abs(v - 1.0) <= 4 * np.sqrt(2.0 / (n - 1))


def test_refinement_preserves_law():
    n = 20_000
    fine = generate_paths(build_grid(1.0, 256, 2.0), n, seed=21)
    coarse = generate_paths(build_grid(1.0, 128, 2.0), n, seed=22)
    for f in (lambda w: w, lambda w: w ** 2):
        m1, s1 = mean_se(f(fine.values[:, -1]))
        m2, s2 = mean_se(f(coarse.values[:, -1]))
        assert abs(m1 - m2) <= 4 * np.hypot(s1, s2)


def test_coarsened_bundle_same_path():
    g = build_grid(1.0, 64, 2.0)
    p = generate_paths(g, 3, seed=1)
    c = p.coarsened(4)
    assert np.array_equal(c.values, p.values[:, ::4])
    assert np.array_equal(c.grid.nodes, g.nodes[::4])


def test_future_replacement_keeps_prefix():
    g = build_grid(1.0, 32, 2.0)
    p = generate_paths(g, 4, seed=2)
    q = p.with_future_replaced(10, np.ones(22))
    assert np.array_equal(q.values[:, :11], p.values[:, :11])
    assert np.array_equal(q.increments[:, :10], p.increments[:, :10])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_pairwise_sum_matches_fsum(xs):
    import math
    assert pairwise_sum(np.array(xs)) == pytest.approx(math.fsum(xs), abs=1e-6)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=64), st.integers(0, 1000))
def test_pairwise_sum_is_layout_independent(xs, seed):
    x = np.array(xs)
    a = pairwise_sum(x)
    b = pairwise_sum(np.ascontiguousarray(np.stack([x, x], axis=1))[:, 1])
    assert a == b
