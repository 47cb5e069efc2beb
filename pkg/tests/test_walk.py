import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mslqw.dense import build_coin_dense, build_evolution_dense
from mslqw.hypercube import MarkedSet
from mslqw.walk import (DimensionError, OracleMode, WalkConfig, WalkResult, apply_coin,
                        apply_oracle_full, apply_oracle_partial, apply_shift, evolve,
                        first_lobe_peak, initial_state, run_walk, step, success_probability)
from mslqw.weights import InvalidConfigurationError


def random_state(dim, rng):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def basis_state(config, c, x):
    v = np.zeros(config.dim)
    v[c * config.N + x] = 1.0
    return v


# --- config ----------------------------------------------------------------

def test_config_dims():
    cfg = WalkConfig(12, 30, 1, "n_pow_over_N_times_k", "partial")
    assert cfg.N == 4096 and cfg.coin_dim == 42 and cfg.dim == 42 * 4096


def test_config_rules():
    with pytest.raises(InvalidConfigurationError):
        WalkConfig(3, 0, scheme="explicit:0", oracle="partial")
    with pytest.raises(InvalidConfigurationError):
        WalkConfig(3, 2, 3)
    with pytest.raises(InvalidConfigurationError):
        WalkConfig(3, 0, scheme="n_over_N", oracle="full")
    assert WalkConfig(3, 0, scheme="explicit:0", oracle="none").s == 0
    assert WalkConfig(3, 4).s == 1


def test_default_horizon():
    cfg = WalkConfig(12, 1, scheme="n_over_N", oracle="full")
    assert cfg.default_horizon() == math.ceil(6 * math.sqrt(13 * 4096)) + 100


# --- initial state ---------------------------------------------------------

def test_initial_state_loopless_uniform():
    cfg = WalkConfig(4, 0, scheme="explicit:0", oracle="none")
    psi = initial_state(cfg)
    np.testing.assert_allclose(psi, np.full(4 * 16, 1 / math.sqrt(4 * 16)), rtol=0, atol=1e-15)


def test_initial_state_loop_ratio():
    cfg = WalkConfig(12, 1, scheme="n_over_N", oracle="full")
    psi = initial_state(cfg).reshape(cfg.coin_dim, cfg.N)
    l = 12 / 4096
    np.testing.assert_allclose(psi[12] / psi[0], math.sqrt(l), rtol=1e-14)
    np.testing.assert_allclose(psi[0], 1 / math.sqrt((12 + l) * 4096), rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 6), st.floats(0, 50))
def test_initial_state_normalised(n, m, l):
    scheme = f"explicit:{l if m else 0.0}"
    cfg = WalkConfig(n, m, scheme=scheme, oracle="full" if m else "none")
    psi = initial_state(cfg)
    # closed form: n*N edge entries of 1/((n+l)N) and m*N loop entries of l'/((n+l)N)
    lt = l if m else 0.0
    total = n * cfg.N / ((n + lt) * cfg.N) + (m * cfg.N * (lt / m) / ((n + lt) * cfg.N) if m else 0.0)
    assert total == pytest.approx(1.0, abs=1e-14)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-14)


# --- coin ------------------------------------------------------------------

def test_coin_fixes_axis_and_negates_orthogonal():
    cfg = WalkConfig(3, 2, scheme="explicit:0.7", oracle="full")
    axis = cfg.coin_axis()
    rng = np.random.default_rng(1)
    other = rng.standard_normal(cfg.coin_dim)
    other -= (other @ axis) * axis
    psi = np.zeros((cfg.coin_dim, cfg.N))
    psi[:, 5] = 0.3 * axis
    psi[:, 2] = other
    out = apply_coin(psi.reshape(-1), cfg).reshape(psi.shape)
    np.testing.assert_allclose(out[:, 5], psi[:, 5], atol=1e-15)
    np.testing.assert_allclose(out[:, 2], -psi[:, 2], atol=1e-15)


def test_coin_matches_dense():
    cfg = WalkConfig(3, 2, scheme="explicit:1.3", oracle="partial")
    C = build_coin_dense(cfg)
    rng = np.random.default_rng(2)
    for _ in range(20):
        psi = random_state(cfg.dim, rng)
        np.testing.assert_allclose(apply_coin(psi, cfg), C @ psi, rtol=0, atol=1e-13)


def test_coin_is_involution_and_does_not_mutate():
    cfg = WalkConfig(4, 3, scheme="n_pow_over_N", oracle="full")
    psi = random_state(cfg.dim, np.random.default_rng(3))
    keep = psi.copy()
    twice = apply_coin(apply_coin(psi, cfg), cfg)
    assert np.array_equal(psi, keep)
    np.testing.assert_allclose(twice, psi, atol=1e-14)


# --- shift -----------------------------------------------------------------

def test_shift_involution_bitwise():
    cfg = WalkConfig(5, 3, scheme="n_over_N", oracle="full")
    psi = random_state(cfg.dim, np.random.default_rng(4))
    assert np.array_equal(apply_shift(apply_shift(psi, cfg), cfg), psi)


def test_shift_moves_edge_amplitude():
    cfg = WalkConfig(3, 2, scheme="n_over_N", oracle="full")
    out = apply_shift(basis_state(cfg, 0, 5), cfg)
    assert np.array_equal(out, basis_state(cfg, 0, 4))
    out = apply_shift(basis_state(cfg, 2, 5), cfg)
    assert np.array_equal(out, basis_state(cfg, 2, 1))


def test_shift_leaves_self_loops():
    cfg = WalkConfig(3, 2, scheme="n_over_N", oracle="full")
    # loop 1 sits at coin index n + 1
    psi = basis_state(cfg, 3 + 1, 5)
    assert np.array_equal(apply_shift(psi, cfg), psi)


def test_shift_inplace_matches_copy():
    cfg = WalkConfig(6, 2, scheme="n_over_N", oracle="full")
    psi = random_state(cfg.dim, np.random.default_rng(5))
    expected = apply_shift(psi, cfg)
    apply_shift(psi, cfg, inplace=True)
    assert np.array_equal(psi, expected)


def test_dimension_mismatch():
    cfg = WalkConfig(3, 2, scheme="n_over_N", oracle="full")
    with pytest.raises(DimensionError):
        apply_shift(np.zeros(10), cfg)
    with pytest.raises(DimensionError):
        apply_coin(np.zeros(cfg.dim + 1), cfg)
    with pytest.raises(DimensionError):
        apply_oracle_full(np.zeros(cfg.dim), MarkedSet(4, (1,)), cfg)


# --- oracles ---------------------------------------------------------------

def test_partial_oracle_components():
    cfg = WalkConfig(3, 3, 1, scheme="n_over_N", oracle="partial")
    w = 5
    marked = MarkedSet(3, (w,))
    for c in range(cfg.coin_dim):
        for x in (w, 2):
            psi = basis_state(cfg, c, x)
            out = apply_oracle_partial(psi, marked, cfg)
            flipped = x == w and c < cfg.n + cfg.s
            assert np.array_equal(out, -psi if flipped else psi), (c, x)


def test_partial_oracle_several_inverted_loops():
    cfg = WalkConfig(3, 4, 3, scheme="n_over_N", oracle="partial")
    marked = MarkedSet(3, (0, 3))
    psi = np.ones(cfg.dim)
    out = apply_oracle_partial(psi, marked, cfg).reshape(cfg.coin_dim, cfg.N)
    assert (out == -1).sum() == 2 * (3 + 3)
    assert np.all(out[:6, [0, 3]] == -1) and np.all(out[6:, [0, 3]] == 1)


def test_oracle_mode_guard():
    cfg = WalkConfig(3, 2, scheme="n_over_N", oracle="full")
    with pytest.raises(InvalidConfigurationError):
        apply_oracle_partial(np.zeros(cfg.dim), MarkedSet(3, (1,)), cfg)


def test_full_oracle():
    cfg = WalkConfig(3, 2, scheme="n_over_N", oracle="full")
    psi = random_state(cfg.dim, np.random.default_rng(6))
    assert np.array_equal(apply_oracle_full(psi, MarkedSet(3, ()), cfg), psi)
    marked = MarkedSet(3, (1, 6))
    out = apply_oracle_full(psi, marked, cfg).reshape(cfg.coin_dim, cfg.N)
    ref = psi.reshape(cfg.coin_dim, cfg.N)
    np.testing.assert_array_equal(out[:, [1, 6]], -ref[:, [1, 6]])
    np.testing.assert_array_equal(out[:, [0, 2, 3, 4, 5, 7]], ref[:, [0, 2, 3, 4, 5, 7]])
    assert np.array_equal(apply_oracle_full(out.reshape(-1), marked, cfg), psi)


# --- step ------------------------------------------------------------------

def test_uniform_state_stationary_without_oracle():
    for m, scheme in [(0, "explicit:0"), (2, "n_over_N")]:
        cfg = WalkConfig(3, m, scheme=scheme, oracle="none")
        psi = initial_state(cfg)
        marked = MarkedSet(3, ())
        out = step(psi, marked, cfg, k=1)
        U = build_evolution_dense(cfg, marked, k=1)
        np.testing.assert_allclose(out, U @ psi, atol=1e-13)
        np.testing.assert_allclose(out, psi, atol=1e-15)


def test_one_step_partial_matches_dense():
    cfg = WalkConfig(3, 1, scheme="n_over_N", oracle="partial")
    marked = MarkedSet(3, (5,))
    psi = initial_state(cfg, 1)
    U = build_evolution_dense(cfg, marked)
    np.testing.assert_allclose(step(psi, marked, cfg), U @ psi, rtol=0, atol=1e-13)


def test_empty_full_oracle_equals_no_oracle_bitwise():
    full = WalkConfig(4, 2, scheme="n_over_N", oracle="full")
    none = WalkConfig(4, 2, scheme="n_over_N", oracle="none")
    psi = random_state(full.dim, np.random.default_rng(7))
    empty = MarkedSet(4, ())
    assert np.array_equal(step(psi, empty, full, k=1), step(psi, empty, none, k=1))


def test_step_preserves_norm():
    cfg = WalkConfig(6, 4, scheme="n_pow_over_N_times_k", oracle="partial")
    marked = MarkedSet(6, (0, 3, 12))
    psi = initial_state(cfg, 3)
    for _ in range(50):
        psi = step(psi, marked, cfg)
        assert abs(np.linalg.norm(psi) - 1) < 1e-14


def test_untouched_loops_permutation_commutes():
    cfg = WalkConfig(4, 5, 2, scheme="n_pow_over_N", oracle="partial")
    marked = MarkedSet(4, (3, 12))
    rng = np.random.default_rng(8)
    perm = np.arange(cfg.coin_dim)
    perm[cfg.n + cfg.s:] = cfg.n + cfg.s + rng.permutation(cfg.m - cfg.s)
    for _ in range(5):
        psi = random_state(cfg.dim, rng)
        P = lambda v: v.reshape(cfg.coin_dim, cfg.N)[perm].reshape(-1)  # noqa: E731
        np.testing.assert_allclose(step(P(psi), marked, cfg), P(step(psi, marked, cfg)), atol=1e-14)


# --- success probability ---------------------------------------------------

def test_success_probability_examples():
    cfg = WalkConfig(4, 0, scheme="explicit:0", oracle="none")
    psi = initial_state(cfg)
    assert success_probability(psi, MarkedSet(4, tuple(range(16)))) == pytest.approx(1.0, abs=1e-12)
    assert success_probability(psi, MarkedSet(4, ())) == 0.0
    assert success_probability(psi, MarkedSet(4, (0, 5, 10))) == pytest.approx(3 / 16, abs=1e-15)


# --- run_walk ----------------------------------------------------------------

def test_horizon_bookkeeping():
    cfg = WalkConfig(3, 1, scheme="n_over_N", oracle="full")
    marked = MarkedSet(3, (0,))
    res = run_walk(cfg, marked, horizon=1)
    assert len(res.probabilities) == 2 and res.steps_run == 1
    with pytest.raises(ValueError):
        run_walk(cfg, marked, horizon=0)


@pytest.mark.parametrize("oracle,m,s", [("partial", 3, 1), ("full", 2, 1), ("partial", 4, 3),
                                        ("partial", 5, 5), ("full", 6, 1), ("none", 3, 1),
                                        ("partial", 1, 1)])
def test_kernels_agree(oracle, m, s):
    cfg = WalkConfig(7, m, s, scheme="n_pow_over_N_times_k", oracle=oracle)
    marked = MarkedSet(7, (3, 96))
    a = run_walk(cfg, marked, 300, kernel="numpy")
    b = run_walk(cfg, marked, 300, kernel="fused")
    np.testing.assert_allclose(a.probabilities, b.probabilities, rtol=0, atol=1e-12)
    sa, _ = evolve(cfg, marked, 300, kernel="numpy")
    sb, _ = evolve(cfg, marked, 300, kernel="fused")
    np.testing.assert_allclose(sa, sb, rtol=0, atol=1e-12)


def test_fused_kernel_handles_unequal_loops():
    # a generic start state breaks the loop symmetry; the fused path must not assume it
    cfg = WalkConfig(5, 3, 1, scheme="n_pow_over_N", oracle="partial")
    marked = MarkedSet(5, (0, 7))
    v = np.random.default_rng(5).standard_normal(cfg.dim)
    v /= np.linalg.norm(v)
    sa, pa = evolve(cfg, marked, 50, state=v, kernel="numpy")
    sb, pb = evolve(cfg, marked, 50, state=v, kernel="fused")
    np.testing.assert_allclose(sa, sb, rtol=0, atol=1e-12)
    np.testing.assert_allclose(pa, pb, rtol=0, atol=1e-12)


def test_walk_result_invariants():
    cfg = WalkConfig(8, 3, scheme="n_pow_over_N_times_k", oracle="partial")
    res = run_walk(cfg, MarkedSet(8, (0, 3)))
    p = res.probabilities
    assert res.peak_probability == p.max()
    assert res.peak_step == int(np.argmax(p))
    assert p.min() >= 0 and p.max() <= 1 + 1e-12
    assert p.dtype == np.float64


def test_walk_result_first_argmax():
    res = WalkResult.from_series([0.1, 0.5, 0.5, 0.2])
    assert res.peak_step == 1 and res.peak_probability == 0.5


def test_walk_result_serialisation():
    res = WalkResult.from_series([0.25, 0.75, 0.5])
    obj = json.loads(res.dumps())
    assert obj == {"peak_probability": 0.75, "peak_step": 1, "first_peak_step": 1,
                   "series": [0.25, 0.75, 0.5]}
    assert res.to_csv().splitlines() == ["step,probability", "0,0.25", "1,0.75", "2,0.5"]


def test_first_lobe_peak_ignores_later_repeats():
    lobe = [0.0, 0.3, 0.8, 0.9, 0.7, 0.2, 0.0]
    series = lobe + [0.1, 0.5, 0.9000001, 0.4, 0.0]
    res = WalkResult.from_series(series)
    assert res.peak_step == 9 and res.first_peak_step == 3


def test_first_lobe_peak_skips_low_lobes():
    # the first run above half the peak tops out at 0.6 < 0.9 * peak
    assert first_lobe_peak([0.0, 0.6, 0.1, 0.5, 1.0, 0.95, 0.2]) == 4
    assert first_lobe_peak([0.0, 0.6, 0.1, 0.5, 1.0, 0.95, 0.2], reach=0.5) == 1


def test_first_lobe_peak_flat_series():
    assert first_lobe_peak([0.0, 0.0, 0.0]) == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=60))
def test_first_lobe_peak_bounds(series):
    res = WalkResult.from_series(series)
    assert 0 <= res.first_peak_step <= res.peak_step
    assert series[res.first_peak_step] >= 0.9 * res.peak_probability


def test_first_lobe_peak_on_search_walk():
    # later lobes repeat the first to ~1e-4, so the global argmax is far out
    cfg = WalkConfig(12, 12, scheme="n_pow_over_N_times_k", oracle="partial")
    res = run_walk(cfg, MarkedSet(12, (1938, 2096)))
    assert res.first_peak_step == 75
    assert res.probabilities[75] == pytest.approx(res.peak_probability, abs=1e-3)


def test_pure_walk_peak_is_series_max():
    cfg = WalkConfig(3, 0, scheme="explicit:0", oracle="none")
    res = run_walk(cfg, MarkedSet(3, ()), 20, k=0)
    assert res.peak_probability == max(res.probabilities) == 0.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.001, 3.0), st.integers(2, 8), st.integers(1, 3))
def test_multi_loop_full_inversion_equals_single_loop(l, m, k):
    n = 6
    rng = np.random.default_rng(k)
    verts = tuple(sorted(rng.choice(1 << n, size=k, replace=False).tolist()))
    marked = MarkedSet(n, verts)
    one = run_walk(WalkConfig(n, 1, scheme=f"explicit:{l!r}", oracle="full"), marked, 100)
    # the numpy kernel keeps every loop separate, so this is not the fused loop collapse checking itself
    many = run_walk(WalkConfig(n, m, scheme=f"explicit:{l!r}", oracle="full"), marked, 100, kernel="numpy")
    assert np.max(np.abs(one.probabilities - many.probabilities)) < 1e-12
