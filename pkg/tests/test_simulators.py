import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bes3.rng import RngStream
from bes3.sampling import sample_g_exact_many
from bes3.simulators import (
    ConfigError,
    SamplePath,
    SimConfig,
    euler_batch,
    norm3d_batch,
    norm3d_ensemble,
    path_summary,
    running_min,
    simulate_euler_sde,
    simulate_figure1_walk,
    simulate_norm3d,
    simulate_paths,
    simulate_williams,
    terminal_values,
    williams_terminal,
)
from bes3.verification import ks_critical, ks_two_sample


# --- config -----------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    {"r": 0.0}, {"r": -1.0}, {"dt": 0.0}, {"horizon": 0.0}, {"dt": 2.0},
    {"dt": 0.3}, {"n_paths": 0}, {"method": "bogus"}, {"pre_cap": -1.0},
])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_step_count_tolerates_rounding():
    assert SimConfig(horizon=1.0, dt=0.1).n_steps == 10
    assert SimConfig(horizon=0.3, dt=0.1).n_steps == 3


# --- norm3d -----------------------------------------------------------------

def test_norm3d_single_step_grid(forced):
    p = simulate_norm3d(SimConfig(r=2.0, horizon=0.5, dt=0.5), forced())
    assert list(p.times) == [0.0, 0.5] and list(p.values) == [2.0, 2.0]


def test_norm3d_zero_draws_constant(forced):
    p = simulate_norm3d(SimConfig(r=1.5, horizon=1.0, dt=0.01), forced())
    assert np.all(p.values == 1.5)


def test_norm3d_first_step_by_hand(forced):
    p = simulate_norm3d(SimConfig(r=1.0, horizon=0.04, dt=0.04), forced(normals=[1.0, 2.0, -2.0]))
    assert p.values[1] == pytest.approx(math.sqrt(1.2**2 + 0.4**2 + 0.4**2))


def test_norm3d_single_path_equals_batch_row():
    cfg = SimConfig(r=1.0, horizon=0.5, dt=0.01, seed=3)
    values, minima = norm3d_batch(cfg, range(5, 8), with_minima=True)
    p = simulate_norm3d(cfg, RngStream(3, 6), with_minima=True)
    assert np.array_equal(p.values, values[1])
    assert np.array_equal(p.interval_minima, minima[1])


def test_norm3d_minima_do_not_change_values():
    cfg = SimConfig(r=1.0, horizon=0.2, dt=0.01, seed=3)
    a = simulate_norm3d(cfg, RngStream(3, 0))
    b = simulate_norm3d(cfg, RngStream(3, 0), with_minima=True)
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_norm3d_brownian_scaling_exact(c):
    draws = RngStream(1, 0).draw_standard_normal(300)
    base = simulate_norm3d(SimConfig(r=1.0, horizon=0.1, dt=1e-3), _Replay(draws))
    scaled = simulate_norm3d(SimConfig(r=c, horizon=0.1 * c * c, dt=1e-3 * c * c), _Replay(draws))
    assert np.array_equal(scaled.values, c * base.values)
    assert np.allclose(scaled.times, c * c * base.times, rtol=1e-12)


class _Replay:
    def __init__(self, normals):
        self.normals = np.asarray(normals)

    def draw_standard_normal(self, size=None):
        return self.normals[:size]


def test_norm3d_second_moment():
    # oracle: E|x0 + W_T|^2 = r^2 + 3T (20-point Gauss-Hermite in 3-D gives 4.0)
    v = terminal_values(SimConfig(r=1.0, horizon=1.0, dt=1e-3, n_paths=10_000, seed=7))
    sq = v * v
    assert abs(sq.mean() - 4.0) <= 3 * sq.std(ddof=1) / math.sqrt(sq.size)


def test_norm3d_positive_and_starts_at_r():
    p = simulate_norm3d(SimConfig(r=0.2, horizon=1.0, dt=1e-3), RngStream(5))
    assert p.values[0] == 0.2 and np.all(p.values > 0)
    assert np.all(np.diff(p.times) > 0)


def test_interval_minima_bound_the_grid():
    p = simulate_norm3d(SimConfig(r=0.5, horizon=1.0, dt=0.01), RngStream(8), with_minima=True)
    lo = np.minimum(p.values[:-1], p.values[1:])
    assert np.all(p.interval_minima <= lo) and np.all(p.interval_minima >= 0)


def test_ensemble_checkpoint_extras():
    cfg = SimConfig(r=1.0, horizon=1.0, dt=0.1, n_paths=30, seed=2)
    ens = norm3d_ensemble(cfg, checkpoint=0.5)
    assert np.all(ens.extras["inf_at"] <= ens.extras["value_at"])
    assert np.all(ens.inf_total <= ens.extras["inf_at"])
    with pytest.raises(ConfigError):
        norm3d_ensemble(cfg, checkpoint=0.55)


# --- euler ------------------------------------------------------------------

def test_euler_zero_draws_drift_recursion(forced):
    p = simulate_euler_sde(SimConfig(r=1.0, horizon=0.2, dt=0.1), forced())
    assert p.values[1] == 1.1
    assert p.values[2] == pytest.approx(1.190909, abs=1e-6)


def test_euler_single_equals_batch():
    cfg = SimConfig(r=1.0, horizon=0.1, dt=1e-3, seed=4)
    values, rc = euler_batch(cfg, range(3))
    p = simulate_euler_sde(cfg, RngStream(4, 2))
    assert np.array_equal(p.values, values[2]) and p.reflect_count == rc[2]


def test_euler_reflection_keeps_positive():
    p = simulate_euler_sde(SimConfig(r=0.01, horizon=1.0, dt=0.01), RngStream(1))
    assert np.all(p.values > 0)


def test_euler_reflections_rare_from_one():
    _, rc = euler_batch(SimConfig(r=1.0, horizon=1.0, dt=1e-3, seed=7), range(500))
    assert rc.sum() <= 1e-3 * 500 * 1000


# --- williams ---------------------------------------------------------------

def test_williams_forced_u_one(forced):
    cfg = SimConfig(r=2.0, horizon=0.1, dt=0.01)
    w = simulate_williams(cfg, forced(uniforms=[1.0], base=RngStream(1)))
    assert w.g_grid == 0.0 and w.a == 2.0 and len(w.pre_path) == 0
    c = w.concatenated()
    assert c.values[0] == 2.0 and np.all(c.values >= 2.0)


def test_williams_forced_u_near_zero_runs_to_origin(forced):
    cfg = SimConfig(r=1.0, horizon=0.01, dt=1e-3, pre_cap=1e4)
    w = simulate_williams(cfg, forced(uniforms=[1e-9], base=RngStream(2)))
    assert w.a == pytest.approx(1e-9)
    assert w.pre_path.values.min() < 0.2  # an unconditioned Brownian motion nearly hitting 0


@pytest.mark.parametrize("stream", range(6))
def test_williams_splice_invariants(stream):
    cfg = SimConfig(r=1.0, horizon=0.2, dt=1e-3, method="williams")
    w = simulate_williams(cfg, RngStream(7, stream))
    assert w.post_path.values[0] == w.a
    assert np.all(w.post_path.values >= w.a)
    if len(w.pre_path):
        assert w.pre_path.values[0] == 1.0
        assert w.pre_path.values.min() > w.a
        if not w.capped:
            assert w.pre_path.values[-1] - w.a <= 4 * math.sqrt(cfg.dt) * 3
            assert w.g_grid == pytest.approx(len(w.pre_path) * cfg.dt)
    c = w.concatenated()
    assert c.values.min() == w.a
    assert np.all(np.diff(c.times) > 0)


def test_williams_terminal_matches_full_splice():
    cfg = SimConfig(r=1.0, horizon=0.3, dt=1e-3, method="williams")
    k = cfg.n_steps
    for s in range(25):
        w = simulate_williams(cfg, RngStream(3, s))
        c = w.concatenated()
        assert williams_terminal(cfg, RngStream(3, s)) == c.values[k]


def test_williams_cap_completes_with_exact_passage():
    cfg = SimConfig(r=1.0, horizon=0.01, dt=0.01, pre_cap=0.05)
    capped = [simulate_williams(cfg, RngStream(9, s)) for s in range(40)]
    hits = [w for w in capped if w.capped]
    assert hits
    for w in hits:
        assert w.g_grid > 0.05 - 1e-12
        assert np.all(np.diff(w.concatenated().times) > 0)


@pytest.mark.slow
def test_williams_g_grid_matches_exact_g():
    # validates the bridge-corrected crossing: g_grid against exact g draws
    cfg = SimConfig(r=1.0, horizon=0.01, dt=1e-3, pre_cap=20.0, method="williams")
    gg = np.array([simulate_williams(cfg, RngStream(5, s)).g_grid for s in range(2000)])
    _, _, g = sample_g_exact_many(RngStream(6, 0), 1.0, 20_000)
    ks = ks_two_sample(gg, g)
    assert ks.statistic <= ks_critical(len(gg), len(g))


# --- figure 1 ---------------------------------------------------------------

def test_figure1_start_level_six():
    p = simulate_figure1_walk(RngStream(1), steps=0)
    assert list(p.values) == [6.0]


def test_figure1_zero_increments(forced):
    p = simulate_figure1_walk(forced(uniforms=[0.5] * 30), steps=10)
    assert np.all(p.values == 6.0)
    assert list(p.times) == list(range(11))


def test_figure1_full_run_positive():
    p = simulate_figure1_walk(RngStream(7), steps=1200)
    assert len(p.values) == 1201 and p.values.min() > 0


def test_figure1_negative_steps():
    with pytest.raises(ConfigError):
        simulate_figure1_walk(RngStream(7), steps=-1)


# --- summaries --------------------------------------------------------------

def test_summary_constant_path():
    s = path_summary(SamplePath(np.arange(4.0), np.full(4, 2.0)))
    assert s.running_min == 2.0 and s.argmin_time == 0.0 and s.argmin_index == 0


def test_summary_direct_scan():
    s = path_summary(SamplePath(np.arange(4.0), np.array([6.0, 5.0, 4.0, 5.0])))
    assert (s.running_min, s.argmin_time, s.terminal) == (4.0, 2.0, 5.0)


def test_summary_earliest_argmin_on_ties():
    s = path_summary(SamplePath(np.arange(5.0), np.array([3.0, 1.0, 2.0, 1.0, 4.0])))
    assert s.argmin_index == 1


def test_summary_empty():
    with pytest.raises(ValueError):
        path_summary(SamplePath(np.empty(0), np.empty(0)))


@settings(max_examples=100)
@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=50))
def test_summary_properties(vals):
    v = np.array(vals)
    p = SamplePath(np.arange(len(v), dtype=float), v)
    s = path_summary(p)
    assert s.running_min == v[s.argmin_index]
    assert s.argmin_time == p.times[s.argmin_index]
    assert s.running_min <= s.terminal and s.running_min <= v[0]
    assert np.all(np.diff(running_min(v)) <= 0)


# --- determinism ------------------------------------------------------------

@pytest.mark.parametrize("method", ["norm3d", "euler", "williams"])
def test_paths_deterministic(method):
    cfg = SimConfig(r=1.0, horizon=0.05, dt=1e-3, n_paths=3, seed=11, method=method)
    a, b = simulate_paths(cfg), simulate_paths(cfg)
    for x, y in zip(a, b):
        x = x.concatenated() if method == "williams" else x
        y = y.concatenated() if method == "williams" else y
        assert np.array_equal(x.values, y.values)


@pytest.mark.parametrize("method", ["norm3d", "euler", "williams"])
def test_terminal_values_thread_independent(monkeypatch, method):
    cfg = SimConfig(r=1.0, horizon=0.1, dt=1e-3, n_paths=1200, seed=5, method=method)
    monkeypatch.setenv("BES3_THREADS", "1")
    one = terminal_values(cfg)
    monkeypatch.setenv("BES3_THREADS", "4")
    four = terminal_values(cfg)
    assert np.array_equal(one, four)


def test_bad_thread_env(monkeypatch):
    monkeypatch.setenv("BES3_THREADS", "x")
    with pytest.raises(ConfigError):
        terminal_values(SimConfig(horizon=0.01, dt=0.01, n_paths=2))
