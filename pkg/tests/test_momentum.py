"""Momentum extraction policies and ensemble collection."""

import math

import numpy as np
import pytest

from stochmech import momentum, sde
from stochmech import wavefunction as wf
from stochmech.scenarios import Scenario


def make_pair(params, free_positions):
    base = sde.SamplePath(times=params.times(),
                          positions=np.zeros(params.steps + 1),
                          increments=np.zeros(params.steps),
                          params=params)
    return sde.CoupledPair(base=base, free_positions=free_positions)


# ---------------------------------------------------------------------------
# estimate_momentum
# ---------------------------------------------------------------------------

def test_ratio_policy_on_straight_line_path():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=2.0, seed=0)
    v = 0.37
    sample = momentum.estimate_momentum(make_pair(params, v * params.times()), "ratio")
    assert sample.value == pytest.approx(v, abs=1e-14)
    assert sample.horizon_used == 2.0
    assert sample.estimator == "ratio"


def test_extrapolated_policy_recovers_asymptote():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=8.0, seed=0)
    a, c = -0.82, 0.6
    free = a * params.times() + c        # ratio(T) = a + c / T exactly
    sample = momentum.estimate_momentum(make_pair(params, free), "extrapolated")
    assert sample.value == pytest.approx(a, abs=1e-10)
    ratio_sample = momentum.estimate_momentum(make_pair(params, free), "ratio")
    assert ratio_sample.value == pytest.approx(a + c / 8.0, abs=1e-12)


def test_unknown_policy_rejected():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=0)
    with pytest.raises(ValueError):
        momentum.estimate_momentum(make_pair(params, params.times()), "midpoint")


# ---------------------------------------------------------------------------
# collect
# ---------------------------------------------------------------------------

OSC = Scenario(kind="oscillator-ground", nu=0.5)


def test_collect_single_path_reproducible():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=2.0, seed=99)
    a = momentum.collect(OSC, params, 1)
    b = momentum.collect(OSC, params, 1)
    assert np.array_equal(a.values, b.values)
    assert list(a.path_indices) == [0]
    assert len(a) == 1


def test_collect_requires_positive_ensemble():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=1)
    with pytest.raises(ValueError):
        momentum.collect(OSC, params, 0)


def test_collect_matches_per_path_estimates():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=2.0, seed=7)
    ensemble = momentum.collect(OSC, params, 3, policy="extrapolated")
    interacting, free = OSC.drift_fields()
    sampler = OSC.initial_sampler()
    for i in range(3):
        p = params.with_path_index(i)
        x0 = sde.draw_initial(p, sampler)
        path = sde.integrate(interacting, x0, p)
        pair = sde.co_integrate((interacting, free), path)
        direct = momentum.estimate_momentum(pair, "extrapolated")
        assert ensemble.values[i] == direct.value


def test_collect_invariant_under_chunking_and_workers():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=11)
    small_chunks = momentum.collect(OSC, params, 7, chunk_size=2)
    one_chunk = momentum.collect(OSC, params, 7, chunk_size=512)
    pooled = momentum.collect(OSC, params, 7, chunk_size=2, workers=2)
    assert np.array_equal(small_chunks.values, one_chunk.values)
    assert np.array_equal(small_chunks.values, pooled.values)


def test_collect_extras_and_provenance():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=13)
    weights = np.ones(params.steps + 1)
    ensemble = momentum.collect(OSC, params, 4, time_weights=weights,
                                record_times=[0.0, 0.5])
    assert ensemble.provenance["scenario"] == "oscillator-ground"
    assert ensemble.provenance["ensemble_size"] == 4
    assert ensemble.extras["recorded_x"].shape == (4, 2)
    assert np.array_equal(ensemble.extras["recorded_x"][:, 0], ensemble.extras["x0"])
    assert np.all(ensemble.extras["out_of_domain"] == 0)
    # unit weights: accumulator equals the plain trapezoid time integral of x
    assert ensemble.extras["weighted_integrals"].shape == (4,)
    samples = ensemble.samples()
    assert [s.path_index for s in samples] == [0, 1, 2, 3]


def test_free_scenario_coupling_is_identity():
    scenario = Scenario(kind="free-gaussian", nu=0.5)
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=17)
    ensemble = momentum.collect(scenario, params, 6)
    assert np.array_equal(ensemble.extras["x_final"], ensemble.extras["xf_final"])


def test_policy_gap_shrinks_with_horizon():
    gaps = {}
    for horizon in (5.0, 10.0):
        params = sde.SimParams(nu=0.5, dt=2e-3, horizon=horizon, seed=19)
        ratio = momentum.collect(OSC, params, 150, policy="ratio")
        extrap = momentum.collect(OSC, params, 150, policy="extrapolated")
        gaps[horizon] = np.mean(np.abs(ratio.values - extrap.values))
    assert gaps[10.0] < 0.8 * gaps[5.0]


def test_target_density_is_nu_independent():
    d1 = Scenario(kind="oscillator-ground", nu=0.25).target_density()
    d2 = Scenario(kind="oscillator-ground", nu=1.0).target_density()
    assert np.array_equal(d1.density, d2.density)


def test_chunk_failures_carry_path_indices():
    import dataclasses

    class Exploding:
        def __call__(self, rng):
            raise RuntimeError("sampler blew up")

    bad = dataclasses.replace(OSC)
    object.__setattr__(bad, "initial_sampler", lambda: Exploding())
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=3)
    with pytest.raises(momentum.PathSimulationError) as err:
        momentum.collect(bad, params, 4, chunk_size=2)
    assert err.value.path_indices == (0, 1)
    assert "sampler blew up" in str(err.value)


def test_grid_custom_scenario_runs():
    scenario = Scenario(kind="grid-custom", nu=0.5, grid_extent=(-30.0, 30.0),
                        grid_points=1024)
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=0.5, seed=23)
    ensemble = momentum.collect(scenario, params, 3)
    assert len(ensemble) == 3
    assert np.all(np.isfinite(ensemble.values))


def test_free_scenario_variance_tracks_quantum_spreading():
    # |psi_F(t)|^2 has variance (1 + tau^2)/2; the diffusion must track it
    scenario = Scenario(kind="free-gaussian", nu=0.5)
    horizon, m = 2.0, 2000
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=horizon, seed=31)
    ensemble = momentum.collect(scenario, params, m)
    expected = 0.5 * (1.0 + horizon ** 2)
    sample_var = ensemble.extras["x_final"].var(ddof=1)
    assert abs(sample_var - expected) < 4.0 * expected * np.sqrt(2.0 / m)


def test_picard_on_grid_custom_free_drift():
    # exercises the scalar-time fallback of the fixed-point solver
    scenario = Scenario(kind="grid-custom", nu=0.5, grid_extent=(-30.0, 30.0),
                        grid_points=1024)
    interacting, free = scenario.drift_fields()
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=0.5, seed=37)
    path = sde.integrate(interacting, 0.3, params)
    direct = sde.co_integrate((interacting, free), path)
    pair, iterations, history = sde.picard_solve((interacting, free), path)
    assert np.max(np.abs(pair.free_positions - direct.free_positions)) < 1e-8
    assert history[-1] < 1e-10


def test_grid_custom_collect_under_process_pool(tmp_path):
    from stochmech import wavefunction as wf
    state_path = tmp_path / "state.tsv"
    wf.write_state(wf.to_grid(wf.harmonic_ground_state(), extent=(-30.0, 30.0),
                              points=512), state_path)
    scenario = Scenario(kind="grid-custom", nu=0.5, grid_extent=(-30.0, 30.0),
                        grid_points=512, state_file=str(state_path))
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=0.2, seed=41)
    serial = momentum.collect(scenario, params, 4, chunk_size=2)
    pooled = momentum.collect(scenario, params, 4, chunk_size=2, workers=2)
    assert np.array_equal(serial.values, pooled.values)


def test_grid_custom_drifts_match_analytic_oscillator():
    # the tabulated ground state must reproduce the analytic drift pair
    scenario = Scenario(kind="grid-custom", nu=0.5, grid_extent=(-30.0, 30.0),
                        grid_points=2048)
    grid_int, grid_free = scenario.drift_fields()
    ana_int, ana_free = OSC.drift_fields()
    x = np.linspace(-3.0, 3.0, 31)
    assert np.max(np.abs(grid_int(x, 0.0) - ana_int(x, 0.0))) < 1e-3
    for t in (0.0, 0.5, 1.0):
        assert np.max(np.abs(grid_free(x, t) - ana_free(x, t))) < 1e-3
    # identical base path: the co-integrated free paths stay close
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=29)
    path = sde.integrate(ana_int, 0.4, params)
    pair_grid = sde.co_integrate((grid_int, grid_free), path)
    pair_ana = sde.co_integrate((ana_int, ana_free), path)
    assert np.max(np.abs(pair_grid.free_positions - pair_ana.free_positions)) < 5e-3
