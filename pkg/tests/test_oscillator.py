"""Closed-form oscillator ground truth against independent quadrature and MC."""

import math

import numpy as np
import pytest
from scipy import integrate as scipy_integrate

from stochmech import oscillator as osc
from stochmech import sde
from stochmech import wavefunction as wf
from stochmech.scenarios import GaussianInitialSampler

SCEN = osc.OscillatorScenario(nu=0.5, t0=0.0)


# ---------------------------------------------------------------------------
# gamma
# ---------------------------------------------------------------------------

def test_gamma_vanishes_at_start():
    assert osc.gamma(0.0, SCEN) == 0.0
    scen2 = osc.OscillatorScenario(nu=0.25, t0=1.5)
    assert osc.gamma(1.5, scen2) == 0.0


def test_gamma_closed_form_value():
    # tau = 1, nu = 1/2: pi/4 - ln(2)/2
    expected = math.pi / 4.0 - 0.5 * math.log(2.0)
    assert osc.gamma(1.0, SCEN) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("nu", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("t", [0.3, 1.0, 4.0, 20.0])
def test_gamma_matches_quadrature_of_rate(nu, t):
    scen = osc.OscillatorScenario(nu=nu)
    value, err = scipy_integrate.quad(
        lambda s: (2.0 * nu - s) / (1.0 + s * s), 0.0, t, limit=200)
    assert abs(osc.gamma(t, scen) - value) < 1e-10 + 10.0 * err


def test_gamma_asymptote():
    # gamma -> nu pi - ln(1 + tau^2)/2 as tau grows
    tau = 1e6
    expected = 2.0 * SCEN.nu * (math.pi / 2.0) - 0.5 * math.log1p(tau * tau)
    assert abs(osc.gamma(tau, SCEN) - expected) < 2e-6


# ---------------------------------------------------------------------------
# free drift
# ---------------------------------------------------------------------------

def test_free_drift_coincides_with_interacting_drift_at_start():
    x = np.linspace(-3.0, 3.0, 13)
    assert np.allclose(osc.free_drift(x, 0.0, SCEN), -2.0 * SCEN.nu * x, atol=1e-14)


def test_free_drift_zero_at_origin_and_at_balanced_time():
    assert osc.free_drift(0.0, 3.7, SCEN) == 0.0
    # numerator 2 nu - tau vanishes at tau = 2 nu
    x = np.linspace(-5.0, 5.0, 11)
    assert np.allclose(osc.free_drift(x, 2.0 * SCEN.nu, SCEN), 0.0, atol=1e-14)


def test_ground_drift_matches_wavefunction_route():
    field = wf.drift(wf.harmonic_ground_state(), SCEN.nu)
    x = np.linspace(-4.0, 4.0, 17)
    assert np.allclose(osc.ground_drift(x, SCEN), field(x, 0.0), atol=1e-14)


def test_free_drift_matches_wavefunction_route():
    field = wf.drift(wf.free_gaussian_state(time=0.0, t0=0.0), SCEN.nu)
    x = np.linspace(-4.0, 4.0, 17)
    for t in (0.0, 0.8, 2.5, 10.0):
        assert np.allclose(osc.free_drift(x, t, SCEN), field(x, t), atol=1e-12)


def test_free_drift_matches_finite_difference_of_fields():
    state = wf.free_gaussian_state(time=2.2, t0=0.0)
    dec = wf.decompose(state)
    x = np.linspace(-3.0, 3.0, 21)
    h = 1e-6
    dr = (dec.R(x + h) - dec.R(x - h)) / (2.0 * h)
    ds = (dec.S(x + h) - dec.S(x - h)) / (2.0 * h)
    expected = 2.0 * SCEN.nu * dr + ds
    assert np.max(np.abs(osc.free_drift(x, 2.2, SCEN) - expected)) < 1e-8


# ---------------------------------------------------------------------------
# coupled path closed form
# ---------------------------------------------------------------------------

def _simulate_base(params, x0=0.5):
    field = wf.drift(wf.harmonic_ground_state(), params.nu)
    return sde.integrate(field, x0, params)


def test_closed_form_trivial_cases():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=1.0, seed=1)
    zeros = np.zeros(params.steps)
    field = wf.drift(wf.harmonic_ground_state(), params.nu)
    path = sde.integrate(field, 0.0, params, increments=zeros)
    xf = osc.coupled_path_closed_form(path, SCEN)
    assert np.allclose(xf, 0.0, atol=1e-15)
    path2 = _simulate_base(params, x0=0.8)
    xf2 = osc.coupled_path_closed_form(path2, SCEN)
    assert xf2[0] == pytest.approx(0.8, abs=1e-14)


def test_closed_form_agrees_with_co_integration_at_order_dt():
    interacting = wf.drift(wf.harmonic_ground_state(), SCEN.nu)
    free = wf.drift(wf.free_gaussian_state(time=0.0, t0=0.0), SCEN.nu)
    devs = {}
    for dt in (2e-3, 1e-3):
        params = sde.SimParams(nu=SCEN.nu, dt=dt, horizon=5.0, seed=71)
        per_path = []
        for index in range(10):
            path = _simulate_base(params.with_path_index(index))
            pair = sde.co_integrate((interacting, free), path)
            cf = osc.coupled_path_closed_form(path, SCEN)
            per_path.append(np.max(np.abs(pair.free_positions - cf)))
        devs[dt] = np.mean(per_path)
    c_coarse = devs[2e-3] / 2e-3
    c_fine = devs[1e-3] / 1e-3
    assert 0.5 < c_coarse / c_fine < 1.5
    assert devs[1e-3] < 0.05


def test_closed_form_matrix_matches_per_path():
    params = sde.SimParams(nu=SCEN.nu, dt=1e-3, horizon=2.0, seed=77)
    paths = [_simulate_base(params.with_path_index(i), x0=0.1 * i) for i in range(4)]
    matrix = np.stack([p.positions for p in paths], axis=1)

    class Stacked:
        times = paths[0].times
        positions = matrix

    combined = osc.coupled_path_closed_form(Stacked, SCEN)
    for i, p in enumerate(paths):
        assert np.allclose(combined[:, i], osc.coupled_path_closed_form(p, SCEN),
                           atol=1e-14)


# ---------------------------------------------------------------------------
# momentum integral
# ---------------------------------------------------------------------------

def test_momentum_integral_of_zero_path():
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=2.0, seed=5)
    zeros = np.zeros(params.steps)
    field = wf.drift(wf.harmonic_ground_state(), params.nu)
    path = sde.integrate(field, 0.0, params, increments=zeros)
    assert osc.momentum_integral(path, SCEN) == 0.0


def test_momentum_integral_report_tail_estimate():
    params = sde.SimParams(nu=0.5, dt=5e-3, horizon=50.0, seed=6)
    path = _simulate_base(params)
    value, tail = osc.momentum_integral_report(path, SCEN)
    assert value == pytest.approx(osc.momentum_integral(path, SCEN), abs=1e-12)
    closed = osc.momentum_tail_std(50.0, SCEN)
    assert tail == pytest.approx(closed, rel=0.25)


def test_integral_variance_against_brute_force_double_quadrature():
    scen = osc.OscillatorScenario(nu=0.5)
    horizon = 5.0

    def weight(t):
        g = 2.0 * scen.nu * math.atan(t) - 0.5 * math.log1p(t * t)
        gp = (2.0 * scen.nu - t) / (1.0 + t * t)
        return math.exp(g) * (2.0 * scen.nu - gp)

    brute, err = scipy_integrate.dblquad(
        lambda s, t: weight(t) * weight(s) * 0.5 * math.exp(-2.0 * scen.nu * abs(t - s)),
        0.0, horizon, 0.0, horizon, epsabs=1e-10)
    brute *= math.exp(-2.0 * scen.nu * math.pi)
    assert osc.integral_variance(horizon, scen, n=4001) == pytest.approx(brute, abs=1e-5)


@pytest.mark.parametrize("nu", [0.25, 0.5, 1.0])
def test_momentum_variance_approaches_one_half(nu):
    # E(P^2) = 1/2 for every nu; the truncated integral sits at 1/2 - 2 nu / T
    scen = osc.OscillatorScenario(nu=nu)
    horizon = 200.0
    value = osc.integral_variance(horizon, scen, n=4001) + 2.0 * nu / horizon
    assert value == pytest.approx(0.5, abs=2e-3)


def test_estimator_second_moments_frozen_values():
    # frozen from an independent quadrature of the same Gaussian functionals
    assert osc.integral_variance(50.0, SCEN) == pytest.approx(0.47981, abs=2e-4)
    assert osc.ratio_variance(50.0, SCEN) == pytest.approx(0.50021, abs=2e-4)
    assert osc.estimator_difference_std(50.0, SCEN) == pytest.approx(0.0202, abs=1e-3)


def test_momentum_integral_variance_monte_carlo():
    # ensemble check of the truncated quadrature against its exact variance
    nu, m, horizon, dt = 0.5, 4000, 50.0, 0.01
    scen = osc.OscillatorScenario(nu=nu)
    params = sde.SimParams(nu=nu, dt=dt, horizon=horizon, seed=404)
    field = wf.drift(wf.harmonic_ground_state(), nu)
    weights = osc.momentum_quadrature_weights(params.times(), scen)
    chunk = sde.simulate_coupled_ensemble(
        field, field, GaussianInitialSampler(sigma=math.sqrt(0.5)),
        params, range(m), time_weights=weights)
    sample_var = chunk.weighted_integral.var(ddof=1)
    expected = osc.integral_variance(horizon, scen)
    stderr = expected * math.sqrt(2.0 / m)
    assert abs(sample_var - expected) < 4.0 * stderr


# ---------------------------------------------------------------------------
# OU covariance
# ---------------------------------------------------------------------------

def test_ou_covariance_closed_form():
    assert osc.ou_covariance(2.0, 2.0, SCEN) == 0.5
    assert osc.ou_covariance(1.0, 2.0, SCEN) == pytest.approx(0.5 * math.exp(-1.0))
    assert osc.ou_covariance(0.0, 200.0, SCEN) < 1e-80


def test_closed_form_with_shifted_start_time():
    # the whole coupling is anchored at t0; nothing may assume t0 = 0
    t0 = 1.5
    scen = osc.OscillatorScenario(nu=0.5, t0=t0)
    params = sde.SimParams(nu=0.5, dt=1e-3, horizon=5.0, t0=t0, seed=83)
    field = wf.drift(wf.harmonic_ground_state(time=t0), 0.5)
    free = wf.drift(wf.free_gaussian_state(time=t0, t0=t0), 0.5)
    path = sde.integrate(field, 0.3, params)
    pair = sde.co_integrate((field, free), path)
    cf = osc.coupled_path_closed_form(path, scen)
    assert np.max(np.abs(pair.free_positions - cf)) < 0.05
    assert osc.gamma(t0, scen) == 0.0
