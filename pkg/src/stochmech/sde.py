"""Coupled diffusion integration on a shared Wiener process.

The interacting position diffuses as dx = b(x, t) dt + dW with
E(dW^2) = 2 nu dt; the free comparison process uses the same increments:
dx_F = b_F(x_F, t) dt + dW.  Driving both discrete recursions with literally
the same stored increment array makes the shared-noise identity exact in
floating point, which is what the coupling tests rely on.

Randomness is stream split: path ``i`` of master seed ``s`` draws its
increments from the PCG64 stream keyed by ``SeedSequence(s, spawn_key=(i, 0))``
and its initial position from ``spawn_key=(i, 1)``, so every path is a pure
function of (seed, path index) regardless of batching or worker schedule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import NoConvergence
from .wavefunction import DriftField

STREAM_NOISE = 0
STREAM_INITIAL = 1

PICARD_TOL = 1e-10
PICARD_MAX_ITER = 200


@dataclass(frozen=True)
class SimParams:
    """Integration parameters; ``horizon`` must be an exact multiple of ``dt``."""

    nu: float
    dt: float
    horizon: float
    t0: float = 0.0
    seed: int = 0
    path_index: int = 0

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        steps = round(self.horizon / self.dt)
        if steps < 1 or abs(steps * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ValueError("horizon must be an exact multiple of dt")

    @property
    def steps(self) -> int:
        return round(self.horizon / self.dt)

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.steps + 1) * self.dt

    def with_path_index(self, path_index: int) -> "SimParams":
        return SimParams(nu=self.nu, dt=self.dt, horizon=self.horizon,
                         t0=self.t0, seed=self.seed, path_index=path_index)


def path_rng(seed: int, path_index: int, stream: int = STREAM_NOISE) -> np.random.Generator:
    """Independent generator for one (seed, path, stream) triple."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index, stream))
    return np.random.Generator(np.random.PCG64(ss))


def wiener_increments(params: SimParams) -> np.ndarray:
    """The path's Wiener increments: i.i.d. N(0, 2 nu dt), reproducible."""
    rng = path_rng(params.seed, params.path_index, STREAM_NOISE)
    return np.sqrt(2.0 * params.nu * params.dt) * rng.standard_normal(params.steps)


def draw_initial(params: SimParams, sampler: Callable) -> float:
    """Initial position from the scenario's t0 density (separate stream)."""
    rng = path_rng(params.seed, params.path_index, STREAM_INITIAL)
    return float(sampler(rng))


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplePath:
    """One realization on a uniform mesh, with its increments retained.

    positions[k+1] == positions[k] + b(positions[k], times[k]) * dt
                      + increments[k]  holds bit for bit as stored.
    """

    times: np.ndarray
    positions: np.ndarray
    increments: np.ndarray
    params: SimParams
    ood_count: int = 0

    @property
    def dt(self) -> float:
        return self.params.dt


@dataclass(frozen=True)
class CoupledPair:
    """Interacting path plus the free path driven by the same increments."""

    base: SamplePath
    free_positions: np.ndarray
    ood_count_free: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.base.times


def integrate(drift: DriftField, x0: float, params: SimParams,
              increments: Optional[np.ndarray] = None) -> SamplePath:
    """Euler-Maruyama integration of dx = b dt + dW for a single path.

    Excursions outside a grid-backed drift's tabulated domain are counted,
    not fatal (the evaluator extrapolates linearly).
    """
    times = params.times()
    dt = params.dt
    dw = wiener_increments(params) if increments is None else np.asarray(increments)
    if len(dw) != params.steps:
        raise ValueError("increments length does not match params.steps")
    ev = drift.evaluator
    x = np.empty(params.steps + 1)
    x[0] = x0
    ood = 0
    domain = drift.domain
    for k in range(params.steps):
        xk = x[k]
        if domain is not None and not (domain[0] <= xk <= domain[1]):
            ood += 1
        x[k + 1] = xk + ev(xk, times[k]) * dt + dw[k]
    return SamplePath(times=times, positions=x, increments=dw, params=params,
                      ood_count=ood)


def co_integrate(pair_drifts: Tuple[DriftField, DriftField], base: SamplePath) -> CoupledPair:
    """Advance the free process on the base path's increments.

    x_F[k+1] = x_F[k] + b_F(x_F[k], t_k) dt + dW[k] with the stored dW; since
    dW[k] equals x[k+1] - x[k] - b(x[k], t_k) dt exactly as stored, this is the
    discrete shared-noise relation with the interacting drift eliminated, and
    with identical drifts it reproduces the base path bit for bit.  The
    interacting field is accepted for interface symmetry.
    """
    _, free = pair_drifts
    times = base.times
    dt = base.params.dt
    dw = base.increments
    ev = free.evaluator
    xf = np.empty_like(base.positions)
    xf[0] = base.positions[0]
    ood = 0
    domain = free.domain
    for k in range(len(dw)):
        xk = xf[k]
        if domain is not None and not (domain[0] <= xk <= domain[1]):
            ood += 1
        xf[k + 1] = xk + ev(xk, times[k]) * dt + dw[k]
    return CoupledPair(base=base, free_positions=xf, ood_count_free=ood)


def _evaluate_along(drift: DriftField, xs: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """b(x_k, t_k) along a path; falls back to a per-step loop for evaluators
    that need a scalar time (grid-backed free propagation)."""
    try:
        out = np.asarray(drift.evaluator(xs, ts), dtype=float)
        if out.shape == xs.shape:
            return out
    except TypeError:
        pass
    return np.array([float(drift.evaluator(xs[k], ts[k])) for k in range(len(xs))])


def _cumulative_quadrature(g: np.ndarray, dt: float, scheme: str) -> np.ndarray:
    if scheme == "euler":
        out = np.empty_like(g)
        out[0] = 0.0
        np.cumsum(g[:-1] * dt, out=out[1:])
        return out
    if scheme == "trapezoid":
        out = np.empty_like(g)
        out[0] = 0.0
        np.cumsum(0.5 * (g[1:] + g[:-1]) * dt, out=out[1:])
        return out
    raise ValueError(f"unknown quadrature scheme {scheme!r}")


def picard_solve(pair_drifts: Tuple[DriftField, DriftField], base: SamplePath,
                 tol: float = PICARD_TOL, max_iter: int = PICARD_MAX_ITER,
                 quadrature: str = "euler"):
    """Fixed-point construction of the free path from the integral relation

        x_F(t) = x(t) + int_{t0}^{t} [b_F(x_F, s) - b(x, s)] ds

    iterated from x_F = x, with the integral discretized on the path mesh.
    The default left-endpoint ("euler") rule has the co-integration recursion
    as its exact fixed point, so both solvers agree to solver tolerance; the
    "trapezoid" rule matches the integral form more closely but its fixed
    point sits O(dt) away from the co-integrated path.

    Returns (CoupledPair, iterations, residual_history).  Raises
    NoConvergence if the sup-norm update never drops below ``tol``.
    """
    interacting, free = pair_drifts
    x = base.positions
    times = base.times
    dt = base.params.dt
    b_base = _evaluate_along(interacting, x, times)
    y = x.copy()
    history = []
    for iteration in range(1, max_iter + 1):
        g = _evaluate_along(free, y, times) - b_base
        y_new = x + _cumulative_quadrature(g, dt, quadrature)
        residual = float(np.max(np.abs(y_new - y)))
        history.append(residual)
        y = y_new
        if residual < tol:
            pair = CoupledPair(base=base, free_positions=y)
            return pair, iteration, history
    raise NoConvergence(max_iter, history[-1] if history else float("nan"))


def estimate_lipschitz(drift: DriftField, x_range: Tuple[float, float],
                       t_range: Tuple[float, float], n: int = 4096,
                       seed: int = 0) -> float:
    """Empirical Lipschitz constant in x: max |b(x1,t) - b(x2,t)| / |x1 - x2|
    over sampled pairs.  A diagnostic stand-in for the global bound the
    contraction argument assumes."""
    rng = np.random.default_rng(seed)
    x1 = rng.uniform(x_range[0], x_range[1], n)
    x2 = rng.uniform(x_range[0], x_range[1], n)
    keep = np.abs(x1 - x2) > 1e-9
    x1, x2 = x1[keep], x2[keep]
    ts = rng.uniform(t_range[0], t_range[1], len(x1))
    best = 0.0
    for a, b, t in zip(x1, x2, ts):
        num = abs(float(drift.evaluator(a, t)) - float(drift.evaluator(b, t)))
        best = max(best, num / abs(a - b))
    return best


def integrate_batch(drift: DriftField, x0: np.ndarray, params: SimParams,
                    increments: np.ndarray) -> np.ndarray:
    """Euler-Maruyama for many paths at once on caller-supplied increments.

    ``increments`` has shape (steps, n); returns positions (steps+1, n).
    Columns are bit-identical to single-path :func:`integrate` runs on the
    same increment columns.
    """
    times = params.times()
    dt = params.dt
    ev = drift.evaluator
    steps, n = increments.shape
    if steps != params.steps:
        raise ValueError("increments rows must equal params.steps")
    x = np.empty((steps + 1, n))
    x[0] = x0
    for k in range(steps):
        x[k + 1] = x[k] + ev(x[k], times[k]) * dt + increments[k]
    return x


def co_integrate_batch(free: DriftField, base_positions: np.ndarray,
                       params: SimParams, increments: np.ndarray) -> np.ndarray:
    """Free-side co-integration for a batch of base paths (shared increments)."""
    times = params.times()
    dt = params.dt
    ev = free.evaluator
    steps = increments.shape[0]
    xf = np.empty_like(base_positions)
    xf[0] = base_positions[0]
    for k in range(steps):
        xf[k + 1] = xf[k] + ev(xf[k], times[k]) * dt + increments[k]
    return xf


# ---------------------------------------------------------------------------
# Batched ensemble kernel
# ---------------------------------------------------------------------------

@dataclass
class EnsembleChunk:
    """Per-path outputs of one batched run (paths along the last axis)."""

    path_indices: np.ndarray
    x0: np.ndarray
    x_final: np.ndarray
    xf_final: np.ndarray
    checkpoint_indices: np.ndarray
    xf_checkpoints: np.ndarray           # (n_checkpoints, n_paths)
    recorded_indices: np.ndarray
    recorded_x: np.ndarray               # (n_recorded, n_paths)
    weighted_integral: Optional[np.ndarray]
    ood_interacting: np.ndarray
    ood_free: np.ndarray
    positions: Optional[np.ndarray] = None       # (steps+1, n_paths) if stored
    free_positions: Optional[np.ndarray] = None


def simulate_coupled_ensemble(
    interacting: DriftField,
    free: DriftField,
    sampler: Callable,
    params: SimParams,
    path_indices: Sequence[int],
    checkpoint_indices: Sequence[int] = (),
    record_indices: Sequence[int] = (),
    time_weights: Optional[np.ndarray] = None,
    store_paths: bool = False,
    block: int = 4096,
) -> EnsembleChunk:
    """Simulate coupled pairs for many paths at once.

    Per-path streams make the result independent of batching; elementwise
    updates make each column bit-identical to the single-path integrators.
    ``time_weights`` (length steps+1) switches on a running trapezoid
    accumulator of sum w(t) x(t) dt along the interacting path.
    """
    idx = np.asarray(list(path_indices), dtype=int)
    n = len(idx)
    steps = params.steps
    dt = params.dt
    times = params.times()
    scale = np.sqrt(2.0 * params.nu * params.dt)
    ev_i = interacting.evaluator
    ev_f = free.evaluator
    dom_i = interacting.domain
    dom_f = free.domain

    rngs = [path_rng(params.seed, int(i), STREAM_NOISE) for i in idx]
    x0 = np.array([draw_initial(params.with_path_index(int(i)), sampler) for i in idx])

    x = x0.copy()
    xf = x0.copy()
    cp = np.asarray(sorted(set(int(c) for c in checkpoint_indices)), dtype=int)
    rec = np.asarray(sorted(set(int(r) for r in record_indices)), dtype=int)
    xf_cp = np.empty((len(cp), n))
    rec_x = np.empty((len(rec), n))
    cp_pos = {int(c): j for j, c in enumerate(cp)}
    rec_pos = {int(r): j for j, r in enumerate(rec)}
    if 0 in cp_pos:
        xf_cp[cp_pos[0]] = xf
    if 0 in rec_pos:
        rec_x[rec_pos[0]] = x
    ood_i = np.zeros(n, dtype=int)
    ood_f = np.zeros(n, dtype=int)

    weights = None
    acc = None
    if time_weights is not None:
        weights = np.asarray(time_weights, dtype=float)
        if len(weights) != steps + 1:
            raise ValueError("time_weights must have length steps + 1")
        acc = np.zeros(n)
        f_prev = weights[0] * x

    full_x = full_xf = None
    if store_paths:
        full_x = np.empty((steps + 1, n))
        full_xf = np.empty((steps + 1, n))
        full_x[0] = x
        full_xf[0] = xf

    k = 0
    while k < steps:
        m = min(block, steps - k)
        raw = np.empty((n, m))
        for i, rng in enumerate(rngs):
            raw[i] = rng.standard_normal(m)
        dw = np.ascontiguousarray(raw.T) * scale
        for j in range(m):
            t = times[k + j]
            if dom_i is not None:
                ood_i += (x < dom_i[0]) | (x > dom_i[1])
            if dom_f is not None:
                ood_f += (xf < dom_f[0]) | (xf > dom_f[1])
            row = dw[j]
            x = x + ev_i(x, t) * dt + row
            xf = xf + ev_f(xf, t) * dt + row
            knext = k + j + 1
            if weights is not None:
                f_new = weights[knext] * x
                acc += 0.5 * dt * (f_prev + f_new)
                f_prev = f_new
            if store_paths:
                full_x[knext] = x
                full_xf[knext] = xf
            pos = cp_pos.get(knext)
            if pos is not None:
                xf_cp[pos] = xf
            pos = rec_pos.get(knext)
            if pos is not None:
                rec_x[pos] = x
        k += m

    return EnsembleChunk(
        path_indices=idx, x0=x0, x_final=x, xf_final=xf,
        checkpoint_indices=cp, xf_checkpoints=xf_cp,
        recorded_indices=rec, recorded_x=rec_x,
        weighted_integral=acc, ood_interacting=ood_i, ood_free=ood_f,
        positions=full_x, free_positions=full_xf,
    )
