"""Wave functions, their log-amplitude/phase split, drift fields, and momentum density.

Natural units throughout (hbar = m = 1).  A wave function psi is represented
either analytically (closed-form log-amplitude R and phase S with their x
derivatives, so psi = exp(R + i S)) or sampled on a uniform grid.  The drift
guiding the position diffusion is

    b(x, t) = 2 nu dR/dx + dS/dx

with nu the diffusion parameter.  Two analytic families are built in: the
harmonic-oscillator ground state (stationary) and the spreading Gaussian that
solves the free equation with the same initial profile.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import GridTooNarrowWarning, NodeEncountered, UnsupportedPotential
from . import tableio

NODE_THRESHOLD = 1e-12          # on |psi| relative to max |psi|
BOUNDARY_AMPLITUDE = 1e-8       # relative edge amplitude that triggers a warning
DEFAULT_EXTENT = (-20.0, 20.0)
DEFAULT_POINTS = 4096


# ---------------------------------------------------------------------------
# Analytic field closures (picklable callables; all take (x, t))
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroField:
    def __call__(self, x, t):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class HarmonicLogAmp:
    """R(x) = -x^2/2 (+ normalization constant), ground state of V = x^2/2."""

    offset: float = 0.0

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        return -0.5 * x * x + self.offset


@dataclass(frozen=True)
class HarmonicLogAmpGrad:
    def __call__(self, x, t):
        return -np.asarray(x, dtype=float)


@dataclass(frozen=True)
class GaussianLogAmp:
    """R of the freely spreading Gaussian: -x^2 / (2 (1 + tau^2)) + const(tau)."""

    t0: float
    normalized: bool

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        tau = t - self.t0
        r = -0.5 * x * x / (1.0 + tau * tau)
        if self.normalized:
            r = r - 0.25 * math.log(math.pi) - 0.25 * math.log1p(tau * tau)
        return r


@dataclass(frozen=True)
class GaussianPhase:
    """S of the freely spreading Gaussian: x^2 tau / (2 (1 + tau^2)) + const(tau)."""

    t0: float
    normalized: bool

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        tau = t - self.t0
        s = 0.5 * x * x * tau / (1.0 + tau * tau)
        if self.normalized:
            s = s - 0.5 * math.atan(tau)
        return s


@dataclass(frozen=True)
class GaussianLogAmpGrad:
    t0: float

    def __call__(self, x, t):
        tau = t - self.t0
        return -np.asarray(x, dtype=float) / (1.0 + tau * tau)


@dataclass(frozen=True)
class GaussianPhaseGrad:
    t0: float

    def __call__(self, x, t):
        tau = t - self.t0
        return np.asarray(x, dtype=float) * (tau / (1.0 + tau * tau))


# ---------------------------------------------------------------------------
# Wave state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveState:
    """A wave function at a fixed time.

    Exactly one representation is populated:

    * ``analytic``: closures ``log_amp``/``phase`` (and their x gradients)
      with signature ``(x, t)``; the state's own time is ``time``.
    * ``grid``: uniform ``grid`` positions with complex ``amplitude`` values.
    """

    representation: str
    time: float
    dimension: int = 1
    potential: str = "free"
    grid: Optional[np.ndarray] = None
    amplitude: Optional[np.ndarray] = None
    log_amp: Optional[Callable] = None
    phase: Optional[Callable] = None
    dlog_amp: Optional[Callable] = None
    dphase: Optional[Callable] = None

    @classmethod
    def from_grid(cls, x, amplitude, time=0.0, potential="custom", normalize=True):
        x = np.asarray(x, dtype=float)
        amplitude = np.asarray(amplitude, dtype=complex)
        if x.ndim != 1 or x.shape != amplitude.shape:
            raise ValueError("grid and amplitude must be matching 1-d arrays")
        if len(x) < 4:
            raise ValueError("grid too short")
        h = x[1] - x[0]
        if not np.allclose(np.diff(x), h, rtol=1e-9, atol=1e-12):
            raise ValueError("grid spacing must be uniform")
        if normalize:
            norm = math.sqrt(h * float(np.sum(np.abs(amplitude) ** 2)))
            if norm == 0.0:
                raise ValueError("cannot normalize a zero amplitude")
            amplitude = amplitude / norm
        return cls(representation="grid", time=float(time), potential=potential,
                   grid=x, amplitude=amplitude)

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def norm(self) -> float:
        """h * sum |psi|^2 for grid states."""
        return self.spacing * float(np.sum(np.abs(self.amplitude) ** 2))

    def psi(self, x):
        """Evaluate the amplitude of an analytic state at positions x."""
        if self.representation != "analytic":
            raise ValueError("psi(x) closure is only available for analytic states")
        r = self.log_amp(x, self.time)
        s = self.phase(x, self.time)
        return np.exp(r + 1j * s)


def harmonic_ground_state(time=0.0, normalized=True) -> WaveState:
    """Ground state of V = x^2/2; drift is -2 nu x, independent of time."""
    offset = -0.25 * math.log(math.pi) if normalized else 0.0
    return WaveState(
        representation="analytic", time=float(time), potential="harmonic",
        log_amp=HarmonicLogAmp(offset), phase=ZeroField(),
        dlog_amp=HarmonicLogAmpGrad(), dphase=ZeroField(),
    )


def free_gaussian_state(time=0.0, t0=0.0, normalized=True) -> WaveState:
    """Freely spreading Gaussian whose profile at t0 matches the oscillator ground state."""
    return WaveState(
        representation="analytic", time=float(time), potential="free",
        log_amp=GaussianLogAmp(t0, normalized), phase=GaussianPhase(t0, normalized),
        dlog_amp=GaussianLogAmpGrad(t0), dphase=GaussianPhaseGrad(t0),
    )


def make_potential_state(potential, kind="analytic-eigenstate", time=0.0,
                         extent=DEFAULT_EXTENT, points=DEFAULT_POINTS) -> WaveState:
    """Build the supported initial state for a named potential.

    ``potential`` is ``"harmonic"`` (ground state of x^2/2) or ``"free"``
    (Gaussian packet).  ``kind`` selects the analytic closure form or a
    normalized sample on a uniform grid.  Arbitrary tabulated states enter
    through :meth:`WaveState.from_grid` / :func:`read_state` instead.
    """
    if potential not in ("harmonic", "free"):
        raise UnsupportedPotential(f"unsupported potential {potential!r}")
    if potential == "harmonic":
        state = harmonic_ground_state(time)
    else:
        state = free_gaussian_state(time, t0=time)
    if kind in ("analytic-eigenstate", "analytic"):
        return state
    if kind == "grid":
        return to_grid(state, extent=extent, points=points)
    raise UnsupportedPotential(f"unsupported state kind {kind!r}")


def to_grid(state: WaveState, extent=DEFAULT_EXTENT, points=DEFAULT_POINTS) -> WaveState:
    """Sample an analytic state onto a uniform grid (normalized)."""
    if state.representation == "grid":
        return state
    x = np.linspace(extent[0], extent[1], points)
    return WaveState.from_grid(x, state.psi(x), time=state.time,
                               potential=state.potential, normalize=True)


# ---------------------------------------------------------------------------
# Decomposition psi = exp(R + i S)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    """R and S fields of a state; callables for analytic states, arrays on the
    support subgrid for grid states."""

    representation: str
    R: object
    S: object
    x: Optional[np.ndarray] = None
    support: Optional[slice] = None


@dataclass(frozen=True)
class _AtTime:
    fn: Callable
    t: float

    def __call__(self, x):
        return self.fn(x, self.t)


def _support_bounds(amps: np.ndarray) -> Tuple[int, int]:
    """Contiguous index range where |psi| exceeds the node threshold.

    Raises NodeEncountered when a sub-threshold point lies strictly inside
    the super-threshold range; amplitude tails outside it are not nodes.
    """
    mags = np.abs(amps)
    mask = mags > NODE_THRESHOLD * float(mags.max())
    idx = np.nonzero(mask)[0]
    lo, hi = int(idx[0]), int(idx[-1])
    if not mask[lo:hi + 1].all():
        raise NodeEncountered("amplitude node inside the evaluation region")
    return lo, hi


def _unwrap_from(angles: np.ndarray, center: int) -> np.ndarray:
    """Cumulative phase unwrap outward from ``center``; adjacent differences
    are folded into (-pi, pi]."""
    d = np.diff(angles)
    w = np.mod(d, 2.0 * np.pi)
    w[w > np.pi] -= 2.0 * np.pi
    out = np.empty_like(angles)
    out[center] = angles[center]
    if center < len(angles) - 1:
        out[center + 1:] = angles[center] + np.cumsum(w[center:])
    if center > 0:
        back = np.cumsum(w[:center][::-1])[::-1]
        out[:center] = angles[center] - back
    return out


def decompose(state: WaveState, region=None) -> Decomposition:
    """Split psi into (R, S) with exp(R + i S) = psi.

    For grid states the evaluation region defaults to the contiguous range
    where |psi| clears the node threshold; an explicit ``region=(a, b)``
    demands the amplitude clear the threshold on all of it.  S is
    phase-unwrapped along the grid, anchored at the node closest to the grid
    center.
    """
    if state.representation == "analytic":
        return Decomposition(
            representation="analytic",
            R=_AtTime(state.log_amp, state.time),
            S=_AtTime(state.phase, state.time),
        )
    amps = state.amplitude
    x = state.grid
    mags = np.abs(amps)
    thr = NODE_THRESHOLD * float(mags.max())
    if region is not None:
        sel = (x >= region[0]) & (x <= region[1])
        idx = np.nonzero(sel)[0]
        if len(idx) == 0:
            raise ValueError("evaluation region contains no grid points")
        if not (mags[idx] > thr).all():
            raise NodeEncountered("amplitude at/below node threshold in evaluation region")
        lo, hi = int(idx[0]), int(idx[-1])
    else:
        lo, hi = _support_bounds(amps)
    sub = slice(lo, hi + 1)
    R = np.log(mags[sub])
    center = int(np.clip(len(x) // 2 - lo, 0, hi - lo))
    S = _unwrap_from(np.angle(amps[sub]), center)
    return Decomposition(representation="grid", R=R, S=S, x=x[sub], support=sub)


# ---------------------------------------------------------------------------
# Drift fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticDriftEvaluator:
    nu: float
    dlog_amp: Callable
    dphase: Callable

    def __call__(self, x, t):
        return 2.0 * self.nu * self.dlog_amp(x, t) + self.dphase(x, t)


@dataclass(frozen=True)
class GridInterpEvaluator:
    """Linear interpolation of tabulated drift values, extrapolating linearly
    from the outermost two nodes beyond the table."""

    xs: np.ndarray
    values: np.ndarray

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.xs, x) - 1, 0, len(self.xs) - 2)
        x0 = self.xs[i]
        slope = (self.values[i + 1] - self.values[i]) / (self.xs[i + 1] - x0)
        return self.values[i] + slope * (x - x0)


class FreeGridDriftEvaluator:
    """Free drift b_F(x, t) for an arbitrary grid initial state.

    The initial spectrum is propagated to the requested time (exact spectral
    free evolution), decomposed, differentiated on the support subgrid, and
    linearly interpolated in x.  Slices are cached per time value (large
    enough that fixed-point sweeps over a short mesh hit the cache).
    """

    _CACHE_SIZE = 512

    def __init__(self, state: WaveState, nu: float):
        grid_state = state if state.representation == "grid" else to_grid(state)
        self.nu = float(nu)
        self.t0 = float(grid_state.time)
        self.x = grid_state.grid
        self.h = grid_state.spacing
        self.spectrum = np.fft.fft(grid_state.amplitude)
        self.k2 = (2.0 * np.pi * np.fft.fftfreq(len(self.x), d=self.h)) ** 2
        self._cache = {}

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state

    def _slice(self, t: float):
        key = float(t)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        tau = key - self.t0
        psi = np.fft.ifft(self.spectrum * np.exp(-0.5j * self.k2 * tau))
        lo, hi = _support_bounds(psi)
        sub = slice(lo, hi + 1)
        R = np.log(np.abs(psi[sub]))
        center = int(np.clip(len(self.x) // 2 - lo, 0, hi - lo))
        S = _unwrap_from(np.angle(psi[sub]), center)
        b = (2.0 * self.nu * np.gradient(R, self.h, edge_order=2)
             + np.gradient(S, self.h, edge_order=2))
        entry = (self.x[sub], b)
        if len(self._cache) >= self._CACHE_SIZE:
            self._cache.pop(next(iter(self._cache)))
        self._cache[key] = entry
        return entry

    def __call__(self, x, t):
        xs, b = self._slice(float(t))
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(xs, x) - 1, 0, len(xs) - 2)
        x0 = xs[i]
        slope = (b[i + 1] - b[i]) / (xs[i + 1] - x0)
        return b[i] + slope * (x - x0)


@dataclass(frozen=True)
class DriftField:
    """Evaluator (position, time) -> drift, tagged with its dynamics kind.

    ``domain`` is the x range the evaluator was tabulated on (grid-backed
    fields only); integrators count excursions beyond it as out-of-domain
    diagnostics.  Instances are immutable and safe to share across paths.
    """

    kind: str                  # "interacting" | "free"
    nu: float
    evaluator: Callable
    domain: Optional[Tuple[float, float]] = None
    label: str = ""

    def __call__(self, x, t):
        return self.evaluator(x, t)


def drift(state: WaveState, nu: float) -> DriftField:
    """Drift field b = 2 nu dR/dx + dS/dx of a state.

    Analytic states yield closed-form evaluators (time dependent for the free
    Gaussian family).  Grid states yield central-difference gradients on the
    support subgrid, interpolated linearly and extrapolated linearly outside;
    they are valid for stationary dynamics only.
    """
    if nu <= 0:
        raise ValueError("nu must be positive")
    kind = "free" if state.potential == "free" else "interacting"
    if state.representation == "analytic":
        ev = AnalyticDriftEvaluator(nu, state.dlog_amp, state.dphase)
        return DriftField(kind=kind, nu=nu, evaluator=ev, label=state.potential)
    dec = decompose(state)
    h = state.spacing
    b = (2.0 * nu * np.gradient(dec.R, h, edge_order=2)
         + np.gradient(dec.S, h, edge_order=2))
    ev = GridInterpEvaluator(xs=dec.x, values=b)
    return DriftField(kind=kind, nu=nu, evaluator=ev,
                      domain=(float(dec.x[0]), float(dec.x[-1])), label=state.potential)


def free_drift_field_from_grid(state: WaveState, nu: float) -> DriftField:
    """Time-dependent free drift for a grid initial state (spectral propagation)."""
    ev = FreeGridDriftEvaluator(state, nu)
    return DriftField(kind="free", nu=nu, evaluator=ev,
                      domain=(float(ev.x[0]), float(ev.x[-1])), label="grid-free")


# ---------------------------------------------------------------------------
# Free propagation and momentum density
# ---------------------------------------------------------------------------

def propagate_free(initial: WaveState, t: float,
                   extent=DEFAULT_EXTENT, points=DEFAULT_POINTS) -> WaveState:
    """Propagate a state under the free equation to absolute time t.

    Spectral evolution on the grid: each Fourier mode picks up the phase
    exp(-i k^2 (t - t0) / 2).  Exactly norm preserving and time reversible.
    Warns (GridTooNarrowWarning) when relative amplitude at either grid edge
    exceeds 1e-8 before or after propagation.
    """
    if t == initial.time:
        return initial
    state = initial if initial.representation == "grid" else to_grid(initial, extent, points)
    tau = t - state.time
    amp = state.amplitude
    k = 2.0 * np.pi * np.fft.fftfreq(len(state.grid), d=state.spacing)
    out = np.fft.ifft(np.fft.fft(amp) * np.exp(-0.5j * k * k * tau))
    edge = max(abs(amp[0]), abs(amp[-1]), abs(out[0]), abs(out[-1]))
    if edge > BOUNDARY_AMPLITUDE * float(np.abs(out).max()):
        warnings.warn(
            f"relative boundary amplitude {edge:.2e} exceeds {BOUNDARY_AMPLITUDE:.0e}; "
            "widen the grid extent", GridTooNarrowWarning)
    return WaveState(representation="grid", time=float(t), potential=state.potential,
                     grid=state.grid, amplitude=out)


@dataclass
class MomentumDensity:
    """Quantum momentum density rho(P) = |psi_hat(P)|^2 / (2 pi) on a P grid."""

    p: np.ndarray
    density: np.ndarray
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        widths = np.diff(self.p)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (self.density[1:] + self.density[:-1]) * widths)))
        self._cdf = cdf

    @property
    def integral(self) -> float:
        return float(self._cdf[-1])

    def cdf(self, values):
        """Cumulative distribution at ``values`` (normalized to end at 1)."""
        return np.interp(values, self.p, self._cdf / self._cdf[-1], left=0.0, right=1.0)

    def ppf(self, u):
        """Inverse CDF by linear interpolation (for sampling from the density)."""
        return np.interp(u, self._cdf / self._cdf[-1], self.p)

    def variance(self) -> float:
        mean = np.trapezoid(self.p * self.density, self.p) / self.integral
        return float(np.trapezoid((self.p - mean) ** 2 * self.density, self.p) / self.integral)


def momentum_density(initial: WaveState, pad_factor=4,
                     extent=DEFAULT_EXTENT, points=DEFAULT_POINTS) -> MomentumDensity:
    """Momentum density of the t0 state via the discrete Fourier transform.

    psi_hat(P) = integral exp(-i P x) psi(x) dx approximated as h times the
    DFT; zero padding by ``pad_factor`` refines the P resolution so the
    numeric CDF is accurate enough for distribution tests.
    """
    state = initial if initial.representation == "grid" else to_grid(initial, extent, points)
    amp = state.amplitude
    n = len(amp) * int(pad_factor)
    h = state.spacing
    padded = np.concatenate([amp, np.zeros(n - len(amp), dtype=complex)])
    p = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, d=h))
    psi_hat = h * np.fft.fftshift(np.fft.fft(padded))
    rho = np.abs(psi_hat) ** 2 / (2.0 * np.pi)
    return MomentumDensity(p=p, density=rho)


# ---------------------------------------------------------------------------
# Serialization (columns: x, re_psi, im_psi / p, rho)
# ---------------------------------------------------------------------------

def write_state(state: WaveState, path) -> None:
    grid_state = state if state.representation == "grid" else to_grid(state)
    tableio.write_table(path, {
        "x": grid_state.grid,
        "re_psi": grid_state.amplitude.real,
        "im_psi": grid_state.amplitude.imag,
    })


def read_state(path, time=0.0, potential="custom", normalize=True) -> WaveState:
    cols = tableio.read_table(path)
    return WaveState.from_grid(cols["x"], cols["re_psi"] + 1j * cols["im_psi"],
                               time=time, potential=potential, normalize=normalize)


def write_density(density: MomentumDensity, path) -> None:
    tableio.write_table(path, {"p": density.p, "rho": density.density})
