"""Pulse parameterization: control knots, spline schedules, laser noise.

A protocol is parameterized by 8 interior knot values for the global Rabi
drive Omega(t) and 8 for the dimensionless detuning factor Delta_G(t) that
multiplies every final detuning. Endpoints are hard pins, not optimized:
Omega(0) = Omega(T) = 0, Delta_G(0) = delta_g0 (negative), Delta_G(T) = 1.
Knots are connected by a natural cubic spline; Omega is clamped at zero
from below after interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .hamiltonians import ground_space, rydberg_diagonal

N_KNOTS = 8
DEFAULT_DELTA_G0 = -1.0
DEFAULT_PLATEAU_FRACTION = 0.3


class ScheduleSignError(ValueError):
    """The detuning factor sign puts |g...g> outside the initial ground space."""


@dataclass(frozen=True)
class ControlVector:
    omega_points: np.ndarray   # 2*pi MHz, values at the 8 interior knots
    delta_points: np.ndarray   # dimensionless Delta_G knot values
    duration: float            # us
    delta_g0: float = DEFAULT_DELTA_G0

    def __post_init__(self):
        if len(self.omega_points) != N_KNOTS or len(self.delta_points) != N_KNOTS:
            raise ValueError(f"expected {N_KNOTS} knots per channel")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    def knot_times(self) -> np.ndarray:
        return self.duration * np.arange(1, N_KNOTS + 1) / (N_KNOTS + 1)


@dataclass(frozen=True)
class NoiseSpec:
    level: float               # multiplicative noise amplitude, e.g. 0.08
    mode: str = "posthoc"      # "posthoc" | "inloop"
    seed: int = 0
    granularity: str = "knot"  # "knot" | "sample"

    def __post_init__(self):
        if not 0.0 <= self.level < 1.0:
            raise ValueError("noise level must be in [0, 1)")
        if self.mode not in ("posthoc", "inloop"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.granularity not in ("knot", "sample"):
            raise ValueError(f"unknown noise granularity {self.granularity!r}")


@dataclass(frozen=True)
class PulseSchedule:
    duration: float
    control: ControlVector
    final_detunings: np.ndarray
    realized_v: np.ndarray
    _omega_spline: CubicSpline
    _delta_spline: CubicSpline

    def omega(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        val = np.maximum(0.0, self._omega_spline(t))
        # the endpoint pins are exact zeros, not spline round-off
        return np.where((t <= 0.0) | (t >= self.duration), 0.0, val)

    def delta_g(self, t) -> np.ndarray:
        return np.asarray(self._delta_spline(t))

    def detunings(self, t) -> np.ndarray:
        """Per-atom Delta_j(t) = Delta_G(t) * Delta_j(T)."""
        return np.multiply.outer(self.delta_g(t), self.final_detunings)

    @property
    def n_atoms(self) -> int:
        return len(self.final_detunings)

    def slew_report(self, samples: int = 2001) -> dict:
        """Max/min over atoms of the peak detuning speed |dDelta_j/dt| (MHz/us).

        Diagnostic only; atoms with zero final detuning are skipped.
        """
        ts = np.linspace(0.0, self.duration, samples)
        peak_rate = float(np.max(np.abs(self._delta_spline(ts, 1))))
        mags = np.abs(self.final_detunings)
        mags = mags[mags > 0]
        if not len(mags):
            return {"max_slew": 0.0, "min_slew": 0.0}
        return {"max_slew": peak_rate * float(mags.max()),
                "min_slew": peak_rate * float(mags.min())}

    def sample_table(self, samples: int = 201) -> np.ndarray:
        ts = np.linspace(0.0, self.duration, samples)
        return np.column_stack([ts, self.omega(ts), self.delta_g(ts)])


def omega_guess(t, duration: float, amplitude: float) -> np.ndarray:
    """Raised-cosine-squared bump: zero at both ends, peak `amplitude` at T/2."""
    phase = np.pi * np.asarray(t, dtype=float) / duration
    return amplitude * (1.0 - np.cos(2.0 * phase)) ** 2 / 4.0


def delta_g_guess(t, duration: float, delta_g0: float, shape: str = "linear",
                  plateau_fraction: float = DEFAULT_PLATEAU_FRACTION) -> np.ndarray:
    """Ramp of the detuning factor from delta_g0 at t=0 to 1 at t=T."""
    u = np.asarray(t, dtype=float) / duration
    if shape == "linear":
        return delta_g0 + (1.0 - delta_g0) * u
    if shape == "flattop":
        rho = plateau_fraction
        return np.where(u <= rho, delta_g0,
                        delta_g0 + (1.0 - delta_g0) * (u - rho) / (1.0 - rho))
    raise ValueError(f"unknown ramp shape {shape!r}")


def initial_guess(duration: float, amplitude: float,
                  delta_g0: float = DEFAULT_DELTA_G0, shape: str = "linear",
                  plateau_fraction: float = DEFAULT_PLATEAU_FRACTION) -> ControlVector:
    """Adiabatic-inspired starting controls, sampled at the 8 interior knots."""
    if duration <= 0 or amplitude <= 0:
        raise ValueError("duration and amplitude must be positive")
    if delta_g0 >= 0:
        # the protocol requires a negative start; flip rather than fail
        delta_g0 = -abs(delta_g0) if delta_g0 > 0 else DEFAULT_DELTA_G0
    t = duration * np.arange(1, N_KNOTS + 1) / (N_KNOTS + 1)
    return ControlVector(
        omega_points=omega_guess(t, duration, amplitude),
        delta_points=delta_g_guess(t, duration, delta_g0, shape, plateau_fraction),
        duration=duration, delta_g0=delta_g0)


def _spline(duration: float, start: float, interior: np.ndarray, end: float) -> CubicSpline:
    ts = np.concatenate([[0.0], duration * np.arange(1, N_KNOTS + 1) / (N_KNOTS + 1),
                         [duration]])
    vals = np.concatenate([[start], interior, [end]])
    return CubicSpline(ts, vals, bc_type="natural")


def build_schedule(cv: ControlVector, final_detunings, realized_v,
                   check_anchor: bool = True) -> PulseSchedule:
    """Spline the knots into a schedule bound to the encoded detunings.

    Verifies the initial-ground-state anchor: at t = 0 (Omega off) the state
    |g...g> must belong to the ground space of the diagonal with detunings
    delta_g0 * Delta(T); otherwise the delta_g0 sign is wrong for this
    encoding and a ScheduleSignError is raised.
    """
    final_detunings = np.asarray(final_detunings, dtype=float)
    realized_v = np.asarray(realized_v, dtype=float)
    omega_spline = _spline(cv.duration, 0.0, np.asarray(cv.omega_points, float), 0.0)
    delta_spline = _spline(cv.duration, cv.delta_g0,
                           np.asarray(cv.delta_points, float), 1.0)
    sched = PulseSchedule(duration=cv.duration, control=cv,
                          final_detunings=final_detunings, realized_v=realized_v,
                          _omega_spline=omega_spline, _delta_spline=delta_spline)
    if check_anchor and len(final_detunings):
        diag0 = rydberg_diagonal(cv.delta_g0 * final_detunings, realized_v)
        _, gs = ground_space(diag0)
        if 0 not in gs:
            raise ScheduleSignError(
                f"|g...g> is not in the t=0 ground space for delta_g0 = {cv.delta_g0}; "
                "the detuning factor must start with the opposite sign")
    return sched


def inject_noise(sched: PulseSchedule, spec: NoiseSpec) -> PulseSchedule:
    """Perturb the laser parameters by per-knot factors (1 + eta).

    eta is uniform on [-level, +level], drawn deterministically from the
    spec seed; endpoint pins are untouched. With granularity "sample" the
    factors multiply a dense sample grid instead and the perturbed curves
    are re-splined through the original knot times.
    """
    if spec.level == 0.0:
        return sched
    rng = np.random.default_rng(spec.seed)
    cv = sched.control
    if spec.granularity == "knot":
        omega_eta = rng.uniform(-spec.level, spec.level, N_KNOTS)
        delta_eta = rng.uniform(-spec.level, spec.level, N_KNOTS)
        noisy = replace(cv,
                        omega_points=cv.omega_points * (1.0 + omega_eta),
                        delta_points=cv.delta_points * (1.0 + delta_eta))
        return build_schedule(noisy, sched.final_detunings, sched.realized_v,
                              check_anchor=False)
    # sample granularity: perturb a dense grid, then refit through knot times
    ts = cv.knot_times()
    omega_eta = rng.uniform(-spec.level, spec.level, len(ts))
    delta_eta = rng.uniform(-spec.level, spec.level, len(ts))
    noisy = replace(cv,
                    omega_points=sched.omega(ts) * (1.0 + omega_eta),
                    delta_points=sched.delta_g(ts) * (1.0 + delta_eta))
    return build_schedule(noisy, sched.final_detunings, sched.realized_v,
                          check_anchor=False)


def export_schedule(sched: PulseSchedule, samples: int = 201) -> dict:
    cv = sched.control
    return {
        "duration_us": sched.duration,
        "delta_g0": cv.delta_g0,
        "knot_times_us": cv.knot_times().tolist(),
        "omega_knots_2pi_mhz": np.asarray(cv.omega_points).tolist(),
        "delta_g_knots": np.asarray(cv.delta_points).tolist(),
        "final_detunings_2pi_mhz": sched.final_detunings.tolist(),
        "slew_mhz_per_us": sched.slew_report(),
        "samples": [[float(t), float(o), float(d)]
                    for t, o, d in sched.sample_table(samples)],
    }
