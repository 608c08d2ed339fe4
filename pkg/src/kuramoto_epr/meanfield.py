"""Mean-field Kuramoto dynamics integrated with fixed-step RK4.

Each oscillator obeys d(theta_i)/dt = omega_i + K r sin(phi - theta_i),
with (r, phi) recomputed from the current phases at every RK4 stage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ensemble import OrderParameter, OscillatorEnsemble, order_parameter, wrap_phase

STABILITY_LIMIT = 0.1
LINEAR_REGIME_CAP = 0.1


class NumericalError(ArithmeticError):
    """Integration produced non-finite values or an unusable fit."""


class FitRejected(ValueError):
    """The requested window does not support a growth-rate fit."""


@dataclass(frozen=True)
class SimConfig:
    K: float
    dt: float
    t_end: float
    snapshot_stride: int = 1
    record_phases: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.K) and self.K >= 0):
            raise ValueError(f"coupling K must be >= 0, got {self.K}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def check_stability(frequencies, K: float, dt: float) -> None:
    scale = max(float(np.max(np.abs(frequencies))), K)
    if abs(dt) * scale > STABILITY_LIMIT:
        raise ValueError(
            f"step too large: dt*max(|omega|, K) = {abs(dt) * scale:.4g} exceeds {STABILITY_LIMIT}"
        )


@dataclass(frozen=True)
class Trajectory:
    """Recorded order-parameter history of one run."""

    times: np.ndarray
    r_series: np.ndarray
    phi_series: np.ndarray
    mean_unwrapped_phase: np.ndarray
    n_oscillators: int
    phase_snapshots: Optional[np.ndarray] = None

    def __len__(self):
        return self.times.size


def _velocity(theta: np.ndarray, omega: np.ndarray, K: float) -> np.ndarray:
    # K Im(z e^{-i theta}) == K r sin(phi - theta)
    z = np.exp(1j * theta).mean()
    return omega + K * (z.imag * np.cos(theta) - z.real * np.sin(theta))


def drift_velocity(ensemble: OscillatorEnsemble, op: OrderParameter, K: float) -> np.ndarray:
    """v_i = omega_i + K r sin(phi - theta_i)."""
    return ensemble.frequencies + K * op.r * np.sin(op.phi - ensemble.phases)


def _rk4(theta: np.ndarray, omega: np.ndarray, K: float, dt: float) -> np.ndarray:
    with np.errstate(invalid="ignore", over="ignore"):
        k1 = _velocity(theta, omega, K)
        k2 = _velocity(theta + 0.5 * dt * k1, omega, K)
        k3 = _velocity(theta + 0.5 * dt * k2, omega, K)
        k4 = _velocity(theta + dt * k3, omega, K)
        out = theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise NumericalError(f"non-finite phase at oscillator {bad} (K={K}, dt={dt})")
    return out


def step_rk4(ensemble: OscillatorEnsemble, K: float, dt: float) -> OscillatorEnsemble:
    """Advance every phase by one classical RK4 step of size ``dt``.

    A negative ``dt`` integrates backwards in time. Phases come back
    wrapped to [0, 2pi).
    """
    if dt == 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be finite and nonzero, got {dt}")
    check_stability(ensemble.frequencies, K, dt)
    theta = _rk4(np.asarray(ensemble.phases), np.asarray(ensemble.frequencies), K, dt)
    return ensemble.with_phases(theta)


def simulate(ensemble: OscillatorEnsemble, config: SimConfig) -> Trajectory:
    """Integrate from t=0 to ``config.t_end`` and record every ``snapshot_stride`` steps.

    Phases are carried unwrapped internally so the mean phase can be
    tracked as a continuous drift. Integration runs in the frame rotating
    at the mean natural frequency (an exact symmetry of the dynamics);
    recorded phases are mapped back to the lab frame. This keeps the
    integrated values small, so rounding does not seed the instability
    of the incoherent state.
    """
    omega_lab = np.asarray(ensemble.frequencies)
    check_stability(omega_lab, config.K, config.dt)
    rotation = float(omega_lab.mean())
    omega = omega_lab - rotation
    theta = np.array(ensemble.phases, dtype=float)
    n_steps = config.n_steps
    stride = int(config.snapshot_stride)
    record_at = list(range(0, n_steps + 1, stride))
    if record_at[-1] != n_steps:
        record_at.append(n_steps)
    m = len(record_at)
    times = np.empty(m)
    rs = np.empty(m)
    phis = np.empty(m)
    means = np.empty(m)
    snaps = np.empty((m, theta.size)) if config.record_phases else None

    slot = 0
    for step in range(n_steps + 1):
        if step > 0:
            theta = _rk4(theta, omega, config.K, config.dt)
        if step == record_at[slot]:
            t = step * config.dt
            op = order_parameter(theta)
            times[slot] = t
            rs[slot] = op.r
            phis[slot] = wrap_phase(op.phi + rotation * t)
            means[slot] = theta.mean() + rotation * t
            if snaps is not None:
                snaps[slot] = wrap_phase(theta + rotation * t)
            slot += 1
    return Trajectory(times, rs, phis, means, theta.size, snaps)


def default_fit_window(traj: Trajectory, cap: float = LINEAR_REGIME_CAP) -> tuple[float, float]:
    """From t=0 up to the last sample before r first reaches ``cap``."""
    above = np.flatnonzero(traj.r_series >= cap)
    last = (above[0] - 1) if above.size else traj.times.size - 1
    if last < 2:
        raise FitRejected(f"r reaches the nonlinear regime (r >= {cap}) almost immediately")
    return float(traj.times[0]), float(traj.times[last])


def fit_growth_rate(
    traj: Trajectory,
    window: Optional[Sequence[float]] = None,
    *,
    floor: float = 0.0,
    min_growth: float = 1.0,
    cap: float = LINEAR_REGIME_CAP,
) -> float:
    """Least-squares slope of ln r(t) over ``window``.

    The window must sit in the linear regime: every r strictly between
    ``floor`` and ``cap``, and ln r must rise by at least ``min_growth``
    across it. A run whose r never leaves its starting level (the K=0
    case) therefore fails the growth test and is rejected.

    Raises:
        FitRejected: the window violates any of the above.
    """
    if window is None:
        window = default_fit_window(traj, cap)
    t0, t1 = window
    sel = (traj.times >= t0) & (traj.times <= t1)
    t = traj.times[sel]
    r = traj.r_series[sel]
    if t.size < 3:
        raise FitRejected(f"window [{t0}, {t1}] holds {t.size} samples; need at least 3")
    if np.any(r <= floor):
        raise FitRejected(f"r touches the floor {floor:g} inside the window (min r = {r.min():.3g})")
    if np.any(r >= cap):
        raise FitRejected(f"r leaves the linear regime inside the window (max r = {r.max():.3g} >= {cap})")
    log_r = np.log(r)
    slope, _ = np.polyfit(t, log_r, 1)
    rise = slope * (t[-1] - t[0])
    if not rise >= min_growth:
        raise FitRejected(
            f"r does not rise above its floor: fitted ln-growth {rise:.3g} over the window is below {min_growth}"
        )
    return float(slope)
