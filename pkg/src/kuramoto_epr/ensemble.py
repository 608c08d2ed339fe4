"""Oscillator populations, frequency distributions and the order parameter."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

TWO_PI = 2.0 * math.pi

_KINDS = ("delta", "lorentzian", "gaussian")
_INIT_MODES = ("uniform_random", "equally_spaced", "first_harmonic")


def wrap_phase(theta):
    """Wrap angles into [0, 2pi).

    ``np.mod`` can return exactly 2pi for tiny negative inputs, so that
    case is folded back to 0.
    """
    wrapped = np.mod(theta, TWO_PI)
    if np.ndim(wrapped) == 0:
        return 0.0 if wrapped >= TWO_PI else float(wrapped)
    wrapped = np.asarray(wrapped, dtype=float)
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


@dataclass(frozen=True)
class FrequencyDistribution:
    """Natural-frequency density g(omega).

    All three kinds are even about ``center`` and non-increasing away from
    it. ``width`` is the Lorentzian half-width gamma or the Gaussian sigma
    and is ignored for the delta.
    """

    kind: str
    center: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {_KINDS}")
        if not math.isfinite(self.center):
            raise ValueError("distribution center must be finite")
        if self.kind == "delta":
            object.__setattr__(self, "width", 0.0)
        elif not (self.width > 0 and math.isfinite(self.width)):
            raise ValueError(f"{self.kind} width must be positive, got {self.width}")

    @classmethod
    def delta(cls, center: float = 0.0) -> "FrequencyDistribution":
        return cls("delta", float(center))

    @classmethod
    def lorentzian(cls, center: float, gamma: float) -> "FrequencyDistribution":
        return cls("lorentzian", float(center), float(gamma))

    @classmethod
    def gaussian(cls, center: float, sigma: float) -> "FrequencyDistribution":
        return cls("gaussian", float(center), float(sigma))

    @classmethod
    def parse(cls, text: str) -> "FrequencyDistribution":
        """Parse ``delta:1``, ``lorentzian:0,0.5`` or ``gaussian:2,0.1``."""
        kind, _, args = text.strip().partition(":")
        kind = kind.strip().lower()
        try:
            values = [float(v) for v in args.split(",") if v.strip()]
        except ValueError as exc:
            raise ValueError(f"bad distribution spec {text!r}") from exc
        if kind == "delta" and len(values) <= 1:
            return cls.delta(values[0] if values else 0.0)
        if kind in ("lorentzian", "gaussian") and len(values) == 2:
            return cls(kind, values[0], values[1])
        raise ValueError(f"bad distribution spec {text!r}")

    def __str__(self):
        if self.kind == "delta":
            return f"delta:{self.center!r}"
        return f"{self.kind}:{self.center!r},{self.width!r}"

    @property
    def is_delta(self) -> bool:
        return self.kind == "delta"

    def pdf(self, omega):
        """Density at ``omega``; undefined (raises) for the delta."""
        if self.is_delta:
            raise ValueError("the delta distribution has no pointwise density")
        x = np.asarray(omega, dtype=float) - self.center
        if self.kind == "lorentzian":
            g = self.width / (math.pi * (x * x + self.width**2))
        else:
            g = np.exp(-0.5 * (x / self.width) ** 2) / (self.width * math.sqrt(TWO_PI))
        return g if np.ndim(g) else float(g)


def _check_count(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ValueError(f"count must be a positive integer, got {n!r}")
    return int(n)


def sample_frequencies(dist: FrequencyDistribution, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` natural frequencies from ``dist``.

    Lorentzian draws use the inverse CDF ``center + gamma*tan(pi*(u - 1/2))``;
    Gaussian draws use numpy's normal generator. Both are bit-reproducible
    for a fixed seed.
    """
    n = _check_count(n)
    if dist.is_delta:
        return np.full(n, dist.center)
    rng = np.random.default_rng(seed)
    if dist.kind == "lorentzian":
        u = rng.random(n)
        return dist.center + dist.width * np.tan(math.pi * (u - 0.5))
    return rng.normal(dist.center, dist.width, size=n)


def _first_harmonic_inverse_cdf(u: np.ndarray, amplitude: float) -> np.ndarray:
    # CDF of (1 + 2a cos t)/2pi is (t + 2a sin t)/2pi, monotone for a <= 1/2.
    target = TWO_PI * u
    lo = np.zeros_like(u)
    hi = np.full_like(u, TWO_PI)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = mid + 2.0 * amplitude * np.sin(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def init_phases(mode: str, n: int, seed=None, amplitude: Optional[float] = None) -> np.ndarray:
    """Initial phases for ``n`` oscillators, wrapped to [0, 2pi).

    Modes:
        uniform_random: i.i.d. uniform phases.
        equally_spaced: theta_k = 2 pi k / n.
        first_harmonic: samples of the density (1 + 2a cos theta)/2pi, whose
            order parameter is ``a``. Inverse-transform sampling with one
            jittered draw per stratum of [0, 1), then shuffled, so the
            sampling noise sits well below the imposed amplitude.
    """
    n = _check_count(n)
    if mode not in _INIT_MODES:
        raise ValueError(f"unknown init mode {mode!r}; expected one of {_INIT_MODES}")
    if mode == "equally_spaced":
        return wrap_phase(TWO_PI * np.arange(n) / n)
    rng = np.random.default_rng(seed)
    if mode == "uniform_random":
        return wrap_phase(TWO_PI * rng.random(n))
    if amplitude is None or not (0.0 < amplitude <= 0.5):
        raise ValueError(
            f"first_harmonic amplitude must lie in (0, 0.5] for a non-negative density, got {amplitude!r}"
        )
    u = (np.arange(n) + rng.random(n)) / n
    theta = _first_harmonic_inverse_cdf(u, amplitude)
    return wrap_phase(rng.permutation(theta))


def parse_init(text: str) -> tuple[str, Optional[float]]:
    """Parse ``uniform_random``, ``equally_spaced`` or ``first_harmonic:1e-4``."""
    mode, _, arg = text.strip().partition(":")
    mode = mode.strip().lower()
    if mode not in _INIT_MODES:
        raise ValueError(f"bad init spec {text!r}")
    if mode == "first_harmonic":
        try:
            return mode, float(arg)
        except ValueError as exc:
            raise ValueError(f"first_harmonic needs an amplitude, e.g. first_harmonic:1e-4 (got {text!r})") from exc
    if arg:
        raise ValueError(f"init mode {mode} takes no argument")
    return mode, None


class OrderParameter(NamedTuple):
    r: float
    phi: float

    @property
    def complex(self) -> complex:
        return self.r * complex(math.cos(self.phi), math.sin(self.phi))


def order_parameter(phases) -> OrderParameter:
    """Modulus and argument of the mean of exp(i theta_j)."""
    theta = np.asarray(phases, dtype=float)
    if theta.size == 0:
        raise ValueError("order parameter of an empty phase set is undefined")
    z = np.exp(1j * theta).mean()
    return OrderParameter(min(abs(z), 1.0), wrap_phase(math.atan2(z.imag, z.real)))


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OscillatorEnsemble:
    """N oscillators: phases, natural frequencies and optional unit axes.

    Arrays are copied and made read-only on construction; phases are
    wrapped to [0, 2pi).
    """

    phases: np.ndarray
    frequencies: np.ndarray
    unit_axes: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        phases = np.atleast_1d(np.asarray(self.phases, dtype=float))
        freqs = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        if phases.ndim != 1 or phases.size == 0:
            raise ValueError("phases must be a non-empty 1-D array")
        if freqs.shape != phases.shape:
            raise ValueError(f"frequencies shape {freqs.shape} does not match phases {phases.shape}")
        if not (np.all(np.isfinite(phases)) and np.all(np.isfinite(freqs))):
            raise ValueError("phases and frequencies must be finite")
        object.__setattr__(self, "phases", _frozen(wrap_phase(phases)))
        object.__setattr__(self, "frequencies", _frozen(freqs))
        if self.unit_axes is not None:
            axes = np.asarray(self.unit_axes, dtype=float)
            if axes.shape != (phases.size, 3):
                raise ValueError(f"unit_axes must have shape ({phases.size}, 3), got {axes.shape}")
            norms = np.linalg.norm(axes, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-12):
                raise ValueError("every unit axis must have norm 1 within 1e-12")
            object.__setattr__(self, "unit_axes", _frozen(axes))

    @property
    def n(self) -> int:
        return self.phases.size

    def with_phases(self, phases) -> "OscillatorEnsemble":
        return OscillatorEnsemble(phases, self.frequencies, self.unit_axes)

    @classmethod
    def build(
        cls,
        n: int,
        dist: FrequencyDistribution,
        init: str = "uniform_random",
        amplitude: Optional[float] = None,
        seed=None,
    ) -> "OscillatorEnsemble":
        """Sample frequencies and phases from independent child seeds."""
        freq_seed, phase_seed = np.random.SeedSequence(seed).spawn(2)
        return cls(
            init_phases(init, n, seed=phase_seed, amplitude=amplitude),
            sample_frequencies(dist, n, seed=freq_seed),
        )
