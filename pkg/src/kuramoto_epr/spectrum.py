"""Linear stability of the incoherent state.

The density is perturbed as 1/2pi + eps*eta; only the first Fourier
harmonic c(omega, t) of eta feeds the order parameter, and it obeys

    dc/dt = -i omega c + (K/2) * integral c(nu) g(nu) dnu.

Modes c = b(omega) exp(Omega t) exist when Omega solves the discrete
spectrum equation (K/2) * integral g(nu) / (Omega + i nu) dnu = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .ensemble import TWO_PI, FrequencyDistribution

QUAD_EPSREL = 1e-12
QUAD_EPSABS = 1e-14
ROOT_TOL = 1e-10


class QuadratureError(ArithmeticError):
    pass


def _quad(f: Callable[[float], float], a: float, b: float, **kw) -> float:
    value, err = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500, **kw)
    if not math.isfinite(value) or err > 1e-8 * max(1.0, abs(value)):
        raise QuadratureError(f"quadrature did not converge on [{a}, {b}]: value {value}, error {err}")
    return value


def density_order_parameter(density: Callable[[float], float]) -> complex:
    """r exp(i phi) = integral_0^{2pi} exp(i theta) rho(theta) dtheta, by quadrature."""
    re = _quad(lambda t: math.cos(t) * density(t), 0.0, TWO_PI)
    im = _quad(lambda t: math.sin(t) * density(t), 0.0, TWO_PI)
    return complex(re, im)


def _expect(
    dist: FrequencyDistribution,
    f: Callable[[float], float],
    peaks: Sequence[tuple] = (),
    even: bool = False,
) -> float:
    """integral f(omega) g(omega) domega.

    The line is cut at the distribution's center, at +-1 and +-10 widths,
    and around each ``(location, scale)`` in ``peaks`` so narrow features of
    ``f`` are not stepped over. With ``even`` the integrand is taken to be
    symmetric about the center and only the upper half-line is integrated.
    """
    if dist.is_delta:
        return f(dist.center)
    c, w = dist.center, dist.width
    cuts = {c + k * w for k in (-10, -1, 0, 1, 10)}
    for loc, scale in peaks:
        scale = abs(scale)
        cuts.update(loc + k * scale for k in (-10, -1, 1, 10) if scale > 0)
        cuts.add(loc)
    edges = [-np.inf, *sorted(cuts), np.inf]
    if even:
        edges = [e for e in edges if e >= c]
    g = dist.pdf
    total = sum(_quad(lambda x: f(x) * g(x), a, b) for a, b in zip(edges[:-1], edges[1:]) if a < b)
    return 2.0 * total if even else total


def incoherent_residual(dist: Optional[FrequencyDistribution] = None, n_theta: int = 64) -> float:
    """How far the uniform density 1/2pi is from a stationary solution.

    Returns the larger of |r| for rho = 1/2pi (by quadrature over theta and
    omega) and the largest continuity-equation residual
    |d(rho)/dt + d(rho v)/d(theta)| with v = omega, sampled on a theta grid
    at the distribution's center and +-3 widths.
    """
    dist = dist or FrequencyDistribution.delta(0.0)
    mass = _expect(dist, lambda w: 1.0)
    z = density_order_parameter(lambda t: 1.0 / TWO_PI) * mass
    omegas = [dist.center] if dist.is_delta else [dist.center + k * dist.width for k in (-3, 0, 3)]
    theta = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    h = TWO_PI / n_theta
    worst = 0.0
    for w in omegas:
        flux = np.full_like(theta, w / TWO_PI)
        d_flux = (np.roll(flux, -1) - np.roll(flux, 1)) / (2.0 * h)
        d_rho_dt = 0.0
        worst = max(worst, float(np.max(np.abs(d_rho_dt + d_flux))))
    return max(abs(z), worst)


@dataclass(frozen=True)
class SpectrumResult:
    """Real eigenvalues found, their real-part residuals and imaginary-part sizes."""

    eigenvalues: list
    residuals: list
    imag_parts: list
    distribution: FrequencyDistribution
    K: float
    frame: str = "comoving"
    diagnostic: str = ""
    double_root: list = field(default_factory=list)

    def __bool__(self):
        return bool(self.eigenvalues)

    def to_dict(self) -> dict:
        return {
            "distribution": str(self.distribution),
            "K": self.K,
            "frame": self.frame,
            "eigenvalues": list(self.eigenvalues),
            "residuals": list(self.residuals),
            "imag_parts": list(self.imag_parts),
            "double_root": list(self.double_root),
            "diagnostic": self.diagnostic,
        }


def _require_positive(**kw):
    for name, value in kw.items():
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive, got {value}")


def delta_real_part(omega1: float, K: float, Omega: float) -> float:
    """(K/2) Omega / (Omega^2 + omega1^2) - 1."""
    return 0.5 * K * Omega / (Omega * Omega + omega1 * omega1) - 1.0


def spectrum_delta(omega1: float, K: float) -> SpectrumResult:
    """Real roots of Omega^2 - (K/2) Omega + omega1^2 = 0 for a delta at omega1.

    Empty when (K/2)^2 < 4 omega1^2; the double root omega1 at K = 4 omega1.
    """
    _require_positive(omega1=omega1, K=K)
    half = 0.5 * K
    disc = half * half - 4.0 * omega1 * omega1
    dist = FrequencyDistribution.delta(omega1)
    if disc < 0:
        return SpectrumResult([], [], [], dist, K, "lab", f"no real root: discriminant {disc:.6g} < 0")
    if disc == 0:
        roots = [0.5 * half]
        double = [True]
    else:
        # larger root from the quadratic formula, smaller from Vieta (product = omega1^2)
        big = 0.5 * (half + math.sqrt(disc))
        roots = [big, omega1 * omega1 / big]
        double = [False, False]
    residuals = [delta_real_part(omega1, K, x) for x in roots]
    imag = [-0.5 * K * omega1 / (x * x + omega1 * omega1) for x in roots]
    return SpectrumResult(roots, residuals, imag, dist, K, "lab", "", double)


def real_part_equation(dist: FrequencyDistribution, K: float, Omega: float, shift: float) -> float:
    """(K/2) integral Omega g(v) / (Omega^2 + (v - shift)^2) dv - 1."""
    integrand = lambda v: Omega / (Omega * Omega + (v - shift) ** 2)  # noqa: E731
    return 0.5 * K * _expect(dist, integrand, [(shift, Omega)], even=shift == dist.center) - 1.0


def _real_part_slope(dist: FrequencyDistribution, K: float, Omega: float, shift: float) -> float:
    integrand = lambda v: ((v - shift) ** 2 - Omega * Omega) / (Omega * Omega + (v - shift) ** 2) ** 2  # noqa: E731
    return 0.5 * K * _expect(dist, integrand, [(shift, Omega)], even=shift == dist.center)


def imag_part(dist: FrequencyDistribution, K: float, Omega: float, shift: float) -> float:
    """-(K/2) integral (v - shift) g(v) / (Omega^2 + (v - shift)^2) dv, over the full line."""
    return -0.5 * K * _expect(dist, lambda v: (v - shift) / (Omega * Omega + (v - shift) ** 2), [(shift, Omega)])


def spectrum_general(
    dist: FrequencyDistribution,
    K: float,
    search_interval: Sequence[float] = (1e-6, 100.0),
    *,
    frame: str = "comoving",
    grid: int = 64,
) -> SpectrumResult:
    """Root-find the real part of the discrete spectrum equation.

    In the ``comoving`` frame frequencies are measured from the
    distribution's center, which makes g even about zero so the imaginary
    part vanishes identically; that is the standard form. The ``lab`` frame
    keeps frequencies as given, which for a delta at omega1 reproduces
    :func:`spectrum_delta`.

    The interval is scanned on a geometric grid; sign changes are refined
    with Brent's method and tangential (double) roots are located as zeros
    of the slope where the function touches zero.
    """
    _require_positive(K=K)
    if frame not in ("comoving", "lab"):
        raise ValueError(f"frame must be 'comoving' or 'lab', got {frame!r}")
    lo, hi = map(float, search_interval)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise ValueError(f"search interval must satisfy 0 < lo < hi, got {search_interval}")
    shift = dist.center if frame == "comoving" else 0.0

    def f(x):
        return real_part_equation(dist, K, x, shift)

    def df(x):
        return _real_part_slope(dist, K, x, shift)

    xs = np.geomspace(lo, hi, grid)
    fs = np.array([f(x) for x in xs])
    roots, double = [], []
    for i in range(grid - 1):
        if fs[i] == 0.0:
            roots.append(float(xs[i]))
            double.append(False)
        elif fs[i] * fs[i + 1] < 0:
            roots.append(optimize.brentq(f, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
            double.append(False)
    if fs[-1] == 0.0:
        roots.append(float(xs[-1]))
        double.append(False)
    # tangential roots: an interior extremum of the sampled f, refined as a zero of df
    for i in range(1, grid - 1):
        if (fs[i] - fs[i - 1]) * (fs[i + 1] - fs[i]) > 0:
            continue
        a, b = xs[i - 1], xs[i + 1]
        da, db = df(a), df(b)
        if da * db >= 0:
            continue
        x = optimize.brentq(df, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        if abs(f(x)) < 1e-12 and not any(abs(x - r) < 1e-8 for r in roots):
            roots.append(x)
            double.append(True)
    order = np.argsort(roots)[::-1]
    roots = [float(roots[k]) for k in order]
    double = [double[k] for k in order]
    residuals = [f(x) for x in roots]
    imags = [imag_part(dist, K, x, shift) for x in roots]
    diagnostic = "" if roots else (
        f"no root of the spectrum equation on [{lo:g}, {hi:g}]: f ranges over [{fs.min():.4g}, {fs.max():.4g}]"
    )
    return SpectrumResult(roots, residuals, imags, dist, K, frame, diagnostic, double)


def spectrum_residual(dist: FrequencyDistribution, K: float, Omega: float, frame: str = "comoving") -> complex:
    """Complex residual of (K/2) integral g(v)/(Omega + i v) dv - 1 over the full line.

    Integrates the real and imaginary parts of 1/(Omega + i v) directly,
    without the even-symmetry folding used by the solver.
    """
    shift = dist.center if frame == "comoving" else 0.0

    def part(fn):
        if dist.is_delta:
            return fn(dist.center - shift)
        g = lambda v: dist.pdf(v + shift)  # noqa: E731
        scale = dist.width
        pieces = [(-np.inf, -scale), (-scale, 0.0), (0.0, scale), (scale, np.inf)]
        return sum(_quad(lambda v: fn(v) * g(v), a, b) for a, b in pieces)

    re = part(lambda v: Omega / (Omega * Omega + v * v))
    im = part(lambda v: -v / (Omega * Omega + v * v))
    return complex(0.5 * K * re - 1.0, 0.5 * K * im)


def b_coefficient(A: complex, Omega: float, omega: float) -> complex:
    """Mode profile b(omega) = A / (Omega + i omega)."""
    denom = complex(Omega, omega)
    if denom == 0:
        raise ZeroDivisionError("b(omega) is undefined at Omega = omega = 0")
    return complex(A) / denom


def first_harmonic_rhs(c: np.ndarray, omegas: np.ndarray, weights: np.ndarray, K: float) -> np.ndarray:
    """dc/dt for the first harmonic on a discrete frequency grid with quadrature weights."""
    return -1j * omegas * c + 0.5 * K * np.dot(weights, c)


PAPER_LITERAL = "paper_literal"
DERIVED = "derived"


@dataclass(frozen=True)
class CoherenceTrajectoryParams:
    """Inputs of the linear-theory coherence curve r1(t).

    ``alpha`` is a free phase offset used only by the published-constant form.
    """

    omega1: float
    Omega: float
    alpha: float = 0.0
    mode: str = DERIVED

    def __post_init__(self):
        _require_positive(omega1=self.omega1)
        if self.mode not in (PAPER_LITERAL, DERIVED):
            raise ValueError(f"mode must be {PAPER_LITERAL!r} or {DERIVED!r}, got {self.mode!r}")

    @property
    def amplitude(self) -> float:
        if self.mode == PAPER_LITERAL:
            return math.pi * math.sqrt(5.0) / (2.0 * self.omega1)
        return TWO_PI * abs(b_coefficient(1.0, self.Omega, self.omega1))


def coherence_trajectory(params: CoherenceTrajectoryParams, t):
    """r1(t) with phi = theta = omega1 t.

    paper_literal: (pi sqrt5 / (2 omega1)) e^{Omega t} sin(omega1 t + alpha).
    derived: 2 pi e^{Omega t} Re[b(omega1) e^{i omega1 t}] with A = 1, which
    for Omega = omega1 is (pi sqrt2 / omega1) e^{Omega t} sin(omega1 t + pi/4).
    """
    t = np.asarray(t, dtype=float)
    envelope = np.exp(params.Omega * t)
    w = params.omega1
    if params.mode == PAPER_LITERAL:
        out = params.amplitude * envelope * np.sin(w * t + params.alpha)
    else:
        b = b_coefficient(1.0, params.Omega, w)
        out = TWO_PI * envelope * (b.real * np.cos(w * t) - b.imag * np.sin(w * t))
    return out if out.ndim else float(out)
