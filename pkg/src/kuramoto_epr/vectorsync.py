"""Vector form of the mean-field model.

Geometry: photons travel along z, the A->B axis. Angular-frequency unit
vectors and polarization directions live in the transverse x-y plane, and
an analyzer setting acts as a rotation about z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .ensemble import OscillatorEnsemble, wrap_phase

TRAVEL_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class RotationOperator:
    """Rotation by ``angle`` radians about the travel axis."""

    angle: float

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    def __call__(self, vectors) -> np.ndarray:
        """Rotate one vector of shape (3,) or a stack of shape (n, 3)."""
        return np.asarray(vectors, dtype=float) @ self.matrix.T

    def __matmul__(self, other: "RotationOperator") -> "RotationOperator":
        return RotationOperator(self.angle + other.angle)

    def inverse(self) -> "RotationOperator":
        return RotationOperator(-self.angle)


def rotation(theta: float) -> RotationOperator:
    if not math.isfinite(theta):
        raise ValueError("rotation angle must be finite")
    return RotationOperator(float(theta))


@dataclass(frozen=True)
class EpsilonChain:
    """Analyzer rotations theta'(1 + eps + ... + eps^(k-1)) for k = 1..length."""

    base_angle: float
    epsilon: float
    length: int

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if int(self.length) != self.length or self.length < 1:
            raise ValueError("chain length must be a positive integer")

    @property
    def first_order_angle(self) -> float:
        """theta' + eps theta', the chain truncated at first order in eps."""
        return self.base_angle * (1.0 + self.epsilon)

    @property
    def limit(self) -> float:
        return self.base_angle / (1.0 - self.epsilon)


def chain_angle(chain: EpsilonChain, k: int) -> float:
    """Closed-form geometric sum theta' * (1 - eps^k) / (1 - eps)."""
    if int(k) != k or not (1 <= k <= chain.length):
        raise IndexError(f"chain index {k} outside 1..{chain.length}")
    if chain.epsilon == 0.0:
        return chain.base_angle
    return chain.base_angle * -math.expm1(k * math.log(chain.epsilon)) / (1.0 - chain.epsilon)


@dataclass(frozen=True)
class VectorState:
    """Ensemble with transverse unit axes plus the analyzer chain and coupling.

    ``a_side`` tags the oscillators generated at A (the j population that
    the coupling sum runs over); the rest are B-side. By default every
    oscillator is A-side. A-side oscillators take chain indices 1, 2, ...
    in array order.
    """

    ensemble: OscillatorEnsemble
    chain: EpsilonChain
    K: float
    a_side: Optional[np.ndarray] = None
    full_chain: bool = False

    def __post_init__(self):
        axes = self.ensemble.unit_axes
        if axes is None:
            raise ValueError("vector mode needs unit_axes on the ensemble")
        if np.any(np.abs(axes[:, 2]) > 1e-12):
            raise ValueError("unit axes must lie in the transverse plane (z = 0)")
        mask = np.ones(self.ensemble.n, bool) if self.a_side is None else np.asarray(self.a_side, bool)
        if mask.shape != (self.ensemble.n,) or not mask.any():
            raise ValueError("a_side must tag at least one of the ensemble's oscillators")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "a_side", mask)
        if int(mask.sum()) != self.chain.length:
            raise ValueError(
                f"chain length {self.chain.length} must equal the number of A-side oscillators {int(mask.sum())}"
            )

    def coupling_angles(self) -> np.ndarray:
        """theta'_j for each A-side oscillator, in array order."""
        return np.array([chain_angle(self.chain, k) for k in range(1, self.chain.length + 1)])

    @property
    def mean_rotation(self) -> RotationOperator:
        """The averaged analyzer rotation, L(theta' + eps theta')."""
        return rotation(self.chain.first_order_angle)

    @property
    def own_rotation(self) -> RotationOperator:
        """Rotation applied to each oscillator's own frequency vector.

        Truncated at first order in eps by default; ``full_chain`` uses the
        whole geometric chain up to index N.
        """
        if self.full_chain:
            return rotation(chain_angle(self.chain, self.chain.length))
        return rotation(self.chain.first_order_angle)


class VectorOrder(NamedTuple):
    r: float
    phi: float
    mean_axis: Optional[np.ndarray]
    incoherent: bool


def vector_order_parameter(state: VectorState, tol: float = 1e-14) -> VectorOrder:
    """Order parameter of the complex-weighted, rotated unit axes.

    S = (1/N) sum_j exp(i theta_j) L(theta'_j) w_j over the A-side
    oscillators. ``mean_axis`` is the unit mean of the (unrotated) A-side
    axes, and (r, phi) are modulus and argument of S projected onto
    L(theta' + eps theta') applied to that axis. When the axes cancel, or
    r falls below ``tol``, the state is flagged incoherent with r = 0.
    """
    ens = state.ensemble
    theta = ens.phases[state.a_side]
    axes = ens.unit_axes[state.a_side]
    angles = state.coupling_angles()
    c, s = np.cos(angles), np.sin(angles)
    rotated = np.column_stack([c * axes[:, 0] - s * axes[:, 1], s * axes[:, 0] + c * axes[:, 1], axes[:, 2]])
    S = (np.exp(1j * theta)[:, None] * rotated).mean(axis=0)

    mean = axes.mean(axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < tol:
        return VectorOrder(0.0, 0.0, None, True)
    mean_axis = mean / norm
    z = complex(state.mean_rotation(mean_axis) @ S)
    r = abs(z)
    if r < tol:
        return VectorOrder(0.0, 0.0, mean_axis, True)
    return VectorOrder(min(r, 1.0), wrap_phase(math.atan2(z.imag, z.real)), mean_axis, False)


def resultant_vectors(state: VectorState, order: Optional[VectorOrder] = None) -> np.ndarray:
    """Resultant angular-frequency vectors, one row per oscillator.

    Omega_i = L_own omega_i w_i + K r sin(phi - theta_i) L(theta' + eps theta') w_bar.
    """
    if order is None:
        order = vector_order_parameter(state)
    ens = state.ensemble
    own = state.own_rotation(ens.frequencies[:, None] * ens.unit_axes)
    if order.incoherent or order.mean_axis is None:
        return own
    direction = state.mean_rotation(order.mean_axis)
    weight = state.K * order.r * np.sin(order.phi - ens.phases)
    return own + weight[:, None] * direction


def resultant_speeds(state: VectorState, order: Optional[VectorOrder] = None) -> np.ndarray:
    """Signed component of each resultant vector along its own rotated axis."""
    vectors = resultant_vectors(state, order)
    axes = state.own_rotation(state.ensemble.unit_axes)
    return np.einsum("ij,ij->i", vectors, axes)


def polarization_direction(omega_axis, tol: float = 1e-9) -> np.ndarray:
    """Transverse unit vector perpendicular to ``omega_axis``: z x omega_axis."""
    v = np.asarray(omega_axis, dtype=float)
    if v.shape != (3,):
        raise ValueError("omega_axis must be a 3-vector")
    transverse = math.hypot(v[0], v[1])
    if transverse < tol:
        raise ValueError("polarization is undefined for an axis parallel to the travel axis")
    if abs(v[2]) > tol * max(1.0, transverse):
        raise ValueError(f"omega_axis must be transverse; z-component {v[2]:.3g}")
    return np.array([-v[1], v[0], 0.0]) / transverse


def transverse_axes(angles) -> np.ndarray:
    """Unit vectors (cos a, sin a, 0) for each angle."""
    a = np.atleast_1d(np.asarray(angles, dtype=float))
    return np.column_stack([np.cos(a), np.sin(a), np.zeros_like(a)])
