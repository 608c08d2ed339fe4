"""CHSH evaluation under the Malus-law correlation model.

Angles are in degrees at the public surface and converted once.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

CLASSICAL_BOUND = 2.0
TSIRELSON = 2.0 * math.sqrt(2.0)


def malus_transmission(phi_rad: float):
    """Fraction cos^2(phi) transmitted through an analyzer at relative angle phi (radians)."""
    c = np.cos(phi_rad)
    return c * c


def correlation(a_deg: float, b_deg: float) -> float:
    """P(a, b) = cos^2 - sin^2 = cos(2 (b - a)), angles in degrees."""
    return math.cos(2.0 * math.radians(b_deg - a_deg))


def chsh_combination(p_ab: float, p_ad: float, p_cd: float, p_cb: float) -> float:
    return abs(p_ab - p_ad) + abs(p_cd + p_cb)


def chsh_value(a: float, b: float, c: float, d: float) -> float:
    """|P(a,b) - P(a,d)| + |P(c,d) + P(c,b)| for analyzer angles in degrees."""
    return chsh_combination(correlation(a, b), correlation(a, d), correlation(c, d), correlation(c, b))


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate of one correlation or of the CHSH value."""

    n_events: int
    value: float
    standard_error: float
    seed: Optional[int]

    def to_dict(self) -> dict:
        return asdict(self)


def _twin_photon_products(a_rad: float, b_rad: float, n: int, rng: np.random.Generator) -> np.ndarray:
    lam = math.pi * rng.random(n)
    alice = np.where(rng.random(n) < malus_transmission(a_rad - lam), 1, -1)
    # Bob's photon is synchronised to Alice's outcome: polarised along a, or a + 90 degrees.
    bob_pol = a_rad + np.where(alice > 0, 0.0, 0.5 * math.pi)
    bob = np.where(rng.random(n) < malus_transmission(b_rad - bob_pol), 1, -1)
    return (alice * bob).astype(np.int8)


def simulate_twin_photons(a: float, b: float, n_events: int, seed=None, block: int = 1 << 20) -> McEstimate:
    """Monte Carlo estimate of P(a, b), angles in degrees.

    Per event: a shared polarization lambda ~ U[0, pi); Alice passes with
    probability cos^2(a - lambda); Bob's photon is then polarised along a
    (Alice passed) or a + 90 degrees (Alice blocked) and passes with the
    Malus probability for that polarization. Outcomes are +-1 and the
    estimate is the mean product. Events are drawn in blocks to bound
    memory; the draw order depends only on the seed.
    """
    if int(n_events) != n_events or n_events < 2:
        raise ValueError(f"n_events must be an integer >= 2, got {n_events}")
    n_events = int(n_events)
    rng = np.random.default_rng(seed)
    a_rad, b_rad = math.radians(a), math.radians(b)
    total = 0
    total_sq = 0
    done = 0
    while done < n_events:
        m = min(block, n_events - done)
        prod = _twin_photon_products(a_rad, b_rad, m, rng)
        total += int(prod.sum(dtype=np.int64))
        total_sq += m  # products are +-1
        done += m
    mean = total / n_events
    var = (total_sq - n_events * mean * mean) / (n_events - 1)
    se = math.sqrt(max(var, 0.0) / n_events)
    return McEstimate(n_events, mean, se, seed if isinstance(seed, int) else None)


@dataclass(frozen=True)
class ChshScenario:
    """Four analyzer angles (degrees) with the analytic correlations and S."""

    a: float
    b: float
    c: float
    d: float

    @property
    def pairs(self) -> dict:
        return {"ab": (self.a, self.b), "ad": (self.a, self.d), "cd": (self.c, self.d), "cb": (self.c, self.b)}

    @property
    def correlations(self) -> dict:
        return {k: correlation(x, y) for k, (x, y) in self.pairs.items()}

    @property
    def S(self) -> float:
        return chsh_value(self.a, self.b, self.c, self.d)

    def monte_carlo(self, n_events: int, seed: int = 0) -> tuple[McEstimate, dict]:
        """S estimated from four independent runs; errors combine in quadrature."""
        children = np.random.SeedSequence(seed).spawn(4)
        runs = {
            key: simulate_twin_photons(x, y, n_events, seed=child)
            for (key, (x, y)), child in zip(self.pairs.items(), children)
        }
        s_hat = chsh_combination(runs["ab"].value, runs["ad"].value, runs["cd"].value, runs["cb"].value)
        se = math.sqrt(sum(r.standard_error**2 for r in runs.values()))
        return McEstimate(n_events, s_hat, se, seed), runs


def deterministic_strategies() -> list:
    """All 16 assignments (A(a), A(c), B(b), B(d)) in {+1, -1}."""
    return list(itertools.product((1, -1), repeat=4))


def strategy_value(strategy: Sequence[int]) -> float:
    Aa, Ac, Bb, Bd = strategy
    return chsh_combination(Aa * Bb, Aa * Bd, Ac * Bd, Ac * Bb)


def mixture_value(weights: Sequence[float]) -> float:
    """CHSH combination of the correlations of a convex mixture of the 16 strategies."""
    w = np.asarray(weights, dtype=float)
    strat = np.array(deterministic_strategies(), dtype=float)
    if w.shape != (len(strat),) or np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=1e-12):
        raise ValueError("weights must be a probability vector over the 16 strategies")
    Aa, Ac, Bb, Bd = strat.T
    return chsh_combination(w @ (Aa * Bb), w @ (Aa * Bd), w @ (Ac * Bd), w @ (Ac * Bb))


def deterministic_bound() -> float:
    """Brute-force maximum of the CHSH combination over local deterministic strategies."""
    return float(max(strategy_value(s) for s in deterministic_strategies()))
