import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import angular_distance
from kuramoto_epr.ensemble import (
    TWO_PI,
    FrequencyDistribution,
    OscillatorEnsemble,
    init_phases,
    order_parameter,
    parse_init,
    sample_frequencies,
    wrap_phase,
)

phase_lists = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=60)


def test_wrap_phase_never_returns_two_pi():
    assert wrap_phase(-1e-300) == 0.0
    out = wrap_phase(np.array([-1e-300, TWO_PI, 7.0, -0.5]))
    assert np.all((out >= 0) & (out < TWO_PI))


class TestFrequencyDistribution:
    def test_parse_round_trip(self):
        for text in ("delta:1.0", "lorentzian:0.0,0.5", "gaussian:2.0,0.1"):
            assert str(FrequencyDistribution.parse(text)) == text

    @pytest.mark.parametrize("text", ["delta:1,2", "lorentzian:0", "cauchy:0,1", "gaussian:0,-1", "lorentzian:0,0"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            FrequencyDistribution.parse(text)

    @pytest.mark.parametrize("dist", [FrequencyDistribution.lorentzian(0.3, 0.7), FrequencyDistribution.gaussian(-1, 2)])
    def test_even_and_non_increasing(self, dist):
        x = np.linspace(0, 20, 400)
        g_up = dist.pdf(dist.center + x)
        assert np.allclose(g_up, dist.pdf(dist.center - x), rtol=0, atol=1e-15)
        assert np.all(np.diff(g_up) <= 0)


class TestSampleFrequencies:
    def test_delta_is_exact(self):
        assert sample_frequencies(FrequencyDistribution.delta(1.0), 8, seed=3).tolist() == [1.0] * 8

    def test_lorentzian_median(self):
        w = sample_frequencies(FrequencyDistribution.lorentzian(0.0, 0.5), 100_000, seed=11)
        assert abs(np.median(w)) < 0.02

    def test_lorentzian_quartiles_match_inverse_cdf(self):
        # quartiles of a Cauchy(c, gamma) are c -+ gamma
        w = sample_frequencies(FrequencyDistribution.lorentzian(1.0, 0.5), 200_000, seed=5)
        q1, q3 = np.quantile(w, [0.25, 0.75])
        assert abs(q1 - 0.5) < 0.01 and abs(q3 - 1.5) < 0.01

    def test_gaussian_mean(self):
        n, sigma = 100_000, 0.1
        w = sample_frequencies(FrequencyDistribution.gaussian(2.0, sigma), n, seed=12)
        assert abs(w.mean() - 2.0) < 3 * sigma / math.sqrt(n)

    def test_bit_reproducible(self):
        d = FrequencyDistribution.lorentzian(0, 1)
        assert sample_frequencies(d, 1000, seed=4).tobytes() == sample_frequencies(d, 1000, seed=4).tobytes()

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_rejects_bad_count(self, n):
        with pytest.raises(ValueError):
            sample_frequencies(FrequencyDistribution.delta(), n, seed=0)


class TestInitPhases:
    def test_equally_spaced(self):
        assert np.allclose(init_phases("equally_spaced", 4), [0, math.pi / 2, math.pi, 3 * math.pi / 2], atol=0)

    def test_first_harmonic_amplitude(self):
        # integral of e^{i t}(1 + 2a cos t)/2pi over a period is a
        theta = init_phases("first_harmonic", 1_000_000, seed=7, amplitude=0.01)
        assert abs(order_parameter(theta).r - 0.01) < 0.002

    def test_first_harmonic_small_amplitude_resolved(self):
        theta = init_phases("first_harmonic", 8192, seed=1, amplitude=1e-4)
        op = order_parameter(theta)
        assert abs(op.r - 1e-4) < 1e-5
        assert min(op.phi, TWO_PI - op.phi) < 0.1

    def test_first_harmonic_density_histogram(self):
        a = 0.3
        theta = init_phases("first_harmonic", 400_000, seed=2, amplitude=a)
        counts, edges = np.histogram(theta, bins=16, range=(0, TWO_PI))
        # exact bin masses from the CDF (t + 2a sin t)/2pi
        cdf = (edges + 2 * a * np.sin(edges)) / TWO_PI
        expected = np.diff(cdf) * theta.size
        assert np.all(np.abs(counts - expected) < 5 * np.sqrt(expected))

    def test_uniform_random_floor(self):
        n = 1_000_000
        rs = [order_parameter(init_phases("uniform_random", n, seed=s)).r for s in range(5)]
        assert max(rs) < 5 / math.sqrt(n)

    @pytest.mark.parametrize("amp", [None, 0.0, 0.6, 1.0, 2.0])
    def test_first_harmonic_rejects_negative_density(self, amp):
        with pytest.raises(ValueError):
            init_phases("first_harmonic", 10, seed=0, amplitude=amp)

    @pytest.mark.parametrize("mode", ["uniform_random", "first_harmonic"])
    def test_bit_reproducible(self, mode):
        a = init_phases(mode, 500, seed=99, amplitude=0.1)
        b = init_phases(mode, 500, seed=99, amplitude=0.1)
        assert a.tobytes() == b.tobytes()
        assert np.all((a >= 0) & (a < TWO_PI))

    def test_parse_init(self):
        assert parse_init("first_harmonic:1e-4") == ("first_harmonic", 1e-4)
        assert parse_init("equally_spaced") == ("equally_spaced", None)
        for bad in ("first_harmonic", "uniform_random:3", "spiral"):
            with pytest.raises(ValueError):
                parse_init(bad)


class TestOrderParameter:
    def test_identical_phases(self):
        op = order_parameter([1.3] * 7)
        assert op.r == pytest.approx(1.0, abs=1e-15)
        assert op.phi == pytest.approx(1.3, abs=1e-15)

    def test_four_fold_cancels(self):
        assert order_parameter([0, math.pi / 2, math.pi, 3 * math.pi / 2]).r <= 1e-15

    def test_two_quarter_phases(self):
        # (1 + i)/2
        op = order_parameter([0, math.pi / 2])
        assert op.r == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
        assert op.phi == pytest.approx(math.pi / 4, abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            order_parameter([])

    @given(phase_lists)
    def test_r_in_unit_interval(self, phases):
        op = order_parameter(phases)
        assert 0.0 <= op.r <= 1.0
        assert 0.0 <= op.phi < TWO_PI

    @settings(max_examples=200)
    @given(phase_lists, st.floats(-20, 20, allow_nan=False))
    def test_rotation_equivariance(self, phases, delta):
        base = order_parameter(phases)
        moved = order_parameter(np.asarray(phases) + delta)
        assert abs(moved.r - base.r) < 1e-12
        if base.r > 1e-6:
            assert angular_distance(moved.phi, base.phi + delta) < 1e-9


class TestOscillatorEnsemble:
    def test_immutable_and_wrapped(self):
        e = OscillatorEnsemble([-0.5, 7.0], [1.0, 2.0])
        assert np.all((e.phases >= 0) & (e.phases < TWO_PI))
        with pytest.raises(ValueError):
            e.phases[0] = 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            OscillatorEnsemble([0.0, 1.0], [1.0])

    def test_unit_axes_checked(self):
        OscillatorEnsemble([0.0], [1.0], [[1.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            OscillatorEnsemble([0.0], [1.0], [[1.0, 1e-5, 0.0]])

    def test_build_is_deterministic(self):
        d = FrequencyDistribution.gaussian(0, 1)
        a = OscillatorEnsemble.build(300, d, "uniform_random", seed=5)
        b = OscillatorEnsemble.build(300, d, "uniform_random", seed=5)
        assert a.phases.tobytes() == b.phases.tobytes()
        assert a.frequencies.tobytes() == b.frequencies.tobytes()
