"""Delay distributions: cdf/sf consistency, convolution closure, sampling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from freshquery.delays import (
    Deterministic,
    DiscreteAtoms,
    Exponential,
    convolve,
    tail_cdf_shifted,
)

from .conftest import random_atoms


def brute_convolution_atoms(a: DiscreteAtoms, b: DiscreteAtoms) -> dict:
    out: dict[float, float] = {}
    for va, pa in zip(a.values, a.probs):
        for vb, pb in zip(b.values, b.probs):
            out[round(va + vb, 12)] = out.get(round(va + vb, 12), 0.0) + pa * pb
    return out


class TestDiscreteAtoms:
    def test_validation(self):
        with pytest.raises(ValueError):
            DiscreteAtoms([0.0, 1.0], [0.6, 0.6])
        with pytest.raises(ValueError):
            DiscreteAtoms([-0.5], [1.0])
        with pytest.raises(ValueError):
            DiscreteAtoms([1.0, 1.0], [0.5, 0.5])

    def test_cdf_sf_mean(self):
        d = DiscreteAtoms([0.0, 2.0], [0.5, 0.5])
        assert d.cdf(-1e-9) == 0.0
        assert d.cdf(0.0) == pytest.approx(0.5)
        assert d.cdf(1.9) == pytest.approx(0.5)
        assert d.cdf(2.0) == pytest.approx(1.0)
        assert d.sf(1.0) == pytest.approx(0.5)
        assert d.mean() == pytest.approx(1.0)

    def test_deterministic_is_single_atom(self):
        d = Deterministic(0.7)
        assert d.is_atomic
        assert list(d.values) == [0.7]
        assert d.mean() == pytest.approx(0.7)

    def test_integrated_sf_matches_quadrature(self):
        # integrated_sf(x) is the tail integral of the survival function over [x, inf).
        d = DiscreteAtoms([0.3, 1.0, 2.5], [0.2, 0.5, 0.3])
        hi = float(d.values[-1])
        for t in (0.0, 0.5, 1.7, 4.0):
            num, _ = quad(d.sf, t, hi, points=[v for v in d.values if t < v < hi] or None) if t < hi else (0.0, 0.0)
            assert d.integrated_sf(t) == pytest.approx(num, abs=1e-10)


class TestExponential:
    def test_basic(self):
        e = Exponential(2.0)
        assert e.cdf(0.0) == pytest.approx(0.0)
        assert e.sf(1.0) == pytest.approx(math.exp(-2.0))
        assert e.pdf(0.5) == pytest.approx(2.0 * math.exp(-1.0))
        assert e.mean() == pytest.approx(0.5)
        assert not e.is_atomic
        assert e.is_absolutely_continuous

    def test_truncation_covers_tail(self):
        e = Exponential(0.7)
        t = e.truncation(1e-12)
        assert e.sf(t) <= 1e-12

    def test_integrated_sf_closed_form(self):
        e = Exponential(1.5)
        for t in (0.1, 1.0, 5.0):
            assert e.integrated_sf(t) == pytest.approx(math.exp(-1.5 * t) / 1.5, abs=1e-14)


class TestConvolve:
    def test_atoms_with_atoms_worked_case(self):
        y = DiscreteAtoms([0.3, 0.5, 1.0], [0.3, 0.3, 0.4])
        d = DiscreteAtoms([0.0, 2.0], [0.5, 0.5])
        z = convolve(y, d)
        assert z.is_atomic
        expected = brute_convolution_atoms(y, d)
        assert len(z.values) == len(expected)
        for v, p in zip(z.values, z.probs):
            assert p == pytest.approx(expected[round(v, 12)], abs=1e-14)

    def test_atoms_merge_coincident_sums(self):
        z = convolve(DiscreteAtoms([0.0, 1.0], [0.5, 0.5]), DiscreteAtoms([0.0, 1.0], [0.5, 0.5]))
        assert list(z.values) == [0.0, 1.0, 2.0]
        assert np.allclose(z.probs, [0.25, 0.5, 0.25])

    def test_atoms_with_exponential(self):
        y = Exponential(1.2)
        d = DiscreteAtoms([0.0, 2.0], [0.5, 0.5])
        z = convolve(y, d)
        assert not z.is_atomic
        # cdf oracle: mixture of shifted exponentials.
        for t in (0.0, 0.5, 2.0, 3.5):
            want = 0.5 * y.cdf(t) + 0.5 * y.cdf(t - 2.0)
            assert z.cdf(t) == pytest.approx(want, abs=1e-14)
        assert z.mean() == pytest.approx(1.0 / 1.2 + 1.0, abs=1e-12)

    def test_exponential_with_exponential(self):
        z = convolve(Exponential(1.0), Exponential(2.0))
        # Hypoexponential cdf oracle.
        for t in (0.2, 1.0, 3.0):
            want = 1.0 - 2.0 * math.exp(-t) + math.exp(-2.0 * t)
            assert z.cdf(t) == pytest.approx(want, abs=1e-12)
        erl = convolve(Exponential(1.5), Exponential(1.5))
        num, _ = quad(erl.pdf, 0.0, 40.0)
        assert num == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10**6))
    def test_convolution_mean_additivity(self, seed):
        rng = np.random.default_rng(seed)
        a = random_atoms(rng)
        b = random_atoms(rng)
        z = convolve(a, b)
        assert z.mean() == pytest.approx(a.mean() + b.mean(), abs=1e-12)
        assert np.sum(z.probs) == pytest.approx(1.0, abs=1e-12)

    def test_mean_equals_integrated_sf_limit(self):
        for z in (
            convolve(Exponential(1.0), DiscreteAtoms([0.0, 2.0], [0.5, 0.5])),
            convolve(Exponential(1.0), Exponential(2.0)),
        ):
            assert z.integrated_sf(0.0) == pytest.approx(z.mean(), abs=1e-12)


class TestTailCdfShifted:
    def test_convention_below_shift(self):
        z = Exponential(1.0)
        assert tail_cdf_shifted(z, 0.3, 0.5) == 1.0
        assert tail_cdf_shifted(z, 1.5, 0.5) == pytest.approx(math.exp(-1.0))


class TestSampling:
    def test_deterministic(self):
        rng = np.random.default_rng(0)
        s = np.array([Deterministic(0.7).sample(rng) for _ in range(100)])
        assert np.all(s == 0.7)

    def test_atom_frequencies(self):
        rng = np.random.default_rng(1)
        d = DiscreteAtoms([0.0, 2.0], [0.3, 0.7])
        s = np.array([d.sample(rng) for _ in range(10**5)])
        frac = np.mean(s == 0.0)
        assert abs(frac - 0.3) < 4.0 * math.sqrt(0.3 * 0.7 / 10**5)

    def test_exponential_ks(self):
        rng = np.random.default_rng(2)
        e = Exponential(1.7)
        s = np.sort([e.sample(rng) for _ in range(10**5)])
        grid = (np.arange(1, len(s) + 1)) / len(s)
        ks = np.max(np.abs(np.array([e.cdf(v) for v in s]) - grid))
        assert ks < 0.01
