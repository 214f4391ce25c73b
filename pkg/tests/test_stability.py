import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from ramansr.core_model import RB87, PhysicalParams, ValidityWarning
from ramansr.stability import (
    Regime,
    characteristic_coefficients,
    characteristic_residual,
    characteristic_roots,
    classify_regime,
    instability_factor_badcavity,
    instability_factor_closed,
    linearity_deviation,
    threshold_coherence_decay,
    threshold_pump_coupling,
)

P = PhysicalParams(g2=0.5e6, kappa=1.76e12, N=2.0e6)
DOPPLER = PhysicalParams.thermal(RB87, 143e-6, math.pi / 2, g2=P.g2, kappa=P.kappa, N=P.N)

params = st.builds(
    PhysicalParams,
    g2=st.floats(1e2, 1e7),
    kappa=st.floats(1e3, 1e13),
    kappa_R_prime=st.floats(0.0, 1e7),
    omega_Gamma=st.floats(-1e6, 1e6),
    omega_k=st.floats(-1e6, 1e6),
    N=st.floats(1.0, 1e8),
)


class TestRoots:
    def test_marginal_without_atoms(self):
        r = characteristic_roots(P.replace(N=0.0))
        assert r.S_plus == 0 and r.S_minus == pytest.approx(-P.kappa)
        assert not r.unstable

    def test_reference_value(self):
        r = characteristic_roots(P)
        assert r.instability_factor == pytest.approx(2.841e5, rel=1e-3)
        assert r.instability_factor == pytest.approx(instability_factor_closed(P), rel=1e-9)

    def test_doppler_limit_stable(self):
        assert DOPPLER.kappa_R == pytest.approx(1.35e6, rel=0.02)
        assert characteristic_roots(DOPPLER).instability_factor < 0

    @settings(max_examples=200)
    @given(params)
    def test_residual_and_ordering(self, p):
        r = characteristic_roots(p)
        b, c = characteristic_coefficients(p)
        scale = max(1.0, abs(b), math.sqrt(abs(c))) ** 2
        assert characteristic_residual(p, r.S_plus) < 1e-9 * scale
        assert characteristic_residual(p, r.S_minus) < 1e-9 * scale
        assert r.S_plus.real >= r.S_minus.real

    def test_tie_broken_by_imaginary_part(self):
        r = characteristic_roots(PhysicalParams(N=0.0, kappa=0.0, omega_k=3e5, omega_Gamma=3e5))
        assert r.S_plus.real == r.S_minus.real == 0
        assert r.S_plus.imag > r.S_minus.imag


class TestClosedForm:
    @settings(max_examples=200)
    @given(params)
    def test_matches_roots(self, p):
        p = p.replace(omega_Gamma=0.0, omega_k=0.0)
        a, b = instability_factor_closed(p), characteristic_roots(p).instability_factor
        assert abs(a - b) <= 1e-12 * max(abs(a), abs(b))

    @given(st.floats(1.0, 1e8), st.floats(1e-3, 1e7), st.floats(1e3, 1e13))
    def test_positive_without_decay(self, N, g2, kappa):
        assert instability_factor_closed(PhysicalParams(N=N, g2=g2, kappa=kappa)) > 0

    def test_threshold_zero(self):
        p = P.replace(kappa_R_prime=P.N * P.g2**2 / P.kappa)
        assert abs(instability_factor_closed(p)) < 1e-9 * threshold_coherence_decay(P)


class TestBadCavity:
    def test_reference_value(self):
        assert instability_factor_badcavity(P) == pytest.approx(instability_factor_closed(P), rel=1e-4)

    def test_linear_in_N(self):
        d = instability_factor_badcavity(P.replace(N=2 * P.N)) - instability_factor_badcavity(P)
        assert d == pytest.approx(P.N * P.g2**2 / P.kappa, rel=1e-12)

    def test_threshold(self):
        assert instability_factor_badcavity(P.replace(kappa_R_prime=threshold_coherence_decay(P))) == pytest.approx(0, abs=1e-6)
        assert abs(instability_factor_badcavity(P.replace(kappa_R_prime=2.84e5))) < 1e-3 * 2.84e5

    def test_warns(self):
        with pytest.warns(ValidityWarning):
            instability_factor_badcavity(P.replace(kappa=1e6))


class TestThresholds:
    def test_coherence_decay(self):
        assert threshold_coherence_decay(P) == pytest.approx(2.841e5, rel=1e-3)
        assert threshold_coherence_decay(P.replace(N=4 * P.N)) == pytest.approx(4 * threshold_coherence_decay(P))
        assert DOPPLER.Gamma > threshold_coherence_decay(P)
        with pytest.raises(ValueError):
            threshold_coherence_decay(P.replace(kappa=0.0))

    def test_is_zero_crossing(self):
        f = lambda kR: instability_factor_closed(P.replace(kappa_R_prime=kR))
        root = brentq(f, 0.0, 10 * threshold_coherence_decay(P), xtol=1e-9, rtol=1e-14)
        assert root == pytest.approx(threshold_coherence_decay(P), rel=1e-10)

    def test_pump_coupling(self):
        assert threshold_pump_coupling(P, 0.0) == 0.0
        assert threshold_pump_coupling(P, 1.35e6) == pytest.approx(1.09e6, rel=0.01)
        assert threshold_pump_coupling(P.replace(N=4 * P.N), 1.35e6) == pytest.approx(threshold_pump_coupling(P, 1.35e6) / 2)
        with pytest.raises(ValueError):
            threshold_pump_coupling(P.replace(N=0.5), 1.0)

    def test_pump_coupling_is_threshold(self):
        g = threshold_pump_coupling(DOPPLER)
        assert abs(instability_factor_closed(DOPPLER.replace(g2=g))) < 1e-6 * DOPPLER.kappa_R


class TestRegime:
    def test_superradiant(self):
        assert classify_regime(P, np.logspace(5, 7, 9)) is Regime.SUPERRADIANT

    def test_collective_gain(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            assert classify_regime(P.replace(kappa=1e6), np.logspace(5, 7, 9)) is Regime.COLLECTIVE_GAIN

    def test_doppler_stable(self):
        assert classify_regime(DOPPLER, [2e5, 6e5, 2e6]) is Regime.STABLE

    @settings(max_examples=100)
    @given(params, st.floats(1.0, 1e6))
    def test_stable_iff_not_growing(self, p, n0):
        p = p.replace(omega_Gamma=0.0, omega_k=0.0)
        probe = [n0, 3 * n0, 10 * n0]
        stable = classify_regime(p, probe) is Regime.STABLE
        assert stable == (instability_factor_closed(p.replace(N=probe[-1])) <= 0)

    def test_degenerate_probe(self):
        with pytest.raises(ValueError):
            classify_regime(P, [1e5, 2e5])
        with pytest.raises(ValueError):
            classify_regime(P, [1e5, 2e5, 5e5])

    def test_linearity_deviation(self):
        x = np.array([1.0, 2.0, 5.0, 10.0])
        assert linearity_deviation(x, 3 * x - 1) < 1e-12
        assert linearity_deviation(x, np.sqrt(x)) > 0.05
