import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ramansr.core_model import RB87, PhysicalParams, ValidityWarning
from ramansr.dynamics import (
    EliminatedModel,
    KineticModel,
    ModeRates,
    MomentumGrid,
    MultimodeModel,
    ReducedModel,
    ReducedState,
    StateError,
    bloch_invariant,
    eliminate_field,
    quantum_seed,
    rhs_eliminated,
    rhs_kinetic,
    rhs_multimode,
    rhs_reduced,
)
from ramansr.integrator import IntegratorConfig, integrate
from ramansr.thermal import MomentumDistribution, dephasing_envelope, raman_decay_rate, raman_phase_rate

P = PhysicalParams(g2=0.5e6, kappa=1.76e12, N=2.0e6)
G = P.N * P.g2**2 / P.kappa


class TestReducedRhs:
    def test_stationary_point(self):
        assert np.all(rhs_reduced(np.array([0, 0, 1], dtype=complex), P) == 0)

    def test_pump_off_field_decay(self):
        p = P.replace(omega_k=3e5)
        y = np.array([0.2 + 0.1j, 0.3, 0.7], dtype=complex)
        d = rhs_reduced(y, p, pump_on=False)
        assert d[0] == -(1j * p.omega_k + p.kappa) * y[0]
        assert d[2] == 0

    def test_slaved_field_reproduces_eliminated_gain(self):
        rho, r33 = 1e-3 + 2e-4j, 0.8
        y = np.array([eliminate_field(rho, P), rho, r33], dtype=complex)
        full = rhs_reduced(y, P)
        elim = rhs_eliminated(np.array([rho, r33], dtype=complex), P)
        assert full[1] == pytest.approx(elim[0], rel=1e-12)
        assert full[2].real == pytest.approx(elim[1].real, rel=1e-12)

    def test_non_finite(self):
        with pytest.raises(StateError):
            rhs_reduced(np.array([np.nan, 0, 1], dtype=complex), P)


class TestEliminated:
    def test_growth_rate_at_inversion(self):
        d = rhs_eliminated(np.array([1e-3, 1.0], dtype=complex), P)
        assert (d[0] / 1e-3).real == pytest.approx(G)
        assert G == pytest.approx(2.84e5, rel=1e-3)

    def test_zero_coherence(self):
        assert np.all(rhs_eliminated(np.array([0, 0.4], dtype=complex), P) == 0)

    def test_field_examples(self):
        assert eliminate_field(0.0, P) == 0
        assert abs(eliminate_field(0.5, P)) ** 2 == pytest.approx(8.07e-2, rel=1e-3)
        assert abs(eliminate_field(0.5, P.replace(N=2 * P.N))) ** 2 == pytest.approx(4 * abs(eliminate_field(0.5, P)) ** 2)
        with pytest.raises(ValueError):
            eliminate_field(0.1, P.replace(kappa=0.0))

    def test_warns_outside_bad_cavity(self):
        with pytest.warns(ValidityWarning):
            EliminatedModel(P.replace(kappa=1e6))

    def test_tanh_profile(self):
        rho0 = quantum_seed(P.N)
        m = EliminatedModel(P)
        ts = integrate(m, m.initial_state(), IntegratorConfig(t_end=60e-6, rel_tol=1e-10, abs_tol=1e-14))
        C = bloch_invariant(rho0, 1.0)
        sc = math.sqrt(C)
        t0 = math.atanh(0.5 / sc) / (2 * G * sc)
        expect = 0.5 - sc * np.tanh(2 * G * sc * (ts.times - t0))
        assert np.max(np.abs(ts.rho33 - expect)) < 1e-6


class TestBloch:
    def test_examples(self):
        assert bloch_invariant(0.0, 1.0) == 0.25
        assert bloch_invariant(math.sqrt(2 / 2e6), 1.0) == pytest.approx(0.250001, rel=1e-12)
        assert bloch_invariant(0.5, 0.5) == 0.25

    @given(st.floats(0.0, 0.5), st.floats(0.0, 2 * math.pi))
    def test_eliminated_rhs_conserves(self, r, phi):
        r33 = 0.5 + math.sqrt(max(0.0, 0.25 - r * r))
        y = np.array([r * np.exp(1j * phi), r33], dtype=complex)
        d = rhs_eliminated(y, P)
        dC = 2 * (np.conj(y[0]) * d[0]).real + 2 * (r33 - 0.5) * d[1].real
        assert abs(dC) <= 1e-9 * G


class TestEliminatedTrajectories:
    @pytest.fixture(scope="class")
    @staticmethod
    def run():
        m = EliminatedModel(P)
        return m, integrate(m, m.initial_state(), IntegratorConfig(t_end=100e-6, rel_tol=1e-10, abs_tol=1e-14))

    def test_bloch_conservation(self, run):
        m, ts = run
        C = [bloch_invariant(r, z) for r, z in zip(ts.rho[:, 0], ts.rho33)]
        assert np.max(np.abs(np.array(C) - C[0])) < 1e-8

    def test_photon_bookkeeping(self, run):
        m, ts = run
        moved = P.N * (ts.rho33[0] - ts.rho33[-1])
        quad = np.trapezoid(2 * P.kappa * ts.intensity, ts.times)
        assert ts.metrics.emitted_photons == pytest.approx(moved, rel=5e-3)
        assert quad == pytest.approx(moved, rel=5e-3)

    def test_population_non_increasing(self, run):
        assert np.all(np.diff(run[1].rho33) <= 1e-12)

    def test_quantum_seed_overshoot(self, run):
        # the seed sqrt(2/N) at rho33 = 1 lies 2/N outside the Bloch sphere,
        # so the south pole is reached at rho33 = 1/2 - sqrt(C) ~ -1/N
        ts = run[1]
        C = bloch_invariant(quantum_seed(P.N), 1.0)
        assert ts.rho33.min() == pytest.approx(0.5 - math.sqrt(C), abs=1e-9)
        assert ts.rho33.min() >= -2 / P.N

    def test_bounds_on_sphere(self):
        r0 = 1e-3
        y0 = np.array([r0, 0.5 + math.sqrt(0.25 - r0 * r0)], dtype=complex)
        ts = integrate(EliminatedModel(P), y0, IntegratorConfig(t_end=80e-6, rel_tol=1e-10, abs_tol=1e-14))
        assert np.all(ts.rho33 >= -1e-8) and np.all(ts.rho33 <= 1)
        assert np.all(np.abs(ts.rho[:, 0]) ** 2 <= ts.rho33 * (1 - ts.rho33) + 1e-8)

    @pytest.mark.parametrize("kR", [1e4, 1e5])
    def test_bookkeeping_with_decay(self, kR):
        p = P.replace(kappa_R_prime=kR)
        m = EliminatedModel(p)
        ts = integrate(m, m.initial_state(), IntegratorConfig(t_end=200e-6))
        assert ts.metrics.emitted_photons == pytest.approx(P.N * (1 - ts.rho33[-1]), rel=5e-3)

    def test_time_rescaling_collapse(self):
        y0 = np.array([1e-3, 1.0], dtype=complex)
        cfg = dict(rel_tol=1e-12, abs_tol=1e-16, sample_count=401)
        a = integrate(EliminatedModel(P), y0, IntegratorConfig(t_end=60e-6, **cfg))
        b = integrate(EliminatedModel(P.replace(N=2 * P.N)), y0, IntegratorConfig(t_end=30e-6, **cfg))
        dev = np.max(np.abs(a.states - b.states) / np.maximum(np.abs(a.states), 1e-300))
        assert dev < 1e-6


class TestMultimode:
    def test_identical_modes_stay_identical(self):
        modes = [ModeRates(P.kappa, 1e4), ModeRates(P.kappa, 1e4)]
        m = MultimodeModel(P, modes)
        ts = integrate(m, m.initial_state(), IntegratorConfig(t_end=80e-6))
        assert np.array_equal(ts.rho[:, 0], ts.rho[:, 1])

    def test_empty_mode_list(self):
        with pytest.raises(ValueError):
            rhs_multimode(np.array([1.0], dtype=complex), P, [])
        with pytest.raises(ValueError):
            MultimodeModel(P, [])

    def test_single_mode_reduces(self):
        y = np.array([0.01j, 0.002 + 1e-3j, 0.9], dtype=complex)
        d = rhs_multimode(y, P, [ModeRates(P.kappa, P.kappa_R)])
        assert np.allclose(d, rhs_reduced(y, P), rtol=1e-14, atol=0)
        ye = y[1:]
        assert np.allclose(rhs_multimode(ye, P, [ModeRates(P.kappa, 0.0)], eliminated=True), rhs_eliminated(ye, P), rtol=1e-14)

    def test_full_multimode_dimensions(self):
        m = MultimodeModel(P.replace(kappa=1e9, g2=P.g2 * math.sqrt(1e9 / P.kappa)), [ModeRates(1e9, 0.0)] * 2, eliminated=False)
        assert m.initial_state().size == 5


class TestKinetic:
    def test_grid_resolution_error(self):
        d = MomentumDistribution.thermal(RB87, 1e-5)
        with pytest.raises(ValueError, match="need cells >= 321"):
            MomentumGrid.for_distribution(d, cells=161)
        with pytest.raises(ValueError):
            MomentumGrid.for_distribution(d, cells=400)

    def test_grid_symmetric_and_normalised(self):
        g = MomentumGrid.for_distribution(MomentumDistribution.thermal(RB87, 1e-5, "gaussian"))
        assert np.allclose(g.p, -g.p[::-1], atol=0)
        assert math.fsum(g.weights) == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(g.weights, g.weights[::-1])

    def test_delta_matches_reduced(self):
        p = P.replace(kappa=1e9, g2=P.g2 * math.sqrt(1e9 / P.kappa))
        kin = KineticModel(p, MomentumDistribution.bec(RB87), RB87, math.pi / 2)
        # a condensate still picks up the two-photon recoil phase
        red = ReducedModel(p.replace(omega_Gamma=raman_phase_rate(RB87, math.pi / 2)))
        y0 = np.array([0, 1e-3, 1.0], dtype=complex)
        for y in (y0, np.array([1e-4j, 0.01 + 0.002j, 0.6], dtype=complex)):
            assert np.allclose(kin.rhs(y, True), red.rhs(y, True), rtol=1e-14, atol=0)

    @pytest.mark.parametrize("kind", ["lorentzian", "gaussian"])
    def test_free_dephasing_matches_oracle(self, kind):
        T, th = 143e-6, math.pi / 2
        dist = MomentumDistribution.thermal(RB87, T, kind)
        m = KineticModel(P.replace(g2=0.0), dist, RB87, th, eliminated=True)
        Gam = raman_decay_rate(RB87, T, th)
        ts = integrate(m, m.initial_state(1e-3), IntegratorConfig(t_end=5 / Gam, sample_count=81))
        env = dephasing_envelope(dist, th, RB87.k0, ts.times, span=20.0)
        assert np.max(np.abs(ts.rho[:, 0] / 1e-3 - env)) < 1e-3

    def test_lorentzian_gain_matches_reduced(self):
        T, th = 143e-6, math.pi / 2
        dist = MomentumDistribution.thermal(RB87, T)
        Gam = raman_decay_rate(RB87, T, th)
        kin = KineticModel(P, dist, RB87, th, eliminated=True)
        red = EliminatedModel(P.replace(Gamma=Gam))
        cfg = IntegratorConfig(t_end=4e-6, sample_count=201)
        a = integrate(kin, kin.initial_state(), cfg)
        b = integrate(red, red.initial_state(), cfg)
        w = (a.times > 1e-6)
        sa = np.polyfit(a.times[w], np.log(np.abs(a.rho[w, 0])), 1)[0]
        sb = np.polyfit(b.times[w], np.log(np.abs(b.rho[w, 0])), 1)[0]
        assert sa == pytest.approx(sb, rel=0.05)

    def test_population_sums_to_rho33(self):
        dist = MomentumDistribution.thermal(RB87, 1e-6)
        kin = KineticModel(P, dist, RB87, 1.0, eliminated=True)
        y = kin.initial_state()
        assert kin.rho33(y) == pytest.approx(1.0, abs=1e-15)
        d = kin.rhs(y, True)
        assert d.size == y.size

    def test_full_kinetic_layout(self):
        p = P.replace(kappa=1e9, g2=P.g2 * math.sqrt(1e9 / P.kappa))
        kin = KineticModel(p, MomentumDistribution.thermal(RB87, 1e-6), RB87, 1.0)
        y = kin.initial_state()
        d = rhs_kinetic(y, p, kin.grid, kin.phase_rates)
        assert d[0] == pytest.approx(-1j * p.g2 * p.N * quantum_seed(p.N), rel=1e-12)


def test_reduced_state_roundtrip():
    s = ReducedState.seeded(2e6)
    assert s.rho == pytest.approx(math.sqrt(1e-6))
    assert ReducedState.from_array(s.as_array()) == s
    with pytest.raises(ValueError):
        quantum_seed(0.5)
