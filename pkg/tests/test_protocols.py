import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqnmr import oracle
from fqnmr.fluxqubit import QubitParams, field_sensitivity
from fqnmr.protocols import (
    DDParams,
    OutOfRegimeError,
    RamseyParams,
    ac_uncertainty,
    dc_uncertainty,
    dd_filter_factor,
    dd_signal,
    optimize_tau_dd,
    ramsey_detuning,
    ramsey_signal,
)

Q = QubitParams()
GP = field_sensitivity(Q)
TWO_PI = 2 * math.pi


class TestRamsey:
    def test_detuning(self):
        assert ramsey_detuning(1e-10, GP) == pytest.approx(GP * 1e-10)

    def test_worked_example(self):
        p = RamseyParams(1.0, 0.0, 1.0, 1)
        assert ramsey_signal(0.0, p) == 0.5
        assert ramsey_signal(0.05, p) == pytest.approx(0.525, rel=1e-14)

    def test_guard(self):
        p = RamseyParams(1.0, 0.0, 1.0, 1)
        with pytest.raises(OutOfRegimeError):
            ramsey_signal(0.2, p)

    @settings(max_examples=40)
    @given(st.floats(-0.09, 0.09), st.floats(0.0, 3.0), st.floats(0.05, 1.0))
    def test_against_channel_model(self, phase, gamma_tau, vis):
        tau = 1e-6
        p = RamseyParams(tau, gamma_tau / tau, vis, 1)
        exact = oracle.ramsey_bruteforce(phase / tau, tau, p.dephasing, vis)
        # the linear formula drops the cubic term of sin(phase)
        bound = vis * math.exp(-gamma_tau) * abs(phase) ** 3 / 12 + 1e-14
        assert abs(ramsey_signal(phase / tau, p) - exact) <= bound

    def test_uncertainty_value(self):
        p = RamseyParams.from_qubit(Q)
        ref = math.e / (Q.visibility * GP * Q.T2_star * math.sqrt(Q.repetitions))
        assert dc_uncertainty(p, GP) == pytest.approx(ref, rel=1e-14)
        assert dc_uncertainty(p, GP) == pytest.approx(1.2e-10, rel=0.01)

    def test_tau_optimum_is_t2star(self):
        base = RamseyParams.from_qubit(Q)
        taus = base.tau * np.linspace(0.5, 1.5, 1001)
        vals = np.array([dc_uncertainty(base.replace(tau=t), GP) for t in taus])
        d = np.diff(vals)
        changes = np.nonzero(np.diff(np.sign(d)))[0]
        assert changes.size == 1
        assert taus[changes[0] + 1] == pytest.approx(base.tau, rel=2e-3)

    def test_repetition_scaling(self):
        p = RamseyParams.from_qubit(Q)
        assert dc_uncertainty(p.replace(repetitions=4 * p.repetitions), GP) == pytest.approx(
            dc_uncertainty(p, GP) / 2, rel=1e-14)

    def test_zero_visibility_and_sweet_spot(self):
        p = RamseyParams.from_qubit(Q)
        assert dc_uncertainty(p.replace(visibility=0.0), GP) == math.inf
        with pytest.raises(ValueError):
            dc_uncertainty(p, 0.0)

    @pytest.mark.parametrize("kw", [dict(tau=0), dict(dephasing=-1), dict(visibility=2),
                                    dict(repetitions=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            RamseyParams.from_qubit(Q).replace(**kw)


class TestFilterFactor:
    @pytest.mark.parametrize("n", range(1, 13))
    def test_resonance(self, n):
        assert dd_filter_factor(n, TWO_PI) == 4 * n * n

    def test_single_block(self):
        phi = np.linspace(0, 8 * math.pi, 50)
        np.testing.assert_array_equal(dd_filter_factor(1, phi), (np.cos(phi / 2) - 1) ** 2)
        assert dd_filter_factor(1, 0.0) == 0.0

    def test_odd_formula_reduces_to_single_block(self):
        # the odd-n sum is empty at n = 1, leaving the bare echo factor
        phi = np.linspace(0.1, 10, 37)
        s = 1 + 2 * sum(np.cos((i + 1) * phi) for i in range(0))
        np.testing.assert_allclose(s * s * (np.cos(phi / 2) - 1) ** 2, dd_filter_factor(1, phi))

    @settings(max_examples=60)
    @given(st.integers(1, 10), st.floats(-20, 20))
    def test_periodic_even_nonnegative(self, n, phi):
        f = dd_filter_factor(n, phi)
        assert f >= 0
        assert dd_filter_factor(n, -phi) == pytest.approx(f, rel=1e-12, abs=1e-12)
        assert dd_filter_factor(n, phi + 4 * math.pi) == pytest.approx(f, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 8])
    @pytest.mark.parametrize("phi", [0.7, 2.0, TWO_PI, 5.1, 9.3])
    def test_against_unitaries(self, n, phi):
        ref = oracle.dd_filter_factor_bruteforce(n, phi)
        assert dd_filter_factor(n, phi) == pytest.approx(ref, rel=1e-6, abs=1e-8)

    def test_vectorized(self):
        phi = np.linspace(0, 10, 11)
        out = dd_filter_factor(4, phi)
        assert out.shape == phi.shape
        assert isinstance(dd_filter_factor(4, 1.0), float)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            dd_filter_factor(0, 1.0)


class TestDDSignal:
    def ideal(self, n, tau):
        return DDParams(n, tau, 0.0, 1.0, 1)

    def test_no_field(self):
        assert dd_signal(0.0, 1e6, self.ideal(4, 1e-6), GP) == 1.0

    def test_single_block_resonance(self):
        omega, x = 1e6, 1e-3
        b = x * omega / GP
        assert dd_signal(b, omega, self.ideal(1, TWO_PI / omega), GP) == pytest.approx(
            1 - 4 * x * x, rel=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3, 6])
    @pytest.mark.parametrize("initial", ["mixed", "+", "-"])
    def test_against_unitaries(self, n, initial):
        omega, x = 2.5e6, 1e-4
        tau = 3.3 / omega
        got = dd_signal(x * omega / GP, omega, self.ideal(n, tau), GP)
        ref = oracle.dd_signal_bruteforce(omega, x * omega, tau, n, initial)
        assert 1 - got == pytest.approx(1 - ref, rel=1e-6)

    def test_guard(self):
        omega = 1e6
        with pytest.raises(OutOfRegimeError):
            dd_signal(0.3 * omega / GP, omega, self.ideal(1, TWO_PI / omega), GP)

    def test_dephasing_conventions(self):
        p = DDParams(4, 1e-6, 1e5, 1.0, 1)
        assert p.dephasing_time == pytest.approx(4e-6)
        assert p.replace(convention="block").dephasing_time == 1e-6
        assert dd_signal(0.0, 1e6, p, GP) == pytest.approx(0.5 + 0.5 * math.exp(-0.4))
        with pytest.raises(ValueError):
            p.replace(convention="half")

    def test_from_qubit(self):
        p = DDParams.from_qubit(Q, 8, 1e-6)
        assert p.dephasing == pytest.approx(1 / 12.4e-6)
        assert p.repetitions == Q.repetitions


class TestAcUncertainty:
    p = DDParams.from_qubit(Q, 2, 2e-6)
    omega = 1e6

    def test_zero_field(self):
        with pytest.raises(ValueError):
            ac_uncertainty(self.p, GP, self.omega, 0.0)

    def test_zero_visibility(self):
        assert ac_uncertainty(self.p.replace(visibility=0.0), GP, self.omega, 1e-12) == math.inf

    def test_repetition_scaling(self):
        a = ac_uncertainty(self.p, GP, self.omega, 1e-12)
        b = ac_uncertainty(self.p.replace(repetitions=4 * self.p.repetitions), GP, self.omega, 1e-12)
        assert b == pytest.approx(a / 2, rel=1e-14)

    def test_matches_finite_difference(self):
        # P is quadratic in B, so a wide central difference is exact up to rounding
        b = 3e-11
        h = b * 1e-2
        slope = (dd_signal(b + h, self.omega, self.p, GP)
                 - dd_signal(b - h, self.omega, self.p, GP)) / (2 * h)
        pr = dd_signal(b, self.omega, self.p, GP)
        ref = math.sqrt(pr * (1 - pr)) / (abs(slope) * math.sqrt(self.p.repetitions))
        assert ac_uncertainty(self.p, GP, self.omega, b) == pytest.approx(ref, rel=1e-5)


class TestTauOptimizer:
    def test_lossless_resonance(self):
        omega = 4 * math.pi / Q.T2(1)
        for n in (1, 2, 4, 8):
            p = DDParams.from_qubit(Q, n, 1e-6).replace(dephasing=0.0)
            tau, _ = optimize_tau_dd(p, omega, 1e-12, GP)
            assert omega * tau / TWO_PI == pytest.approx(round(omega * tau / TWO_PI), abs=1e-6)
            assert round(omega * tau / TWO_PI) % 2 == 1

    def test_near_half_t2(self):
        # with dephasing the optimum block sits a little below the first resonance
        omega = 4 * math.pi / Q.T2(1)
        tau, _ = optimize_tau_dd(DDParams.from_qubit(Q, 1, 1e-6), omega, 1e-12, GP)
        assert 0.85 < omega * tau / TWO_PI < 1.0

    @pytest.mark.parametrize("n,omega", [(1, 1e6), (4, 2.2e6), (8, 3.1e6), (6, 4e5)])
    def test_local_optimality(self, n, omega):
        p = DDParams.from_qubit(Q, n, 1e-6)
        tau, best = optimize_tau_dd(p, omega, 1e-12, GP)
        for f in (0.999, 1.001):
            assert ac_uncertainty(p.replace(tau=tau * f), GP, omega, 1e-12) >= best * (1 - 1e-12)
        assert ac_uncertainty(p.replace(tau=tau), GP, omega, 1e-12) == pytest.approx(best, rel=1e-12)

    def test_deterministic(self):
        p = DDParams.from_qubit(Q, 4, 1e-6)
        assert optimize_tau_dd(p, 2e6, 1e-12, GP) == optimize_tau_dd(p, 2e6, 1e-12, GP)

    def test_global_on_scan(self):
        p = DDParams.from_qubit(Q, 6, 1e-6)
        tau, best = optimize_tau_dd(p, 1.7e6, 1e-12, GP)
        taus = np.geomspace(5 / p.dephasing * 1e-6, 5 / p.dephasing, 20_000)
        vals = [ac_uncertainty(p.replace(tau=t), GP, 1.7e6, 1e-12) for t in taus]
        assert best <= min(vals) * (1 + 1e-9)

    def test_invalid(self):
        p = DDParams.from_qubit(Q, 1, 1e-6)
        with pytest.raises(ValueError):
            optimize_tau_dd(p, 0.0, 1e-12, GP)
        with pytest.raises(ValueError):
            optimize_tau_dd(p, 1e6, 0.0, GP)
