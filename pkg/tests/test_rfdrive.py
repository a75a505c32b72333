import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.constants import mu_0

from fqnmr import oracle
from fqnmr.constants import PROTON_GAMMA
from fqnmr.ensemble import SampleGeometry, discretize
from fqnmr.fluxqubit import QubitParams, SingularEvaluationError
from fqnmr.rfdrive import (
    DriveEnvironment,
    RfLine,
    averaged_depolarization,
    current_from_normalized,
    drive_map,
    normalized_current,
    rf_coupling,
    saturation_profile,
    steady_state_depolarization,
)

L = 2e-6


class TestRfLine:
    def test_reference(self):
        assert RfLine(2e-6).wire_z(L) == pytest.approx(3e-6)
        assert RfLine(2e-6, reference="center").wire_z(L) == pytest.approx(2e-6)

    @pytest.mark.parametrize("kw", [dict(offset=0), dict(offset=1e-6, current=-1),
                                    dict(offset=1e-6, reference="left")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            RfLine(**kw)

    def test_drive_environment(self):
        d = DriveEnvironment.from_linewidth(1e4)
        assert d.relaxation == pytest.approx(10.0)
        with pytest.raises(ValueError):
            DriveEnvironment(0.0, 1.0)


class TestCoupling:
    line = RfLine(2e-6, 1e-3, "center")

    def test_perpendicular_is_zero(self):
        assert rf_coupling(self.line, [0, 1e-6, 2e-6], PROTON_GAMMA, L) == 0.0

    def test_value(self):
        lam = rf_coupling(self.line, [0, 0, 4e-6], PROTON_GAMMA, L)
        assert lam == pytest.approx(PROTON_GAMMA * mu_0 * 1e-3 / (2 * math.pi * 2e-6), rel=1e-14)
        assert lam == pytest.approx(2.68e4, rel=2e-3)

    def test_inverse_distance(self):
        a = rf_coupling(self.line, [0, 0.6e-6, 2.8e-6], PROTON_GAMMA, L)
        b = rf_coupling(self.line, [0, 1.2e-6, 3.6e-6], PROTON_GAMMA, L)
        assert b == pytest.approx(a / 2, rel=1e-12)

    def test_on_line(self):
        with pytest.raises(SingularEvaluationError):
            rf_coupling(self.line, [0, 0, 2e-6], PROTON_GAMMA, L)

    def test_normalized_roundtrip(self):
        x = normalized_current(1e-3, PROTON_GAMMA, 1e4)
        assert current_from_normalized(x, PROTON_GAMMA, 1e4) == pytest.approx(1e-3)


class TestSteadyState:
    def test_limits(self):
        assert steady_state_depolarization(0.0, 0.3, 1.0) == 0.0
        assert steady_state_depolarization(1e9, 0.0, 1.0) == pytest.approx(1.0, rel=1e-15)

    def test_liouvillian(self):
        lam, det, gam = 1.0, 0.7, 0.001
        s = 0.3
        num = oracle.lindblad_steady_state_numeric(lam, det, gam, s)
        closed = (2 * s - 1) * (1 - steady_state_depolarization(lam, det, gam))
        assert abs(num - closed) <= 1e-8

    @given(st.floats(0, 1e3), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
    def test_bounded(self, lam, det, gam):
        v = steady_state_depolarization(lam, det, gam)
        assert 0.0 <= v <= 1.0


class TestAveraged:
    def test_zero(self):
        assert averaged_depolarization(0.0, 1.0, 1e3) == 0.0

    def test_saturated_no_overflow(self):
        for lam in (1e6, 1e12, 1e150):
            v = averaged_depolarization(lam, 1.0, 1e3)
            assert math.isfinite(v) and v == pytest.approx(1.0, rel=1e-6)

    def test_against_quadrature(self):
        lam, gam, width = 0.5e3, 1.0, 1e3
        ref = oracle.gauss_average_numeric(
            lambda d: steady_state_depolarization(lam, d, gam), width, method="hermite")
        assert averaged_depolarization(lam, gam, width) == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("r", [1e-3, 1e-2, 0.1])
    def test_narrow_lorentzian_adaptive(self, r):
        gam, width = 1e-3, 1.0
        half = 0.5 * math.hypot(gam, math.sqrt(8) * r)
        ref = oracle.gauss_average_numeric(lambda d: steady_state_depolarization(r, d, gam),
                                           width, method="adaptive", scales=[half])
        assert averaged_depolarization(r, gam, width) == pytest.approx(ref, rel=1e-9)

    def test_vectorized_monotone(self):
        lam = np.geomspace(1e-3, 1e3, 200)
        v = averaged_depolarization(lam, 1e-3, 1.0)
        assert v.shape == lam.shape and np.all(np.diff(v) > 0) and v.max() <= 1.0


@pytest.fixture(scope="module")
def coarse_grid():
    q = QubitParams()
    return discretize(SampleGeometry.large(L, 0.1e-6), q, PROTON_GAMMA, resolution=0.2e-6)


class TestDriveMap:
    drive = DriveEnvironment.from_linewidth(1e4, polarization=2e-4)

    def test_profile_shape(self, coarse_grid):
        sat = saturation_profile(coarse_grid, RfLine(2e-6, 1e-3), PROTON_GAMMA, self.drive)
        assert sat.shape == coarse_grid.kz_yz.shape
        assert np.all((sat >= 0) & (sat <= 1))

    def test_zero_current_row_and_normalization(self, coarse_grid):
        q = QubitParams()
        cur = current_from_normalized(np.array([0.0, 1.0, 5.0, 20.0]), PROTON_GAMMA, 1e4)
        m = drive_map(coarse_grid, q, PROTON_GAMMA, self.drive, [1e-6, 2e-6, 3e-6], cur)
        assert np.all(m.detuning[:, 0] == 0)
        assert m.normalized.max() == pytest.approx(1.0)
        col = drive_map(coarse_grid, q, PROTON_GAMMA, self.drive, [1e-6, 2e-6], cur,
                        normalize="column")
        np.testing.assert_allclose(col.normalized.max(axis=1), 1.0)

    def test_ridge_regression(self, coarse_grid):
        # frozen from this implementation on the 0.2 um grid (scan resolution 1/40 decade)
        q = QubitParams()
        x = np.geomspace(0.1, 100, 121)
        cur = current_from_normalized(x, PROTON_GAMMA, 1e4)
        m = drive_map(coarse_grid, q, PROTON_GAMMA, self.drive, [2e-6], cur)
        assert m.ridge()[0] == pytest.approx(7.08, rel=0.06)

    def test_empty(self, coarse_grid):
        with pytest.raises(ValueError):
            drive_map(coarse_grid, QubitParams(), PROTON_GAMMA, self.drive, [], [1e-3])
