"""Oracle-versus-closed-form suites behind ``fqnmr selfcheck``."""
from __future__ import annotations

from dataclasses import dataclass
import itertools
import math
import time

import numpy as np

from . import oracle
from .protocols import DDParams, RamseyParams, dd_filter_factor, dd_signal, ramsey_signal
from .rfdrive import averaged_depolarization, steady_state_depolarization

STEADY_TOL = 1e-8
ERFC_TOL = 1e-9
DD_TOL = 1e-6
DD_N = (1, 2, 3, 4, 6, 8)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    cases: int
    seconds: float
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag}  {self.name:<14} max deviation {self.max_deviation:.3e} "
                f"(tol {self.tolerance:.3g}, {self.cases} cases, {self.seconds:.2f} s)"
                + (f"  {self.detail}" if self.detail else ""))


def _timed(fn):
    def wrapper(*a, **k):
        t0 = time.perf_counter()
        res = fn(*a, **k)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def steady_state_suite(points: int = 10) -> SuiteResult:
    """Closed-form driven steady state against the Liouvillian null vector (absolute)."""
    relax = 1.0
    lams = np.geomspace(1e-2, 1e2, points)
    dets = np.linspace(-50, 50, points)
    ss = np.linspace(0.05, 0.95, points)
    worst = 0.0
    for lam, det, s in itertools.product(lams, dets, ss):
        numeric = oracle.lindblad_steady_state_numeric(lam, det, relax, s)
        closed = (2 * s - 1) * (1 - steady_state_depolarization(lam, det, relax))
        worst = max(worst, abs(numeric - closed))
    n = points**3
    return SuiteResult("steady-state", worst <= STEADY_TOL, worst, STEADY_TOL, n, 0.0)


@_timed
def erfc_suite(points: int = 25, relaxation_ratio: float = 1e-3) -> SuiteResult:
    """erfcx-based Gaussian average against numerical quadrature (relative).

    Gauss-Hermite is tried first; when the Lorentzian is much narrower than
    the Gaussian it cannot converge and the adaptive quadrature is used.
    """
    width = 1.0
    relax = relaxation_ratio * width
    worst, fallbacks = 0.0, 0
    for r in np.geomspace(1e-3, 1e3, points):
        lam = r * width

        def f(d, lam=lam):
            return steady_state_depolarization(lam, d, relax)

        try:
            ref = oracle.gauss_average_numeric(f, width, method="hermite", max_order=1024)
        except oracle.AccuracyError:
            fallbacks += 1
            half = 0.5 * math.hypot(relax, math.sqrt(8) * lam)
            ref = oracle.gauss_average_numeric(f, width, method="adaptive", scales=[half])
        closed = averaged_depolarization(lam, relax, width)
        worst = max(worst, abs(closed / ref - 1))
    return SuiteResult("erfc-average", worst <= ERFC_TOL, worst, ERFC_TOL, points, 0.0,
                       f"{fallbacks} adaptive-quadrature fallbacks")


@_timed
def dd_suite(ratios=(1e3, 1e4, 1e6), phis=(0.7, 1.9, 2 * math.pi, 3.3, 5.1, 9.0)) -> SuiteResult:
    """Decoupling signal and filter factor against exact unitaries (relative).

    Signals are compared for every omega/coupling ratio in ``ratios``; the
    filter factor itself is extracted at the largest ratio, where the
    perturbative truncation is far below the tolerance.
    """
    worst, cases = 0.0, 0
    omega = 1.0
    for n, phi, ratio in itertools.product(DD_N, phis, ratios):
        coupling = omega / ratio
        tau = phi / omega
        params = DDParams(n, tau, 0.0, 1.0, 1)
        closed = dd_signal(coupling, omega, params, 1.0)
        exact = oracle.dd_signal_bruteforce(omega, coupling, tau, n)
        worst = max(worst, abs(closed / exact - 1))
        cases += 1
    ratio = max(ratios)
    for n, phi in itertools.product(DD_N, phis):
        ref = oracle.dd_filter_factor_bruteforce(n, phi, 1 / ratio)
        f = dd_filter_factor(n, phi)
        worst = max(worst, abs(f / ref - 1))
        cases += 1
    return SuiteResult("dd-unitary", worst <= DD_TOL, worst, DD_TOL, cases, 0.0)


@_timed
def ramsey_suite() -> SuiteResult:
    """Linearized Ramsey signal against the channel oracle.

    The difference must be cubic in x = detuning * tau: the reported
    deviation is max |P_lin - P_exact| / (V e^(-Gamma tau) |x|^3), which the
    Taylor remainder of the sine bounds by 1/12.
    """
    worst, cases = 0.0, 0
    for x, gt, vis in itertools.product(np.linspace(-0.09, 0.09, 13), (0.0, 0.5, 1.0, 2.0),
                                        (0.3, 0.79, 1.0)):
        tau = 1e-6
        params = RamseyParams(tau, gt / tau, vis, 1)
        closed = ramsey_signal(x / tau, params)
        exact = oracle.ramsey_bruteforce(x / tau, tau, gt / tau, vis)
        scale = vis * math.exp(-gt) * abs(x) ** 3
        diff = abs(closed - exact)
        if scale == 0:
            if diff > 1e-15:
                worst = math.inf
        else:
            worst = max(worst, diff / scale)
        cases += 1
    return SuiteResult("ramsey-channel", worst <= 1 / 12 * (1 + 1e-6), worst, 1 / 12, cases, 0.0,
                       "deviation scaled by V e^(-Gamma tau) |x|^3")


SUITES = (steady_state_suite, erfc_suite, dd_suite, ramsey_suite)


def run_selfcheck(stream=None) -> list:
    """Run every suite, print one line each to ``stream`` and return the results."""
    results = []
    for suite in SUITES:
        res = suite()
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream)
    return results
