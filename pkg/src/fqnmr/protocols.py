"""Ramsey and dynamical-decoupling signals, their uncertainties and tau optimization."""
from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .fluxqubit import QubitParams

DEPHASING_CONVENTIONS = ("total", "block")
RAMSEY_GUARD = 0.1
DD_GUARD = 0.25


class OutOfRegimeError(ValueError):
    """Raised when a linearized/perturbative signal formula is used outside its regime."""


@dataclass(frozen=True)
class RamseyParams:
    """Free-evolution time tau (s), dephasing rate 1/T2* (1/s), visibility V, repetitions N."""

    tau: float
    dephasing: float
    visibility: float
    repetitions: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.dephasing < 0:
            raise ValueError("dephasing rate must be non-negative")
        if not 0 <= self.visibility <= 1:
            raise ValueError("visibility must lie in [0, 1]")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ValueError("repetitions must be a positive integer")

    @classmethod
    def from_qubit(cls, q: QubitParams, tau: float | None = None) -> "RamseyParams":
        """Defaults to the optimal free-evolution time tau = T2*."""
        return cls(q.T2_star if tau is None else tau, 1 / q.T2_star, q.visibility, q.repetitions)

    def replace(self, **kw) -> "RamseyParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class DDParams:
    """Decoupling sequence with 2n-1 pi pulses and block duration tau.

    ``convention`` selects the dephasing time: ``"total"`` uses n*tau,
    ``"block"`` uses tau alone.
    """

    n: int
    tau: float
    dephasing: float
    visibility: float
    repetitions: int
    convention: str = "total"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.dephasing < 0:
            raise ValueError("dephasing rate must be non-negative")
        if not 0 <= self.visibility <= 1:
            raise ValueError("visibility must lie in [0, 1]")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ValueError("repetitions must be a positive integer")
        if self.convention not in DEPHASING_CONVENTIONS:
            raise ValueError(f"convention must be one of {DEPHASING_CONVENTIONS}")

    @classmethod
    def from_qubit(cls, q: QubitParams, n: int, tau: float, convention: str = "total") -> "DDParams":
        return cls(n, tau, 1 / q.T2(n), q.visibility, q.repetitions, convention)

    @property
    def dephasing_time(self) -> float:
        return self.n * self.tau if self.convention == "total" else self.tau

    def replace(self, **kw) -> "DDParams":
        return replace(self, **kw)


def ramsey_detuning(b_dc, gamma_prime):
    """Qubit detuning gamma' * B_DC (rad/s)."""
    return gamma_prime * b_dc


def ramsey_signal(detuning: float, params: RamseyParams) -> float:
    """Linearized Ramsey population 1/2 + V e^(-Gamma tau) detuning tau / 2."""
    phase = detuning * params.tau
    if abs(phase) >= RAMSEY_GUARD:
        raise OutOfRegimeError(f"|detuning*tau| = {abs(phase):.3g} is not << 1 "
                               f"(guard {RAMSEY_GUARD})")
    return 0.5 + 0.5 * params.visibility * math.exp(-params.dephasing * params.tau) * phase


def dc_uncertainty(params: RamseyParams, gamma_prime: float) -> float:
    """Single-shot-limited DC field uncertainty e^(Gamma tau) / (V gamma' tau sqrt(N))."""
    if gamma_prime == 0:
        raise ValueError("gamma' must be nonzero")
    if params.visibility == 0:
        return math.inf
    return (math.exp(params.dephasing * params.tau)
            / (params.visibility * abs(gamma_prime) * params.tau * math.sqrt(params.repetitions)))


def dd_filter_factor(n: int, phi):
    """Filter factor F(n, phi) of the 2n-1 pulse sequence at phase phi = omega*tau.

    Parameters
    ----------
    n : int
        Sequence index, n >= 1.
    phi : float or ndarray
        Spin precession phase accumulated over one block.

    Returns
    -------
    float or ndarray
        Non-negative factor multiplying (gamma' B_perp / omega)^2.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    phi = np.asarray(phi, dtype=float)
    base = (np.cos(phi / 2) - 1) ** 2
    if n == 1:
        out = base
    elif n % 2 == 0:
        s = 2 * sum(np.cos((2 * i + 1) * phi / 2) for i in range(n // 2))
        out = s * s * base
    else:
        s = 1 + 2 * sum(np.cos((i + 1) * phi) for i in range((n - 1) // 2))
        out = s * s * base
    return out if out.ndim else float(out)


def _dd_terms(b_ac, omega, params: DDParams, gamma_prime, tau=None):
    tau = params.tau if tau is None else tau
    T = params.n * tau if params.convention == "total" else tau
    env = params.visibility * np.exp(-params.dephasing * T)
    f = dd_filter_factor(params.n, omega * tau)
    x2 = (gamma_prime * b_ac / omega) ** 2
    return env, f, x2


def dd_signal(b_ac: float, omega: float, params: DDParams, gamma_prime: float) -> float:
    """Population after the decoupling sequence, perturbative in gamma' B_AC / omega."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    env, f, x2 = _dd_terms(b_ac, omega, params, gamma_prime)
    if f * x2 >= DD_GUARD:
        raise OutOfRegimeError(f"F*(gamma' B_AC/omega)^2 = {f * x2:.3g} exceeds {DD_GUARD}")
    return 0.5 + env * (0.5 - f * x2)


def _ac_uncertainty(b_ac, omega, params, gamma_prime, tau):
    env, f, x2 = _dd_terms(b_ac, omega, params, gamma_prime, tau)
    p = 0.5 + env * (0.5 - f * x2)
    slope = 2 * env * f * gamma_prime**2 * b_ac / omega**2
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt(p * (1 - p)) / (slope * math.sqrt(params.repetitions))
    return np.where((slope > 0) & (f * x2 < DD_GUARD), out, np.inf)


def ac_uncertainty(params: DDParams, gamma_prime: float, omega: float, b_ac: float) -> float:
    """AC field uncertainty sqrt(P(1-P)) / (|dP/dB_AC| sqrt(N)).

    Raises
    ------
    ValueError
        If ``b_ac`` is zero, where the slope of P vanishes.
    OutOfRegimeError
        Outside the perturbative regime.
    """
    if not b_ac > 0:
        raise ValueError("B_AC must be positive: dP/dB_AC vanishes at B_AC = 0")
    p = dd_signal(b_ac, omega, params, gamma_prime)
    env, f, _ = _dd_terms(b_ac, omega, params, gamma_prime)
    slope = 2 * env * f * gamma_prime**2 * b_ac / omega**2
    if slope == 0:
        return math.inf
    return math.sqrt(p * (1 - p)) / (slope * math.sqrt(params.repetitions))


def optimize_tau_dd(params: DDParams, omega: float, b_ac: float, gamma_prime: float,
                    tau_max: float | None = None, points: int = 4000):
    """Global minimum of the AC uncertainty over tau in (0, tau_max].

    A log-spaced scan (``points`` samples, default upper end 5*T2(n)) picks
    the best sample, then golden-section search refines it inside its
    neighbouring samples.

    Returns
    -------
    tau_opt : float
    delta_b : float
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if not b_ac > 0:
        raise ValueError("B_AC must be positive")
    if tau_max is None:
        if params.dephasing > 0:
            tau_max = 5 / params.dephasing
        else:
            tau_max = 20 * math.pi / omega
    taus = np.geomspace(tau_max * 1e-6, tau_max, max(points, 2000))
    vals = _ac_uncertainty(b_ac, omega, params, gamma_prime, taus)
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        return math.nan, math.inf
    if i == 0 or i == taus.size - 1:
        return float(taus[i]), float(vals[i])

    def f(t):
        return float(_ac_uncertainty(b_ac, omega, params, gamma_prime, np.array(t)))

    res = minimize_scalar(f, bracket=(taus[i - 1], taus[i], taus[i + 1]), method="golden",
                          options={"xtol": 1e-10})
    lo, hi = taus[i - 1], taus[i + 1]
    if lo <= res.x <= hi and res.fun <= vals[i]:
        return float(res.x), float(res.fun)
    return float(taus[i]), float(vals[i])
