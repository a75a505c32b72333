"""Brute-force reference calculations used to validate the closed forms.

Nothing here is fast. Each routine evaluates the underlying physics
directly (2x2 unitaries, a 4x4 Liouvillian, numerical quadrature,
density-matrix channels) so the closed-form code can be checked against it.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import roots_hermite

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
# basis order (|up>, |down>) with sigma_z = +1 on |up>
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T

STATE_TOL = 1e-12


class AccuracyError(RuntimeError):
    """Raised when a numerical oracle fails to reach its accuracy target."""


class NonUniqueSteadyStateError(ValueError):
    """Raised when the Liouvillian has more than one steady state."""


class TwoLevelState:
    """Validated 2x2 density matrix."""

    def __init__(self, matrix, tol: float = STATE_TOL):
        m = np.array(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("a two-level state is a 2x2 matrix")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"trace {np.trace(m).real:.15g} != 1")
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -tol:
            raise ValueError("density matrix is not positive semidefinite")
        self.matrix = m
        self.tol = tol

    @classmethod
    def pure(cls, vec) -> "TwoLevelState":
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def mixed(cls) -> "TwoLevelState":
        return cls(I2 / 2)

    def apply(self, kraus) -> "TwoLevelState":
        """Apply a channel given by its Kraus operators; the result is revalidated."""
        out = sum(k @ self.matrix @ k.conj().T for k in kraus)
        return TwoLevelState(out, self.tol)

    def evolve(self, u) -> "TwoLevelState":
        return self.apply([u])

    def expect(self, op) -> float:
        return float(np.real(np.trace(self.matrix @ op)))


def su2_exp(h, t: float) -> np.ndarray:
    """exp(-i t h.sigma) from the closed form cos|h|t - i sin|h|t (h_hat.sigma)."""
    h = np.asarray(h, dtype=float)
    norm = float(np.linalg.norm(h))
    if norm == 0:
        return I2.copy()
    n = h / norm
    hs = n[0] * SX + n[1] * SY + n[2] * SZ
    return math.cos(norm * t) * I2 - 1j * math.sin(norm * t) * hs


def _as_state(initial):
    if isinstance(initial, TwoLevelState):
        return initial
    if initial is None or (isinstance(initial, str) and initial == "mixed"):
        return TwoLevelState.mixed()
    if isinstance(initial, str):
        vecs = {"+": [1, 1], "-": [1, -1], "up": [1, 0], "down": [0, 1]}
        try:
            return TwoLevelState.pure(vecs[initial])
        except KeyError:
            raise ValueError(f"unknown spin state {initial!r}") from None
    arr = np.asarray(initial, dtype=complex)
    return TwoLevelState.pure(arr) if arr.ndim == 1 else TwoLevelState(arr)


def dd_propagators(omega: float, coupling: float, tau: float, n: int):
    """Spin propagators (U_a^n, U_b^n) for the two qubit branches.

    H0 = omega/2 sz + coupling/2 sx and H1 flips the coupling sign. One
    block is U_a = e^(-i H1 tau/2) e^(-i H0 tau/2); U_b swaps the order.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    h0 = np.array([coupling / 2, 0.0, omega / 2])
    h1 = np.array([-coupling / 2, 0.0, omega / 2])
    e0, e1 = su2_exp(h0, tau / 2), su2_exp(h1, tau / 2)
    ua, ub = e1 @ e0, e0 @ e1
    return np.linalg.matrix_power(ua, n), np.linalg.matrix_power(ub, n)


def dd_signal_bruteforce(omega, coupling, tau, n, initial="mixed") -> float:
    """Ideal (V=1, no dephasing) decoupling population from exact unitaries.

    P = 1/2 + 1/4 <(U_a^n)^dag U_b^n + h.c.>; evaluated as 1 - dd_deficit
    so that small deviations from one keep full relative precision.
    """
    return 1.0 - dd_deficit_bruteforce(omega, coupling, tau, n, initial)


def dd_deficit_bruteforce(omega, coupling, tau, n, initial="mixed") -> float:
    """1 - P = 1/4 <D^dag D> with D = U_a^n - U_b^n."""
    state = _as_state(initial)
    ua, ub = dd_propagators(omega, coupling, tau, n)
    d = ua - ub
    return 0.25 * state.expect(d.conj().T @ d)


def dd_filter_factor_bruteforce(n: int, phi: float, ratio: float = 1e-6) -> float:
    """Filter factor extracted from the oracle as (1 - P) / (coupling/omega)^2."""
    omega = 1.0
    return dd_deficit_bruteforce(omega, ratio * omega, phi / omega, n) / ratio**2


def liouvillian(lam: float, detuning: float, relaxation: float, s: float) -> np.ndarray:
    """4x4 Lindblad generator (column-stacking vec) for the driven, relaxing spin.

    H = detuning/2 sz + lam sx; jumps down at rate relaxation*(1-s) and up at
    relaxation*s, so the undriven steady state has <sz> = 2s - 1.
    """
    h = 0.5 * detuning * SZ + lam * SX
    gen = -1j * (np.kron(I2, h) - np.kron(h.T, I2))
    for rate, op in ((relaxation * (1 - s), SIGMA_MINUS), (relaxation * s, SIGMA_PLUS)):
        ll = op.conj().T @ op
        gen += rate * (np.kron(op.conj(), op) - 0.5 * np.kron(I2, ll) - 0.5 * np.kron(ll.T, I2))
    return gen


def lindblad_steady_state_numeric(lam, detuning, relaxation, s, residual_tol=1e-12) -> float:
    """Steady-state <sz> from the Liouvillian null vector (smallest singular vector).

    Raises
    ------
    NonUniqueSteadyStateError
        If the null space is degenerate, e.g. for zero relaxation.
    AccuracyError
        If the scaled residual ||L rho|| / ||L|| exceeds ``residual_tol``.
    """
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    gen = liouvillian(lam, detuning, relaxation, s)
    scale = np.linalg.norm(gen, 2)
    if scale == 0:
        raise NonUniqueSteadyStateError("Liouvillian vanishes; every state is stationary")
    _, sv, vh = np.linalg.svd(gen)
    if sv[-2] <= 1e-10 * scale:
        raise NonUniqueSteadyStateError(
            f"degenerate null space (singular values {sv[-2]:.3g}, {sv[-1]:.3g}); "
            "a positive relaxation rate is required")
    rho = vh[-1].conj().reshape(2, 2, order="F")
    rho = rho / np.trace(rho)
    rho = (rho + rho.conj().T) / 2
    resid = np.linalg.norm(gen @ rho.reshape(-1, order="F")) / scale
    if resid > residual_tol:
        raise AccuracyError(f"steady-state residual {resid:.3g} exceeds {residual_tol:.1g}")
    return float(np.real(np.trace(rho @ SZ)))


def gauss_average_numeric(integrand, linewidth, method="hermite", rtol=1e-12,
                          min_order=32, max_order=8192, scales=()):
    """Average of integrand(delta) under exp(-delta^2/G^2)/(G sqrt(pi)).

    Parameters
    ----------
    integrand : callable
        Vectorized function of the frequency deviation (rad/s). Must be bounded.
    linewidth : float
        Gaussian width G.
    method : {"hermite", "adaptive"}
        ``"hermite"`` doubles the Gauss-Hermite order from ``min_order`` until
        successive results agree to ``rtol``. ``"adaptive"`` integrates with
        QUADPACK on [-40G, 40G] with breakpoints at +-``scales`` (use the
        integrand's own feature widths when they are much narrower than G,
        where Gauss-Hermite cannot resolve them).
    rtol : float
        Convergence target.

    Raises
    ------
    AccuracyError
        On non-convergence.
    """
    if not linewidth > 0:
        raise ValueError("linewidth must be positive")
    if method == "hermite":
        prev = None
        order = min_order
        while order <= max_order:
            x, w = roots_hermite(order)
            val = float(np.sum(w * integrand(linewidth * x)) / math.sqrt(math.pi))
            if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
                return val
            if prev is not None and val == 0 and prev == 0:
                return 0.0
            prev = val
            order *= 2
        raise AccuracyError(f"Gauss-Hermite did not converge to {rtol:g} by order {max_order}")
    if method == "adaptive":
        cut = 40 * linewidth
        norm = linewidth * math.sqrt(math.pi)
        brk = sorted({b for s in scales for b in (s, 10 * s, 100 * s) if 0 < b < cut})

        def g(d):
            return float(integrand(np.array(d))) * math.exp(-(d / linewidth) ** 2) / norm

        total = 0.0
        for lo, hi, pts in ((-cut, 0.0, [-b for b in brk]), (0.0, cut, brk)):
            val, err = quad(g, lo, hi, points=pts or None, epsabs=0, epsrel=max(rtol, 1e-13),
                            limit=1000)
            total += val
        if err > 1e3 * max(rtol, 1e-13) * abs(total) and abs(total) > 0:
            raise AccuracyError(f"QUADPACK error estimate {err:.3g} too large")
        return total
    raise ValueError("method must be 'hermite' or 'adaptive'")


def ramsey_bruteforce(detuning, tau, dephasing, visibility) -> float:
    """Exact Ramsey population via explicit channels.

    |+x> evolves freely under detuning/2 sz, then passes a sz dephasing
    channel with keep-probability (1 + e^(-dephasing*tau))/2 and a
    depolarizing readout channel with eta = 1 - V before projection on |+y>.
    """
    if not 0 <= visibility <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    state = TwoLevelState.pure([1, 1])
    state = state.evolve(su2_exp([0, 0, detuning / 2], tau))
    p = 0.5 + 0.5 * math.exp(-dephasing * tau)
    state = state.apply([math.sqrt(p) * I2, math.sqrt(1 - p) * SZ])
    eta = 1 - visibility
    # depolarizing channel in Kraus form: (1-eta) rho + eta I/2
    k0 = math.sqrt(1 - 3 * eta / 4) * I2
    ks = [math.sqrt(eta / 4) * s for s in (SX, SY, SZ)]
    state = state.apply([k0, *ks])
    proj_y = 0.5 * (I2 + SY)
    return state.expect(proj_y)
