"""Flux-qubit energy model and the loop's geometric field kernels.

Coordinate frame used everywhere in the package: the square qubit loop lies
in the x-z plane centered at the origin with its normal along +y, the static
field B_ex points along +z, and spin samples sit at y >= h > 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .constants import HBAR, MU_0


class SingularEvaluationError(ValueError):
    """Raised when a field is requested on a current-carrying wire."""


DEFAULT_T2_OF_N = {1: 5.00e-6, 2: 6.63e-6, 4: 8.91e-6, 6: 10.8e-6, 8: 12.4e-6, 10: 13.6e-6}


@dataclass(frozen=True)
class QubitParams:
    """Flux-qubit parameters in SI units (angular frequencies in rad/s)."""

    gap: float = 2 * np.pi * 5.37e9
    detuning: float = 2 * np.pi * 0.112e9
    persistent_current: float = 180e-9
    loop_side: float = 2e-6
    T2_star: float = 1e-6
    T2_of_n: Mapping[int, float] = field(default_factory=lambda: dict(DEFAULT_T2_OF_N))
    visibility: float = 0.79
    T_rep: float = 100e-6
    T_tot: float = 1.0

    def __post_init__(self):
        if not self.gap > 0:
            raise ValueError("gap must be positive")
        if not self.persistent_current > 0:
            raise ValueError("persistent_current must be positive")
        if not self.loop_side > 0:
            raise ValueError("loop_side must be positive")
        if not 0 < self.visibility <= 1:
            raise ValueError("visibility must lie in (0, 1]")
        if not self.T2_star > 0:
            raise ValueError("T2_star must be positive")
        if any(not t > 0 for t in self.T2_of_n.values()):
            raise ValueError("every T2_of_n value must be positive")
        if not (self.T_rep > 0 and self.T_tot >= self.T_rep):
            raise ValueError("need 0 < T_rep <= T_tot")
        # hashable snapshot so instances can key caches
        object.__setattr__(self, "T2_of_n", _FrozenMap(self.T2_of_n))

    @property
    def repetitions(self) -> int:
        return int(np.floor(self.T_tot / self.T_rep + 1e-9))

    def T2(self, n: int) -> float:
        try:
            return self.T2_of_n[n]
        except KeyError:
            raise KeyError(f"no T2 value for n={n}; known n: {sorted(self.T2_of_n)}") from None

    def replace(self, **changes) -> "QubitParams":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw["T2_of_n"] = dict(kw["T2_of_n"])
        kw.update(changes)
        return QubitParams(**kw)


class _FrozenMap(dict):
    def __hash__(self):
        return hash(tuple(sorted(self.items())))

    def _readonly(self, *a, **k):
        raise TypeError("T2_of_n is read-only")

    __setitem__ = __delitem__ = update = pop = clear = setdefault = _readonly


@dataclass(frozen=True)
class LoopGeometry:
    """Thin-wire square loop of side ``side`` carrying ``current``."""

    side: float
    current: float

    @classmethod
    def from_qubit(cls, q: QubitParams) -> "LoopGeometry":
        return cls(q.loop_side, q.persistent_current)

    def corners(self) -> np.ndarray:
        # circulation chosen so the field at the center points along +y
        c = self.side / 2
        return np.array([[c, 0.0, c], [c, 0.0, -c], [-c, 0.0, -c], [-c, 0.0, c]])

    def segments(self):
        k = self.corners()
        return [(k[i], k[(i + 1) % 4]) for i in range(4)]

    @property
    def area(self) -> float:
        return self.side**2

    @property
    def moment(self) -> float:
        return self.current * self.side**2


def qubit_frequency(q: QubitParams) -> float:
    """Qubit transition frequency sqrt(eps^2 + Delta^2), rad/s."""
    return float(np.hypot(q.detuning, q.gap))


def field_sensitivity(q: QubitParams) -> float:
    """gamma' = d omega_FQ / d B_perp = (eps/omega_FQ) * 2 I_p L^2 / hbar."""
    return q.detuning / qubit_frequency(q) * 2 * q.persistent_current * q.loop_side**2 / HBAR


def effective_gyro(q: QubitParams, gamma: float) -> float:
    """Spin gyromagnetic ratio projected onto the qubit eigenbasis, gamma*eps/omega_FQ."""
    return gamma * q.detuning / qubit_frequency(q)


def segment_field(a, b, current, points, wire_tol=1e-9):
    """Exact Biot-Savart field of a finite straight segment a->b.

    Parameters
    ----------
    a, b : array_like, shape (3,)
        Segment endpoints; current flows from ``a`` to ``b``.
    current : float
        Current in amperes.
    points : ndarray, shape (..., 3)
        Evaluation points.
    wire_tol : float
        Points closer to the segment than ``wire_tol`` times its length
        are treated as lying on the wire.

    Returns
    -------
    ndarray, shape (..., 3)
    """
    p = np.asarray(points, dtype=float)
    r1 = np.asarray(a, dtype=float) - p
    r2 = np.asarray(b, dtype=float) - p
    n1 = np.sqrt(np.einsum("...i,...i", r1, r1))
    n2 = np.sqrt(np.einsum("...i,...i", r2, r2))
    cross = np.cross(r1, r2)
    denom = n1 * n2 * (n1 * n2 + np.einsum("...i,...i", r1, r2))
    seg_len = float(np.linalg.norm(np.asarray(b, float) - np.asarray(a, float)))
    # near the segment at distance d, denom ~ seg_len^2 d^2 / 2
    if np.any(denom <= 0.5 * (wire_tol * seg_len) ** 2 * seg_len**2):
        raise SingularEvaluationError("field requested on (or within tolerance of) a wire segment")
    factor = MU_0 * current / (4 * np.pi) * (n1 + n2) / denom
    return cross * factor[..., None]


def loop_field(geom: LoopGeometry, points) -> np.ndarray:
    """Magnetic field (T) of the square loop at ``points`` (shape (..., 3))."""
    p = np.asarray(points, dtype=float)
    total = np.zeros(np.broadcast_shapes(p.shape, (3,)))
    for a, b in geom.segments():
        total += segment_field(a, b, geom.current, p)
    return total


def dipole_field(moment_vec, points) -> np.ndarray:
    """Point magnetic dipole field; used as the far-field reference."""
    m = np.asarray(moment_vec, dtype=float)
    p = np.asarray(points, dtype=float)
    r = np.sqrt(np.einsum("...i,...i", p, p))[..., None]
    rhat = p / r
    mdotr = np.einsum("...i,i", rhat, m)[..., None]
    return MU_0 / (4 * np.pi) * (3 * mdotr * rhat - m) / r**3


def reciprocity_factor(q: QubitParams, gamma: float) -> float:
    """hbar*gamma / (2 I_p L^2): converts loop field at a spin to effective field at the qubit."""
    return HBAR * gamma / (2 * q.persistent_current * q.loop_side**2)


def spin_to_qubit_dc_kernel(q: QubitParams, geom: LoopGeometry, gamma: float, points) -> np.ndarray:
    """Effective DC field at the qubit per fully polarized spin at ``points``.

    Follows from gamma_tilde * B_z^(FQ) = gamma' * B_z^(spin). Odd under z -> -z.
    """
    B = loop_field(geom, points)
    return reciprocity_factor(q, gamma) * B[..., 2]


def spin_to_qubit_ac_kernel(q: QubitParams, geom: LoopGeometry, gamma: float, points) -> np.ndarray:
    """Transverse (AC) effective field per spin; non-negative, even under z -> -z."""
    B = loop_field(geom, points)
    return reciprocity_factor(q, gamma) * np.hypot(B[..., 0], B[..., 1])
