"""RF-line coupling and steady-state saturation of driven nuclear spins."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .constants import MU_0, R_REF
from .fluxqubit import SingularEvaluationError, field_sensitivity

RF_REFERENCES = ("edge", "center")


@dataclass(frozen=True)
class RfLine:
    """Infinite straight wire along x in the chip plane y=0.

    ``offset`` is z_RF; with ``reference="edge"`` it is measured from the
    loop edge at z=+L/2, with ``"center"`` from the loop center.
    """

    offset: float
    current: float = 0.0
    reference: str = "edge"

    def __post_init__(self):
        if not self.offset > 0:
            raise ValueError("RF line offset must be positive")
        if self.current < 0:
            raise ValueError("RF current must be non-negative")
        if self.reference not in RF_REFERENCES:
            raise ValueError(f"reference must be one of {RF_REFERENCES}")

    def wire_z(self, loop_side: float) -> float:
        return self.offset + (loop_side / 2 if self.reference == "edge" else 0.0)

    def with_current(self, current: float) -> "RfLine":
        return RfLine(self.offset, current, self.reference)


@dataclass(frozen=True)
class DriveEnvironment:
    """Relaxation rate Gamma, Gaussian linewidth Gamma_tilde (both 1/s) and thermal polarization."""

    relaxation: float
    linewidth: float
    polarization: float = 0.0

    def __post_init__(self):
        if not (self.relaxation > 0 and self.linewidth > 0):
            raise ValueError("relaxation and linewidth must be positive")

    @classmethod
    def from_linewidth(cls, linewidth: float, ratio: float = 1e-3, polarization: float = 0.0):
        return cls(ratio * linewidth, linewidth, polarization)


def rf_coupling(line: RfLine, points, gamma: float, loop_side: float):
    """lambda_RF = gamma mu0 I cos(theta) / (2 pi r) at ``points`` (rad/s).

    r is the distance to the wire and theta the angle between the wire-to-spin
    vector and +z, so cos(theta) = dz / r.
    """
    p = np.asarray(points, dtype=float)
    dy = p[..., 1]
    dz = p[..., 2] - line.wire_z(loop_side)
    r2 = dy * dy + dz * dz
    if np.any(r2 <= 0):
        raise SingularEvaluationError("RF coupling requested on the RF line")
    return gamma * MU_0 * line.current * dz / (2 * np.pi * r2)


def steady_state_depolarization(lam, detuning, relaxation):
    """Fraction of thermal polarization removed in the driven steady state."""
    lam2 = np.square(lam)
    return 8 * lam2 / (relaxation**2 + 8 * lam2 + 4 * np.square(detuning))


def averaged_depolarization(lam, relaxation, linewidth):
    """Steady-state depolarization averaged over a Gaussian detuning distribution.

    Uses the scaled complementary error function so that large
    lambda/linewidth never overflows exp(x^2).
    """
    lam = np.asarray(lam, dtype=float)
    a = np.hypot(relaxation, np.sqrt(8.0) * lam)
    out = 4 * lam * lam * np.sqrt(np.pi) / (linewidth * a) * erfcx(a / (2 * linewidth))
    # guard rounding just above one in the saturated limit
    return np.minimum(out, 1.0) if out.ndim else float(min(out, 1.0))


def normalized_current(current, gamma, linewidth, ref=R_REF):
    """Dimensionless drive strength gamma mu0 I_RF / (Gamma_tilde R)."""
    return gamma * MU_0 * np.asarray(current) / (linewidth * ref)


def current_from_normalized(x, gamma, linewidth, ref=R_REF):
    return np.asarray(x) * linewidth * ref / (gamma * MU_0)


def saturation_profile(grid, line: RfLine, gamma: float, drive: DriveEnvironment):
    """Averaged depolarization on the grid's (y, z) plane.

    The RF line is translation invariant along x, so one (ny, nz) slab
    describes every voxel.
    """
    Y, Z = np.meshgrid(grid.y, grid.z, indexing="ij")
    pts = np.stack([np.zeros_like(Y), Y, Z], axis=-1)
    lam = rf_coupling(line, pts, gamma, grid.loop_side)
    return averaged_depolarization(lam, drive.relaxation, drive.linewidth)


@dataclass
class DriveMap:
    z_rf: np.ndarray
    current: np.ndarray
    normalized_current: np.ndarray
    detuning: np.ndarray          # shape (len(z_rf), len(current)), rad/s
    normalized: np.ndarray        # detuning / max, per ``normalize`` convention
    normalize: str

    @property
    def argmax(self):
        i, j = np.unravel_index(np.argmax(np.abs(self.detuning)), self.detuning.shape)
        return int(i), int(j)

    def ridge(self):
        """Normalized current that maximizes |detuning| for each z_RF."""
        return self.normalized_current[np.argmax(np.abs(self.detuning), axis=1)]


def drive_map(grid, qubit, gamma, drive: DriveEnvironment, z_rf_values, current_values,
              *, reference="edge", normalize="grid"):
    """Ramsey detuning over a (z_RF, I_RF) grid, normalized to its maximum.

    ``normalize="grid"`` divides by the maximum over the whole map,
    ``"column"`` divides each z_RF row by its own maximum.
    """
    from .ensemble import dc_signal_field

    z_rf_values = np.asarray(z_rf_values, dtype=float)
    current_values = np.asarray(current_values, dtype=float)
    if z_rf_values.size == 0 or current_values.size == 0:
        raise ValueError("drive_map needs a non-empty z_RF and I_RF grid")
    if normalize not in ("grid", "column"):
        raise ValueError("normalize must be 'grid' or 'column'")
    gp = field_sensitivity(qubit)
    det = np.empty((z_rf_values.size, current_values.size))
    for i, z in enumerate(z_rf_values):
        for j, cur in enumerate(current_values):
            sat = saturation_profile(grid, RfLine(z, cur, reference), gamma, drive)
            det[i, j] = gp * dc_signal_field(grid, sat, drive.polarization)
    mag = np.abs(det)
    if normalize == "grid":
        peak = mag.max()
        norm = mag / peak if peak > 0 else np.zeros_like(mag)
    else:
        peak = mag.max(axis=1, keepdims=True)
        norm = np.divide(mag, peak, out=np.zeros_like(mag), where=peak > 0)
    return DriveMap(z_rf_values, current_values,
                    normalized_current(current_values, gamma, drive.linewidth),
                    det, norm, normalize)
