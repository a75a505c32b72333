"""Spin samples, voxel discretization and the aggregated DC/AC signal fields."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import math

import numpy as np

from .constants import HBAR, K_B, PROTON_GAMMA
from .fluxqubit import LoopGeometry, QubitParams, loop_field, reciprocity_factor

POLARIZATION_MODES = ("exact", "ratio")
PLACEMENTS = ("large", "a", "b", "c")
PLACEMENT_C_VARIANTS = ("z_edge", "far_x_edge")
MAX_VOXELS = 10**8


class CapacityError(ValueError):
    """Raised when a requested discretization exceeds the voxel budget."""


@dataclass(frozen=True)
class Environment:
    """Temperature (K), static field B_ex (T), spin gyromagnetic ratio (rad/s/T),
    Gaussian linewidth Gamma_tilde (1/s) and relaxation Gamma = ratio * Gamma_tilde."""

    temperature: float = 0.02
    b_ex: float = 4e-3
    gamma: float = PROTON_GAMMA
    linewidth: float = 1e4
    relaxation_ratio: float = 1e-3

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if not self.b_ex > 0:
            raise ValueError("b_ex must be positive")
        if not (self.gamma > 0 and self.linewidth > 0 and self.relaxation_ratio > 0):
            raise ValueError("gamma, linewidth and relaxation_ratio must be positive")

    @property
    def larmor(self) -> float:
        return self.gamma * self.b_ex

    @property
    def relaxation(self) -> float:
        return self.relaxation_ratio * self.linewidth

    def replace(self, **kw) -> "Environment":
        return replace(self, **kw)


def thermal_polarization(env: Environment, mode: str = "exact") -> float:
    """Thermal spin polarization |<sigma_z>_th|.

    ``"exact"`` is the Boltzmann value tanh(hbar w / 2 k_B T); ``"ratio"``
    is the bare ratio hbar w / (k_B T), twice the high-temperature limit of tanh.
    """
    x = HBAR * env.larmor / (K_B * env.temperature)
    if mode == "exact":
        return math.tanh(x / 2)
    if mode == "ratio":
        return x
    raise ValueError(f"polarization mode must be one of {POLARIZATION_MODES}")


@dataclass(frozen=True)
class SampleGeometry:
    """Axis-aligned spin-sample box.

    ``size`` is (w_x, w_y, w_z); the box spans y in [standoff, standoff + w_y]
    and is centered laterally at ``center`` = (x_c, z_c).
    """

    size: tuple
    standoff: float
    center: tuple = (0.0, 0.0)
    placement: str = "large"

    def __post_init__(self):
        if len(self.size) != 3 or any(not w > 0 for w in self.size):
            raise ValueError("sample dimensions must be three positive lengths")
        if not self.standoff > 0:
            raise ValueError("sample stand-off h must be positive")
        object.__setattr__(self, "size", tuple(float(s) for s in self.size))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def large(cls, loop_side: float, standoff: float, lateral: float = 2.5, height: float = 2.0):
        """lateral*L x lateral*L footprint, height*L tall, centered over the loop."""
        L = loop_side
        return cls((lateral * L, height * L, lateral * L), standoff, (0.0, 0.0), "large")

    @classmethod
    def small(cls, loop_side: float, width: float, height: float, standoff: float,
              placement: str, c_variant: str = "z_edge"):
        """l x l x h' sample at one of the placements a, b, c.

        a: over the midpoint of the x-parallel edge nearest the RF line (z=+L/2)
        b: over the loop center
        c: over the midpoint of the z-parallel edge at x=+L/2 (``c_variant="z_edge"``)
           or of the far x-parallel edge at z=-L/2 (``"far_x_edge"``)
        """
        L = loop_side
        if placement == "a":
            center = (0.0, L / 2)
        elif placement == "b":
            center = (0.0, 0.0)
        elif placement == "c":
            if c_variant == "z_edge":
                center = (L / 2, 0.0)
            elif c_variant == "far_x_edge":
                center = (0.0, -L / 2)
            else:
                raise ValueError(f"c_variant must be one of {PLACEMENT_C_VARIANTS}")
        else:
            raise ValueError("small-sample placement must be 'a', 'b' or 'c'")
        return cls((width, height, width), standoff, center, placement)

    @property
    def volume(self) -> float:
        wx, wy, wz = self.size
        return wx * wy * wz

    def default_edge(self, loop_side: float) -> float:
        return min(self.standoff, loop_side / 20, min(self.size) / 4)


@dataclass(frozen=True)
class VoxelGrid:
    """Uniform midpoint-rule grid with kernels reduced along x.

    ``kz_yz[j, k]`` holds sum_i B_z^(spin)(x_i, y_j, z_k) and ``kperp2_yz``
    the sum of (B_perp^(spin))^2; the RF drive is x-invariant, so these
    slabs carry everything the signal sums need.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    voxel_volume: float
    kz_yz: np.ndarray
    kperp2_yz: np.ndarray
    geometry: SampleGeometry
    qubit: QubitParams
    gamma: float
    density: float = 1.0

    @property
    def shape(self):
        return (self.x.size, self.y.size, self.z.size)

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    @property
    def loop_side(self) -> float:
        return self.qubit.loop_side

    @property
    def edge(self) -> float:
        """Largest voxel side length."""
        return max(w / n for w, n in zip(self.geometry.size, self.shape))

    @property
    def total_volume(self) -> float:
        return self.voxel_volume * self.n_voxels

    def with_density(self, rho: float) -> "VoxelGrid":
        if rho < 0:
            raise ValueError("spin density must be non-negative")
        return replace(self, density=float(rho))

    def centers(self) -> np.ndarray:
        X, Y, Z = np.meshgrid(self.x, self.y, self.z, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    def full_kernels(self):
        """Per-voxel (B_z^(spin), B_perp^(spin)), shape (nx, ny, nz) each. Memory heavy."""
        B = loop_field(LoopGeometry.from_qubit(self.qubit), self.centers())
        fac = reciprocity_factor(self.qubit, self.gamma)
        return fac * B[..., 2], fac * np.hypot(B[..., 0], B[..., 1])


def _axis(center, width, n):
    return center - width / 2 + (np.arange(n) + 0.5) * (width / n)


def discretize(geom: SampleGeometry, qubit: QubitParams, gamma: float = PROTON_GAMMA,
               resolution: float | None = None, threads: int = 1,
               max_voxels: int = MAX_VOXELS) -> VoxelGrid:
    """Build the voxel grid for ``geom`` and precompute its kernels.

    ``resolution`` is the target voxel edge in meters; each axis gets
    ceil(width / resolution) cells so no edge exceeds it. The default is
    min(h, L/20, smallest sample side / 4).
    """
    edge = geom.default_edge(qubit.loop_side) if resolution is None else float(resolution)
    if not edge > 0:
        raise ValueError("resolution must be positive")
    counts = [max(1, math.ceil(w / edge * (1 - 1e-12))) for w in geom.size]
    total = counts[0] * counts[1] * counts[2]
    if total > max_voxels:
        raise CapacityError(
            f"{counts[0]}x{counts[1]}x{counts[2]} = {total:.3g} voxels exceeds the "
            f"{max_voxels:.0e} budget; use a coarser resolution (edge >= "
            f"{(geom.volume / max_voxels) ** (1 / 3):.3g} m) or a smaller sample")
    (wx, wy, wz), (cx, cz) = geom.size, geom.center
    x = _axis(cx, wx, counts[0])
    y = geom.standoff + (np.arange(counts[1]) + 0.5) * (wy / counts[1])
    z = _axis(cz, wz, counts[2])
    loop = LoopGeometry.from_qubit(qubit)
    fac = reciprocity_factor(qubit, gamma)
    X, Z = np.meshgrid(x, z, indexing="ij")

    def layer(yv):
        pts = np.stack([X, np.full_like(X, yv), Z], axis=-1)
        B = loop_field(loop, pts)
        return (fac * B[..., 2].sum(axis=0),
                fac * fac * (B[..., 0] ** 2 + B[..., 1] ** 2).sum(axis=0))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            layers = list(pool.map(layer, y))
    else:
        layers = [layer(yv) for yv in y]
    kz = np.array([l[0] for l in layers])
    kp2 = np.array([l[1] for l in layers])
    if not (np.all(np.isfinite(kz)) and np.all(np.isfinite(kp2))):
        raise ValueError("non-finite kernel value; the sample intersects the loop wire")
    dv = wx * wy * wz / total
    return VoxelGrid(x, y, z, dv, kz, kp2, geom, qubit, float(gamma))


def dc_signal_field(grid: VoxelGrid, saturation=1.0, polarization: float = 1.0) -> float:
    """Effective DC field B_DC (T) after the drive.

    rho * sum_v V_v B_z^(spin)(r_v) * p_th * saturation(r_v). ``saturation``
    may be a scalar, a (ny, nz) x-invariant slab, or a full (nx, ny, nz) array.
    """
    sat = np.asarray(saturation, dtype=float)
    if sat.ndim == 0:
        s = float(sat) * grid.kz_yz.sum()
    elif sat.shape == grid.kz_yz.shape:
        s = float(np.sum(grid.kz_yz * sat))
    elif sat.shape == grid.shape:
        kz, _ = grid.full_kernels()
        s = float(np.sum(kz * sat))
    else:
        raise ValueError(f"saturation shape {sat.shape} matches neither {grid.kz_yz.shape} "
                         f"nor {grid.shape}")
    return grid.density * grid.voxel_volume * polarization * s


def ac_signal_field(grid: VoxelGrid) -> float:
    """Effective AC field B_AC = sqrt(rho * sum_v V_v (B_perp^(spin))^2) (T)."""
    return math.sqrt(grid.density * grid.voxel_volume * float(grid.kperp2_yz.sum()))
