"""Minimum detectable spin density and spin number, and figure sweep drivers."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import R_REF
from .ensemble import (Environment, SampleGeometry, VoxelGrid, ac_signal_field,
                       dc_signal_field, discretize, thermal_polarization)
from .fluxqubit import QubitParams, field_sensitivity
from .protocols import (DDParams, RamseyParams, dc_uncertainty, optimize_tau_dd)
from .rfdrive import (DriveEnvironment, RfLine, averaged_depolarization,
                      current_from_normalized, drive_map, saturation_profile)

SCHEMES = ("ramsey", "dd")
SATURATION_MODES = ("drive", "full")
DEFAULT_BRACKET = (16.0, 30.0)
SMALL_SAMPLE_BRACKET = (16.0, 40.0)
SYMMETRY_TOL = 1e-9


class NoSignalError(ValueError):
    """Raised when the aggregated signal kernel vanishes (e.g. by symmetry)."""


class BracketError(ValueError):
    """Raised when the density bracket does not straddle the SNR = 1 point."""


@dataclass(frozen=True)
class Setup:
    """Everything needed for one sensitivity evaluation.

    ``sample`` is ``"large"`` or a small-sample placement ``"a"``, ``"b"``,
    ``"c"``. ``rf_current=None`` optimizes the RF current for the Ramsey
    scheme; ``saturation="full"`` replaces the drive by complete saturation.
    """

    qubit: QubitParams = field(default_factory=QubitParams)
    env: Environment = field(default_factory=Environment)
    standoff: float = 0.1e-6
    sample: str = "large"
    sample_width: float = 2e-6
    sample_height: float = 0.1e-6
    placement_c: str = "z_edge"
    rf_offset: float = 2e-6
    rf_reference: str = "edge"
    rf_current: float | None = None
    saturation: str = "drive"
    n: int = 1
    convention: str = "total"
    polarization: str = "exact"
    resolution: float | None = None
    threads: int = 1

    def __post_init__(self):
        if self.saturation not in SATURATION_MODES:
            raise ValueError(f"saturation must be one of {SATURATION_MODES}")
        if self.sample not in ("large", "a", "b", "c"):
            raise ValueError("sample must be 'large', 'a', 'b' or 'c'")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def replace(self, **kw) -> "Setup":
        return replace(self, **kw)

    def geometry(self) -> SampleGeometry:
        L = self.qubit.loop_side
        if self.sample == "large":
            return SampleGeometry.large(L, self.standoff)
        return SampleGeometry.small(L, self.sample_width, self.sample_height, self.standoff,
                                    self.sample, self.placement_c)

    def grid(self) -> VoxelGrid:
        return _cached_grid(self.geometry(), self.qubit, self.env.gamma, self.resolution,
                            self.threads)

    def rf_line(self, current: float = 0.0) -> RfLine:
        return RfLine(self.rf_offset, current, self.rf_reference)

    def drive(self) -> DriveEnvironment:
        return DriveEnvironment(self.env.relaxation, self.env.linewidth, self.p_th)

    @property
    def p_th(self) -> float:
        return thermal_polarization(self.env, self.polarization)


@lru_cache(maxsize=16)
def _cached_grid(geom, qubit, gamma, resolution, threads):
    return discretize(geom, qubit, gamma, resolution, threads)


def clear_grid_cache():
    _cached_grid.cache_clear()


@dataclass
class SensitivityResult:
    """Outcome of one SNR = 1 solve (SI units; densities also in cm^-3)."""

    scheme: str
    rho_min: float
    n_min: float
    sample_volume: float
    tau: float
    rf_current: float | None
    rf_offset: float | None
    n: int | None
    iterations: int
    bracket_width: float
    voxel_edge: float
    n_voxels: int
    signal: float
    uncertainty: float

    @property
    def rho_min_cm3(self) -> float:
        return self.rho_min * 1e-6

    def as_dict(self) -> dict:
        d = asdict(self)
        d["rho_min_cm3"] = self.rho_min_cm3
        return d


def ramsey_signal_per_density(setup: Setup, current: float | None = None) -> float:
    """|B_DC| per unit density (T m^3) for a given RF current, or full saturation."""
    grid = setup.grid()
    if setup.saturation == "full":
        sat = 1.0
    else:
        sat = saturation_profile(grid, setup.rf_line(current), setup.env.gamma, setup.drive())
    return abs(dc_signal_field(grid, sat, setup.p_th))


def _symmetric(grid: VoxelGrid, sat) -> bool:
    total = float(np.sum(grid.kz_yz * sat))
    scale = float(np.sum(np.abs(grid.kz_yz) * np.max(sat)))
    return scale == 0 or abs(total) <= SYMMETRY_TOL * scale


def optimize_rf_current(setup: Setup, log_range=(-2.0, 3.0), points=101):
    """RF current maximizing |B_DC|: log scan of the normalized current, then bounded refine.

    Returns (current in A, |B_DC| per unit density).
    """
    env = setup.env

    def neg(logx):
        cur = float(current_from_normalized(10.0**logx, env.gamma, env.linewidth))
        return -ramsey_signal_per_density(setup, cur)

    grid_x = np.linspace(*log_range, points)
    vals = np.array([neg(v) for v in grid_x])
    i = int(np.argmin(vals))
    step = grid_x[1] - grid_x[0]
    lo, hi = max(grid_x[i] - step, log_range[0]), min(grid_x[i] + step, log_range[1])
    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    best = res.x if res.fun <= vals[i] else grid_x[i]
    cur = float(current_from_normalized(10.0**best, env.gamma, env.linewidth))
    return cur, -min(res.fun, vals[i])


def min_density_ramsey(setup: Setup) -> SensitivityResult:
    """Density where |B_DC| equals the Ramsey uncertainty at tau = T2*.

    B_DC is linear in density and the uncertainty does not depend on it, so
    the SNR = 1 point is a single division.
    """
    grid = setup.grid()
    q = setup.qubit
    current = None
    if setup.saturation == "full":
        sat = 1.0
        per_rho = ramsey_signal_per_density(setup)
    elif setup.rf_current is not None:
        current = setup.rf_current
        sat = saturation_profile(grid, setup.rf_line(current), setup.env.gamma, setup.drive())
        per_rho = abs(dc_signal_field(grid, sat, setup.p_th))
    else:
        current, per_rho = optimize_rf_current(setup)
        sat = saturation_profile(grid, setup.rf_line(current), setup.env.gamma, setup.drive())
    if _symmetric(grid, np.broadcast_to(sat, grid.kz_yz.shape)) or per_rho == 0:
        raise NoSignalError(
            "B_DC vanishes: the saturation pattern is symmetric about the loop "
            f"(sample {setup.sample!r}, saturation {setup.saturation!r})")
    params = RamseyParams.from_qubit(q)
    dB = dc_uncertainty(params, field_sensitivity(q))
    rho = dB / per_rho
    vol = grid.geometry.volume
    return SensitivityResult("ramsey", rho, rho * vol, vol, params.tau, current,
                             setup.rf_offset if setup.saturation == "drive" else None,
                             None, 0, 0.0, grid.edge, grid.n_voxels, per_rho * rho, dB)


def _dd_gap(log_rho, s_ac, omega, template, gp):
    b_ac = math.sqrt(10.0**log_rho * s_ac)
    tau, dB = optimize_tau_dd(template, omega, b_ac, gp)
    return b_ac, dB, tau


def min_density_dd(setup: Setup, bracket=DEFAULT_BRACKET, tol=1e-6, max_iter=200) -> SensitivityResult:
    """Density where B_AC equals the optimized AC uncertainty.

    Bisection on log10(rho / m^-3) over ``bracket``; the uncertainty is
    minimized over tau at every candidate.

    Raises
    ------
    BracketError
        If both bracket ends are on the same side of SNR = 1.
    """
    grid = setup.grid()
    q = setup.qubit
    s_ac = ac_signal_field(grid) ** 2  # per unit density
    if s_ac == 0:
        raise NoSignalError("B_AC kernel vanishes")
    gp = field_sensitivity(q)
    omega = setup.env.larmor
    template = DDParams.from_qubit(q, setup.n, q.T2(setup.n), setup.convention)
    lo, hi = bracket
    b_lo, d_lo, _ = _dd_gap(lo, s_ac, omega, template, gp)
    b_hi, d_hi, _ = _dd_gap(hi, s_ac, omega, template, gp)
    if (b_lo >= d_lo) == (b_hi >= d_hi):
        raise BracketError(
            f"SNR-1 point not bracketed in log10(rho) in [{lo}, {hi}]: B_AC/dB_AC = "
            f"{b_lo / d_lo:.3g} at the low end, {b_hi / d_hi:.3g} at the high end")
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        b, d, _ = _dd_gap(mid, s_ac, omega, template, gp)
        if b >= d:
            hi = mid
        else:
            lo = mid
        it += 1
    log_rho = 0.5 * (lo + hi)
    b, d, tau = _dd_gap(log_rho, s_ac, omega, template, gp)
    rho = 10.0**log_rho
    vol = grid.geometry.volume
    return SensitivityResult("dd", rho, rho * vol, vol, tau, None, None, setup.n, it,
                             hi - lo, grid.edge, grid.n_voxels, b, d)


def min_density(setup: Setup, scheme: str, **kw) -> SensitivityResult:
    if scheme == "ramsey":
        return min_density_ramsey(setup)
    if scheme == "dd":
        return min_density_dd(setup, **kw)
    raise ValueError(f"scheme must be one of {SCHEMES}")


def min_spin_number(setup: Setup, placement: str, width: float, scheme: str = "dd",
                    height: float = 0.1e-6) -> SensitivityResult:
    """N_min = l^2 h' rho_min for a small l x l x h' sample at ``placement``.

    Ramsey runs assume complete saturation of every spin.
    """
    s = setup.replace(sample=placement, sample_width=width, sample_height=height)
    if scheme == "ramsey":
        return min_density_ramsey(s.replace(saturation="full"))
    return min_density_dd(s, bracket=SMALL_SAMPLE_BRACKET)


# -- sweeps ------------------------------------------------------------------

@dataclass
class Table:
    """Column-ordered result table; ``units`` maps column name to unit string."""

    name: str
    columns: list
    units: dict
    rows: list

    def column(self, key):
        return np.array([r[key] for r in self.rows], dtype=float)

    def where(self, **match):
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]


_RESULT_COLUMNS = [("rho_min", "m^-3"), ("rho_min_cm3", "cm^-3"), ("n_min", "1"),
                   ("tau", "s"), ("rf_current", "A"), ("iterations", "1"),
                   ("bracket_width", "log10"), ("voxel_edge", "m"), ("n_voxels", "1"),
                   ("status", "")]


def _result_row(res: SensitivityResult | None, status: str):
    if res is None:
        return {"rho_min": math.inf, "rho_min_cm3": math.inf, "n_min": math.inf,
                "tau": math.nan, "rf_current": math.nan, "iterations": 0,
                "bracket_width": math.nan, "voxel_edge": math.nan, "n_voxels": 0,
                "status": status}
    return {"rho_min": res.rho_min, "rho_min_cm3": res.rho_min_cm3, "n_min": res.n_min,
            "tau": res.tau, "rf_current": math.nan if res.rf_current is None else res.rf_current,
            "iterations": res.iterations, "bracket_width": res.bracket_width,
            "voxel_edge": res.voxel_edge, "n_voxels": res.n_voxels, "status": status}


def _solve(task):
    setup, scheme, placement, width = task
    try:
        if placement is None:
            res = min_density(setup, scheme)
        else:
            res = min_spin_number(setup, placement, width, scheme)
        return _result_row(res, "ok")
    except (NoSignalError, BracketError) as exc:
        return _result_row(None, type(exc).__name__)


def _run(tasks, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_solve, tasks))
    return [_solve(t) for t in tasks]


def _axis(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError(f"empty sweep axis {name!r}")
    return sorted(set(arr.tolist()))


def _fig4(setup, dz=None, current=None, b_ex=5e-3, spin_y=0.1e-6):
    """Averaged depolarization of a single spin vs (z offset from the line, drive)."""
    dz = _axis(np.linspace(-3, 3, 121) if dz is None else dz, "dz")
    xs = _axis(np.linspace(0, 5, 101) if current is None else current, "current")
    env = setup.env.replace(b_ex=b_ex)
    rows = []
    for x in xs:
        for d in dz:
            # gamma mu0 I = x Gamma_tilde R, and the line-to-spin z offset is d R
            dzm = d * R_REF
            lam = x * env.linewidth * R_REF * dzm / (2 * np.pi * (dzm**2 + spin_y**2))
            val = float(averaged_depolarization(lam, env.relaxation, env.linewidth))
            rows.append({"normalized_current": x, "dz_over_R": d, "depolarization_ratio": val})
    return Table("fig4", ["normalized_current", "dz_over_R", "depolarization_ratio"],
                 {"normalized_current": "1", "dz_over_R": "1", "depolarization_ratio": "1"}, rows)


def _fig5(setup, z_rf=None, current=None, b_ex=5e-3, normalize="grid"):
    z_rf = _axis(np.linspace(0.5e-6, 5e-6, 19) if z_rf is None else z_rf, "z_rf")
    xs = _axis(np.geomspace(0.1, 100, 61) if current is None else current, "current")
    s = setup.replace(env=setup.env.replace(b_ex=b_ex))
    cur = current_from_normalized(np.array(xs), s.env.gamma, s.env.linewidth)
    m = drive_map(s.grid(), s.qubit, s.env.gamma, s.drive(), z_rf, cur,
                  reference=s.rf_reference, normalize=normalize)
    rows = []
    for i, z in enumerate(m.z_rf):
        for j, x in enumerate(m.normalized_current):
            rows.append({"z_rf": float(z), "normalized_current": float(x),
                         "detuning_per_density": float(m.detuning[i, j]),
                         "normalized_signal": float(m.normalized[i, j])})
    return Table("fig5", ["z_rf", "normalized_current", "detuning_per_density", "normalized_signal"],
                 {"z_rf": "m", "normalized_current": "1", "detuning_per_density": "rad/s m^3",
                  "normalized_signal": "1"}, rows)


def _sensitivity_table(name, axes, tasks, threads):
    """``axes`` is a list of (column, unit, values-per-task)."""
    results = _run([t[1] for t in tasks], threads)
    rows = []
    for (keys, _), res in zip(tasks, results):
        rows.append({**keys, **res})
    axis_cols = [a for a, _ in axes]
    rows.sort(key=lambda r: tuple(str(r[c]) if isinstance(r[c], str) else r[c] for c in axis_cols))
    units = {a: u for a, u in axes}
    units.update(dict(_RESULT_COLUMNS))
    return Table(name, axis_cols + [c for c, _ in _RESULT_COLUMNS], units, rows)


def _fig6(setup, h=None, loop_side=None, schemes=SCHEMES, threads=1):
    hs = _axis(np.geomspace(0.1e-6, 2e-6, 8) if h is None else h, "h")
    Ls = _axis([2e-6, 6e-6, 10e-6] if loop_side is None else loop_side, "loop_side")
    tasks = []
    for L in Ls:
        for hv in hs:
            for sc in schemes:
                s = setup.replace(qubit=setup.qubit.replace(loop_side=L), standoff=hv,
                                  sample="large")
                tasks.append(({"loop_side": L, "h": hv, "scheme": sc}, (s, sc, None, None)))
    return _sensitivity_table("fig6", [("loop_side", "m"), ("h", "m"), ("scheme", "")],
                              tasks, threads)


def _fig7(setup, b_ex=None, schemes=("ramsey", "dd"), threads=1):
    bs = _axis(np.round(np.arange(0.5, 5.0001, 0.1), 10) * 1e-3 if b_ex is None else b_ex, "b_ex")
    tasks = []
    for b in bs:
        for sc in schemes:
            s = setup.replace(env=setup.env.replace(b_ex=b), sample="large", n=1)
            tasks.append(({"b_ex": b, "scheme": sc}, (s, sc, None, None)))
    return _sensitivity_table("fig7", [("b_ex", "T"), ("scheme", "")], tasks, threads)


def _fig8(setup, b_ex=None, n_values=(1, 2, 4, 6, 8, 10), threads=1):
    bs = _axis(np.round(np.arange(1.0, 10.0001, 0.25), 10) * 1e-3 if b_ex is None else b_ex, "b_ex")
    tasks = []
    for n in sorted(set(int(v) for v in n_values)):
        for b in bs:
            s = setup.replace(env=setup.env.replace(b_ex=b), sample="large", n=n)
            tasks.append(({"n": n, "b_ex": b}, (s, "dd", None, None)))
    return _sensitivity_table("fig8", [("n", "1"), ("b_ex", "T")], tasks, threads)


def _fig10(setup, width=None, placements=("a", "b", "c"), schemes=("ramsey", "dd"),
           b_ex=4e-3, n=8, threads=1):
    ws = _axis(np.geomspace(0.1e-6, 10e-6, 21) if width is None else width, "width")
    base = setup.replace(env=setup.env.replace(b_ex=b_ex), n=n)
    tasks = []
    for p in placements:
        for sc in schemes:
            for w in ws:
                tasks.append(({"placement": p, "scheme": sc, "width": w}, (base, sc, p, w)))
    return _sensitivity_table("fig10", [("placement", ""), ("scheme", ""), ("width", "m")],
                              tasks, threads)


def _custom(setup, b_ex=None, h=None, loop_side=None, n_values=None, schemes=("ramsey", "dd"),
            threads=1):
    bs = _axis([setup.env.b_ex] if b_ex is None else b_ex, "b_ex")
    hs = _axis([setup.standoff] if h is None else h, "h")
    Ls = _axis([setup.qubit.loop_side] if loop_side is None else loop_side, "loop_side")
    ns = sorted(set(int(v) for v in ([setup.n] if n_values is None else n_values)))
    if not ns:
        raise ValueError("empty sweep axis 'n'")
    tasks = []
    for L in Ls:
        for hv in hs:
            for b in bs:
                for sc in schemes:
                    for n in (ns if sc == "dd" else [ns[0]]):
                        s = setup.replace(qubit=setup.qubit.replace(loop_side=L), standoff=hv,
                                          env=setup.env.replace(b_ex=b), n=n)
                        tasks.append(({"loop_side": L, "h": hv, "b_ex": b, "scheme": sc,
                                       "n": n}, (s, sc, None, None)))
    return _sensitivity_table("custom", [("loop_side", "m"), ("h", "m"), ("b_ex", "T"),
                                         ("scheme", ""), ("n", "1")], tasks, threads)


PLANS = {"fig4": _fig4, "fig5": _fig5, "fig6": _fig6, "fig7": _fig7, "fig8": _fig8,
         "fig10": _fig10, "custom": _custom}


def sweep(plan: str, setup: Setup | None = None, **axes) -> Table:
    """Run a named sweep plan and return a table sorted by its axes.

    Plans: fig4 (single-spin depolarization map), fig5 (drive map), fig6
    (rho_min vs h and L), fig7 (rho_min vs B_ex), fig8 (DD rho_min vs B_ex
    and n), fig10 (N_min vs sample width and placement), custom.
    Keyword arguments override the plan's default axes.
    """
    if plan not in PLANS:
        raise ValueError(f"unknown sweep plan {plan!r}; choose from {sorted(PLANS)}")
    setup = Setup() if setup is None else setup
    if plan in ("fig6", "fig7", "fig8", "fig10", "custom"):
        axes.setdefault("threads", setup.threads)
    return PLANS[plan](setup, **axes)
