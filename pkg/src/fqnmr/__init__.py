"""Flux-qubit NMR sensitivity simulator.

Computes nuclear-spin signals seen by a superconducting flux qubit and the
minimum detectable spin density / spin number for two protocols: a Ramsey
measurement after spatially asymmetric RF saturation, and dynamical
decoupling that picks up the Larmor-precession AC field.
"""

__version__ = "0.1.0"

from .fluxqubit import (
    QubitParams,
    LoopGeometry,
    SingularEvaluationError,
    qubit_frequency,
    field_sensitivity,
    effective_gyro,
    loop_field,
    spin_to_qubit_dc_kernel,
    spin_to_qubit_ac_kernel,
)
from .rfdrive import (
    RfLine,
    DriveEnvironment,
    rf_coupling,
    steady_state_depolarization,
    averaged_depolarization,
    drive_map,
)
from .ensemble import (
    Environment,
    SampleGeometry,
    VoxelGrid,
    thermal_polarization,
    discretize,
    dc_signal_field,
    ac_signal_field,
)
from .protocols import (
    RamseyParams,
    DDParams,
    OutOfRegimeError,
    ramsey_detuning,
    ramsey_signal,
    dc_uncertainty,
    dd_filter_factor,
    dd_signal,
    ac_uncertainty,
    optimize_tau_dd,
)
from .sensitivity import (
    Setup,
    SensitivityResult,
    NoSignalError,
    BracketError,
    min_density,
    min_density_ramsey,
    min_density_dd,
    min_spin_number,
    sweep,
)
