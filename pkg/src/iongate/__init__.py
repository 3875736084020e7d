"""
Simulation of spin-dependent-force two-qubit gates on trapped ions.

Submodules
----------
hilbert
    Truncated spin ⊗ two-mode Fock spaces, states and structured operators.
dynamics
    Trap parameters, Raman drive Hamiltonians, time evolution and the
    forced-oscillator (geometric phase) toolkit.
gates
    Cirac–Zoller, σ_z, σ_φ and fast kicked gates with truth-table analysis.
noise
    Beam geometries, optical path-phase propagation and Monte-Carlo sweeps.
atomic
    Hyperfine levels in a magnetic field, clock pairs and light shifts.
comb
    Electro-optic comb transition rates and Raman spectrum planning.
cli
    ``iongate`` batch front end.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:       # running from a source tree without installation
    __version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, DimensionError, IonGateError, LeakageError,
                     PreconditionError, StepSizeError)
from .hilbert import FockBasis, LinearOperator, SpinMotionState, fidelity, reduced_spin_purity
from .dynamics import (ForceParams, RamanDrive, StarkForceDrive, TrapConfig, build_interaction_hamiltonian,
                       evolve_numeric)
from .gates import GateSchedule, KickEvent, TruthTable

__all__ = [
    "__version__",
    "ConfigError", "ConvergenceError", "DimensionError", "IonGateError", "LeakageError",
    "PreconditionError", "StepSizeError",
    "FockBasis", "LinearOperator", "SpinMotionState", "fidelity", "reduced_spin_purity",
    "ForceParams", "RamanDrive", "StarkForceDrive", "TrapConfig", "build_interaction_hamiltonian",
    "evolve_numeric",
    "GateSchedule", "KickEvent", "TruthTable",
]
