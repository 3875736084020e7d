"""
Two-qubit gate schemes built on :mod:`iongate.dynamics`.

* Cirac–Zoller: blue-sideband π pulse on the control, an auxiliary-level 2π
  phase flip on the target, and the inverse sideband pulse; a CNOT follows by
  sandwiching the phase gate between carrier π/2 rotations of the target.
* σ_z gate: a state-dependent optical-dipole force on the stretch mode.
* σ_φ gate: a bichromatic red + blue sideband force whose spin basis is set by
  the optical spin phase ``φ_S``.
* Fast gate: instantaneous spin-dependent kicks interleaved with free motion.

Computational order throughout is ``↑↑, ↑↓, ↓↑, ↓↓`` and a truth table's
column ``j`` holds the output amplitudes for input ``j``.

Rotation convention for single-qubit carrier pulses::

    R(θ, φ) = exp[(θ/2)(e^{-iφ} σ₊ − e^{iφ} σ₋)]

so ``R(π/2, φ)`` maps ``α|↑⟩ + β|↓⟩`` to
``[(α + e^{-iφ}β)|↑⟩ + (β − e^{iφ}α)|↓⟩]/√2``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .dynamics import (HBAR, ForceParams, RamanDrive, StarkForceDrive, TrapConfig,
                       displacement_operator, evolve_constant, evolve_numeric,
                       free_mode_evolution, interaction_terms)
from .errors import ConvergenceError, DimensionError, LeakageError, PreconditionError
from .hilbert import (DOWN, UP, FockBasis, LinearOperator, SpinMotionState, factor_dims,
                      mode_axis, reduced_spin_purity, sigma_phi, spin_axis, truncation_report)

COMPUTATIONAL_LABELS = ("uu", "ud", "du", "dd")
GROUND_STATE_TOL = 1e-6


# ----------------------------------------------------------------------------
# ideal tables
# ----------------------------------------------------------------------------

def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    """Single-qubit carrier rotation ``R(θ, φ)`` in the (↑, ↓) basis."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, s * np.exp(-1j * phi)], [-s * np.exp(1j * phi), c]], dtype=complex)


def phase_basis_rotation(phi: float) -> np.ndarray:
    """Columns are the ``+1`` and ``−1`` eigenvectors of ``σ_φ``; equals ``R(−π/2, φ)``."""
    return rotation_matrix(-np.pi / 2, phi)


def ideal_phase_gate() -> np.ndarray:
    """Controlled phase flip: ``|↓↓⟩ → −|↓↓⟩``."""
    return np.diag([1, 1, 1, -1]).astype(complex)


def ideal_cnot(phi: float) -> np.ndarray:
    """Phase gate conjugated by ``R(±π/2, φ)`` on the target.

    The flipped block is ``[[0, e^{-iφ}], [e^{iφ}, 0]]``, so
    ``|↓↑⟩ → e^{iφ}|↓↓⟩`` and ``|↓↓⟩ → e^{-iφ}|↓↑⟩``.
    """
    r = np.kron(np.eye(2), rotation_matrix(np.pi / 2, phi))
    return r.conj().T @ ideal_phase_gate() @ r


def ideal_sigma_z() -> np.ndarray:
    """Anti-aligned spins pick up ``i``: ``diag(1, i, i, 1)``."""
    return np.diag([1, 1j, 1j, 1])


def ideal_sigma_phi(phi_s1: float, phi_s2: float) -> np.ndarray:
    """``(1 − i σ_{φ₁} σ_{φ₂})/√2`` in the computational basis."""
    pp = np.kron(sigma_phi(phi_s1), sigma_phi(phi_s2))
    return (np.eye(4) - 1j * pp) / np.sqrt(2)


# ----------------------------------------------------------------------------
# truth tables
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TruthTable:
    """Spin map of a gate, projected onto the initial motional state.

    Attributes
    ----------
    matrix : ndarray, shape (4, 4)
        Column ``j`` is the output spin amplitude vector for input ``j``.
    purities : tuple
        Reduced spin purity of each full output state.
    truncation : dict
        Highest populated Fock levels and edge populations over all outputs.
    """

    matrix: np.ndarray
    purities: tuple = ()
    truncation: dict = field(default_factory=dict)

    def process_fidelity(self, ideal) -> float:
        """``|Tr(E†A)|² / 16``; insensitive to one global phase."""
        ideal = np.asarray(ideal)
        return float(abs(np.trace(ideal.conj().T @ self.matrix)) ** 2 / 16)

    def row_fidelities(self, ideal) -> np.ndarray:
        """``|⟨E_j|A_j⟩|²`` for each computational input ``j``."""
        ideal = np.asarray(ideal)
        return np.abs(np.sum(ideal.conj() * self.matrix, axis=0)) ** 2

    def rotated(self, local: np.ndarray) -> "TruthTable":
        """Table expressed in the basis whose states are the columns of ``local`` (4×4)."""
        return TruthTable(local.conj().T @ self.matrix @ local, self.purities, self.truncation)

    def global_phase_fixed(self) -> np.ndarray:
        """Matrix with the phase of its largest entry removed."""
        k = np.unravel_index(np.argmax(np.abs(self.matrix)), self.matrix.shape)
        return self.matrix * np.exp(-1j * np.angle(self.matrix[k]))

    def overlap_fidelity(self, other: "TruthTable") -> float:
        """Normalised ``|Tr(B†A)|² / (Tr(A†A) Tr(B†B))``: 1 iff the tables agree up to one phase and scale."""
        a, b = self.matrix, other.matrix
        num = abs(np.trace(b.conj().T @ a)) ** 2
        return float(num / (np.vdot(a, a).real * np.vdot(b, b).real))


def computational_inputs(basis: FockBasis, fock=(0, 0)) -> list[SpinMotionState]:
    return [SpinMotionState.computational(basis, lab, fock) for lab in COMPUTATIONAL_LABELS]


def truth_table_from_states(outputs: Sequence[SpinMotionState], motional=None) -> TruthTable:
    """Project four outputs onto a motional state (default: that of ``|↑↑⟩`` input ``|0,0⟩``)."""
    if len(outputs) != 4:
        raise DimensionError("four outputs are required")
    basis = outputs[0].basis
    if motional is None:
        motional = np.zeros(basis.dim**2, dtype=complex)
        motional[0] = 1.0
    table = np.stack([o.spin_block() @ np.conj(motional) for o in outputs], axis=1)
    reports = [truncation_report(o) for o in outputs]
    trunc = {k: max(r[k] for r in reports) for k in reports[0]}
    return TruthTable(table, tuple(reduced_spin_purity(o) for o in outputs), trunc)


def apply_spin_matrix(state: SpinMotionState, matrix: np.ndarray) -> SpinMotionState:
    """Apply a spin-only operator (``2^q × 2^q``) to every motional component."""
    return state.with_amplitudes((np.asarray(matrix) @ state.spin_block()).reshape(-1))


# ----------------------------------------------------------------------------
# carrier pulses and Cirac–Zoller
# ----------------------------------------------------------------------------

def _single_qubit_operator(state: SpinMotionState, ion: int, matrix: np.ndarray) -> LinearOperator:
    return LinearOperator(matrix, state.dims, (spin_axis(ion, state.qubit_count),), unitary=True)


def carrier_pulse(state: SpinMotionState, theta: float, phi: float, target_ion: int = 1,
                  method: str = "analytic", trap: TrapConfig | None = None,
                  rabi: float = 2 * np.pi * 100e3):
    """Resonant carrier rotation ``R(θ, φ)`` on one ion.

    ``method="drive"`` evolves a copropagating carrier drive (``η = 0``) with
    base Rabi frequency ``rabi`` for ``|θ|/rabi``; the optical phase that
    realises pulse phase ``φ`` is ``Δφ = φ − π/2``.  ``"analytic"`` applies the
    rotation matrix directly.
    """
    if not 1 <= target_ion <= state.qubit_count:
        raise PreconditionError(f"target ion {target_ion} out of range")
    if method == "analytic":
        return _single_qubit_operator(state, target_ion, rotation_matrix(theta, phi)).apply(state)
    if method != "drive":
        raise PreconditionError(f"unknown method {method!r}")
    if trap is None:
        raise PreconditionError("the drive method needs a trap")
    if theta < 0:
        theta, phi = -theta, phi + np.pi
    rabis = [0.0, 0.0]
    rabis[target_ion - 1] = rabi
    drive = RamanDrive(tuple(rabis), 0.0, "carrier", optical_phase=phi - np.pi / 2, copropagating=True)
    h = interaction_terms(drive, trap, state.basis, state.qubit_count)(0.0)
    return evolve_constant(h, state, theta / rabi)


def _require_ground(state: SpinMotionState, mode: int):
    pops = state.mode_populations(mode)
    excess = float(pops.sum() - pops[0]) / max(float(pops.sum()), 1e-300)
    if excess > GROUND_STATE_TOL:
        raise PreconditionError(f"mode {mode} not in its ground state (population {excess:.3g} above n = 0)")


def cirac_zoller_phase_gate(state, trap: TrapConfig, mode: int = 1, rabi: float = 2 * np.pi * 50e3,
                            control: int = 1, target: int = 2):
    """Sideband-level Cirac–Zoller controlled phase flip.

    1. Blue-sideband π pulse on the control maps ``|↓, 0⟩ → |↑, 1⟩``.
    2. A 2π excursion through an auxiliary level flips the sign of
       ``|↓⟩_target ⊗ |1⟩_mode``.
    3. The blue-sideband π pulse with its phase advanced by π undoes step 1.

    The π pulses are exact for the ``0 ↔ 1`` pair including Debye–Waller
    weights; the mode must start in its ground state.
    """
    states = [state] if isinstance(state, SpinMotionState) else list(state)
    for s in states:
        if s.qubit_count != 2:
            raise PreconditionError("the Cirac–Zoller gate needs two qubits")
        _require_ground(s, mode)
    basis = states[0].basis
    rabis = [0.0, 0.0]
    rabis[control - 1] = rabi
    eta = trap.eta(mode) * trap.mode_sign(control, mode)
    other = 2 if mode == 1 else 1
    # 0 -> 1 matrix element with the spectator at n = 0
    c01 = abs(eta) * np.exp(-(trap.eta(1) ** 2 + trap.eta(2) ** 2) / 2)
    t_pi = np.pi / (rabi * c01)

    first = RamanDrive(tuple(rabis), 0.0, "blue", mode=mode, optical_phase=0.0)
    inverse = RamanDrive(tuple(rabis), 0.0, "blue", mode=mode, optical_phase=np.pi)
    h1 = interaction_terms(first, trap, basis)(0.0)
    h3 = interaction_terms(inverse, trap, basis)(0.0)

    dims = factor_dims(basis, 2)
    flip = np.ones((2, basis.dim), dtype=complex)
    flip[DOWN, 1] = -1.0
    aux = LinearOperator(np.diag(flip.reshape(-1)), dims,
                         (spin_axis(target, 2), mode_axis(mode, 2)), unitary=True)

    out = evolve_constant(h1, states, t_pi)
    out = [aux.apply(s) for s in out]
    out = evolve_constant(h3, out, t_pi)
    return out[0] if isinstance(state, SpinMotionState) else out


def cirac_zoller_cnot(state, phi: float, trap: TrapConfig, mode: int = 1, **kwargs):
    """Carrier ``R(π/2, φ)`` on the target, phase gate, then ``R(−π/2, φ)``."""
    single = isinstance(state, SpinMotionState)
    states = [state] if single else list(state)
    out = [carrier_pulse(s, np.pi / 2, phi, target_ion=2) for s in states]
    out = cirac_zoller_phase_gate(out, trap, mode, **kwargs)
    out = [carrier_pulse(s, -np.pi / 2, phi, target_ion=2) for s in out]
    return out[0] if single else out


# ----------------------------------------------------------------------------
# σ_z gate
# ----------------------------------------------------------------------------

def ground_coupling(trap: TrapConfig, mode: int = 2, delta_k: float | None = None) -> float:
    """``η_ν e^{-(η₁²+η₂²)/2}``: the ``0 → 1`` sideband weight with the spectator in ``n = 0``."""
    scale = 1.0 if delta_k is None else abs(delta_k) / abs(trap.delta_k)
    e1, e2 = trap.eta(1) * scale, trap.eta(2) * scale
    return (e1 if mode == 1 else e2) * np.exp(-(e1**2 + e2**2) / 2)


def spacing_phase_of(trap: TrapConfig) -> float:
    """``Δk (X₀,₁ − X₀,₂)`` wrapped to ``[0, 2π)``."""
    x1, x2 = trap.ion_positions
    return float(np.mod(trap.delta_k * (x1 - x2), 2 * np.pi))


def _wrapped(phase: float) -> float:
    return float(np.angle(np.exp(1j * phase)))


def sigma_z_drive(trap: TrapConfig, delta: float, optical_phase: float = 0.0,
                  phase: float = np.pi / 2) -> StarkForceDrive:
    """Stretch-mode Stark force calibrated for closed-loop phase ``phase`` on anti-aligned spins.

    ``Ω↑ = −Ω↓ = ΔΩ/2`` on both ions with ``ΔΩ · c = δ √(2 phase/π)``.
    """
    c = ground_coupling(trap, 2)
    d_omega = abs(delta) * np.sqrt(2 * phase / np.pi) / c
    per_ion = (d_omega / 2, -d_omega / 2)
    return StarkForceDrive((per_ion, per_ion), delta, 2, optical_phase)


def default_dt(hamiltonian, fraction: float = 0.04) -> float:
    return fraction / max(hamiltonian.norm_bound(), 1e-300)


def sigma_z_gate(trap: TrapConfig, drive: StarkForceDrive, initial_state, method: str = "numeric",
                 exploratory: bool = False, dt: float | None = None, check: bool = True, exact: bool = True):
    """Run the σ_z force for one loop, ``T = 2π/|δ|``.

    Parameters
    ----------
    method : {"numeric", "analytic"}
        ``numeric`` integrates the full Hamiltonian with exact Debye–Waller
        weights; ``analytic`` applies ``e^{iΦ}D(α)`` per spin branch using
        the ground-state coupling.
    exploratory : bool
        Allow ion spacings that break ``Δk(X₀,₁ − X₀,₂) = 2nπ``.
    exact : bool
        Numeric method only: keep the full Debye–Waller matrix elements
        (default) or use the Lamb–Dicke expansion.
    """
    if not exploratory and abs(_wrapped(spacing_phase_of(trap))) > 1e-6:
        raise PreconditionError("ion spacing is not an integer number of optical periods "
                                "(use exploratory=True to run anyway)")
    t_gate = 2 * np.pi / abs(drive.detuning)
    single = isinstance(initial_state, SpinMotionState)
    states = [initial_state] if single else list(initial_state)
    if method == "numeric":
        h = interaction_terms(drive, trap, states[0].basis, states[0].qubit_count, exact=exact)
        out = evolve_numeric(h, states, t_gate, dt or default_dt(h), check=check)
    elif method == "analytic":
        params = sigma_z_force_params(trap, drive)
        out = [params.evolve(s, t_gate) for s in states]
    else:
        raise PreconditionError(f"unknown method {method!r}")
    return out[0] if single else out


def sigma_z_force_params(trap: TrapConfig, drive: StarkForceDrive) -> ForceParams:
    """Per-configuration forces of a Stark-force drive in the Lamb–Dicke limit."""
    c = ground_coupling(trap, drive.mode)
    theta = [trap.delta_k * x - p for x, p in zip(trap.ion_positions, np.broadcast_to(drive.optical_phase, 2))]
    x0 = trap.q(drive.mode)
    forces = []
    for s1 in (UP, DOWN):
        for s2 in (UP, DOWN):
            coef = sum(0.5 * drive.rabi[i][s] * trap.mode_sign(i + 1, drive.mode) * c * np.exp(1j * theta[i])
                       for i, s in enumerate((s1, s2)))
            forces.append(2 * HBAR * coef / x0)
    return ForceParams(tuple(forces), drive.detuning, x0, drive.mode)


# ----------------------------------------------------------------------------
# σ_φ gate
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SidebandPair:
    """Wave-vector difference and optical phase difference of one field pair."""

    delta_k: float
    delta_phi: float


def spin_motion_phases_from_pairs(red: SidebandPair, blue: SidebandPair, positions) -> list[tuple[float, float]]:
    """``(φ_S, φ_M)`` per ion from the red and blue pair phases."""
    out = []
    for x in positions:
        th_r = red.delta_k * x - red.delta_phi
        th_b = blue.delta_k * x - blue.delta_phi
        out.append((-(th_r + th_b) / 2, (th_r - th_b) / 2))
    return out


def sigma_phi_drives(trap: TrapConfig, delta: float, red: SidebandPair, blue: SidebandPair,
                     rabi: float | tuple | None = None, phase: float = np.pi / 2) -> list[RamanDrive]:
    """Red (``d = +δ``) and blue (``d = −δ``) stretch-mode drives on both ions.

    Without ``rabi`` the common Rabi frequency is ``Ω = δ √(2 phase/π) / (2c)``,
    which puts phase ``phase`` on anti-aligned ``σ_φ`` eigenstates.
    """
    if red.delta_k == 0 or blue.delta_k == 0:
        raise PreconditionError("sideband pairs need a non-zero wave-vector difference")
    for pair in (red, blue):
        if abs(abs(pair.delta_k) - abs(trap.delta_k)) > 1e-9 * abs(trap.delta_k):
            raise PreconditionError("|Δk| of each sideband pair must match the trap's Δk")
    if rabi is None:
        c = ground_coupling(trap, 2, red.delta_k)
        rabi = abs(delta) * np.sqrt(2 * phase / np.pi) / (2 * c)
    x = trap.ion_positions
    red_phase = tuple(trap.delta_k * xi - red.delta_k * xi + red.delta_phi for xi in x)
    blue_phase = tuple(trap.delta_k * xi - blue.delta_k * xi + blue.delta_phi for xi in x)
    # optical_phase absorbs the pair's own Δk so θ_i = Δk_pair X₀,ᵢ − Δφ_pair
    return [RamanDrive(rabi, delta, "red", 2, red_phase),
            RamanDrive(rabi, -delta, "blue", 2, blue_phase)]


def check_force_phases(drives: Sequence[RamanDrive], trap: TrapConfig, tol: float = 1e-6):
    """Verify ``Ω₁ e^{iφ_M,1} = Ω₂ e^{iφ_M,2}`` (opposite forces once the stretch sign is included)."""
    red, blue = drives
    rabi = np.broadcast_to(np.asarray(red.rabi, dtype=complex), 2)
    th_r = [trap.delta_k * x - p for x, p in zip(trap.ion_positions, np.broadcast_to(red.optical_phase, 2))]
    th_b = [trap.delta_k * x - p for x, p in zip(trap.ion_positions, np.broadcast_to(blue.optical_phase, 2))]
    phi_m = [(r - b) / 2 for r, b in zip(th_r, th_b)]
    f = [rabi[i] * np.exp(1j * phi_m[i]) for i in range(2)]
    if abs(f[0] - f[1]) > tol * max(abs(f[0]), abs(f[1]), 1e-300):
        raise PreconditionError("force-phase condition F₁e^{iφ_M1} = −F₂e^{iφ_M2} violated")


def sigma_phi_gate(trap: TrapConfig, drives: Sequence[RamanDrive], initial_state, method: str = "numeric",
                   exploratory: bool = False, dt: float | None = None, check: bool = True, exact: bool = True):
    """Run the bichromatic σ_φ force for one loop, ``T = 2π/|δ|``.

    ``drives`` is the (red, blue) pair from :func:`sigma_phi_drives`.  The
    ``analytic`` method rotates into the ``σ_φ`` eigenbasis of each ion and
    applies ``e^{iΦ}D(α)`` per branch with the ground-state coupling.
    """
    if not exploratory:
        check_force_phases(drives, trap)
    delta = abs(drives[0].detuning)
    t_gate = 2 * np.pi / delta
    single = isinstance(initial_state, SpinMotionState)
    states = [initial_state] if single else list(initial_state)
    if method == "numeric":
        h = interaction_terms(list(drives), trap, states[0].basis, states[0].qubit_count, exact=exact)
        out = evolve_numeric(h, states, t_gate, dt or default_dt(h), check=check)
    elif method == "analytic":
        phases, params = sigma_phi_force_params(trap, drives)
        v = np.kron(phase_basis_rotation(phases[0][0]), phase_basis_rotation(phases[1][0]))
        out = []
        for s in states:
            s = apply_spin_matrix(s, v.conj().T)
            s = params.evolve(s, t_gate)
            out.append(apply_spin_matrix(s, v))
    else:
        raise PreconditionError(f"unknown method {method!r}")
    return out[0] if single else out


def sigma_phi_force_params(trap: TrapConfig, drives: Sequence[RamanDrive]):
    """Per-ion ``(φ_S, φ_M)`` and the forces on ``σ_φ`` eigenbranches (Lamb–Dicke limit)."""
    red, blue = drives
    rabi = np.broadcast_to(np.asarray(red.rabi, dtype=complex), 2)
    c = ground_coupling(trap, 2)
    th_r = [trap.delta_k * x - p for x, p in zip(trap.ion_positions, np.broadcast_to(red.optical_phase, 2))]
    th_b = [trap.delta_k * x - p for x, p in zip(trap.ion_positions, np.broadcast_to(blue.optical_phase, 2))]
    phases = [(-(r + b) / 2, (r - b) / 2) for r, b in zip(th_r, th_b)]
    x0 = trap.q(2)
    forces = []
    for e1 in (1, -1):
        for e2 in (1, -1):
            coef = sum(0.5 * rabi[i] * c * trap.mode_sign(i + 1, 2) * e * np.exp(-1j * phases[i][1])
                       for i, e in enumerate((e1, e2)))
            forces.append(2 * HBAR * coef / x0)
    return phases, ForceParams(tuple(forces), abs(red.detuning), x0, 2,
                               tuple(p[0] for p in phases), tuple(p[1] for p in phases))


# ----------------------------------------------------------------------------
# Ramsey-wrapped σ_φ gate
# ----------------------------------------------------------------------------

def wrapper_phases(geometry, delta_phi: float, wrapper: str, positions) -> tuple[float, float]:
    """Pulse phases of the wrapping rotations, calibrated to ``φ_S`` at ``δφ = 0``.

    A non-copropagating carrier (``wrapper="carrier"``) shares the path-B
    shift of the gate beams and follows it; a copropagating or microwave
    rotation has no path dependence.
    """
    red0, blue0 = geometry.sideband_pairs(0.0)
    calibrated = [p[0] for p in spin_motion_phases_from_pairs(red0, blue0, positions)]
    if wrapper == "carrier":
        c0 = geometry.carrier_pair(0.0)
        c1 = geometry.carrier_pair(delta_phi)
        # pulse phase = π/2 − (Δk X − Δφ); only its change with δφ matters
        shift = c1.delta_phi - c0.delta_phi
        return tuple(p + shift for p in calibrated)
    if wrapper in ("copropagating", "microwave"):
        return tuple(calibrated)
    raise PreconditionError(f"unknown wrapper {wrapper!r}")


def ramsey_wrapped_gate(trap: TrapConfig, geometry, delta_phi: float, basis: FockBasis,
                        delta: float, wrapper: str | None = None, method: str = "numeric",
                        strict: bool = True, dt: float | None = None) -> TruthTable:
    """σ_φ gate between ``R(−π/2, φ_w)`` and ``R(π/2, φ_w)`` on both ions.

    With wrapper phases that track ``φ_S`` the result is ``diag(1, i, i, 1)``
    for every path shift ``δφ``.  The default wrapper is the one the geometry
    calls for; in strict mode any other choice raises
    :class:`PreconditionError`.
    """
    wanted = geometry.required_wrapper()
    wrapper = wrapper or wanted
    if strict and wrapper != wanted and not {wrapper, wanted} <= {"copropagating", "microwave"}:
        raise PreconditionError(f"{geometry.configuration} geometry needs a {wanted} wrapper, got {wrapper}")
    red, blue = geometry.sideband_pairs(delta_phi)
    drives = sigma_phi_drives(trap, delta, red, blue)
    phi_w = wrapper_phases(geometry, delta_phi, wrapper, trap.ion_positions)
    pre = np.kron(phase_basis_rotation(phi_w[0]), phase_basis_rotation(phi_w[1]))
    states = [apply_spin_matrix(s, pre) for s in computational_inputs(basis)]
    states = sigma_phi_gate(trap, drives, states, method=method, dt=dt, exploratory=not strict)
    states = [apply_spin_matrix(s, pre.conj().T) for s in states]
    return truth_table_from_states(states)


# ----------------------------------------------------------------------------
# fast kicked gate
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class KickEvent:
    """Instantaneous spin-dependent momentum kick from a resonant π-pulse pair.

    ``strength`` scales the kick (a continuous stand-in for several pulse
    pairs fired together); the momentum transfer is
    ``delta_k_sign · strength`` units of ``ħΔk``.
    """

    time: float
    delta_k_sign: int = 1
    eta_1: float = 0.1
    eta_2: float = 0.1 / 3**0.25
    spin_selector: str = "down"
    strength: float = 1.0

    def __post_init__(self):
        if self.delta_k_sign not in (1, -1):
            raise PreconditionError("delta_k_sign must be ±1")
        if self.spin_selector != "down":
            raise PreconditionError("kicks act on |↓⟩ only")

    @property
    def z(self) -> float:
        return self.delta_k_sign * self.strength


def kick_displacements(kick: KickEvent, config: Sequence[int]) -> tuple[complex, complex]:
    """Mode displacements ``(β₁, β₂)`` imparted to spin configuration ``config``."""
    betas = []
    for mode, eta in ((1, kick.eta_1), (2, kick.eta_2)):
        total = sum(TrapConfig.mode_sign(ion, mode) for ion, s in enumerate(config, start=1) if s == DOWN)
        betas.append(1j * kick.z * eta * total)
    return tuple(betas)


def _spin_configs(qubit_count: int):
    return [tuple(int(b) for b in np.binary_repr(k, qubit_count)) for k in range(2**qubit_count)]


def fast_kick_pair(state: SpinMotionState, kick: KickEvent, guard: bool = True) -> SpinMotionState:
    """Apply ``exp(i z η_ν ξ_{i,ν} (â_ν + â_ν†))`` on the ``|↓⟩`` part of each ion.

    ``ξ`` is the mode participation sign (``−1`` for ion 2 in the stretch
    mode), so ``|↓↓⟩`` receives ``2iη₁`` on the centre-of-mass mode and
    nothing on the stretch mode.
    """
    n_max = state.basis.n_max
    block = state.spin_block().copy()
    inner = (state.basis.dim, state.basis.dim)
    cache = {}
    for s, config in enumerate(_spin_configs(state.qubit_count)):
        b1, b2 = kick_displacements(kick, config)
        if guard and max(abs(b1), abs(b2)) ** 2 > n_max / 4:
            raise LeakageError("kick displacement exceeds the n_max/4 guard")
        for b in (b1, b2):
            if b not in cache:
                cache[b] = displacement_operator(n_max, b)
        psi = block[s].reshape(inner)
        block[s] = (cache[b1] @ psi @ cache[b2].T).reshape(-1)
    return state.with_amplitudes(block.reshape(-1))


@dataclass(frozen=True)
class GateSchedule:
    """Ordered gate steps.

    Each step is a :class:`KickEvent`, a ``("free", duration)`` tuple, or a
    ``("drive", RamanDrive, duration)`` tuple.  ``omegas`` are the mode
    frequencies used for free evolution.
    """

    steps: tuple
    label: str = "fast_kick"
    omegas: tuple = ()

    LABELS = ("cirac_zoller", "sigma_z", "sigma_phi", "fast_kick")

    def __post_init__(self):
        if self.label not in self.LABELS:
            raise PreconditionError(f"unknown schedule label {self.label!r}")
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.duration <= 0 and not any(isinstance(s, KickEvent) for s in self.steps):
            raise PreconditionError("schedule must have positive duration or contain kicks")

    @property
    def kicks(self) -> list[KickEvent]:
        return [s for s in self.steps if isinstance(s, KickEvent)]

    @property
    def duration(self) -> float:
        total = 0.0
        for s in self.steps:
            if isinstance(s, tuple) and s[0] == "free":
                total += s[1]
            elif isinstance(s, tuple) and s[0] == "drive":
                total += s[2]
        return total

    @classmethod
    def from_kicks(cls, kicks: Sequence[KickEvent], omegas, t_final: float | None = None) -> "GateSchedule":
        """Interleave time-stamped kicks with free evolution, ending at ``t_final``."""
        kicks = sorted(kicks, key=lambda k: k.time)
        steps, t = [], 0.0
        for k in kicks:
            if k.time < t - 1e-18:
                raise PreconditionError("kick times must be non-negative")
            if k.time > t:
                steps.append(("free", k.time - t))
                t = k.time
            steps.append(k)
        end = kicks[-1].time if (t_final is None and kicks) else (t_final or 0.0)
        if end > t:
            steps.append(("free", end - t))
        return cls(tuple(steps), "fast_kick", tuple(omegas))

    def to_json(self) -> str:
        out = []
        for s in self.steps:
            if isinstance(s, KickEvent):
                out.append({"kind": "kick", **asdict(s)})
            elif s[0] == "free":
                out.append({"kind": "free", "duration": s[1]})
            else:
                d = asdict(s[1])
                d["rabi"] = [[complex(r).real, complex(r).imag] for r in np.broadcast_to(s[1].rabi, 2)]
                out.append({"kind": "drive", "drive": d, "duration": s[2]})
        return json.dumps({"label": self.label, "omegas": list(self.omegas), "steps": out}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GateSchedule":
        data = json.loads(text)
        steps = []
        for s in data["steps"]:
            kind = s.pop("kind")
            if kind == "kick":
                steps.append(KickEvent(**s))
            elif kind == "free":
                steps.append(("free", s["duration"]))
            elif kind == "drive":
                d = dict(s["drive"])
                d["rabi"] = tuple(complex(re, im) for re, im in d["rabi"])
                for key in ("optical_phase", "stark_shifts"):
                    if isinstance(d.get(key), list):
                        d[key] = tuple(tuple(v) if isinstance(v, list) else v for v in d[key])
                steps.append(("drive", RamanDrive(**d), s["duration"]))
            else:
                raise PreconditionError(f"unknown step kind {kind!r}")
        return cls(tuple(steps), data["label"], tuple(data.get("omegas", ())))


@dataclass(frozen=True)
class FastGateResult:
    """Outputs of :func:`fast_gate` with per-branch diagnostics.

    ``residuals[config] = (α₁, α₂)`` is the rotating-frame displacement left
    on each spin branch and ``phases[config]`` its accumulated geometric phase.
    """

    states: list
    residuals: dict
    phases: dict

    @property
    def max_residual(self) -> float:
        return max(max(abs(a) for a in v) for v in self.residuals.values())


def schedule_branch_analysis(schedule: GateSchedule, qubit_count: int = 2) -> tuple[dict, dict]:
    """Rotating-frame residual displacement and geometric phase of each spin branch."""
    omegas = schedule.omegas or (0.0, 0.0)
    residuals, phases = {}, {}
    for config in _spin_configs(qubit_count):
        total = [0j, 0j]
        phase = 0.0
        for k in schedule.kicks:
            betas = kick_displacements(k, config)
            for nu in range(2):
                b = betas[nu] * np.exp(1j * omegas[nu] * k.time)
                # D(b) D(total) = D(b + total) e^{i Im(b total*)}
                phase += float(np.imag(b * np.conj(total[nu])))
                total[nu] += b
        residuals[config] = tuple(total)
        phases[config] = phase
    return residuals, phases


def fast_gate(schedule: GateSchedule, state, closure_tol: float | None = 1e-6,
              check_momentum: bool = True) -> FastGateResult:
    """Execute a kick schedule on the Fock space and return to the rotating frame.

    Free evolution rotates each mode by ``e^{-iω_ν t â†â}``; after the last
    step the accumulated rotation is undone so outputs are comparable with
    the inputs.  Raises :class:`PreconditionError` when the momentum kicks do
    not sum to zero or a branch residual exceeds ``closure_tol``.
    """
    kicks = schedule.kicks
    if check_momentum and abs(sum(k.z for k in kicks)) > 1e-9 * max(1.0, sum(abs(k.z) for k in kicks)):
        raise PreconditionError("momentum kicks do not sum to zero")
    single = isinstance(state, SpinMotionState)
    states = [state] if single else list(state)
    residuals, phases = schedule_branch_analysis(schedule, states[0].qubit_count)
    if closure_tol is not None and kicks:
        worst = max(max(abs(a) for a in v) for v in residuals.values())
        if worst > closure_tol:
            raise PreconditionError(f"schedule leaves residual displacement {worst:.3g}")
    omegas = schedule.omegas or (0.0, 0.0)
    out = []
    for s in states:
        elapsed = 0.0
        for step in schedule.steps:
            if isinstance(step, KickEvent):
                s = fast_kick_pair(s, step)
            elif step[0] == "free":
                s = free_mode_evolution(s, step[1], omegas)
                elapsed += step[1]
            else:
                raise PreconditionError("drive steps are not supported in a kick schedule")
        out.append(free_mode_evolution(s, -elapsed, omegas))
    return FastGateResult(out[0] if single else out, residuals, phases)


def _schedule_equations(x, omegas, etas, target):
    t = np.concatenate(([0.0], x[:3]))
    z = x[3:]
    eqs = [np.sum(z)]
    for w in omegas:
        s = np.sum(z * np.exp(1j * w * t))
        eqs += [s.real, s.imag]
    p = []
    for w, eta in zip(omegas, etas):
        acc = 0.0
        for k in range(4):
            for j in range(k):
                # later kick first in the product: the pair phase depends on |t_k − t_j|
                acc += z[k] * z[j] * np.sin(w * abs(t[k] - t[j]))
        p.append(eta**2 * acc)
    eqs += [p[0] - target[0], p[1] - target[1]]
    return np.array(eqs)


def solve_fast_schedule(trap: TrapConfig, eta_1: float | None = None, eta_2: float | None = None,
                        seed: int = 0, starts: int = 400, tol: float = 1e-12) -> GateSchedule:
    """Find four kick times and strengths that close both modes and give ``diag(1, i, i, 1)``.

    Unknowns are the times ``t₂..t₄`` (``t₁ = 0``) and signed strengths
    ``z₁..z₄``.  Equations: zero net momentum, closure of both modes in the
    rotating frame, centre-of-mass branch phase ``0`` and stretch phase ``π/2``.
    Branch phase on mode ν is ``η_ν² Σ_{k>j} z_k z_j sin(ω_ν(t_k − t_j))``.

    The system is solved by Levenberg–Marquardt from random starts.  Only
    time differences matter, so solutions are shifted to start at ``t = 0``.
    """
    eta_1 = trap.eta(1) if eta_1 is None else eta_1
    eta_2 = trap.eta(2) if eta_2 is None else eta_2
    w1 = trap.omega_1
    omegas = (1.0, trap.omega_2 / w1)          # times in units of 1/ω₁
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(starts):
        x0 = np.concatenate((np.sort(rng.uniform(0, 2 * np.pi, 3)), rng.normal(0, 2 / eta_2, 4)))
        sol = least_squares(_schedule_equations, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            args=(omegas, (eta_1, eta_2), (0.0, np.pi / 2)))
        cost = float(np.max(np.abs(sol.fun)))
        if best is None or cost < best[0]:
            best = (cost, sol.x)
        if cost < tol:
            break
    if best is None or best[0] > 1e-9:
        raise ConvergenceError(f"no closing schedule found (residual {best[0] if best else float('nan'):.3g})")
    x = best[1]
    times = np.concatenate(([0.0], x[:3]))
    times = (times - times.min()) / w1
    kicks = [KickEvent(float(t), 1 if z >= 0 else -1, eta_1, eta_2, strength=float(abs(z)))
             for t, z in zip(times, x[3:])]
    return GateSchedule.from_kicks(kicks, (trap.omega_1, trap.omega_2), float(times.max()))
