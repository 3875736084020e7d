"""
Raman-coupling Hamiltonians, the forced harmonic oscillator, and a numeric
time-evolution oracle.

Units: every frequency is angular (rad/s) and every Hamiltonian is stored
as ``H/ħ`` in rad/s.  Times are seconds.

Interaction-frame convention
----------------------------
A drive term is stored as ``K e^{-i f t}`` and always enters together with
its Hermitian conjugate.  For a spin flip the ``σ₊`` part carries
``e^{-i d t}`` where ``d`` is the beat-note offset from the addressed
resonance, so a red sideband detuned by ``+δ`` and a blue sideband detuned by
``-δ`` together form the bichromatic force of the σ_φ gate.  A state-dependent
(σ_z) force is written with the motional raising operator carrying
``e^{+iδt}``::

    H/ħ = (F x₀ / 2ħ) (â† e^{iδt} + h.c.)

which makes the displacement ``α(t) = (F x₀ / 2ħδ)(1 − e^{iδt})`` and the
accumulated phase ``Φ(t) = |F x₀/2ħδ|² (δt − sin δt)`` with
``U(t) = e^{iΦ(t)} D(α(t))`` and ``D(α) = exp(α â† − α* â)``.

Sideband operators use the exact Debye–Waller matrix elements of
``exp(iη(â + â†))`` with the common factor ``i`` of the Δn = ±1 projection
absorbed into the optical phase, so the raising and lowering matrices are
real and transposes of each other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import ceil, prod
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import constants
from scipy.linalg import expm
from scipy.special import eval_genlaguerre

from .errors import (ConvergenceError, DimensionError, LeakageError,
                     PreconditionError, StepSizeError)
from .hilbert import (PROJ_DOWN, PROJ_UP, SIGMA_PLUS, FockBasis, LinearOperator,
                      SpinMotionState, factor_dims, ladder_matrix, mode_axis,
                      spin_axis)

HBAR = constants.hbar
CD111_MASS = 110.904184 * constants.atomic_mass

MAX_PHASE_PER_STEP = 0.05
TAYLOR_TOL = 1e-17
# amplitudes below this are zeroed after each step; subnormal floats in the
# far Fock tail otherwise slow complex matmul down by more than 20x
FLUSH_BELOW = 1e-150


# ----------------------------------------------------------------------------
# trap
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class TrapConfig:
    """Two ions in a harmonic trap with their two axial modes.

    Parameters
    ----------
    omega_1 : float
        Centre-of-mass frequency (rad/s).
    ion_mass : float
        Single-ion mass (kg).
    delta_k : float
        Raman wave-vector difference along the trap axis (1/m).
    ion_positions : tuple of float
        Equilibrium positions ``(X₀,₁, X₀,₂)`` in metres.
    omega_2 : float, optional
        Stretch frequency.  Derived as ``√3 ω₁`` when omitted and checked
        against that relation when given.
    """

    omega_1: float
    ion_mass: float
    delta_k: float
    ion_positions: tuple = (0.0, 0.0)
    omega_2: float | None = None

    def __post_init__(self):
        if self.omega_1 <= 0 or self.ion_mass <= 0:
            raise PreconditionError("trap frequency and ion mass must be positive")
        expected = np.sqrt(3.0) * self.omega_1
        if self.omega_2 is None:
            object.__setattr__(self, "omega_2", float(expected))
        elif abs(self.omega_2 - expected) > 1e-12 * expected:
            raise PreconditionError("stretch frequency must equal √3 × centre-of-mass frequency")
        if len(self.ion_positions) != 2:
            raise PreconditionError("two ion positions are required")
        object.__setattr__(self, "ion_positions", tuple(float(x) for x in self.ion_positions))

    @classmethod
    def from_lamb_dicke(cls, eta_2: float, omega_1: float, ion_mass: float = CD111_MASS,
                        spacing_periods: int | None = None) -> "TrapConfig":
        """Trap whose ``Δk`` gives stretch-mode Lamb–Dicke parameter ``eta_2``.

        Ions sit symmetrically about the origin, separated by an integer number
        of optical periods ``2π/Δk``.  Without ``spacing_periods`` the integer
        closest to the Coulomb equilibrium spacing is used.
        """
        q2 = np.sqrt(HBAR / (2 * ion_mass * np.sqrt(3.0) * omega_1))
        delta_k = np.sqrt(2.0) * eta_2 / q2
        if spacing_periods is None:
            ell = (constants.e**2 / (4 * np.pi * constants.epsilon_0 * ion_mass * omega_1**2)) ** (1 / 3)
            spacing = 2 ** (1 / 3) * ell
            spacing_periods = max(1, round(spacing * delta_k / (2 * np.pi)))
        half = spacing_periods * np.pi / delta_k
        return cls(omega_1, ion_mass, delta_k, (-half, half))

    def mode_frequency(self, mode: int) -> float:
        return self.omega_1 if mode == 1 else self.omega_2

    def q(self, mode: int) -> float:
        """Ground-state spread ``√(ħ/2Mω_ν)``."""
        if mode not in (1, 2):
            raise PreconditionError(f"mode must be 1 or 2, got {mode}")
        return float(np.sqrt(HBAR / (2 * self.ion_mass * self.mode_frequency(mode))))

    def eta(self, mode: int) -> float:
        return float(abs(self.delta_k) * self.q(mode) / np.sqrt(2.0))

    @staticmethod
    def mode_sign(ion: int, mode: int) -> int:
        """Participation sign of ``ion`` in ``mode`` (ion 2 moves opposite in the stretch mode)."""
        return -1 if (mode == 2 and ion == 2) else 1

    def with_positions(self, positions) -> "TrapConfig":
        return TrapConfig(self.omega_1, self.ion_mass, self.delta_k, tuple(positions), self.omega_2)


# ----------------------------------------------------------------------------
# Debye–Waller matrix elements
# ----------------------------------------------------------------------------

def carrier_factors(n_max: int, eta: float) -> np.ndarray:
    """Diagonal ``⟨n|e^{iη(â+â†)}|n⟩ = e^{-η²/2} L_n(η²)`` for ``n = 0..n_max``."""
    n = np.arange(n_max + 1)
    return np.exp(-eta**2 / 2) * eval_genlaguerre(n, 0, eta**2)


def sideband_matrix(n_max: int, eta: float, raising: bool = True) -> np.ndarray:
    """Real first-sideband operator with exact Debye–Waller weights.

    ``M[n+1, n] = η e^{-η²/2} (n+1)^{-1/2} L¹_n(η²)`` for the raising operator;
    the lowering operator is its transpose.  Reduces to ``η â†`` (``η â``)
    for small ``η``.
    """
    n = np.arange(n_max)
    w = eta * np.exp(-eta**2 / 2) * eval_genlaguerre(n, 1, eta**2) / np.sqrt(n + 1)
    m = np.diag(w, k=-1)
    return m if raising else m.T.copy()


def debye_waller(n1: int, n2: int, eta1: float, eta2: float, order="carrier") -> float:
    """Motional-state dependent coupling factor.

    Parameters
    ----------
    n1, n2 : int
        Mode quantum numbers.  For a sideband ``order`` the number on the
        driven mode is the upper state of the transition.
    eta1, eta2 : float
        Lamb–Dicke parameters of the two modes.
    order : {"carrier", "sideband1", "sideband2"} or ("sideband", ν)

    Returns
    -------
    float
        Carrier: ``e^{-(η₁²+η₂²)/2} L_{n₁}(η₁²) L_{n₂}(η₂²)``.  Sideband on mode
        ν: ``⟨n_ν−1|e^{iη_ν(â+â†)}|n_ν⟩ / i`` times the spectator factor
        ``e^{-η'²/2} L_{n'}(η'²)``.
    """
    if n1 < 0 or n2 < 0:
        raise PreconditionError("quantum numbers must be non-negative")
    if order == "carrier":
        return float(np.exp(-(eta1**2 + eta2**2) / 2)
                     * eval_genlaguerre(n1, 0, eta1**2) * eval_genlaguerre(n2, 0, eta2**2))
    if isinstance(order, tuple):
        order = f"sideband{order[1]}"
    if order not in ("sideband1", "sideband2"):
        raise PreconditionError(f"unsupported order {order!r}")
    nu = int(order[-1])
    n, eta = (n1, eta1) if nu == 1 else (n2, eta2)
    n_sp, eta_sp = (n2, eta2) if nu == 1 else (n1, eta1)
    if n < 1:
        raise PreconditionError("sideband factor needs n ≥ 1 on the driven mode")
    driven = eta * np.exp(-eta**2 / 2) * eval_genlaguerre(n - 1, 1, eta**2) / np.sqrt(n)
    spectator = np.exp(-eta_sp**2 / 2) * eval_genlaguerre(n_sp, 0, eta_sp**2)
    return float(driven * spectator)


# ----------------------------------------------------------------------------
# drives
# ----------------------------------------------------------------------------

def _per_ion(value, n: int = 2) -> tuple:
    if np.ndim(value) == 0:
        return (value,) * n
    value = tuple(value)
    if len(value) != n:
        raise PreconditionError(f"expected {n} per-ion values, got {len(value)}")
    return value


@dataclass(frozen=True)
class RamanDrive:
    """Two-photon drive of a carrier or first-sideband transition.

    Parameters
    ----------
    rabi : complex or pair
        Base Rabi frequency per ion (rad/s).  Zero leaves an ion undriven.
    detuning : float
        Beat-note offset ``d`` from the addressed resonance (rad/s); the
        ``σ₊`` part of the coupling carries ``e^{-i d t}``.
    transition : {"carrier", "red", "blue"}
    mode : int
        Mode addressed by a sideband (ignored for the carrier).
    optical_phase : float or pair
        ``Δφ`` of the field pair, per ion if a pair is given.
    stark_shifts : tuple, optional
        ``((χ↑₁, χ↓₁), (χ↑₂, χ↓₂))`` in rad/s, added as static level shifts.
    copropagating : bool
        Beams share a wave vector (``Δk = 0``): no motional coupling and no
        position dependence of the phase.
    order : int
        Sideband order; only first order is modelled.
    """

    rabi: complex | tuple = 0.0
    detuning: float = 0.0
    transition: str = "carrier"
    mode: int = 2
    optical_phase: float | tuple = 0.0
    stark_shifts: tuple | None = None
    copropagating: bool = False
    order: int = 1

    def __post_init__(self):
        if self.transition not in ("carrier", "red", "blue"):
            raise PreconditionError(f"unknown transition {self.transition!r}")
        if self.transition != "carrier" and self.order != 1:
            raise PreconditionError("only first-order sidebands are supported")
        if self.mode not in (1, 2):
            raise PreconditionError(f"mode must be 1 or 2, got {self.mode}")
        if self.copropagating and self.transition != "carrier":
            raise PreconditionError("copropagating beams cannot drive a sideband")


@dataclass(frozen=True)
class StarkForceDrive:
    """Spin-state dependent optical-dipole force on one mode (σ_z-type coupling).

    ``rabi[i] = (Ω↑ᵢ, Ω↓ᵢ)`` are the walking-wave Stark-shift amplitudes per
    ion; the force on ion ``i`` in state ``m`` is proportional to ``Ω_{m,i}``.
    """

    rabi: tuple
    detuning: float
    mode: int = 2
    optical_phase: float | tuple = 0.0

    def __post_init__(self):
        if self.detuning == 0:
            raise PreconditionError("resonant (δ = 0) forces are not supported")
        if self.mode not in (1, 2):
            raise PreconditionError(f"mode must be 1 or 2, got {self.mode}")


def optical_phases(trap: TrapConfig, optical_phase, copropagating: bool = False) -> tuple:
    """``Δk X₀,ᵢ − Δφᵢ`` for both ions."""
    dphi = _per_ion(optical_phase)
    dk = 0.0 if copropagating else trap.delta_k
    return tuple(dk * x - p for x, p in zip(trap.ion_positions, dphi))


# ----------------------------------------------------------------------------
# Hamiltonian assembly
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DriveTerm:
    """One ``coefficient · e^{-i f t} ⊗_axis factor`` term (its h.c. is implied)."""

    coefficient: complex
    frequency: float
    factors: dict


def _is_diagonal(m) -> bool:
    return m.ndim == 2 and np.count_nonzero(m - np.diag(np.diag(m))) == 0


@dataclass(frozen=True, eq=False)
class HamiltonianTerms:
    """Time-dependent ``H(t)/ħ = Σ_k (K_k e^{-i f_k t} + h.c.)`` in block layout."""

    dims: tuple
    support: tuple
    diagonal_in: tuple
    matrices: np.ndarray        # (terms, B, d, d)
    frequencies: np.ndarray     # (terms,)

    @classmethod
    def from_terms(cls, dims, terms: Sequence[DriveTerm]) -> "HamiltonianTerms":
        dims = tuple(dims)
        touched = sorted({ax for t in terms for ax in t.factors})
        diagonal = tuple(ax for ax in touched if all(ax not in t.factors or _is_diagonal(t.factors[ax])
                                                     for t in terms))
        support = tuple(ax for ax in touched if ax not in diagonal)
        nblocks = prod(dims[a] for a in diagonal)
        d = prod(dims[a] for a in support)
        mats = np.zeros((max(len(terms), 1), nblocks, d, d), dtype=complex)
        for k, term in enumerate(terms):
            diag_vals = np.ones(1, dtype=complex)
            for ax in diagonal:
                f = term.factors.get(ax)
                diag_vals = np.kron(diag_vals, np.ones(dims[ax]) if f is None else np.diag(f))
            local = np.ones((1, 1), dtype=complex)
            for ax in support:
                f = term.factors.get(ax)
                local = np.kron(local, np.eye(dims[ax]) if f is None else f)
            mats[k] = term.coefficient * diag_vals[:, None, None] * local[None]
        freqs = np.array([t.frequency for t in terms] or [0.0], dtype=float)
        return cls(dims, support, diagonal, mats, freqs)

    @property
    def block_count(self) -> int:
        return self.matrices.shape[1]

    def blocks_at(self, t: float, active=None) -> np.ndarray:
        mats = self.matrices if active is None else self.matrices[:, active]
        phases = np.exp(-1j * self.frequencies * t)
        k = np.tensordot(phases, mats, axes=(0, 0))
        return k + np.conj(np.swapaxes(k, -1, -2))

    def __call__(self, t: float) -> LinearOperator:
        blocks = self.blocks_at(t)
        matrix = blocks if self.diagonal_in else blocks[0]
        return LinearOperator(matrix, self.dims, self.support, self.diagonal_in)

    def norm_bound(self, active=None) -> float:
        """Upper bound on ``max_t ‖H(t)‖₂`` over the selected blocks."""
        mats = self.matrices if active is None else self.matrices[:, active]
        if mats.shape[-1] == 0 or mats.size == 0:
            return 0.0
        per_term = np.linalg.norm(mats, ord=2, axis=(-2, -1))   # (terms, B)
        return float(2 * per_term.sum(axis=0).max())


def _ion_indices(qubit_count: int) -> range:
    return range(1, qubit_count + 1)


def drive_terms(drive, trap: TrapConfig, basis: FockBasis, qubit_count: int = 2,
                exact: bool = True) -> list[DriveTerm]:
    """Expand one drive into :class:`DriveTerm` objects on the fixed factor order."""
    n_max = basis.n_max
    terms: list[DriveTerm] = []
    etas = {1: trap.eta(1), 2: trap.eta(2)}

    def motional(kind: str, mode: int, ion: int) -> dict:
        """Mode factors for a carrier ('c') or sideband ('+' / '-') on ``mode``."""
        out = {}
        for nu in (1, 2):
            eta = etas[nu] * trap.mode_sign(ion, nu)
            ax = mode_axis(nu, qubit_count)
            if kind != "c" and nu == mode:
                if exact:
                    out[ax] = sideband_matrix(n_max, eta, raising=(kind == "+"))
                else:
                    a = ladder_matrix(n_max)
                    out[ax] = eta * (a.conj().T if kind == "+" else a)
            elif exact and eta != 0:
                out[ax] = np.diag(carrier_factors(n_max, eta)).astype(complex)
        return out

    if isinstance(drive, RamanDrive):
        rabi = _per_ion(drive.rabi)
        theta = optical_phases(trap, drive.optical_phase, drive.copropagating)
        if drive.transition != "carrier":
            w = trap.mode_frequency(drive.mode)
            if abs(drive.detuning) > 0.1 * w:
                warnings.warn("sideband detuning is not small compared with the mode frequency; "
                              "the rotating-wave picture may be inaccurate", stacklevel=3)
        for ion in _ion_indices(qubit_count):
            omega = rabi[ion - 1]
            if omega != 0:
                if drive.transition == "carrier":
                    mot = {} if drive.copropagating else motional("c", drive.mode, ion)
                else:
                    mot = motional("-" if drive.transition == "red" else "+", drive.mode, ion)
                factors = {spin_axis(ion, qubit_count): SIGMA_PLUS, **mot}
                terms.append(DriveTerm(0.5 * omega * np.exp(1j * theta[ion - 1]), drive.detuning, factors))
        for ion in _ion_indices(qubit_count):
            if drive.stark_shifts is not None:
                chi_up, chi_down = drive.stark_shifts[ion - 1]
                shift = np.diag([chi_up, chi_down]).astype(complex)
                terms.append(DriveTerm(0.5, 0.0, {spin_axis(ion, qubit_count): shift}))
        # absent ions: leave other spin factors as identity
        for ion in range(qubit_count + 1, 3):
            if rabi[ion - 1] != 0:
                raise PreconditionError(f"drive addresses ion {ion} but only {qubit_count} qubit(s) modelled")
        return terms

    if isinstance(drive, StarkForceDrive):
        theta = optical_phases(trap, drive.optical_phase)
        rabi = drive.rabi if np.ndim(drive.rabi) == 2 else (drive.rabi,) * 2
        for ion in _ion_indices(qubit_count):
            for proj, omega in zip((PROJ_UP, PROJ_DOWN), rabi[ion - 1]):
                if omega == 0:
                    continue
                mot = motional("+", drive.mode, ion)
                factors = {spin_axis(ion, qubit_count): proj, **mot}
                terms.append(DriveTerm(0.5 * omega * np.exp(1j * theta[ion - 1]), -drive.detuning, factors))
        return terms

    raise PreconditionError(f"unsupported drive type {type(drive).__name__}")


def interaction_terms(drives, trap: TrapConfig, basis: FockBasis, qubit_count: int = 2,
                      exact: bool = True) -> HamiltonianTerms:
    """Collect one or more drives into a :class:`HamiltonianTerms`."""
    if isinstance(drives, (RamanDrive, StarkForceDrive)):
        drives = [drives]
    terms = [t for d in drives for t in drive_terms(d, trap, basis, qubit_count, exact)]
    return HamiltonianTerms.from_terms(factor_dims(basis, qubit_count), terms)


def build_interaction_hamiltonian(drive, trap: TrapConfig, basis: FockBasis, t: float = 0.0,
                                  qubit_count: int = 2, exact: bool = True) -> LinearOperator:
    """Interaction-frame ``H(t)/ħ`` of one drive (or a list of drives) as an operator."""
    return interaction_terms(drive, trap, basis, qubit_count, exact)(t)


# ----------------------------------------------------------------------------
# numeric evolution
# ----------------------------------------------------------------------------

def _to_blocks(vecs: np.ndarray, dims, support, diagonal_in):
    nd = len(dims)
    rest = [ax for ax in range(nd) if ax not in support and ax not in diagonal_in]
    order = list(diagonal_in) + list(support) + rest + [nd]
    t = vecs.reshape(tuple(dims) + (vecs.shape[1],)).transpose(order)
    shape_t = t.shape
    nblocks = prod(dims[a] for a in diagonal_in)
    d = prod(dims[a] for a in support)
    return t.reshape(nblocks, d, -1), (order, shape_t)


def _from_blocks(blocks: np.ndarray, meta, ncols: int):
    order, shape_t = meta
    return blocks.reshape(shape_t).transpose(np.argsort(order)).reshape(-1, ncols)


def _expm_apply(h: np.ndarray, x: np.ndarray, tau: float) -> np.ndarray:
    """``exp(-i h τ) x`` for stacked blocks via a Taylor series on the vectors."""
    acc = x.copy()
    term = x
    scale = max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
    for k in range(1, 60):
        term = (-1j * tau / k) * np.matmul(h, term)
        acc += term
        if np.max(np.abs(term)) < TAYLOR_TOL * scale:
            return acc
    raise ConvergenceError("Taylor series for the step exponential did not converge")


def _columns(state):
    if isinstance(state, SpinMotionState):
        return [state], state.amplitudes[:, None].copy()
    states = list(state)
    if not states:
        raise PreconditionError("no states to evolve")
    dims = states[0].dims
    if any(s.dims != dims or s.basis != states[0].basis for s in states):
        raise DimensionError("states live on different spaces")
    return states, np.stack([s.amplitudes for s in states], axis=1)


def _as_terms(hamiltonian) -> HamiltonianTerms:
    if isinstance(hamiltonian, HamiltonianTerms):
        return hamiltonian
    raise TypeError("expected HamiltonianTerms")


def evolve_numeric(hamiltonian, state, t_final: float, dt: float, t0: float = 0.0,
                   check: bool = True, tol: float = 1e-6):
    """Time-ordered midpoint-exponential propagation.

    Parameters
    ----------
    hamiltonian : HamiltonianTerms or callable
        ``H(t)/ħ``.  A callable must return a :class:`LinearOperator` with the
        same layout at every time.
    state : SpinMotionState or sequence of them
        Several states are propagated together (as columns).
    t_final, dt : float
        Duration and nominal step.  The step is shrunk slightly so an integer
        number of steps lands on ``t_final``.
    check : bool
        Compare each full step with two half steps and raise
        :class:`StepSizeError` when they differ by more than ``tol``.  The
        half-step result is kept.

    Returns
    -------
    SpinMotionState or list of SpinMotionState
    """
    single = isinstance(state, SpinMotionState)
    states, cols = _columns(state)
    if t_final < 0 or dt <= 0:
        raise PreconditionError("t_final must be ≥ 0 and dt > 0")
    if t_final == 0:
        return state if single else list(states)

    if isinstance(hamiltonian, HamiltonianTerms):
        layout = (hamiltonian.dims, hamiltonian.support, hamiltonian.diagonal_in)
        get_blocks = hamiltonian.blocks_at
    else:
        probe = hamiltonian(t0)
        layout = (probe.dims, probe.support, probe.diagonal_in)

        def get_blocks(t, active=None):
            op = hamiltonian(t)
            if (op.dims, op.support, op.diagonal_in) != layout:
                raise DimensionError("Hamiltonian layout changed during evolution")
            return op.blocks if active is None else op.blocks[active]
    if layout[0] != states[0].dims:
        raise DimensionError("Hamiltonian and state dimensions differ")

    x, meta = _to_blocks(cols, *layout)
    active = np.nonzero(np.sum(np.abs(x) ** 2, axis=(1, 2)) > 1e-30)[0]
    xa = x[active]

    nsteps = max(1, ceil(t_final / dt - 1e-9))
    h = t_final / nsteps
    if isinstance(hamiltonian, HamiltonianTerms):
        bound = hamiltonian.norm_bound(active)
    else:
        bound = float(np.max(np.linalg.norm(get_blocks(t0 + h / 2, active), ord=2, axis=(-2, -1)), initial=0.0))
    if h * bound > MAX_PHASE_PER_STEP:
        raise StepSizeError(f"dt·‖H‖ = {h * bound:.3g} exceeds {MAX_PHASE_PER_STEP}; "
                            f"use dt ≤ {MAX_PHASE_PER_STEP / bound:.3g} s")

    t = t0
    for _ in range(nsteps):
        full = _expm_apply(get_blocks(t + h / 2, active), xa, h) if check else None
        if check:
            half = _expm_apply(get_blocks(t + h / 4, active), xa, h / 2)
            half = _expm_apply(get_blocks(t + 3 * h / 4, active), half, h / 2)
            err = float(np.max(np.abs(full - half)))
            if err > tol:
                raise StepSizeError(f"embedded half-step error {err:.3g} exceeds {tol:g} at t = {t:.6g} s")
            xa = half
        else:
            xa = _expm_apply(get_blocks(t + h / 2, active), xa, h)
        xa[np.abs(xa) < FLUSH_BELOW] = 0.0
        t += h

    x[active] = xa
    out_cols = _from_blocks(x, meta, cols.shape[1])
    out = [s.with_amplitudes(out_cols[:, k]) for k, s in enumerate(states)]
    return out[0] if single else out


def evolve_constant(operator: LinearOperator, state, t: float):
    """Exact ``exp(-i H t)`` for a time-independent ``H/ħ`` (block-wise ``expm``)."""
    single = isinstance(state, SpinMotionState)
    states, cols = _columns(state)
    layout = (operator.dims, operator.support, operator.diagonal_in)
    x, meta = _to_blocks(cols, *layout)
    active = np.nonzero(np.sum(np.abs(x) ** 2, axis=(1, 2)) > 1e-30)[0]
    u = expm(-1j * t * operator.blocks[active])
    x[active] = np.matmul(u, x[active])
    out_cols = _from_blocks(x, meta, cols.shape[1])
    out = [s.with_amplitudes(out_cols[:, k]) for k, s in enumerate(states)]
    return out[0] if single else out


# ----------------------------------------------------------------------------
# forced oscillator: closed forms
# ----------------------------------------------------------------------------

def _check_detuning(delta: float):
    if delta == 0:
        raise PreconditionError("resonant drive (δ = 0) is not supported: the displacement grows linearly")


def force_amplitude(F: complex, delta: float, x0: float) -> complex:
    """Dimensionless loop radius ``A = F x₀ / (2ħδ)``."""
    _check_detuning(delta)
    return complex(F) * x0 / (2 * HBAR * delta)


def alpha_of_t(F: complex, delta: float, x0: float, t):
    """Coherent displacement ``α(t) = (F x₀/2ħδ)(1 − e^{iδt})``."""
    a = force_amplitude(F, delta, x0)
    return a * (1 - np.exp(1j * delta * np.asarray(t, dtype=float)))


def geometric_phase(F: complex, delta: float, x0: float, t):
    """Running phase ``Φ(t) = |A|² (δt − sin δt)`` with ``A = F x₀/2ħδ``."""
    a = force_amplitude(F, delta, x0)
    dt = delta * np.asarray(t, dtype=float)
    return abs(a) ** 2 * (dt - np.sin(dt))


def round_trip_phase(F: complex, delta: float, x0: float) -> float:
    """Phase after one closed loop, ``Φ₀ = π|F x₀|² / 2(ħδ)²`` (non-negative)."""
    _check_detuning(delta)
    return float(np.pi * abs(complex(F) * x0) ** 2 / (2 * (HBAR * delta) ** 2))


def force_for_phase(phase: float, delta: float, x0: float) -> float:
    """Real force giving a closed-loop phase ``phase``; inverse of :func:`round_trip_phase`."""
    _check_detuning(delta)
    return float(np.sqrt(2 * phase / np.pi) * HBAR * abs(delta) / x0)


def F_plus_minus(F_up: complex, F_down: complex) -> tuple[complex, complex]:
    """Common and differential forces ``F± = (F↑ ± F↓)/2``."""
    return (F_up + F_down) / 2, (F_up - F_down) / 2


@dataclass(frozen=True)
class Trajectory:
    """Sampled phase-space path with its running geometric phase."""

    times: np.ndarray
    alphas: np.ndarray
    geometric_phase: np.ndarray

    @property
    def samples(self) -> list[tuple[float, complex]]:
        return list(zip(self.times.tolist(), self.alphas.tolist()))

    def is_closed(self, tol: float = 1e-9) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.alphas))))
        return abs(self.alphas[-1] - self.alphas[0]) <= tol * scale

    def enclosed_phase(self) -> float:
        return shoelace_phase(self.alphas)


def sample_trajectory(F: complex, delta: float, x0: float, t_final: float,
                      samples: int = 10_000) -> Trajectory:
    """Sample ``α(t)`` and ``Φ(t)`` on ``samples`` equally spaced times in ``[0, t_final]``."""
    t = np.linspace(0.0, t_final, samples)
    return Trajectory(t, alpha_of_t(F, delta, x0, t), geometric_phase(F, delta, x0, t))


def shoelace_phase(alphas) -> float:
    """Twice the signed area enclosed by the polygon through ``alphas``.

    Equals ``Σ Im(α_k* α_{k+1})`` around the closed polygon, i.e. the phase
    ``Im∮α* dα`` picked up on a closed path.
    """
    z = np.asarray(alphas, dtype=complex)
    zn = np.roll(z, -1)
    return float(np.sum(np.imag(np.conj(z) * zn)))


def trajectory_phase_increment(alphas) -> float:
    """``Im∫α* dα`` along an open sampled path (trapezoid rule)."""
    z = np.asarray(alphas, dtype=complex)
    return float(np.sum(np.imag(np.conj(z[:-1]) * z[1:])))


def forced_oscillator_terms(F: complex, delta: float, x0: float, basis: FockBasis,
                            mode: int = 1, qubit_count: int = 1) -> HamiltonianTerms:
    """Spin-independent force ``g* â e^{-iδt} + g â† e^{iδt}`` with ``g = F x₀/2ħ`` on one mode.

    Its propagator from ``t = 0`` is ``e^{iΦ(t)} D(α(t))`` with ``α`` and ``Φ``
    from :func:`alpha_of_t` and :func:`geometric_phase`.
    """
    _check_detuning(delta)
    g = complex(F) * x0 / (2 * HBAR)
    dims = factor_dims(basis, qubit_count)
    term = DriveTerm(np.conj(g), delta, {mode_axis(mode, qubit_count): ladder_matrix(basis.n_max)})
    return HamiltonianTerms.from_terms(dims, [term])


def numeric_loop_phase(F: complex, delta: float, x0: float, n_max: int = 30,
                       step_fraction: float = 0.04) -> tuple[float, float]:
    """Integrate one loop from the vacuum and return ``(arg⟨0|U|0⟩, 1 − |⟨0|U|0⟩|)``."""
    basis = FockBasis(n_max)
    vac = np.zeros(basis.dim)
    vac[0] = 1.0
    state = SpinMotionState.from_factors(basis, [[1.0, 0.0]], [vac, vac])
    h = forced_oscillator_terms(F, delta, x0, basis)
    out = evolve_numeric(h, state, 2 * np.pi / abs(delta), step_fraction / h.norm_bound())
    amp = complex(np.vdot(state.amplitudes, out.amplitudes))
    return float(np.angle(amp)), float(1 - abs(amp))


@dataclass(frozen=True)
class ForceParams:
    """Spin-configuration dependent forces on one mode.

    Parameters
    ----------
    forces : sequence of complex
        Force amplitude ``F`` (N) for each spin configuration in basis order.
    delta : float
        Detuning of the force from the mode (rad/s).
    x0 : float
        Length scale of the mode coordinate (m), usually ``q_ν``.
    mode : int
    phi_s, phi_m : tuple
        Spin and motion phases per ion, kept for bookkeeping.
    """

    forces: tuple
    delta: float
    x0: float
    mode: int = 2
    phi_s: tuple = ()
    phi_m: tuple = ()

    def __post_init__(self):
        _check_detuning(self.delta)
        object.__setattr__(self, "forces", tuple(complex(f) for f in self.forces))

    def branches(self, t: float) -> list[tuple[complex, float]]:
        """``(α(t), Φ(t))`` for every spin configuration."""
        return [(complex(alpha_of_t(f, self.delta, self.x0, t)), float(geometric_phase(f, self.delta, self.x0, t)))
                for f in self.forces]

    def evolve(self, state: SpinMotionState, t: float) -> SpinMotionState:
        """Apply ``e^{iΦ_s(t)} D_ν(α_s(t))`` to each spin branch ``s``."""
        if len(self.forces) != state.spin_dim:
            raise DimensionError("one force per spin configuration is required")
        block = state.spin_block().copy()
        inner = (state.basis.dim,) * 2
        ax = self.mode - 1
        for s, (alpha, phi) in enumerate(self.branches(t)):
            d = displacement_operator(state.basis.n_max, alpha)
            psi = np.moveaxis(block[s].reshape(inner), ax, 0)
            psi = np.tensordot(d, psi, axes=(1, 0))
            block[s] = np.exp(1j * phi) * np.moveaxis(psi, 0, ax).reshape(-1)
        return state.with_amplitudes(block.reshape(-1))


# ----------------------------------------------------------------------------
# displacement
# ----------------------------------------------------------------------------

def displacement_operator(n_max: int, alpha: complex) -> np.ndarray:
    """Truncated ``exp(α â† − α* â)`` on levels ``0..n_max``."""
    a = ladder_matrix(n_max)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return expm(gen)


def displace(state: SpinMotionState, mode: int, alpha: complex, guard: bool = True) -> SpinMotionState:
    """Apply ``D(α)`` to one mode of every spin branch.

    Raises :class:`LeakageError` when ``|α|² > n_max/4``.
    """
    if guard and abs(alpha) ** 2 > state.basis.n_max / 4:
        raise LeakageError(f"|α|² = {abs(alpha)**2:.3g} exceeds n_max/4 = {state.basis.n_max / 4:.3g}")
    op = LinearOperator(displacement_operator(state.basis.n_max, alpha), state.dims,
                        (mode_axis(mode, state.qubit_count),), unitary=True)
    return op.apply(state)


def number_operator(basis: FockBasis, qubit_count: int, mode: int) -> LinearOperator:
    dims = factor_dims(basis, qubit_count)
    n = np.diag(np.arange(basis.dim)).astype(complex)
    return LinearOperator(n, dims, (mode_axis(mode, qubit_count),))


def free_mode_evolution(state: SpinMotionState, t: float, omegas: Iterable[float]) -> SpinMotionState:
    """``exp(-i Σ_ν ω_ν t â†_ν â_ν)`` on both modes."""
    n = np.arange(state.basis.dim)
    w1, w2 = omegas
    phase = np.exp(-1j * t * (w1 * n[:, None] + w2 * n[None, :])).reshape(-1)
    block = state.spin_block() * phase[None, :]
    return state.with_amplitudes(block.reshape(-1))
