"""
Truncated spin ⊗ Fock Hilbert space.

Basis ordering is fixed for the whole package: spin factors vary slowest
(ion 1 first), then the centre-of-mass mode (mode 1), then the stretch mode
(mode 2) fastest.  Spin index 0 is ``|↑⟩`` and index 1 is ``|↓⟩``, so the
two-qubit computational order is ``↑↑, ↑↓, ↓↑, ↓↓``.

Operators are dense.  A :class:`LinearOperator` stores only the factors it
acts on (``support``) and may additionally be block diagonal over other
factors (``diagonal_in``), which keeps stretch-mode drives with a
centre-of-mass spectator cheap at ``n_max = 30``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np

from .errors import DimensionError, PreconditionError

UP, DOWN = 0, 1
MAX_DIMENSION = 2**20
FULL_MATRIX_CAP = 4096

SPIN_LABELS = {"u": UP, "d": DOWN, "↑": UP, "↓": DOWN}


@dataclass(frozen=True)
class FockBasis:
    """Truncated number basis shared by both axial modes."""

    n_max: int
    mode_count: int = 2

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise PreconditionError(f"n_max must be an integer >= 1, got {self.n_max}")
        if self.mode_count != 2:
            raise PreconditionError("only the two axial modes are modelled")

    @property
    def dim(self) -> int:
        return self.n_max + 1


def factor_dims(basis: FockBasis, qubit_count: int) -> tuple[int, ...]:
    if qubit_count not in (1, 2):
        raise PreconditionError(f"qubit_count must be 1 or 2, got {qubit_count}")
    return (2,) * qubit_count + (basis.dim,) * basis.mode_count


def spin_axis(ion: int, qubit_count: int) -> int:
    if not 1 <= ion <= qubit_count:
        raise PreconditionError(f"ion index {ion} out of range for {qubit_count} qubit(s)")
    return ion - 1


def mode_axis(mode: int, qubit_count: int) -> int:
    if mode not in (1, 2):
        raise PreconditionError(f"mode must be 1 or 2, got {mode}")
    return qubit_count + mode - 1


def _check_dimension(total: int):
    if total > MAX_DIMENSION:
        raise DimensionError(f"total dimension {total} exceeds cap {MAX_DIMENSION}")


# ----------------------------------------------------------------------------
# single-factor vectors
# ----------------------------------------------------------------------------

def spin_vector(label) -> np.ndarray:
    """``'u'``/``'d'`` (or ``'↑'``/``'↓'``) as a length-2 amplitude vector."""
    if isinstance(label, str):
        v = np.zeros(2, dtype=complex)
        v[SPIN_LABELS[label]] = 1.0
        return v
    v = np.asarray(label, dtype=complex)
    if v.shape != (2,):
        raise DimensionError("spin vector must have length 2")
    return v


def fock_vector(n_max: int, n: int) -> np.ndarray:
    if not 0 <= n <= n_max:
        raise DimensionError(f"Fock level {n} outside 0..{n_max}")
    v = np.zeros(n_max + 1, dtype=complex)
    v[n] = 1.0
    return v


def coherent_vector(n_max: int, alpha: complex) -> np.ndarray:
    """Number-state coefficients of ``|α⟩`` on levels ``0..n_max``.

    The tail beyond ``n_max`` is dropped, not renormalised, so the norm
    deficit doubles as a truncation diagnostic.
    """
    n = np.arange(n_max + 1)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, n_max + 1)))))
    mag = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * log_fact)
    if alpha == 0:
        out = np.zeros(n_max + 1, dtype=complex)
        out[0] = 1.0
        return out
    # alpha**n overflows long before mag underflows, so combine in log space
    return mag * np.exp(n * np.log(complex(alpha)))


def ladder_matrix(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def build_ladder(basis: FockBasis, mode: int) -> tuple["LinearOperator", "LinearOperator"]:
    """Annihilation and creation operators of one mode on the single-mode space.

    ``â†`` annihilates ``|n_max⟩`` (hard truncation).
    """
    if mode not in (1, 2):
        raise PreconditionError(f"mode must be 1 or 2, got {mode}")
    a = ladder_matrix(basis.n_max)
    dims = (basis.dim,)
    return LinearOperator(a, dims, (0,)), LinearOperator(a.conj().T.copy(), dims, (0,))


# ----------------------------------------------------------------------------
# states
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpinMotionState:
    """Amplitudes over (qubit₁ ⊗ qubit₂ ⊗ Fock₁ ⊗ Fock₂) in the fixed ordering."""

    basis: FockBasis
    qubit_count: int
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = factor_dims(self.basis, self.qubit_count)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != prod(dims):
            raise DimensionError(f"expected {prod(dims)} amplitudes, got {amps.size}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_factors(cls, basis: FockBasis, spins: Sequence, modes: Sequence) -> "SpinMotionState":
        """Product state from per-ion spin vectors/labels and per-mode vectors.

        ``modes`` entries may be Fock numbers (int) or amplitude vectors.
        """
        factors = [spin_vector(s) for s in spins]
        for m in modes:
            if isinstance(m, (int, np.integer)):
                factors.append(fock_vector(basis.n_max, int(m)))
            else:
                m = np.asarray(m, dtype=complex)
                if m.shape != (basis.dim,):
                    raise DimensionError("mode vector length must equal n_max + 1")
                factors.append(m)
        if len(modes) != basis.mode_count:
            raise DimensionError("one factor per mode is required")
        return cls(basis, len(spins), tensor(factors))

    @classmethod
    def computational(cls, basis: FockBasis, label: str, fock=(0, 0)) -> "SpinMotionState":
        """``SpinMotionState.computational(b, "ud")`` is ``|↑↓⟩ ⊗ |n₁, n₂⟩``."""
        return cls.from_factors(basis, list(label), list(fock))

    @property
    def dims(self) -> tuple[int, ...]:
        return factor_dims(self.basis, self.qubit_count)

    @property
    def spin_dim(self) -> int:
        return 2**self.qubit_count

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def with_amplitudes(self, amplitudes) -> "SpinMotionState":
        return SpinMotionState(self.basis, self.qubit_count, amplitudes)

    def normalized(self) -> "SpinMotionState":
        return self.with_amplitudes(self.amplitudes / self.norm())

    def mode_populations(self, mode: int) -> np.ndarray:
        ax = mode_axis(mode, self.qubit_count)
        p = np.abs(self.tensor()) ** 2
        other = tuple(i for i in range(p.ndim) if i != ax)
        return p.sum(axis=other)

    def spin_block(self) -> np.ndarray:
        """Amplitudes reshaped to (spin configuration, motional index)."""
        return self.amplitudes.reshape(self.spin_dim, -1)

    def spin_density_matrix(self) -> np.ndarray:
        m = self.spin_block()
        return m @ m.conj().T


def _check_same_space(a: SpinMotionState, b: SpinMotionState):
    if a.basis != b.basis or a.qubit_count != b.qubit_count:
        raise DimensionError("states live on different spaces")


def overlap(a: SpinMotionState, b: SpinMotionState) -> complex:
    _check_same_space(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: SpinMotionState, b: SpinMotionState) -> float:
    """Pure-state fidelity ``|⟨a|b⟩|²``."""
    return abs(overlap(a, b)) ** 2


def global_phase_between(a: SpinMotionState, b: SpinMotionState) -> float:
    """Phase ``θ`` such that ``b ≈ e^{iθ} a``."""
    return float(np.angle(overlap(a, b)))


def reduced_spin_purity(state: SpinMotionState) -> float:
    """``Tr ρ_spin²`` after tracing out both modes; 1 iff spin and motion factorise."""
    rho = state.spin_density_matrix()
    rho = rho / np.trace(rho).real
    return float(np.real(np.trace(rho @ rho)))


def truncation_report(state: SpinMotionState, threshold: float = 1e-12, edge: int = 5) -> dict:
    """Highest populated level per mode and the population within ``edge`` of the cutoff."""
    report = {}
    for mode in (1, 2):
        pops = state.mode_populations(mode)
        occupied = np.nonzero(pops > threshold)[0]
        report[f"mode{mode}_max_level"] = int(occupied[-1]) if occupied.size else 0
        report[f"mode{mode}_edge_population"] = float(pops[max(0, state.basis.n_max - edge + 1):].sum())
    return report


# ----------------------------------------------------------------------------
# operators
# ----------------------------------------------------------------------------

def _apply_local(matrix, dims, support, diagonal_in, vecs):
    """Apply a (block-diagonal) local matrix to columns ``vecs`` of shape (D, R)."""
    ncols = vecs.shape[1]
    nd = len(dims)
    rest = [ax for ax in range(nd) if ax not in support and ax not in diagonal_in]
    order = list(diagonal_in) + list(support) + rest + [nd]
    t = vecs.reshape(tuple(dims) + (ncols,)).transpose(order)
    shape_t = t.shape
    nblocks = prod(dims[a] for a in diagonal_in)
    d = prod(dims[a] for a in support)
    t = t.reshape(nblocks, d, -1)
    out = np.matmul(matrix.reshape(nblocks, d, d), t)
    out = out.reshape(shape_t).transpose(np.argsort(order))
    return out.reshape(-1, ncols)


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense operator acting on the factors in ``support``.

    ``matrix`` has shape ``(d, d)`` or, when ``diagonal_in`` is non-empty,
    ``(B, d, d)`` with one block per joint index of the ``diagonal_in``
    factors (C order).  Factors in neither tuple are acted on by identity.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    support: tuple[int, ...]
    diagonal_in: tuple[int, ...] = ()
    unitary: bool = field(default=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "diagonal_in", tuple(self.diagonal_in))
        _check_dimension(prod(dims))
        if set(self.support) & set(self.diagonal_in):
            raise DimensionError("support and diagonal_in overlap")
        d = prod(dims[a] for a in self.support)
        nblocks = prod(dims[a] for a in self.diagonal_in)
        m = np.asarray(self.matrix, dtype=complex)
        expected = (nblocks, d, d) if self.diagonal_in else (d, d)
        if m.shape != expected:
            raise DimensionError(f"matrix shape {m.shape} does not match {expected}")
        object.__setattr__(self, "matrix", m)
        if self.unitary and self.unitarity_error() > 1e-10:
            raise PreconditionError("operator flagged unitary fails U†U = I")

    @property
    def dimension(self) -> int:
        return prod(self.dims)

    @property
    def blocks(self) -> np.ndarray:
        return self.matrix if self.diagonal_in else self.matrix[None]

    def unitarity_error(self) -> float:
        b = self.blocks
        eye = np.eye(b.shape[-1])
        return float(np.max(np.abs(np.conj(np.swapaxes(b, -1, -2)) @ b - eye)))

    def hermiticity_error(self) -> float:
        b = self.blocks
        return float(np.max(np.abs(b - np.conj(np.swapaxes(b, -1, -2)))))

    def adjoint(self) -> "LinearOperator":
        return LinearOperator(np.conj(np.swapaxes(self.matrix, -1, -2)), self.dims,
                              self.support, self.diagonal_in, self.unitary)

    def _same_layout(self, other: "LinearOperator"):
        if (self.dims, self.support, self.diagonal_in) != (other.dims, other.support, other.diagonal_in):
            raise DimensionError("operators have different layouts")

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        self._same_layout(other)
        return LinearOperator(self.matrix + other.matrix, self.dims, self.support, self.diagonal_in)

    def __mul__(self, scalar) -> "LinearOperator":
        return LinearOperator(self.matrix * scalar, self.dims, self.support, self.diagonal_in)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            self._same_layout(other)
            return LinearOperator(self.matrix @ other.matrix, self.dims, self.support, self.diagonal_in)
        return self.apply(other)

    def apply(self, target):
        """Apply to a state, a 1-D vector, or columns of a 2-D array."""
        if isinstance(target, SpinMotionState):
            if target.dims != self.dims:
                raise DimensionError("operator and state dimensions differ")
            return target.with_amplitudes(self.apply(target.amplitudes))
        arr = np.asarray(target, dtype=complex)
        if arr.shape[0] != self.dimension:
            raise DimensionError("vector length does not match operator dimension")
        if arr.ndim == 1:
            return _apply_local(self.matrix, self.dims, self.support, self.diagonal_in, arr[:, None])[:, 0]
        return _apply_local(self.matrix, self.dims, self.support, self.diagonal_in, arr)

    def full(self) -> np.ndarray:
        """Materialise the operator on the whole space (small spaces only)."""
        if self.dimension > FULL_MATRIX_CAP:
            raise DimensionError(f"refusing to materialise a {self.dimension}-dimensional matrix")
        return self.apply(np.eye(self.dimension, dtype=complex))


def tensor(factors: Sequence):
    """Kronecker product in the listed order.

    1-D factors give a state vector, 2-D factors (arrays or operators) give a
    :class:`LinearOperator` acting on every listed factor.
    """
    if not factors:
        raise DimensionError("nothing to tensor")
    mats = [f.full() if isinstance(f, LinearOperator) else np.asarray(f, dtype=complex) for f in factors]
    _check_dimension(prod(m.shape[0] for m in mats))
    if all(m.ndim == 1 for m in mats):
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out
    if not all(m.ndim == 2 and m.shape[0] == m.shape[1] for m in mats):
        raise DimensionError("cannot mix vectors and operators, operators must be square")
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    dims = tuple(m.shape[0] for m in mats)
    return LinearOperator(out, dims, tuple(range(len(dims))))


# common single-qubit matrices in the (↑, ↓) ordering
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)   # |↑⟩⟨↓|
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
PROJ_UP = np.diag([1.0, 0.0]).astype(complex)
PROJ_DOWN = np.diag([0.0, 1.0]).astype(complex)


def sigma_phi(phi: float) -> np.ndarray:
    """``σ₊e^{-iφ} + σ₋e^{iφ}``, the equatorial Pauli operator at angle φ."""
    return SIGMA_PLUS * np.exp(-1j * phi) + SIGMA_MINUS * np.exp(1j * phi)
