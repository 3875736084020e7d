"""
Hyperfine structure of a J = 1/2 ground state in a magnetic field.

The Hamiltonian (in rad/s) is::

    H/ħ = (μ_B B/ħ)(g_J J_z + g_I I_z) + A I·J

with ``g_I`` in Bohr-magneton units.  It conserves ``m_F = m_J + m_I``, so it
splits into blocks of size at most two on the basis

    a = |m_J = +1/2, m_I = m_F − 1/2⟩,   b = |m_J = −1/2, m_I = m_F + 1/2⟩.

At ``B = 0`` the levels group into ``F = I ± 1/2`` separated by
``A(I + 1/2)``.  Pairs whose energy difference has zero slope in ``B`` are
field-insensitive ("clock") pairs; for them the differential light shift of
a far-detuned Raman beam falls off as ``Δ_HF/Δ``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy import constants
from scipy.optimize import brentq

from .errors import PreconditionError

MU_B = constants.value("Bohr magneton") / constants.hbar   # rad/s per tesla

#: ¹¹¹Cd⁺ ground state: I = 1/2, 14.5 GHz hyperfine splitting.
CD111 = dict(nuclear_spin=0.5, hyperfine_constant=2 * np.pi * 14.5e9, g_j=2.0023, g_i=6.48e-4)


def _is_half_integer(x: float) -> bool:
    return abs(2 * x - round(2 * x)) < 1e-12 and round(2 * x) % 2 == 1


@dataclass(frozen=True)
class HyperfineSystem:
    """Nuclear spin, hyperfine constant, Landé factors and field.

    Parameters
    ----------
    nuclear_spin : float
        Half-integer ``I``.
    hyperfine_constant : float
        ``A`` in rad/s.
    g_j, g_i : float
        Electronic and nuclear g-factors (``g_i`` in Bohr-magneton units).
    B : float
        Magnetic field along z (T), non-negative.
    """

    nuclear_spin: float
    hyperfine_constant: float
    g_j: float = 2.0023
    g_i: float = 0.0
    B: float = 0.0

    def __post_init__(self):
        if not _is_half_integer(self.nuclear_spin) or self.nuclear_spin <= 0:
            raise PreconditionError("nuclear spin must be a positive half-integer")
        if self.B < 0:
            raise PreconditionError("field must be non-negative")

    def at(self, B: float) -> "HyperfineSystem":
        return HyperfineSystem(self.nuclear_spin, self.hyperfine_constant, self.g_j, self.g_i, B)

    @property
    def m_f_values(self) -> list[float]:
        top = self.nuclear_spin + 0.5
        return [float(Fraction(k, 1) - Fraction(int(2 * top), 2)) for k in range(int(2 * top) + 1)]

    @property
    def zero_field_splitting(self) -> float:
        """``A(I + 1/2)``, the ``F = I ± 1/2`` spacing at ``B = 0``."""
        return abs(self.hyperfine_constant) * (self.nuclear_spin + 0.5)

    def block(self, m_f: float) -> np.ndarray:
        """``m_F`` block of ``H/ħ`` on ``(a, b)``, or a 1×1 block for stretched states."""
        I, A, B = self.nuclear_spin, self.hyperfine_constant, self.B
        zb = MU_B * B
        has_a = abs(m_f - 0.5) <= I + 1e-12
        has_b = abs(m_f + 0.5) <= I + 1e-12
        diag_a = zb * (self.g_j / 2 + self.g_i * (m_f - 0.5)) + A / 2 * (m_f - 0.5)
        diag_b = zb * (-self.g_j / 2 + self.g_i * (m_f + 0.5)) - A / 2 * (m_f + 0.5)
        if has_a and has_b:
            off = A / 2 * np.sqrt((I + 0.5) ** 2 - m_f**2)
            return np.array([[diag_a, off], [off, diag_b]])
        return np.array([[diag_a if has_a else diag_b]])


@dataclass(frozen=True)
class HyperfineLevel:
    """Eigenlevel with its ``m_F``, adiabatic ``F`` label, energy (rad/s) and ``(a, b)`` amplitudes."""

    m_f: float
    F: float
    energy: float
    a: float
    b: float
    B: float

    @property
    def label(self) -> str:
        return f"F={self.F:g},mF={self.m_f:+g}"

    @property
    def is_stretched(self) -> bool:
        return self.a == 0.0 or self.b == 0.0


def eigensystem(system: HyperfineSystem) -> list[HyperfineLevel]:
    """All ``(2I+1)(2J+1)`` levels, ordered by ``F`` then ``m_F``.

    In each 2×2 block the upper eigenvalue is labelled ``F = I + 1/2`` (for
    ``A > 0``).  Amplitudes are real with the sign chosen so ``a ≥ 0``
    (``b > 0`` when ``a = 0``).
    """
    I = system.nuclear_spin
    upper_f, lower_f = I + 0.5, I - 0.5
    if system.hyperfine_constant < 0:
        upper_f, lower_f = lower_f, upper_f
    levels = []
    for m in system.m_f_values:
        blk = system.block(m)
        if blk.shape == (1, 1):
            a, b = (1.0, 0.0) if m > 0 else (0.0, 1.0)
            levels.append(HyperfineLevel(m, I + 0.5, float(blk[0, 0]), a, b, system.B))
            continue
        w, v = np.linalg.eigh(blk)
        for k, f_label in ((0, lower_f), (1, upper_f)):
            a, b = v[:, k]
            if a < 0 or (a == 0 and b < 0):
                a, b = -a, -b
            levels.append(HyperfineLevel(m, f_label, float(w[k]), float(a), float(b), system.B))
    return sorted(levels, key=lambda lv: (lv.F, lv.m_f))


def find_level(system: HyperfineSystem, F: float, m_f: float) -> HyperfineLevel:
    for lv in eigensystem(system):
        if lv.F == F and lv.m_f == m_f:
            return lv
    raise PreconditionError(f"no level F={F}, m_F={m_f}")


def dE_dB(level: HyperfineLevel, system: HyperfineSystem) -> float:
    """Field derivative ``∂E/∂B`` (rad/s per T) from the eigenvector (Hellmann–Feynman).

    ``μ_B [|a|²(g_J/2 + g_I(m_F − 1/2)) + |b|²(−g_J/2 + g_I(m_F + 1/2))]``; the
    sign of the ``g_J`` term follows ``m_J``.
    """
    if abs(level.B - system.B) > 1e-15 * max(1.0, abs(system.B)):
        raise PreconditionError("level was computed at a different field")
    m = level.m_f
    return float(MU_B * (level.a**2 * (system.g_j / 2 + system.g_i * (m - 0.5))
                         + level.b**2 * (-system.g_j / 2 + system.g_i * (m + 0.5))))


@dataclass(frozen=True)
class InsensitivePair:
    """Two levels whose splitting is stationary in ``B`` at ``B*``.

    ``amplitude_residual`` is ``|a₁|² − |a₂|² − g_IΔm/(g_J − g_I)`` evaluated
    at ``B*``; ``double_root`` marks a touching zero without sign change.
    """

    level_1: HyperfineLevel
    level_2: HyperfineLevel
    field: float
    amplitude_residual: float
    double_root: bool = False

    @property
    def splitting(self) -> float:
        return abs(self.level_1.energy - self.level_2.energy)


def _slope_difference(system: HyperfineSystem, key1, key2, B: float) -> float:
    s = system.at(B)
    l1, l2 = find_level(s, *key1), find_level(s, *key2)
    return dE_dB(l1, s) - dE_dB(l2, s)


def field_insensitive_pairs(system: HyperfineSystem, B_range=(0.0, 1.0), grid: int = 512,
                            rtol: float = 1e-10) -> list[InsensitivePair]:
    """Roots of ``∂(E₁ − E₂)/∂B`` for every pair of distinct levels in ``B_range``.

    Sign changes on a ``grid``-point mesh are refined with Brent's method;
    mesh points where the slope difference vanishes to rounding count as
    roots too.  No roots gives an empty list.
    """
    lo, hi = B_range
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0 or hi <= lo:
        raise PreconditionError("B_range must be finite with 0 ≤ low < high")
    fields = np.linspace(lo, hi, grid)
    keys = [(lv.F, lv.m_f) for lv in eigensystem(system)]
    slopes = {k: np.empty(grid) for k in keys}
    for i, B in enumerate(fields):
        s = system.at(B)
        for lv in eigensystem(s):
            slopes[(lv.F, lv.m_f)][i] = dE_dB(lv, s)
    scale = MU_B * max(abs(system.g_j), 1e-300)
    found = []
    for k1, k2 in combinations(keys, 2):
        f = slopes[k1] - slopes[k2]
        zero = np.abs(f) <= 1e-12 * scale
        roots = []
        for i in range(grid):
            if zero[i]:
                touching = 0 < i < grid - 1 and np.sign(f[i - 1]) == np.sign(f[i + 1]) and not zero[i - 1]
                roots.append((fields[i], touching))
            elif i + 1 < grid and not zero[i + 1] and np.sign(f[i]) != np.sign(f[i + 1]):
                r = brentq(lambda B: _slope_difference(system, k1, k2, B), fields[i], fields[i + 1],
                           xtol=rtol * max(abs(fields[i + 1]), 1e-300), rtol=rtol)
                roots.append((r, False))
        for B_star, double in roots:
            s = system.at(B_star)
            l1, l2 = find_level(s, *k1), find_level(s, *k2)
            resid = l1.a**2 - l2.a**2 - system.g_i * (l2.m_f - l1.m_f) / (system.g_j - system.g_i)
            found.append(InsensitivePair(l1, l2, float(B_star), float(resid), double))
    return found


def stark_shift(level: HyperfineLevel, detuning: float, couplings, reference_energy: float = 0.0) -> float:
    """Far-detuned light shift of a ground level (rad/s).

    ``χ = (|a|² S₊ + |b|² S₋) / (Δ − E_ref + E)``, where ``S±`` are the summed
    squared couplings out of ``m_J = ±1/2`` and the excited levels are taken
    as degenerate at detuning ``Δ`` from the reference level ``E_ref``.
    """
    s_plus, s_minus = couplings
    denom = detuning - reference_energy + level.energy
    if abs(denom) <= 1e-9 * max(abs(detuning), 1.0):
        raise PreconditionError("light field is resonant with this level")
    return float((level.a**2 * s_plus + level.b**2 * s_minus) / denom)


def differential_stark_ratio(pair: InsensitivePair, detuning: float, couplings) -> float:
    """``|χ₁ − χ₂| / χ̄`` for a pair, with ``Δ`` measured from level 1."""
    e1 = pair.level_1.energy
    c1 = stark_shift(pair.level_1, detuning, couplings, e1)
    c2 = stark_shift(pair.level_2, detuning, couplings, e1)
    return abs(c1 - c2) / abs((c1 + c2) / 2)


def level_diagram(system: HyperfineSystem, fields) -> list[tuple[float, str, float]]:
    """``(B, label, E)`` rows across ``fields`` for plotting."""
    rows = []
    for B in fields:
        for lv in eigensystem(system.at(float(B))):
            rows.append((float(B), lv.label, lv.energy))
    return rows
