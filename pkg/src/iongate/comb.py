"""
Electro-optic frequency combs driving Raman transitions.

A phase modulator at ``ω_EO`` with index ``φ`` splits a beam into lines of
amplitude ``J_n(φ)``.  When the two Raman paths differ in length by ``Δx`` the
comb on one path lags by ``θ = (δk Δx) mod 2π`` and the pair of lines ``k``
orders apart drives a transition at rate proportional to ``J_k(2φ sin θ)``.

Bessel functions of integer order are computed here with Miller's backward
recurrence; :func:`transition_rate_series` sums the defining comb-line series
with :func:`scipy.special.jv` so the two routes stay independent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .dynamics import TrapConfig
from .errors import PreconditionError


def _bessel_series(n: int, x: float) -> float:
    """Ascending series for ``0 < x < 1``, where the backward recurrence would overflow."""
    log_lead = n * (math.log(x) - math.log(2.0)) - math.lgamma(n + 1)
    if log_lead < -745:
        return 0.0
    term = math.exp(log_lead)
    total, q, m = term, -(x / 2) ** 2, 0
    while abs(term) > 1e-17 * abs(total):
        m += 1
        term *= q / (m * (m + n))
        total += term
    return total


def _bessel_scalar(n: int, x: float) -> float:
    sign = 1.0
    if n < 0:
        n = -n
        sign = -1.0 if n % 2 else 1.0
    if x < 0:
        x = -x
        sign *= -1.0 if n % 2 else 1.0
    if x == 0.0:
        return sign * (1.0 if n == 0 else 0.0)
    if x < 1.0:
        return sign * _bessel_series(n, x)
    start = int(max(n, x) + 30 + 10 * x ** (1 / 3))
    start += start % 2
    j_next, j_cur = 0.0, 1e-300
    result, norm = 0.0, 0.0
    for k in range(start, 0, -1):
        j_prev = 2 * k / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        # j_cur now holds J_{k-1} up to scale
        if abs(j_cur) > 1e250:
            j_cur *= 1e-250
            j_next *= 1e-250
            result *= 1e-250
            norm *= 1e-250
        if k - 1 == n:
            result = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j_cur
    norm += j_cur          # J_0 term of 1 = J_0 + 2 Σ J_{2m}
    return sign * result / norm


def bessel_j(n: int, x):
    """Integer-order Bessel function ``J_n(x)`` of real ``x`` (scalar or array).

    Miller backward recurrence normalised with ``J₀ + 2ΣJ_{2m} = 1``, or the
    ascending power series for ``|x| < 1``.
    """
    n = int(n)
    if np.ndim(x) == 0:
        return _bessel_scalar(n, float(x))
    xs = np.asarray(x, dtype=float)
    return np.vectorize(lambda v: _bessel_scalar(n, v), otypes=[float])(xs)


def transition_rate(k: int, phi: float, theta: float) -> float:
    """Relative Raman rate ``J_k(2φ sin θ)`` of comb lines ``k`` orders apart (``J₀(0) = 1``)."""
    return float(bessel_j(k, 2 * phi * np.sin(theta)))


def transition_rate_series(k: int, phi: float, theta: float, n_terms: int = 200) -> complex:
    """Truncated sum ``Σ_{|n|≤N} J_n(φ)e^{inθ} J_{n+k}(φ)e^{i(n+k)θ}`` over comb-line pairs.

    The sum equals ``i^k J_k(2φ sin θ)``: same modulus as the closed form,
    with a constant order-dependent phase.
    """
    n = np.arange(-n_terms, n_terms + 1)
    terms = jv(n, phi) * np.exp(1j * n * theta) * jv(n + k, phi) * np.exp(1j * (n + k) * theta)
    return complex(np.sum(terms))


@dataclass(frozen=True)
class CombConfig:
    """Modulator settings and the path-length difference between the two Raman paths."""

    modulation_index: float
    modulation_frequency: float
    path_length_difference: float = 0.0
    modulation_wavenumber: float = 0.0
    offsets: tuple = (0.0, 0.0)

    @property
    def theta(self) -> float:
        """``(δk Δx) mod 2π`` in ``[0, 2π)``."""
        return float(np.mod(self.modulation_wavenumber * self.path_length_difference, 2 * np.pi))

    def rate(self, k: int) -> float:
        return transition_rate(k, self.modulation_index, self.theta)


def plan_delta_k(transition: float, omega_eo: float, omega_offset: float, desired_sign: int) -> dict:
    """Frequency shifts on paths A and B that put a comb-line pair on ``transition``.

    Path A is shifted by ``ω_offset``.  Path B is shifted by
    ``ω_offset + ω_transition − ω_EO`` for ``Δk`` along ``+1`` and by
    ``ω_offset + ω_EO − ω_transition`` to reverse it; only path B changes.
    """
    if desired_sign not in (1, -1):
        raise PreconditionError("desired_sign must be ±1")
    if omega_eo == transition:
        raise PreconditionError("ω_EO must not equal the transition frequency exactly "
                                "(a copropagating carrier would be driven)")
    if omega_eo > transition:
        raise PreconditionError("the planning rules assume ω_EO < ω_transition")
    shift_b = omega_offset + (transition - omega_eo if desired_sign == 1 else omega_eo - transition)
    return {"A": omega_offset, "B": shift_b, "sign": desired_sign}


def plan_insensitive_sidebands(omega_qubit: float, omega_mode: float, delta: float,
                               omega_eo: float, omega_offset: float) -> dict:
    """Path-B shifts giving red and blue sideband pairs with opposite ``Δk``.

    Red addresses ``ω₀′ − ω_ν − δ`` with ``Δk`` along ``+1``; blue addresses
    ``ω₀′ + ω_ν + δ`` with ``Δk`` reversed.
    """
    red = plan_delta_k(omega_qubit - omega_mode - delta, omega_eo, omega_offset, 1)
    blue = plan_delta_k(omega_qubit + omega_mode + delta, omega_eo, omega_offset, -1)
    return {"red": red, "blue": blue}


@dataclass(frozen=True)
class SpectrumLine:
    frequency: float
    label: str
    overlaps: tuple = ()


def raman_spectrum(modes, offset: float, scan_range: tuple | None = None,
                   resolution: float = 0.0) -> list[SpectrumLine]:
    """Beat-note positions of the carrier and first sidebands of both modes.

    Parameters
    ----------
    modes : TrapConfig or (ω₁, ω₂)
        Mode frequencies (rad/s).  A zero frequency contributes no sidebands.
    offset : float
        ``ω_EO − ω₀`` (rad/s).
    scan_range : (low, high), optional
        Keep only lines inside this window.
    resolution : float
        Lines closer than this are cross-referenced in ``overlaps``; they are
        never merged.

    Returns
    -------
    list of SpectrumLine
        Sorted by frequency.  Labels: ``C±`` at ``±d``, ``Rν±`` at
        ``±(d + ω_ν)`` and ``Bν±`` at ``±(d − ω_ν)`` with ``d = ω_EO − ω₀``.
    """
    omegas = (modes.omega_1, modes.omega_2) if isinstance(modes, TrapConfig) else tuple(modes)
    raw = [(offset, "C+"), (-offset, "C-")]
    for nu, w in enumerate(omegas, start=1):
        if w == 0:
            continue
        raw += [(offset + w, f"R{nu}+"), (-(offset + w), f"R{nu}-"),
                (offset - w, f"B{nu}+"), (-(offset - w), f"B{nu}-")]
    if scan_range is not None:
        lo, hi = scan_range
        raw = [(f, lab) for f, lab in raw if lo <= f <= hi]
    raw.sort(key=lambda r: (r[0], r[1]))
    lines = []
    for f, lab in raw:
        near = tuple(other for g, other in raw if other != lab and abs(g - f) <= resolution)
        lines.append(SpectrumLine(f, lab, near))
    return lines


def write_spectrum_csv(lines, path, digits: int = 9):
    """Write ``frequency_MHz, label`` rows; frequencies are rounded to ``digits`` decimals."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency_MHz", "label", "overlaps"])
        for line in lines:
            mhz = round(line.frequency / (2 * np.pi * 1e6), digits) + 0.0
            w.writerow([repr(mhz), line.label, ";".join(line.overlaps)])
