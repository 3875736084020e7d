"""
Optical-path and position disturbances propagated into gate phases.

Every Raman field pair is reduced to a wave-vector difference ``Δk`` and a
phase difference ``Δφ``, both taken as (higher-frequency field) minus
(lower-frequency field).  A path-length change on beam path B adds ``δφ`` to
the phase of every field on that path.  From the red and blue pairs the spin
and motion phases of ion ``i`` are::

    θ_{r,b} = Δk_{r,b} X₀,ᵢ − Δφ_{r,b}
    φ_S,i = −(θ_r + θ_b)/2
    φ_M,i = (θ_r − θ_b)/2

so a geometry where both pairs share the sign of ``Δk`` passes ``δφ``
straight into ``φ_S`` while opposite signs move it into ``φ_M`` instead.

The fast-gate analysis uses classical ion trajectories: after ``N`` kicks the
residual phase is ``φ_t = Σ_j Δk_j r(t_j)``.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import TrapConfig
from .errors import PreconditionError
from .gates import (KickEvent, SidebandPair, computational_inputs, ideal_sigma_phi, ideal_sigma_z,
                    ramsey_wrapped_gate, sigma_phi_drives, sigma_phi_gate, sigma_z_drive, sigma_z_gate,
                    spacing_phase_of, spin_motion_phases_from_pairs, truth_table_from_states)
from .hilbert import FockBasis


@dataclass(frozen=True)
class OpticalField:
    """One laser field: signed wave vector along the trap axis, angular frequency, phase, beam path."""

    wave_vector: float
    frequency: float
    phase: float = 0.0
    path: str = "A"

    def __post_init__(self):
        if self.path not in ("A", "B"):
            raise PreconditionError("path must be 'A' or 'B'")


def field_pair(fields: Sequence[OpticalField], indices, delta_phi: float = 0.0) -> SidebandPair:
    """``(Δk, Δφ)`` of two fields, higher frequency minus lower, with path-B shift ``delta_phi``."""
    f1, f2 = (fields[i] for i in indices)
    if f1.frequency == f2.frequency:
        raise PreconditionError("a Raman pair needs two different frequencies")
    hi, lo = (f1, f2) if f1.frequency > f2.frequency else (f2, f1)

    def phase(f):
        return f.phase + (delta_phi if f.path == "B" else 0.0)

    return SidebandPair(hi.wave_vector - lo.wave_vector, phase(hi) - phase(lo))


@dataclass(frozen=True)
class BeamGeometry:
    """Fields plus which pairs drive the red sideband, blue sideband and (optionally) the carrier.

    ``configuration`` is ``"phase_sensitive"`` (``Δk_r = Δk_b``),
    ``"phase_insensitive"`` (``Δk_r = −Δk_b``) or ``"custom"``; the first two
    are checked at construction.
    """

    fields: tuple
    red: tuple
    blue: tuple
    carrier: tuple | None = None
    configuration: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if self.configuration not in ("phase_sensitive", "phase_insensitive", "custom"):
            raise PreconditionError(f"unknown configuration {self.configuration!r}")
        red, blue = self.sideband_pairs(0.0)
        for name, pair in (("red", red), ("blue", blue)):
            if pair.delta_k == 0:
                raise PreconditionError(f"{name} pair must have a non-zero wave-vector difference")
        scale = max(abs(red.delta_k), abs(blue.delta_k))
        if self.configuration == "phase_sensitive" and abs(red.delta_k - blue.delta_k) > 1e-12 * scale:
            raise PreconditionError("phase-sensitive geometry needs Δk_r = Δk_b")
        if self.configuration == "phase_insensitive" and abs(red.delta_k + blue.delta_k) > 1e-12 * scale:
            raise PreconditionError("phase-insensitive geometry needs Δk_r = −Δk_b")

    def sideband_pairs(self, delta_phi: float = 0.0) -> tuple[SidebandPair, SidebandPair]:
        return (field_pair(self.fields, self.red, delta_phi), field_pair(self.fields, self.blue, delta_phi))

    def carrier_pair(self, delta_phi: float = 0.0) -> SidebandPair:
        if self.carrier is None:
            raise PreconditionError("geometry has no carrier pair")
        return field_pair(self.fields, self.carrier, delta_phi)

    def required_wrapper(self) -> str:
        """Rotation reference that tracks ``φ_S``: path-sharing carrier or a path-free one."""
        return "carrier" if self.configuration == "phase_sensitive" else "copropagating"

    @classmethod
    def phase_sensitive(cls, trap: TrapConfig, omega_qubit: float, delta: float,
                        omega_a: float = 0.0) -> "BeamGeometry":
        """Path A carries one field; path B carries the red and blue partners and the carrier partner.

        Path-B frequencies relative to ``omega_a``: ``ω₀′ − (ω₂ + δ)``,
        ``ω₀′ + ω₂ + δ`` and ``ω₀′``.  All pairs have path B as the higher
        frequency, so ``Δk_r = Δk_b = k_B − k_A = Δk``.
        """
        k = trap.delta_k / 2
        w2 = trap.omega_2
        fields = (OpticalField(-k, omega_a, 0.0, "A"),
                  OpticalField(k, omega_a + omega_qubit - w2 - delta, 0.0, "B"),
                  OpticalField(k, omega_a + omega_qubit + w2 + delta, 0.0, "B"),
                  OpticalField(k, omega_a + omega_qubit, 0.0, "B"))
        return cls(fields, (0, 1), (0, 2), (0, 3), "phase_sensitive")

    @classmethod
    def phase_insensitive(cls, trap: TrapConfig, omega_qubit: float, delta: float,
                          omega_a: float = 0.0) -> "BeamGeometry":
        """Path-B red partner sits below path A, so the red pair's ``Δk`` is reversed.

        Path-B frequencies relative to ``omega_a``: ``−(ω₀′ − ω₂ − δ)`` and
        ``ω₀′ + ω₂ + δ``.  The carrier pair (path B at ``ω₀′``) is provided for
        completeness; the matching wrapper is copropagating.
        """
        k = trap.delta_k / 2
        w2 = trap.omega_2
        fields = (OpticalField(-k, omega_a, 0.0, "A"),
                  OpticalField(k, omega_a - (omega_qubit - w2 - delta), 0.0, "B"),
                  OpticalField(k, omega_a + omega_qubit + w2 + delta, 0.0, "B"),
                  OpticalField(k, omega_a + omega_qubit, 0.0, "B"))
        return cls(fields, (0, 1), (0, 2), (0, 3), "phase_insensitive")


@dataclass(frozen=True)
class PathDisturbance:
    """Path-B phase shift and ion displacements applied to one gate run."""

    delta_phi: float = 0.0
    ion_displacements: tuple = (0.0, 0.0)

    def displaced(self, trap: TrapConfig) -> TrapConfig:
        return trap.with_positions([x + d for x, d in zip(trap.ion_positions, self.ion_displacements)])


# ----------------------------------------------------------------------------
# phase bookkeeping
# ----------------------------------------------------------------------------

def spin_motion_phases(geometry: BeamGeometry, trap: TrapConfig,
                       disturbance: PathDisturbance | None = None) -> list[tuple[float, float]]:
    """``(φ_S, φ_M)`` per ion for the geometry's red and blue pairs."""
    disturbance = disturbance or PathDisturbance()
    red, blue = geometry.sideband_pairs(disturbance.delta_phi)
    return spin_motion_phases_from_pairs(red, blue, disturbance.displaced(trap).ion_positions)


def phase_sensitivity(geometry: BeamGeometry, trap: TrapConfig, h: float = 1.0) -> tuple[float, float]:
    """``(∂φ_S/∂δφ, ∂φ_M/∂δφ)`` of ion 1.

    The phases are affine in ``δφ``, so a single difference of step ``h`` is
    exact up to rounding.
    """
    p0 = spin_motion_phases(geometry, trap)[0]
    p1 = spin_motion_phases(geometry, trap, PathDisturbance(h))[0]
    return (p1[0] - p0[0]) / h, (p1[1] - p0[1]) / h


def spacing_phase(trap: TrapConfig) -> float:
    """``Δk(X₀,₁ − X₀,₂) mod 2π``; zero when both ions see the same force phase."""
    return spacing_phase_of(trap)


# ----------------------------------------------------------------------------
# fast-gate random phase
# ----------------------------------------------------------------------------

def fast_gate_random_phase(kicks: Sequence[KickEvent], positions, delta_k: float) -> np.ndarray:
    """``φ_t = Σ_j Δk_j r_j`` with ``Δk_j = z_j |Δk|``.

    ``positions`` has the kick index last, so a ``(trials, N)`` array yields
    one phase per trial.
    """
    positions = np.asarray(positions, dtype=float)
    if positions.shape[-1] != len(kicks):
        raise PreconditionError(f"{len(kicks)} kicks but {positions.shape[-1]} positions per trajectory")
    z = np.array([k.z for k in kicks])
    return abs(delta_k) * positions @ z


def thue_morse_kicks(cycles: int, gate_time: float) -> list[KickEvent]:
    """``2^cycles`` unit kicks at equally spaced times over ``[0, gate_time]`` with Thue–Morse signs.

    The signs ``(−1)^{popcount(j)}`` cancel every time moment below
    ``cycles``, so position drift up to that order drops out of ``φ_t``.
    """
    if cycles < 1:
        raise PreconditionError("at least one cycle is required")
    n = 2**cycles
    times = np.linspace(0.0, gate_time, n)
    return [KickEvent(float(t), -1 if bin(j).count("1") % 2 else 1) for j, t in enumerate(times)]


def thermal_positions(times, omega: float, v_rms: float, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Classical thermal trajectories ``r = A cos ωt + (v₀/ω) sin ωt`` sampled at ``times``.

    ``v₀ ~ N(0, v_rms)`` and ``A ~ N(0, v_rms/ω)`` (equipartition).
    Returns ``(positions, v₀)``.
    """
    times = np.asarray(times, dtype=float)
    amp = rng.normal(0.0, v_rms / omega, trials)
    v0 = rng.normal(0.0, v_rms, trials)
    r = amp[:, None] * np.cos(omega * times) + (v0 / omega)[:, None] * np.sin(omega * times)
    return r, v0


@dataclass(frozen=True)
class ScalingResult:
    """Mean infidelity against ``x = |Δk| v T_g`` with a log-log fit.

    ``x`` uses the RMS velocity measured on each point's sampled ensemble.
    ``slope_ci`` is a percentile bootstrap interval; ``prefactor`` is the
    fitted ``C`` in ``δF ≈ C x^slope``.
    """

    cycles: int
    x: np.ndarray
    mean_infidelity: np.ndarray
    rms_phase: np.ndarray
    slope: float
    slope_ci: tuple
    prefactor: float

    def rows(self):
        return [{"x": float(a), "mean_infidelity": float(b), "rms_phase": float(c)}
                for a, b, c in zip(self.x, self.mean_infidelity, self.rms_phase)]


def _loglog_fit(x, y):
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(np.exp(intercept))


def infidelity_scaling_experiment(cycles: int, grid, trials: int = 10_000, seed: int = 0,
                                  omega: float = 2 * np.pi * 2.1e6, delta_k: float = 4e7,
                                  delta_k_sigma_x: float = 10.0, thermal_scale: float = 1.0,
                                  bootstrap: int = 500) -> ScalingResult:
    """Monte-Carlo ``δF = sin²(φ_t/2)`` over thermal ions for a Thue–Morse kick train.

    Parameters
    ----------
    cycles : int
        Refinement order ``n``; the expected slope is ``2n``.
    grid : sequence of float
        Target values of ``x = |Δk| v T_g``, each in ``(0, 1)``.
    delta_k_sigma_x : float
        ``|Δk| σ_x`` of the nominal ensemble.  Setting it large keeps
        ``ωT_g = x/(|Δk|σ_x)`` small across the grid.
    thermal_scale : float
        Multiplies the ensemble's spread; ``0`` puts every ion at rest at
        the origin.

    Point ``p`` draws from ``SeedSequence([seed, p])``, so adding grid points
    leaves earlier points unchanged.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid >= 1):
        raise PreconditionError("the scaling parameter must lie in (0, 1)")
    sigma_x = delta_k_sigma_x / abs(delta_k)
    v_nominal = omega * sigma_x
    v_rms = thermal_scale * v_nominal
    xs, means, rms, per_point = [], [], [], []
    for p, x in enumerate(grid):
        t_gate = x / (abs(delta_k) * v_nominal)
        kicks = thue_morse_kicks(cycles, t_gate)
        rng = np.random.default_rng(np.random.SeedSequence([seed, p]))
        pos, v0 = thermal_positions([k.time for k in kicks], omega, v_rms, trials, rng)
        phi = fast_gate_random_phase(kicks, pos, delta_k)
        dF = np.sin(phi / 2) ** 2
        v_meas = float(np.sqrt(np.mean(v0**2)))
        xs.append(abs(delta_k) * v_meas * t_gate if v_meas > 0 else x)
        means.append(float(dF.mean()))
        rms.append(float(np.sqrt(np.mean(phi**2))))
        per_point.append(dF)
    xs, means = np.array(xs), np.array(means)
    if np.all(means > 0):
        slope, pref = _loglog_fit(xs, means)
        boot_rng = np.random.default_rng(np.random.SeedSequence([seed, len(grid)]))
        slopes = []
        for _ in range(bootstrap):
            ys = [d[boot_rng.integers(0, trials, trials)].mean() for d in per_point]
            slopes.append(_loglog_fit(xs, np.array(ys))[0])
        ci = (float(np.percentile(slopes, 2.5)), float(np.percentile(slopes, 97.5)))
    else:
        slope, pref, ci = float("nan"), 0.0, (float("nan"), float("nan"))
    return ScalingResult(cycles, xs, means, np.array(rms), slope, ci, pref)


# ----------------------------------------------------------------------------
# Monte-Carlo gate sweeps
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DisturbanceSpec:
    """Distribution of the path-B phase shift ``δφ`` drawn once per trial.

    ``kind`` is ``"fixed"`` (always ``low``), ``"uniform"`` on ``[low, high)``
    or ``"normal"`` with mean ``low`` and standard deviation ``high``.
    """

    kind: str = "fixed"
    low: float = 0.0
    high: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform", "normal"):
            raise PreconditionError(f"unknown distribution {self.kind!r}")
        if self.kind == "uniform" and self.high < self.low:
            raise PreconditionError("uniform distribution needs high ≥ low")
        if self.kind == "normal" and self.high < 0:
            raise PreconditionError("normal distribution needs a non-negative width")

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            return float(self.low)
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high)) if self.high > self.low else float(self.low)
        return float(rng.normal(self.low, self.high))


@dataclass(frozen=True)
class SweepResult:
    """Per-trial ``(parameter, fidelity)`` pairs and their summary statistics."""

    parameters: np.ndarray
    fidelities: np.ndarray
    seed: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.fidelities))

    @property
    def variance(self) -> float:
        # a constant sample is exactly zero; np.var can leave ~1e-32 from the rounded mean
        if np.ptp(self.fidelities) == 0:
            return 0.0
        return float(np.var(self.fidelities))

    def histogram(self, bins: int = 20):
        counts, edges = np.histogram(self.fidelities, bins=bins, range=(0.0, 1.0))
        return counts, edges

    def summary(self) -> dict:
        counts, edges = self.histogram()
        return {"trials": int(self.fidelities.size), "seed": self.seed, "mean": self.mean,
                "variance": self.variance, "min": float(self.fidelities.min()),
                "max": float(self.fidelities.max()),
                "histogram": {"counts": counts.tolist(), "edges": edges.tolist()}}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter", "trial", "fidelity"])
            for k, (p, f) in enumerate(zip(self.parameters, self.fidelities)):
                w.writerow([repr(float(p)), k, repr(float(f))])

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def monte_carlo_gate_sweep(gate: Callable[[float], float], disturbance: DisturbanceSpec, trials: int,
                           seed: int = 0, workers: int = 1) -> SweepResult:
    """Evaluate ``gate(δφ)`` for ``trials`` independent draws of the disturbance.

    Trial ``k`` uses ``SeedSequence([seed, k])``, so results do not depend on
    ``workers`` or on scheduling order.
    """
    if trials < 1:
        raise PreconditionError("at least one trial is required")

    def one(k: int):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        p = disturbance.sample(rng)
        return p, float(gate(p))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(k) for k in range(trials)]
    params, fids = zip(*results)
    return SweepResult(np.array(params), np.array(fids), seed)


def sigma_phi_fidelity(trap: TrapConfig, geometry: BeamGeometry, basis: FockBasis, delta: float,
                       wrapped: bool, method: str = "analytic") -> Callable[[float], float]:
    """Truth-table fidelity of a σ_φ gate run with path shift ``δφ``.

    Unwrapped runs are scored against the gate calibrated at ``δφ = 0``;
    wrapped runs against ``diag(1, i, i, 1)``.
    """
    red0, blue0 = geometry.sideband_pairs(0.0)
    (s1, _), (s2, _) = spin_motion_phases_from_pairs(red0, blue0, trap.ion_positions)
    reference = ideal_sigma_phi(s1, s2)

    def run(delta_phi: float) -> float:
        if wrapped:
            table = ramsey_wrapped_gate(trap, geometry, delta_phi, basis, delta, method=method)
            return table.process_fidelity(ideal_sigma_z())
        red, blue = geometry.sideband_pairs(delta_phi)
        drives = sigma_phi_drives(trap, delta, red, blue)
        table = truth_table_from_states(sigma_phi_gate(trap, drives, computational_inputs(basis), method=method))
        return table.process_fidelity(reference)

    return run


def sigma_z_fidelity(trap: TrapConfig, basis: FockBasis, delta: float,
                     method: str = "analytic") -> Callable[[float], float]:
    """Truth-table fidelity of the σ_z gate whose drive phase is shifted by ``δφ``."""
    def run(delta_phi: float) -> float:
        drive = sigma_z_drive(trap, delta, optical_phase=delta_phi)
        table = truth_table_from_states(sigma_z_gate(trap, drive, computational_inputs(basis), method=method))
        return table.process_fidelity(ideal_sigma_z())

    return run
