"""
A spin-dependent force traces a circle in phase space
======================================================

Drive one motional mode with a force detuned by ``δ`` from resonance.  The
coherent-state amplitude ``α(t)`` runs around a circle and comes back to the
origin after ``T = 2π/δ``.  The state picks up a phase equal to twice the
enclosed area.  This script compares three ways of getting that phase:

* the closed form ``Φ₀ = 2π|F x₀/(2ħδ)|²``
* the shoelace area of the sampled trajectory
* a full Fock-space integration of the driven oscillator
"""

import numpy as np

from iongate.dynamics import (TrapConfig, force_for_phase, numeric_loop_phase, round_trip_phase,
                              sample_trajectory)

trap = TrapConfig.from_lamb_dicke(0.1, 2 * np.pi * 2.1e6)
delta = 2 * np.pi * 20e3
x0 = trap.q(2)          # ground-state spread of the stretch mode

# %% pick the force that gives a quarter-turn phase
force = force_for_phase(np.pi / 2, delta, x0)
print(f"force for Φ₀ = π/2: {force:.3e} N")

# %% sample the loop and measure its area
traj = sample_trajectory(force, delta, x0, 2 * np.pi / delta, samples=10_000)
print(f"loop closes: {traj.is_closed()}, max |α| = {np.abs(traj.alphas).max():.4f}")
print(f"closed form Φ₀   = {round_trip_phase(force, delta, x0):.10f}")
print(f"shoelace area Φ₀ = {traj.enclosed_phase():.10f}")

# %% the running phase along the loop is Im∫α* dα
quarter = len(traj.times) // 4
for k in (quarter, 2 * quarter, 3 * quarter, len(traj.times) - 1):
    print(f"  t/T = {traj.times[k] * delta / (2 * np.pi):.2f}: Φ(t) = {traj.geometric_phase[k]:.5f}")

# %% full quantum evolution from the vacuum
phase, loss = numeric_loop_phase(force, delta, x0, n_max=30)
print(f"numeric ⟨0|U|0⟩ phase = {phase:.8f}, amplitude loss {loss:.1e}")

# %% the phase grows with the square of the force
for scale in (0.5, 1.0, 2.0):
    print(f"force × {scale}: Φ₀ = {round_trip_phase(scale * force, delta, x0):.4f}")
