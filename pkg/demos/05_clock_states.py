"""
Field-insensitive qubits and their light shifts
================================================

For a ``J = 1/2`` ground state with nuclear spin ``I`` the ``m_F = 0``
levels of the two hyperfine manifolds have equal field slopes at zero
field.  This script finds such pairs for Cd-111 and a heavier isotope. It
then shows that the differential light shift of a far-detuned beam falls as
``Δ_HF/Δ``.
"""

import numpy as np

from iongate.atomic import CD111, HyperfineSystem, differential_stark_ratio, field_insensitive_pairs

GHZ = 2 * np.pi * 1e9

cd = HyperfineSystem(**CD111)
print(f"Cd-111 zero-field splitting: {cd.zero_field_splitting / GHZ:.2f} GHz")
for p in field_insensitive_pairs(cd, (0.0, 0.2)):
    print(f"  {p.level_1.label} ↔ {p.level_2.label} at B* = {p.field * 1e4:.3f} G, "
          f"splitting {p.splitting / GHZ:.4f} GHz")

# %% an I = 3/2 system has clock pairs at non-zero field
heavy = HyperfineSystem(1.5, 2 * np.pi * 3.4e9, 2.0023, -5e-4)
for p in field_insensitive_pairs(heavy, (1e-4, 0.5)):
    print(f"  I=3/2 {p.level_1.label} ↔ {p.level_2.label} at B* = {p.field * 1e4:.2f} G")

# %% differential Stark shift of the Cd clock pair
clock = next(p for p in field_insensitive_pairs(cd, (0.0, 0.1)) if p.level_1.m_f == p.level_2.m_f == 0)
for ratio in (10, 100, 1000, 10000):
    d = differential_stark_ratio(clock, ratio * clock.splitting, (1.0, 1.0))
    print(f"Δ = {ratio:>5} Δ_HF: |χ₁ − χ₂|/χ̄ = {d:.3e}")
