"""Hyperfine levels in a field, clock pairs and light shifts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iongate.atomic import (CD111, MU_B, HyperfineSystem, dE_dB, differential_stark_ratio, eigensystem,
                            field_insensitive_pairs, find_level, level_diagram, stark_shift)
from iongate.errors import PreconditionError

GHZ = 2 * np.pi * 1e9


@pytest.fixture(scope="module")
def cd():
    return HyperfineSystem(**CD111)


def _energy(system, B, key):
    return find_level(system.at(B), *key).energy


def _fd_slope(system, key, rel=1e-3):
    """Fourth-order centred difference; eigenvalue rounding rules out much smaller steps."""
    B, h = system.B, rel * system.B
    f = lambda b: _energy(system, b, key)      # noqa: E731
    return (8 * (f(B + h) - f(B - h)) - (f(B + 2 * h) - f(B - 2 * h))) / (12 * h)


def _full_hamiltonian(system):
    """Brute-force ``H`` on the product basis ``|m_J⟩ ⊗ |m_I⟩`` (m_J = +½ first)."""
    I = system.nuclear_spin
    d = int(round(2 * I + 1))
    m = I - np.arange(d)
    iz = np.diag(m)
    ip = np.zeros((d, d))
    for k in range(1, d):
        ip[k - 1, k] = np.sqrt(I * (I + 1) - m[k] * (m[k] + 1))
    jz = np.diag([0.5, -0.5])
    jp = np.array([[0.0, 1.0], [0.0, 0.0]])
    zb = MU_B * system.B
    dot = np.kron(jz, iz) + 0.5 * (np.kron(jp, ip.T) + np.kron(jp.T, ip))
    return zb * (system.g_j * np.kron(jz, np.eye(d)) + system.g_i * np.kron(np.eye(2), iz)) \
        + system.hyperfine_constant * dot


class TestHyperfineSystem:
    @pytest.mark.parametrize("I", [0.0, 1.0, -0.5, 0.7])
    def test_spin_must_be_half_integer(self, I):
        with pytest.raises(PreconditionError):
            HyperfineSystem(I, 1.0)

    def test_negative_field(self):
        with pytest.raises(PreconditionError):
            HyperfineSystem(0.5, 1.0, B=-1e-3)

    @pytest.mark.parametrize("I", [0.5, 1.5, 3.5])
    def test_blocks_hermitian(self, I):
        s = HyperfineSystem(I, GHZ, 2.0, 1e-3, B=0.02)
        for m in s.m_f_values:
            blk = s.block(m)
            assert np.array_equal(blk, blk.T)


class TestEigensystem:
    def test_cd111_zero_field(self, cd):
        levels = eigensystem(cd)
        assert len(levels) == 4
        singlet = [lv for lv in levels if lv.F == 0]
        triplet = [lv for lv in levels if lv.F == 1]
        assert len(singlet) == 1 and len(triplet) == 3
        gap = triplet[0].energy - singlet[0].energy
        assert gap / GHZ == pytest.approx(14.5, rel=1e-12)
        assert np.ptp([lv.energy for lv in triplet]) < 1e-6 * gap

    @pytest.mark.parametrize("I", [0.5, 1.5, 2.5, 4.5])
    def test_level_count_and_manifolds(self, I):
        s = HyperfineSystem(I, GHZ)
        levels = eigensystem(s)
        assert len(levels) == 2 * (2 * I + 1)
        upper = [lv for lv in levels if lv.F == I + 0.5]
        lower = [lv for lv in levels if lv.F == I - 0.5]
        assert (len(upper), len(lower)) == (2 * I + 2, 2 * I)
        gap = np.mean([lv.energy for lv in upper]) - np.mean([lv.energy for lv in lower])
        assert gap == pytest.approx(s.zero_field_splitting, rel=1e-12)

    def test_negative_constant_inverts(self):
        levels = eigensystem(HyperfineSystem(0.5, -GHZ))
        top = max(levels, key=lambda lv: lv.energy)
        assert top.F == 0

    @pytest.mark.parametrize("I, B", [(0.5, 0.0), (0.5, 0.3), (1.5, 0.05), (3.5, 1.2)])
    def test_matches_brute_force(self, I, B):
        s = HyperfineSystem(I, 2 * GHZ, 2.0023, 5e-4, B)
        ours = sorted(lv.energy for lv in eigensystem(s))
        ref = np.linalg.eigvalsh(_full_hamiltonian(s))
        np.testing.assert_allclose(ours, ref, rtol=0, atol=1e-12 * np.max(np.abs(ref)))

    @pytest.mark.parametrize("I", [0.5, 2.5])
    def test_eigen_residual_and_norm(self, I):
        s = HyperfineSystem(I, 3 * GHZ, 2.0, 1e-3, B=0.08)
        for lv in eigensystem(s):
            assert lv.a**2 + lv.b**2 == pytest.approx(1.0, abs=1e-12)
            blk = s.block(lv.m_f)
            vec = np.array([lv.a, lv.b]) if blk.shape == (2, 2) else np.array([lv.a or lv.b])
            resid = np.linalg.norm(blk @ vec - lv.energy * vec)
            assert resid <= 1e-12 * np.linalg.norm(blk, 2)

    def test_stretched_states(self, cd):
        s = cd.at(0.05)
        for lv in eigensystem(s):
            if abs(lv.m_f) == cd.nuclear_spin + 0.5:
                assert lv.is_stretched
                assert (lv.a, lv.b) in ((1.0, 0.0), (0.0, 1.0))

    def test_stretched_slope(self, cd):
        s = cd.at(0.02)
        top = find_level(s, 1, 1)
        assert dE_dB(top, s) == MU_B * (cd.g_j / 2 + cd.g_i * 0.5)
        assert _energy(cd, 0.04, (1, 1)) - _energy(cd, 0.02, (1, 1)) == pytest.approx(
            0.02 * MU_B * (cd.g_j + cd.g_i) / 2, rel=1e-9)

    def test_continuous_in_field(self, cd):
        fields = np.linspace(0, 0.5, 201)
        e = np.array([[lv.energy for lv in eigensystem(cd.at(B))] for B in fields])
        assert np.max(np.abs(np.diff(e, axis=0))) < 0.01 * cd.zero_field_splitting

    def test_find_level_missing(self, cd):
        with pytest.raises(PreconditionError):
            find_level(cd, 2, 0)


class TestFieldDerivative:
    def test_random_systems(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(100):
            I = rng.integers(0, 5) + 0.5
            A = rng.choice([1, -1]) * rng.uniform(0.5, 20) * GHZ
            s = HyperfineSystem(I, A, rng.uniform(1.9, 2.1), rng.uniform(-1e-3, 1e-3), rng.uniform(1e-3, 1.0))
            for lv in eigensystem(s):
                exact = dE_dB(lv, s)
                worst = max(worst, abs(_fd_slope(s, (lv.F, lv.m_f)) - exact) / abs(exact))
        assert worst <= 1e-8

    def test_clock_pair_flat_at_zero(self, cd):
        s = cd.at(0.0)
        assert dE_dB(find_level(s, 0, 0), s) - dE_dB(find_level(s, 1, 0), s) == pytest.approx(0.0, abs=1e-6)

    def test_printed_sign_variant_disagrees(self, cd):
        # putting +g_J/2 in both brackets ignores the m_J sign and misses the finite difference
        s = cd.at(0.3)
        lv = find_level(s, 1, 0)
        variant = MU_B * (lv.a**2 * (cd.g_j / 2 - cd.g_i / 2) + lv.b**2 * (cd.g_j / 2 + cd.g_i / 2))
        fd = _fd_slope(s, (1, 0))
        assert abs(dE_dB(lv, s) - fd) < 1e-8 * abs(fd)
        assert abs(variant - fd) > 0.1 * abs(fd)

    def test_stale_level(self, cd):
        lv = find_level(cd.at(0.1), 1, 0)
        with pytest.raises(PreconditionError):
            dE_dB(lv, cd.at(0.2))


class TestInsensitivePairs:
    def test_cd111_clock_at_zero(self, cd):
        pairs = field_insensitive_pairs(cd, (0.0, 0.1))
        keys = {((p.level_1.F, p.level_1.m_f), (p.level_2.F, p.level_2.m_f)): p for p in pairs}
        clock = keys[((0, 0), (1, 0))]
        assert clock.field == 0.0
        assert clock.splitting / GHZ == pytest.approx(14.5, rel=1e-12)

    @pytest.mark.parametrize("I", [1.5, 3.5])
    def test_roots_satisfy_amplitude_relation(self, I):
        s = HyperfineSystem(I, 2 * GHZ, 2.0023, -4e-4)
        pairs = field_insensitive_pairs(s, (1e-4, 0.5), grid=400)
        assert pairs
        for p in pairs:
            assert abs(p.amplitude_residual) < 1e-7
            s_star = s.at(p.field)
            d = dE_dB(find_level(s_star, p.level_1.F, p.level_1.m_f), s_star) \
                - dE_dB(find_level(s_star, p.level_2.F, p.level_2.m_f), s_star)
            assert abs(d) < 1e-8 * MU_B
            # the leading-order statement: equal |a|² up to g_I/g_J
            assert abs(p.level_1.a**2 - p.level_2.a**2) < 10 * abs(s.g_i / s.g_j) * I * 2

    def test_empty_range(self):
        s = HyperfineSystem(0.5, GHZ, 2.0, 0.0)
        assert field_insensitive_pairs(s, (0.5, 0.6)) == []

    @pytest.mark.parametrize("rng", [(-1.0, 1.0), (0.5, 0.2), (0.0, np.inf)])
    def test_bad_range(self, cd, rng):
        with pytest.raises(PreconditionError):
            field_insensitive_pairs(cd, rng)


@pytest.fixture(scope="module")
def clock(cd):
    pairs = field_insensitive_pairs(cd, (0.0, 0.1))
    return next(p for p in pairs if (p.level_1.m_f, p.level_2.m_f) == (0, 0))


class TestStark:
    def test_stretched_single_term(self, cd):
        lv = find_level(cd.at(0.01), 1, 1)
        assert stark_shift(lv, 1e14, (3.0, 7.0)) == pytest.approx(3.0 / (1e14 + lv.energy))

    def test_resonant_rejected(self, cd):
        lv = find_level(cd, 1, 0)
        with pytest.raises(PreconditionError):
            stark_shift(lv, 0.0, (1.0, 1.0), reference_energy=lv.energy)

    def test_equal_in_far_detuned_limit(self, clock):
        assert differential_stark_ratio(clock, 1e9 * clock.splitting, (1.0, 1.0)) < 1e-8

    def test_inverse_detuning_scaling(self, clock):
        ratios = np.geomspace(10, 1e4, 13)
        d = [differential_stark_ratio(clock, r * clock.splitting, (1.0, 1.0)) for r in ratios]
        slope = np.polyfit(np.log(ratios), np.log(d), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.05)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.1, 10), st.floats(0.1, 10))
    def test_scaling_for_unequal_couplings(self, clock, sp, sm):
        a = differential_stark_ratio(clock, 1e3 * clock.splitting, (sp, sm))
        b = differential_stark_ratio(clock, 1e4 * clock.splitting, (sp, sm))
        assert a / b == pytest.approx(10.0, rel=0.01)


def test_level_diagram_rows(cd):
    rows = level_diagram(cd, [0.0, 0.05, 0.1])
    assert len(rows) == 12
    assert rows[0][0] == 0.0 and rows[-1][0] == 0.1
    assert {r[1] for r in rows} == {"F=0,mF=+0", "F=1,mF=-1", "F=1,mF=+0", "F=1,mF=+1"}
