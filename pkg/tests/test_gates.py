"""Gate schemes: ideal tables, sideband-level simulations and kicked gates."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iongate.dynamics import RamanDrive, StarkForceDrive, TrapConfig
from iongate.errors import LeakageError, PreconditionError
from iongate.gates import (GateSchedule, KickEvent, TruthTable, carrier_pulse, cirac_zoller_cnot,
                           cirac_zoller_phase_gate, computational_inputs, fast_gate, fast_kick_pair,
                           ideal_cnot, ideal_phase_gate, ideal_sigma_phi, ideal_sigma_z, phase_basis_rotation,
                           ramsey_wrapped_gate, rotation_matrix, schedule_branch_analysis, sigma_phi_drives,
                           sigma_phi_gate, sigma_z_drive, sigma_z_gate, solve_fast_schedule,
                           spin_motion_phases_from_pairs, truth_table_from_states)
from iongate.hilbert import (FockBasis, SpinMotionState, coherent_vector, fidelity, fock_vector, sigma_phi,
                             spin_vector)
from iongate.noise import BeamGeometry

DELTA = 2 * np.pi * 20e3
OMEGA_Q = 2 * np.pi * 14.53e9
S2 = np.sqrt(2)


def _spin_state(amps, n_max=2):
    """Two-qubit spin amplitudes (↑↑, ↑↓, ↓↑, ↓↓) with both modes in the vacuum."""
    b = FockBasis(n_max)
    out = np.zeros(4 * b.dim**2, dtype=complex)
    out[:: b.dim**2] = amps
    return SpinMotionState(b, 2, out)


def _single(spin, n_max=1):
    b = FockBasis(n_max)
    return SpinMotionState.from_factors(b, [spin], [0, 0])


def _table(states):
    return truth_table_from_states(states)


class TestCarrierPulse:
    def test_up_to_minus(self):
        out = carrier_pulse(_single("u"), np.pi / 2, 0.0)
        np.testing.assert_allclose(out.spin_block()[:, 0], np.array([1, -1]) / S2, atol=1e-15)

    def test_down_with_phase(self):
        out = carrier_pulse(_single("d"), np.pi / 2, np.pi / 3)
        np.testing.assert_allclose(out.spin_block()[:, 0], np.array([np.exp(-1j * np.pi / 3), 1]) / S2,
                                   atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-np.pi, np.pi), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
    def test_general_half_pi_map(self, phi, a, b):
        alpha, beta = np.cos(a / 2), np.sin(a / 2) * np.exp(1j * b)
        spins = alpha * spin_vector("u") + beta * spin_vector("d")
        s = SpinMotionState.from_factors(FockBasis(1), [spins], [0, 0])
        out = carrier_pulse(s, np.pi / 2, phi).spin_block()[:, 0]
        expected = np.array([alpha + np.exp(-1j * phi) * beta, beta - np.exp(1j * phi) * alpha]) / S2
        np.testing.assert_allclose(out, expected, atol=1e-14)

    def test_forward_back_is_identity(self):
        s = SpinMotionState.from_factors(FockBasis(1), [(spin_vector("u") + 1j * spin_vector("d")) / S2], [0, 0])
        out = carrier_pulse(carrier_pulse(s, np.pi / 2, 0.7), -np.pi / 2, 0.7)
        assert fidelity(out, s) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("theta, phi", [(np.pi / 2, 0.0), (np.pi / 2, 1.1), (-np.pi / 2, 0.4), (np.pi, 2.0)])
    def test_drive_matches_matrix(self, trap, theta, phi):
        s = SpinMotionState.computational(FockBasis(3), "ud", (1, 0))
        a = carrier_pulse(s, theta, phi, target_ion=2)
        b = carrier_pulse(s, theta, phi, target_ion=2, method="drive", trap=trap)
        assert abs(np.vdot(a.amplitudes, b.amplitudes) - 1) < 1e-10

    def test_target_range(self):
        with pytest.raises(PreconditionError):
            carrier_pulse(_single("u"), np.pi / 2, 0.0, target_ion=2)


class TestIdealTables:
    def test_cnot_from_phase_gate(self):
        for phi in np.linspace(0, 2 * np.pi, 7):
            r = np.kron(np.eye(2), rotation_matrix(np.pi / 2, phi))
            assert np.array_equal(ideal_cnot(phi), r.conj().T @ ideal_phase_gate() @ r)

    @pytest.mark.parametrize("phi", [0.0, 0.3, np.pi / 2, 2.5])
    def test_cnot_explicit_form(self, phi):
        expected = np.zeros((4, 4), dtype=complex)
        expected[0, 0] = expected[1, 1] = 1
        expected[3, 2] = np.exp(1j * phi)           # |↓↑⟩ → e^{iφ}|↓↓⟩
        expected[2, 3] = np.exp(-1j * phi)          # |↓↓⟩ → e^{-iφ}|↓↑⟩
        np.testing.assert_allclose(ideal_cnot(phi), expected, atol=1e-15)

    def test_sigma_phi_zero_phases(self):
        col = ideal_sigma_phi(0.0, 0.0)[:, 0]
        np.testing.assert_allclose(col, np.array([1, 0, 0, -1j]) / S2, atol=1e-15)

    @pytest.mark.parametrize("phi", [0.0, 0.8, -2.0])
    def test_sigma_phi_middle_rows_equal_phases(self, phi):
        col = ideal_sigma_phi(phi, phi)[:, 1]
        np.testing.assert_allclose(col, np.array([0, 1, -1j, 0]) / S2, atol=1e-15)

    def test_sigma_phi_quarter_sum(self):
        col = ideal_sigma_phi(0.5, np.pi / 2 - 0.5)[:, 0]
        np.testing.assert_allclose(col, np.array([1, 0, 0, 1]) / S2, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
    def test_sigma_phi_is_rotated_sigma_z(self, p1, p2):
        v = np.kron(phase_basis_rotation(p1), phase_basis_rotation(p2))
        t = TruthTable(ideal_sigma_phi(p1, p2)).rotated(v)
        assert t.process_fidelity(ideal_sigma_z()) == pytest.approx(1.0, abs=1e-12)

    def test_phase_basis_columns_are_eigenvectors(self):
        v = phase_basis_rotation(0.9)
        np.testing.assert_allclose(sigma_phi(0.9) @ v, v @ np.diag([1, -1]), atol=1e-15)


class TestTruthTable:
    def test_global_phase_invariance(self):
        t = TruthTable(ideal_sigma_z() * np.exp(0.7j))
        assert t.process_fidelity(ideal_sigma_z()) == pytest.approx(1.0)
        assert t.overlap_fidelity(TruthTable(ideal_sigma_z())) == pytest.approx(1.0)
        np.testing.assert_allclose(np.abs(t.global_phase_fixed()), np.abs(ideal_sigma_z()))

    def test_requires_four_outputs(self):
        from iongate.errors import DimensionError
        with pytest.raises(DimensionError):
            truth_table_from_states(computational_inputs(FockBasis(1))[:3])

    def test_identity_table(self):
        t = _table(computational_inputs(FockBasis(2)))
        np.testing.assert_array_equal(t.matrix, np.eye(4))
        assert t.purities == (1.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def outputs(trap):
    return cirac_zoller_phase_gate(computational_inputs(FockBasis(4)), trap)


class TestCiracZoller:
    def test_down_down_flips(self, outputs):
        ref = SpinMotionState.computational(FockBasis(4), "dd")
        assert np.vdot(ref.amplitudes, outputs[3].amplitudes) == pytest.approx(-1, abs=1e-10)

    def test_up_up_unchanged(self, outputs):
        ref = SpinMotionState.computational(FockBasis(4), "uu")
        assert np.vdot(ref.amplitudes, outputs[0].amplitudes) == pytest.approx(1, abs=1e-10)

    def test_table_and_motion(self, outputs):
        t = _table(outputs)
        np.testing.assert_allclose(t.matrix, ideal_phase_gate(), atol=1e-10)
        assert min(t.purities) >= 1 - 1e-12

    def test_superposition(self, trap):
        s = _spin_state([0, 1, 0, 1] / S2, 4)
        out = cirac_zoller_phase_gate(s, trap)
        assert fidelity(out, _spin_state([0, 1, 0, -1] / S2, 4)) >= 1 - 1e-8

    @pytest.mark.parametrize("mode", [1, 2])
    def test_either_mode(self, trap, mode):
        t = _table(cirac_zoller_phase_gate(computational_inputs(FockBasis(3)), trap, mode=mode))
        assert t.process_fidelity(ideal_phase_gate()) >= 0.999

    def test_needs_ground_state(self, trap):
        with pytest.raises(PreconditionError):
            cirac_zoller_phase_gate(SpinMotionState.computational(FockBasis(3), "dd", (1, 0)), trap)

    def test_other_mode_may_be_excited(self, trap):
        s = SpinMotionState.computational(FockBasis(3), "uu", (0, 1))
        cirac_zoller_phase_gate(s, trap, mode=1)


class TestCnot:
    @pytest.mark.parametrize("phi", [0.0, 0.4, np.pi / 2])
    def test_simulated_matches_ideal(self, trap, phi):
        t = _table(cirac_zoller_cnot(computational_inputs(FockBasis(4)), phi, trap))
        np.testing.assert_allclose(t.matrix, ideal_cnot(phi), atol=1e-9)

    def test_flip_at_zero_phase(self, trap):
        out = cirac_zoller_cnot(SpinMotionState.computational(FockBasis(4), "du"), 0.0, trap)
        ref = SpinMotionState.computational(FockBasis(4), "dd")
        assert np.vdot(ref.amplitudes, out.amplitudes) == pytest.approx(1, abs=1e-9)

    @pytest.mark.parametrize("phi", [0.0, 1.0, 2.9])
    def test_control_up_invariant(self, trap, phi):
        out = cirac_zoller_cnot(SpinMotionState.computational(FockBasis(4), "ud"), phi, trap)
        ref = SpinMotionState.computational(FockBasis(4), "ud")
        assert np.vdot(ref.amplitudes, out.amplitudes) == pytest.approx(1, abs=1e-9)

    def test_quarter_phase_row(self, trap):
        # the conjugated phase gate sends |↓↓⟩ to e^{-iφ}|↓↑⟩, i.e. −i at φ = π/2
        out = cirac_zoller_cnot(SpinMotionState.computational(FockBasis(4), "dd"), np.pi / 2, trap)
        ref = SpinMotionState.computational(FockBasis(4), "du")
        assert np.vdot(ref.amplitudes, out.amplitudes) == pytest.approx(-1j, abs=1e-9)


@pytest.fixture(scope="module")
def table(trap):
    out = sigma_z_gate(trap, sigma_z_drive(trap, DELTA), computational_inputs(FockBasis(30)))
    return _table(out)


class TestSigmaZ:
    def test_rows(self, table):
        assert np.all(table.row_fidelities(ideal_sigma_z()) >= 0.999)
        assert min(table.purities) >= 0.999

    def test_anti_aligned_phase(self, table):
        assert np.angle(table.matrix[1, 1] / table.matrix[0, 0]) == pytest.approx(np.pi / 2, abs=0.05)

    def test_aligned_spins_stay_put(self, trap):
        b = FockBasis(10)
        out = sigma_z_gate(trap, sigma_z_drive(trap, DELTA), computational_inputs(b))
        for k in (0, 3):
            assert out[k].mode_populations(2)[0] == pytest.approx(1.0, abs=1e-14)

    def test_optical_phase_immunity(self, trap):
        b = FockBasis(12)
        ref = _table(sigma_z_gate(trap, sigma_z_drive(trap, DELTA), computational_inputs(b)))
        moved = _table(sigma_z_gate(trap, sigma_z_drive(trap, DELTA, optical_phase=1.234), computational_inputs(b)))
        np.testing.assert_allclose(moved.matrix, ref.matrix, atol=1e-6)

    def test_spacing_precondition(self, trap):
        x1, x2 = trap.ion_positions
        bad = trap.with_positions((x1, x2 + 0.3 * 2 * np.pi / trap.delta_k))
        with pytest.raises(PreconditionError):
            sigma_z_gate(bad, sigma_z_drive(bad, DELTA), computational_inputs(FockBasis(4)))

    def test_half_period_offset_moves_aligned_spins(self, trap):
        # exploratory: at a half-period offset the forces add for aligned spins instead
        x1, x2 = trap.ion_positions
        bad = trap.with_positions((x1, x2 + 0.5 * 2 * np.pi / trap.delta_k))
        out = sigma_z_gate(bad, sigma_z_drive(bad, DELTA), computational_inputs(FockBasis(12)),
                           method="analytic", exploratory=True)
        t = _table(out)
        assert t.purities[0] == pytest.approx(1.0)
        assert abs(np.angle(t.matrix[0, 0] / t.matrix[1, 1])) == pytest.approx(np.pi / 2, abs=1e-6)

    def test_analytic_close_to_numeric(self, trap):
        b = FockBasis(12)
        a = _table(sigma_z_gate(trap, sigma_z_drive(trap, DELTA), computational_inputs(b), method="analytic"))
        assert a.process_fidelity(ideal_sigma_z()) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_method(self, trap):
        with pytest.raises(PreconditionError):
            sigma_z_gate(trap, sigma_z_drive(trap, DELTA), computational_inputs(FockBasis(2)), method="magic")

    def test_fidelity_rises_as_eta_falls(self):
        infid = []
        for eta in (0.15, 0.1, 0.05, 0.015):
            trap = TrapConfig.from_lamb_dicke(eta, 2 * np.pi * 2.1e6)
            t = _table(sigma_z_gate(trap, sigma_z_drive(trap, DELTA), computational_inputs(FockBasis(12))))
            infid.append(1 - t.row_fidelities(ideal_sigma_z()).min())
        assert all(a > b for a, b in zip(infid, infid[1:]))
        assert infid[-1] < 1e-6

    def _lamb_dicke_drive(self, trap):
        d_omega = DELTA / trap.eta(2)
        per_ion = (d_omega / 2, -d_omega / 2)
        return StarkForceDrive((per_ion, per_ion), DELTA, 2)

    def test_lamb_dicke_model_at_largest_eta(self):
        trap = TrapConfig.from_lamb_dicke(0.15, 2 * np.pi * 2.1e6)
        out = sigma_z_gate(trap, self._lamb_dicke_drive(trap), computational_inputs(FockBasis(30)), exact=False)
        t = _table(out)
        assert np.all(t.row_fidelities(ideal_sigma_z()) >= 0.999)
        assert min(t.purities) >= 0.999

    @pytest.mark.xfail(strict=True, reason="full Debye-Waller coupling leaves the anti-aligned loop open "
                                           "by about 1e-3 at eta_2 = 0.15; see the decisions ledger")
    def test_exact_coupling_at_largest_eta(self):
        trap = TrapConfig.from_lamb_dicke(0.15, 2 * np.pi * 2.1e6)
        t = _table(sigma_z_gate(trap, sigma_z_drive(trap, DELTA), computational_inputs(FockBasis(30))))
        assert np.all(t.row_fidelities(ideal_sigma_z()) >= 0.999)


def _sigma_phi_setup(trap, geometry="phase_sensitive", delta_phi=0.0):
    g = getattr(BeamGeometry, geometry)(trap, OMEGA_Q, DELTA)
    red, blue = g.sideband_pairs(delta_phi)
    (s1, _), (s2, _) = spin_motion_phases_from_pairs(red, blue, trap.ion_positions)
    return g, sigma_phi_drives(trap, DELTA, red, blue), (s1, s2)


@pytest.fixture(scope="module")
def result(trap):
    _, drives, phases = _sigma_phi_setup(trap)
    return _table(sigma_phi_gate(trap, drives, computational_inputs(FockBasis(30)))), phases


class TestSigmaPhi:
    def test_rows(self, result):
        table, phases = result
        assert np.all(table.row_fidelities(ideal_sigma_phi(*phases)) >= 0.999)
        assert min(table.purities) >= 0.999

    def test_rotated_into_phase_basis(self, result):
        table, (s1, s2) = result
        v = np.kron(phase_basis_rotation(s1), phase_basis_rotation(s2))
        assert table.rotated(v).process_fidelity(ideal_sigma_z()) >= 0.999

    @pytest.mark.parametrize("geometry", ["phase_sensitive", "phase_insensitive"])
    def test_analytic_method(self, trap, geometry):
        _, drives, phases = _sigma_phi_setup(trap, geometry, 0.6)
        t = _table(sigma_phi_gate(trap, drives, computational_inputs(FockBasis(12)), method="analytic"))
        assert t.process_fidelity(ideal_sigma_phi(*phases)) == pytest.approx(1.0, abs=1e-10)

    def test_uniform_motion_phase_shift(self, trap):
        _, (red, blue), _ = _sigma_phi_setup(trap)
        b = FockBasis(12)
        ref = _table(sigma_phi_gate(trap, [red, blue], computational_inputs(b)))
        c = 0.9
        shifted = [RamanDrive(red.rabi, red.detuning, "red", 2, tuple(p - c for p in red.optical_phase)),
                   RamanDrive(blue.rabi, blue.detuning, "blue", 2, tuple(p + c for p in blue.optical_phase))]
        moved = _table(sigma_phi_gate(trap, shifted, computational_inputs(b)))
        assert moved.overlap_fidelity(ref) >= 1 - 1e-8

    def test_force_phase_condition(self, trap):
        _, (red, blue), _ = _sigma_phi_setup(trap)
        bad = RamanDrive(red.rabi, red.detuning, "red", 2, (red.optical_phase[0] + 0.5, red.optical_phase[1]))
        with pytest.raises(PreconditionError):
            sigma_phi_gate(trap, [bad, blue], computational_inputs(FockBasis(4)))
        sigma_phi_gate(trap, [bad, blue], computational_inputs(FockBasis(4)), method="analytic", exploratory=True)


class TestRamseyWrapped:
    @pytest.mark.parametrize("geometry", ["phase_sensitive", "phase_insensitive"])
    def test_path_shift_independence(self, trap, geometry):
        g = getattr(BeamGeometry, geometry)(trap, OMEGA_Q, DELTA)
        tables = [ramsey_wrapped_gate(trap, g, dp, FockBasis(12), DELTA) for dp in (0.0, 1.0, 2.0, 3.0)]
        for t in tables:
            assert t.process_fidelity(ideal_sigma_z()) >= 0.999
            assert t.overlap_fidelity(tables[0]) >= 1 - 1e-6

    def test_mismatched_wrapper_rejected(self, trap):
        g = BeamGeometry.phase_sensitive(trap, OMEGA_Q, DELTA)
        with pytest.raises(PreconditionError):
            ramsey_wrapped_gate(trap, g, 1.0, FockBasis(4), DELTA, wrapper="copropagating")

    def test_mismatched_wrapper_fails_when_forced(self, trap):
        g = BeamGeometry.phase_sensitive(trap, OMEGA_Q, DELTA)
        t = ramsey_wrapped_gate(trap, g, 1.0, FockBasis(8), DELTA, wrapper="copropagating",
                                method="analytic", strict=False)
        assert t.process_fidelity(ideal_sigma_z()) < 0.9

    def test_zero_shift_is_plain_composition(self, trap):
        g, drives, (s1, s2) = _sigma_phi_setup(trap)
        b = FockBasis(8)
        pre = np.kron(phase_basis_rotation(s1), phase_basis_rotation(s2))
        from iongate.gates import apply_spin_matrix
        states = [apply_spin_matrix(s, pre) for s in computational_inputs(b)]
        states = sigma_phi_gate(trap, drives, states, method="analytic")
        manual = _table([apply_spin_matrix(s, pre.conj().T) for s in states])
        wrapped = ramsey_wrapped_gate(trap, g, 0.0, b, DELTA, method="analytic")
        np.testing.assert_allclose(wrapped.matrix, manual.matrix, atol=1e-12)


class TestKicks:
    ALPHA = 0.3 + 0.2j

    def _state(self, label, n_max=40):
        b = FockBasis(n_max)
        coh = coherent_vector(n_max, self.ALPHA)
        return SpinMotionState.from_factors(b, list(label), [coh, coh])

    def test_up_up_invariant(self):
        s = self._state("uu")
        out = fast_kick_pair(s, KickEvent(0.0))
        np.testing.assert_array_equal(out.amplitudes, s.amplitudes)

    @pytest.mark.parametrize("label, mult", [("dd", (2, 0)), ("ud", (1, -1)), ("du", (1, 1))])
    def test_displacement_table(self, label, mult):
        # each |↓⟩ ion adds iη₁ to the COM mode and ±iη₂ to the stretch mode
        kick = KickEvent(0.0, eta_1=0.12, eta_2=0.09)
        betas = (1j * mult[0] * kick.eta_1, 1j * mult[1] * kick.eta_2)
        out = fast_kick_pair(self._state(label), kick)
        n = 40
        ref = SpinMotionState.from_factors(FockBasis(n), list(label),
                                           [coherent_vector(n, self.ALPHA + betas[0]),
                                            coherent_vector(n, self.ALPHA + betas[1])])
        assert fidelity(out, ref) >= 1 - 1e-10

    def test_down_down_com_only(self):
        kick = KickEvent(0.0, eta_1=0.1, eta_2=0.08)
        out = fast_kick_pair(self._state("dd"), kick)
        n = 40
        ref = SpinMotionState.from_factors(FockBasis(n), ["d", "d"], [coherent_vector(n, self.ALPHA + 0.2j),
                                                                      coherent_vector(n, self.ALPHA)])
        assert fidelity(out, ref) >= 1 - 1e-10

    def test_opposite_kicks_cancel(self):
        s = self._state("du", 30)
        out = fast_kick_pair(fast_kick_pair(s, KickEvent(0.0, 1)), KickEvent(0.0, -1))
        np.testing.assert_allclose(out.amplitudes, s.amplitudes, atol=1e-10)

    def test_leakage_guard(self):
        with pytest.raises(LeakageError):
            fast_kick_pair(self._state("dd", 6), KickEvent(0.0, strength=20.0))

    def test_spin_selector(self):
        with pytest.raises(PreconditionError):
            KickEvent(0.0, spin_selector="up")
        with pytest.raises(PreconditionError):
            KickEvent(0.0, delta_k_sign=2)


@pytest.fixture(scope="module")
def schedule(trap):
    return solve_fast_schedule(trap, seed=3)


class TestFastGate:
    def test_empty_schedule_identity(self):
        sched = GateSchedule((("free", 1e-6),), omegas=(1e6, 2e6))
        states = computational_inputs(FockBasis(4))
        res = fast_gate(sched, states)
        for a, b in zip(res.states, states):
            np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-14)

    def test_schedule_closes(self, schedule):
        zs = [k.z for k in schedule.kicks]
        assert abs(sum(zs)) < 1e-9 * sum(abs(z) for z in zs)
        residuals, _ = schedule_branch_analysis(schedule)
        assert max(max(abs(a) for a in r) for r in residuals.values()) < 1e-6

    def test_truth_table(self, schedule):
        res = fast_gate(schedule, computational_inputs(FockBasis(60)))
        assert res.max_residual < 1e-6
        t = _table(res.states)
        assert t.process_fidelity(ideal_sigma_z()) >= 0.999
        assert min(t.purities) >= 0.999

    def test_doubling_strength_quadruples_phase(self, schedule):
        doubled = GateSchedule.from_kicks(
            [KickEvent(k.time, k.delta_k_sign, k.eta_1, k.eta_2, strength=2 * k.strength) for k in schedule.kicks],
            schedule.omegas, schedule.duration)
        _, p1 = schedule_branch_analysis(schedule)
        _, p2 = schedule_branch_analysis(doubled)
        for cfg in p1:
            assert p2[cfg] == pytest.approx(4 * p1[cfg], abs=1e-12)

    def test_momentum_closure_enforced(self):
        sched = GateSchedule.from_kicks([KickEvent(0.0), KickEvent(1e-7)], (1e6, 1.7e6))
        with pytest.raises(PreconditionError):
            fast_gate(sched, computational_inputs(FockBasis(4)))

    def test_open_schedule_rejected(self):
        sched = GateSchedule.from_kicks([KickEvent(0.0), KickEvent(1e-7, -1)], (2 * np.pi * 2e6, 2 * np.pi * 3.4e6))
        with pytest.raises(PreconditionError):
            fast_gate(sched, computational_inputs(FockBasis(6)))

    def test_json_round_trip(self, schedule):
        again = GateSchedule.from_json(schedule.to_json())
        assert again == schedule

    def test_drive_step_round_trip(self):
        drive = RamanDrive((1.0, 2.0 + 1j), 5.0, "red", 1, (0.1, 0.2))
        sched = GateSchedule((("drive", drive, 1e-6),), "sigma_phi")
        again = GateSchedule.from_json(sched.to_json())
        assert again.duration == 1e-6
        assert again.steps[0][1].rabi == (1.0, 2.0 + 1j)

    def test_bad_label(self):
        with pytest.raises(PreconditionError):
            GateSchedule((("free", 1.0),), "bogus")
