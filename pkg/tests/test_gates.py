import numpy as np
import pytest

from conftest import assert_equal_up_to_phase
from dfsim.atoms import LevelSet, Register, RydbergPulse
from dfsim.engine import leakage_profile, propagate_ideal, logical_block, Schedule
from dfsim.gates import (
    CNOT_GATE,
    CZ_GATE,
    HADAMARD,
    REFERENCE,
    T_GATE,
    LogicalMap,
    decode_dfs,
    encode_dfs,
    encoding_cnot,
    recipe_CNOT,
    recipe_H,
    recipe_T,
    recipe_Uphase,
    recipe_unprotected,
)

TWO_PI = 2.0 * np.pi


class TestEncoding:
    def test_basis_case(self):
        assert np.array_equal(encode_dfs(1.0, 0.0),
                              np.array([0, 1, 0, 0], dtype=complex))

    def test_cnot_realizes_encoding(self):
        # (c0|0> + c1|1>) |1>  ->  c0|01> + c1|10>
        c0, c1 = 0.6, 0.8j
        pre = np.kron(np.array([c0, c1]), np.array([0.0, 1.0]))
        assert np.abs(encoding_cnot() @ pre - encode_dfs(c0, c1)).max() < 1e-15

    def test_involution(self):
        c0, c1 = 1 / np.sqrt(3), np.sqrt(2 / 3) * np.exp(0.4j)
        back = encoding_cnot() @ encode_dfs(c0, c1)
        pre = np.kron(np.array([c0, c1]), np.array([0.0, 1.0]))
        assert np.abs(back - pre).max() < 1e-12
        assert np.allclose(decode_dfs(encode_dfs(c0, c1)), (c0, c1))

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            encode_dfs(1.0, 1.0)


class TestLogicalMap:
    def test_two_qubit_basis_order(self):
        ls2 = LevelSet(("0", "1"))
        reg = Register([ls2] * 4, pairs=((0, 1), (2, 3)))
        e = LogicalMap(reg).embedding()
        expected = ["0101", "0110", "1001", "1010"]
        for k, label in enumerate(expected):
            idx = reg.basis_index(tuple(label))
            assert e[idx, k] == 1.0
            assert np.sum(np.abs(e[:, k])) == 1.0

    def test_unpaired_atom_rejected(self):
        ls2 = LevelSet(("0", "1"))
        with pytest.raises(ValueError):
            LogicalMap(Register([ls2] * 3, pairs=((0, 1),)))


class TestRecipeT:
    def test_ideal_fidelity(self):
        r = recipe_T()
        assert r.ideal_infidelity() < 1e-6

    def test_duration_matches_reference(self):
        r = recipe_T()
        assert abs(r.duration - 1.00e-6) < 0.005 * 1.00e-6

    def test_eighth_power_is_identity(self):
        r = recipe_T()
        action = r.ideal_logical_action()
        assert_equal_up_to_phase(np.linalg.matrix_power(action, 8), np.eye(2),
                                 tol=1e-6)

    def test_double_application_is_quarter_phase(self):
        action = recipe_T().ideal_logical_action()
        assert_equal_up_to_phase(action @ action, np.diag([1.0, 1.0j]),
                                 tol=1e-6)

    def test_certificate(self):
        assert recipe_T().phase_certificate() < 1e-3


class TestRecipeH:
    def test_composition_identity(self):
        # diag(1, e^{3i pi/2}) . R(pi/4) . diag(1, e^{3i pi/2}) = H exactly
        p = np.diag([1.0, np.exp(1.5j * np.pi)])
        th = np.pi / 4
        r = np.array([[np.cos(th), 1j * np.sin(th)],
                      [1j * np.sin(th), np.cos(th)]])
        assert np.abs(p @ r @ p - HADAMARD).max() < 1e-12

    def test_compensated_composition(self):
        # with a negative swap angle the pi/2 phases restore the Hadamard
        p = np.diag([1.0, np.exp(0.5j * np.pi)])
        th = -np.pi / 4
        r = np.array([[np.cos(th), 1j * np.sin(th)],
                      [1j * np.sin(th), np.cos(th)]])
        assert np.abs(p @ r @ p - HADAMARD).max() < 1e-12

    def test_solved_recipe_close_to_hadamard(self):
        r = recipe_H()
        assert r.provenance == "solved"
        assert r.ideal_infidelity() < 1e-2      # before refinement

    def test_refined_recipe(self, refined_h):
        assert refined_h.ideal_infidelity() < 1e-3
        assert refined_h.phase_certificate() < 1e-3
        assert refined_h.provenance == "refined"

    def test_refined_duration_near_reference(self, refined_h):
        # the full model's swap runs ~3% slower than the closed-form rate
        # at the published point, so the refined pulse lands within 5%
        r_seg = refined_h.schedule.segments[1]
        assert abs(r_seg.duration - 120.20e-6) < 0.05 * 120.20e-6

    def test_dfs_confinement(self, refined_h):
        leak = leakage_profile(refined_h.schedule)
        assert leak[-1] < 1e-3


class TestRecipeUphase:
    def test_solved_duration_scale(self, uphase_solution):
        r = recipe_Uphase(solution=uphase_solution)
        assert 0.75 * 938.62e-6 < r.duration < 1.25 * 938.62e-6

    def test_acts_on_first_atoms_of_pairs(self, uphase_solution):
        r = recipe_Uphase(solution=uphase_solution)
        assert r.schedule.segments[0].pulse.atoms == (0, 2)

    def test_refined_recipe(self, refined_uphase):
        assert refined_uphase.ideal_infidelity() < 1e-3
        assert refined_uphase.phase_certificate() < 1e-3

    def test_dfs_confinement(self, refined_uphase):
        leak = leakage_profile(refined_uphase.schedule)
        assert leak[-1] < 1e-3

    def test_wrong_atoms_rejected(self, uphase_solution):
        pulse = uphase_solution.pulse
        bad = RydbergPulse((0, 1), pulse.rabi_0, pulse.rabi_1, pulse.detuning,
                           pulse.detuning_raman, pulse.blockade,
                           pulse.duration)
        with pytest.raises(ValueError):
            recipe_Uphase(pulse=bad)


class TestRecipeCNOT:
    def test_matrix_identity(self):
        h2 = np.kron(np.eye(2), HADAMARD)
        assert np.abs(h2 @ CZ_GATE @ h2 - CNOT_GATE).max() < 1e-12

    def test_refined_composition(self, refined_cnot):
        assert refined_cnot.ideal_infidelity() < 5e-3

    def test_leakage_profile_bounded(self, refined_cnot):
        leak = leakage_profile(refined_cnot.schedule)
        assert leak.max() < 1e-2
        assert leak[-1] < 5e-3


class TestUnprotected:
    def test_durations_match_reference(self):
        # published durations 15.5 us and 14 us, within 10% (the phase
        # fixup pulses add ~3%)
        h = recipe_unprotected("H")
        cnot = recipe_unprotected("CNOT")
        assert abs(h.duration - 15.5e-6) < 0.10 * 15.5e-6
        assert abs(cnot.duration - 14.0e-6) < 0.10 * 14.0e-6

    def test_cz_truth_table_perfect_blockade(self):
        ref = REFERENCE
        big = type(ref)(blockade=TWO_PI * 1e12)
        r = recipe_unprotected("CZ", ref=big)
        action = r.ideal_logical_action()
        assert_equal_up_to_phase(action, CZ_GATE, tol=2e-2)
        assert r.ideal_infidelity() < 1e-3

    def test_ideal_infidelities_at_reference(self):
        for kind in ("CZ", "H", "CNOT"):
            r = recipe_unprotected(kind)
            assert r.ideal_infidelity() < 1e-3, kind

    def test_cnot_composition_truth_table(self):
        # two physical CNOTs from the shared control reproduce the logical
        # CNOT on the encoded basis (ideal-matrix level)
        states = {"00": "0101", "01": "0110", "10": "1001", "11": "1010"}
        expect = {"00": "00", "01": "01", "10": "11", "11": "10"}
        for logical, atoms in states.items():
            bits = np.array([int(b) for b in atoms])
            if bits[0] == 1:
                bits[2] ^= 1
                bits[3] ^= 1
            got = "".join(str(b) for b in bits)
            assert got == states[expect[logical]]

    def test_blockade_warning(self):
        r = recipe_unprotected("CZ", rabi=TWO_PI * 20e6)
        assert r.warnings

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            recipe_unprotected("SWAP")


def test_level_set_independence():
    # enlarging an idle atom's level set does not change the logical action
    r = recipe_T()
    base = r.ideal_logical_action()
    reg = Register([LevelSet(("0", "1", "r")), LevelSet(("0", "1", "r"))],
                   pairs=((0, 1),))
    sched = Schedule(reg, r.schedule.segments, r.ideal_target,
                     LogicalMap(reg).embedding())
    grown = logical_block(sched, propagate_ideal(sched))
    assert np.abs(grown - base).max() < 1e-12
