import numpy as np
import pytest

from dfsim.atoms import (
    DecayConfig,
    DephaserPulse,
    LevelError,
    LevelSet,
    Register,
    RydbergPulse,
    blockade_projector,
    decay_term,
    dephaser_hamiltonian,
    embed,
    noise_hamiltonian,
    noise_weights,
    rydberg_pair_hamiltonian,
)
from dfsim.effective import dephaser_phase, effective_params
from dfsim.linalg import dagger, expm, is_hermitian, kron

TWO_PI = 2.0 * np.pi


def pair_register(levels=("0", "1", "r")):
    ls = LevelSet(levels)
    return Register([ls, ls])


class TestLevelSet:
    def test_ordering_is_canonical(self):
        assert LevelSet(("r", "1", "0")).levels == ("0", "1", "r")

    def test_qubit_levels_required(self):
        with pytest.raises(ValueError):
            LevelSet(("0", "r"))

    def test_unknown_level(self):
        with pytest.raises(ValueError):
            LevelSet(("0", "1", "x"))

    def test_index_error(self):
        with pytest.raises(LevelError):
            LevelSet(("0", "1")).index("r")


class TestRegister:
    def test_mixed_radix_index(self):
        reg = Register([LevelSet(("0", "1", "r")), LevelSet(("0", "1"))])
        assert reg.dim == 6
        assert reg.basis_index(("0", "0")) == 0
        assert reg.basis_index(("0", "1")) == 1
        assert reg.basis_index(("1", "0")) == 2
        assert reg.basis_index(("r", "1")) == 5

    def test_atom_in_two_pairs_rejected(self):
        ls = LevelSet(("0", "1"))
        with pytest.raises(ValueError):
            Register([ls, ls, ls], pairs=((0, 1), (1, 2)))


class TestEmbed:
    def test_identity(self):
        reg = pair_register(("0", "1"))
        assert np.array_equal(embed(np.eye(2), 0, reg), np.eye(4))

    def test_sigma_z_first_atom(self):
        reg = pair_register(("0", "1"))
        sz = np.diag([1.0, -1.0])
        assert np.array_equal(embed(sz, 0, reg), np.diag([1, 1, -1, -1.0]))

    def test_embed_product_equals_kron(self):
        rng = np.random.default_rng(0)
        reg = pair_register(("0", "1"))
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        assert np.abs(embed(a, 0, reg) @ embed(b, 1, reg) - kron(a, b)).max() \
            < 1e-14

    def test_dimension_mismatch(self):
        reg = pair_register(("0", "1"))
        with pytest.raises(ValueError):
            embed(np.eye(3), 0, reg)
        with pytest.raises(ValueError):
            embed(np.eye(2), 5, reg)


class TestDephaser:
    def test_decoupled_limit(self):
        reg = Register([LevelSet(("0", "1", "e"))])
        p = DephaserPulse(0, 0.0 + 0j, TWO_PI * 1e6, 1e-6)
        h = dephaser_hamiltonian(p, reg)
        expected = np.diag([0.0, 0.0, -TWO_PI * 1e6]).astype(complex)
        assert np.array_equal(h, expected)

    def test_missing_level(self):
        reg = pair_register(("0", "1"))
        p = DephaserPulse(0, TWO_PI * 1e6, 0.0, 1e-6)
        with pytest.raises(LevelError):
            dephaser_hamiltonian(p, reg)

    def test_hermitian(self):
        reg = Register([LevelSet(("0", "1", "e"))])
        p = DephaserPulse(0, TWO_PI * (1e6 + 0.3e6j), -TWO_PI * 9e6, 1e-6)
        assert is_hermitian(dephaser_hamiltonian(p, reg), tol=1e-12)

    def test_cycle_phase_matches_formula(self):
        # full-cycle propagation returns |1> with phase n*pi*(1+det/gen_rabi)
        reg = Register([LevelSet(("0", "1", "e"))])
        rabi, det, n = TWO_PI * 5e6, -TWO_PI * 49.81e6, 3
        phi, t_d = dephaser_phase(n, rabi, det)
        p = DephaserPulse(0, rabi, det, t_d)
        u = expm(-1j * t_d * dephaser_hamiltonian(p, reg))
        one = reg.basis_state(("1",))
        amp = one.conj() @ (u @ one)
        assert abs(abs(amp) - 1.0) < 1e-9
        assert abs((np.angle(amp) - phi + np.pi) % (2 * np.pi) - np.pi) < 1e-9


class TestRydbergPair:
    def test_decoupled_diagonal(self):
        reg = pair_register()
        p = RydbergPulse((0, 1), 0.0, 0.0, TWO_PI * 60e6, TWO_PI * 30e6,
                         TWO_PI * 100e6, 1e-6)
        h = rydberg_pair_hamiltonian(p, reg)
        assert np.abs(h - np.diag(np.diagonal(h))).max() == 0.0
        irr = reg.basis_index(("r", "r"))
        assert np.isclose(h[irr, irr], -2 * TWO_PI * 60e6 + TWO_PI * 100e6)

    def test_hermitian(self):
        reg = pair_register()
        p = RydbergPulse((0, 1), TWO_PI * (3e6 + 1e6j), TWO_PI * 2e6,
                         TWO_PI * 60e6, TWO_PI * 30e6, TWO_PI * 100e6, 1e-6)
        assert is_hermitian(rydberg_pair_hamiltonian(p, reg), tol=1e-12)

    def test_blockade_limit_excludes_double_excitation(self):
        # huge |rr> shift: computational dressed states have no rr weight
        reg = pair_register()
        p = RydbergPulse((0, 1), TWO_PI * 3.91e6, TWO_PI * 1.97e6,
                         TWO_PI * 60.34e6, TWO_PI * 30.70e6,
                         TWO_PI * 1e12, 1e-6)
        w, v = np.linalg.eigh(rydberg_pair_hamiltonian(p, reg))
        irr = reg.basis_index(("r", "r"))
        for labels in (("0", "0"), ("0", "1"), ("1", "0"), ("1", "1")):
            ref = reg.basis_state(labels)
            idx = np.argmax(np.abs(v.conj().T @ ref))
            assert abs(v[irr, idx]) < 1e-4

    def test_dressed_shifts_match_effective_theory(self):
        # at 1/8 amplitudes the exact light shifts agree with the
        # closed-form expressions to their own perturbative accuracy
        reg = pair_register()
        x = 0.125
        p = RydbergPulse((0, 1), TWO_PI * 3.91e6 * x, TWO_PI * 1.97e6 * x,
                         TWO_PI * 60.34e6, TWO_PI * 30.70e6,
                         TWO_PI * 100e6, 1e-6)
        ep = effective_params(p.rabi_0, p.rabi_1, p.detuning,
                              p.detuning_raman, p.blockade)
        w, v = np.linalg.eigh(rydberg_pair_hamiltonian(p, reg))

        def level(labels_amps):
            ref = np.zeros(reg.dim, dtype=complex)
            for labels, amp in labels_amps:
                ref[reg.basis_index(labels)] = amp
            return w[np.argmax(np.abs(v.conj().T @ ref))]

        e00 = level(((("0", "0"), 1.0),))
        e11 = level(((("1", "1"), 1.0),))
        inv2 = 1 / np.sqrt(2)
        ep_sym = level(((("0", "1"), inv2), (("1", "0"), inv2)))
        # bare energies: |00>: 0, |01>+|10>: -detuning_raman, |11>: -2*d_raman
        shift00 = e00 - 0.0
        shift_pair = ep_sym + p.detuning_raman
        shift11 = e11 + 2 * p.detuning_raman
        assert abs(shift00 - ep.delta_00) < 0.02 * abs(ep.delta_00)
        assert abs(shift11 - ep.delta_11) < 0.02 * abs(ep.delta_11)
        assert abs(shift_pair - ep.delta_0) < 0.02 * abs(ep.delta_0)

    def test_modulation_factor(self):
        from dfsim.atoms import BlockadeModulation
        reg = pair_register()
        mod = BlockadeModulation(0.2, 5e4, 0.0)
        p = RydbergPulse((0, 1), 0.0, 0.0, TWO_PI * 60e6, TWO_PI * 30e6,
                         TWO_PI * 100e6, 1e-6, modulation=mod)
        irr = reg.basis_index(("r", "r"))
        t = 1.0 / (4 * 5e4)        # quarter period
        h = rydberg_pair_hamiltonian(p, reg, time=t)
        shift = TWO_PI * 100e6 * (1.0 + 0.2 * np.sin(2 * np.pi * 5e4 * t))
        assert np.isclose(h[irr, irr].real, -2 * TWO_PI * 60e6 + shift)
        with pytest.raises(ValueError):
            BlockadeModulation(0.2, 0.0)


class TestNoise:
    def test_zero(self):
        reg = pair_register(("0", "1"))
        assert np.abs(noise_hamiltonian(0.0, 1.5, 1.5, reg)).max() == 0.0

    def test_collective_pattern(self):
        reg = pair_register(("0", "1"))
        x = 2.7e5
        h = noise_hamiltonian(x, 1.5, 1.5, reg)
        assert np.allclose(np.diagonal(h), [0, x, x, 2 * x])

    def test_dfs_condition(self):
        # restricted to span{|01>, |10>} the collective error is prop. to I
        reg = pair_register(("0", "1"))
        for eps in (1e4, -3e5, 7.7e5):
            h = noise_hamiltonian(eps, 1.5, 1.5, reg)
            assert h[1, 1] == h[2, 2]
            assert h[1, 2] == 0.0

    def test_alpha_weight_on_rydberg_level(self):
        reg = Register([LevelSet(("0", "1", "r"))])
        x = 1.0e5
        h = noise_hamiltonian(x, 1.5, 1.5, reg)
        assert np.isclose(h[reg.basis_index(("r",)), reg.basis_index(("r",))],
                          1.5 * x)

    def test_weights_diag_matches_dense(self):
        reg = Register([LevelSet(("0", "1", "r")), LevelSet(("0", "1"))])
        w = noise_weights(reg, 1.2, 1.7)
        h = noise_hamiltonian(1.0, 1.2, 1.7, reg)
        assert np.allclose(np.diagonal(h).real, w)


class TestDecay:
    def test_zero(self):
        reg = pair_register()
        assert np.abs(decay_term(DecayConfig(), reg)).max() == 0.0

    def test_negative_rates_rejected(self):
        with pytest.raises(ValueError):
            DecayConfig(gamma_r=-1.0)

    def test_anti_hermitian(self):
        reg = pair_register()
        d = decay_term(DecayConfig(gamma_e=1e3, gamma_r=2e3), reg)
        assert np.abs(d + dagger(d)).max() < 1e-12

    def test_survival_probability(self):
        # an atom held in |r> decays as exp(-gamma_r t)
        reg = Register([LevelSet(("0", "1", "r"))])
        gamma, t = TWO_PI * 5e3, 3.3e-5
        u = expm(-1j * t * decay_term(DecayConfig(gamma_r=gamma), reg))
        r = reg.basis_state(("r",))
        assert abs(abs(r.conj() @ (u @ r)) ** 2 - np.exp(-gamma * t)) < 1e-12

    def test_blockade_projector(self):
        reg = pair_register()
        proj = blockade_projector((0, 1), reg)
        irr = reg.basis_index(("r", "r"))
        expected = np.zeros(reg.dim)
        expected[irr] = 1.0
        assert np.allclose(np.diagonal(proj).real, expected)
