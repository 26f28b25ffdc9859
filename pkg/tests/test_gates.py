"""Statevector operations, pulse sequences, CNOT polarity, refocusing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionphoton import gates
from ionphoton.errors import DomainError, UncompilableError

SQ2 = math.sqrt(2.0)


def basis_state(n_ions, index=0):
    amps = np.zeros(4**n_ions, complex)
    amps[index] = 1.0
    return gates.SpinPhotonState(amps, n_ions)


def random_state(n_ions, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=4**n_ions) + 1j * rng.normal(size=4**n_ions)
    amps /= np.linalg.norm(amps)
    return gates.SpinPhotonState(amps, n_ions)


def random_coupling(n, seed):
    rng = np.random.default_rng(seed)
    j = rng.uniform(0.5, 3.0, size=(n, n)) * 1e3
    j = 0.5 * (j + j.T)
    np.fill_diagonal(j, 0.0)
    return j


class TestRotations:
    def test_zero_angle_is_identity(self):
        state = random_state(2, 1)
        out = gates.apply_rotation(state, 0, "x", 0.0)
        assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-15)

    @pytest.mark.parametrize("axis", ["x", "y", "z"])
    def test_rotation_inverse(self, axis):
        state = random_state(2, 2)
        theta = 0.7321
        out = gates.apply_rotation(state, 1, axis, theta)
        out = gates.apply_rotation(out, 1, axis, -theta)
        assert np.max(np.abs(out.amplitudes - state.amplitudes)) < 1e-14

    def test_z_pi_phase_on_e(self):
        # exp(-i pi/2 sigma_z)|e> = -i |e>
        state = basis_state(1, index=0)   # |e>|s+>
        out = gates.apply_rotation(state, 0, "z", math.pi)
        assert out.amplitudes[0] == pytest.approx(-1j, abs=1e-14)

    def test_index_out_of_range(self):
        with pytest.raises(DomainError):
            gates.apply_rotation(basis_state(2), 2, "x", 0.1)

    def test_unknown_axis(self):
        with pytest.raises(DomainError):
            gates.apply_rotation(basis_state(1), 0, "q", 0.1)

    def test_photons_untouched(self):
        # rotate the spin of ion 0; photon-1 amplitude pattern must move with
        # the spin bit only
        state = basis_state(2, index=0b0100)   # |e g> spins? bits: s1=0,p1=1,s2=0,p2=0
        out = gates.apply_rotation(state, 1, "x", math.pi)
        # x pi on ion 1 spin flips bit 2 (third from MSB): 0100 -> 0110
        nz = np.nonzero(np.abs(out.amplitudes) > 1e-12)[0]
        assert list(nz) == [0b0110]


class TestHadamard:
    def test_involution(self):
        state = random_state(2, 3)
        out = gates.apply_hadamard(gates.apply_hadamard(state, 0), 0)
        assert np.max(np.abs(out.amplitudes - state.amplitudes)) < 1e-14

    def test_g_maps_to_plus(self):
        # |g> -> (|g> + |e>)/sqrt2
        state = basis_state(1, index=0b10)   # |g>|s+>
        out = gates.apply_hadamard(state, 0)
        assert out.amplitudes[0b00] == pytest.approx(1 / SQ2, abs=1e-14)
        assert out.amplitudes[0b10] == pytest.approx(1 / SQ2, abs=1e-14)

    def test_e_maps_to_minus(self):
        # |e> -> (|g> - |e>)/sqrt2
        state = basis_state(1, index=0b00)
        out = gates.apply_hadamard(state, 0)
        assert out.amplitudes[0b00] == pytest.approx(-1 / SQ2, abs=1e-14)
        assert out.amplitudes[0b10] == pytest.approx(1 / SQ2, abs=1e-14)


class TestIsingEvolve:
    def test_zero_time_identity(self):
        state = random_state(2, 4)
        out = gates.ising_evolve(state, random_coupling(2, 0), 0.0)
        assert np.allclose(out.amplitudes, state.amplitudes, atol=1e-15)

    def test_two_ion_pi_phases(self):
        # J t = pi -> phases (i, -i, -i, i) on (ee, eg, ge, gg)
        j = np.array([[0.0, 1.0], [1.0, 0.0]])
        t = math.pi
        expected = {(0, 0): 1j, (0, 1): -1j, (1, 0): -1j, (1, 1): 1j}
        for (s1, s2), phase in expected.items():
            idx = gates.bitstring_index((s1, 0, s2, 0))
            state = basis_state(2, index=idx)
            out = gates.ising_evolve(state, j, t)
            assert out.amplitudes[idx] == pytest.approx(phase, abs=1e-12)

    def test_diagonal_probabilities_invariant(self):
        state = random_state(3, 5)
        out = gates.ising_evolve(state, random_coupling(3, 1), 0.37)
        assert np.allclose(
            np.abs(out.amplitudes) ** 2, np.abs(state.amplitudes) ** 2, atol=1e-14
        )

    def test_commutes_with_z_rotation(self):
        state = random_state(3, 6)
        j = random_coupling(3, 2)
        a = gates.apply_rotation(gates.ising_evolve(state, j, 0.9), 1, "z", 0.53)
        b = gates.ising_evolve(gates.apply_rotation(state, 1, "z", 0.53), j, 0.9)
        assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-13

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            gates.ising_evolve(basis_state(2), random_coupling(3, 3), 1.0)


class TestCnotProducts:
    def test_plain_product_is_g_active(self):
        u = gates.cnot_product_matrix("g")
        ideal = gates.ideal_cnot(2, 0, 1, "g")
        assert np.max(np.abs(u - ideal)) < 1e-12
        assert 1.0 - gates.gate_fidelity(u, ideal) < 1e-12

    def test_control_negated_variant_is_e_active(self):
        u = gates.cnot_product_matrix("e")
        ideal = gates.ideal_cnot(2, 0, 1, "e")
        assert np.max(np.abs(u - ideal)) < 1e-12
        assert 1.0 - gates.gate_fidelity(u, ideal) < 1e-12

    def test_negating_all_z_angles_keeps_g_polarity(self):
        # flipping every z-type angle only changes the global phase: the
        # gate stays active on |g>
        i2 = np.eye(2, dtype=complex)

        def zrot(theta):
            return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])

        def yrot(theta):
            return math.cos(theta) * i2 + 1j * math.sin(theta) * gates._SIGMA["y"]

        first = np.kron(i2, yrot(math.pi / 4))
        last = np.kron(i2, yrot(-math.pi / 4))
        zz = np.diag(np.exp(1j * math.pi / 4 * np.array([1, -1, -1, 1])))
        z_c = np.kron(zrot(-math.pi / 4), i2)
        z_t = np.kron(i2, zrot(-math.pi / 4))
        u = np.exp(-1j * math.pi / 4) * last @ z_c @ z_t @ zz @ first
        fid_g = gates.gate_fidelity(u, gates.ideal_cnot(2, 0, 1, "g"))
        fid_e = gates.gate_fidelity(u, gates.ideal_cnot(2, 0, 1, "e"))
        assert 1.0 - fid_g < 1e-12
        assert fid_e < 0.9

    def test_reversed_reading_order_keeps_g_polarity(self):
        # multiplying the six factors in the opposite order still flips the
        # target only when the control is |g> (with an extra conditional
        # phase, so it is not a plain CX)
        i2 = np.eye(2, dtype=complex)

        def zrot(theta):
            return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])

        def yrot(theta):
            return math.cos(theta) * i2 + 1j * math.sin(theta) * gates._SIGMA["y"]

        first = np.kron(i2, yrot(math.pi / 4))
        last = np.kron(i2, yrot(-math.pi / 4))
        zz = np.diag(np.exp(-1j * math.pi / 4 * np.array([1, -1, -1, 1])))
        z_c = np.kron(zrot(math.pi / 4), i2)
        z_t = np.kron(i2, zrot(math.pi / 4))
        u = np.exp(-1j * math.pi / 4) * first @ zz @ z_t @ z_c @ last
        # e-control block is the identity, g-control block is -sigma_x
        assert np.max(np.abs(u[:2, :2] - i2)) < 1e-12
        assert np.max(np.abs(u[2:, 2:] + gates._SIGMA["x"])) < 1e-12
        assert np.max(np.abs(u[:2, 2:])) < 1e-12

    def test_gate_is_self_inverse(self):
        for active in ("e", "g"):
            u = gates.cnot_product_matrix(active)
            assert np.max(np.abs(u @ u - np.eye(4))) < 1e-12


class TestRefocusing:
    def test_two_ion_single_delay(self):
        j = np.array([[0.0, 6328.0], [6328.0, 0.0]])
        seq = gates.compile_refocused_zz(j, (0, 1), math.pi / 4)
        delays = [e for e in seq.elements if isinstance(e, gates.IsingDelay)]
        assert len(delays) == 1
        assert delays[0].duration == pytest.approx(math.pi / (2 * 6328.0), rel=1e-12)
        assert seq.total_duration == pytest.approx(2.482e-4, rel=1e-3)

    def test_two_ion_target_unitary(self):
        j = np.array([[0.0, 900.0], [900.0, 0.0]])
        for angle in (math.pi / 4, 0.3, -0.7, math.pi, 5.0):
            seq = gates.compile_refocused_zz(j, (0, 1), angle)
            u = gates.sequence_unitary(seq, j)
            target = np.diag(np.exp(1j * angle * np.array([1, -1, -1, 1])))
            assert np.max(np.abs(u - target)) < 1e-10

    def test_three_ion_spectator_cancellation(self):
        j = np.zeros((3, 3))
        j[0, 1] = j[1, 0] = 922.0
        j[1, 2] = j[2, 1] = 922.0
        j[0, 2] = j[2, 0] = 922.0
        seq = gates.compile_refocused_zz(j, (0, 1), math.pi / 4)
        u = gates.sequence_unitary(seq, j)
        target_j = np.zeros((3, 3))
        target_j[0, 1] = target_j[1, 0] = math.pi / 2
        target = gates.ising_unitary(target_j, 1.0, 3)
        assert np.max(np.abs(u - target)) < 1e-10

    def test_zero_coupling_uncompilable(self):
        j = np.zeros((3, 3))
        j[1, 2] = j[2, 1] = 500.0
        with pytest.raises(UncompilableError):
            gates.compile_refocused_zz(j, (0, 1), math.pi / 4)

    @given(
        n=st.integers(min_value=3, max_value=4),
        seed=st.integers(min_value=0, max_value=10_000),
        angle=st.floats(min_value=-math.pi, max_value=math.pi),
    )
    @settings(max_examples=25, deadline=None)
    def test_random_couplings_random_pairs(self, n, seed, angle):
        j = random_coupling(n, seed)
        rng = np.random.default_rng(seed + 1)
        i, k = rng.choice(n, size=2, replace=False)
        i, k = int(i), int(k)
        seq = gates.compile_refocused_zz(j, (i, k), angle)
        u = gates.sequence_unitary(seq, j)
        target_j = np.zeros((n, n))
        target_j[i, k] = target_j[k, i] = 2.0 * angle
        target = gates.ising_unitary(target_j, 1.0, n)
        assert np.max(np.abs(u - target)) < 1e-9


class TestCnotSequences:
    @pytest.mark.parametrize("active", ["e", "g"])
    def test_two_ion_compiled_cnot(self, active):
        j = np.array([[0.0, 6328.0], [6328.0, 0.0]])
        seq = gates.cnot_sequence(j, 0, 1, active_on=active)
        u = gates.sequence_unitary(seq, j)
        assert np.max(np.abs(u - gates.ideal_cnot(2, 0, 1, active))) < 1e-12
        assert seq.total_duration == pytest.approx(math.pi / (2 * 6328.0), rel=1e-12)

    def test_three_ion_compiled_cnot(self):
        j = random_coupling(3, 11)
        seq = gates.cnot_sequence(j, 0, 2, active_on="e")
        u = gates.sequence_unitary(seq, j)
        ideal = gates.ideal_cnot(3, 0, 2, "e")
        assert np.max(np.abs(u - ideal)) < 1e-10
        assert 1.0 - gates.gate_fidelity(u, ideal) < 1e-12

    def test_self_inverse_on_state(self):
        j = np.array([[0.0, 6328.0], [6328.0, 0.0]])
        seq = gates.cnot_sequence(j, 0, 1, active_on="e")
        state = random_state(2, 12)
        out = gates.apply_sequence(gates.apply_sequence(state, seq, j), seq, j)
        overlap = np.vdot(state.amplitudes, out.amplitudes)
        assert abs(abs(overlap) - 1.0) < 1e-12
        assert np.max(np.abs(out.amplitudes - overlap * state.amplitudes)) < 1e-10

    def test_control_equals_target_rejected(self):
        j = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(DomainError):
            gates.cnot_sequence(j, 1, 1)


class TestSequencePlumbing:
    def test_empty_sequence_identity(self):
        j = np.array([[0.0, 1.0], [1.0, 0.0]])
        u = gates.sequence_unitary(gates.PulseSequence(()), j)
        assert np.array_equal(u, np.eye(4, dtype=complex))

    def test_fidelity_properties(self):
        j = np.array([[0.0, 500.0], [500.0, 0.0]])
        u = gates.sequence_unitary(gates.cnot_sequence(j, 0, 1), j)
        assert gates.gate_fidelity(u, u) == pytest.approx(1.0, abs=1e-14)
        assert gates.gate_fidelity(u, np.exp(0.7j) * u) == pytest.approx(1.0, abs=1e-14)
        cx = gates.ideal_cnot(2, 0, 1, "g")
        assert gates.gate_fidelity(cx, np.eye(4, dtype=complex)) == pytest.approx(0.5)
        with pytest.raises(DomainError):
            gates.gate_fidelity(np.eye(2), np.eye(4))

    def test_serialization_round_trip(self):
        seq = gates.PulseSequence((
            gates.GlobalPhase(-math.pi / 4),
            gates.Rotation(1, "y", 0.1234567890123456789),
            gates.IsingDelay(2.482295080270064e-4),
            gates.Rotation(0, "z", -math.pi / 2),
        ))
        text = seq.serialize()
        back = gates.PulseSequence.parse(text)
        assert back == seq
        assert back.serialize() == text

    def test_parse_rejects_garbage(self):
        with pytest.raises(DomainError):
            gates.PulseSequence.parse("ROT 0 x\n")
        with pytest.raises(DomainError):
            gates.PulseSequence.parse("WAT 1\n")

    def test_serialized_sequence_simulates_identically(self):
        # the wire format must preserve the compiled gate bit-for-bit
        j = random_coupling(3, 33)
        seq = gates.cnot_sequence(j, 0, 2, active_on="e")
        back = gates.PulseSequence.parse(seq.serialize())
        u_a = gates.sequence_unitary(seq, j)
        u_b = gates.sequence_unitary(back, j)
        assert np.array_equal(u_a, u_b)

    def test_coupling_matrix_object_accepted(self):
        from ionphoton import crystal
        j = np.array([[0.0, 700.0], [700.0, 0.0]])
        wrapped = crystal.CouplingMatrix(J=j)
        state = random_state(2, 9)
        a = gates.ising_evolve(state, wrapped, 1e-4)
        b = gates.ising_evolve(state, j, 1e-4)
        assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_unitarity_of_sequence_matrix(self):
        j = random_coupling(3, 21)
        seq = gates.cnot_sequence(j, 0, 1)
        u = gates.sequence_unitary(seq, j)
        assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-12


@given(
    seed=st.integers(min_value=0, max_value=100_000),
    ion=st.integers(min_value=0, max_value=2),
    axis=st.sampled_from(["x", "y", "z"]),
    angle=st.floats(min_value=-2 * math.pi, max_value=2 * math.pi),
)
@settings(max_examples=40, deadline=None)
def test_norm_preserved_by_unitaries(seed, ion, axis, angle):
    state = random_state(3, seed)
    out = gates.apply_rotation(state, ion, axis, angle)
    out = gates.apply_hadamard(out, ion)
    out = gates.ising_evolve(out, random_coupling(3, seed), abs(angle))
    assert abs(out.norm() - 1.0) < 1e-12
