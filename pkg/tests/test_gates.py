"""Gate library: matrices, identities, ABC decomposition, Toffoli network."""

import math

import numpy as np
import pytest

from bqckit import gates
from bqckit.gates import (
    ABC_ORDER,
    GateError,
    NamedGate,
    abc_decompose,
    gate_matrix,
    operator_fidelity,
    resolve_abc_order,
    verify_cz_identity,
    verify_h_identity,
)
from bqckit.circuit import simulate, toffoli_circuit
from bqckit.statevector import StateVector
from oracles import circuit_unitary


class TestGateMatrices:
    def test_rx_zero_is_identity(self):
        np.testing.assert_allclose(gate_matrix(NamedGate("RX", 0.0)), np.eye(2), atol=1e-15)

    def test_rphi_quarter_pi_is_t(self):
        np.testing.assert_allclose(
            gate_matrix(NamedGate("RPHI", math.pi / 4)), gates.T_MATRIX, atol=1e-15
        )

    def test_rz_pi_is_i_times_z(self):
        np.testing.assert_allclose(
            gate_matrix(NamedGate("RZ", math.pi)), 1j * gates.Z_MATRIX, atol=1e-15
        )

    def test_cry_block_structure(self):
        alpha = 0.7
        mat = gate_matrix(NamedGate("CRY", alpha))
        np.testing.assert_allclose(mat[:2, :2], np.eye(2), atol=1e-15)
        np.testing.assert_allclose(mat[2:, 2:], gates.ry(alpha), atol=1e-15)
        np.testing.assert_allclose(mat[:2, 2:], 0, atol=1e-15)

    def test_all_rotations_unitary_for_random_angles(self):
        rng = np.random.default_rng(8)
        kinds = ["RPHI", "RX", "RY", "RZ", "CRX", "CRY", "CRZ", "CRPHI"]
        for _ in range(1000):
            kind = kinds[int(rng.integers(len(kinds)))]
            mat = gate_matrix(NamedGate(kind, float(rng.uniform(-10, 10))))
            dim = mat.shape[0]
            assert np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) <= 1e-12

    def test_t_to_the_eighth_is_identity_up_to_phase(self):
        t8 = np.linalg.matrix_power(gate_matrix(NamedGate("RPHI", math.pi / 4)), 8)
        assert operator_fidelity(np.eye(2, dtype=complex), t8) >= 1 - 1e-12

    def test_nan_angle_rejected(self):
        with pytest.raises(GateError):
            NamedGate("RX", float("nan"))

    def test_angle_on_fixed_gate_rejected(self):
        with pytest.raises(GateError):
            NamedGate("H", 0.3)


class TestIdentities:
    def test_h_identity_fidelity(self):
        assert verify_h_identity() >= 1 - 1e-12

    def test_h_identity_equals_i_times_h(self):
        prod = gates.rx(math.pi / 2) @ gates.rz(math.pi / 2) @ gates.rx(math.pi / 2)
        np.testing.assert_allclose(prod, 1j * gates.H_MATRIX, atol=1e-14)

    def test_h_identity_sensitive_to_perturbation(self):
        prod = gates.rx(math.pi / 2) @ gates.rz(math.pi / 2 + 0.1) @ gates.rx(math.pi / 2)
        assert operator_fidelity(gates.H_MATRIX, prod) < 1 - 1e-4

    def test_cz_identity(self):
        assert verify_cz_identity() >= 1 - 1e-12

    def test_cz_action_on_basis(self):
        from bqckit.statevector import apply_gate

        eleven = StateVector(2, [0, 0, 0, 1])
        np.testing.assert_array_equal(
            apply_gate(eleven, gates.CZ_MATRIX, [0, 1]).amplitudes, [0, 0, 0, -1]
        )
        zero = StateVector(2, [1, 0, 0, 0])
        np.testing.assert_array_equal(
            apply_gate(zero, gates.CZ_MATRIX, [0, 1]).amplitudes, [1, 0, 0, 0]
        )


class TestAbcDecomposition:
    def test_zero_angles_give_identity(self):
        d = abc_decompose(0.0, 0.0, 0.0)
        built = gates.assemble_controlled_abc(d.a, d.b, d.c, d.order)
        np.testing.assert_allclose(built, np.eye(4), atol=1e-12)

    def test_hundred_random_triples(self):
        rng = np.random.default_rng(100)
        for _ in range(100):
            theta, alpha, beta = rng.uniform(-2 * math.pi, 2 * math.pi, size=3)
            assert abc_decompose(theta, alpha, beta).fidelity >= 1 - 1e-9

    def test_order_resolution_is_frozen(self):
        # Regression: the stage-order search must keep resolving to the
        # constant baked into the library.
        assert resolve_abc_order() == ABC_ORDER == "c_first"

    def test_wrong_order_fails(self):
        theta, alpha, beta = 0.4, 1.3, -0.8
        a, b, c = gates._abc_stages(theta, alpha, beta)
        target = gates.controlled(gates.rz(theta) @ gates.ry(alpha) @ gates.rz(beta))
        wrong = gates.assemble_controlled_abc(a, b, c, "a_first")
        assert operator_fidelity(target, wrong) < 1 - 1e-6

    def test_non_finite_angle_rejected(self):
        with pytest.raises(GateError):
            abc_decompose(float("inf"), 0.0, 0.0)


class TestToffoliNetwork:
    def test_dense_product_is_toffoli(self):
        built = circuit_unitary(toffoli_circuit())
        assert operator_fidelity(gates.TOFFOLI_MATRIX, built) >= 1 - 1e-10

    def test_truth_table(self):
        circ = toffoli_circuit()
        one_one_zero = StateVector(3, np.eye(8)[6])
        out = simulate(circ, initial=one_one_zero)
        assert np.argmax(np.abs(out.amplitudes)) == 7
        one_zero_zero = StateVector(3, np.eye(8)[4])
        out = simulate(circ, initial=one_zero_zero)
        assert np.argmax(np.abs(out.amplitudes)) == 4

    def test_budget(self):
        circ = toffoli_circuit()
        cnots = sum(1 for op in circ.ops if op.kind == "CNOT")
        singles = len(circ.ops) - cnots
        assert cnots == 6
        assert singles <= 10
