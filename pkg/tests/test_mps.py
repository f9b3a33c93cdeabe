"""MPS bridge: tensor pair, gate application, entropies, dense agreement."""

import math

import numpy as np
import pytest

from bqckit import mps
from bqckit.builders import build_mpqc, build_tpqc, fanout_block_spec, TpqcSpec
from bqckit.circuit import CircuitIR, Op, simulate
from bqckit.gates import CNOT_MATRIX, NamedGate
from bqckit.statevector import fidelity_up_to_phase
from oracles import reduced_entropy, reduced_entropy_right

LN2 = math.log(2)


class TestCnotTensorPair:
    def test_recombination_exact(self):
        pair = mps.cnot_tensor_pair()
        assert np.array_equal(pair.recombined().reshape(4, 4), CNOT_MATRIX.real)

    def test_control_zero_slice_is_identity(self):
        pair = mps.cnot_tensor_pair()
        # sigma' = sigma = 0 keeps both bond channels: w2 sums to I.
        target_action = (
            pair.w1[0, 0, 0] * pair.w2[:, :, 0] + pair.w1[0, 0, 1] * pair.w2[:, :, 1]
        )
        assert np.array_equal(target_action, np.eye(2))

    def test_control_one_slice_is_x(self):
        pair = mps.cnot_tensor_pair()
        target_action = (
            pair.w1[1, 1, 0] * pair.w2[:, :, 0] + pair.w1[1, 1, 1] * pair.w2[:, :, 1]
        )
        assert np.array_equal(target_action, np.array([[0, 1], [1, 0]]))

    def test_off_diagonal_control_vanishes(self):
        pair = mps.cnot_tensor_pair()
        for sp, s in ((0, 1), (1, 0)):
            action = (
                pair.w1[sp, s, 0] * pair.w2[:, :, 0]
                + pair.w1[sp, s, 1] * pair.w2[:, :, 1]
            )
            assert np.array_equal(action, np.zeros((2, 2)))


class TestZeroState:
    def test_three_sites(self):
        state = mps.mps_from_zero(3)
        assert [g.shape for g in state.gammas] == [(1, 2, 1)] * 3
        dense = mps.contract_to_statevector(state)
        np.testing.assert_array_equal(dense.amplitudes, np.eye(8)[0])

    def test_entropy_zero_everywhere(self):
        state = mps.mps_from_zero(4)
        for cut in range(3):
            assert mps.entanglement_entropy(state, cut) == 0.0

    def test_bond_dims_all_one(self):
        assert mps.mps_from_zero(5).bond_dims() == [1, 1, 1, 1]


class TestApplyGate:
    def test_bell_state(self):
        state = mps.mps_from_zero(2)
        mps.apply_gate_mps(state, NamedGate("H"), (0,))
        cut, _disc = mps.apply_gate_mps(state, NamedGate("CNOT"), (0, 1))
        assert cut == 0
        assert state.bond_dims() == [2]
        assert mps.entanglement_entropy(state, 0) == pytest.approx(LN2, abs=1e-10)

    def test_single_qubit_keeps_bonds(self):
        state = mps.mps_from_zero(3)
        mps.apply_gate_mps(state, NamedGate("RY", 0.7), (1,))
        assert state.bond_dims() == [1, 1]

    def test_bond_bounded_by_two_to_the_k(self):
        # k CNOTs across the same cut, interleaved with random 1q gates.
        rng = np.random.default_rng(6)
        for k in (1, 2, 3):
            state = mps.mps_from_zero(6)
            for _ in range(k):
                for q in range(6):
                    mps.apply_gate_mps(state, NamedGate("RY", rng.uniform(-3, 3)), (q,))
                mps.apply_gate_mps(state, NamedGate("CNOT"), (2, 3))
            assert state.bond_dims()[2] <= 2**k

    def test_non_adjacent_rejected(self):
        state = mps.mps_from_zero(3)
        with pytest.raises(mps.MpsError):
            mps.apply_gate_mps(state, NamedGate("CNOT"), (0, 2))

    def test_reversed_orientation(self):
        # CNOT with control on the right site.
        state = mps.mps_from_zero(2)
        mps.apply_gate_mps(state, NamedGate("H"), (1,))
        mps.apply_gate_mps(state, NamedGate("CNOT"), (1, 0))
        dense = mps.contract_to_statevector(state)
        ref = simulate(CircuitIR(2, (Op("H", (1,)), Op("CNOT", (1, 0)))))
        assert fidelity_up_to_phase(dense, ref) >= 1 - 1e-12


class TestEntropy:
    def test_ghz_every_cut(self):
        ops = [Op("H", (0,))] + [Op("CNOT", (q, q + 1)) for q in range(3)]
        run = mps.run_circuit_mps(CircuitIR(4, tuple(ops)))
        dense = simulate(CircuitIR(4, tuple(ops)))
        for cut in range(3):
            got = mps.entanglement_entropy(run.state, cut)
            want = reduced_entropy(dense.amplitudes, 4, cut)
            assert got == pytest.approx(want, abs=1e-10)
            assert got == pytest.approx(LN2, abs=1e-10)

    def test_left_right_symmetry(self):
        spec = fanout_block_spec(6, 2)
        circ = build_mpqc(spec)
        rng = np.random.default_rng(11)
        params = rng.uniform(-np.pi, np.pi, circ.param_count)
        run = mps.run_circuit_mps(circ, params)
        dense = simulate(circ, params)
        for cut in range(5):
            left = reduced_entropy(dense.amplitudes, 6, cut)
            right = reduced_entropy_right(dense.amplitudes, 6, cut)
            assert left == pytest.approx(right, abs=1e-10)
            assert mps.entanglement_entropy(run.state, cut) == pytest.approx(
                left, abs=1e-9
            )

    def test_cut_range_checked(self):
        state = mps.mps_from_zero(3)
        with pytest.raises(mps.MpsError):
            mps.entanglement_entropy(state, 2)

    def test_unnormalized_rejected(self):
        state = mps.mps_from_zero(2)
        mps.apply_gate_mps(state, NamedGate("H"), (0,))
        mps.apply_gate_mps(state, NamedGate("CNOT"), (0, 1))
        state.lambdas[0] = state.lambdas[0] * 1.5
        with pytest.raises(mps.MpsError):
            mps.entanglement_entropy(state, 0)


def _random_circuit(num_qubits, rng, gate_count=25):
    ops = []
    one_q = ("RX", "RY", "RZ", "RPHI", "H", "T", "Z", "X")
    two_q = ("CNOT", "CZ", "SWAP", "CRY", "CRZ", "CRX", "CRPHI")
    for _ in range(gate_count):
        if rng.random() < 0.55:
            kind = one_q[int(rng.integers(len(one_q)))]
            angle = float(rng.uniform(-np.pi, np.pi)) if kind in ("RX", "RY", "RZ", "RPHI") else None
            ops.append(Op(kind, (int(rng.integers(num_qubits)),), angle=angle))
        else:
            kind = two_q[int(rng.integers(len(two_q)))]
            a, b = (int(v) for v in rng.choice(num_qubits, size=2, replace=False))
            angle = float(rng.uniform(-np.pi, np.pi)) if kind.startswith("CR") else None
            ops.append(Op(kind, (a, b), angle=angle))
    if rng.random() < 0.5 and num_qubits >= 3:
        a, b, c = (int(v) for v in rng.choice(num_qubits, size=3, replace=False))
        ops.append(Op("TOFFOLI", (a, b, c)))
    return CircuitIR(num_qubits, tuple(ops))


class TestRunCircuit:
    def test_dense_agreement_fifty_random_circuits(self):
        rng = np.random.default_rng(2023)
        for trial in range(50):
            n = int(rng.integers(2, 11))
            circ = _random_circuit(n, rng)
            run = mps.run_circuit_mps(circ)
            dense = simulate(circ)
            fid = fidelity_up_to_phase(mps.contract_to_statevector(run.state), dense)
            assert fid >= 1 - 1e-9, f"trial {trial}: fidelity {fid}"

    def test_mpqc_untruncated_matches_dense(self):
        spec = fanout_block_spec(8, 3)
        circ = build_mpqc(spec)
        rng = np.random.default_rng(31)
        params = rng.uniform(-np.pi, np.pi, circ.param_count)
        run = mps.run_circuit_mps(circ, params)
        fid = fidelity_up_to_phase(
            mps.contract_to_statevector(run.state), simulate(circ, params)
        )
        assert fid >= 1 - 1e-9

    def test_chain_tpqc_bond_stays_constant(self):
        spec = TpqcSpec(num_qubits=8, layout="mps", levels=1)
        circ = build_tpqc(spec)
        rng = np.random.default_rng(5)
        params = rng.uniform(-np.pi, np.pi, circ.param_count)
        run = mps.run_circuit_mps(circ, params)
        assert run.max_bond_seen <= 2

    def test_entropy_bound_against_crossing_gates(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            n = int(rng.integers(3, 8))
            circ = _random_circuit(n, rng, gate_count=15)
            run = mps.run_circuit_mps(circ)
            crossings = [0] * (n - 1)
            for row in run.trace:
                if row.cut is not None:
                    crossings[row.cut] += 1
            for cut in range(n - 1):
                entropy = mps.entanglement_entropy(run.state, cut)
                bound = LN2 * min(crossings[cut], min(cut + 1, n - cut - 1))
                assert entropy <= bound + 1e-9

    def test_truncation_bell_fidelity(self):
        circ = CircuitIR(2, (Op("H", (0,)), Op("CNOT", (0, 1))))
        run = mps.run_circuit_mps(circ, max_bond=1)
        fid = fidelity_up_to_phase(mps.contract_to_statevector(run.state), simulate(circ))
        assert fid == pytest.approx(1 / math.sqrt(2), abs=1e-10)
        assert run.trace[-1].discarded_weight == pytest.approx(0.5, abs=1e-10)

    def test_long_range_routing(self):
        circ = CircuitIR(6, (Op("H", (0,)), Op("CNOT", (0, 5))))
        run = mps.run_circuit_mps(circ)
        dense = simulate(circ)
        assert fidelity_up_to_phase(mps.contract_to_statevector(run.state), dense) >= 1 - 1e-10
        labels = [row.gate for row in run.trace]
        assert "SWAP(route)" in labels

    def test_bond_overflow_names_step(self):
        spec = fanout_block_spec(6, 2)
        circ = build_mpqc(spec)
        rng = np.random.default_rng(1)
        params = rng.uniform(-np.pi, np.pi, circ.param_count)
        with pytest.raises(mps.BondOverflowError) as excinfo:
            mps.run_circuit_mps(circ, params, hard_cap=2)
        assert excinfo.value.step >= 0

    def test_prepare_unsupported(self):
        circ = CircuitIR(2, (Op("PREPARE", (0, 1), amplitudes=(1.0, 0, 0, 0)),))
        with pytest.raises(mps.MpsError):
            mps.run_circuit_mps(circ)

    def test_trace_csv_shape(self):
        circ = CircuitIR(2, (Op("H", (0,)), Op("CNOT", (0, 1))))
        run = mps.run_circuit_mps(circ)
        rows = mps.trace_to_csv_rows(run)
        assert rows[0] == ["step", "gate", "cut", "bond_dim", "entropy", "discarded_weight"]
        assert len(rows) == len(run.trace) + 1

    def test_determinism(self):
        spec = fanout_block_spec(5, 2)
        circ = build_mpqc(spec)
        rng = np.random.default_rng(2)
        params = rng.uniform(-np.pi, np.pi, circ.param_count)
        a = mps.run_circuit_mps(circ, params)
        b = mps.run_circuit_mps(circ, params)
        for ga, gb in zip(a.state.gammas, b.state.gammas):
            np.testing.assert_array_equal(ga, gb)
