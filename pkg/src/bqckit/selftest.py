"""Identity and compiler verification suite behind `bqckit selftest`."""

from __future__ import annotations

import math

import numpy as np

from . import gates, iqp, mps
from .circuit import simulate, toffoli_circuit
from .statevector import StateVector


def _circuit_unitary(circuit) -> np.ndarray:
    dim = 2**circuit.num_qubits
    cols = []
    for idx in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[idx] = 1.0
        cols.append(simulate(circuit, initial=StateVector(circuit.num_qubits, amps)).amplitudes)
    return np.column_stack(cols)


def _embed(matrix: np.ndarray, targets, num_qubits: int) -> np.ndarray:
    from .statevector import apply_unitary_raw

    dim = 2**num_qubits
    cols = []
    for idx in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[idx] = 1.0
        cols.append(apply_unitary_raw(amps, matrix, targets, num_qubits))
    return np.column_stack(cols)


def _random_iqp(rng: np.random.Generator) -> iqp.IqpCircuit:
    n = int(rng.integers(2, 7))
    remaining = int(rng.integers(1, 11))
    layers = []
    while remaining > 0:
        t, cz, budget = [], [], n
        while remaining > 0 and budget > 0:
            if rng.random() < 0.5:
                q = int(rng.integers(0, n))
                if q not in t:
                    t.append(q)
                    remaining -= 1
                    budget -= 1
            else:
                a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
                cz.append((a, b))
                remaining -= 1
                budget -= 1
        layers.append(iqp.IqpLayer(t=tuple(sorted(t)), cz=tuple(cz)))
    return iqp.IqpCircuit(n, tuple(layers))


def run_selftest() -> list[tuple[str, bool, str]]:
    results: list[tuple[str, bool, str]] = []

    def check(name: str, ok: bool, detail: str = ""):
        results.append((name, bool(ok), detail))

    fid = gates.verify_h_identity()
    check("H = RX(pi/2) RZ(pi/2) RX(pi/2)", fid >= 1 - 1e-12, f"fidelity {fid:.15f}")
    fid = gates.verify_cz_identity()
    check("CZ = (I x H) CNOT (I x H)", fid >= 1 - 1e-12, f"fidelity {fid:.15f}")
    fid = gates.operator_fidelity(gates.Z_MATRIX, gates.rz(math.pi))
    check("Z = RZ(pi) up to phase", fid >= 1 - 1e-12, f"fidelity {fid:.15f}")
    fid = gates.operator_fidelity(gates.T_MATRIX, gates.rphi(math.pi / 4))
    check("T = Rphi(pi/4)", fid >= 1 - 1e-12, f"fidelity {fid:.15f}")
    t8 = np.linalg.matrix_power(gates.rphi(math.pi / 4), 8)
    fid = gates.operator_fidelity(np.eye(2, dtype=complex), t8)
    check("T^8 proportional to I", fid >= 1 - 1e-12, f"fidelity {fid:.15f}")

    try:
        order = gates.resolve_abc_order()
        check("controlled-W stage order unique", order == gates.ABC_ORDER,
              f"resolved {order!r}")
    except gates.GateError as exc:
        check("controlled-W stage order unique", False, str(exc))

    rng = np.random.default_rng(2024)
    worst = 1.0
    for _ in range(100):
        theta, alpha, beta = rng.uniform(-2 * math.pi, 2 * math.pi, size=3)
        worst = min(worst, gates.abc_decompose(theta, alpha, beta).fidelity)
    check("controlled-W reconstruction (100 random)", worst >= 1 - 1e-9,
          f"worst fidelity {worst:.12f}")

    circ = toffoli_circuit()
    tof = _circuit_unitary(circ)
    fid = gates.operator_fidelity(gates.TOFFOLI_MATRIX, tof)
    cnots = sum(1 for op in circ.ops if op.kind == gates.CNOT)
    singles = len(circ.ops) - cnots
    check("Toffoli network matches Toffoli", fid >= 1 - 1e-10, f"fidelity {fid:.15f}")
    check("Toffoli budget 6 CNOT, <= 10 single",
          cnots == 6 and singles <= 10, f"{cnots} CNOT, {singles} single")

    pair = mps.cnot_tensor_pair()
    exact = np.array_equal(pair.recombined().reshape(4, 4), gates.CNOT_MATRIX.real)
    check("CNOT tensor pair recombines exactly", exact, "integer equality")

    counts = {
        "H": len(iqp.compile_h_layer(3)),
        "T": len(iqp.compile_t_layer(3, (0,))),
        "CNOT": len(iqp.compile_cnot_from_first(3, 2)),
        "SWAP": len(iqp.compile_swap_with_first(3, 2)),
        "CZ0": len(iqp.compile_cz(3, 0, 2)),
        "CZ": len(iqp.compile_cz(3, 1, 2)),
    }
    expected = {"H": 2, "T": 2, "CNOT": 4, "SWAP": 14, "CZ0": 6, "CZ": 34}
    check("fragment block counts (2,2,4,14,6,34)", counts == expected, str(counts))

    checks = [
        ("CNOT(0->2)", iqp.compile_cnot_from_first(3, 2), gates.CNOT_MATRIX, (0, 2)),
        ("SWAP(0,2)", iqp.compile_swap_with_first(3, 2), gates.SWAP_MATRIX, (0, 2)),
        ("CZ(0,1)", iqp.compile_cz(3, 0, 1), gates.CZ_MATRIX, (0, 1)),
        ("CZ(1,2)", iqp.compile_cz(3, 1, 2), gates.CZ_MATRIX, (1, 2)),
    ]
    worst = 1.0
    for _name, schedule, matrix, targets in checks:
        built = _circuit_unitary(iqp.schedule_to_circuit(3, schedule))
        worst = min(worst, gates.operator_fidelity(_embed(matrix, targets, 3), built))
    check("fragment unitaries vs dense oracle", worst >= 1 - 1e-9,
          f"worst fidelity {worst:.12f}")

    rng = np.random.default_rng(515)
    worst_fid, worst_dev = 1.0, 0.0
    for _ in range(20):
        circuit = _random_iqp(rng)
        schedule = iqp.compile_iqp(circuit)
        budget_ok = len(schedule) == iqp.block_budget(circuit)
        fid, dev = iqp.verify_schedule(circuit, schedule)
        worst_fid, worst_dev = min(worst_fid, fid), max(worst_dev, dev)
        if not budget_ok:
            worst_fid = 0.0
    check("compiled schedules match source circuits (20 random)",
          worst_fid >= 1 - 1e-9 and worst_dev <= 1e-10,
          f"worst fidelity {worst_fid:.12f}, worst deviation {worst_dev:.3e}")
    return results
