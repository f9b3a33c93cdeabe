"""Independent reference implementations used to check the package.

Everything here recomputes results by a different route than the library:
gate embedding by explicit index arithmetic, entropies from dense reduced
density matrices, and dense unitaries column by column.
"""

import numpy as np

from bqckit.circuit import simulate
from bqckit.statevector import StateVector


def oracle_apply_gate(amplitudes, gate, targets, num_qubits):
    """Embed a k-qubit gate by explicit basis-index bookkeeping."""
    amplitudes = np.asarray(amplitudes, dtype=complex)
    k = len(targets)
    out = np.zeros_like(amplitudes)
    for i in range(2**num_qubits):
        bits = [(i >> (num_qubits - 1 - q)) & 1 for q in range(num_qubits)]
        col = 0
        for t in targets:
            col = (col << 1) | bits[t]
        for row in range(2**k):
            new_bits = list(bits)
            for pos, t in enumerate(targets):
                new_bits[t] = (row >> (k - 1 - pos)) & 1
            j = 0
            for b in new_bits:
                j = (j << 1) | b
            out[j] += gate[row, col] * amplitudes[i]
    return out


def embed_unitary(gate, targets, num_qubits):
    """Dense 2^Q x 2^Q embedding built from the index-arithmetic oracle."""
    dim = 2**num_qubits
    cols = []
    for idx in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[idx] = 1.0
        cols.append(oracle_apply_gate(amps, gate, targets, num_qubits))
    return np.column_stack(cols)


def circuit_unitary(circuit, params=None):
    dim = 2**circuit.num_qubits
    cols = []
    for idx in range(dim):
        amps = np.zeros(dim, dtype=complex)
        amps[idx] = 1.0
        state = StateVector(circuit.num_qubits, amps)
        cols.append(simulate(circuit, params, initial=state).amplitudes)
    return np.column_stack(cols)


def operator_fidelity(a, b):
    return abs(np.trace(np.conj(a.T) @ b)) / a.shape[0]


def reduced_entropy(amplitudes, num_qubits, cut):
    """Von Neumann entropy (nats) from the dense reduced density matrix.

    ``cut`` separates qubits 0..cut from cut+1..N-1.
    """
    left = cut + 1
    psi = np.asarray(amplitudes, dtype=complex).reshape(2**left, 2 ** (num_qubits - left))
    rho = psi @ psi.conj().T
    eigs = np.linalg.eigvalsh(rho)
    eigs = eigs[eigs > 1e-12]
    return float(-np.sum(eigs * np.log(eigs)))


def reduced_entropy_right(amplitudes, num_qubits, cut):
    left = cut + 1
    psi = np.asarray(amplitudes, dtype=complex).reshape(2**left, 2 ** (num_qubits - left))
    rho = psi.conj().T @ psi
    eigs = np.linalg.eigvalsh(rho)
    eigs = eigs[eigs > 1e-12]
    return float(-np.sum(eigs * np.log(eigs)))
