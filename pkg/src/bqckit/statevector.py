"""Dense statevector simulation.

Conventions used across the whole package:

* Qubit 0 is the most significant bit of a basis index, so for two qubits
  the basis order is |00>, |01>, |10>, |11> and |10> sits at index 2.
* States are numpy arrays of 2**Q complex amplitudes with unit L2 norm.
* Exact (infinite-shot) measurement is requested with ``shots=EXACT_SHOTS``
  rather than through a separate API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_QUBITS = 20

#: Sentinel for "measure exactly", i.e. read the full probability vector.
EXACT_SHOTS = math.inf


class SimulationError(ValueError):
    """Raised when a simulator contract is violated."""


@dataclass
class StateVector:
    """A pure state of ``num_qubits`` qubits as a dense amplitude array."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise SimulationError(
                f"expected {2**self.num_qubits} amplitudes, "
                f"got shape {self.amplitudes.shape}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


@dataclass
class MeasurementRecord:
    """Counts of computational-basis outcomes plus the exact probabilities.

    In finite-shot mode the counts sum to ``shots``; in exact mode
    (``shots == EXACT_SHOTS``) counts are empty and the probability vector
    carries the full answer.
    """

    counts: dict[str, int]
    shots: int | float
    probabilities: np.ndarray = field(repr=False)


def new_zero_state(num_qubits: int) -> StateVector:
    """Return |0...0> on ``num_qubits`` qubits (1 <= Q <= MAX_QUBITS)."""
    if not isinstance(num_qubits, (int, np.integer)) or isinstance(num_qubits, bool):
        raise SimulationError(f"qubit count must be an integer, got {num_qubits!r}")
    if not 1 <= num_qubits <= MAX_QUBITS:
        raise SimulationError(
            f"qubit count must be in [1, {MAX_QUBITS}], got {num_qubits}"
        )
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(int(num_qubits), amps)


def _check_targets(num_qubits: int, targets) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise IndexError(f"duplicate target qubits: {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise IndexError(f"target {t} out of range for {num_qubits} qubits")
    return targets


def apply_unitary_raw(
    amplitudes: np.ndarray, matrix: np.ndarray, targets, num_qubits: int
) -> np.ndarray:
    """Embed ``matrix`` on ``targets`` and apply it to a raw amplitude array.

    ``targets[0]`` is the most significant qubit of the gate's local index,
    matching the global qubit-0-most-significant ordering.  No unitarity
    check is performed here; callers own validation.
    """
    k = len(targets)
    psi = amplitudes.reshape((2,) * num_qubits)
    gate = np.asarray(matrix, dtype=np.complex128).reshape((2,) * (2 * k))
    out = np.tensordot(gate, psi, axes=(list(range(k, 2 * k)), list(targets)))
    return np.moveaxis(out, range(k), targets).reshape(-1)


def apply_gate(state: StateVector, gate: np.ndarray, targets) -> StateVector:
    """Apply a 1-, 2- or 3-qubit unitary to the named qubits.

    Returns a new state; the input is left untouched.  The gate must be
    unitary to 1e-12 and ``len(targets)`` must match its arity.
    """
    gate = np.asarray(gate, dtype=np.complex128)
    dim = gate.shape[0]
    if gate.shape != (dim, dim) or dim not in (2, 4, 8):
        raise SimulationError(f"gate must be 2x2, 4x4 or 8x8, got {gate.shape}")
    arity = dim.bit_length() - 1
    targets = _check_targets(state.num_qubits, targets)
    if len(targets) != arity:
        raise IndexError(
            f"gate arity {arity} does not match {len(targets)} targets"
        )
    err = np.max(np.abs(gate.conj().T @ gate - np.eye(dim)))
    if err > 1e-12:
        raise SimulationError(f"gate is not unitary (deviation {err:.3e})")
    amps = apply_unitary_raw(state.amplitudes, gate, targets, state.num_qubits)
    return StateVector(state.num_qubits, amps)


def probabilities(state: StateVector) -> np.ndarray:
    """Born-rule probabilities |amplitude_i|^2 in basis-index order."""
    return np.abs(state.amplitudes) ** 2


def sample(state: StateVector, shots: int | float, seed: int | None = None) -> MeasurementRecord:
    """Measure in the computational basis.

    Finite ``shots`` draws i.i.d. outcomes deterministically under ``seed``;
    ``shots=EXACT_SHOTS`` returns the exact distribution with empty counts.
    """
    probs = probabilities(state)
    if shots == EXACT_SHOTS:
        return MeasurementRecord(counts={}, shots=EXACT_SHOTS, probabilities=probs)
    if not isinstance(shots, (int, np.integer)) or isinstance(shots, bool):
        raise SimulationError(f"shots must be a positive integer or EXACT_SHOTS, got {shots!r}")
    if shots < 1:
        raise SimulationError(f"shots must be >= 1, got {shots}")
    rng = np.random.default_rng(seed)
    draw = rng.multinomial(int(shots), probs / probs.sum())
    width = state.num_qubits
    counts = {
        format(i, f"0{width}b"): int(n) for i, n in enumerate(draw) if n > 0
    }
    return MeasurementRecord(counts=counts, shots=int(shots), probabilities=probs)


def fidelity_up_to_phase(a: StateVector, b: StateVector) -> float:
    """|<a|b>| in [0, 1]; equals 1 iff the states match up to a global phase."""
    if a.num_qubits != b.num_qubits:
        raise SimulationError(
            f"qubit counts differ: {a.num_qubits} vs {b.num_qubits}"
        )
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes))))


def amplitude_dump(state: StateVector) -> list[list[float]]:
    """Amplitudes as [re, im] pairs in basis-index order, for debug output."""
    return [[float(a.real), float(a.imag)] for a in state.amplitudes]
