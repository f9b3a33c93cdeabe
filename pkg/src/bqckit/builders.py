"""Builders for the three circuit families handled by this package.

* MPQC: L identical blocks, each a per-qubit rotation template followed by
  at most N CNOTs with free connectivity.
* TPQC: blocks arranged on a tensor-network layout (binary tree or sliding
  nearest-neighbour chain); CNOTs stay inside their local block.
* BQC: an ancilla register carrying a prior distribution, plus per-ancilla-
  value conditional blocks applied to the data register through a flag
  qubit, so every conditional rotation needs only a single control.

Qubit layout for BQC circuits: data 0..N-1, ancilla N..N+M-1, flag N+M,
and one work qubit N+M+1 when M >= 3 (used by the flag-activation ladder).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import CPREPARE, PREPARE, CircuitError, CircuitIR, Op, simulate
from .gates import (
    CNOT,
    CONTROLLED_ROTATION_KINDS,
    CRY,
    ROTATION_KINDS,
    RPHI,
    RX,
    RY,
    RZ,
    TOFFOLI,
    X,
)
from .statevector import probabilities

#: Per-qubit rotation order of the 7-gate block template used by the IQP
#: compiler; the entangler fans out from qubit 0 to every other qubit.
FANOUT_BLOCK_TEMPLATE = (RX, RZ, RX, RPHI, RZ, RY, RZ)


def fanout_entangler(num_qubits: int) -> tuple[tuple[int, int], ...]:
    return tuple((0, j) for j in range(1, num_qubits))


def ring_entangler(num_qubits: int) -> tuple[tuple[int, int], ...]:
    if num_qubits < 2:
        return ()
    return tuple((j, (j + 1) % num_qubits) for j in range(num_qubits))


@dataclass(frozen=True)
class MpqcSpec:
    """Layered circuit spec: same rotation template and entangler per block."""

    num_qubits: int
    num_blocks: int
    template: tuple[str, ...] = (RY,)
    entangler: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1 or self.num_blocks < 1:
            raise CircuitError("need at least one qubit and one block")
        if len(self.template) < 1:
            raise CircuitError("every qubit needs at least one parameterized gate per block")
        for kind in self.template:
            if kind not in ROTATION_KINDS:
                raise CircuitError(f"template entries must be rotations, got {kind!r}")
        if len(self.entangler) > self.num_qubits:
            raise CircuitError(
                f"at most {self.num_qubits} CNOT pairs per block, got {len(self.entangler)}"
            )
        for c, t in self.entangler:
            if c == t or not (0 <= c < self.num_qubits and 0 <= t < self.num_qubits):
                raise CircuitError(f"bad entangler pair ({c}, {t})")


def fanout_block_spec(num_qubits: int, num_blocks: int) -> MpqcSpec:
    return MpqcSpec(
        num_qubits=num_qubits,
        num_blocks=num_blocks,
        template=FANOUT_BLOCK_TEMPLATE,
        entangler=fanout_entangler(num_qubits),
    )


def build_mpqc(spec: MpqcSpec) -> CircuitIR:
    """L identical blocks; slots run block-major, then qubit, then template."""
    ops = []
    slot = 0
    for _block in range(spec.num_blocks):
        for q in range(spec.num_qubits):
            for kind in spec.template:
                ops.append(Op(kind, (q,), slot=slot))
                slot += 1
        for c, t in spec.entangler:
            ops.append(Op(CNOT, (c, t)))
    return CircuitIR(spec.num_qubits, tuple(ops), param_count=slot)


@dataclass(frozen=True)
class TpqcSpec:
    """Tensor-network layout spec.

    ``tree``: level i has N / 2^i two-qubit local blocks, pairing the
    surviving representative qubits.  ``mps``: local blocks slide along
    the chain, (0,1), (1,2), ..., repeated for ``levels`` sweeps.
    """

    num_qubits: int
    layout: str = "tree"
    levels: int | None = None
    rounds: int = 2
    template: tuple[str, ...] = (RY,)

    def __post_init__(self):
        if self.layout not in ("tree", "mps"):
            raise CircuitError(f"layout must be 'tree' or 'mps', got {self.layout!r}")
        if self.num_qubits < 2:
            raise CircuitError("TPQC needs at least two qubits")
        if self.layout == "tree" and self.num_qubits & (self.num_qubits - 1):
            raise CircuitError(
                f"tree layout needs a power-of-two qubit count, got {self.num_qubits}"
            )
        if self.rounds < 1:
            raise CircuitError("each local block needs at least one round")
        for kind in self.template:
            if kind not in ROTATION_KINDS:
                raise CircuitError(f"template entries must be rotations, got {kind!r}")


def tpqc_level_pairs(spec: TpqcSpec) -> list[list[tuple[int, int]]]:
    """The (upper, lower) qubit pairs of the local blocks at each level."""
    if spec.layout == "mps":
        levels = spec.levels if spec.levels is not None else 1
        return [
            [(q, q + 1) for q in range(spec.num_qubits - 1)] for _ in range(levels)
        ]
    depth = int(math.log2(spec.num_qubits))
    levels = spec.levels if spec.levels is not None else depth
    out = []
    for i in range(1, levels + 1):
        stride = 2**i
        # Representatives are the highest-index qubits of each merged group.
        reps = [q for q in range(spec.num_qubits) if q % (stride // 2) == stride // 2 - 1]
        out.append([(reps[2 * j], reps[2 * j + 1]) for j in range(len(reps) // 2)])
    return out


def build_tpqc(spec: TpqcSpec) -> CircuitIR:
    """Local blocks only: every CNOT stays inside its (upper, lower) pair."""
    ops = []
    slot = 0
    for level in tpqc_level_pairs(spec):
        for a, b in level:
            for _round in range(spec.rounds):
                for q in (a, b):
                    for kind in spec.template:
                        ops.append(Op(kind, (q,), slot=slot))
                        slot += 1
                ops.append(Op(CNOT, (a, b)))
    return CircuitIR(spec.num_qubits, tuple(ops), param_count=slot)


@dataclass(frozen=True)
class BqcSpec:
    """Bayesian circuit spec.

    The prior over the ancilla register is either injected directly
    (``prior_amplitudes``) or produced by ``prior_blocks`` trainable
    rotation blocks.  Conditionals are either ``num_blocks`` blocks of
    flag-controlled rotations plus a Toffoli ring per active value, or --
    when ``conditional_amplitudes`` is given -- a controlled state
    preparation per active value.
    """

    data_qubits: int
    ancilla_qubits: int
    num_blocks: int = 2
    active_values: tuple[int, ...] = ()
    template: tuple[str, ...] = (CRY,)
    prior_amplitudes: tuple[complex, ...] | None = None
    prior_blocks: int = 0
    prior_template: tuple[str, ...] = (RY,)
    conditional_amplitudes: tuple[tuple[complex, ...], ...] | None = None

    def __post_init__(self):
        n, m = self.data_qubits, self.ancilla_qubits
        if n < 1 or m < 0:
            raise CircuitError("need >= 1 data qubit and >= 0 ancilla qubits")
        values = tuple(int(v) for v in self.active_values)
        if not values:
            raise CircuitError("need at least one active ancilla value")
        if len(set(values)) != len(values):
            raise CircuitError("active ancilla values must be distinct")
        if len(values) > 2**m:
            raise CircuitError(
                f"{len(values)} active values exceed the {2**m} ancilla basis states"
            )
        for v in values:
            if not 0 <= v < 2**m:
                raise CircuitError(f"ancilla value {v} out of range")
        object.__setattr__(self, "active_values", values)
        if (self.prior_amplitudes is None) == (self.prior_blocks == 0) and m > 0:
            raise CircuitError("give either prior_amplitudes or prior_blocks > 0")
        if self.prior_amplitudes is not None and len(self.prior_amplitudes) != 2**m:
            raise CircuitError("prior amplitude length must be 2^M")
        if self.conditional_amplitudes is not None:
            if len(self.conditional_amplitudes) != len(values):
                raise CircuitError("one conditional amplitude vector per active value")
            for vec in self.conditional_amplitudes:
                if len(vec) != 2**n:
                    raise CircuitError("conditional amplitude length must be 2^N")
        else:
            for kind in self.template:
                if kind not in CONTROLLED_ROTATION_KINDS:
                    raise CircuitError(
                        f"conditional template entries must be controlled rotations, got {kind!r}"
                    )
            if self.num_blocks < 1:
                raise CircuitError("need at least one conditional block")

    @property
    def flag_qubit(self) -> int:
        return self.data_qubits + self.ancilla_qubits

    @property
    def work_qubit(self) -> int | None:
        if self.ancilla_qubits >= 3:
            return self.flag_qubit + 1
        return None

    @property
    def num_qubits(self) -> int:
        return self.flag_qubit + 1 + (1 if self.work_qubit is not None else 0)


def uniform_prior_amplitudes(num_ancilla: int, active_values) -> tuple[complex, ...]:
    amps = np.zeros(2**num_ancilla, dtype=np.complex128)
    amps[list(active_values)] = 1.0 / math.sqrt(len(active_values))
    return tuple(amps)


def _flag_activation(spec: BqcSpec) -> list[Op]:
    """Map |1...1> on the ancilla to flag=1.

    M <= 2 uses a direct (Toffoli) ladder; larger M borrows the work qubit,
    and M = 4 additionally borrows ancilla 0 as a dirty intermediate (its
    state is restored by the second write).
    """
    anc = tuple(range(spec.data_qubits, spec.data_qubits + spec.ancilla_qubits))
    flag = spec.flag_qubit
    m = len(anc)
    if m == 0:
        return [Op(X, (flag,))]
    if m == 1:
        return [Op(CNOT, (anc[0], flag))]
    if m == 2:
        return [Op(TOFFOLI, (anc[0], anc[1], flag))]
    work = spec.work_qubit
    if m == 3:
        return [
            Op(TOFFOLI, (anc[0], anc[1], work)),
            Op(TOFFOLI, (anc[2], work, flag)),
        ]
    if m == 4:
        return [
            Op(TOFFOLI, (anc[0], anc[1], work)),
            Op(TOFFOLI, (work, anc[2], anc[0])),
            Op(TOFFOLI, (anc[3], anc[0], flag)),
            Op(TOFFOLI, (work, anc[2], anc[0])),
            Op(TOFFOLI, (anc[3], anc[0], flag)),
        ]
    raise CircuitError(f"flag activation not implemented for M={m} ancillas")


def build_bqc(spec: BqcSpec) -> CircuitIR:
    """Assemble the full ancilla-conditioned circuit.

    Slot order: prior-block slots first, then conditional slots grouped by
    active value, block, data qubit and template position.  The flag (and
    work) qubit is returned to |0> after every conditional section.
    """
    n, m = spec.data_qubits, spec.ancilla_qubits
    anc = tuple(range(n, n + m))
    flag = spec.flag_qubit
    ops: list[Op] = []
    slot = 0

    if m > 0:
        if spec.prior_amplitudes is not None:
            ops.append(Op(PREPARE, anc, amplitudes=tuple(spec.prior_amplitudes)))
        else:
            for _block in range(spec.prior_blocks):
                for q in anc:
                    for kind in spec.prior_template:
                        ops.append(Op(kind, (q,), slot=slot))
                        slot += 1
                if m >= 2:
                    for c, t in ring_entangler(m):
                        ops.append(Op(CNOT, (anc[c], anc[t])))

    for index, value in enumerate(spec.active_values):
        bits = [(value >> (m - 1 - i)) & 1 for i in range(m)]
        flips = [Op(X, (anc[i],)) for i in range(m) if bits[i] == 0]
        activation = _flag_activation(spec)
        ops.extend(flips)
        ops.extend(activation)
        if spec.conditional_amplitudes is not None:
            ops.append(
                Op(
                    CPREPARE,
                    (flag, *range(n)),
                    amplitudes=tuple(spec.conditional_amplitudes[index]),
                )
            )
        else:
            for _block in range(spec.num_blocks):
                for q in range(n):
                    for kind in spec.template:
                        ops.append(Op(kind, (flag, q), slot=slot))
                        slot += 1
                if n >= 2:
                    for c, t in ring_entangler(n):
                        ops.append(Op(TOFFOLI, (c, flag, t)))
        ops.extend(reversed(activation))
        ops.extend(flips)

    return CircuitIR(spec.num_qubits, tuple(ops), param_count=slot)


def joint_distribution(
    circuit: CircuitIR, params, data_qubits, ancilla_qubits
) -> np.ndarray:
    """Exact q(x, lambda) over data bitstrings x ancilla bitstrings.

    Rows marginalize to the data distribution, columns to the prior; any
    remaining qubits (flag, work) are traced out.
    """
    data_qubits = tuple(data_qubits)
    ancilla_qubits = tuple(ancilla_qubits)
    overlap = set(data_qubits) & set(ancilla_qubits)
    if overlap:
        raise CircuitError(f"data and ancilla registers overlap: {sorted(overlap)}")
    state = simulate(circuit, params)
    probs = probabilities(state).reshape((2,) * circuit.num_qubits)
    rest = [
        q
        for q in range(circuit.num_qubits)
        if q not in data_qubits and q not in ancilla_qubits
    ]
    ordered = np.transpose(probs, data_qubits + ancilla_qubits + tuple(rest))
    ordered = ordered.reshape(2 ** len(data_qubits), 2 ** len(ancilla_qubits), -1)
    return ordered.sum(axis=2)


def build_toy_thm3(num_qubits: int) -> CircuitIR:
    """Point distribution on |1 0...0 1>: one X and one long-range CNOT."""
    if num_qubits < 2:
        raise CircuitError(f"need at least 2 qubits, got {num_qubits}")
    ops = (Op(X, (0,)), Op(CNOT, (0, num_qubits - 1)))
    return CircuitIR(num_qubits, ops, param_count=0)
