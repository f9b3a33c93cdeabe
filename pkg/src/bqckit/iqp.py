"""Compile diagonal-layer (H . U_Z . H) circuits into fixed block schedules.

The target architecture is the 7-rotation-per-qubit block of
``builders.FANOUT_BLOCK_TEMPLATE`` followed by CNOTs fanning out from qubit 0.
Every source gate becomes a constant-size fragment:

    H layer                 2 blocks
    T layer                 2 blocks
    CNOT from qubit 0       4 blocks
    SWAP with qubit 0      14 blocks
    CZ from qubit 0         6 blocks
    CZ between j, k != 0   34 blocks (route via SWAPs with qubit 0)

Fragment angle tables were fixed by a build-time search over the template
slots, validated against dense unitaries to 1e-12, and are frozen below
with regression tests.  Two non-obvious entries: the single-qubit stages of
the embedded CNOT carry half-angle Z rotations (pi/2, not pi), and the
control qubit picks up an R_phi(pi/2) in the first block -- without it the
composition realizes diag(I, -iX), which is a controlled phase away from a
true CNOT and not a global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _json
from .builders import FANOUT_BLOCK_TEMPLATE, fanout_entangler
from .circuit import CircuitIR, Op, simulate
from .gates import CNOT, CZ, H, T
from .statevector import fidelity_up_to_phase, probabilities

# Template column indices (time order RX, RZ, RX, RPHI, RZ, RY, RZ).
_COL_H = (0, 1, 2)   # RX, RZ, RX carrying (pi/2, pi/2, pi/2) realizes i*H
_COL_PHASE = 3       # R_phi slot
_COL_Z1 = 4          # first post-phase RZ
_COL_Y = 5           # RY
_COL_Z2 = 6          # trailing RZ


class IqpError(ValueError):
    """Raised for malformed diagonal-layer circuits."""


@dataclass(frozen=True)
class IqpLayer:
    t: tuple[int, ...] = ()
    cz: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class IqpCircuit:
    """H^N . (commuting T/CZ layers) . H^N over ``num_qubits`` qubits."""

    num_qubits: int
    layers: tuple[IqpLayer, ...] = ()

    def __post_init__(self):
        n = self.num_qubits
        if n < 1:
            raise IqpError(f"need at least one qubit, got {n}")
        for layer in self.layers:
            if len(layer.t) + len(layer.cz) > n:
                raise IqpError(
                    f"layer holds {len(layer.t)} T and {len(layer.cz)} CZ gates, "
                    f"more than {n} qubits"
                )
            if len(set(layer.t)) != len(layer.t):
                raise IqpError(f"duplicate T targets in layer {layer}")
            for q in layer.t:
                if not 0 <= q < n:
                    raise IqpError(f"T target {q} out of range")
            for a, b in layer.cz:
                if a == b or not (0 <= a < n and 0 <= b < n):
                    raise IqpError(f"bad CZ pair ({a}, {b})")


def _zeros(n: int) -> np.ndarray:
    return np.zeros((n, 7))


def compile_h_layer(num_qubits: int) -> list[np.ndarray]:
    """Two blocks realizing H on every qubit (the fan-out layers cancel)."""
    first = _zeros(num_qubits)
    first[:, list(_COL_H)] = math.pi / 2
    return [first, _zeros(num_qubits)]


def compile_t_layer(num_qubits: int, targets) -> list[np.ndarray]:
    """Two blocks realizing T on each target qubit."""
    targets = tuple(targets)
    if not targets:
        raise IqpError("T layer needs at least one target")
    first = _zeros(num_qubits)
    for q in targets:
        first[q, _COL_PHASE] = math.pi / 4
    return [first, _zeros(num_qubits)]


def _cnot_stage_blocks(num_qubits: int, k: int, fold_h: tuple[int, ...] = ()) -> list[np.ndarray]:
    """Four blocks realizing CNOT(0 -> k), optionally entering through H's.

    ``fold_h`` lists qubits whose opening Hadamard is folded into the first
    block's leading RX/RZ/RX slots (used by the reversed-CNOT and CZ
    fragments).
    """
    b1, b2, b3, b4 = (_zeros(num_qubits) for _ in range(4))
    for q in fold_h:
        b1[q, list(_COL_H)] = math.pi / 2
    b1[0, _COL_PHASE] = math.pi / 2
    b1[k, _COL_Z1] = math.pi / 2
    b2[k, _COL_Z1] = -math.pi / 2
    b2[k, _COL_Y] = -math.pi / 2
    b3[k, _COL_Y] = math.pi / 2
    return [b1, b2, b3, b4]


def compile_cnot_from_first(num_qubits: int, k: int) -> list[np.ndarray]:
    """Four blocks realizing CNOT with control 0 and target ``k``."""
    if k == 0:
        raise IqpError("target must differ from the control qubit 0")
    if not 0 < k < num_qubits:
        raise IqpError(f"target {k} out of range")
    return _cnot_stage_blocks(num_qubits, k)


def _closing_h_blocks(num_qubits: int, qubits) -> list[np.ndarray]:
    first = _zeros(num_qubits)
    for q in qubits:
        first[q, list(_COL_H)] = math.pi / 2
    return [first, _zeros(num_qubits)]


def compile_reversed_cnot_to_first(num_qubits: int, j: int) -> list[np.ndarray]:
    """Six blocks realizing CNOT with control ``j`` and target 0.

    (H x H) CNOT(0 -> j) (H x H): the opening Hadamards fold into the
    four CNOT blocks, the closing pair takes two more.
    """
    if j == 0:
        raise IqpError("control must differ from qubit 0")
    if not 0 < j < num_qubits:
        raise IqpError(f"control {j} out of range")
    blocks = _cnot_stage_blocks(num_qubits, j, fold_h=(0, j))
    blocks += _closing_h_blocks(num_qubits, (0, j))
    return blocks


def compile_swap_with_first(num_qubits: int, j: int) -> list[np.ndarray]:
    """Fourteen blocks realizing SWAP(0, j): CNOT, reversed CNOT, CNOT."""
    if j == 0:
        raise IqpError("swap partner must differ from qubit 0")
    return (
        compile_cnot_from_first(num_qubits, j)
        + compile_reversed_cnot_to_first(num_qubits, j)
        + compile_cnot_from_first(num_qubits, j)
    )


def _cz_from_first(num_qubits: int, t: int) -> list[np.ndarray]:
    # CZ(0, t) = (I x H_t) CNOT(0 -> t) (I x H_t), H's folded as in SWAP.
    blocks = _cnot_stage_blocks(num_qubits, t, fold_h=(t,))
    blocks += _closing_h_blocks(num_qubits, (t,))
    return blocks


def compile_cz(num_qubits: int, j: int, k: int) -> list[np.ndarray]:
    """Six blocks when qubit 0 is involved, else 34 via SWAP routing."""
    if j == k:
        raise IqpError("CZ needs two distinct qubits")
    for q in (j, k):
        if not 0 <= q < num_qubits:
            raise IqpError(f"CZ qubit {q} out of range")
    if j == 0:
        return _cz_from_first(num_qubits, k)
    if k == 0:
        return _cz_from_first(num_qubits, j)  # CZ is symmetric
    return (
        compile_swap_with_first(num_qubits, j)
        + _cz_from_first(num_qubits, k)
        + compile_swap_with_first(num_qubits, j)
    )


def compile_iqp(circuit: IqpCircuit) -> list[np.ndarray]:
    """Full schedule: H fragment, per-layer T/CZ fragments, H fragment."""
    n = circuit.num_qubits
    schedule = compile_h_layer(n)
    for layer in circuit.layers:
        if layer.t:
            schedule += compile_t_layer(n, layer.t)
        for a, b in layer.cz:
            schedule += compile_cz(n, a, b)
    schedule += compile_h_layer(n)
    return schedule


def block_budget(circuit: IqpCircuit) -> int:
    """Closed-form block count of ``compile_iqp`` for this circuit."""
    total = 4
    for layer in circuit.layers:
        if layer.t:
            total += 2
        for a, b in layer.cz:
            total += 6 if 0 in (a, b) else 34
    return total


def schedule_to_circuit(num_qubits: int, schedule) -> CircuitIR:
    """Realize a block schedule as a fixed-angle layered circuit."""
    ops = []
    for block in schedule:
        block = np.asarray(block, dtype=float)
        if block.shape != (num_qubits, 7):
            raise IqpError(f"block shape {block.shape} != ({num_qubits}, 7)")
        for q in range(num_qubits):
            for col, kind in enumerate(FANOUT_BLOCK_TEMPLATE):
                ops.append(Op(kind, (q,), angle=float(block[q, col])))
        for c, t in fanout_entangler(num_qubits):
            ops.append(Op(CNOT, (c, t)))
    return CircuitIR(num_qubits, tuple(ops), param_count=0)


def iqp_to_circuit(circuit: IqpCircuit) -> CircuitIR:
    """Direct gate-level realization used as the verification reference."""
    n = circuit.num_qubits
    ops = [Op(H, (q,)) for q in range(n)]
    for layer in circuit.layers:
        ops.extend(Op(T, (q,)) for q in layer.t)
        ops.extend(Op(CZ, (a, b)) for a, b in layer.cz)
    ops.extend(Op(H, (q,)) for q in range(n))
    return CircuitIR(n, tuple(ops), param_count=0)


def verify_schedule(circuit: IqpCircuit, schedule) -> tuple[float, float]:
    """(state fidelity up to phase, max outcome-probability deviation)."""
    reference = simulate(iqp_to_circuit(circuit))
    compiled = simulate(schedule_to_circuit(circuit.num_qubits, schedule))
    fid = fidelity_up_to_phase(reference, compiled)
    dev = float(np.max(np.abs(probabilities(reference) - probabilities(compiled))))
    return fid, dev


# ----------------------------- serialization ------------------------------


def iqp_to_json_dict(circuit: IqpCircuit) -> dict:
    return {
        "num_qubits": circuit.num_qubits,
        "layers": [
            {"t": list(layer.t), "cz": [list(p) for p in layer.cz]}
            for layer in circuit.layers
        ],
    }


def iqp_from_json_dict(data: dict) -> IqpCircuit:
    try:
        layers = tuple(
            IqpLayer(
                t=tuple(int(q) for q in entry.get("t", ())),
                cz=tuple((int(a), int(b)) for a, b in entry.get("cz", ())),
            )
            for entry in data["layers"]
        )
        return IqpCircuit(num_qubits=int(data["num_qubits"]), layers=layers)
    except (KeyError, TypeError) as exc:
        raise IqpError(f"malformed diagonal-circuit JSON: {exc}") from exc


def schedule_to_json_dict(num_qubits: int, schedule) -> dict:
    return {
        "num_qubits": num_qubits,
        "template": list(FANOUT_BLOCK_TEMPLATE),
        "entangler": "fanout-from-qubit-0",
        "blocks": [
            [float(v) for v in np.asarray(block, dtype=float).reshape(-1)]
            for block in schedule
        ],
    }


def schedule_from_json_dict(data: dict) -> tuple[int, list[np.ndarray]]:
    n = int(data["num_qubits"])
    blocks = [np.asarray(row, dtype=float).reshape(n, 7) for row in data["blocks"]]
    return n, blocks


def schedule_to_json(num_qubits: int, schedule, indent: int | None = 2) -> str:
    return _json.dumps(schedule_to_json_dict(num_qubits, schedule), indent=indent)
