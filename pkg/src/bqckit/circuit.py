"""Serializable circuit representation with trainable-parameter slots.

A circuit is an ordered list of ops over a fixed qubit count.  Rotation ops
either carry a fixed angle or reference a parameter slot; slots may be
shared between ops (tied parameters).  Two pseudo-ops extend the named-gate
set for models that inject amplitudes directly:

* ``PREPARE``: applies a unitary completion that maps |0...0> of the target
  register to a given amplitude vector.
* ``CPREPARE``: same, controlled on the first listed qubit.

Circuit JSON: ``{"num_qubits": Q, "param_count": P, "ops": [{"kind": ...,
"targets": [...], "angle"?: ..., "slot"?: ..., "amplitudes"?: [[re, im],
...]}]}`` with angles written to 17 significant digits (bit-exact
round-trip).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _json
from .gates import (
    ALL_KINDS,
    GATE_ARITY,
    NamedGate,
    PARAMETERIZED_KINDS,
    gate_matrix,
    toffoli_network,
)
from .statevector import StateVector, apply_unitary_raw, new_zero_state

PREPARE = "PREPARE"
CPREPARE = "CPREPARE"


class CircuitError(ValueError):
    """Raised for malformed circuits or mismatched parameters."""


@dataclass(frozen=True)
class Op:
    kind: str
    targets: tuple[int, ...]
    angle: float | None = None
    slot: int | None = None
    amplitudes: tuple[complex, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind in (PREPARE, CPREPARE):
            if self.amplitudes is None:
                raise CircuitError(f"{self.kind} needs an amplitude vector")
            register = len(self.targets) - (1 if self.kind == CPREPARE else 0)
            if register < 1 or len(self.amplitudes) != 2**register:
                raise CircuitError(
                    f"{self.kind} amplitude length {len(self.amplitudes)} does not "
                    f"match register of {register} qubits"
                )
            norm = float(np.linalg.norm(np.asarray(self.amplitudes)))
            if abs(norm - 1.0) > 1e-10:
                raise CircuitError(f"{self.kind} amplitudes have norm {norm}, want 1")
            object.__setattr__(
                self, "amplitudes", tuple(complex(a) for a in self.amplitudes)
            )
            return
        if self.kind not in ALL_KINDS:
            raise CircuitError(f"unknown op kind {self.kind!r}")
        if len(self.targets) != GATE_ARITY[self.kind]:
            raise CircuitError(
                f"{self.kind} expects {GATE_ARITY[self.kind]} targets, "
                f"got {self.targets}"
            )
        if self.kind in PARAMETERIZED_KINDS:
            if (self.angle is None) == (self.slot is None):
                raise CircuitError(
                    f"{self.kind} needs exactly one of angle or slot"
                )
        else:
            if self.angle is not None or self.slot is not None:
                raise CircuitError(f"{self.kind} takes neither angle nor slot")


@dataclass(frozen=True)
class CircuitIR:
    num_qubits: int
    ops: tuple[Op, ...]
    param_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise CircuitError(f"need at least one qubit, got {self.num_qubits}")
        seen = set()
        for op in self.ops:
            if len(set(op.targets)) != len(op.targets):
                raise CircuitError(f"duplicate targets in {op}")
            for t in op.targets:
                if not 0 <= t < self.num_qubits:
                    raise CircuitError(
                        f"target {t} out of range for {self.num_qubits} qubits"
                    )
            if op.slot is not None:
                if not 0 <= op.slot < self.param_count:
                    raise CircuitError(
                        f"slot {op.slot} out of range [0, {self.param_count})"
                    )
                seen.add(op.slot)
        if seen != set(range(self.param_count)):
            missing = sorted(set(range(self.param_count)) - seen)
            raise CircuitError(f"parameter slots never used: {missing}")

    def bound_angle(self, op: Op, params: np.ndarray | None) -> float:
        if op.slot is None:
            return op.angle
        return float(params[op.slot])


def _check_params(circuit: CircuitIR, params) -> np.ndarray | None:
    if circuit.param_count == 0:
        if params is not None and len(params) != 0:
            raise CircuitError("circuit takes no parameters")
        return None
    if params is None:
        raise CircuitError(f"circuit needs {circuit.param_count} parameters")
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.param_count,):
        raise CircuitError(
            f"expected {circuit.param_count} parameters, got shape {params.shape}"
        )
    return params


_PREP_CACHE: dict[tuple[complex, ...], np.ndarray] = {}


def preparation_unitary(amplitudes: tuple[complex, ...]) -> np.ndarray:
    """A unitary whose first column is ``amplitudes``.

    Built once per distinct vector by QR completion; the action on inputs
    other than |0...0> is deterministic but otherwise unspecified.
    """
    key = tuple(amplitudes)
    cached = _PREP_CACHE.get(key)
    if cached is not None:
        return cached
    dim = len(amplitudes)
    v = np.asarray(amplitudes, dtype=np.complex128)
    basis = np.eye(dim, dtype=np.complex128)
    q, _r = np.linalg.qr(np.column_stack([v, basis[:, : dim - 1]]))
    # QR keeps column 0 colinear with v (|R00| = ||v|| = 1), so overwriting
    # it with v exactly and re-orthonormalizing the rest stays unitary.
    q[:, 0] = v
    for j in range(1, dim):
        col = q[:, j]
        for i in range(j):
            col = col - q[:, i] * np.vdot(q[:, i], col)
        q[:, j] = col / np.linalg.norm(col)
    _PREP_CACHE[key] = q
    return q


def op_matrix(op: Op, params: np.ndarray | None = None) -> np.ndarray:
    if op.kind == PREPARE:
        return preparation_unitary(op.amplitudes)
    if op.kind == CPREPARE:
        u = preparation_unitary(op.amplitudes)
        out = np.eye(2 * u.shape[0], dtype=np.complex128)
        out[u.shape[0]:, u.shape[0]:] = u
        return out
    if op.kind in PARAMETERIZED_KINDS:
        angle = op.angle if op.slot is None else float(params[op.slot])
        return gate_matrix(NamedGate(op.kind, angle))
    return gate_matrix(NamedGate(op.kind))


def simulate(
    circuit: CircuitIR,
    params=None,
    initial: StateVector | None = None,
) -> StateVector:
    """Run the circuit on |0...0> (or ``initial``) and return the final state."""
    params = _check_params(circuit, params)
    if initial is None:
        state = new_zero_state(circuit.num_qubits)
    else:
        if initial.num_qubits != circuit.num_qubits:
            raise CircuitError("initial state size does not match circuit")
        state = initial.copy()
    amps = state.amplitudes
    for op in circuit.ops:
        amps = apply_unitary_raw(
            amps, op_matrix(op, params), op.targets, circuit.num_qubits
        )
    return StateVector(circuit.num_qubits, amps)


def toffoli_circuit() -> CircuitIR:
    """Toffoli on 3 qubits from the verified 6-CNOT network."""
    ops = tuple(
        Op(g.kind, targets, angle=g.angle) for g, targets in toffoli_network()
    )
    return CircuitIR(num_qubits=3, ops=ops, param_count=0)


# ----------------------------- serialization ------------------------------


def to_json_dict(circuit: CircuitIR) -> dict:
    ops = []
    for op in circuit.ops:
        entry: dict = {"kind": op.kind, "targets": list(op.targets)}
        if op.angle is not None:
            entry["angle"] = float(op.angle)
        if op.slot is not None:
            entry["slot"] = op.slot
        if op.amplitudes is not None:
            entry["amplitudes"] = [[a.real, a.imag] for a in op.amplitudes]
        ops.append(entry)
    return {
        "num_qubits": circuit.num_qubits,
        "param_count": circuit.param_count,
        "ops": ops,
    }


def to_json(circuit: CircuitIR, indent: int | None = None) -> str:
    return _json.dumps(to_json_dict(circuit), indent=indent)


def from_json_dict(data: dict) -> CircuitIR:
    ops = []
    for entry in data["ops"]:
        amplitudes = None
        if "amplitudes" in entry:
            amplitudes = tuple(complex(re, im) for re, im in entry["amplitudes"])
        ops.append(
            Op(
                kind=entry["kind"],
                targets=tuple(entry["targets"]),
                angle=entry.get("angle"),
                slot=entry.get("slot"),
                amplitudes=amplitudes,
            )
        )
    return CircuitIR(
        num_qubits=int(data["num_qubits"]),
        ops=tuple(ops),
        param_count=int(data.get("param_count", 0)),
    )


def from_json(text: str) -> CircuitIR:
    return from_json_dict(_json.loads(text))
