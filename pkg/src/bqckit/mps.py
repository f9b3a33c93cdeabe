"""Matrix-product-state execution with bond and entanglement accounting.

States are kept in canonical Gamma/Lambda form: site tensors of shape
(left bond, 2, right bond) with the singular values of every cut stored
alongside.  Entanglement entropy at a cut is then read directly from the
stored Schmidt values.

Two-qubit gates are applied as a pair of local rank-3 operator tensors
contracted across a two-valued operator bond.  For CNOT that pair is

    w1[.,.,0] = [[1,0],[0,0]]   w1[.,.,1] = [[1,0],[0,1]]   (control side)
    w2[.,.,0] = [[1,-1],[-1,1]] w2[.,.,1] = [[0,1],[1,0]]   (target side)

whose recombination sum_b w1[s',s,b] w2[t',t,b] reproduces the CNOT
4-index tensor exactly (integer arithmetic).  After the pair is absorbed
the two sites are re-split by SVD, truncating to ``max_bond`` and
renormalizing; the discarded weight is recorded per step.

Only CNOT gates (and the other two-qubit gates routed through this path)
can raise bond dimensions, so a cut crossed by k two-qubit gates holds at
most 2^k singular values.  Long-range pairs are routed with explicit SWAP
insertions, each applied as an ordinary two-site gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circuit import CircuitIR, _check_params, op_matrix
from .gates import (
    CNOT,
    GATE_ARITY,
    NamedGate,
    SWAP_MATRIX,
    TOFFOLI,
    gate_matrix,
    toffoli_network,
)
from .statevector import StateVector

_SVD_CUTOFF = 1e-14
_PINV_CUTOFF = 1e-12


class MpsError(ValueError):
    """Raised for unsupported gates or malformed states."""


class BondOverflowError(MpsError):
    """Raised when a bond would exceed the configured hard cap."""

    def __init__(self, step: int, label: str, bond: int, cap: int):
        super().__init__(
            f"step {step} ({label}) needs bond dimension {bond} > hard cap {cap}"
        )
        self.step = step


@dataclass
class MpsState:
    num_qubits: int
    gammas: list[np.ndarray]
    lambdas: list[np.ndarray]
    max_bond: int | float = math.inf

    def bond_dims(self) -> list[int]:
        return [len(s) for s in self.lambdas]

    def copy(self) -> "MpsState":
        return MpsState(
            self.num_qubits,
            [g.copy() for g in self.gammas],
            [s.copy() for s in self.lambdas],
            self.max_bond,
        )


@dataclass(frozen=True)
class CnotTensorPair:
    """The two local rank-3 tensors whose bond contraction is CNOT."""

    w1: np.ndarray  # [sigma', sigma, b]
    w2: np.ndarray  # [tau', tau, b]

    def recombined(self) -> np.ndarray:
        return np.einsum("sab,tcb->stac", self.w1, self.w2)


def cnot_tensor_pair() -> CnotTensorPair:
    w1 = np.zeros((2, 2, 2))
    w1[:, :, 0] = [[1, 0], [0, 0]]
    w1[:, :, 1] = [[1, 0], [0, 1]]
    w2 = np.zeros((2, 2, 2))
    w2[:, :, 0] = [[1, -1], [-1, 1]]
    w2[:, :, 1] = [[0, 1], [1, 0]]
    return CnotTensorPair(w1=w1, w2=w2)


def mps_from_zero(num_qubits: int, max_bond: int | float = math.inf) -> MpsState:
    """|0...0> as a product state: every bond has dimension 1."""
    if num_qubits < 1:
        raise MpsError(f"need at least one qubit, got {num_qubits}")
    gamma = np.zeros((1, 2, 1), dtype=np.complex128)
    gamma[0, 0, 0] = 1.0
    return MpsState(
        num_qubits,
        [gamma.copy() for _ in range(num_qubits)],
        [np.ones(1) for _ in range(num_qubits - 1)],
        max_bond,
    )


def _two_site_tensor(matrix: np.ndarray) -> np.ndarray:
    """4x4 gate matrix -> [s', t', s, t] tensor (first qubit = left site)."""
    return np.asarray(matrix, dtype=np.complex128).reshape(2, 2, 2, 2)


_CNOT_TENSOR = cnot_tensor_pair().recombined().astype(np.complex128)


def _gate_tensor_for(kind_or_matrix, flipped: bool) -> np.ndarray:
    if isinstance(kind_or_matrix, np.ndarray):
        tensor = _two_site_tensor(kind_or_matrix)
    elif kind_or_matrix == CNOT:
        tensor = _CNOT_TENSOR
    else:
        raise MpsError(f"unsupported two-site gate {kind_or_matrix!r}")
    if flipped:
        tensor = tensor.transpose(1, 0, 3, 2)
    return tensor


def apply_single_site(state: MpsState, matrix: np.ndarray, site: int) -> None:
    """Contract a 2x2 gate into one site tensor; bonds are untouched."""
    state.gammas[site] = np.einsum(
        "ps,lsr->lpr", np.asarray(matrix, dtype=np.complex128), state.gammas[site]
    )


def apply_two_site(
    state: MpsState, tensor: np.ndarray, left_site: int
) -> tuple[int, float]:
    """Apply a [s',t',s,t] tensor at (left_site, left_site+1).

    Returns (new bond dimension, discarded weight).  The pair of sites is
    contracted with its surrounding singular values, the operator tensor is
    absorbed, and the bond is re-split by SVD with truncation to
    ``state.max_bond``.
    """
    i = left_site
    lam_l = state.lambdas[i - 1] if i > 0 else np.ones(1)
    lam_m = state.lambdas[i]
    lam_r = state.lambdas[i + 1] if i + 1 < state.num_qubits - 1 else np.ones(1)

    theta = np.einsum(
        "a,asb,b,btc,c->astc",
        lam_l,
        state.gammas[i],
        lam_m,
        state.gammas[i + 1],
        lam_r,
    )
    theta = np.einsum("pqst,astc->apqc", tensor, theta)
    dl, dr = len(lam_l), len(lam_r)
    u, s, vh = np.linalg.svd(
        theta.reshape(dl * 2, 2 * dr), full_matrices=False
    )
    keep = int(np.sum(s > _SVD_CUTOFF))
    keep = max(1, min(keep, int(state.max_bond) if state.max_bond != math.inf else keep))
    kept_norm = float(np.linalg.norm(s[:keep]))
    discarded = max(0.0, 1.0 - kept_norm**2)
    s = s[:keep] / kept_norm
    u = u[:, :keep].reshape(dl, 2, keep)
    vh = vh[:keep, :].reshape(keep, 2, dr)

    inv_l = np.where(lam_l > _PINV_CUTOFF, 1.0 / lam_l, 0.0)
    inv_r = np.where(lam_r > _PINV_CUTOFF, 1.0 / lam_r, 0.0)
    state.gammas[i] = np.einsum("a,asb->asb", inv_l, u)
    state.gammas[i + 1] = np.einsum("bsc,c->bsc", vh, inv_r)
    state.lambdas[i] = s
    return keep, discarded


def apply_gate_mps(state: MpsState, gate: NamedGate, targets) -> tuple[int | None, float]:
    """Apply a named gate in place; two-qubit targets must be adjacent.

    Returns (bond dimension at the touched cut or None, discarded weight).
    Long-range pairs are the caller's job (see ``run_circuit_mps``).
    """
    targets = tuple(targets)
    if gate.arity == 1:
        apply_single_site(state, gate_matrix(gate), targets[0])
        return None, 0.0
    if gate.arity != 2:
        raise MpsError(f"{gate.kind} must be decomposed before MPS application")
    a, b = targets
    if abs(a - b) != 1:
        raise MpsError(
            f"two-qubit gate on non-adjacent sites ({a}, {b}); route with SWAPs"
        )
    flipped = a > b
    if gate.kind == CNOT:
        tensor = _gate_tensor_for(CNOT, flipped)
    else:
        tensor = _gate_tensor_for(gate_matrix(gate), flipped)
    bond, discarded = apply_two_site(state, tensor, min(a, b))
    return min(a, b), discarded


def entanglement_entropy(state: MpsState, cut: int) -> float:
    """Von Neumann entropy (nats) of the bipartition at ``cut``.

    Cut c separates sites 0..c from c+1..N-1; the entropy is
    -sum s^2 ln s^2 over that cut's singular values, dropping weights
    below 1e-12.
    """
    if not 0 <= cut < state.num_qubits - 1:
        raise MpsError(f"cut {cut} out of range for {state.num_qubits} sites")
    s = state.lambdas[cut]
    total = float(np.sum(s**2))
    if abs(total - 1.0) > 1e-8:
        raise MpsError(f"state is not normalized at cut {cut} (sum s^2 = {total})")
    p = s[s**2 > 1e-12] ** 2
    return float(-np.sum(p * np.log(p)))


def contract_to_statevector(state: MpsState) -> StateVector:
    """Dense amplitudes (feasible for small N); used for cross-validation."""
    acc = state.gammas[0]
    for cut in range(state.num_qubits - 1):
        acc = np.einsum("...a,a->...a", acc, state.lambdas[cut])
        acc = np.tensordot(acc, state.gammas[cut + 1], axes=([acc.ndim - 1], [0]))
    amps = acc.reshape(-1)
    return StateVector(state.num_qubits, amps)


@dataclass
class TraceRow:
    step: int
    gate: str
    cut: int | None
    bond_dim: int
    entropy: float
    discarded_weight: float


@dataclass
class MpsRun:
    state: MpsState
    trace: list[TraceRow] = field(default_factory=list)

    @property
    def max_bond_seen(self) -> int:
        return max((row.bond_dim for row in self.trace), default=1)


def _expand_ops(circuit: CircuitIR, params) -> list[tuple[str, tuple[int, ...], np.ndarray]]:
    """Flatten to 1- and 2-qubit primitives (Toffolis via the CNOT network)."""
    out = []
    for op in circuit.ops:
        if op.kind == TOFFOLI:
            for g, local in toffoli_network():
                mapped = tuple(op.targets[i] for i in local)
                out.append((g.kind, mapped, gate_matrix(g)))
            continue
        if op.kind in GATE_ARITY and GATE_ARITY[op.kind] <= 2:
            out.append((op.kind, op.targets, op_matrix(op, params)))
            continue
        raise MpsError(f"{op.kind} is not supported on the MPS path")
    return out


def run_circuit_mps(
    circuit: CircuitIR,
    params=None,
    max_bond: int | float = math.inf,
    hard_cap: int = 4096,
) -> MpsRun:
    """Execute a circuit on an MPS, SWAP-routing long-range pairs.

    The trace records, per primitive applied, the touched cut, its bond
    dimension, the half-chain entropy and the weight discarded by
    truncation.  A bond exceeding ``hard_cap`` raises ``BondOverflowError``
    naming the step.
    """
    params = _check_params(circuit, params)
    n = circuit.num_qubits
    state = mps_from_zero(n, max_bond=max_bond)
    run = MpsRun(state=state)
    half_cut = max(0, n // 2 - 1)
    step = 0

    def record(label: str, cut: int | None, discarded: float):
        nonlocal step
        bond = len(state.lambdas[cut]) if cut is not None else 1
        entropy = entanglement_entropy(state, half_cut) if n > 1 else 0.0
        run.trace.append(TraceRow(step, label, cut, bond, entropy, discarded))
        step += 1

    def apply_two(label: str, tensor: np.ndarray, left: int):
        bond, discarded = apply_two_site(state, tensor, left)
        if bond > hard_cap:
            raise BondOverflowError(step, label, bond, hard_cap)
        record(label, left, discarded)

    swap_tensor = _two_site_tensor(SWAP_MATRIX)
    for kind, targets, matrix in _expand_ops(circuit, params):
        if len(targets) == 1:
            apply_single_site(state, matrix, targets[0])
            record(kind, None, 0.0)
            continue
        a, b = targets
        lo, hi = min(a, b), max(a, b)
        # Route the left qubit to hi-1, apply, route back.
        for s in range(lo, hi - 1):
            apply_two("SWAP(route)", swap_tensor, s)
        left_is_first = a < b  # after routing, qubit a sits left iff a < b
        flipped = not left_is_first
        if kind == CNOT:
            tensor = _gate_tensor_for(CNOT, flipped)
        else:
            tensor = _gate_tensor_for(matrix, flipped)
        apply_two(kind, tensor, hi - 1)
        for s in range(hi - 2, lo - 1, -1):
            apply_two("SWAP(route)", swap_tensor, s)
    return run


def trace_to_csv_rows(run: MpsRun) -> list[list]:
    rows = [["step", "gate", "cut", "bond_dim", "entropy", "discarded_weight"]]
    for r in run.trace:
        rows.append(
            [r.step, r.gate, "" if r.cut is None else r.cut, r.bond_dim,
             f"{r.entropy:.12g}", f"{r.discarded_weight:.12g}"]
        )
    return rows
