"""MMD and NLL losses, shift-rule gradients, and the SGD training loop.

Gradients of rotation angles use the two-term shift rule: every plain
rotation contributes (q(a + pi/2) - q(a - pi/2)) / 2 to dq/da.  Controlled
rotations are first rewritten as plain rotations of half angle conjugated
by CNOT/CZ (exact identities), so the same two-term rule applies to each
sub-occurrence and the chain rule sums their contributions:

    CRY(a) on (c,t) = RY(a/2)_t CX RY(-a/2)_t CX
    CRZ(a) on (c,t) = RZ(a/2)_t CX RZ(-a/2)_t CX
    CRX(a) on (c,t) = RX(a/2)_t CZ RX(-a/2)_t CZ
    CRPHI(a)        = Rphi(a/2)_c Rphi(a/2)_t CX Rphi(-a/2)_t CX

Finite-shot losses and gradients draw fresh seeded samples per evaluation;
the MMD gradient estimator stays unbiased because the base and shifted
distributions use independent sample sets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import CircuitIR, Op, _check_params
from .gates import (
    CNOT,
    CRX,
    CRPHI,
    CRY,
    CRZ,
    CZ,
    PARAMETERIZED_KINDS,
    ROTATION_KINDS,
    RPHI,
    RX,
    RY,
    RZ,
    _ROTATIONS,
)
from .statevector import EXACT_SHOTS, apply_unitary_raw, new_zero_state
from .circuit import op_matrix

_NLL_CLAMP = 1e-12
_FD_STEP = 1e-4

SHIFT = "shift"
FINITE_DIFF = "finite_diff"


class LossError(ValueError):
    """Raised for malformed loss inputs."""


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite; carries the partial run."""

    def __init__(self, message: str, run: "TrainRun"):
        super().__init__(message)
        self.run = run


@dataclass(frozen=True)
class KernelConfig:
    """Mixture-of-Gaussians kernel over integer-encoded outcomes."""

    bandwidths: tuple[float, ...] = (0.25, 1.0, 4.0)

    def __post_init__(self):
        if not self.bandwidths or any(b <= 0 for b in self.bandwidths):
            raise LossError(f"bandwidths must be positive, got {self.bandwidths}")


@lru_cache(maxsize=32)
def _kernel_matrix(bandwidths: tuple[float, ...], size: int) -> np.ndarray:
    x = np.arange(size, dtype=float)
    sq = (x[:, None] - x[None, :]) ** 2
    k = sum(np.exp(-sq / (2.0 * b**2)) for b in bandwidths)
    return k / len(bandwidths)


def kernel_matrix(kernel: KernelConfig, size: int) -> np.ndarray:
    return _kernel_matrix(tuple(kernel.bandwidths), size)


def _check_distribution(name: str, dist, size: int | None = None) -> np.ndarray:
    dist = np.asarray(dist, dtype=float)
    if dist.ndim != 1:
        raise LossError(f"{name} must be a vector, got shape {dist.shape}")
    if size is not None and len(dist) != size:
        raise LossError(f"{name} has {len(dist)} outcomes, expected {size}")
    if abs(dist.sum() - 1.0) > 1e-8:
        raise LossError(f"{name} sums to {dist.sum()}, expected 1")
    return dist


def mmd_loss(q, p, kernel: KernelConfig = KernelConfig()) -> float:
    """Squared maximum mean discrepancy (q - p)^T K (q - p) >= 0."""
    q = _check_distribution("q", q)
    p = _check_distribution("p", p, size=len(q))
    d = q - p
    return float(d @ kernel_matrix(kernel, len(q)) @ d)


def nll_loss(q, dataset) -> float:
    """Mean negative log-likelihood of the dataset under q.

    Dataset entries are outcome indices or bitstrings; probabilities are
    clamped at 1e-12 before the log (finite-shot q can miss observed data).
    """
    q = np.asarray(q, dtype=float)
    indices = _dataset_indices(dataset, len(q))
    probs = np.maximum(q[indices], _NLL_CLAMP)
    return float(np.mean(-np.log(probs)))


def _dataset_indices(dataset, size: int) -> np.ndarray:
    if len(dataset) == 0:
        raise LossError("dataset must not be empty")
    out = []
    for item in dataset:
        idx = int(item, 2) if isinstance(item, str) else int(item)
        if not 0 <= idx < size:
            raise LossError(f"dataset entry {item!r} outside outcome space")
        out.append(idx)
    return np.asarray(out, dtype=int)


# ------------------------- loss context and config -------------------------


@dataclass(frozen=True)
class LossContext:
    """What the optimizer minimizes: MMD to a target or NLL of a dataset.

    ``marginal_qubits`` restricts the model distribution to those qubits
    (summing out the rest) before the loss is applied.
    """

    kind: str = "mmd"
    target: tuple[float, ...] | None = None
    dataset: tuple = ()
    kernel: KernelConfig = KernelConfig()
    marginal_qubits: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("mmd", "nll"):
            raise LossError(f"loss kind must be 'mmd' or 'nll', got {self.kind!r}")
        if self.kind == "mmd" and self.target is None:
            raise LossError("mmd loss needs a target distribution")
        if self.kind == "nll" and len(self.dataset) == 0:
            raise LossError("nll loss needs a dataset")
        if self.target is not None:
            object.__setattr__(self, "target", tuple(float(x) for x in self.target))

    def loss(self, q: np.ndarray) -> float:
        if self.kind == "mmd":
            return mmd_loss(q, np.asarray(self.target), self.kernel)
        return nll_loss(q, self.dataset)

    def weight(self, q: np.ndarray) -> np.ndarray:
        """dL/dq evaluated at q."""
        if self.kind == "mmd":
            k = kernel_matrix(self.kernel, len(q))
            return 2.0 * (k @ (q - np.asarray(self.target)))
        counts = np.bincount(_dataset_indices(self.dataset, len(q)), minlength=len(q))
        w = np.zeros(len(q))
        mask = counts > 0
        w[mask] = -counts[mask] / (len(self.dataset) * np.maximum(q[mask], _NLL_CLAMP))
        return w


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    iterations: int = 200
    shots: int | float = EXACT_SHOTS
    seed: int = 0
    gradient_mode: str = SHIFT
    optimizer: str = "sgd"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise LossError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.iterations < 1:
            raise LossError(f"iterations must be >= 1, got {self.iterations}")
        if self.gradient_mode not in (SHIFT, FINITE_DIFF):
            raise LossError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.optimizer != "sgd":
            raise LossError(f"only plain sgd is supported, got {self.optimizer!r}")
        if self.shots != EXACT_SHOTS and (
            not isinstance(self.shots, (int, np.integer)) or self.shots < 1
        ):
            raise LossError(f"shots must be >= 1 or EXACT_SHOTS, got {self.shots!r}")

    @property
    def exact(self) -> bool:
        return self.shots == EXACT_SHOTS


@dataclass
class TrainRun:
    """Loss trace and outcome of one optimization run."""

    losses: list[float]
    final_params: np.ndarray
    final_distribution: np.ndarray
    config: TrainConfig
    seconds: float = 0.0

    def to_json_dict(self, with_timing: bool = False) -> dict:
        cfg = {
            "learning_rate": self.config.learning_rate,
            "iterations": self.config.iterations,
            "shots": "inf" if self.config.exact else int(self.config.shots),
            "seed": self.config.seed,
            "gradient_mode": self.config.gradient_mode,
            "optimizer": self.config.optimizer,
        }
        return {
            "config": cfg,
            "loss": [float(x) for x in self.losses],
            "params": [float(x) for x in self.final_params],
            "q": [float(x) for x in self.final_distribution],
            # Wall time breaks byte-for-byte reproducibility, so artifacts
            # carry null unless timing is explicitly requested.
            "seconds": float(self.seconds) if with_timing else None,
        }


# -------------------- shift-rule machinery over circuits -------------------


@dataclass(frozen=True)
class _GradOp:
    """One primitive op of the gradient expansion.

    The bound angle is ``angle + coeff * params[slot]`` (coeff 0 for fixed
    ops), so shifting an occurrence means adding a delta to this op only.
    Static ops carry their matrix precomputed; slotted ops rebuild theirs
    from the bound angle per evaluation.
    """

    kind: str
    targets: tuple[int, ...]
    angle: float = 0.0
    slot: int | None = None
    coeff: float = 0.0
    amplitudes: tuple[complex, ...] | None = None
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    def with_matrix(self) -> "_GradOp":
        if self.slot is not None:
            return self
        if self.kind in PARAMETERIZED_KINDS:
            mat = op_matrix(Op(self.kind, self.targets, angle=self.angle))
        else:
            mat = op_matrix(Op(self.kind, self.targets, amplitudes=self.amplitudes))
        return _GradOp(self.kind, self.targets, self.angle, None, 0.0,
                       self.amplitudes, mat)


_CONTROLLED_EXPANSION = {
    CRY: RY,
    CRZ: RZ,
    CRX: RX,
}


def _expand_for_gradient(circuit: CircuitIR) -> list[_GradOp]:
    out: list[_GradOp] = []
    for op in circuit.ops:
        if op.slot is None:
            if op.kind in PARAMETERIZED_KINDS:
                out.append(_GradOp(op.kind, op.targets, angle=op.angle))
            else:
                out.append(_GradOp(op.kind, op.targets, amplitudes=op.amplitudes))
            continue
        if op.kind in ROTATION_KINDS:
            out.append(_GradOp(op.kind, op.targets, slot=op.slot, coeff=1.0))
            continue
        c, t = op.targets
        if op.kind in _CONTROLLED_EXPANSION:
            base = _CONTROLLED_EXPANSION[op.kind]
            link = CZ if op.kind == CRX else CNOT
            out.append(_GradOp(base, (t,), slot=op.slot, coeff=0.5))
            out.append(_GradOp(link, (c, t)))
            out.append(_GradOp(base, (t,), slot=op.slot, coeff=-0.5))
            out.append(_GradOp(link, (c, t)))
        elif op.kind == CRPHI:
            out.append(_GradOp(RPHI, (c,), slot=op.slot, coeff=0.5))
            out.append(_GradOp(RPHI, (t,), slot=op.slot, coeff=0.5))
            out.append(_GradOp(CNOT, (c, t)))
            out.append(_GradOp(RPHI, (t,), slot=op.slot, coeff=-0.5))
            out.append(_GradOp(CNOT, (c, t)))
        else:
            raise LossError(f"no gradient rule for slotted {op.kind}")
    return [gop.with_matrix() for gop in out]


def _run_expanded(
    gops: list[_GradOp],
    num_qubits: int,
    params: np.ndarray | None,
    shifted: int | None = None,
    delta: float = 0.0,
) -> np.ndarray:
    amps = new_zero_state(num_qubits).amplitudes
    for i, gop in enumerate(gops):
        if gop.matrix is not None:
            mat = gop.matrix
        else:
            angle = gop.angle + gop.coeff * float(params[gop.slot])
            if i == shifted:
                angle += delta
            mat = _ROTATIONS[gop.kind](angle)
        amps = apply_unitary_raw(amps, mat, gop.targets, num_qubits)
    return np.abs(amps) ** 2


def marginalize(probs: np.ndarray, num_qubits: int, qubits) -> np.ndarray:
    """Sum out every qubit not listed; result is ordered by the kept bits."""
    qubits = tuple(qubits)
    if not qubits:
        return probs
    shaped = probs.reshape((2,) * num_qubits)
    rest = tuple(q for q in range(num_qubits) if q not in qubits)
    return np.transpose(shaped, qubits + rest).reshape(2 ** len(qubits), -1).sum(axis=1)


def _eval_seed(seed: int, iteration: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(iteration, index)))


def empirical(q: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    return rng.multinomial(int(shots), q / q.sum()) / float(shots)


class CircuitModel:
    """Adapter giving a CircuitIR the distribution-model interface."""

    def __init__(self, circuit: CircuitIR, marginal_qubits=None):
        self.circuit = circuit
        self.param_count = circuit.param_count
        self.marginal_qubits = None if marginal_qubits is None else tuple(marginal_qubits)
        self._gops = _expand_for_gradient(circuit)
        self._occurrences = [
            (i, gop.slot, gop.coeff)
            for i, gop in enumerate(self._gops)
            if gop.slot is not None
        ]

    def _finish(self, probs: np.ndarray) -> np.ndarray:
        if self.marginal_qubits is None:
            return probs
        return marginalize(probs, self.circuit.num_qubits, self.marginal_qubits)

    def distribution(self, params) -> np.ndarray:
        params = _check_params(self.circuit, params)
        return self._finish(_run_expanded(self._gops, self.circuit.num_qubits, params))

    @property
    def occurrences(self):
        return self._occurrences

    def shifted_distribution(self, params, occurrence_index: int, delta: float) -> np.ndarray:
        op_index, _slot, _coeff = self._occurrences[occurrence_index]
        probs = _run_expanded(
            self._gops, self.circuit.num_qubits, np.asarray(params, dtype=float),
            shifted=op_index, delta=delta,
        )
        return self._finish(probs)


def model_distribution(model, params, shots=EXACT_SHOTS, rng=None) -> np.ndarray:
    q = model.distribution(params)
    if shots == EXACT_SHOTS:
        return q
    return empirical(q, shots, rng)


def gradient_of_model(
    model,
    params,
    ctx: LossContext,
    mode: str = SHIFT,
    shots: int | float = EXACT_SHOTS,
    seed: int = 0,
    iteration: int = 0,
) -> np.ndarray:
    """dL/dparams by the shift rule (or exact central differences)."""
    params = np.asarray(params, dtype=float)
    grad = np.zeros(model.param_count)
    if mode == FINITE_DIFF:
        for k in range(model.param_count):
            bumped = params.copy()
            bumped[k] += _FD_STEP
            up = ctx.loss(model.distribution(bumped))
            bumped[k] -= 2 * _FD_STEP
            down = ctx.loss(model.distribution(bumped))
            grad[k] = (up - down) / (2 * _FD_STEP)
        return grad
    if mode != SHIFT:
        raise LossError(f"unknown gradient mode {mode!r}")
    exact = shots == EXACT_SHOTS
    base = model_distribution(
        model, params, shots, None if exact else _eval_seed(seed, iteration, 0)
    )
    weight = ctx.weight(base)
    half_pi = math.pi / 2
    for n, (_op, slot, coeff) in enumerate(model.occurrences):
        up = model.shifted_distribution(params, n, half_pi)
        down = model.shifted_distribution(params, n, -half_pi)
        if not exact:
            up = empirical(up, shots, _eval_seed(seed, iteration, 1 + 2 * n))
            down = empirical(down, shots, _eval_seed(seed, iteration, 2 + 2 * n))
        grad[slot] += coeff * float(weight @ (up - down)) / 2.0
    return grad


def gradient(
    circuit: CircuitIR,
    params,
    ctx: LossContext,
    mode: str = SHIFT,
    shots: int | float = EXACT_SHOTS,
    seed: int = 0,
) -> np.ndarray:
    return gradient_of_model(
        CircuitModel(circuit, ctx.marginal_qubits), params, ctx, mode, shots, seed
    )


def probability_jacobian(circuit: CircuitIR, params, marginal_qubits=None) -> np.ndarray:
    """Exact dq/dparams, shape (outcomes, params); shift rule throughout."""
    model = CircuitModel(circuit, marginal_qubits)
    params = np.asarray(params, dtype=float)
    jac = np.zeros((len(model.distribution(params)), model.param_count))
    for n, (_op, slot, coeff) in enumerate(model.occurrences):
        up = model.shifted_distribution(params, n, math.pi / 2)
        down = model.shifted_distribution(params, n, -math.pi / 2)
        jac[:, slot] += coeff * (up - down) / 2.0
    return jac


def train_model(model, init_params, ctx: LossContext, config: TrainConfig) -> TrainRun:
    """Plain SGD; deterministic under (config, init).  Loss is recorded at
    the start of every iteration."""
    params = np.asarray(init_params, dtype=float).copy()
    if params.shape != (model.param_count,):
        raise LossError(
            f"expected {model.param_count} initial parameters, got {params.shape}"
        )
    losses: list[float] = []
    start = time.perf_counter()
    for it in range(config.iterations):
        if not np.all(np.isfinite(params)):
            run = TrainRun(losses, params, np.full(1, math.nan), config,
                           time.perf_counter() - start)
            raise TrainingDiverged(f"parameters diverged at iteration {it}", run)
        if config.exact:
            q = model.distribution(params)
        else:
            q = model_distribution(
                model, params, config.shots, _eval_seed(config.seed, it, 0)
            )
        if not np.all(np.isfinite(q)):
            run = TrainRun(losses, params, q, config, time.perf_counter() - start)
            raise TrainingDiverged(f"distribution diverged at iteration {it}", run)
        loss = ctx.loss(q)
        losses.append(loss)
        if not math.isfinite(loss):
            run = TrainRun(losses, params, q, config, time.perf_counter() - start)
            raise TrainingDiverged(f"loss became {loss} at iteration {it}", run)
        grad = gradient_of_model(
            model, params, ctx, config.gradient_mode, config.shots,
            config.seed, iteration=it,
        )
        params = params - config.learning_rate * grad
    if config.exact:
        final_q = model.distribution(params)
    else:
        final_q = model_distribution(
            model, params, config.shots, _eval_seed(config.seed, config.iterations, 0)
        )
    return TrainRun(losses, params, final_q, config, time.perf_counter() - start)


def train(
    circuit: CircuitIR,
    init_params,
    target,
    config: TrainConfig,
    marginal_qubits=None,
    kernel: KernelConfig = KernelConfig(),
) -> TrainRun:
    """Minimize MMD between the circuit distribution and ``target``."""
    ctx = LossContext(
        kind="mmd", target=tuple(np.asarray(target, dtype=float)),
        kernel=kernel, marginal_qubits=None if marginal_qubits is None else tuple(marginal_qubits),
    )
    return train_model(CircuitModel(circuit, ctx.marginal_qubits), init_params, ctx, config)
