"""The two reference generative experiments plus the locality toy model.

* Bars-and-stripes generation: a Bayesian circuit with one ancilla value
  per valid image, a fixed uniform prior, and two blocks of flag-controlled
  RY rotations plus a Toffoli ring per value, trained with MMD on the data
  marginal.
* Class-prior learning: two fixed class conditionals over a 7-qubit grid
  (discretized Gaussians) and a single trainable RY angle on the ancilla;
  the learned prior is p(lambda_1) = cos^2(alpha/2).
* Locality toy: the point distribution |1 0...0 1> needs one X and one
  long-range CNOT in a free-connectivity circuit, while a chain-local
  tensor-network circuit with a small budget is left to fit it.

Training exploits the branch structure of the Bayesian circuit: the joint
factorizes as q(x, lambda_k) = prior_k * |<x|V_k|0>|^2 where V_k collapses
the flag-controlled block of value k to plain rotations and CNOTs on the
data register alone.  Equality with the full flag-gadget circuit is exact
and covered by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .builders import (
    BqcSpec,
    TpqcSpec,
    build_bqc,
    build_toy_thm3,
    build_tpqc,
    joint_distribution,
    ring_entangler,
    uniform_prior_amplitudes,
)
from .circuit import CircuitIR, CircuitError, Op, simulate
from .gates import CNOT, CRY
from .losses import (
    CircuitModel,
    LossContext,
    TrainConfig,
    TrainRun,
    empirical,
    train_model,
)
from .statevector import EXACT_SHOTS, probabilities


# ------------------------------ BAS dataset -------------------------------


@dataclass(frozen=True)
class BasDataset:
    rows: int
    cols: int
    images: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.images)

    @property
    def num_pixels(self) -> int:
        return self.rows * self.cols

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(int(b, 2) for b in self.images)

    def target_distribution(self) -> np.ndarray:
        p = np.zeros(2**self.num_pixels)
        p[list(self.indices)] = 1.0 / self.count
        return p


def generate_bas(rows: int, cols: int) -> BasDataset:
    """All images constant along rows or along columns, each counted once.

    Pixels map to bits row-major with the top-left pixel as the most
    significant bit (qubit 0).
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    images = set()
    for pattern in range(2**cols):  # vertical bars: columns constant
        bits = [(pattern >> (cols - 1 - c)) & 1 for c in range(cols)]
        images.add("".join(str(bits[c]) for _r in range(rows) for c in range(cols)))
    for pattern in range(2**rows):  # horizontal stripes: rows constant
        bits = [(pattern >> (rows - 1 - r)) & 1 for r in range(rows)]
        images.add("".join(str(bits[r]) for r in range(rows) for _c in range(cols)))
    ordered = tuple(sorted(images, key=lambda b: int(b, 2)))
    assert len(ordered) == 2**rows + 2**cols - 2
    return BasDataset(rows, cols, ordered)


# ----------------------- branch view of the BQC model ----------------------


def collapsed_branch_circuit(spec: BqcSpec) -> CircuitIR:
    """One active value's conditional blocks with the flag fixed at |1>.

    Controlled rotations become plain rotations of the same angle and the
    Toffoli ring becomes a CNOT ring, acting on the data register alone.
    """
    if spec.conditional_amplitudes is not None:
        raise CircuitError("amplitude-encoded conditionals have no block circuit")
    n = spec.data_qubits
    ops: list[Op] = []
    slot = 0
    for _block in range(spec.num_blocks):
        for q in range(n):
            for kind in spec.template:
                ops.append(Op(kind[1:], (q,), slot=slot))
                slot += 1
        if n >= 2:
            for c, t in ring_entangler(n):
                ops.append(Op(CNOT, (c, t)))
    return CircuitIR(n, tuple(ops), param_count=slot)


def collapsed_prior_circuit(spec: BqcSpec) -> CircuitIR:
    if spec.prior_blocks == 0:
        raise CircuitError("fixed-prior spec has no prior circuit")
    m = spec.ancilla_qubits
    ops: list[Op] = []
    slot = 0
    for _block in range(spec.prior_blocks):
        for q in range(m):
            for kind in spec.prior_template:
                ops.append(Op(kind, (q,), slot=slot))
                slot += 1
        if m >= 2:
            for c, t in ring_entangler(m):
                ops.append(Op(CNOT, (c, t)))
    return CircuitIR(m, tuple(ops), param_count=slot)


class BqcBranchModel:
    """Distribution model q(x) = sum_k prior_k(params) cond_k(params; x).

    Parameter slots match ``build_bqc``: prior slots first, then one
    contiguous group per active value.  Components are cached per parameter
    vector so occurrence shifts recompute only the touched branch.
    """

    def __init__(self, spec: BqcSpec, conditionals: tuple[np.ndarray, ...] | None = None):
        self.spec = spec
        self.num_values = len(spec.active_values)
        if spec.prior_blocks > 0:
            self._prior_model = CircuitModel(collapsed_prior_circuit(spec))
            prior_slots = self._prior_model.param_count
            self._prior_fixed = None
        else:
            self._prior_model = None
            prior_slots = 0
            amps = np.asarray(spec.prior_amplitudes, dtype=complex)
            self._prior_fixed = np.abs(amps[list(spec.active_values)]) ** 2
        if conditionals is not None:
            self._branch_model = None
            branch_slots = 0
            self._conds_fixed = tuple(np.asarray(c, dtype=float) for c in conditionals)
        elif spec.conditional_amplitudes is not None:
            self._branch_model = None
            branch_slots = 0
            self._conds_fixed = tuple(
                np.abs(np.asarray(v, dtype=complex)) ** 2
                for v in spec.conditional_amplitudes
            )
        else:
            self._branch_model = CircuitModel(collapsed_branch_circuit(spec))
            branch_slots = self._branch_model.param_count
            self._conds_fixed = None
        self._prior_slots = prior_slots
        self._branch_slots = branch_slots
        self.param_count = prior_slots + self.num_values * branch_slots
        self._cache_key: bytes | None = None
        self._cache: tuple[np.ndarray, list[np.ndarray]] | None = None

        occs = []
        if self._prior_model is not None:
            for n, (_op, slot, coeff) in enumerate(self._prior_model.occurrences):
                occs.append(("prior", None, n, slot, coeff))
        if self._branch_model is not None:
            for k in range(self.num_values):
                base = prior_slots + k * branch_slots
                for n, (_op, slot, coeff) in enumerate(self._branch_model.occurrences):
                    occs.append(("branch", k, n, base + slot, coeff))
        self._occ = occs

    # -- component evaluation ------------------------------------------------

    def _branch_params(self, params: np.ndarray, k: int) -> np.ndarray:
        base = self._prior_slots + k * self._branch_slots
        return params[base : base + self._branch_slots]

    def _components(self, params: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        key = params.tobytes()
        if key != self._cache_key:
            if self._prior_model is not None:
                full = self._prior_model.distribution(params[: self._prior_slots])
                prior = full[list(self.spec.active_values)]
            else:
                prior = self._prior_fixed
            if self._branch_model is not None:
                conds = [
                    self._branch_model.distribution(self._branch_params(params, k))
                    for k in range(self.num_values)
                ]
            else:
                conds = list(self._conds_fixed)
            self._cache_key, self._cache = key, (prior, conds)
        return self._cache

    def prior(self, params) -> np.ndarray:
        return self._components(np.asarray(params, dtype=float))[0]

    def distribution(self, params) -> np.ndarray:
        prior, conds = self._components(np.asarray(params, dtype=float))
        return sum(prior[k] * conds[k] for k in range(self.num_values))

    def joint(self, params) -> np.ndarray:
        """q(x, lambda_k) columns in active-value order, shape (2^N, |lambda|)."""
        prior, conds = self._components(np.asarray(params, dtype=float))
        return np.column_stack([prior[k] * conds[k] for k in range(self.num_values)])

    @property
    def occurrences(self):
        return [(None, slot, coeff) for (_w, _k, _n, slot, coeff) in self._occ]

    def shifted_distribution(self, params, occurrence_index: int, delta: float) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        where, k, local_n, _slot, _coeff = self._occ[occurrence_index]
        prior, conds = self._components(params)
        if where == "prior":
            full = self._prior_model.shifted_distribution(
                params[: self._prior_slots], local_n, delta
            )
            prior = full[list(self.spec.active_values)]
        else:
            conds = list(conds)
            conds[k] = self._branch_model.shifted_distribution(
                self._branch_params(params, k), local_n, delta
            )
        return sum(prior[j] * conds[j] for j in range(self.num_values))

    # -- cross-checks ----------------------------------------------------------

    def full_circuit(self) -> CircuitIR:
        return build_bqc(self.spec)

    def joint_from_full_circuit(self, params) -> np.ndarray:
        """Joint via the flag-gadget circuit, restricted to active values."""
        circuit = self.full_circuit()
        n, m = self.spec.data_qubits, self.spec.ancilla_qubits
        table = joint_distribution(
            circuit, params if circuit.param_count else None,
            tuple(range(n)), tuple(range(n, n + m)),
        )
        return table[:, list(self.spec.active_values)]


# ------------------------------ BAS experiment -----------------------------


@dataclass(frozen=True)
class AccuracyReport:
    accuracy: float
    per_image: dict[str, float]
    shots: int | float


def bas_bqc_spec(rows: int, cols: int, num_blocks: int = 2) -> BqcSpec:
    dataset = generate_bas(rows, cols)
    ancilla = math.ceil(math.log2(dataset.count))
    return BqcSpec(
        data_qubits=dataset.num_pixels,
        ancilla_qubits=ancilla,
        num_blocks=num_blocks,
        active_values=tuple(range(dataset.count)),
        template=(CRY,),
        prior_amplitudes=uniform_prior_amplitudes(ancilla, range(dataset.count)),
    )


def _restart_seed(seed: int, restart: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(97, restart)).generate_state(1)[0])


def initial_parameters(count: int, seed: int, scale: float = math.pi) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
    return rng.uniform(-scale, scale, size=count)


def accuracy_report(
    q: np.ndarray, dataset: BasDataset, shots: int | float, seed: int
) -> AccuracyReport:
    """Probability mass on valid images; empirical under finite shots."""
    if shots == EXACT_SHOTS:
        weights = q
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(23,)))
        weights = empirical(q, int(shots), rng)
    per_image = {img: float(weights[idx]) for img, idx in zip(dataset.images, dataset.indices)}
    return AccuracyReport(
        accuracy=float(sum(per_image.values())), per_image=per_image, shots=shots
    )


def run_bas_experiment(
    rows: int, cols: int, config: TrainConfig
) -> tuple[TrainRun, AccuracyReport, BqcBranchModel]:
    """Train the Bayesian circuit on the bars-and-stripes target."""
    dataset = generate_bas(rows, cols)
    spec = bas_bqc_spec(rows, cols)
    model = BqcBranchModel(spec)
    ctx = LossContext(kind="mmd", target=tuple(dataset.target_distribution()))
    init = initial_parameters(model.param_count, config.seed)
    run = train_model(model, init, ctx, config)
    report = accuracy_report(
        model.distribution(run.final_params), dataset, config.shots, config.seed
    )
    return run, report, model


def assignment_permutation(model: BqcBranchModel, params, dataset: BasDataset):
    """argmax_k q(x_i, lambda_k) per image; a permutation iff one-to-one."""
    joint = model.joint(params)
    return tuple(int(np.argmax(joint[idx])) for idx in dataset.indices)


# ----------------------------- prior experiment ----------------------------

AMPLITUDE_ENCODE = "amplitude_encode"
FITTED_BLOCKS = "fitted_blocks"


@dataclass(frozen=True)
class PriorExperimentSpec:
    data_qubits: int = 7
    means: tuple[float, float] = (16.0, 64.0)
    sigmas: tuple[float, float] = (2.0, 4.0)
    target_priors: tuple[float, float] = (0.70, 0.30)
    conditional_mode: str = AMPLITUDE_ENCODE
    fitted_blocks: int = 7
    fitted_iterations: int = 400

    def __post_init__(self):
        if self.conditional_mode not in (AMPLITUDE_ENCODE, FITTED_BLOCKS):
            raise ValueError(f"unknown conditional mode {self.conditional_mode!r}")
        if abs(sum(self.target_priors) - 1.0) > 1e-12:
            raise ValueError("target priors must sum to 1")

    def class_conditionals(self) -> tuple[np.ndarray, np.ndarray]:
        """Gaussians discretized and normalized on the 2^N integer grid."""
        x = np.arange(2**self.data_qubits, dtype=float)
        out = []
        for mu, sigma in zip(self.means, self.sigmas):
            density = np.exp(-((x - mu) ** 2) / (2.0 * sigma**2))
            out.append(density / density.sum())
        return tuple(out)

    def target_mixture(self) -> np.ndarray:
        n1, n2 = self.class_conditionals()
        return self.target_priors[0] * n1 + self.target_priors[1] * n2


@dataclass
class PriorReport:
    mode: str
    target_priors: tuple[float, float]
    learned: list[tuple[float, float]]
    variance: float
    runs: list[TrainRun] = field(repr=False, default_factory=list)

    @property
    def mean_learned(self) -> tuple[float, float]:
        arr = np.asarray(self.learned)
        return (float(arr[:, 0].mean()), float(arr[:, 1].mean()))


def prior_bqc_spec(spec: PriorExperimentSpec, conditionals) -> BqcSpec:
    """Full-circuit realization: conditionals enter as controlled preps."""
    return BqcSpec(
        data_qubits=spec.data_qubits,
        ancilla_qubits=1,
        active_values=(0, 1),
        prior_blocks=1,
        prior_template=("RY",),
        conditional_amplitudes=tuple(
            tuple(np.sqrt(np.asarray(c, dtype=float)).astype(complex)) for c in conditionals
        ),
    )


def _fit_class_blocks(
    spec: PriorExperimentSpec, target: np.ndarray, seed: int
) -> np.ndarray:
    """Pre-fit a frozen block circuit to one class conditional by MMD."""
    blocks = BqcSpec(
        data_qubits=spec.data_qubits,
        ancilla_qubits=0,
        num_blocks=spec.fitted_blocks,
        active_values=(0,),
        prior_amplitudes=(1.0,),
    )
    circuit = collapsed_branch_circuit(blocks)
    model = CircuitModel(circuit)
    ctx = LossContext(kind="mmd", target=tuple(target))
    config = TrainConfig(learning_rate=5.0, iterations=spec.fitted_iterations, seed=seed)
    init = initial_parameters(model.param_count, seed, scale=0.5)
    run = train_model(model, init, ctx, config)
    return model.distribution(run.final_params)


def run_prior_experiment(
    spec: PriorExperimentSpec, config: TrainConfig, restarts: int = 3
) -> PriorReport:
    """Learn the class prior; repeats with varied initial angles.

    The single trainable slot is the ancilla RY angle, so the learned prior
    is (cos^2(a/2), sin^2(a/2)).  Reported variance is the population
    variance of p(lambda_1) over restarts.
    """
    if spec.conditional_mode == AMPLITUDE_ENCODE:
        conditionals = spec.class_conditionals()
    else:
        conditionals = tuple(
            _fit_class_blocks(spec, target, _restart_seed(config.seed, 1000 + k))
            for k, target in enumerate(spec.class_conditionals())
        )
    model = BqcBranchModel(prior_bqc_spec(spec, conditionals))
    ctx = LossContext(kind="mmd", target=tuple(spec.target_mixture()))
    learned, runs = [], []
    for r in range(restarts):
        seed = _restart_seed(config.seed, r)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(11,)))
        init = np.array([rng.uniform(0.2, math.pi - 0.2)])
        run = train_model(model, init, ctx, replace(config, seed=seed))
        prior = model.prior(run.final_params)
        learned.append((float(prior[0]), float(prior[1])))
        runs.append(run)
    variance = float(np.var([p for p, _ in learned]))
    return PriorReport(
        mode=spec.conditional_mode,
        target_priors=spec.target_priors,
        learned=learned,
        variance=variance,
        runs=runs,
    )


# ------------------------------- locality toy -------------------------------


@dataclass(frozen=True)
class ToyReport:
    num_qubits: int
    target_index: int
    exact_probability: float
    gate_count: dict[str, int]
    tpqc_best_probability: float
    tpqc_param_count: int


def run_thm3_toy(
    num_qubits: int,
    fitter_iterations: int = 150,
    seed: int = 0,
    learning_rate: float = 20.0,
    shots: int | float = EXACT_SHOTS,
) -> ToyReport:
    """Point target |1 0...0 1>: exact with one X + one CNOT; a chain-local
    circuit with a small budget only gets partway there."""
    circuit = build_toy_thm3(num_qubits)
    probs = probabilities(simulate(circuit))
    target_index = (1 << (num_qubits - 1)) + 1
    target = np.zeros(2**num_qubits)
    target[target_index] = 1.0

    tpqc = build_tpqc(TpqcSpec(num_qubits=num_qubits, layout="mps", levels=1, rounds=2))
    model = CircuitModel(tpqc)
    ctx = LossContext(kind="mmd", target=tuple(target))
    config = TrainConfig(
        learning_rate=learning_rate, iterations=fitter_iterations,
        shots=shots, seed=seed,
    )
    run = train_model(model, initial_parameters(model.param_count, seed, scale=0.5), ctx, config)
    best = float(model.distribution(run.final_params)[target_index])

    counts: dict[str, int] = {}
    for op in circuit.ops:
        counts[op.kind] = counts.get(op.kind, 0) + 1
    return ToyReport(
        num_qubits=num_qubits,
        target_index=target_index,
        exact_probability=float(probs[target_index]),
        gate_count=counts,
        tpqc_best_probability=best,
        tpqc_param_count=tpqc.param_count,
    )
