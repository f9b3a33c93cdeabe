"""Command-line entry point.

Subcommands: simulate, compile-iqp, entropy-analyze, train-bas,
train-prior, toy-thm3, selftest.  Settings resolve as defaults < config
file (--config) < explicit flags; every artifact embeds the resolved
config and the tool version, and all writes are atomic
(write-temp-then-rename).  With a fixed config and seed, two invocations
produce byte-identical artifacts; wall-clock timing is therefore never
written into them.

Exit codes: 0 success, 1 selftest failure, 2 validation error (with a
machine-readable JSON object on stderr), 64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__, _json
from .circuit import from_json as circuit_from_json
from .losses import EXACT_SHOTS, TrainConfig
from .statevector import amplitude_dump, probabilities, sample
from . import report

SUBCOMMANDS = (
    "simulate",
    "compile-iqp",
    "entropy-analyze",
    "train-bas",
    "train-prior",
    "toy-thm3",
    "selftest",
)

_DEFAULTS = {
    "train-bas": {"size": "2x2", "shots": "inf", "seed": 1, "lr": None, "iters": None},
    "train-prior": {
        "target": 0.70,
        "shots": "inf",
        "seed": 1,
        "lr": None,
        "iters": None,
        "mode": "amplitude_encode",
        "restarts": 3,
    },
    "toy-thm3": {"n": 4, "seed": 0, "iters": 150, "lr": 20.0, "shots": "inf"},
    "simulate": {"shots": "inf", "seed": 0, "amplitudes": False},
    "entropy-analyze": {"max_bond": "inf"},
    "compile-iqp": {"verify": False},
}

#: Per-experiment training defaults (learning rate, iterations); recorded
#: here so runs are reproducible without external config files.
BAS_TRAIN_DEFAULTS = {
    "2x2": {"lr": 25.0, "iters": 500},
    "3x3": {"lr": 200.0, "iters": 700},
}
PRIOR_TRAIN_DEFAULTS = {"exact": {"lr": 0.5, "iters": 300}, "shots": {"lr": 0.25, "iters": 300}}


class CliError(ValueError):
    pass


def _parse_shots(text) -> int | float:
    if text in ("inf", EXACT_SHOTS, None):
        return EXACT_SHOTS
    try:
        shots = int(text)
    except (TypeError, ValueError):
        raise CliError(f"shots must be a positive integer or 'inf', got {text!r}")
    if shots < 1:
        raise CliError(f"shots must be >= 1, got {shots}")
    return shots


def _out_dir(args) -> str:
    out = args.out or os.environ.get("BQCKIT_OUT_DIR") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _resolve(name: str, args, flag_names) -> dict:
    """defaults < config file < explicit flags."""
    settings = dict(_DEFAULTS.get(name, {}))
    if getattr(args, "config", None):
        with open(args.config) as handle:
            loaded = _json.loads(handle.read())
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a JSON object")
        unknown = set(loaded) - set(settings)
        if unknown:
            raise CliError(f"unknown config keys for {name}: {sorted(unknown)}")
        settings.update(loaded)
    for flag in flag_names:
        value = getattr(args, flag.replace("-", "_"), None)
        if value is not None:
            settings[flag] = value
    return settings


def _artifact(out_dir: str, filename: str, payload: dict) -> str:
    path = os.path.join(out_dir, filename)
    report.write_text(path, _json.dumps(payload, indent=2) + "\n")
    return path


def _with_meta(settings: dict, body: dict) -> dict:
    body = dict(body)
    inner = body.pop("config", None)
    config = {**inner, **settings} if isinstance(inner, dict) else dict(settings)
    return {"version": __version__, "config": config, **body}


def _load_params(path: str | None, expected: int) -> np.ndarray | None:
    if path is None:
        if expected:
            raise CliError(f"circuit has {expected} parameter slots; pass --params")
        return None
    with open(path) as handle:
        values = _json.loads(handle.read())
    params = np.asarray(values, dtype=float)
    if params.shape != (expected,):
        raise CliError(f"expected {expected} parameters, got shape {params.shape}")
    return params


# ------------------------------- subcommands -------------------------------


def _cmd_simulate(args) -> int:
    from .circuit import simulate

    settings = _resolve("simulate", args, ("shots", "seed", "amplitudes"))
    shots = _parse_shots(settings["shots"])
    with open(args.circuit) as handle:
        circuit = circuit_from_json(handle.read())
    params = _load_params(args.params, circuit.param_count)
    state = simulate(circuit, params)
    record = sample(state, shots, seed=int(settings["seed"]))
    out = _out_dir(args)
    settings_echo = {**settings, "shots": "inf" if shots == EXACT_SHOTS else shots,
                     "circuit": args.circuit}
    body = {
        "num_qubits": circuit.num_qubits,
        "shots": "inf" if shots == EXACT_SHOTS else shots,
        "counts": {k: record.counts[k] for k in sorted(record.counts)},
        "probabilities": [float(p) for p in record.probabilities],
    }
    path = _artifact(out, "measurement.json", _with_meta(settings_echo, body))
    if settings["amplitudes"]:
        _artifact(out, "amplitudes.json",
                  _with_meta(settings_echo, {"amplitudes": amplitude_dump(state)}))
    print(f"wrote {path}")
    return 0


def _cmd_compile_iqp(args) -> int:
    from . import iqp

    settings = _resolve("compile-iqp", args, ("verify",))
    with open(getattr(args, "in")) as handle:
        circuit = iqp.iqp_from_json_dict(_json.loads(handle.read()))
    schedule = iqp.compile_iqp(circuit)
    payload = _with_meta(
        {"in": getattr(args, "in"), "verify": bool(settings["verify"])},
        iqp.schedule_to_json_dict(circuit.num_qubits, schedule),
    )
    report.write_text(args.out, _json.dumps(payload, indent=2) + "\n")
    print(f"compiled {len(schedule)} blocks -> {args.out}")
    if settings["verify"]:
        fid, dev = iqp.verify_schedule(circuit, schedule)
        print(f"verifier fidelity {fid:.12f} max probability deviation {dev:.3e}")
        if fid < 1 - 1e-9:
            raise CliError(f"schedule verification failed: fidelity {fid}")
    return 0


def _cmd_entropy_analyze(args) -> int:
    from .mps import run_circuit_mps, trace_to_csv_rows

    settings = _resolve("entropy-analyze", args, ("max_bond",))
    max_bond = settings["max_bond"]
    max_bond = math.inf if max_bond in ("inf", None) else int(max_bond)
    with open(args.circuit) as handle:
        circuit = circuit_from_json(handle.read())
    params = _load_params(args.params, circuit.param_count)
    run = run_circuit_mps(circuit, params, max_bond=max_bond)
    out = _out_dir(args)
    settings_echo = {"circuit": args.circuit,
                     "max_bond": "inf" if max_bond == math.inf else max_bond}
    csv_path = os.path.join(out, "entropy_trace.csv")
    report.write_csv(csv_path, trace_to_csv_rows(run))
    half = max(0, circuit.num_qubits // 2 - 1)
    from .mps import entanglement_entropy

    body = {
        "num_qubits": circuit.num_qubits,
        "steps": len(run.trace),
        "max_bond_seen": run.max_bond_seen,
        "final_bond_dims": run.state.bond_dims(),
        "final_half_chain_entropy": entanglement_entropy(run.state, half)
        if circuit.num_qubits > 1
        else 0.0,
        "total_discarded_weight": float(sum(r.discarded_weight for r in run.trace)),
    }
    _artifact(out, "entropy_summary.json", _with_meta(settings_echo, body))
    report.render_entropy_trace(
        [r.step for r in run.trace],
        [r.bond_dim for r in run.trace],
        [r.entropy for r in run.trace],
        os.path.join(out, "entropy_trace.png"),
        title=f"bond growth and half-chain entropy ({circuit.num_qubits} qubits)",
    )
    print(f"wrote {csv_path}")
    return 0


def _train_config(settings, defaults) -> TrainConfig:
    shots = _parse_shots(settings["shots"])
    lr = settings["lr"] if settings["lr"] is not None else defaults["lr"]
    iters = settings["iters"] if settings["iters"] is not None else defaults["iters"]
    return TrainConfig(
        learning_rate=float(lr),
        iterations=int(iters),
        shots=shots,
        seed=int(settings["seed"]),
    )


def _cmd_train_bas(args) -> int:
    from .experiments import assignment_permutation, generate_bas, run_bas_experiment

    settings = _resolve("train-bas", args, ("size", "shots", "seed", "lr", "iters"))
    size = settings["size"]
    if size not in ("2x2", "3x3"):
        raise CliError(f"size must be 2x2 or 3x3, got {size!r}")
    rows, cols = (int(v) for v in size.split("x"))
    config = _train_config(settings, BAS_TRAIN_DEFAULTS[size])
    run, acc, model = run_bas_experiment(rows, cols, config)
    dataset = generate_bas(rows, cols)
    out = _out_dir(args)
    settings_echo = {
        "size": size,
        "shots": "inf" if config.exact else int(config.shots),
        "seed": config.seed,
        "learning_rate": config.learning_rate,
        "iterations": config.iterations,
    }
    _artifact(out, "trainrun.json", _with_meta(settings_echo, run.to_json_dict()))
    loss_rows = [["iteration", "loss"]]
    loss_rows += [[it, f"{value:.12g}"] for it, value in enumerate(run.losses)]
    report.write_csv(os.path.join(out, "loss.csv"), loss_rows)
    q = model.distribution(run.final_params)
    hist_rows = [["index", "bitstring", "probability", "is_bas"]]
    width = dataset.num_pixels
    valid = set(dataset.indices)
    for i, p in enumerate(q):
        hist_rows.append([i, format(i, f"0{width}b"), f"{p:.12g}", int(i in valid)])
    report.write_csv(os.path.join(out, "histogram.csv"), hist_rows)
    perm = assignment_permutation(model, run.final_params, dataset)
    body = {
        "accuracy": acc.accuracy,
        "shots": "inf" if acc.shots == EXACT_SHOTS else int(acc.shots),
        "final_loss": run.losses[-1],
        "per_image": {k: acc.per_image[k] for k in sorted(acc.per_image)},
        "value_assignment": list(perm),
        "one_to_one": len(set(perm)) == dataset.count,
    }
    _artifact(out, "accuracy.json", _with_meta(settings_echo, body))
    report.render_loss_curve(run.losses, os.path.join(out, "loss.png"),
                             title=f"BAS {size} training loss")
    report.render_distribution(
        q, os.path.join(out, "distribution.png"),
        highlight=dataset.indices, target=dataset.target_distribution(),
        title=f"BAS {size} generated distribution (accuracy {acc.accuracy:.4f})",
    )
    print(f"accuracy {acc.accuracy:.4f} final loss {run.losses[-1]:.3e} -> {out}")
    return 0


def _cmd_train_prior(args) -> int:
    from .experiments import PriorExperimentSpec, run_prior_experiment

    settings = _resolve(
        "train-prior", args, ("target", "shots", "seed", "lr", "iters", "mode", "restarts")
    )
    target1 = float(settings["target"])
    if not 0.0 <= target1 <= 1.0:
        raise CliError(f"target prior must lie in [0, 1], got {target1}")
    mode = settings["mode"]
    shots = _parse_shots(settings["shots"])
    defaults = PRIOR_TRAIN_DEFAULTS["exact" if shots == EXACT_SHOTS else "shots"]
    config = _train_config(settings, defaults)
    spec = PriorExperimentSpec(target_priors=(target1, 1.0 - target1),
                               conditional_mode=mode)
    result = run_prior_experiment(spec, config, restarts=int(settings["restarts"]))
    out = _out_dir(args)
    settings_echo = {
        "target": target1,
        "mode": mode,
        "shots": "inf" if config.exact else int(config.shots),
        "seed": config.seed,
        "learning_rate": config.learning_rate,
        "iterations": config.iterations,
        "restarts": int(settings["restarts"]),
    }
    body = {
        "target_priors": list(spec.target_priors),
        "learned": [list(pair) for pair in result.learned],
        "mean_learned": list(result.mean_learned),
        "variance": result.variance,
    }
    _artifact(out, "prior_summary.json", _with_meta(settings_echo, body))
    for r, run in enumerate(result.runs):
        _artifact(out, f"trainrun_restart{r}.json",
                  _with_meta(settings_echo, run.to_json_dict()))
    loss_rows = [["iteration"] + [f"restart{r}" for r in range(len(result.runs))]]
    for it in range(config.iterations):
        loss_rows.append([it] + [f"{run.losses[it]:.12g}" for run in result.runs])
    report.write_csv(os.path.join(out, "loss_traces.csv"), loss_rows)
    report.render_loss_curves(
        {f"restart {r}": run.losses for r, run in enumerate(result.runs)},
        os.path.join(out, "loss.png"),
        title=f"prior learning, target p1={target1}",
    )
    mixture = spec.target_mixture()
    final_q = result.runs[-1].final_distribution
    report.render_distribution(
        final_q, os.path.join(out, "distribution.png"), target=mixture,
        title=f"learned mixture (p1={result.mean_learned[0]:.3f})",
    )
    print(
        f"learned p(l1)={result.mean_learned[0]:.4f} "
        f"p(l2)={result.mean_learned[1]:.4f} variance={result.variance:.3e} -> {out}"
    )
    return 0


def _cmd_toy_thm3(args) -> int:
    from .experiments import run_thm3_toy
    from .circuit import simulate
    from .builders import build_toy_thm3

    settings = _resolve("toy-thm3", args, ("n", "seed", "iters", "lr", "shots"))
    n = int(settings["n"])
    if n < 2:
        raise CliError(f"--n must be >= 2, got {n}")
    shots = _parse_shots(settings["shots"])
    result = run_thm3_toy(
        n, fitter_iterations=int(settings["iters"]), seed=int(settings["seed"]),
        learning_rate=float(settings["lr"]), shots=shots,
    )
    out = _out_dir(args)
    settings_echo = {
        "n": n, "seed": int(settings["seed"]), "iterations": int(settings["iters"]),
        "learning_rate": float(settings["lr"]),
        "shots": "inf" if shots == EXACT_SHOTS else int(shots),
    }
    body = {
        "target_bitstring": format(result.target_index, f"0{n}b"),
        "exact_probability": result.exact_probability,
        "gate_count": result.gate_count,
        "chain_local_best_probability": result.tpqc_best_probability,
        "chain_local_param_count": result.tpqc_param_count,
    }
    _artifact(out, "toy_report.json", _with_meta(settings_echo, body))
    probs = probabilities(simulate(build_toy_thm3(n)))
    rows = [["index", "bitstring", "probability"]]
    for i, p in enumerate(probs):
        rows.append([i, format(i, f"0{n}b"), f"{p:.12g}"])
    report.write_csv(os.path.join(out, "histogram.csv"), rows)
    report.render_distribution(
        probs, os.path.join(out, "distribution.png"),
        highlight=(result.target_index,),
        title=f"point target on {n} qubits (free connectivity: exact)",
    )
    print(
        f"p({body['target_bitstring']}) = {result.exact_probability} "
        f"(chain-local fit best: {result.tpqc_best_probability:.4f}) -> {out}"
    )
    return 0


def _cmd_selftest(args) -> int:
    del args
    from .selftest import run_selftest

    results = run_selftest()
    width = max(len(name) for name, _ok, _detail in results)
    failures = 0
    for name, ok, detail in results:
        tag = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        print(f"[{tag}] {name:<{width}}  {detail}")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 1


# --------------------------------- parsing ---------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse that reports flag errors as CliError instead of exiting."""

    def error(self, message):
        raise CliError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bqckit",
        description="simulate, compile and train parameterized quantum circuits",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, with_out=True):
        p.add_argument("--config", help="JSON file with subcommand settings")
        if with_out:
            p.add_argument("--out", help="output directory (default $BQCKIT_OUT_DIR or .)")

    p = sub.add_parser("simulate", help="run a circuit JSON file and measure")
    common(p)
    p.add_argument("--circuit", required=True)
    p.add_argument("--params", help="JSON array of parameter values")
    p.add_argument("--shots", help="positive integer or 'inf'")
    p.add_argument("--seed", type=int)
    p.add_argument("--amplitudes", action="store_const", const=True,
                   help="also dump final amplitudes")

    p = sub.add_parser("compile-iqp", help="compile a diagonal-layer circuit")
    p.add_argument("--config", help="JSON file with subcommand settings")
    p.add_argument("--in", required=True, help="diagonal-circuit JSON input")
    p.add_argument("--out", required=True, help="schedule JSON output file")
    p.add_argument("--verify", action="store_const", const=True)

    p = sub.add_parser("entropy-analyze", help="run a circuit on the MPS bridge")
    common(p)
    p.add_argument("--circuit", required=True)
    p.add_argument("--params")
    p.add_argument("--max-bond", dest="max_bond", help="truncation cap or 'inf'")

    p = sub.add_parser("train-bas", help="train the bars-and-stripes generator")
    common(p)
    p.add_argument("--size", choices=("2x2", "3x3"))
    p.add_argument("--shots")
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--lr", type=float)

    p = sub.add_parser("train-prior", help="learn a two-class prior")
    common(p)
    p.add_argument("--target", type=float, help="target p(lambda_1), e.g. 0.70")
    p.add_argument("--shots")
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--mode", choices=("amplitude_encode", "fitted_blocks"))
    p.add_argument("--restarts", type=int)

    p = sub.add_parser("toy-thm3", help="point-distribution locality demo")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--shots", help="shot budget for the chain-local fitter")
    p.add_argument("--seed", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--lr", type=float, help="learning rate for the chain-local fitter")

    p = sub.add_parser("selftest", help="verify gate identities and the compiler")
    p.add_argument("--config", help="ignored; accepted for uniformity")
    return parser


_HANDLERS = {
    "simulate": _cmd_simulate,
    "compile-iqp": _cmd_compile_iqp,
    "entropy-analyze": _cmd_entropy_analyze,
    "train-bas": _cmd_train_bas,
    "train-prior": _cmd_train_prior,
    "toy-thm3": _cmd_toy_thm3,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-") and argv[0] not in SUBCOMMANDS:
        print(f"unknown subcommand {argv[0]!r}", file=sys.stderr)
        print(f"usage: bqckit {{{' | '.join(SUBCOMMANDS)}}} [flags]", file=sys.stderr)
        return 64
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 64
        return _HANDLERS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (CliError, ValueError, OSError) as exc:
        print(_json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
