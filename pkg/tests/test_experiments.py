"""BAS generation, prior learning, and the locality toy model."""

import numpy as np
import pytest

from bqckit.experiments import (
    FITTED_BLOCKS,
    BqcBranchModel,
    PriorExperimentSpec,
    accuracy_report,
    assignment_permutation,
    bas_bqc_spec,
    collapsed_branch_circuit,
    generate_bas,
    initial_parameters,
    run_bas_experiment,
    run_prior_experiment,
    run_thm3_toy,
)
from bqckit.losses import EXACT_SHOTS, TrainConfig, mmd_loss


def _brute_force_bas(rows, cols):
    images = []
    for value in range(2 ** (rows * cols)):
        bits = format(value, f"0{rows * cols}b")
        grid = [bits[r * cols : (r + 1) * cols] for r in range(rows)]
        row_constant = all(len(set(row)) == 1 for row in grid)
        col_constant = all(
            len({grid[r][c] for r in range(rows)}) == 1 for c in range(cols)
        )
        if row_constant or col_constant:
            images.append(bits)
    return sorted(images, key=lambda b: int(b, 2))


class TestBasDataset:
    def test_counts(self):
        assert generate_bas(2, 2).count == 6
        assert generate_bas(3, 3).count == 14

    @pytest.mark.parametrize("rows", [1, 2, 3, 4])
    @pytest.mark.parametrize("cols", [1, 2, 3, 4])
    def test_matches_exhaustive_filter(self, rows, cols):
        assert list(generate_bas(rows, cols).images) == _brute_force_bas(rows, cols)

    def test_count_formula(self):
        for rows, cols in [(2, 2), (2, 4), (3, 3), (4, 2)]:
            ds = generate_bas(rows, cols)
            assert ds.count == 2**rows + 2**cols - 2

    def test_target_distribution(self):
        ds = generate_bas(2, 2)
        target = ds.target_distribution()
        assert target.sum() == pytest.approx(1.0, abs=1e-15)
        assert all(target[i] == pytest.approx(1 / 6) for i in ds.indices)


class TestBranchModel:
    def test_matches_full_circuit_2x2(self):
        spec = bas_bqc_spec(2, 2)
        model = BqcBranchModel(spec)
        rng = np.random.default_rng(1)
        params = rng.uniform(-np.pi, np.pi, model.param_count)
        np.testing.assert_allclose(
            model.joint(params), model.joint_from_full_circuit(params), atol=1e-12
        )

    def test_matches_full_circuit_3x3(self):
        spec = bas_bqc_spec(3, 3)
        model = BqcBranchModel(spec)
        rng = np.random.default_rng(2)
        params = rng.uniform(-np.pi, np.pi, model.param_count)
        np.testing.assert_allclose(
            model.joint(params), model.joint_from_full_circuit(params), atol=1e-12
        )

    def test_param_counts(self):
        assert BqcBranchModel(bas_bqc_spec(2, 2)).param_count == 48
        assert BqcBranchModel(bas_bqc_spec(3, 3)).param_count == 252

    def test_zero_params_degenerate_accuracy(self):
        # All-zero angles leave every branch on the all-white image, which
        # is itself a valid pattern: accuracy is 1 but the MMD stays large.
        ds = generate_bas(2, 2)
        model = BqcBranchModel(bas_bqc_spec(2, 2))
        q = model.distribution(np.zeros(model.param_count))
        assert q[0] == pytest.approx(1.0, abs=1e-12)
        report = accuracy_report(q, ds, EXACT_SHOTS, seed=0)
        assert report.accuracy == pytest.approx(1.0, abs=1e-12)
        assert mmd_loss(q, ds.target_distribution()) > 0.1

    def test_branch_circuit_gate_content(self):
        spec = bas_bqc_spec(2, 2)
        circ = collapsed_branch_circuit(spec)
        kinds = [op.kind for op in circ.ops]
        assert kinds.count("RY") == 8  # 2 blocks x 4 qubits
        assert kinds.count("CNOT") == 8  # ring of 4, twice


class TestBasTraining:
    def test_exact_accuracy_equals_mass_on_images(self):
        config = TrainConfig(learning_rate=25.0, iterations=20, seed=1)
        run, report, model = run_bas_experiment(2, 2, config)
        ds = generate_bas(2, 2)
        q = model.distribution(run.final_params)
        assert report.accuracy == pytest.approx(
            float(q[list(ds.indices)].sum()), abs=1e-12
        )

    def test_default_2x2_run_trains_and_separates(self):
        config = TrainConfig(learning_rate=25.0, iterations=500, seed=1)
        run, report, model = run_bas_experiment(2, 2, config)
        assert report.accuracy >= 0.99
        ds = generate_bas(2, 2)
        perm = assignment_permutation(model, run.final_params, ds)
        assert sorted(perm) == list(range(6))  # one-to-one value-image map
        # Every image receives (close to) its 1/6 of the target mass.
        joint = model.joint(run.final_params)
        for image_idx in ds.indices:
            assert joint[image_idx].sum() == pytest.approx(1 / 6, abs=5e-3)

    def test_shot_mode_accuracy(self):
        config = TrainConfig(learning_rate=25.0, iterations=120, seed=1, shots=4000)
        _run, report, _model = run_bas_experiment(2, 2, config)
        assert 0.0 <= report.accuracy <= 1.0
        assert report.shots == 4000


class TestPriorExperiment:
    def test_conditionals_normalized(self):
        spec = PriorExperimentSpec()
        n1, n2 = spec.class_conditionals()
        assert n1.sum() == pytest.approx(1.0, abs=1e-12)
        assert n2.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.argmax(n1) == 16
        assert np.argmax(n2) == 64

    def test_exact_mode_tight_convergence(self):
        spec = PriorExperimentSpec(target_priors=(0.70, 0.30))
        config = TrainConfig(learning_rate=0.5, iterations=300, seed=1)
        report = run_prior_experiment(spec, config)
        for p1, p2 in report.learned:
            assert abs(p1 - 0.70) <= 0.01
            assert p1 + p2 == pytest.approx(1.0, abs=1e-12)
        assert report.variance <= 1e-6

    def test_boundary_target(self):
        spec = PriorExperimentSpec(target_priors=(1.0, 0.0))
        config = TrainConfig(learning_rate=2.0, iterations=2000, seed=1)
        report = run_prior_experiment(spec, config)
        assert all(p1 >= 0.999 for p1, _ in report.learned)

    def test_shot_mode(self):
        spec = PriorExperimentSpec(target_priors=(0.70, 0.30))
        config = TrainConfig(learning_rate=0.25, iterations=300, seed=1, shots=1000)
        report = run_prior_experiment(spec, config)
        for p1, _ in report.learned:
            assert abs(p1 - 0.70) <= 0.02
        assert report.variance <= 1e-4

    def test_fitted_blocks_mode(self):
        spec = PriorExperimentSpec(
            target_priors=(0.70, 0.30),
            conditional_mode=FITTED_BLOCKS,
            fitted_iterations=150,
        )
        config = TrainConfig(learning_rate=0.5, iterations=150, seed=1)
        report = run_prior_experiment(spec, config)
        assert report.mode == FITTED_BLOCKS
        # Limited-expressivity conditionals: looser agreement than exact mode.
        for p1, _ in report.learned:
            assert abs(p1 - 0.70) <= 0.05

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            PriorExperimentSpec(conditional_mode="bogus")


class TestToyModel:
    @pytest.mark.parametrize("n", range(2, 9))
    def test_point_distribution_exact(self, n):
        result = run_thm3_toy(n, fitter_iterations=5)
        assert result.exact_probability == 1.0
        assert result.target_index == (1 << (n - 1)) + 1

    def test_gate_budget(self):
        result = run_thm3_toy(4, fitter_iterations=5)
        assert result.gate_count == {"X": 1, "CNOT": 1}

    def test_chain_fitter_reports_probability(self):
        result = run_thm3_toy(4, fitter_iterations=100, seed=0)
        assert 0.0 <= result.tpqc_best_probability <= 1.0


class TestDeterminism:
    def test_same_config_same_run(self):
        config = TrainConfig(learning_rate=25.0, iterations=30, seed=5)
        run_a, rep_a, _ = run_bas_experiment(2, 2, config)
        run_b, rep_b, _ = run_bas_experiment(2, 2, config)
        assert run_a.losses == run_b.losses
        assert rep_a.accuracy == rep_b.accuracy

    def test_initial_parameters_seeded(self):
        a = initial_parameters(10, 3)
        b = initial_parameters(10, 3)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, initial_parameters(10, 4))
