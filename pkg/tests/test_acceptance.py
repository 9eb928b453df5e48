"""Acceptance suite: one test per release criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
verdict lines as they pass). Criteria with a stated runtime budget assert
it on the measured wall time.
"""

import json
import pathlib
import time

import numpy as np
import pytest

from conftest import build_forest, constant_tree
from slimtrees.data import Dataset, kfold, save_dataset
from slimtrees.evaluation import (
    ParetoPoint,
    model_size_bytes,
    normalized_apf,
    pareto_front,
)
from slimtrees.experiment import ExperimentConfig, MethodSpec, run_experiment
from slimtrees.forest import accuracy, predict_rows, train_forest
from slimtrees.pruning import (
    ResidualGram,
    random_prune,
    reduced_error_prune,
    residual_gram,
)
from slimtrees.refine import RefineConfig, leaf_gradient, refine_leaves, training_loss
from slimtrees.seeding import derive_rng, derive_seed
from slimtrees.synthetic import make_synthetic

BENCH_SEED = 2024


def verdict(number, name, detail=""):
    print(f"\n[criterion {number:02d}] PASS {name} {detail}".rstrip())


@pytest.fixture(scope="module")
def bench_dataset():
    """The fixed desk-scale benchmark: 5,000 points, d=10, C=2, 10% label noise."""
    return make_synthetic(5000, n_features=10, n_classes=2, label_noise=0.1,
                          seed=BENCH_SEED)


def test_criterion_01_full_recovery():
    started = time.time()
    for trial, (n_trees, n_rows) in enumerate([(8, 300), (17, 500), (32, 800)]):
        ds = make_synthetic(n_rows, n_features=6, n_classes=2 + trial % 2,
                            label_noise=0.15, seed=trial)
        forest = train_forest(ds, np.arange(n_rows), n_trees, max_leaves=16, seed=trial + 40)
        base = predict_rows(forest, ds.features)
        re_sel = reduced_error_prune(forest, ds, np.arange(n_rows), n_trees)
        rnd_sel = random_prune(forest, n_trees, seed=trial)
        np.testing.assert_array_equal(predict_rows(forest, ds.features, re_sel.selected), base)
        np.testing.assert_array_equal(predict_rows(forest, ds.features, rnd_sel.selected), base)
    elapsed = time.time() - started
    assert elapsed < 10.0
    verdict(1, "full recovery at K=M is bit-identical", f"({elapsed:.1f}s)")


def test_criterion_02_reduced_error_matches_exhaustive_greedy():
    def greedy_oracle(forest, dataset, rows, k):
        X = dataset.features[rows]
        truth = np.argmax(dataset.labels[rows], axis=1)
        chosen = []
        for _ in range(k):
            best_index, best_error = None, None
            for i in range(forest.n_trees):
                if i in chosen:
                    continue
                mean = sum(forest.trees[j].predict(X) for j in chosen + [i]) / (len(chosen) + 1)
                error = float(np.mean(np.argmax(mean, axis=1) != truth))
                if best_error is None or error < best_error:
                    best_index, best_error = i, error
            chosen.append(best_index)
        return chosen

    checked = 0
    for trial in range(4):
        n_trees = 4 + trial % 3  # 4..6 members
        ds = make_synthetic(200, n_features=5, n_classes=2 + trial % 2,
                            label_noise=0.2, seed=trial + 60)
        forest = train_forest(ds, np.arange(200), n_trees, max_leaves=6, seed=trial)
        rows = np.arange(200)
        for k in range(1, n_trees + 1):
            got = reduced_error_prune(forest, ds, rows, k).selected
            assert got == greedy_oracle(forest, ds, rows, k), (trial, k)
            checked += 1
    verdict(2, "greedy selection equals the exhaustive oracle",
            f"({checked} forest/K combinations)")


def test_criterion_03_gradients_match_finite_differences():
    def batch_loss(forest, subset, dataset, batch):
        f = predict_rows(forest, dataset.features[batch], subset)
        return float(np.mean(np.sum((f - dataset.labels[batch]) ** 2, axis=1)))

    h = 1e-6
    worst = 0.0
    for seed in range(20):
        ds = make_synthetic(50, n_features=4, n_classes=2 + seed % 3, seed=seed)
        forest = train_forest(ds, np.arange(50), n_trees=2 + seed % 2, max_leaves=4,
                              seed=seed + 7)
        subset = list(range(forest.n_trees))
        batch = derive_rng(seed).choice(50, size=12, replace=False)
        analytic = leaf_gradient(forest, subset, batch, ds)
        for i in subset:
            tree = forest.trees[i]
            for a, node in enumerate(tree.leaf_node_ids()):
                for c in range(ds.n_classes):
                    original = tree.leaf_values[node, c]
                    tree.leaf_values[node, c] = original + h
                    up = batch_loss(forest, subset, ds, batch)
                    tree.leaf_values[node, c] = original - h
                    down = batch_loss(forest, subset, ds, batch)
                    tree.leaf_values[node, c] = original
                    numeric = (up - down) / (2 * h)
                    rel = abs(analytic[i][a, c] - numeric) / max(abs(numeric), 1e-8)
                    worst = max(worst, rel)
    assert worst < 1e-5
    verdict(3, "leaf gradients match central finite differences",
            f"(max rel err {worst:.2e})")


def test_criterion_04_full_batch_descent_and_quadratic_fixed_point():
    # Descent: conservative step, ten updates, loss never increases.
    rows = np.arange(100)
    step = RefineConfig(step_size=0.01, epochs=1, full_batch_mode=True, seed=0)
    for trial in range(5):
        ds = make_synthetic(100, n_features=4, n_classes=2 + trial % 2, seed=trial + 30)
        forest = train_forest(ds, rows, n_trees=2 + trial % 3, max_leaves=5, seed=trial)
        subset = list(range(forest.n_trees))
        previous = training_loss(forest, subset, ds, rows)
        current = forest
        for _ in range(10):
            current = refine_leaves(current, subset, ds, rows, step)
            loss = training_loss(current, subset, ds, rows)
            assert loss <= previous + 1e-9
            previous = loss

    # Quadratic fixed point: a single leaf pulled to the mean label.
    ds = make_synthetic(64, n_features=3, n_classes=2, label_noise=0.3, seed=77)
    forest = build_forest([constant_tree([1.0, 0.0])], n_classes=2)
    cfg = RefineConfig(step_size=0.1, epochs=100, full_batch_mode=True, seed=0)
    refined = refine_leaves(forest, [0], ds, np.arange(64), cfg)
    gap = np.abs(refined.trees[0].leaf_values[0] - ds.labels.mean(axis=0)).max()
    assert gap < 1e-6
    verdict(4, "full-batch SGD descends and reaches the quadratic fixed point",
            f"(fixed-point gap {gap:.1e})")


def test_criterion_05_memory_model_exactness():
    single_leaf = build_forest([constant_tree([1, 0])], n_classes=2)
    assert model_size_bytes(single_leaf) == 25

    p = [0.1] * 10
    three_nodes = build_forest(
        [[{"split": {"f": 0, "t": 0.5, "l": 1, "r": 2}},
          {"leaf": {"p": p}}, {"leaf": {"p": p}}]], n_classes=10)
    assert model_size_bytes(three_nodes) == 171

    ds = make_synthetic(200, n_features=4, n_classes=3, seed=5)
    forest = train_forest(ds, np.arange(200), n_trees=4, max_leaves=8, seed=6)
    total_nodes = sum(t.n_nodes for t in forest.trees)
    assert model_size_bytes(forest) == (17 + 4 * 3) * total_nodes
    verdict(5, "byte accounting matches the hand-counted fixtures", "(25B, 171B)")


def test_criterion_06_pareto_and_apf_oracles():
    started = time.time()
    rng = np.random.default_rng(99)
    points = [ParetoPoint(int(rng.integers(1, 80)), float(rng.integers(0, 25)) / 25.0, f"p{i}")
              for i in range(1000)]

    survivors = []
    for i, p in enumerate(points):
        dominated = any(
            q.size_bytes <= p.size_bytes and q.accuracy >= p.accuracy
            and (q.size_bytes < p.size_bytes or q.accuracy > p.accuracy)
            for q in points)
        duplicate = any(q.size_bytes == p.size_bytes and q.accuracy == p.accuracy
                        for q in points[:i])
        if not dominated and not duplicate:
            survivors.append(p)
    survivors.sort(key=lambda p: p.size_bytes)
    got = pareto_front(points)
    assert [(p.size_bytes, p.accuracy) for p in got] == \
        [(p.size_bytes, p.accuracy) for p in survivors]

    assert normalized_apf([ParetoPoint(10, 0.5), ParetoPoint(20, 1.0)]).apf == \
        pytest.approx(0.25)
    assert normalized_apf([ParetoPoint(40, 0.9)]).apf == 0.0
    report = normalized_apf(points)
    assert 0.0 <= report.apf <= max(p.accuracy for p in points)
    front = report.front
    dominated_extra = ParetoPoint(front[-1].size_bytes, front[-1].accuracy / 2)
    assert normalized_apf(points + [dominated_extra]).apf == report.apf
    elapsed = time.time() - started
    assert elapsed < 5.0
    verdict(6, "front equals brute force; staircase area checks out", f"({elapsed:.1f}s)")


def test_criterion_07_residual_decomposition_identity():
    for trial in range(3):
        ds = make_synthetic(250, n_features=5, n_classes=2 + trial,
                            label_noise=0.2, seed=trial + 11)
        forest = train_forest(ds, np.arange(250), n_trees=6 + trial, max_leaves=8,
                              seed=trial)
        gram = residual_gram(forest, ds, np.arange(250))
        values = gram.values
        m = forest.n_trees
        total = values.sum()
        for k in range(m):
            mask = np.arange(m) != k
            without = values[np.ix_(mask, mask)].sum()
            cross = values[mask, k].sum()
            recomposed = without + 2 * cross + values[k, k]
            assert abs(total - recomposed) <= 1e-10 * max(1.0, abs(total))
    verdict(7, "residual matrix decomposition identity holds for every member",
            "(tol 1e-10 relative)")


def test_criterion_08_refinement_beats_random_pruning(bench_dataset):
    started = time.time()
    ds = bench_dataset
    folds = kfold(ds, 5, seed=1)
    wins = 0
    per_fold = []
    for fold_index, fold in enumerate(folds):
        forest = train_forest(ds, fold.train_indices, n_trees=256, max_leaves=64,
                              seed=derive_seed(BENCH_SEED, fold_index, 64))
        selection = random_prune(forest, 8, seed=derive_seed(BENCH_SEED, fold_index, 8))
        acc_random = accuracy(forest, ds, fold.test_indices, selection.selected)
        config = RefineConfig(step_size=0.1, epochs=50, batch_size=128,
                              seed=derive_seed(BENCH_SEED, fold_index))
        refined = refine_leaves(forest, selection.selected, ds, fold.train_indices, config)
        acc_refined = accuracy(refined, ds, fold.test_indices, selection.selected)
        per_fold.append((acc_random, acc_refined))
        wins += acc_refined >= acc_random
    elapsed = time.time() - started
    assert wins >= 4, per_fold
    assert elapsed < 180.0
    verdict(8, "leaf refinement beats random pruning at K=8",
            f"({wins}/5 folds, {elapsed:.0f}s)")


def test_criterion_09_pruning_benefit_shrinks_for_large_trees(bench_dataset):
    ds = bench_dataset
    folds = kfold(ds, 5, seed=1)
    gaps = {16: [], 256: []}
    for base_seed in (1, 2, 3):
        for fold_index, fold in enumerate(folds):
            for max_leaves in (16, 256):
                forest = train_forest(ds, fold.train_indices, n_trees=256,
                                      max_leaves=max_leaves,
                                      seed=derive_seed(base_seed, fold_index, max_leaves))
                re_sel = reduced_error_prune(forest, ds, fold.train_indices, 8)
                rnd_sel = random_prune(
                    forest, 8, seed=derive_seed(base_seed, fold_index, max_leaves, 4))
                gap = (accuracy(forest, ds, fold.test_indices, re_sel.selected)
                       - accuracy(forest, ds, fold.test_indices, rnd_sel.selected))
                gaps[max_leaves].append(gap)
    gap_small, gap_large = np.mean(gaps[16]), np.mean(gaps[256])
    assert gap_small > gap_large, (gap_small, gap_large)
    verdict(9, "selection gain is larger for small trees",
            f"(gap {gap_small:+.4f} at 16 leaves vs {gap_large:+.4f} at 256)")


def test_criterion_10_pipeline_artifacts_are_byte_identical(tmp_path):
    ds = make_synthetic(400, n_features=6, n_classes=2, label_noise=0.1, seed=50)
    data_path = tmp_path / "bench.json"
    save_dataset(ds, data_path)

    def run(out_name):
        config = ExperimentConfig(
            dataset_path=str(data_path),
            dataset_name="bench",
            folds=2,
            n_trees=12,
            leaf_grid=[8, 16],
            seed=33,
            methods=[
                MethodSpec(name="reduced-error", k_grid=[2, 4]),
                MethodSpec(name="random", k_grid=[2, 4]),
                MethodSpec(name="leaf-refinement", k_grid=[2, 4],
                           refine=RefineConfig(step_size=0.1, epochs=5, batch_size=64)),
            ],
            output_dir=str(tmp_path / out_name),
        )
        return pathlib.Path(run_experiment(config)["results_csv"]).parent

    first = run("run_a")
    second = run("run_b")
    compared = 0
    for name in ("results.csv", "fronts.csv", "apf.csv", "ranks.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
        compared += 1
    for forest_file in sorted((first / "forests").iterdir()):
        twin = second / "forests" / forest_file.name
        assert forest_file.read_bytes() == twin.read_bytes(), forest_file.name
        compared += 1
    manifest_a = json.loads((first / "run_manifest.json").read_text())
    manifest_b = json.loads((second / "run_manifest.json").read_text())
    assert manifest_a["forest_hashes"] == manifest_b["forest_hashes"]
    verdict(10, "reruns reproduce every artifact byte for byte",
            f"({compared} files compared)")
