"""Grid runner: completeness, shared base forests, byte-level determinism."""

import json

import numpy as np
import pytest

from slimtrees.data import save_dataset
from slimtrees.experiment import (
    DEFAULT_K_GRID,
    DEFAULT_LEAF_GRID,
    DEFAULT_N_TREES,
    ExperimentConfig,
    MethodSpec,
    config_from_json,
    run_experiment,
)
from slimtrees.evaluation import read_results_csv
from slimtrees.forest import load_forest, predict_rows
from slimtrees.synthetic import make_synthetic


@pytest.fixture
def toy_config(tmp_path):
    ds = make_synthetic(500, n_features=6, n_classes=2, label_noise=0.1, seed=3)
    data_path = tmp_path / "toy.json"
    save_dataset(ds, data_path)

    def make(out_name):
        return ExperimentConfig(
            dataset_path=str(data_path),
            dataset_name="toy",
            folds=2,
            n_trees=16,
            leaf_grid=[16],
            seed=11,
            methods=[
                MethodSpec(name="reduced-error", k_grid=[2, 4]),
                MethodSpec(name="random", k_grid=[2, 4]),
            ],
            output_dir=str(tmp_path / out_name),
        )

    return make


class TestRunExperiment:
    def test_row_count_is_exact_grid(self, toy_config):
        config = toy_config("run")
        summary = run_experiment(config)
        rows = read_results_csv(summary["results_csv"])
        # folds * leaf-budgets * sum over methods of |K grid|
        assert len(rows) == 2 * 1 * (2 + 2)
        combos = {(r["method"], r["n_l"], r["K"], r["fold"]) for r in rows}
        assert len(combos) == len(rows)
        expected = {
            (m, 16, k, f)
            for m in ("reduced-error", "random") for k in (2, 4) for f in (0, 1)
        }
        assert combos == expected

    def test_rerun_is_byte_identical(self, toy_config):
        import pathlib

        a = toy_config("run_a")
        b = toy_config("run_b")
        run_experiment(a)
        run_experiment(b)
        for name in ("results.csv", "fronts.csv", "apf.csv", "ranks.csv"):
            pa = pathlib.Path(a.output_dir) / name
            pb = pathlib.Path(b.output_dir) / name
            assert pa.read_bytes() == pb.read_bytes(), name

    def test_methods_share_the_base_forest(self, toy_config):
        config = toy_config("run")
        run_experiment(config)
        manifest = json.loads(open(f"{config.output_dir}/run_manifest.json").read())
        # one cached forest per (fold, leaf budget), hashed once for all methods
        assert sorted(manifest["forest_hashes"]) == ["fold0_nl16", "fold1_nl16"]

    def test_full_recovery_through_pipeline(self, tmp_path):
        ds = make_synthetic(300, n_features=5, seed=8)
        data_path = tmp_path / "d.json"
        save_dataset(ds, data_path)
        config = ExperimentConfig(
            dataset_path=str(data_path),
            dataset_name="d",
            folds=2,
            n_trees=8,
            leaf_grid=[8],
            seed=2,
            methods=[MethodSpec(name="random", k_grid=[8])],
            output_dir=str(tmp_path / "out"),
        )
        summary = run_experiment(config)
        rows = read_results_csv(summary["results_csv"])
        from slimtrees.data import kfold
        from slimtrees.forest import accuracy

        folds = kfold(ds, 2, seed=2)
        for row in rows:
            forest = load_forest(f"{config.output_dir}/forests/fold{row['fold']}_nl8_seed2.json")
            base = accuracy(forest, ds, folds[row["fold"]].test_indices)
            assert row["accuracy"] == base

    def test_errors_carry_grid_context(self, toy_config):
        config = toy_config("run_err")
        config.methods[0].k_grid = [999]  # larger than the forest
        with pytest.raises(RuntimeError, match=r"dataset=toy.*fold=0.*method=reduced-error.*n_l=16.*K=999"):
            run_experiment(config)

    def test_parallel_run_matches_sequential(self, toy_config):
        import pathlib

        seq = toy_config("run_seq")
        par = toy_config("run_par")
        run_experiment(seq, threads=1)
        run_experiment(par, threads=2)
        for name in ("results.csv", "apf.csv", "ranks.csv"):
            assert (pathlib.Path(seq.output_dir) / name).read_bytes() == \
                (pathlib.Path(par.output_dir) / name).read_bytes(), name

    def test_refinement_method_runs(self, tmp_path):
        from slimtrees.refine import RefineConfig

        ds = make_synthetic(300, n_features=5, seed=1)
        data_path = tmp_path / "d.json"
        save_dataset(ds, data_path)
        config = ExperimentConfig(
            dataset_path=str(data_path),
            dataset_name="d",
            folds=2,
            n_trees=8,
            leaf_grid=[8],
            seed=5,
            methods=[
                MethodSpec(name="random", k_grid=[4]),
                MethodSpec(name="leaf-refinement", k_grid=[4],
                           refine=RefineConfig(step_size=0.1, epochs=5, batch_size=32)),
            ],
            output_dir=str(tmp_path / "out"),
        )
        rows = read_results_csv(run_experiment(config)["results_csv"])
        by_method = {}
        for r in rows:
            by_method.setdefault(r["method"], []).append(r)
        # same selection seed derivation => same trees => same size
        for a, b in zip(sorted(by_method["random"], key=lambda r: r["fold"]),
                        sorted(by_method["leaf-refinement"], key=lambda r: r["fold"])):
            assert a["size_bytes"] == b["size_bytes"]


class TestConfigParsing:
    def test_defaults_match_protocol(self):
        doc = {
            "dataset": {"path": "x.csv", "label_column": "y"},
            "methods": [{"name": "reduced-error"}],
            "output_dir": "out",
        }
        config = config_from_json(doc)
        assert config.folds == 5
        assert config.n_trees == DEFAULT_N_TREES == 256
        assert list(config.leaf_grid) == list(DEFAULT_LEAF_GRID) == [64, 128, 256, 512, 1024]
        assert config.methods[0].k_grid == list(DEFAULT_K_GRID) == [8, 16, 32, 64, 128]

    def test_refine_config_parsed(self):
        doc = {
            "dataset": {"path": "x.json"},
            "methods": [{"name": "leaf-refinement", "K": [4],
                         "refine": {"step_size": 0.2, "epochs": 3}}],
            "output_dir": "out",
        }
        config = config_from_json(doc)
        assert config.methods[0].refine.step_size == 0.2
        assert config.methods[0].refine.epochs == 3
        assert config.methods[0].refine.batch_size == 128

    def test_refinement_method_gets_default_refine(self):
        doc = {
            "dataset": {"path": "x.json"},
            "methods": [{"name": "leaf-refinement"}],
            "output_dir": "out",
        }
        config = config_from_json(doc)
        assert config.methods[0].refine is not None
        assert config.methods[0].refine.step_size == 0.1

    def test_requires_methods(self):
        with pytest.raises(ValueError, match="at least one method"):
            ExperimentConfig(dataset_path="x.json", methods=[], output_dir="o")
