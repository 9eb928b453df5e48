"""End-to-end experiment grid: folds x leaf budgets x methods x ensemble sizes.

Every fold/leaf-budget cell trains (or loads from cache) one base forest
that all methods share; each method then selects K trees, optionally
refines them, and is scored by test accuracy and byte footprint. Cells are
independent, so they can run in parallel without changing any result.
"""

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .data import Dataset, kfold, load_csv, load_dataset
from .evaluation import (
    ParetoPoint,
    model_size_bytes,
    normalized_apf,
    rank_table,
    write_results_csv,
)
from .forest import accuracy, load_forest, save_forest, train_forest
from .pruning import random_prune, run_pruner
from .refine import RefineConfig, refine_leaves
from .seeding import derive_seed

DEFAULT_N_TREES = 256
DEFAULT_LEAF_GRID = (64, 128, 256, 512, 1024)
DEFAULT_K_GRID = (8, 16, 32, 64, 128)
REFINE_METHOD = "leaf-refinement"


@dataclass
class MethodSpec:
    """One selection method with its ensemble-size grid.

    ``refine`` turns the method into select-then-refine; ``params`` is a
    free-form bag reserved for externally registered pruners.
    """

    name: str
    k_grid: list[int] = field(default_factory=lambda: list(DEFAULT_K_GRID))
    refine: RefineConfig | None = None
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    dataset_path: str
    label_column: str | None = None
    categorical_columns: list[str] = field(default_factory=list)
    dataset_name: str = ""
    folds: int = 5
    n_trees: int = DEFAULT_N_TREES
    leaf_grid: list[int] = field(default_factory=lambda: list(DEFAULT_LEAF_GRID))
    seed: int = 0
    methods: list[MethodSpec] = field(default_factory=list)
    output_dir: str = "runs"

    def __post_init__(self):
        if not self.dataset_name:
            base = os.path.basename(self.dataset_path)
            self.dataset_name = os.path.splitext(base)[0]
        if not self.methods:
            raise ValueError("configure at least one method")


def config_from_json(doc: dict) -> ExperimentConfig:
    ds = doc["dataset"]
    base = doc.get("base_forest", {})
    methods = []
    for m in doc["methods"]:
        refine_cfg = None
        if m.get("refine") is not None or m["name"] == REFINE_METHOD:
            refine_cfg = RefineConfig(**m.get("refine", {}))
        methods.append(MethodSpec(
            name=m["name"],
            k_grid=list(m.get("K", DEFAULT_K_GRID)),
            refine=refine_cfg,
            params=dict(m.get("params", {})),
        ))
    return ExperimentConfig(
        dataset_path=ds["path"],
        label_column=ds.get("label_column"),
        categorical_columns=list(ds.get("categorical_columns", [])),
        dataset_name=ds.get("name", ""),
        folds=doc.get("folds", 5),
        n_trees=base.get("n_trees", DEFAULT_N_TREES),
        leaf_grid=list(base.get("max_leaves", DEFAULT_LEAF_GRID)),
        seed=doc.get("seed", 0),
        methods=methods,
        output_dir=doc["output_dir"],
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_json(json.load(fh))


def load_experiment_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset_path.endswith(".json"):
        return load_dataset(config.dataset_path)
    if config.label_column is None:
        raise ValueError("label_column is required for CSV datasets")
    return load_csv(config.dataset_path, config.label_column, config.categorical_columns)


def _atomic_save_forest(forest, path):
    tmp = f"{path}.tmp.{os.getpid()}"
    save_forest(forest, tmp)
    os.replace(tmp, path)


def _cell(config: ExperimentConfig, dataset: Dataset, fold_index: int, n_leaves: int):
    """Run every (method, K) of one fold/leaf-budget cell; returns rows + forest hash."""
    fold = kfold(dataset, config.folds, config.seed)[fold_index]
    train_rows, test_rows = fold.train_indices, fold.test_indices

    forest_dir = os.path.join(config.output_dir, "forests")
    forest_path = os.path.join(
        forest_dir, f"fold{fold_index}_nl{n_leaves}_seed{config.seed}.json")
    if os.path.exists(forest_path):
        forest = load_forest(forest_path)
    else:
        forest_seed = derive_seed(config.seed, fold_index, n_leaves)
        forest = train_forest(dataset, train_rows, config.n_trees, n_leaves, forest_seed)
        _atomic_save_forest(forest, forest_path)
    with open(forest_path, "rb") as fh:
        forest_hash = hashlib.sha256(fh.read()).hexdigest()

    rows = []
    for method_index, method in enumerate(config.methods):
        for k in method.k_grid:
            try:
                seed_m = derive_seed(config.seed, fold_index, n_leaves, method_index, k)
                if method.name == REFINE_METHOD:
                    selection = random_prune(forest, k, seed_m)
                else:
                    selection = run_pruner(method.name, forest, dataset, train_rows, k, seed_m)
                scored_forest = forest
                if method.refine is not None:
                    refine_cfg = dataclasses.replace(
                        method.refine, seed=derive_seed(seed_m, 1))
                    scored_forest = refine_leaves(
                        forest, selection.selected, dataset, train_rows, refine_cfg)
                rows.append({
                    "dataset": config.dataset_name,
                    "method": method.name,
                    "n_l": n_leaves,
                    "K": k,
                    "fold": fold_index,
                    "accuracy": accuracy(scored_forest, dataset, test_rows, selection.selected),
                    "size_bytes": model_size_bytes(forest, selection.selected),
                })
            except Exception as exc:
                raise RuntimeError(
                    f"experiment cell failed (dataset={config.dataset_name}, "
                    f"fold={fold_index}, method={method.name}, n_l={n_leaves}, K={k}): {exc}"
                ) from exc
    return rows, forest_hash


def _cell_worker(args):
    return _cell(*args)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> dict:
    """Execute the full grid; writes results.csv, reports and a run manifest.

    Reruns with an identical config produce byte-identical artifacts.
    """
    dataset = load_experiment_dataset(config)
    os.makedirs(os.path.join(config.output_dir, "forests"), exist_ok=True)

    cells = [(config, dataset, fold, leaves)
             for fold in range(config.folds) for leaves in config.leaf_grid]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_cell_worker, cells))
    else:
        outcomes = [_cell(*c) for c in cells]

    rows = [row for cell_rows, _ in outcomes for row in cell_rows]
    method_order = {m.name: i for i, m in enumerate(config.methods)}
    rows.sort(key=lambda r: (r["fold"], r["n_l"], method_order[r["method"]], r["K"]))

    results_path = os.path.join(config.output_dir, "results.csv")
    write_results_csv(rows, results_path)

    manifest = {
        "dataset": config.dataset_name,
        "seed": config.seed,
        "folds": config.folds,
        "n_trees": config.n_trees,
        "leaf_grid": list(config.leaf_grid),
        "methods": [m.name for m in config.methods],
        "forest_hashes": {
            f"fold{c[2]}_nl{c[3]}": h for c, (_, h) in zip(cells, outcomes)
        },
    }
    with open(os.path.join(config.output_dir, "run_manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    report_paths = report_results(rows, config.output_dir)
    return {"results_csv": results_path, "rows": len(rows), **report_paths}


def aggregate_rows(rows: list[dict]) -> dict:
    """Fold-average accuracy and size per (dataset, method, n_l, K)."""
    groups = {}
    for row in rows:
        key = (row["dataset"], row["method"], row["n_l"], row["K"])
        groups.setdefault(key, []).append(row)
    out = {}
    for key, group in sorted(groups.items()):
        acc = sum(r["accuracy"] for r in group) / len(group)
        size = sum(r["size_bytes"] for r in group) / len(group)
        out[key] = {"accuracy": acc, "size_bytes": size, "folds": len(group)}
    return out


def report_results(rows: list[dict], out_dir) -> dict:
    """Write Pareto fronts, APF values and the method rank table as CSVs."""
    import csv

    aggregated = aggregate_rows(rows)
    by_method = {}
    for (dataset, method, leaves, k), cell in aggregated.items():
        point = ParetoPoint(
            size_bytes=round(cell["size_bytes"]),
            accuracy=cell["accuracy"],
            config_tag=f"n_l={leaves},K={k}",
        )
        by_method.setdefault((dataset, method), []).append(point)

    fronts_path = os.path.join(out_dir, "fronts.csv")
    apf_path = os.path.join(out_dir, "apf.csv")
    ranks_path = os.path.join(out_dir, "ranks.csv")

    apf_values = {}
    with open(fronts_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "method", "size_bytes", "accuracy", "config_tag"])
        for (dataset, method), points in sorted(by_method.items()):
            report = normalized_apf(points)
            apf_values[(dataset, method)] = report
            for p in report.front:
                writer.writerow([dataset, method, p.size_bytes, repr(p.accuracy), p.config_tag])

    with open(apf_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "method", "apf", "s_max"])
        for (dataset, method), report in sorted(apf_values.items()):
            writer.writerow([dataset, method, repr(report.apf), report.s_max])

    datasets = sorted({d for d, _ in apf_values})
    methods = sorted({m for _, m in apf_values})
    matrix = [[apf_values[(d, m)].apf for m in methods] for d in datasets]
    mean_ranks = rank_table(matrix)
    with open(ranks_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "mean_rank"])
        for method, rank in zip(methods, mean_ranks):
            writer.writerow([method, repr(float(rank))])

    return {"fronts_csv": fronts_path, "apf_csv": apf_path, "ranks_csv": ranks_path}
