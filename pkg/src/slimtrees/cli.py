"""Command-line entry points for the compression pipeline."""

import csv
import json
import os

import click
import numpy as np

from . import codegen as codegen_mod
from . import experiment as experiment_mod
from .data import load_csv, load_dataset
from .evaluation import model_size_bytes, read_results_csv
from .forest import accuracy, load_forest, predict_rows, save_forest, train_forest
from .pruning import (
    available_pruners,
    load_selection,
    run_pruner,
    random_prune,
    save_selection,
)
from .refine import RefineConfig, refine_leaves


def _load_any_dataset(path, label_column, categorical):
    if str(path).endswith(".json"):
        return load_dataset(path)
    if label_column is None:
        raise click.UsageError("--label-column is required for CSV datasets")
    return load_csv(path, label_column, categorical)


dataset_options = [
    click.option("--data", required=True, type=click.Path(exists=True),
                 help="Dataset CSV (headered) or JSON fixture."),
    click.option("--label-column", default=None, help="Label column name (CSV only)."),
    click.option("--categorical", multiple=True,
                 help="Categorical column to one-hot encode (repeatable)."),
]


def add_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group()
@click.option("--seed", default=0, show_default=True, help="Default seed for stochastic steps.")
@click.option("--threads", default=1, show_default=True, help="Worker processes for grid cells.")
@click.option("--out", default=None, help="Default output path for the subcommand.")
@click.pass_context
def main(ctx, seed, threads, out):
    """Compress tree ensembles: prune, refine, evaluate, generate code."""
    ctx.obj = {"seed": seed, "threads": threads, "out": out}


def _resolve(ctx, value, key):
    return value if value is not None else ctx.obj.get(key)


@main.command()
@add_options(dataset_options)
@click.option("--n-trees", "-M", default=256, show_default=True)
@click.option("--max-leaves", default=64, show_default=True,
              help="Leaf budget per tree.")
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="Forest JSON output path.")
@click.pass_context
def train(ctx, data, label_column, categorical, n_trees, max_leaves, seed, out):
    """Train a bagged forest on all rows of the dataset."""
    seed = _resolve(ctx, seed, "seed")
    out = _resolve(ctx, out, "out")
    if out is None:
        raise click.UsageError("--out is required")
    dataset = _load_any_dataset(data, label_column, categorical)
    forest = train_forest(dataset, np.arange(dataset.n_rows), n_trees, max_leaves, seed)
    save_forest(forest, out)
    click.echo(f"trained {n_trees} trees (<= {max_leaves} leaves each) -> {out}")


@main.command()
@add_options(dataset_options)
@click.option("--forest", "forest_path", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(available_pruners()), default="reduced-error",
              show_default=True)
@click.option("--K", "k", required=True, type=int, help="Number of trees to keep.")
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="Selection JSON output path.")
@click.pass_context
def prune(ctx, data, label_column, categorical, forest_path, method, k, seed, out):
    """Select K trees from a forest."""
    seed = _resolve(ctx, seed, "seed")
    out = _resolve(ctx, out, "out")
    if out is None:
        raise click.UsageError("--out is required")
    dataset = _load_any_dataset(data, label_column, categorical)
    forest = load_forest(forest_path)
    selection = run_pruner(method, forest, dataset, np.arange(dataset.n_rows), k, seed)
    save_selection(selection, out)
    click.echo(f"{method} kept trees {selection.selected} -> {out}")


@main.command()
@add_options(dataset_options)
@click.option("--forest", "forest_path", required=True, type=click.Path(exists=True))
@click.option("--selection", "selection_path", default=None, type=click.Path(exists=True),
              help="Selection JSON; omit to sample --k trees at random.")
@click.option("--k", type=int, default=None, help="Trees to sample when no selection is given.")
@click.option("--alpha", default=0.1, show_default=True, help="Constant SGD step size.")
@click.option("--epochs", default=50, show_default=True)
@click.option("--batch-size", default=128, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="Refined forest JSON output path.")
@click.option("--selection-out", default=None,
              help="Where to save the sampled selection when --k is used.")
@click.pass_context
def refine(ctx, data, label_column, categorical, forest_path, selection_path, k,
           alpha, epochs, batch_size, seed, out, selection_out):
    """SGD-refine the leaf vectors of a selected sub-forest."""
    seed = _resolve(ctx, seed, "seed")
    out = _resolve(ctx, out, "out")
    if out is None:
        raise click.UsageError("--out is required")
    dataset = _load_any_dataset(data, label_column, categorical)
    forest = load_forest(forest_path)
    if selection_path is not None:
        selection = load_selection(selection_path, forest.n_trees)
    elif k is not None:
        selection = random_prune(forest, k, seed)
        if selection_out:
            save_selection(selection, selection_out)
    else:
        raise click.UsageError("provide --selection or --k")
    config = RefineConfig(step_size=alpha, epochs=epochs, batch_size=batch_size, seed=seed)
    refined = refine_leaves(forest, selection.selected, dataset, np.arange(dataset.n_rows), config)
    save_forest(refined, out)
    click.echo(f"refined trees {selection.selected} for {epochs} epochs -> {out}")


@main.command(name="eval")
@add_options(dataset_options)
@click.option("--forest", "forest_path", required=True, type=click.Path(exists=True))
@click.option("--selection", "selection_path", default=None, type=click.Path(exists=True))
@click.option("--out", default=None, help="Write the report JSON here instead of stdout.")
@click.pass_context
def eval_cmd(ctx, data, label_column, categorical, forest_path, selection_path, out):
    """Accuracy and byte footprint of a (sub-)forest on a dataset."""
    out = _resolve(ctx, out, "out")
    dataset = _load_any_dataset(data, label_column, categorical)
    forest = load_forest(forest_path)
    subset = None
    if selection_path is not None:
        subset = load_selection(selection_path, forest.n_trees).selected
    report = {
        "accuracy": accuracy(forest, dataset, np.arange(dataset.n_rows), subset),
        "size_bytes": model_size_bytes(forest, subset),
        "n_trees": forest.n_trees if subset is None else len(subset),
        "n_rows": dataset.n_rows,
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


@main.command(name="predict")
@click.option("--forest", "forest_path", required=True, type=click.Path(exists=True))
@click.option("--selection", "selection_path", default=None, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="Headerless CSV of feature rows.")
@click.option("--out", default=None, help="Prediction CSV output path.")
@click.pass_context
def predict_cmd(ctx, forest_path, selection_path, input_path, out):
    """Write the averaged class vector for every input row."""
    out = _resolve(ctx, out, "out")
    if out is None:
        raise click.UsageError("--out is required")
    forest = load_forest(forest_path)
    subset = None
    if selection_path is not None:
        subset = load_selection(selection_path, forest.n_trees).selected
    with open(input_path, newline="") as fh:
        X = np.array([[float(c) for c in row] for row in csv.reader(fh) if row])
    scores = predict_rows(forest, X, subset)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in scores:
            writer.writerow([repr(float(v)) for v in row])
    click.echo(f"{len(scores)} predictions -> {out}")


@main.command(name="codegen")
@click.option("--input", "forest_path", required=True, type=click.Path(exists=True),
              help="Forest JSON.")
@click.option("--subset", "selection_path", default=None, type=click.Path(exists=True),
              help="Selection JSON; omit to emit the whole forest.")
@click.option("--out", default=None, help="C++ source output path.")
@click.pass_context
def codegen_cmd(ctx, forest_path, selection_path, out):
    """Emit standalone C++ inference source plus a manifest sidecar."""
    out = _resolve(ctx, out, "out")
    if out is None:
        raise click.UsageError("--out is required")
    forest = load_forest(forest_path)
    subset = None
    if selection_path is not None:
        subset = load_selection(selection_path, forest.n_trees).selected
    model = codegen_mod.emit_source(forest, subset)
    codegen_mod.save_emitted(model, out)
    click.echo(f"{model.manifest['total_nodes']} nodes "
               f"({model.manifest['expected_size_bytes']} bytes) -> {out}")


@main.command(name="experiment")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--threads", type=int, default=None)
@click.pass_context
def experiment_cmd(ctx, config_path, threads):
    """Run the full fold x leaf-budget x method x K grid from a JSON config."""
    threads = _resolve(ctx, threads, "threads")
    config = experiment_mod.load_config(config_path)
    summary = experiment_mod.run_experiment(config, threads=threads or 1)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@main.command(name="report")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, help="Directory for fronts/apf/ranks CSVs.")
@click.pass_context
def report_cmd(ctx, results_path, out):
    """Aggregate a results CSV into Pareto fronts, APF values and ranks."""
    out = _resolve(ctx, out, "out")
    if out is None:
        raise click.UsageError("--out is required")
    os.makedirs(out, exist_ok=True)
    rows = read_results_csv(results_path)
    paths = experiment_mod.report_results(rows, out)
    click.echo(json.dumps(paths, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
