"""Command-line surface: train, sweep, eval, synth, metrics."""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from .data import SynthConfig, make_splits, synth_generate
from .metrics import accuracy as accuracy_metric
from .metrics import demographic_parity, equal_opportunity
from .nn import load_checkpoint
from .train import RunConfig, evaluate, load_run_dataset, run, summarize, sweep


def _load_config(path) -> RunConfig:
    with open(path) as f:
        doc = json.load(f)
    out_dir = os.environ.get("FAIRPROP_OUT_DIR")
    if out_dir:
        doc["out_dir"] = out_dir
    return RunConfig.from_dict(doc)


@click.group()
def main():
    """Graph node classification with an explicit debiasing step."""


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def train_cmd(config_path):
    """Train all configured seeds and write checkpoints plus a results CSV."""
    cfg = _load_config(config_path)
    reports, _, _ = run(cfg)
    accs = np.array([r.accuracy for r in reports])
    dps = np.array([r.dp for r in reports])
    click.echo(
        f"scheme={cfg.scheme} acc={accs.mean():.4f}±{accs.std(ddof=1) if len(accs) > 1 else 0.0:.4f} "
        f"dp={dps.mean():.4f}±{dps.std(ddof=1) if len(dps) > 1 else 0.0:.4f} "
        f"results={os.path.join(cfg.out_dir, 'results.csv')}"
    )


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--grid", "grid_path", required=True, type=click.Path(exists=True))
def sweep_cmd(config_path, grid_path):
    """Run a lambda_s x lambda_f grid; rows append incrementally."""
    cfg = _load_config(config_path)
    with open(grid_path) as f:
        grid = json.load(f)
    reports, path = sweep(cfg, grid["lambda_s"], grid["lambda_f"])
    for (lam_s, lam_f), stats in summarize(reports).items():
        click.echo(
            f"lambda_s={lam_s} lambda_f={lam_f} "
            f"acc={stats['acc_mean']:.4f}±{stats['acc_std']:.4f} "
            f"dp={stats['dp_mean']:.4f}±{stats['dp_std']:.4f}"
        )
    click.echo(f"results={path}")


@main.command("eval")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--mask", default="test", show_default=True,
              type=click.Choice(["train", "val", "test"]))
def eval_cmd(checkpoint, config_path, seed, mask):
    """Evaluate a saved checkpoint on one split mask."""
    cfg = _load_config(config_path)
    dataset = load_run_dataset(cfg)
    masks = make_splits(dataset, cfg.split_fractions, seed)
    mlp = load_checkpoint(checkpoint)
    report = evaluate(cfg, mlp, dataset, masks, seed=seed, mask_name=mask)
    click.echo(
        f"acc={report.accuracy:.4f} dp={report.dp:.4f} eo={report.eo:.4f} "
        f"fairness_obj={report.fairness_obj:.6f} n_eval={report.n_eval}"
    )


@main.command("synth")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def synth_cmd(config_path, out_dir):
    """Generate a synthetic dataset and write node CSV plus edge list."""
    with open(config_path) as f:
        doc = json.load(f)
    cfg = SynthConfig(**doc)
    dataset = synth_generate(cfg)
    os.makedirs(out_dir, exist_ok=True)
    node_path = os.path.join(out_dir, "nodes.csv")
    edge_path = os.path.join(out_dir, "edges.txt")
    d = dataset.features.shape[1]
    with open(node_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "sensitive", "label"] + [f"f{k}" for k in range(d)])
        for i in range(dataset.graph.n):
            writer.writerow(
                [i, dataset.sensitive[i], dataset.labels[i]]
                + [repr(float(v)) for v in dataset.features[i]]
            )
    with open(edge_path, "w") as f:
        for i, j in dataset.graph.edges:
            f.write(f"{i} {j}\n")
    click.echo(
        f"n={dataset.graph.n} m={dataset.graph.num_edges} "
        f"nodes={node_path} edges={edge_path}"
    )


@main.command("metrics")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True))
def metrics_cmd(pred_path, truth_path):
    """Compute accuracy/dp/eo from prediction and truth CSVs.

    Prediction CSV: columns id,pred. Truth CSV: columns id,label,sensitive.
    """
    preds = {}
    with open(pred_path, newline="") as f:
        for row in csv.DictReader(f):
            preds[row["id"]] = int(row["pred"])
    ids, y_hat, y, s = [], [], [], []
    with open(truth_path, newline="") as f:
        for row in csv.DictReader(f):
            if row["id"] not in preds:
                raise ValueError(f"no prediction for id {row['id']}")
            ids.append(row["id"])
            y_hat.append(preds[row["id"]])
            y.append(int(row["label"]))
            s.append(int(row["sensitive"]))
    y_hat, y, s = np.array(y_hat), np.array(y), np.array(s)
    mask = np.ones(len(ids), dtype=bool)
    click.echo(
        f"acc={accuracy_metric(y_hat, y, mask):.4f} "
        f"dp={demographic_parity(y_hat, s, mask):.4f} "
        f"eo={equal_opportunity(y_hat, y, s, mask):.4f}"
    )


def entry():
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        print(f"error: {exc.format_message()}", file=sys.stderr)
        sys.exit(2)
    except click.Abort:
        sys.exit(130)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    entry()
