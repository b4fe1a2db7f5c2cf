"""Command-line front end for the wine-spoilage toolkit.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure. All commands are deterministic under a fixed seed; reports carry
timestamps in a separate metadata field so payloads stay byte-comparable.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as ds_mod
from . import evaluate as ev
from .errors import (
    ConfigError,
    InputError,
    IntegrityError,
    ParseError,
    ProtocolError,
    TrainingError,
)
from .features import (
    fingerprint_matrix,
    fingerprint_names,
    read_fingerprints,
    write_fingerprints,
)
from .selection import rfecv_select
from .windows import WindowPlan, select_earliest, sweep, window_to_seconds


def _parse_counts(text: str) -> dict[str, int]:
    counts = {}
    for part in text.split(","):
        label, _, value = part.partition("=")
        counts[label.strip()] = int(value)
    return counts


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise click.UsageError(f"config file {path} not found")
    with open(p) as fh:
        return json.load(fh)


@click.group()
@click.option("--workers", type=int, default=1, show_default=True,
              help="Worker processes (results are independent of this value).")
@click.pass_context
def cli(ctx, workers):
    """Wine-spoilage E-Nose pipelines: conventional SVM and rapid MLP."""
    ctx.ensure_object(dict)
    ctx.obj["workers"] = workers


@cli.command()
@click.option("--config", "config_path", type=str, default=None,
              help="JSON generator config overrides.")
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--counts", type=str, default=None,
              help="Per-class counts, e.g. HQ=3,AQ=3,LQ=3,Ea=0.")
@click.option("--bottles", type=str, default=None,
              help="Per-class bottle counts, e.g. HQ=2,AQ=2,LQ=2.")
@click.option("--noise-std", type=float, default=None)
@click.option("--out", type=str, required=True, help="Output dataset directory.")
def generate(config_path, seed, counts, bottles, noise_std, out):
    """Write a synthetic dataset (traces + manifest)."""
    cfg = _load_config(config_path)
    kwargs = {
        "seed": cfg.get("seed", seed),
        "counts": cfg.get("counts"),
        "bottles_per_class": cfg.get("bottles_per_class"),
    }
    if counts:
        kwargs["counts"] = _parse_counts(counts)
    if bottles:
        kwargs["bottles_per_class"] = _parse_counts(bottles)
    if kwargs["counts"] and not bottles and "bottles_per_class" not in cfg:
        kwargs["bottles_per_class"] = {
            label: max(1, min(ds_mod.DEFAULT_BOTTLES.get(label, 2), n))
            for label, n in kwargs["counts"].items()
        }
    gen_cfg = ds_mod.default_generator_config(
        **{k: v for k, v in kwargs.items() if v is not None}
    )
    if noise_std is not None:
        gen_cfg.noise_std = noise_std
    elif "noise_std" in cfg:
        gen_cfg.noise_std = cfg["noise_std"]
    dataset = ds_mod.generate_synthetic(gen_cfg)
    ds_mod.write_dataset(dataset, out)
    click.echo(f"wrote {len(dataset)} measurements to {out}")
    click.echo(json.dumps(dataset.manifest["class_counts"]))


@cli.command()
@click.argument("dataset_dir", type=str)
@click.option("--out", type=str, required=True, help="Fingerprint CSV path.")
def extract(dataset_dir, out):
    """Extract the 138-column fingerprint matrix."""
    dataset = ds_mod.load_dataset(dataset_dir)
    if not dataset.measurements:
        raise InputError("dataset is empty")
    X, labels, bottles, _ = fingerprint_matrix(dataset)
    write_fingerprints(out, X, labels, bottles)
    click.echo(f"wrote {X.shape[0]}x{X.shape[1] + 2} matrix to {out}")


@cli.command()
@click.argument("fingerprints", type=str)
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--step", type=int, default=1, show_default=True)
@click.option("--kernel-scale", type=float, default=8.3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=str, required=True, help="Selection report JSON.")
def select(fingerprints, k, step, kernel_scale, seed, out):
    """Run RFECV on a fingerprint CSV."""
    X, labels, bottles, names = read_fingerprints(fingerprints)
    result = rfecv_select(
        X, np.asarray(labels), np.asarray(bottles),
        k=k, step=step, kernel_scale=kernel_scale, seed=seed,
    )
    Path(out).write_text(result.to_json(names=names) + "\n")
    click.echo(f"chose {result.chosen_size} of {X.shape[1]} features -> {out}")


@cli.command()
@click.argument("dataset_dir", type=str)
@click.option("--pipeline", type=click.Choice(["conventional", "rapid"]),
              default="conventional", show_default=True)
@click.option("--repetitions", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--window-t", type=int, default=1, show_default=True,
              help="Window index for the rapid pipeline.")
@click.option("--kernel-scale", type=float, default=8.3, show_default=True)
@click.option("--epochs", type=int, default=300, show_default=True)
@click.option("--protocol", type=str, default="loo", show_default=True,
              help='"loo" or "kfold:K".')
@click.option("--selection-step", type=int, default=1, show_default=True,
              help="Features removed per RFE round (conventional pipeline).")
@click.option("--selection-k", type=int, default=5, show_default=True)
@click.option("--out", type=str, required=True, help="Report path stem.")
def run(dataset_dir, pipeline, repetitions, seed, window_t, kernel_scale,
        epochs, protocol, selection_step, selection_k, out):
    """Run a full pipeline and write JSON + text reports."""
    dataset = ds_mod.load_dataset(dataset_dir)
    report = ev.run_experiment(
        dataset,
        pipeline=pipeline,
        repetitions=repetitions,
        seed=seed,
        window_t=window_t,
        svm_params={"kernel_scale": kernel_scale},
        mlp_params={"epochs": epochs},
        selection_params={"step": selection_step, "k": selection_k},
        protocol=_parse_protocol(protocol),
    )
    Path(out + ".json").write_text(report.to_json() + "\n")
    Path(out + ".txt").write_text(report.text_table() + "\n")
    click.echo(report.text_table())


def _parse_protocol(text: str):
    if text == "loo":
        return "loo"
    if text.startswith("kfold:"):
        return ("kfold", int(text.split(":", 1)[1]))
    raise click.UsageError(f'protocol must be "loo" or "kfold:K", got {text!r}')


@cli.command("sweep")
@click.argument("dataset_dir", type=str)
@click.option("--repetitions", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--protocol", type=str, default="kfold:5", show_default=True)
@click.option("--epochs", type=int, default=300, show_default=True)
@click.option("--t-values", type=str, default=None,
              help="Comma-separated window indices (default: all).")
@click.option("--epsilon", type=float, default=0.01, show_default=True)
@click.option("--out", type=str, required=True, help="Report path stem.")
def sweep_cmd(dataset_dir, repetitions, seed, protocol, epochs, t_values,
              epsilon, out):
    """Sweep rising windows with per-window MLPs; report accuracy vs time."""
    dataset = ds_mod.load_dataset(dataset_dir)
    plan = WindowPlan()
    ts = [int(v) for v in t_values.split(",")] if t_values else None
    result = sweep(
        dataset, plan,
        protocol=_parse_protocol(protocol),
        train_cfg={"epochs": epochs},
        repetitions=repetitions,
        seed=seed,
        t_values=ts,
    )
    Path(out + ".json").write_text(result.to_json() + "\n")
    result.write_csv(out + ".csv")
    chosen = select_earliest(result, epsilon=epsilon)
    rate = dataset.measurements[0].sample_rate_hz
    click.echo(
        f"earliest adequate window: t={chosen}"
        f" ({window_to_seconds(chosen, plan.delta, rate):.2f} s)"
    )


@cli.command()
@click.argument("report_a", type=str)
@click.argument("report_b", type=str)
def compare(report_a, report_b):
    """Compare two run reports (accuracy table + rank-sum test)."""
    a = ev.RunReport.from_json(Path(report_a).read_text())
    b = ev.RunReport.from_json(Path(report_b).read_text())
    if a.experiment != b.experiment:
        raise InputError(
            f"experiment tags differ: {a.experiment} vs {b.experiment}"
        )
    test = ev.mann_whitney_u(a.val_accuracies, b.val_accuracies)
    width = 28
    click.echo(f"{'':{width}}  {'A: ' + a.pipeline:>14}  {'B: ' + b.pipeline:>14}")
    rows = [
        ("Average accuracy (%)",
         f"{100 * a.val_mean:.2f}+/-{100 * a.val_std:.2g}",
         f"{100 * b.val_mean:.2f}+/-{100 * b.val_std:.2g}"),
        ("Time for recognition (s)",
         f"{a.recognition_seconds:.2f}", f"{b.recognition_seconds:.2f}"),
        ("Time for training (s)",
         f"{a.train_seconds:.3f}", f"{b.train_seconds:.3f}"),
        ("Input size", str(a.input_size), str(b.input_size)),
        ("Online capable",
         "yes" if a.pipeline == "rapid" else "no",
         "yes" if b.pipeline == "rapid" else "no"),
    ]
    for name, va, vb in rows:
        click.echo(f"{name:{width}}  {va:>14}  {vb:>14}")
    click.echo(
        f"Mann-Whitney U = {test.u_statistic:.1f},"
        f" p = {test.p_value:.4g} ({test.method})"
    )


@cli.command()
@click.argument("source", type=str)
@click.option("-n", "n_components", type=int, default=3, show_default=True)
@click.option("--out", type=str, required=True, help="Scores CSV path.")
def pca(source, n_components, out):
    """PCA scores from a fingerprint CSV or a dataset directory."""
    if Path(source).is_dir():
        dataset = ds_mod.load_dataset(source)
        X, labels, _, _ = fingerprint_matrix(dataset)
    else:
        X, labels, _, _ = read_fingerprints(source)
    model = ev.pca_fit(X, n_components)
    scores = ev.pca_scores(model, X)
    with open(out, "w") as fh:
        fh.write(",".join(f"pc{i + 1}" for i in range(n_components)) + ",label\n")
        for row, label in zip(scores, labels):
            fh.write(",".join(repr(float(v)) for v in row) + f",{label}\n")
    cumulative = float(np.sum(model.explained_variance_ratio))
    click.echo(
        f"wrote {scores.shape[0]} scores to {out};"
        f" cumulative variance {100 * cumulative:.1f}%"
    )


@cli.command()
@click.argument("dataset_dir", type=str)
def validate(dataset_dir):
    """Load a dataset directory and report invariant violations."""
    dataset = ds_mod.load_dataset(dataset_dir)
    problems = []
    for m in dataset.measurements:
        for v in ds_mod.validate_measurement(m):
            problems.append(f"{m.id}: {v}")
    if problems:
        for p in problems:
            click.echo(p, err=True)
        raise IntegrityError(f"{len(problems)} violations")
    click.echo(f"{len(dataset)} measurements OK")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except (ParseError, IntegrityError, ConfigError, InputError, ProtocolError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (TrainingError, FloatingPointError, np.linalg.LinAlgError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
