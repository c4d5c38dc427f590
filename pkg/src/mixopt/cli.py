"""Command line interface for the experiment harness.

Exit codes: 0 on success, 1 for config or input parse problems, 2 when one
or more cells (or the core operation of a subcommand) failed.
"""

from __future__ import annotations

import json
import sys

import click

from . import harness
from .errors import ConfigError, FitError, MixoptError
from .laws import fit_dynamic_law, fit_static_law


@click.group()
def main():
    """Data mixture optimization experiments on a simulated trainer."""


def _load(config_path):
    try:
        return harness.load_config(config_path)
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(1)


def _emit(report, fmt, out):
    text = harness.emit_report(report, fmt, out)
    if out is None:
        click.echo(text, nl=False)
    else:
        click.echo(f"wrote {out}", err=True)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed-override", type=int, default=None,
              help="Run only this seed instead of the config's list.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the report here instead of stdout.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
@click.option("--parallelism", type=int, default=1, show_default=True,
              help="Worker threads for independent cells.")
def run(config, seed_override, out, fmt, parallelism):
    """Run every (method, seed) cell of an experiment config."""
    cfg = _load(config)
    if parallelism < 1:
        click.echo("config error: --parallelism must be at least 1", err=True)
        sys.exit(1)
    report, _ = harness.run_experiment(cfg, seed_override=seed_override,
                                       parallelism=parallelism)
    _emit(report, fmt, out)
    if report["failures"]:
        click.echo(f"{report['failures']} cell(s) failed", err=True)
        sys.exit(2)


@main.group()
def analyze():
    """Analyses layered on top of experiment configs."""


@analyze.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed-override", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
def similarity(config, seed_override, out, fmt):
    """Score traced method parameters against estimated true dynamics."""
    cfg = _load(config)
    report = harness.analyze_similarity(cfg, seed_override=seed_override)
    _emit(report, fmt, out)
    if report["failures"]:
        click.echo(f"{report['failures']} cell(s) failed", err=True)
        sys.exit(2)


@analyze.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed-override", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True)
def greedy(config, seed_override, out, fmt):
    """Compare greedy round-by-round schedules against exhaustive search."""
    cfg = _load(config)
    try:
        report = harness.analyze_greedy(cfg, seed_override=seed_override)
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(1)
    _emit(report, fmt, out)
    if report["failures"]:
        click.echo(f"{report['failures']} comparison(s) failed", err=True)
        sys.exit(2)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed-override", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the loss log here instead of stdout.")
@click.option("--table", type=click.Path(dir_okay=False), default=None,
              help="Also write the candidate set as a plain-text table.")
def sweep(config, seed_override, out, table):
    """Train one run per sweep candidate and emit a loss log for `fit`."""
    cfg = _load(config)
    try:
        log = harness.run_candidate_sweep(cfg, seed_override=seed_override)
    except (MixoptError, ValueError) as err:
        click.echo(f"sweep failed: {type(err).__name__}: {err}", err=True)
        sys.exit(2)
    if table is not None:
        with open(table, "w") as fh:
            fh.write(log["candidates_table"])
        click.echo(f"wrote {table}", err=True)
    text = json.dumps(log, sort_keys=True, indent=2) + "\n"
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out}", err=True)


@main.command()
@click.argument("loss_log", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]),
              default="json", show_default=True,
              help="csv emits the residual table instead of the JSON document.")
@click.option("--residuals", type=click.Path(dir_okay=False), default=None,
              help="Also write residuals as CSV to this path.")
def fit(loss_log, out, fmt, residuals):
    """Fit a mixing law to a loss log produced by `sweep` or by hand."""
    try:
        with open(loss_log) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        click.echo(f"cannot read loss log: {err}", err=True)
        sys.exit(1)
    try:
        law = doc["law"]
        samples = doc["samples"]
        options = doc.get("options", {})
        if law == "static":
            mixtures = [s["mixture"] for s in samples]
            losses = [s["losses"] for s in samples]
            interaction, amplitude, asymptote, report = fit_static_law(
                mixtures, losses,
                huber_delta=options.get("huber_delta", 1e-3),
                restarts=options.get("restarts", 32),
                max_iter=options.get("max_iter", 500),
                random_state=options.get("seed", 0))
            params = {
                "interaction": [[float(v) for v in row] for row in interaction],
                "amplitude": [float(v) for v in amplitude],
                "asymptote": [float(v) for v in asymptote],
            }
        elif law == "dynamic":
            triples = [(s["before"], s["mixture"], s["after"]) for s in samples]
            interaction, report = fit_dynamic_law(triples)
            params = {"interaction": [[float(v) for v in row]
                                      for row in interaction]}
        else:
            click.echo(f"unknown law {law!r}", err=True)
            sys.exit(1)
    except (KeyError, TypeError) as err:
        click.echo(f"malformed loss log: {err!r}", err=True)
        sys.exit(1)
    except (FitError, MixoptError, ValueError) as err:
        click.echo(f"fit failed: {type(err).__name__}: {err}", err=True)
        sys.exit(2)
    payload = {"kind": "fit", "law": law, "params": params,
               "report": report.to_dict()}
    if residuals is not None:
        with open(residuals, "w") as fh:
            fh.write(report.residuals_csv())
        click.echo(f"wrote {residuals}", err=True)
    text = (report.residuals_csv() if fmt == "csv"
            else json.dumps(payload, sort_keys=True, indent=2) + "\n")
    if out is None:
        click.echo(text, nl=False)
    else:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out}", err=True)


if __name__ == "__main__":
    main()
