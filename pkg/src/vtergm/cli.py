"""Command-line interface."""

from __future__ import annotations

import sys

import click
import numpy as np

from . import dataio, gof as gof_mod
from .dynamics import decompose
from .estimate import EstimationError, FitResult, FitSchedule, fit as fit_pipeline
from .networks import DataError, ParamVector, ValuedNetwork, validate_series
from .sampler import ProposalConfig, simulate as simulate_chain
from .statistics import Covariates, SpecError, evaluate_vector, transition_statistics

DATA_EXIT = 3


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(DATA_EXIT)


def _load_series(path):
    try:
        series = dataio.load_series(path)
    except (DataError, OSError) as exc:
        _fail(str(exc))
    problems = validate_series(series)
    if problems:
        _fail("invalid series: " + "; ".join(problems))
    return series


def _load_model(path):
    try:
        return dataio.load_model_config(path)
    except (DataError, SpecError, OSError) as exc:
        _fail(str(exc))


def _schedule(overrides: dict, **flags) -> FitSchedule:
    merged = dict(overrides)
    merged.update({k: v for k, v in flags.items() if v is not None})
    return FitSchedule(**merged)


def _parse_eta(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        _fail(f"cannot parse coefficient list {text!r}")


@click.group()
def main():
    """Fit, simulate and forecast temporal models of count-valued networks."""


@main.command()
@click.option("--events", required=True, type=click.Path(exists=True), help="Event log: timestamp i j per line.")
@click.option("--out", required=True, type=click.Path(), help="Output series directory.")
@click.option("--bucket", default=86400, show_default=True, help="Bucket length in seconds.")
@click.option(
    "--merge-gap", default=20, show_default=True,
    help="Consecutive events for a pair with gaps at most this many seconds count as one contact.",
)
@click.option("--roster", type=click.Path(exists=True), default=None,
              help="Optional node roster file, one identifier per line; events for unknown nodes are errors.")
@click.option("--origin", type=int, default=None, help="Bucket origin timestamp (default: first event).")
def ingest(events, out, bucket, merge_gap, roster, origin):
    """Aggregate a raw contact-event log into a valued network series."""
    try:
        evts = dataio.load_events(events)
        roster_list = None
        if roster:
            with open(roster) as fh:
                roster_list = [ln.strip() for ln in fh if ln.strip()]
        series = dataio.aggregate_contacts(
            evts, bucket=bucket, merge_gap=merge_gap, roster=roster_list, origin=origin
        )
        dataio.save_series(series, out)
    except (DataError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"wrote {series.T} networks on {series.n} nodes to {out}")


@main.command()
@click.option("--series", "series_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
def stats(series_path, model_path):
    """Evaluate both processes' statistics over every transition."""
    series = _load_series(series_path)
    cfg = _load_model(model_path)
    model = cfg["model"]
    covs = Covariates.from_series(series)
    names = model.stat_names()
    click.echo("t\t" + "\t".join(f"aug:{n}" for n in names[: model.p_plus])
               + "\t" + "\t".join(f"dim:{n}" for n in names[model.p_plus:]))
    try:
        for t in range(2, series.T + 1):
            pair = decompose(series.networks[t - 2], series.networks[t - 1])
            g = transition_statistics(model, pair, covs)
            click.echo(f"{t}\t" + "\t".join(f"{x:.6g}" for x in g))
    except SpecError as exc:
        _fail(str(exc))


@main.command()
@click.option("--series", "series_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["homogeneous", "heterogeneous"]), default=None,
              help="Override the model config's heterogeneity flag.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output fit file (YAML).")
@click.option("--stage1-iters", type=int, default=None)
@click.option("--stage1-samples", type=int, default=None)
@click.option("--stage1-cd-steps", type=int, default=None)
@click.option("--stage2-iters", type=int, default=None)
@click.option("--stage2-samples", type=int, default=None)
@click.option("--stage2-cd-steps", type=int, default=None)
@click.option("--se-samples", type=int, default=None)
@click.option("--se-cd-steps", type=int, default=None)
def fit(series_path, model_path, mode, seed, out, **sched_flags):
    """Two-stage maximum-likelihood fit with standard errors."""
    series = _load_series(series_path)
    cfg = _load_model(model_path)
    model = cfg["model"]
    if mode is not None:
        from dataclasses import replace
        model = replace(model, heterogeneous=(mode == "heterogeneous"))
    schedule = _schedule(cfg["schedule"], **sched_flags)
    try:
        result = fit_pipeline(series, model, schedule=schedule, seed=seed)
    except (EstimationError, SpecError) as exc:
        _fail(str(exc))
    dataio.save_fit(result, out)
    _echo_fit(result, model)
    click.echo(f"wrote fit to {out}")


def _echo_fit(result: FitResult, model):
    names = model.stat_names()
    if result.heterogeneous:
        for t_idx, (eta, se) in enumerate(zip(result.eta, result.std_errors)):
            click.echo(f"interval t={t_idx + 2}:")
            _echo_block(names, eta, se, model.p_plus)
    else:
        _echo_block(names, result.eta, result.std_errors, model.p_plus)


def _echo_block(names, eta, se, p_plus):
    vec = eta.concat()
    for k, name in enumerate(names):
        proc = "aug" if k < p_plus else "dim"
        click.echo(f"  {proc}:{name}\t{vec[k]: .4f} ({se[k]:.4f})")


@main.command()
@click.option("--series", "series_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--eta-plus", required=True, help="Comma-separated augmentation coefficients.")
@click.option("--eta-minus", required=True, help="Comma-separated diminution coefficients.")
@click.option("--m", "m_override", type=int, default=None, help="Diminution cap override.")
@click.option("--t", "t_index", type=int, default=None,
              help="1-based index of the conditioning network (default: last).")
@click.option("--count", default=1, show_default=True)
@click.option("--cd-steps", type=int, default=None, help="MCMC transitions per sample (default 10*n*n).")
@click.option("--init", type=click.Choice(["all-ones", "prev"]), default="all-ones", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output series directory for the samples.")
def simulate(series_path, model_path, eta_plus, eta_minus, m_override, t_index,
             count, cd_steps, init, seed, out):
    """Sample networks conditional on an observed network at given coefficients."""
    series = _load_series(series_path)
    cfg = _load_model(model_path)
    model = cfg["model"]
    ep, em = _parse_eta(eta_plus), _parse_eta(eta_minus)
    if ep.size != model.p_plus or em.size != model.p_minus:
        _fail(
            f"coefficient lengths ({ep.size}, {em.size}) do not match the model "
            f"({model.p_plus}, {model.p_minus})"
        )
    eta = ParamVector(ep, em)
    t_index = t_index if t_index is not None else series.T
    if not 1 <= t_index <= series.T:
        _fail(f"conditioning index {t_index} out of range [1, {series.T}]")
    prev = series.networks[t_index - 1]
    n = series.n
    K = cd_steps if cd_steps is not None else 10 * n * n
    rng = np.random.default_rng(seed)
    covs = Covariates.from_series(series)
    init_net = prev if init == "prev" else None
    m = m_override if m_override is not None else model.m
    if m is None:
        _fail("simulation needs an explicit diminution cap (--m or model config)")
    try:
        sims = [
            simulate_chain(K, eta, prev, model, rng, init=init_net, covs=covs, m=m,
                           cfg=ProposalConfig(pi0=model.pi0))
            for _ in range(count)
        ]
    except SpecError as exc:
        _fail(str(exc))
    from .networks import NetworkSeries

    out_series = NetworkSeries(
        networks=(prev, *sims),
        nodal_attrs=series.nodal_attrs,
        dyadic_covs=series.dyadic_covs,
        nodes=series.nodes,
    )
    dataio.save_series(out_series, out)
    click.echo(f"wrote conditioning network plus {count} samples to {out}")


@main.command()
@click.option("--series", "series_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--count", default=100, show_default=True)
@click.option("--cd-steps", type=int, default=None, help="Transitions per simulated network (default 200*n*n).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--band", default=0.95, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output report TSV.")
def gof(series_path, model_path, fit_path, count, cd_steps, seed, band, out):
    """Simulate from a fitted model and compare statistics with the data."""
    series = _load_series(series_path)
    cfg = _load_model(model_path)
    model = cfg["model"]
    result = _load_fit(fit_path, model)
    K = cd_steps if cd_steps is not None else 200 * series.n * series.n
    rng = np.random.default_rng(seed)
    report = gof_mod.gof_simulate(result, series, model, count, K, rng, band=band)
    _write_report(report, out)
    click.echo(f"coverage at {band:.0%} band: {report.coverage_rate():.1%}; wrote {out}")


@main.command()
@click.option("--series", "series_path", required=True, type=click.Path())
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--fit", "fit_path", required=True, type=click.Path(exists=True))
@click.option("--times", default=None,
              help="Comma-separated 1-based time indices to forecast (default: T+1).")
@click.option("--count", default=100, show_default=True)
@click.option("--cd-steps", type=int, default=None, help="Transitions per forecast (default 200*n*n).")
@click.option("--chained/--no-chained", default=False, show_default=True,
              help="Condition each step on a sampled network from the previous step.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--band", default=0.95, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output report TSV.")
def forecast(series_path, model_path, fit_path, times, count, cd_steps, chained, seed, band, out):
    """Forecast future networks from a time-homogeneous fit."""
    series = _load_series(series_path)
    cfg = _load_model(model_path)
    model = cfg["model"]
    result = _load_fit(fit_path, model)
    horizon = (
        [int(x) for x in times.split(",")] if times else [series.T + 1]
    )
    K = cd_steps if cd_steps is not None else 200 * series.n * series.n
    rng = np.random.default_rng(seed)
    try:
        fc = gof_mod.forecast(
            result, series, model, horizon, count, K, rng, chained=chained, band=band
        )
    except ValueError as exc:
        _fail(str(exc))
    if fc.report is not None:
        _write_report(fc.report, out)
        click.echo(f"coverage vs held-out data: {fc.report.coverage_rate():.1%}; wrote {out}")
    else:
        _write_samples(fc, out)
        click.echo(f"no held-out observations; wrote forecast statistics to {out}")


def _write_report(report, out):
    lines = ["t\tprocess\tstatistic\tsample\tvalue\tobserved"]
    for row in report.rows():
        lines.append("\t".join(str(x) for x in row))
    lines.append("")
    lines.append("# t\tprocess\tstatistic\tobserved\tmedian\tband_lo\tband_hi\tquantile\tcovered")
    for row in report.summary_rows():
        lines.append("\t".join(f"{x:.6g}" if isinstance(x, float) else str(x) for x in row))
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_samples(fc, out):
    from .statistics import evaluate_vector  # noqa: F401 (kept local for clarity)

    lines = ["t\tsample\tdyad_sum"]
    for t, sims in fc.samples.items():
        for idx, net in enumerate(sims):
            lines.append(f"{t}\t{idx}\t{int(net.values.sum())}")
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _load_fit(path, model) -> FitResult:
    import yaml

    with open(path) as fh:
        raw = yaml.safe_load(fh)
    try:
        if raw["heterogeneous"]:
            etas = [
                ParamVector(np.array(b["eta_plus"]), np.array(b["eta_minus"]))
                for b in raw["intervals"]
            ]
            ses = [np.array(b["std_errors"]) for b in raw["intervals"]]
            return FitResult(
                eta=etas, std_errors=ses, fisher_info=[], trajectory=[],
                schedule=FitSchedule(), seed=raw.get("seed"),
                heterogeneous=True, stat_names=raw.get("statistics", []),
            )
        eta = ParamVector(np.array(raw["eta_plus"]), np.array(raw["eta_minus"]))
        return FitResult(
            eta=eta, std_errors=np.array(raw["std_errors"]), fisher_info=None,
            trajectory=[], schedule=FitSchedule(), seed=raw.get("seed"),
            heterogeneous=False, stat_names=raw.get("statistics", []),
        )
    except (KeyError, TypeError) as exc:
        _fail(f"{path}: not a recognizable fit file ({exc})")
