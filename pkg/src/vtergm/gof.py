"""Goodness of fit and forecasting by simulation.

Networks are simulated from a fitted model conditional on observed
predecessors, decomposed, and their statistic distributions compared with
the observed values.  The observed value's position is summarized as
rank/(count+1) so it never saturates at 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import decompose
from .estimate import FitResult
from .networks import NetworkSeries, ParamVector, ValuedNetwork
from .sampler import ProposalConfig, simulate
from .statistics import Covariates, ModelSpec, evaluate_vector

__all__ = ["GofCell", "GofReport", "gof_simulate", "forecast", "ForecastResult"]


@dataclass(frozen=True)
class GofCell:
    t: int
    process: str  # "aug" or "dim"
    statistic: str
    samples: np.ndarray
    observed: float
    quantile: float
    covered: bool


@dataclass(frozen=True)
class GofReport:
    cells: tuple[GofCell, ...]
    band: float

    def coverage_rate(self) -> float:
        return sum(c.covered for c in self.cells) / len(self.cells)

    def rows(self):
        """One row per (t, process, statistic, sample), for external plotting."""
        for c in self.cells:
            for idx, val in enumerate(c.samples):
                yield (c.t, c.process, c.statistic, idx, float(val), c.observed)

    def summary_rows(self):
        for c in self.cells:
            yield (
                c.t, c.process, c.statistic, c.observed,
                float(np.median(c.samples)),
                float(np.quantile(c.samples, 0.5 * (1 - self.band))),
                float(np.quantile(c.samples, 1 - 0.5 * (1 - self.band))),
                c.quantile, int(c.covered),
            )


def _observed_quantile(samples: np.ndarray, observed: float) -> float:
    n_less = int(np.sum(samples < observed))
    n_eq = int(np.sum(samples == observed))
    return (n_less + 0.5 * n_eq + 0.5) / (len(samples) + 1)


def _eta_for(fit: FitResult, t: int) -> ParamVector:
    if fit.heterogeneous:
        return fit.eta[t - 2]
    return fit.eta


def _cells_for_interval(
    t, prev, observed_cur, sims, model, covs, band
):
    """Build GOF cells for one interval from simulated successors of prev."""
    obs_pair = decompose(prev, observed_cur) if observed_cur is not None else None
    per_proc = {
        "aug": (model.aug_stats, lambda pair: pair.aug),
        "dim": (model.dim_stats, lambda pair: pair.dim),
    }
    sim_pairs = [decompose(prev, net) for net in sims]
    cells = []
    lo, hi = 0.5 * (1 - band), 1 - 0.5 * (1 - band)
    for proc, (specs, pick) in per_proc.items():
        sim_stats = np.array(
            [evaluate_vector(specs, pick(pair), covs) for pair in sim_pairs]
        )
        obs_stats = (
            evaluate_vector(specs, pick(obs_pair), covs) if obs_pair is not None else None
        )
        for k, spec in enumerate(specs):
            samples = sim_stats[:, k]
            observed = float(obs_stats[k]) if obs_stats is not None else float("nan")
            q = _observed_quantile(samples, observed) if obs_stats is not None else float("nan")
            covered = bool(lo <= q <= hi) if obs_stats is not None else False
            cells.append(
                GofCell(
                    t=t, process=proc, statistic=spec.name,
                    samples=samples, observed=observed, quantile=q, covered=covered,
                )
            )
    return cells


def _resolve_m(model: ModelSpec, fitted: FitResult | None, series, t) -> int:
    from .networks import max_dim_value

    if model.m is not None:
        return int(model.m)
    if t is not None and 2 <= t <= series.T:
        return max(max_dim_value(series, t), 1)
    return max(
        (max_dim_value(series, u) for u in range(2, series.T + 1)), default=1
    ) or 1


def gof_simulate(
    fit: FitResult,
    series: NetworkSeries,
    model: ModelSpec,
    count: int,
    K: int,
    rng: np.random.Generator,
    covs: Covariates | None = None,
    band: float = 0.95,
) -> GofReport:
    """Simulate ``count`` successors of each observed predecessor and compare
    statistic distributions against the observed transitions."""
    covs = covs if covs is not None else Covariates.from_series(series)
    cfg = ProposalConfig(pi0=model.pi0)
    cells = []
    for t in range(2, series.T + 1):
        prev = series.networks[t - 2]
        cur = series.networks[t - 1]
        eta = _eta_for(fit, t)
        m = _resolve_m(model, fit, series, t)
        sims = [
            simulate(K, eta, prev, model, rng, covs=covs, m=m, cfg=cfg)
            for _ in range(count)
        ]
        cells.extend(_cells_for_interval(t, prev, cur, sims, model, covs, band))
    return GofReport(cells=tuple(cells), band=band)


@dataclass(frozen=True)
class ForecastResult:
    samples: dict  # t -> list[ValuedNetwork]
    report: GofReport | None


def forecast(
    fit: FitResult,
    series: NetworkSeries,
    model: ModelSpec,
    horizon: list[int],
    count: int,
    K: int,
    rng: np.random.Generator,
    covs: Covariates | None = None,
    chained: bool = False,
    band: float = 0.95,
) -> ForecastResult:
    """Forecast networks at the requested (1-based) time indices.

    Unchained forecasts condition each step on the observed predecessor and
    are compared against held-out observations when present.  Chained mode
    conditions each step on a network sampled at the previous step; it is an
    extrapolation device and off by default.
    """
    if fit.heterogeneous:
        raise ValueError("forecasting requires a time-homogeneous fit")
    covs = covs if covs is not None else Covariates.from_series(series)
    cfg = ProposalConfig(pi0=model.pi0)
    eta = fit.eta
    m = _resolve_m(model, fit, series, None)
    horizon = sorted(horizon)
    samples: dict[int, list[ValuedNetwork]] = {}
    cells = []
    prev_chain: ValuedNetwork | None = None
    for t in horizon:
        if chained and prev_chain is not None:
            prev = prev_chain
        else:
            if not 2 <= t <= series.T + 1:
                raise ValueError(
                    f"no observed predecessor for t={t}; unchained forecasts "
                    f"need t in [2, {series.T + 1}]"
                )
            prev = series.networks[t - 2]
        sims = [
            simulate(K, eta, prev, model, rng, covs=covs, m=m, cfg=cfg)
            for _ in range(count)
        ]
        samples[t] = sims
        observed_cur = series.networks[t - 1] if t <= series.T else None
        if observed_cur is not None:
            cells.extend(_cells_for_interval(t, prev, observed_cur, sims, model, covs, band))
        if chained:
            prev_chain = sims[int(rng.integers(len(sims)))]
    report = GofReport(cells=tuple(cells), band=band) if cells else None
    return ForecastResult(samples=samples, report=report)
