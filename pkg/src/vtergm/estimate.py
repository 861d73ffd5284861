"""Two-stage approximate maximum-likelihood estimation.

Stage one is partial stepping: each iteration draws short CD chains per
interval, forms a pseudo-observation that blends observed and sampled
statistics with a growing step length, and applies the closed-form update
of the normality-approximated log-likelihood ratio.  Stage two refines with
Newton-Raphson on the MCMC-approximated score and Hessian.  Standard errors
come from the sampled-statistic covariance at the learned parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import decompose
from .networks import NetworkSeries, ParamVector, ValuedNetwork, max_dim_value
from .sampler import ProposalConfig, sample_stat_batch
from .statistics import Covariates, ModelSpec, transition_statistics

__all__ = [
    "MomentEstimate",
    "FitSchedule",
    "FitResult",
    "EstimationError",
    "SingularStatisticsError",
    "moments",
    "pseudo_observation",
    "partial_step",
    "approx_llr",
    "algorithm1_partial_stepping",
    "algorithm2_newton_raphson",
    "standard_errors",
    "fit",
]


class EstimationError(RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory or []


class SingularStatisticsError(EstimationError):
    """The summed statistic covariance is singular beyond ridge repair,
    typically because two statistics are collinear on the data."""


@dataclass(frozen=True)
class MomentEstimate:
    """Sample mean and (population-style) covariance of statistic vectors."""

    mu: np.ndarray
    sigma: np.ndarray
    sample_size: int


def _moments_from_matrix(stats: np.ndarray) -> MomentEstimate:
    s = stats.shape[0]
    if s < 2:
        raise ValueError("moment estimation needs at least two samples")
    mu = stats.mean(axis=0)
    centered = stats - mu
    sigma = centered.T @ centered / s
    return MomentEstimate(mu=mu, sigma=sigma, sample_size=s)


def moments(samples, prev: ValuedNetwork, model: ModelSpec, covs: Covariates | None = None) -> MomentEstimate:
    """Moments of the concatenated [g+, g-] statistics of sampled networks."""
    rows = [transition_statistics(model, decompose(prev, net), covs) for net in samples]
    return _moments_from_matrix(np.asarray(rows))


def pseudo_observation(gamma: float, g_obs_sum: np.ndarray, mu_sum: np.ndarray) -> np.ndarray:
    if not 0.0 < gamma <= 1.0:
        raise ValueError("step length gamma must lie in (0, 1]")
    return gamma * np.asarray(g_obs_sum, float) + (1.0 - gamma) * np.asarray(mu_sum, float)


def _ridge_solve(sigma_sum: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve sigma_sum @ x = rhs with escalating ridge regularization."""
    sigma_sum = np.asarray(sigma_sum, float)
    p = sigma_sum.shape[0]
    ridge = 1e-8 * max(np.trace(sigma_sum), 1e-300) / p
    for attempt in range(4):
        try:
            x = np.linalg.solve(sigma_sum + ridge * np.eye(p), rhs)
        except np.linalg.LinAlgError:
            x = None
        if x is not None and np.all(np.isfinite(x)):
            return x
        ridge *= 2.0
    raise SingularStatisticsError(
        "summed statistic covariance is singular; check for collinear statistics"
    )


def partial_step(
    eta_prev: ParamVector, xi_hat: np.ndarray, mu_sum: np.ndarray, sigma_sum: np.ndarray
) -> ParamVector:
    """Closed-form maximizer of the normality-approximated likelihood ratio."""
    step = _ridge_solve(sigma_sum, np.asarray(xi_hat, float) - np.asarray(mu_sum, float))
    return ParamVector.from_concat(eta_prev.concat() + step, eta_prev.p_plus)


def _as_vec(eta) -> np.ndarray:
    return eta.concat() if isinstance(eta, ParamVector) else np.asarray(eta, float)


def approx_llr(eta, eta0, g_obs_sum, mu_sum, sigma_sum) -> float:
    """Normality-approximated log-likelihood ratio between eta and eta0."""
    d = _as_vec(eta) - _as_vec(eta0)
    lin = float(d @ (np.asarray(g_obs_sum, float) - np.asarray(mu_sum, float)))
    quad = 0.5 * float(d @ np.asarray(sigma_sum, float) @ d)
    return lin - quad


@dataclass(frozen=True)
class FitSchedule:
    """Iteration counts, sample sizes and CD chain lengths for both stages.

    ``None`` chain lengths resolve against the node count at fit time:
    stage 1 uses n transitions, stage 2 uses 2n, and the standard-error
    pass uses 20*n*n, mirroring the reference learning schedules.
    """

    stage1_iters: int = 20
    stage1_samples: int = 100
    stage1_cd_steps: int | None = None
    stage2_iters: int = 10
    stage2_samples: int = 1000
    stage2_cd_steps: int | None = None
    se_samples: int = 1000
    se_cd_steps: int | None = None
    eta0: ParamVector | None = None

    def resolved(self, n: int) -> "FitSchedule":
        return replace(
            self,
            stage1_cd_steps=self.stage1_cd_steps or n,
            stage2_cd_steps=self.stage2_cd_steps or 2 * n,
            se_cd_steps=self.se_cd_steps or 20 * n * n,
        )


@dataclass
class FitResult:
    eta: ParamVector | list[ParamVector]
    std_errors: np.ndarray | list[np.ndarray]
    fisher_info: np.ndarray | list[np.ndarray]
    trajectory: list
    schedule: FitSchedule
    seed: int | None
    heterogeneous: bool
    stat_names: list[str]

    def to_dict(self) -> dict:
        def block(eta, se):
            return {
                "eta_plus": [float(x) for x in eta.eta_plus],
                "eta_minus": [float(x) for x in eta.eta_minus],
                "std_errors": [float(x) for x in np.asarray(se)],
            }

        out = {
            "heterogeneous": self.heterogeneous,
            "statistics": list(self.stat_names),
            "seed": self.seed,
            "schedule": {
                k: getattr(self.schedule, k)
                for k in (
                    "stage1_iters", "stage1_samples", "stage1_cd_steps",
                    "stage2_iters", "stage2_samples", "stage2_cd_steps",
                    "se_samples", "se_cd_steps",
                )
            },
            "trajectory": [
                {"stage": st, "iteration": c, "eta": [float(x) for x in e], "score_norm": float(s)}
                for (st, c, e, s) in self.trajectory
            ],
        }
        if self.heterogeneous:
            out["intervals"] = [
                {"t": t + 2, **block(eta, se)}
                for t, (eta, se) in enumerate(zip(self.eta, self.std_errors))
            ]
        else:
            out.update(block(self.eta, self.std_errors))
        return out


@dataclass(frozen=True)
class _Interval:
    prev: ValuedNetwork
    obs: ValuedNetwork
    g_obs: np.ndarray
    m: int


def _intervals(series: NetworkSeries, model: ModelSpec, covs: Covariates) -> list[_Interval]:
    out = []
    if model.m is None:
        # a single shared cap must dominate every observed diminution network
        shared_m = max(max_dim_value(series, t) for t in range(2, series.T + 1))
        shared_m = max(shared_m, 1)
    else:
        shared_m = int(model.m)
    for t in range(2, series.T + 1):
        prev = series.networks[t - 2]
        obs = series.networks[t - 1]
        g_obs = transition_statistics(model, decompose(prev, obs), covs)
        out.append(_Interval(prev=prev, obs=obs, g_obs=g_obs, m=shared_m))
    return out


def _stage_moments(intervals, model, covs, eta, samples, cd_steps, rng, cfg):
    """One sampling sweep over all intervals; returns summed mu, Sigma, g_obs."""
    p = model.p_plus + model.p_minus
    mu_sum = np.zeros(p)
    sigma_sum = np.zeros((p, p))
    g_obs_sum = np.zeros(p)
    for itv in intervals:
        stats = sample_stat_batch(
            cd_steps, eta, itv.prev, itv.obs, model, samples, rng,
            covs=covs, m=itv.m, cfg=cfg,
        )
        mom = _moments_from_matrix(stats)
        mu_sum += mom.mu
        sigma_sum += mom.sigma
        g_obs_sum += itv.g_obs
    return mu_sum, sigma_sum, g_obs_sum


def _run_stage1(intervals, model, covs, schedule, eta, rng, trajectory, cfg):
    C = schedule.stage1_iters
    for c in range(1, C + 1):
        mu_sum, sigma_sum, g_obs_sum = _stage_moments(
            intervals, model, covs, eta,
            schedule.stage1_samples, schedule.stage1_cd_steps, rng, cfg,
        )
        gamma = c / C
        xi = pseudo_observation(gamma, g_obs_sum, mu_sum)
        eta = partial_step(eta, xi, mu_sum, sigma_sum)
        score = g_obs_sum - mu_sum
        trajectory.append(("partial", c, eta.concat().copy(), float(np.linalg.norm(score))))
        if not np.all(np.isfinite(eta.concat())):
            raise EstimationError("non-finite parameter during partial stepping", trajectory)
    return eta


def _run_stage2(intervals, model, covs, schedule, eta, rng, trajectory, cfg):
    min_norm = np.inf
    for c in range(1, schedule.stage2_iters + 1):
        mu_sum, sigma_sum, g_obs_sum = _stage_moments(
            intervals, model, covs, eta,
            schedule.stage2_samples, schedule.stage2_cd_steps, rng, cfg,
        )
        score = g_obs_sum - mu_sum
        # eta <- eta - H^{-1} S with H = -sigma_sum
        step = _ridge_solve(sigma_sum, score)
        eta = ParamVector.from_concat(eta.concat() + step, eta.p_plus)
        norm = float(np.linalg.norm(score))
        trajectory.append(("newton", c, eta.concat().copy(), norm))
        min_norm = min(min_norm, norm)
        if c > 1 and norm > 10.0 * min_norm + 1e-6:
            raise EstimationError(
                f"Newton-Raphson diverging: score norm {norm:.3g} grew past "
                f"10x its minimum {min_norm:.3g}",
                trajectory,
            )
        if not np.all(np.isfinite(eta.concat())):
            raise EstimationError("non-finite parameter during Newton-Raphson", trajectory)
    return eta


def algorithm1_partial_stepping(
    series: NetworkSeries,
    model: ModelSpec,
    schedule: FitSchedule,
    rng: np.random.Generator,
    covs: Covariates | None = None,
) -> ParamVector:
    covs = covs if covs is not None else Covariates.from_series(series)
    schedule = schedule.resolved(series.n)
    eta = schedule.eta0 or ParamVector.zeros(model.p_plus, model.p_minus)
    cfg = ProposalConfig(pi0=model.pi0)
    return _run_stage1(_intervals(series, model, covs), model, covs, schedule, eta, rng, [], cfg)


def algorithm2_newton_raphson(
    series: NetworkSeries,
    model: ModelSpec,
    schedule: FitSchedule,
    eta_init: ParamVector,
    rng: np.random.Generator,
    covs: Covariates | None = None,
) -> ParamVector:
    covs = covs if covs is not None else Covariates.from_series(series)
    schedule = schedule.resolved(series.n)
    cfg = ProposalConfig(pi0=model.pi0)
    return _run_stage2(_intervals(series, model, covs), model, covs, schedule, eta_init, rng, [], cfg)


def standard_errors(
    eta: ParamVector,
    series: NetworkSeries,
    model: ModelSpec,
    n_samples: int,
    cd_steps: int,
    rng: np.random.Generator,
    covs: Covariates | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Fisher information (summed statistic covariance at eta) and its
    implied standard errors, from fresh chains started at each observed
    network."""
    covs = covs if covs is not None else Covariates.from_series(series)
    cfg = ProposalConfig(pi0=model.pi0)
    intervals = _intervals(series, model, covs)
    p = model.p_plus + model.p_minus
    info = np.zeros((p, p))
    for itv in intervals:
        stats = sample_stat_batch(
            cd_steps, eta, itv.prev, itv.obs, model, n_samples, rng,
            covs=covs, m=itv.m, cfg=cfg,
        )
        info += _moments_from_matrix(stats).sigma
    eigvals = np.linalg.eigvalsh(info)
    if eigvals.min() <= 1e-12 * max(eigvals.max(), 1.0):
        raise SingularStatisticsError(
            "Fisher information is not positive definite; some statistics "
            "are not identified on this data"
        )
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise SingularStatisticsError(
            "Fisher information could not be inverted; some statistics "
            "are not identified on this data"
        ) from exc
    return np.sqrt(np.diag(cov)), info


def _fit_homogeneous(series, model, schedule, rng, covs, seed):
    schedule = schedule.resolved(series.n)
    cfg = ProposalConfig(pi0=model.pi0)
    intervals = _intervals(series, model, covs)
    trajectory: list = []
    eta = schedule.eta0 or ParamVector.zeros(model.p_plus, model.p_minus)
    eta = _run_stage1(intervals, model, covs, schedule, eta, rng, trajectory, cfg)
    if schedule.stage2_iters > 0:
        eta = _run_stage2(intervals, model, covs, schedule, eta, rng, trajectory, cfg)
    se, info = standard_errors(
        eta, series, model, schedule.se_samples, schedule.se_cd_steps, rng, covs
    )
    return FitResult(
        eta=eta,
        std_errors=se,
        fisher_info=info,
        trajectory=trajectory,
        schedule=schedule,
        seed=seed,
        heterogeneous=False,
        stat_names=model.stat_names(),
    )


def fit(
    series: NetworkSeries,
    model: ModelSpec,
    schedule: FitSchedule | None = None,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
    covs: Covariates | None = None,
) -> FitResult:
    """Full pipeline: partial stepping, Newton-Raphson, standard errors.

    Heterogeneous mode runs the pipeline independently per interval, each
    with its own diminution cap read from the observed data.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    schedule = schedule or FitSchedule()
    covs = covs if covs is not None else Covariates.from_series(series)
    if not model.heterogeneous:
        return _fit_homogeneous(series, model, schedule, rng, covs, seed)

    from dataclasses import replace as _replace

    etas, ses, infos, trajectory = [], [], [], []
    for t in range(2, series.T + 1):
        sub = NetworkSeries(
            networks=series.networks[t - 2 : t],
            nodal_attrs=series.nodal_attrs,
            dyadic_covs=series.dyadic_covs,
            nodes=series.nodes,
        )
        m_t = model.m if model.m is not None else max(max_dim_value(series, t), 1)
        sub_model = _replace(model, heterogeneous=False, m=m_t)
        res = _fit_homogeneous(sub, sub_model, schedule, rng, covs, seed)
        etas.append(res.eta)
        ses.append(res.std_errors)
        infos.append(res.fisher_info)
        trajectory.extend((f"t={t}:{st}", c, e, s) for st, c, e, s in res.trajectory)
    return FitResult(
        eta=etas,
        std_errors=ses,
        fisher_info=infos,
        trajectory=trajectory,
        schedule=schedule.resolved(series.n),
        seed=seed,
        heterogeneous=True,
        stat_names=model.stat_names(),
    )
