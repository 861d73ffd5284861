"""Metropolis-Hastings sampling of a network conditional on its predecessor.

Proposals come from a zero-inflated Poisson centered a little above the
current dyad value; acceptance combines the Poisson and binomial reference
ratios with exponential tilts of both processes.  ``cd_sample`` starts the
chain at an observed network and runs a short, fixed number of transitions
(no burn-in); ``simulate`` starts from an arbitrary network for long runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .networks import ParamVector, ValuedNetwork
from .statistics import Covariates, ModelSpec, change_statistics, evaluate_vector

__all__ = [
    "ProposalConfig",
    "ChainState",
    "proposal_pmf",
    "proposal_logpmf",
    "propose_value",
    "log_acceptance",
    "mh_step",
    "cd_sample",
    "simulate",
    "sample_stat_batch",
]

DEBUG_RECHECK = False  # recompute stat caches from scratch after every accept


@dataclass(frozen=True)
class ProposalConfig:
    pi0: float = 0.2
    lambda_offset: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.pi0 < 1.0:
            raise ValueError("pi0 must lie in [0, 1)")
        if self.lambda_offset <= 0:
            raise ValueError("lambda_offset must be positive")


def proposal_logpmf(value: int, lam: float, pi0: float) -> float:
    """Log pmf of the zero-inflated Poisson proposal."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if value < 0:
        raise ValueError("proposal support is the nonnegative integers")
    if value == 0:
        return float(np.logaddexp(np.log(pi0) if pi0 > 0 else -np.inf, math.log1p(-pi0) - lam))
    return math.log1p(-pi0) - lam + value * math.log(lam) - math.lgamma(value + 1.0)


def proposal_pmf(value: int, lam: float, pi0: float) -> float:
    return math.exp(proposal_logpmf(value, lam, pi0))


def propose_value(current_val: int, cfg: ProposalConfig, rng: np.random.Generator) -> int:
    if rng.random() < cfg.pi0:
        return 0
    return int(rng.poisson(current_val + cfg.lambda_offset))


@dataclass
class ChainState:
    """Mutable chain state: the current network, its decomposition against the
    conditioning network, and incrementally maintained statistic caches."""

    cur: np.ndarray
    prev: np.ndarray
    aug: np.ndarray
    dim: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray
    directed: bool
    model: ModelSpec
    covs: Covariates
    accept_count: int = 0
    step_count: int = 0
    det_reject_count: int = 0

    def current_network(self) -> ValuedNetwork:
        return ValuedNetwork(self.cur.copy(), directed=self.directed)

    def recompute_stats(self) -> tuple[np.ndarray, np.ndarray]:
        aug_net = ValuedNetwork(self.aug.copy(), directed=self.directed)
        dim_net = ValuedNetwork(self.dim.copy(), directed=self.directed)
        gp = evaluate_vector(self.model.aug_stats, aug_net, self.covs)
        gm = evaluate_vector(self.model.dim_stats, dim_net, self.covs)
        return gp, gm


def init_chain(
    prev: ValuedNetwork,
    start: ValuedNetwork,
    model: ModelSpec,
    covs: Covariates | None = None,
) -> ChainState:
    if prev.n != start.n or prev.directed != start.directed:
        raise ValueError("conditioning and starting networks must match in shape and orientation")
    covs = covs or Covariates.empty()
    cur = start.values.copy()
    prev_v = prev.values.copy()
    state = ChainState(
        cur=cur,
        prev=prev_v,
        aug=np.maximum(prev_v, cur),
        dim=np.minimum(prev_v, cur),
        g_plus=np.empty(model.p_plus),
        g_minus=np.empty(model.p_minus),
        directed=prev.directed,
        model=model,
        covs=covs,
    )
    state.g_plus, state.g_minus = state.recompute_stats()
    return state


def log_acceptance(
    state: ChainState,
    dyad: tuple[int, int],
    proposed_val: int,
    eta: ParamVector,
    m: int,
    cfg: ProposalConfig | None = None,
) -> float:
    """Log MH acceptance ratio for a proposed dyad value.

    Returns -inf when the induced diminution value exceeds the cap ``m``
    (the target has zero mass there, so the proposal is dead on arrival).
    """
    cfg = cfg or ProposalConfig(pi0=state.model.pi0)
    i, j = dyad
    cv = int(state.cur[i, j])
    pv = int(state.prev[i, j])
    aug_old, aug_new = max(pv, cv), max(pv, proposed_val)
    dim_old, dim_new = min(pv, cv), min(pv, proposed_val)
    if dim_new > m:
        return -math.inf
    loga = proposal_logpmf(cv, proposed_val + cfg.lambda_offset, cfg.pi0)
    loga -= proposal_logpmf(proposed_val, cv + cfg.lambda_offset, cfg.pi0)
    loga += math.lgamma(aug_old + 1.0) - math.lgamma(aug_new + 1.0)
    # binomial(m, dim_new) / binomial(m, dim_old), in log space
    loga += math.lgamma(dim_old + 1.0) + math.lgamma(m - dim_old + 1.0)
    loga -= math.lgamma(dim_new + 1.0) + math.lgamma(m - dim_new + 1.0)
    dgp = change_statistics(
        state.model.aug_stats, state.aug, dyad, aug_old, aug_new, state.covs, state.directed
    )
    dgm = change_statistics(
        state.model.dim_stats, state.dim, dyad, dim_old, dim_new, state.covs, state.directed
    )
    loga += float(eta.eta_plus @ dgp) + float(eta.eta_minus @ dgm)
    return loga


def _pick_dyad(n: int, directed: bool, rng: np.random.Generator) -> tuple[int, int]:
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    if not directed and i > j:
        i, j = j, i
    return i, j


def _apply(state: ChainState, i: int, j: int, prop: int, dgp, dgm) -> None:
    pv = state.prev[i, j]
    state.cur[i, j] = prop
    state.aug[i, j] = max(pv, prop)
    state.dim[i, j] = min(pv, prop)
    if not state.directed:
        state.cur[j, i] = prop
        state.aug[j, i] = state.aug[i, j]
        state.dim[j, i] = state.dim[i, j]
    state.g_plus += dgp
    state.g_minus += dgm


def mh_step(
    state: ChainState,
    eta: ParamVector,
    m: int,
    cfg: ProposalConfig,
    rng: np.random.Generator,
) -> bool:
    """One MH transition: pick a dyad uniformly, propose, accept or reject."""
    i, j = _pick_dyad(state.cur.shape[0], state.directed, rng)
    prop = propose_value(int(state.cur[i, j]), cfg, rng)
    u = rng.random()
    accepted = _step_with(state, (i, j), prop, u, eta, m, cfg)
    if DEBUG_RECHECK and accepted:
        gp, gm = state.recompute_stats()
        assert np.allclose(gp, state.g_plus, atol=1e-9), (gp, state.g_plus)
        assert np.allclose(gm, state.g_minus, atol=1e-9), (gm, state.g_minus)
    return accepted


def _step_with(
    state: ChainState,
    dyad: tuple[int, int],
    prop: int,
    u: float,
    eta: ParamVector,
    m: int,
    cfg: ProposalConfig,
) -> bool:
    """One MH step with injected randomness; mirrors the compiled kernel."""
    i, j = dyad
    state.step_count += 1
    cv = int(state.cur[i, j])
    pv = int(state.prev[i, j])
    if min(pv, prop) > m:
        state.det_reject_count += 1
        return False
    loga = log_acceptance(state, dyad, prop, eta, m, cfg)
    if loga >= 0.0 or u < math.exp(loga):
        aug_old, aug_new = max(pv, cv), max(pv, prop)
        dim_old, dim_new = min(pv, cv), min(pv, prop)
        dgp = change_statistics(
            state.model.aug_stats, state.aug, dyad, aug_old, aug_new, state.covs, state.directed
        )
        dgm = change_statistics(
            state.model.dim_stats, state.dim, dyad, dim_old, dim_new, state.covs, state.directed
        )
        _apply(state, i, j, prop, dgp, dgm)
        state.accept_count += 1
        return True
    return False


def _resolve_m(model: ModelSpec, m: int | None) -> int:
    if m is not None:
        return int(m)
    if model.m is None:
        raise ValueError("the sampler needs a resolved diminution cap m")
    return int(model.m)


def _run(
    prev: ValuedNetwork,
    start: ValuedNetwork,
    steps: int,
    eta: ParamVector,
    model: ModelSpec,
    covs: Covariates | None,
    rng: np.random.Generator,
    m: int | None = None,
    cfg: ProposalConfig | None = None,
    engine: str = "numba",
) -> ChainState:
    if steps < 1:
        raise ValueError("at least one MCMC transition is required")
    m = _resolve_m(model, m)
    cfg = cfg or ProposalConfig(pi0=model.pi0)
    state = init_chain(prev, start, model, covs)
    if engine == "python":
        for _ in range(steps):
            mh_step(state, eta, m, cfg, rng)
        return state
    if engine != "numba":
        raise ValueError(f"unknown engine {engine!r}")
    covs = covs or Covariates.empty()
    codes_p, w_p = _kernel.compile_stats(model.aug_stats, prev.n, covs)
    codes_m, w_m = _kernel.compile_stats(model.dim_stats, prev.n, covs)
    seed = int(rng.integers(0, 2**31 - 1))
    acc, det = _kernel.run_chain(
        state.cur, state.prev, state.aug, state.dim, state.g_plus, state.g_minus,
        codes_p, w_p, eta.eta_plus, codes_m, w_m, eta.eta_minus,
        m, cfg.pi0, cfg.lambda_offset, state.directed, steps, seed,
    )
    state.step_count += steps
    state.accept_count += int(acc)
    state.det_reject_count += int(det)
    return state


def cd_sample(
    K: int,
    eta: ParamVector,
    prev: ValuedNetwork,
    obs: ValuedNetwork,
    model: ModelSpec,
    rng: np.random.Generator,
    covs: Covariates | None = None,
    m: int | None = None,
    cfg: ProposalConfig | None = None,
    engine: str = "numba",
) -> ValuedNetwork:
    """K transitions starting from the observed network; no burn-in discarded."""
    state = _run(prev, obs, K, eta, model, covs, rng, m=m, cfg=cfg, engine=engine)
    return state.current_network()


def simulate(
    K: int,
    eta: ParamVector,
    prev: ValuedNetwork,
    model: ModelSpec,
    rng: np.random.Generator,
    init: ValuedNetwork | None = None,
    covs: Covariates | None = None,
    m: int | None = None,
    cfg: ProposalConfig | None = None,
    engine: str = "numba",
) -> ValuedNetwork:
    """Long-run sampling from an arbitrary start (default: all ones off-diagonal)."""
    if init is None:
        ones = np.ones((prev.n, prev.n), dtype=np.int64)
        np.fill_diagonal(ones, 0)
        init = ValuedNetwork(ones, directed=prev.directed)
    state = _run(prev, init, K, eta, model, covs, rng, m=m, cfg=cfg, engine=engine)
    return state.current_network()


def sample_stat_batch(
    K: int,
    eta: ParamVector,
    prev: ValuedNetwork,
    obs: ValuedNetwork,
    model: ModelSpec,
    count: int,
    rng: np.random.Generator,
    covs: Covariates | None = None,
    m: int | None = None,
    cfg: ProposalConfig | None = None,
) -> np.ndarray:
    """Draw ``count`` independent CD chains and return their final [g+, g-]
    statistic vectors (count x p).  The caches carry the statistics, so no
    per-sample full evaluation is needed."""
    m = _resolve_m(model, m)
    cfg = cfg or ProposalConfig(pi0=model.pi0)
    covs = covs or Covariates.empty()
    base = init_chain(prev, obs, model, covs)
    codes_p, w_p = _kernel.compile_stats(model.aug_stats, prev.n, covs)
    codes_m, w_m = _kernel.compile_stats(model.dim_stats, prev.n, covs)
    p = model.p_plus + model.p_minus
    out = np.empty((count, p))
    for idx in range(count):
        cur = base.cur.copy()
        aug = base.aug.copy()
        dim = base.dim.copy()
        gp = base.g_plus.copy()
        gm = base.g_minus.copy()
        seed = int(rng.integers(0, 2**31 - 1))
        _kernel.run_chain(
            cur, base.prev, aug, dim, gp, gm,
            codes_p, w_p, eta.eta_plus, codes_m, w_m, eta.eta_minus,
            m, cfg.pi0, cfg.lambda_offset, base.directed, K, seed,
        )
        out[idx, : model.p_plus] = gp
        out[idx, model.p_plus :] = gm
    return out
