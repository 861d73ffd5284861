"""Network statistics and their exact single-dyad change scores.

Eight statistic kinds ship.  Each statistic sums a per-dyad contribution
over canonical dyads i<j for undirected networks and over all ordered pairs
i != j for directed networks; mutuality is the exception and always sums
over unordered pairs by its formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .networks import ValuedNetwork

__all__ = [
    "KINDS",
    "StatisticSpec",
    "ModelSpec",
    "Covariates",
    "evaluate",
    "evaluate_vector",
    "change_statistics",
    "transition_statistics",
]

KINDS = (
    "edge_sum",
    "dispersion",
    "propensity",
    "mutuality",
    "transitive_weight",
    "homophily",
    "heterophily",
    "dyadic_cov",
)

# kinds whose per-dyad contribution is (value difference) times a fixed weight
_WEIGHTED = {"homophily", "heterophily", "dyadic_cov"}


class SpecError(ValueError):
    """A statistic specification that cannot be evaluated as written."""


@dataclass(frozen=True)
class StatisticSpec:
    """One named network statistic, possibly bound to covariates.

    ``attr``/``level`` bind homophily to one level of a nodal attribute;
    heterophily binds to an attribute and optionally to an unordered pair of
    levels (without the pair it counts any mismatch).  ``cov`` names a dyadic
    covariate.
    """

    kind: str
    attr: str | None = None
    level: str | None = None
    levels: tuple[str, str] | None = None
    cov: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown statistic kind {self.kind!r}")
        if self.kind == "homophily" and (self.attr is None or self.level is None):
            raise SpecError("homophily requires attr and level bindings")
        if self.kind == "heterophily" and self.attr is None:
            raise SpecError("heterophily requires an attr binding")
        if self.kind == "dyadic_cov" and self.cov is None:
            raise SpecError("dyadic_cov requires a covariate binding")
        if self.kind not in ("homophily", "heterophily") and self.attr is not None:
            raise SpecError(f"{self.kind} takes no attribute binding")
        if self.levels is not None:
            object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def name(self) -> str:
        if self.kind == "homophily":
            return f"homophily({self.attr}={self.level})"
        if self.kind == "heterophily":
            if self.levels:
                return f"heterophily({self.attr}:{self.levels[0]}-{self.levels[1]})"
            return f"heterophily({self.attr})"
        if self.kind == "dyadic_cov":
            return f"dyadic_cov({self.cov})"
        return self.kind


@dataclass(frozen=True)
class Covariates:
    """Covariate context resolved against a fixed node set."""

    nodal: dict
    dyadic: dict

    @classmethod
    def from_series(cls, series) -> "Covariates":
        return cls(nodal=dict(series.nodal_attrs), dyadic=dict(series.dyadic_covs))

    @classmethod
    def empty(cls) -> "Covariates":
        return cls(nodal={}, dyadic={})


@dataclass(frozen=True)
class ModelSpec:
    """Statistic vectors for the two processes plus reference-function knobs.

    ``m`` caps the diminution binomial reference; ``None`` selects
    per-interval mode where the cap is read off the observed diminution
    network of each interval.  ``pi0`` is the zero-inflation probability of
    the sampler's proposal distribution.
    """

    aug_stats: tuple[StatisticSpec, ...]
    dim_stats: tuple[StatisticSpec, ...]
    m: int | None = None
    pi0: float = 0.2
    heterogeneous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "aug_stats", tuple(self.aug_stats))
        object.__setattr__(self, "dim_stats", tuple(self.dim_stats))
        if not self.aug_stats or not self.dim_stats:
            raise SpecError("both processes need at least one statistic")
        if self.m is not None and self.m < 1:
            raise SpecError("diminution cap m must be a positive integer")
        if not 0.0 <= self.pi0 < 1.0:
            raise SpecError("pi0 must lie in [0, 1)")

    @property
    def p_plus(self) -> int:
        return len(self.aug_stats)

    @property
    def p_minus(self) -> int:
        return len(self.dim_stats)

    def stat_names(self) -> list[str]:
        return [s.name for s in self.aug_stats] + [s.name for s in self.dim_stats]


def weight_matrix(spec: StatisticSpec, n: int, covs: Covariates) -> np.ndarray:
    """Per-dyad weights for the value-weighted indicator kinds."""
    if spec.kind == "dyadic_cov":
        if spec.cov not in covs.dyadic:
            raise SpecError(f"dyadic covariate {spec.cov!r} not found")
        w = np.asarray(covs.dyadic[spec.cov], dtype=float)
        if w.shape != (n, n):
            raise SpecError(f"dyadic covariate {spec.cov!r} has shape {w.shape}, expected {(n, n)}")
        return w
    if spec.attr not in covs.nodal:
        raise SpecError(f"nodal attribute {spec.attr!r} not found")
    x = np.asarray(covs.nodal[spec.attr], dtype=object)
    if x.size != n:
        raise SpecError(f"nodal attribute {spec.attr!r} has {x.size} entries, expected {n}")
    if spec.kind == "homophily":
        match = x == spec.level
        return np.outer(match, match).astype(float)
    # heterophily
    if spec.levels is not None:
        a, b = spec.levels
        w = np.outer(x == a, x == b) | np.outer(x == b, x == a)
        return w.astype(float)
    return (x[:, None] != x[None, :]).astype(float)


def _pair_mask(n: int, directed: bool) -> np.ndarray:
    if directed:
        return ~np.eye(n, dtype=bool)
    return np.triu(np.ones((n, n), dtype=bool), k=1)


def _path_strength(v: np.ndarray) -> np.ndarray:
    """P[i, j] = max over k of min(v[i, k], v[k, j])."""
    n = v.shape[0]
    p = np.zeros_like(v)
    for k in range(n):
        np.maximum(p, np.minimum(v[:, k][:, None], v[k, :][None, :]), out=p)
    return p


def evaluate(spec: StatisticSpec, net: ValuedNetwork, covs: Covariates | None = None) -> float:
    """Evaluate one statistic on a network."""
    covs = covs or Covariates.empty()
    v = net.values
    n = net.n
    mask = _pair_mask(n, net.directed)
    if spec.kind == "edge_sum":
        return float(v[mask].sum())
    if spec.kind == "dispersion":
        return float(np.sqrt(v[mask]).sum())
    if spec.kind == "propensity":
        return float((v[mask] > 0).sum())
    if spec.kind == "mutuality":
        if not net.directed:
            raise SpecError("mutuality is only defined for directed networks")
        upper = np.triu(np.ones((n, n), dtype=bool), k=1)
        return float(np.sqrt((v * v.T)[upper]).sum())
    if spec.kind == "transitive_weight":
        p = _path_strength(v)
        return float(np.minimum(v, p)[mask].sum())
    w = weight_matrix(spec, n, covs)
    return float((v * w)[mask].sum())


def evaluate_vector(
    specs, net: ValuedNetwork, covs: Covariates | None = None
) -> np.ndarray:
    return np.array([evaluate(s, net, covs) for s in specs], dtype=float)


def transition_statistics(model: ModelSpec, pair, covs: Covariates | None = None) -> np.ndarray:
    """Concatenated [g+, g-] vector for a decomposed transition."""
    gp = evaluate_vector(model.aug_stats, pair.aug, covs)
    gm = evaluate_vector(model.dim_stats, pair.dim, covs)
    return np.concatenate([gp, gm])


def _tw_term(v: np.ndarray, a: int, b: int) -> float:
    best = 0
    row = np.minimum(v[a, :], v[:, b])
    best = row.max() if row.size else 0
    return min(v[a, b], best)


def _tw_affected_sum(v: np.ndarray, i: int, j: int, directed: bool) -> float:
    """Sum of transitive-weight terms that can change when dyad (i, j) moves.

    The changed value enters term (a, b) only when a or b lies in {i, j}
    (for undirected networks) or when (a, b) sits on row i or column j (for
    directed networks), so only O(n) terms need recomputation.
    """
    n = v.shape[0]
    total = 0.0
    if directed:
        # row i: terms (i, b); column j: terms (a, j), skipping (i, j) once
        p_row = np.minimum(v[i, :][:, None], v).max(axis=0)  # over k: min(v[i,k], v[k,b])
        terms = np.minimum(v[i, :], p_row)
        terms[i] = 0
        total += terms.sum()
        p_col = np.minimum(v, v[:, j][None, :]).max(axis=1)  # over k: min(v[a,k], v[k,j])
        terms = np.minimum(v[:, j], p_col)
        terms[j] = 0
        terms[i] = 0  # (i, j) already counted in the row pass
        total += terms.sum()
    else:
        for a in (i, j):
            p_row = np.minimum(v[a, :][:, None], v).max(axis=0)
            terms = np.minimum(v[a, :], p_row)
            terms[a] = 0
            if a == j:
                terms[i] = 0  # pair {i, j} counted once
            total += terms.sum()
    return float(total)


def _delta_one(
    spec: StatisticSpec,
    v: np.ndarray,
    directed: bool,
    i: int,
    j: int,
    old: int,
    new: int,
    w: np.ndarray | None,
) -> float:
    """Change in one statistic when dyad (i, j) moves from old to new.

    ``v`` holds the old value (mirrored when undirected) and is restored on
    exit if it is temporarily mutated.
    """
    if old == new:
        return 0.0
    if spec.kind == "edge_sum":
        return float(new - old)
    if spec.kind == "dispersion":
        return math.sqrt(new) - math.sqrt(old)
    if spec.kind == "propensity":
        return float((new > 0) - (old > 0))
    if spec.kind == "mutuality":
        other = v[j, i]
        return math.sqrt(new * other) - math.sqrt(old * other)
    if spec.kind in _WEIGHTED:
        return float((new - old) * w[i, j])
    # transitive_weight: recompute the affected terms before and after
    before = _tw_affected_sum(v, i, j, directed)
    writable = v.flags.writeable
    if not writable:
        v = v.copy()
    v[i, j] = new
    if not directed:
        v[j, i] = new
    after = _tw_affected_sum(v, i, j, directed)
    if writable:
        v[i, j] = old
        if not directed:
            v[j, i] = old
    return after - before


def change_statistics(
    specs,
    net,
    dyad: tuple[int, int],
    old_val: int,
    new_val: int,
    covs: Covariates | None = None,
    directed: bool | None = None,
) -> np.ndarray:
    """Exact change scores for a single-dyad move, computed incrementally.

    ``net`` may be a ValuedNetwork or a raw matrix currently holding
    ``old_val`` at the dyad (and at its mirror when undirected).
    """
    i, j = dyad
    if i == j:
        raise ValueError("change statistics are undefined on the diagonal")
    if isinstance(net, ValuedNetwork):
        v, directed = net.values, net.directed
    else:
        v = np.asarray(net)
        if directed is None:
            raise ValueError("directed flag required for raw matrices")
    if v[i, j] != old_val:
        raise ValueError(f"network holds {v[i, j]} at {dyad}, caller claimed {old_val}")
    covs = covs or Covariates.empty()
    n = v.shape[0]
    out = np.empty(len(specs), dtype=float)
    for k, spec in enumerate(specs):
        w = weight_matrix(spec, n, covs) if spec.kind in _WEIGHTED else None
        out[k] = _delta_one(spec, v, directed, i, j, old_val, new_val, w)
    return out
