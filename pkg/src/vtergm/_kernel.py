"""Compiled Metropolis-Hastings kernel.

The statistics of a model are lowered to integer codes plus per-statistic
weight matrices so the whole chain loop can run under numba.  The Python
implementation in :mod:`vtergm.sampler` is the readable reference; a parity
test drives both with identical injected randomness.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# statistic codes
EDGE_SUM = 0
DISPERSION = 1
PROPENSITY = 2
MUTUALITY = 3
WEIGHTED = 4
TRANSITIVE = 5

_CODE_BY_KIND = {
    "edge_sum": EDGE_SUM,
    "dispersion": DISPERSION,
    "propensity": PROPENSITY,
    "mutuality": MUTUALITY,
    "homophily": WEIGHTED,
    "heterophily": WEIGHTED,
    "dyadic_cov": WEIGHTED,
    "transitive_weight": TRANSITIVE,
}


def compile_stats(specs, n, covs):
    """Lower statistic specs to (codes, weights) arrays for the kernel."""
    from .statistics import _WEIGHTED, weight_matrix

    codes = np.empty(len(specs), dtype=np.int64)
    weights = np.zeros((len(specs), n, n), dtype=np.float64)
    for k, spec in enumerate(specs):
        codes[k] = _CODE_BY_KIND[spec.kind]
        if spec.kind in _WEIGHTED:
            weights[k] = weight_matrix(spec, n, covs)
    return codes, weights


@njit(cache=True)
def zip_logpmf(v, lam, pi0):
    if v == 0:
        return math.log(pi0 + (1.0 - pi0) * math.exp(-lam))
    return (
        math.log(1.0 - pi0) - lam + v * math.log(lam) - math.lgamma(v + 1.0)
    )


@njit(cache=True)
def _tw_affected(v, i, j, directed):
    n = v.shape[0]
    total = 0.0
    if directed:
        for b in range(n):
            if b == i:
                continue
            best = 0
            for k in range(n):
                mn = min(v[i, k], v[k, b])
                if mn > best:
                    best = mn
            total += min(v[i, b], best)
        for a in range(n):
            if a == j or a == i:
                continue
            best = 0
            for k in range(n):
                mn = min(v[a, k], v[k, j])
                if mn > best:
                    best = mn
            total += min(v[a, j], best)
    else:
        for b in range(n):
            if b == i:
                continue
            best = 0
            for k in range(n):
                mn = min(v[i, k], v[k, b])
                if mn > best:
                    best = mn
            total += min(v[i, b], best)
        for b in range(n):
            if b == j or b == i:
                continue
            best = 0
            for k in range(n):
                mn = min(v[j, k], v[k, b])
                if mn > best:
                    best = mn
            total += min(v[j, b], best)
    return total


@njit(cache=True)
def _delta(code, w, v, i, j, old, new, directed):
    if old == new:
        return 0.0
    if code == EDGE_SUM:
        return float(new - old)
    if code == DISPERSION:
        return math.sqrt(float(new)) - math.sqrt(float(old))
    if code == PROPENSITY:
        a = 1.0 if new > 0 else 0.0
        b = 1.0 if old > 0 else 0.0
        return a - b
    if code == MUTUALITY:
        other = float(v[j, i])
        return math.sqrt(new * other) - math.sqrt(old * other)
    if code == WEIGHTED:
        return (new - old) * w[i, j]
    # transitive weight
    before = _tw_affected(v, i, j, directed)
    v[i, j] = new
    if not directed:
        v[j, i] = new
    after = _tw_affected(v, i, j, directed)
    v[i, j] = old
    if not directed:
        v[j, i] = old
    return after - before


@njit(cache=True)
def step_given(
    cur, prev, aug, dim, gp, gm,
    codes_p, w_p, eta_p, codes_m, w_m, eta_m,
    m, pi0, offset, directed,
    i, j, prop, u,
):
    """One MH step with injected dyad, proposal and uniform draw.

    Returns 1 on accept, 0 on reject, -1 on deterministic rejection
    (proposed diminution value above the cap).  Mutates state in place.
    """
    cv = cur[i, j]
    pv = prev[i, j]
    aug_old = max(pv, cv)
    aug_new = max(pv, prop)
    dim_old = min(pv, cv)
    dim_new = min(pv, prop)
    if dim_new > m:
        return -1
    loga = zip_logpmf(cv, prop + offset, pi0) - zip_logpmf(prop, cv + offset, pi0)
    loga += math.lgamma(aug_old + 1.0) - math.lgamma(aug_new + 1.0)
    loga += math.lgamma(m - dim_old + 1.0) + math.lgamma(dim_old + 1.0)
    loga -= math.lgamma(m - dim_new + 1.0) + math.lgamma(dim_new + 1.0)
    pp = codes_p.shape[0]
    pm = codes_m.shape[0]
    dgp = np.empty(pp)
    for k in range(pp):
        dgp[k] = _delta(codes_p[k], w_p[k], aug, i, j, aug_old, aug_new, directed)
        loga += eta_p[k] * dgp[k]
    dgm = np.empty(pm)
    for k in range(pm):
        dgm[k] = _delta(codes_m[k], w_m[k], dim, i, j, dim_old, dim_new, directed)
        loga += eta_m[k] * dgm[k]
    if loga >= 0.0 or u < math.exp(loga):
        cur[i, j] = prop
        aug[i, j] = aug_new
        dim[i, j] = dim_new
        if not directed:
            cur[j, i] = prop
            aug[j, i] = aug_new
            dim[j, i] = dim_new
        for k in range(pp):
            gp[k] += dgp[k]
        for k in range(pm):
            gm[k] += dgm[k]
        return 1
    return 0


@njit(cache=True)
def run_chain(
    cur, prev, aug, dim, gp, gm,
    codes_p, w_p, eta_p, codes_m, w_m, eta_m,
    m, pi0, offset, directed,
    steps, seed,
):
    """Run ``steps`` MH transitions in place; returns (accepts, det_rejects)."""
    np.random.seed(seed)
    n = cur.shape[0]
    accepts = 0
    det = 0
    for _ in range(steps):
        i = np.random.randint(0, n)
        j = np.random.randint(0, n - 1)
        if j >= i:
            j += 1
        if not directed and i > j:
            i, j = j, i
        if np.random.random() < pi0:
            prop = 0
        else:
            prop = np.random.poisson(cur[i, j] + offset)
        u = np.random.random()
        r = step_given(
            cur, prev, aug, dim, gp, gm,
            codes_p, w_p, eta_p, codes_m, w_m, eta_m,
            m, pi0, offset, directed, i, j, prop, u,
        )
        if r == 1:
            accepts += 1
        elif r == -1:
            det += 1
    return accepts, det
