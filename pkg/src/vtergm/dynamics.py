"""One-step transition decomposition into augmentation and diminution networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .networks import ValuedNetwork

__all__ = ["TransitionPair", "decompose", "recompose", "UnidentifiableTransition"]


class UnidentifiableTransition(ValueError):
    """An (aug, dim) pair that no single observed transition can produce.

    When some dyad moved in both directions (aug above prev and dim below
    prev simultaneously) the later network is not recoverable from the pair,
    so we reject rather than repair.
    """


@dataclass(frozen=True)
class TransitionPair:
    """Augmentation/diminution networks of a transition, with the conditioning
    network carried by reference so acceptance-ratio code can evaluate both
    processes without copying."""

    aug: ValuedNetwork
    dim: ValuedNetwork
    prev: ValuedNetwork


def decompose(prev: ValuedNetwork, cur: ValuedNetwork) -> TransitionPair:
    """Split a transition into its elementwise max (aug) and min (dim) networks."""
    if prev.n != cur.n:
        raise ValueError(f"node count mismatch: {prev.n} vs {cur.n}")
    if prev.directed != cur.directed:
        raise ValueError("orientation mismatch between consecutive networks")
    aug = np.maximum(prev.values, cur.values)
    dim = np.minimum(prev.values, cur.values)
    return TransitionPair(
        aug=prev.with_values(aug), dim=prev.with_values(dim), prev=prev
    )


def recompose(pair: TransitionPair) -> ValuedNetwork:
    """Recover the later network: cur = aug + dim - prev.

    Valid only when every dyad moved on at most one side; a dyad with
    aug above prev *and* dim below prev admits no unique later value.
    """
    aug, dim, prev = pair.aug.values, pair.dim.values, pair.prev.values
    bad = (aug != prev) & (dim != prev)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise UnidentifiableTransition(
            f"unidentifiable dyad ({i},{j}): prev={prev[i, j]}, "
            f"aug={aug[i, j]}, dim={dim[i, j]}"
        )
    if np.any(aug < prev) or np.any(dim > prev):
        i, j = np.argwhere((aug < prev) | (dim > prev))[0]
        raise UnidentifiableTransition(
            f"invalid pair at dyad ({i},{j}): aug must dominate prev and prev dominate dim"
        )
    return pair.prev.with_values(aug + dim - prev)
