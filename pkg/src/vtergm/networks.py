"""Core data types: count-valued networks and ordered network series."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ValuedNetwork",
    "NetworkSeries",
    "ParamVector",
    "validate_network",
    "validate_series",
    "max_dim_value",
]


class DataError(ValueError):
    """Raised when input data cannot be interpreted as a valid network object."""


def _as_count_matrix(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DataError(f"network values must be a square matrix, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        rounded = np.rint(arr)
        if not np.all(np.isfinite(arr)) or not np.allclose(arr, rounded, atol=0):
            raise DataError("dyad values must be integers")
        arr = rounded
    return np.ascontiguousarray(arr, dtype=np.int64)


@dataclass(frozen=True)
class ValuedNetwork:
    """A square matrix of nonnegative integer dyad counts with zero diagonal.

    The matrix is stored read-only; invariants beyond squareness and
    integrality are reported by :func:`validate_network` rather than enforced
    here, so that malformed data can be loaded and diagnosed.
    """

    values: np.ndarray
    directed: bool = False

    def __post_init__(self):
        arr = _as_count_matrix(self.values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def with_values(self, values: np.ndarray) -> "ValuedNetwork":
        return ValuedNetwork(values, directed=self.directed)

    def __eq__(self, other):
        if not isinstance(other, ValuedNetwork):
            return NotImplemented
        return self.directed == other.directed and np.array_equal(self.values, other.values)


def validate_network(net: ValuedNetwork, label: str = "network") -> list[str]:
    """Return a list of invariant violations (empty when the network is valid)."""
    out = []
    v = net.values
    diag = np.flatnonzero(np.diag(v))
    for i in diag:
        out.append(f"nonzero diagonal at {label}, node {i}")
    neg = np.argwhere(v < 0)
    for i, j in neg:
        out.append(f"negative value at {label}, dyad ({i},{j})")
    if not net.directed:
        bad = np.argwhere(v != v.T)
        seen = set()
        for i, j in bad:
            key = (min(i, j), max(i, j))
            if key not in seen:
                seen.add(key)
                out.append(f"asymmetry at {label}, dyad {key}")
    return out


@dataclass(frozen=True)
class NetworkSeries:
    """An ordered sequence of networks on a fixed node set plus covariates.

    ``nodal_attrs`` maps attribute name to a length-n sequence (categorical
    strings or numbers).  ``dyadic_covs`` maps covariate name to an n-by-n
    numeric matrix.  ``nodes`` optionally carries external node labels.
    """

    networks: tuple[ValuedNetwork, ...]
    nodal_attrs: dict = field(default_factory=dict)
    dyadic_covs: dict = field(default_factory=dict)
    nodes: tuple | None = None

    def __post_init__(self):
        nets = tuple(self.networks)
        if len(nets) < 2:
            raise DataError("a network series needs at least two networks")
        n = nets[0].n
        directed = nets[0].directed
        for t, net in enumerate(nets, start=1):
            if net.n != n:
                raise DataError(f"network at t={t} has {net.n} nodes, expected {n}")
            if net.directed != directed:
                raise DataError(f"network at t={t} has mixed orientation")
        object.__setattr__(self, "networks", nets)
        attrs = {k: tuple(v) for k, v in self.nodal_attrs.items()}
        for name, vals in attrs.items():
            if len(vals) != n:
                raise DataError(f"nodal attribute {name!r} has {len(vals)} entries, expected {n}")
        object.__setattr__(self, "nodal_attrs", attrs)
        covs = {}
        for name, mat in self.dyadic_covs.items():
            arr = np.asarray(mat, dtype=float)
            if arr.shape != (n, n):
                raise DataError(f"dyadic covariate {name!r} has shape {arr.shape}, expected {(n, n)}")
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            covs[name] = arr
        object.__setattr__(self, "dyadic_covs", covs)
        if self.nodes is not None:
            nodes = tuple(self.nodes)
            if len(nodes) != n:
                raise DataError(f"node roster has {len(nodes)} entries, expected {n}")
            object.__setattr__(self, "nodes", nodes)

    @property
    def n(self) -> int:
        return self.networks[0].n

    @property
    def T(self) -> int:
        return len(self.networks)

    @property
    def directed(self) -> bool:
        return self.networks[0].directed


def validate_series(series: NetworkSeries) -> list[str]:
    """Collect invariant violations over all networks and covariates.

    Violations are data, not faults: an empty list means the series is valid.
    """
    out = []
    for t, net in enumerate(series.networks, start=1):
        out.extend(validate_network(net, label=f"t={t}"))
    for name, mat in series.dyadic_covs.items():
        if np.any(np.diag(mat) != 0):
            out.append(f"nonzero diagonal in dyadic covariate {name!r}")
        if not series.directed and not np.array_equal(mat, mat.T):
            out.append(f"asymmetry in dyadic covariate {name!r}")
    return out


def max_dim_value(series: NetworkSeries, t: int) -> int:
    """Largest dyad value of the diminution network for interval ``t``.

    ``t`` is the 1-based index of the later network, so valid values are
    ``2 <= t <= T``.  The diminution network is the elementwise min of the
    two consecutive observed networks.
    """
    if not 2 <= t <= series.T:
        raise IndexError(f"interval index t={t} out of range [2, {series.T}]")
    prev = series.networks[t - 2].values
    cur = series.networks[t - 1].values
    return int(np.minimum(prev, cur).max())


@dataclass(frozen=True)
class ParamVector:
    """Coefficients for the two processes: one block per process."""

    eta_plus: np.ndarray
    eta_minus: np.ndarray

    def __post_init__(self):
        for name in ("eta_plus", "eta_minus"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p_plus(self) -> int:
        return self.eta_plus.size

    @property
    def p_minus(self) -> int:
        return self.eta_minus.size

    def concat(self) -> np.ndarray:
        return np.concatenate([self.eta_plus, self.eta_minus])

    @classmethod
    def from_concat(cls, vec: np.ndarray, p_plus: int) -> "ParamVector":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:p_plus], vec[p_plus:])

    @classmethod
    def zeros(cls, p_plus: int, p_minus: int) -> "ParamVector":
        return cls(np.zeros(p_plus), np.zeros(p_minus))

    def __eq__(self, other):
        if not isinstance(other, ParamVector):
            return NotImplemented
        return np.array_equal(self.eta_plus, other.eta_plus) and np.array_equal(
            self.eta_minus, other.eta_minus
        )
