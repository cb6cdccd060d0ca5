"""Hierarchical federated learning.

Clients run plain gradient descent on their own data, each cluster averages
its clients weighted by data count, and the global model averages clusters
weighted by their total data count. The data-weighted plurality vote over
protocol versions lives here too.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Grad = Callable[[np.ndarray], np.ndarray]


class HflError(ValueError):
    pass


class NonFiniteGradient(HflError):
    pass


class EmptyCluster(HflError):
    pass


class DimensionMismatch(HflError):
    pass


class EmptyChoices(HflError):
    pass


class AllZeroWeights(HflError):
    pass


@dataclass
class ClientReport:
    model: np.ndarray
    data_count: int

    def __post_init__(self):
        if self.data_count < 1:
            raise ValueError("data_count must be >= 1")


@dataclass
class Client:
    """A participant with a starting model, a data count and its loss gradient."""

    model: np.ndarray
    data_count: int
    grad: Grad


@dataclass(frozen=True)
class VersionChoice:
    device: str
    version: int
    data_count: int

    def __post_init__(self):
        if self.version < 1:
            raise ValueError("version must be >= 1")
        if self.data_count < 0:
            raise ValueError("data_count must be >= 0")


def _as_vector(w) -> np.ndarray:
    return np.atleast_1d(np.asarray(w, dtype=float))


def local_update(w, grad: Grad, eta: float, steps: int) -> np.ndarray:
    """Run ``steps`` iterations of ``w <- w - eta * grad(w)``."""
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    w = _as_vector(w).copy()
    if not np.all(np.isfinite(w)):
        raise NonFiniteGradient("initial model has non-finite entries")
    # divergence is reported as NonFiniteGradient, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            g = _as_vector(grad(w))
            if g.shape != w.shape:
                raise DimensionMismatch(f"gradient shape {g.shape} != model shape {w.shape}")
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradient(f"non-finite gradient at step {k}")
            w = w - eta * g
            if not np.all(np.isfinite(w)):
                raise NonFiniteGradient(f"iterate diverged at step {k}")
    return w


def cluster_aggregate(reports: Sequence[ClientReport]) -> np.ndarray:
    """Data-count weighted mean of the reported models.

    The denominator is the total count of the clients that reported.
    """
    if len(reports) == 0:
        raise EmptyCluster("cannot aggregate an empty cluster")
    models = [_as_vector(r.model) for r in reports]
    shape = models[0].shape
    for m in models[1:]:
        if m.shape != shape:
            raise DimensionMismatch(f"model shape {m.shape} != {shape}")
    total = sum(r.data_count for r in reports)
    acc = np.zeros(shape)
    for r, m in zip(reports, models):
        acc += r.data_count * m
    out = acc / total
    # keep the convex-combination envelope exact despite rounding
    stacked = np.stack(models)
    return np.clip(out, stacked.min(axis=0), stacked.max(axis=0))


def hierarchical_round(
    clusters: Sequence[Sequence[Client]],
    eta: float,
    local_steps: int,
    init=None,
) -> np.ndarray:
    """One round: local training, per-cluster aggregation, global aggregation.

    With ``init`` every client starts from that model; otherwise each client
    starts from its own ``model``.
    """
    if len(clusters) == 0:
        raise EmptyCluster("no clusters")
    cluster_reports = []
    for ci, cluster in enumerate(clusters):
        if len(cluster) == 0:
            raise EmptyCluster(f"cluster {ci} has no clients")
        reports = []
        for client in cluster:
            start = client.model if init is None else init
            w = local_update(start, client.grad, eta, local_steps)
            reports.append(ClientReport(w, client.data_count))
        w_c = cluster_aggregate(reports)
        cluster_reports.append(ClientReport(w_c, sum(r.data_count for r in reports)))
    return cluster_aggregate(cluster_reports)


def run_rounds(clusters: Sequence[Sequence[Client]], w0, eta: float, local_steps: int, rounds: int) -> list[np.ndarray]:
    """Repeat ``hierarchical_round`` from a shared start; returns every global model."""
    w = _as_vector(w0)
    history = [w]
    for _ in range(rounds):
        w = hierarchical_round(clusters, eta, local_steps, init=w)
        history.append(w)
    return history


def quadratic_objective(data) -> tuple[Callable[[np.ndarray], float], Grad]:
    """Mean squared distance to the rows of ``data`` (scaled by 1/2).

    Minimised at the data mean; gradient is ``w - mean``.
    """
    x = np.atleast_2d(np.asarray(data, dtype=float))
    mean = x.mean(axis=0)

    def f(w):
        d = x - _as_vector(w)
        return 0.5 * float(np.mean(np.sum(d * d, axis=1)))

    def grad(w):
        return _as_vector(w) - mean

    return f, grad


def make_client(data, w0) -> Client:
    data = np.atleast_2d(np.asarray(data, dtype=float))
    _, grad = quadratic_objective(data)
    return Client(_as_vector(w0), len(data), grad)


def version_weights(choices: Iterable[VersionChoice]) -> dict[int, int]:
    weights: dict[int, int] = defaultdict(int)
    for c in choices:
        weights[c.version] += c.data_count
    return dict(sorted(weights.items()))


def vote_protocol_version(choices: Sequence[VersionChoice]) -> int:
    """Version backed by the most data; ties go to the smaller version."""
    if len(choices) == 0:
        raise EmptyChoices("no version choices")
    weights = version_weights(choices)
    if all(v == 0 for v in weights.values()):
        raise AllZeroWeights("every choice has zero data")
    return min(weights, key=lambda v: (-weights[v], v))


# final preferences in the three-device scenario
SCENARIO_VERSIONS = {"A": 2, "B": 3, "C": 5}
SCENARIO_COUNTS = {"A": 5, "B": 3, "C": 2}


def scenario_choices(counts: Mapping[str, int] | None = None, versions: Mapping[str, int] | None = None) -> list[VersionChoice]:
    counts = {**SCENARIO_COUNTS, **(counts or {})}
    versions = {**SCENARIO_VERSIONS, **(versions or {})}
    missing = sorted(set(counts) - set(versions))
    if missing:
        raise ValueError(f"no version given for device(s): {', '.join(missing)}")
    return [VersionChoice(d, versions[d], counts[d]) for d in sorted(counts)]
