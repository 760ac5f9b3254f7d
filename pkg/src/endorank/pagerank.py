"""Standard, weighted and personalized PageRank by sparse power iteration."""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .graph import EndorsementDigraph

logger = logging.getLogger(__name__)

DEFAULT_TIE_TOL = 1e-9


class ConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PageRankParams:
    alpha: float = 0.85
    personalization: Sequence[float] | None = None
    tolerance: float = 1e-12
    max_iterations: int = 1000

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"damping factor must lie in (0, 1), got {self.alpha}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.personalization is not None:
            v = np.asarray(self.personalization, dtype=float)
            if v.ndim != 1 or np.any(v < 0) or not np.isclose(v.sum(), 1.0, rtol=0, atol=1e-9):
                raise ValueError("personalization must be a non-negative vector summing to 1")

    def restart_vector(self, n: int) -> np.ndarray:
        if self.personalization is None:
            return np.full(n, 1.0 / n)
        v = np.asarray(self.personalization, dtype=float)
        if len(v) != n:
            raise ValueError(f"personalization has {len(v)} entries for {n} members")
        return v / v.sum()


@dataclass(frozen=True)
class RankVector:
    """Authority scores (summing to 1) plus convergence bookkeeping."""

    scores: np.ndarray
    iterations_used: int = 0
    residual: float = 0.0
    converged: bool = True
    positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=float)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "positions", rank_positions(scores))

    def __len__(self) -> int:
        return len(self.scores)


def transition_row(d: EndorsementDigraph, i: int) -> np.ndarray:
    """Row ``i`` of the row-stochastic link matrix (dangling rows uniform)."""
    row = np.zeros(d.n)
    w = d.out_weights(i)
    total = float(sum(w.tolist()))
    if total > 0:
        row[d.out_neighbors(i)] = w / total
    else:
        row[:] = 1.0 / d.n
    return row


def _link_operator(d: EndorsementDigraph) -> tuple[sp.csr_matrix, np.ndarray]:
    """Transposed normalized link matrix with dangling rows left empty.

    Returns ``(PT, dangling)`` where ``PT @ p`` is ``p P`` restricted to the
    non-dangling rows of ``P``.
    """
    sums = d.out_weight_sums()
    dangling = sums == 0
    src = d.sources()
    vals = np.asarray(d.weights) / sums[src] if d.n_arcs else np.zeros(0)
    pt = sp.csr_matrix((vals, (np.asarray(d.targets), src)), shape=(d.n, d.n))
    pt.sort_indices()
    return pt, dangling


def pagerank(d: EndorsementDigraph, params: PageRankParams | None = None, **overrides) -> RankVector:
    """Stationary distribution of the damped random surfer on ``d``.

    Restarts (and dangling-node jumps) follow the personalization vector
    when one is given, the uniform distribution otherwise. The dense
    Google matrix is never built.
    """
    if params is None:
        params = PageRankParams(**overrides)
    elif overrides:
        raise TypeError("pass either params or keyword overrides, not both")
    n = d.n
    if n < 1:
        raise ValueError("PageRank needs at least one member")
    alpha = params.alpha
    restart = params.restart_vector(n)
    pt, dangling = _link_operator(d)
    dangling_idx = np.flatnonzero(dangling)

    p = restart.copy()
    residual = np.inf
    it = 0
    for it in range(1, params.max_iterations + 1):
        leaked = alpha * float(p[dangling_idx].sum()) + (1.0 - alpha)
        nxt = alpha * (pt @ p) + leaked * restart
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - p).sum())
        p = nxt
        if residual <= params.tolerance:
            break
    converged = residual <= params.tolerance
    if not converged:
        msg = f"PageRank did not converge in {params.max_iterations} iterations (residual {residual:.3e})"
        logger.warning(msg)
        warnings.warn(msg, ConvergenceWarning, stacklevel=2)
    return RankVector(p, iterations_used=it, residual=residual, converged=converged)


def google_matrix(d: EndorsementDigraph, params: PageRankParams | None = None) -> np.ndarray:
    """Dense damped transition matrix. Only meant for small graphs and checks."""
    params = params or PageRankParams()
    restart = params.restart_vector(d.n)
    P = np.empty((d.n, d.n))
    sums = d.out_weight_sums()
    for i in range(d.n):
        if sums[i] > 0:
            P[i] = transition_row(d, i)
        else:
            P[i] = restart if params.personalization is not None else 1.0 / d.n
    return params.alpha * P + (1.0 - params.alpha) * np.outer(np.ones(d.n), restart)


def _tie_groups_sorted(scores: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Order (descending) and a group id per sorted slot; chained tolerance."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    if len(s) == 0:
        return order, np.zeros(0, dtype=np.int64)
    gap = np.abs(np.diff(s))
    scale = np.maximum(np.abs(s[:-1]), np.abs(s[1:]))
    new_group = gap > tol * scale
    group = np.concatenate([[0], np.cumsum(new_group)])
    return order, group


def rank_positions(scores, tol: float = DEFAULT_TIE_TOL) -> np.ndarray:
    """Competition ranking (1, 2, 2, 4): position 1 holds the highest score.

    Scores within ``tol`` (relative) of a neighbour in sorted order share
    the best position of their group.
    """
    scores = np.asarray(getattr(scores, "scores", scores), dtype=float)
    order, group = _tie_groups_sorted(scores, tol)
    first = np.zeros(len(scores), dtype=np.int64)
    if len(scores):
        starts = np.concatenate([[True], group[1:] != group[:-1]])
        first_slot = np.maximum.accumulate(np.where(starts, np.arange(len(scores)), 0))
        first[order] = first_slot + 1
    return first


def write_rank_csv(r: RankVector, stream: TextIO, labels: Sequence[str] | None = None) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    header = ["member_index", "score", "position"]
    if labels is not None:
        header.append("label")
    writer.writerow(header)
    for i, (s, pos) in enumerate(zip(r.scores, r.positions)):
        row = [i, repr(float(s)), int(pos)]
        if labels is not None:
            row.append(labels[i])
        writer.writerow(row)
