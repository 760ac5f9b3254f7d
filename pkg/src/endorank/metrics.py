"""Ranking comparison: rank correlation, ties, spam-leader displacement, histograms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.stats import rankdata

from .pagerank import DEFAULT_TIE_TOL, _tie_groups_sorted, rank_positions


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined because one ranking has no variation."""


def _as_scores(x) -> np.ndarray:
    return np.asarray(getattr(x, "scores", x), dtype=float)


def round_pct(x: float) -> int:
    """Round half away from zero, as percentage columns are usually printed."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def tie_group_ids(scores, tol: float = DEFAULT_TIE_TOL) -> np.ndarray:
    """Dense integer label per member, ascending with score; near-equal scores share one."""
    s = _as_scores(scores)
    order, group = _tie_groups_sorted(s, tol)
    ids = np.empty(len(s), dtype=np.int64)
    if len(s):
        ids[order] = group[-1] - group
    return ids


def _paired(a, b, tol: float) -> tuple[np.ndarray, np.ndarray]:
    x, y = _as_scores(a), _as_scores(b)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"rankings must be 1-d and equal length, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("rank correlation needs at least two members")
    if tol > 0:
        x, y = tie_group_ids(x, tol), tie_group_ids(y, tol)
    return x, y


def spearman_rho(a, b, tol: float = DEFAULT_TIE_TOL) -> float:
    """Pearson correlation of average (fractional) ranks."""
    x, y = _paired(a, b, tol)
    rx, ry = rankdata(x), rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    sxx, syy = float(rx @ rx), float(ry @ ry)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("Spearman rho undefined: a ranking is constant")
    return float(np.clip((rx @ ry) / math.sqrt(sxx * syy), -1.0, 1.0))


def _tied_pairs(sorted_vals: np.ndarray) -> int:
    """Pairs sharing a value, for an array that is already sorted."""
    if len(sorted_vals) == 0:
        return 0
    _, counts = np.unique(sorted_vals, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def _count_swaps(y: list) -> int:
    """Bottom-up merge sort of ``y`` in place; returns the number of inversions."""
    n = len(y)
    buf = [0] * n
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if y[j] < y[i]:
                    buf[k] = y[j]
                    swaps += mid - i
                    j += 1
                else:
                    buf[k] = y[i]
                    i += 1
                k += 1
            buf[k : k + mid - i] = y[i:mid]
            k += mid - i
            buf[k : k + hi - j] = y[j:hi]
            y[lo:hi] = buf[lo:hi]
        width *= 2
    return swaps


@dataclass(frozen=True)
class PairCounts:
    """Pair classification for two rankings of the same members."""

    n_pairs: int
    concordant: int
    discordant: int
    ties_a: int  # tied in a only
    ties_b: int  # tied in b only
    ties_both: int


def pair_counts(x: np.ndarray, y: np.ndarray) -> PairCounts:
    """O(n log n) pair counts (Knight's method)."""
    n = len(x)
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    tied_x = _tied_pairs(xs)
    joint = np.stack([xs, ys], axis=1)
    _, jc = np.unique(joint, axis=0, return_counts=True)
    tied_xy = int((jc * (jc - 1) // 2).sum())
    swaps = _count_swaps(ys.tolist())
    tied_y = _tied_pairs(np.sort(y))
    discordant = swaps
    concordant = n0 - tied_x - tied_y + tied_xy - discordant
    return PairCounts(
        n_pairs=n0,
        concordant=concordant,
        discordant=discordant,
        ties_a=tied_x - tied_xy,
        ties_b=tied_y - tied_xy,
        ties_both=tied_xy,
    )


def kendall_tau(
    a, b, tol: float = DEFAULT_TIE_TOL, variant: Literal["b", "a"] = "b"
) -> float:
    """Kendall's tau between two rankings; tau-b (tie-corrected) by default."""
    x, y = _paired(a, b, tol)
    c = pair_counts(x, y)
    s = c.concordant - c.discordant
    if variant == "a":
        return s / c.n_pairs
    if variant != "b":
        raise ValueError(f"unknown tau variant {variant!r}")
    da = c.concordant + c.discordant + c.ties_a
    db = c.concordant + c.discordant + c.ties_b
    if da == 0 or db == 0:
        raise UndefinedCorrelationError("Kendall tau-b undefined: a ranking is all tied")
    return float(np.clip(s / math.sqrt(da * db), -1.0, 1.0))


def tie_group_sizes(scores, tol: float = DEFAULT_TIE_TOL) -> np.ndarray:
    """Sizes of all tie groups with at least two members."""
    s = _as_scores(scores)
    if len(s) == 0:
        return np.zeros(0, dtype=np.int64)
    _, group = _tie_groups_sorted(s, tol)
    sizes = np.bincount(group)
    return sizes[sizes > 1]


def count_ties(scores, tol: float = DEFAULT_TIE_TOL) -> int:
    """Number of members whose score (relative ``tol``) equals some other member's."""
    return int(tie_group_sizes(scores, tol).sum())


def tie_reduction_pct(
    ties_without: int, ties_with: int, n: int, denominator: Literal["ties", "n"] = "ties"
) -> int:
    """Integer percent of ties removed, relative to the original tie count or to ``n``."""
    base = ties_without if denominator == "ties" else n
    if base == 0:
        return 0
    return round_pct((ties_without - ties_with) / base * 100)


def leader_displacement(without, with_, leader: int, tol: float = DEFAULT_TIE_TOL) -> tuple[int, int, int]:
    """Leader position in both rankings and the fall as an integer percent of ``n``."""
    s_without, s_with = _as_scores(without), _as_scores(with_)
    if len(s_without) != len(s_with):
        raise ValueError("rankings cover different member sets")
    if not 0 <= leader < len(s_without):
        raise ValueError(f"leader {leader} is not a member")
    pos_a = int(rank_positions(s_without, tol)[leader])
    pos_b = int(rank_positions(s_with, tol)[leader])
    return pos_a, pos_b, round_pct((pos_b - pos_a) / len(s_with) * 100)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def nonempty_bins(self) -> int:
        return int(np.count_nonzero(self.counts))


def score_histogram(
    scores, n_bins: int, value_range: tuple[float, float] | None = None, tol: float = DEFAULT_TIE_TOL
) -> Histogram:
    """Equal-width bins over ``[min, max]`` (or ``value_range``); counts sum to n."""
    if n_bins < 1:
        raise ValueError("need at least one bin")
    s = _as_scores(scores)
    lo, hi = (float(s.min()), float(s.max())) if value_range is None else value_range
    if hi - lo <= tol * max(abs(lo), abs(hi)):
        # numerically constant: a single occupied bin
        edges = np.linspace(lo, lo if hi <= lo else hi, n_bins + 1)
        counts = np.zeros(n_bins, dtype=np.int64)
        counts[0] = len(s)
        return Histogram(edges, counts)
    counts, edges = np.histogram(s, bins=n_bins, range=(lo, hi))
    return Histogram(edges, counts.astype(np.int64))
