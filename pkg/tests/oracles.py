"""Independent reference implementations used only by the tests.

Each oracle works from raw arc lists and plain numpy so that it shares no
code path with the package it checks.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def dense_pagerank(n, arcs, alpha=0.85, restart=None):
    """Dominant left eigenvector of the assembled Google matrix."""
    v = np.full(n, 1.0 / n) if restart is None else np.asarray(restart, dtype=float)
    W = np.zeros((n, n))
    for u, x, w in arcs:
        W[u, x] += w
    P = np.empty((n, n))
    for i in range(n):
        s = W[i].sum()
        P[i] = W[i] / s if s > 0 else v
    G = alpha * P + (1 - alpha) * np.outer(np.ones(n), v)
    vals, vecs = np.linalg.eig(G.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    p = np.real(vecs[:, k])
    return p / p.sum()


def union_by_subsets(probs):
    """P(at least one event) for independent events, by inclusion-exclusion."""
    total = 0.0
    for r in range(1, len(probs) + 1):
        for subset in itertools.combinations(probs, r):
            total += (-1) ** (r + 1) * math.prod(subset)
    return total


def brute_pair_counts(x, y):
    """(concordant, discordant, tied only in x, tied only in y, tied in both)."""
    c = d = tx = ty = txy = 0
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy = x[i] - x[j], y[i] - y[j]
            if dx == 0 and dy == 0:
                txy += 1
            elif dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif (dx > 0) == (dy > 0):
                c += 1
            else:
                d += 1
    return c, d, tx, ty, txy


def brute_tau_b(x, y):
    c, d, tx, ty, _ = brute_pair_counts(x, y)
    return (c - d) / math.sqrt((c + d + tx) * (c + d + ty))


def spearman_closed_form(x, y):
    """1 - 6 sum d^2 / (n (n^2 - 1)), valid without ties."""
    n = len(x)
    rx = np.argsort(np.argsort(x))
    ry = np.argsort(np.argsort(y))
    d = (rx - ry).astype(float)
    return 1 - 6 * float(d @ d) / (n * (n * n - 1))


def random_arcs(rng, n, density=0.3, weighted=True):
    arcs = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < density:
                w = float(rng.uniform(0.05, 1.0)) if weighted else 1.0
                arcs.append((u, v, w))
    return arcs
