"""Synthetic endorsement networks.

A dataset is built in three independent random phases, each drawing from
its own stream of a PCG64 generator seeded by ``(seed, phase)``:

* ``base``   -- contact network grown by preferential attachment with
  triangle closing;
* ``skills`` -- which members hold which skills (annealed against a target
  co-occurrence matrix) and which contacts endorse them;
* ``spam``   -- collusion alliances appended afterwards.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .graph import EndorsementDigraph, MemberGraph, SkillSet

logger = logging.getLogger(__name__)

PHASE_BASE = 0
PHASE_SKILLS = 1
PHASE_SPAM = 2


def phase_rng(seed: int, phase: int) -> np.random.Generator:
    """Independent generator for one phase; adding phases never shifts others."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(phase,))))


class InfeasibleTargetsError(RuntimeError):
    """The endorsement targets could not be met; carries what was achieved."""

    def __init__(self, message: str, achieved: np.ndarray | None = None, arc_counts=None):
        super().__init__(message)
        self.achieved = achieved
        self.arc_counts = arc_counts


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_target: int = 1493
    skills: SkillSet = field(default_factory=lambda: SkillSet(("skill",)))
    skill_arc_targets: tuple[int, ...] = (0,)
    # per-candidate closing probability; None calibrates it to ``edge_target``
    triangle_closing_prob: float | None = None
    edge_target: int | None = None
    # None leaves skill overlap unconstrained
    cooccurrence_target: np.ndarray | None = None
    cooccurrence_tolerance: float = 0.05
    # endorsed members per skill; None derives them from arcs_per_endorsed
    endorsed_counts: tuple[int, ...] | None = None
    arcs_per_endorsed: float = 1.5
    # exponent on degree when picking endorsed members and extra endorsements
    hub_bias: float = 0.5
    allocation_bias: float = 0.0
    anneal_steps: int = 100_000
    # weight of the annealing term preferring fewer distinct endorsed members
    compactness: float = 0.0
    arc_tolerance: float = 0.10

    def __post_init__(self) -> None:
        k = len(self.skills)
        object.__setattr__(self, "skill_arc_targets", tuple(int(a) for a in self.skill_arc_targets))
        if len(self.skill_arc_targets) != k:
            raise ValueError(f"{len(self.skill_arc_targets)} arc targets for {k} skills")
        if any(a < 0 for a in self.skill_arc_targets):
            raise ValueError("arc targets must be non-negative")
        if self.n_target < 2:
            raise ValueError("the base network needs at least two members")
        if self.triangle_closing_prob is not None and not 0 <= self.triangle_closing_prob <= 1:
            raise ValueError("triangle_closing_prob must lie in [0, 1]")
        if self.cooccurrence_target is not None:
            t = np.array(self.cooccurrence_target, dtype=float)
            if t.shape != (k, k):
                raise ValueError(f"co-occurrence target must be {k}x{k}")
            if not np.all(np.diag(t) == 1.0) or np.any(t < 0) or np.any(t > 1):
                raise ValueError("co-occurrence target needs a unit diagonal and entries in [0, 1]")
            t.setflags(write=False)
            object.__setattr__(self, "cooccurrence_target", t)
        if self.endorsed_counts is not None:
            object.__setattr__(self, "endorsed_counts", tuple(int(c) for c in self.endorsed_counts))
            if len(self.endorsed_counts) != k:
                raise ValueError(f"{len(self.endorsed_counts)} endorsed counts for {k} skills")

    def target_sizes(self) -> np.ndarray:
        if self.endorsed_counts is not None:
            sizes = np.array(self.endorsed_counts, dtype=float)
        else:
            sizes = np.array(self.skill_arc_targets, dtype=float) / self.arcs_per_endorsed
        arcs = np.array(self.skill_arc_targets, dtype=float)
        return np.where(arcs > 0, np.clip(np.round(sizes), 1, arcs), 0)


# ---------------------------------------------------------------------------
# Base contact network
# ---------------------------------------------------------------------------


def _grow(n: int, p: float, rng: np.random.Generator) -> MemberGraph:
    adj: list[list[int]] = [[] for _ in range(n)]
    # endpoint multiset: uniform draws from it are degree-proportional
    ends = [0, 1]
    adj[0].append(1)
    adj[1].append(0)
    edges = [(0, 1)]
    for t in range(2, n):
        host = ends[int(rng.integers(len(ends)))]
        candidates = sorted(adj[host])
        coins = rng.random(len(candidates))
        adj[t].append(host)
        adj[host].append(t)
        ends += (t, host)
        edges.append((host, t))
        for w, c in zip(candidates, coins):
            if c < p:
                adj[t].append(w)
                adj[w].append(t)
                ends += (t, w)
                edges.append((w, t))
    return MemberGraph.from_edges(n, edges)


def calibrate_triangle_closing(n: int, edge_target: int, seed: int, iterations: int = 24) -> float:
    """Closing probability whose network (for this seed) has edges nearest ``edge_target``."""
    lo, hi = 0.0, 1.0
    best_p, best_err = 0.0, math.inf
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        m = _grow(n, mid, phase_rng(seed, PHASE_BASE)).n_edges
        err = abs(m - edge_target)
        if err < best_err:
            best_p, best_err = mid, err
        if m == edge_target:
            break
        if m < edge_target:
            lo = mid
        else:
            hi = mid
    return best_p


def generate_base_network(cfg: GeneratorConfig) -> MemberGraph:
    """Grow a contact network: one preferential link per arrival plus triangle closing.

    Each arriving member links to an existing member drawn proportionally
    to degree, then to each of that member's contacts with the closing
    probability.
    """
    p = resolve_closing_prob(cfg)
    return _grow(cfg.n_target, p, phase_rng(cfg.seed, PHASE_BASE))


def resolve_closing_prob(cfg: GeneratorConfig) -> float:
    if cfg.triangle_closing_prob is not None:
        return cfg.triangle_closing_prob
    if cfg.edge_target is None:
        raise ValueError("set either triangle_closing_prob or edge_target")
    return calibrate_triangle_closing(cfg.n_target, cfg.edge_target, cfg.seed)


# ---------------------------------------------------------------------------
# Skill profiles
# ---------------------------------------------------------------------------


def cooccurrence_from_sets(sizes: np.ndarray, inter: np.ndarray) -> np.ndarray:
    """Row-normalized overlap: ``inter[i, j] / sizes[i]`` (0 where ``sizes[i]`` is 0)."""
    sizes = np.asarray(sizes, dtype=float)
    out = np.zeros_like(inter, dtype=float)
    nz = sizes > 0
    out[nz] = inter[nz] / sizes[nz, None]
    return out


@dataclass
class ProfileFit:
    """Number of members holding each skill combination."""

    patterns: np.ndarray  # (P, K) bool, every non-empty combination
    counts: np.ndarray  # (P,) int
    achieved: np.ndarray
    residual: float

    @property
    def sizes(self) -> np.ndarray:
        return self.patterns.T.astype(np.int64) @ self.counts


def _objective(sizes, inter, total, target, want, mask, weight, compact) -> float:
    c = cooccurrence_from_sets(sizes, inter)
    err = float(np.abs(c - target)[mask].sum())
    err += weight * float((np.abs(sizes - want) / np.maximum(want, 1)).sum())
    return err + compact * total / max(want.sum(), 1)


def fit_profiles(
    target: np.ndarray,
    want_sizes: np.ndarray,
    rng: np.random.Generator,
    steps: int = 100_000,
    pool: int | None = None,
    size_weight: float = 0.5,
    compactness: float = 0.0,
) -> ProfileFit:
    """Anneal skill-combination counts so set overlaps match ``target``.

    Co-occurrence depends only on how many members hold each combination of
    skills, so the search runs over the ``2**K - 1`` combination counts.
    Moves add, remove, or re-assign one member; the temperature decays
    geometrically from 1 to 1e-4 over ``steps`` proposals.
    """
    k = len(target)
    patterns = np.array([[(b >> j) & 1 for j in range(k)] for b in range(1, 2**k)], dtype=bool)
    n_pat = len(patterns)
    outer = np.einsum("pi,pj->pij", patterns, patterns).astype(np.int64)
    pat_int = patterns.astype(np.int64)
    mask = ~np.eye(k, dtype=bool)
    want = np.asarray(want_sizes, dtype=float)
    pool = pool if pool is not None else int(want.sum()) * 4 + 1

    # start from members holding a single skill each
    counts = np.zeros(n_pat, dtype=np.int64)
    for j in range(k):
        counts[(1 << j) - 1] = int(want[j])
    sizes = pat_int.T @ counts
    inter = np.einsum("p,pij->ij", counts, outer)
    total = int(counts.sum())
    cur = _objective(sizes, inter, total, target, want, mask, size_weight, compactness)
    best = (cur, counts.copy())

    t0, t1 = 1.0, 1e-4
    decay = (t1 / t0) ** (1.0 / max(steps, 1))
    temp = t0
    kinds = rng.integers(3, size=steps)
    picks = rng.integers(n_pat, size=(steps, 2))
    coins = rng.random(steps)
    for s in range(steps):
        kind = kinds[s]
        add, rem = picks[s]
        if kind == 0:  # add one member
            rem = -1
        elif kind == 1:  # remove one member
            add = -1
        elif add == rem:
            temp *= decay
            continue
        if rem >= 0 and counts[rem] == 0:
            temp *= decay
            continue
        if add >= 0 and rem < 0 and total >= pool:
            temp *= decay
            continue
        d_sizes = (pat_int[add] if add >= 0 else 0) - (pat_int[rem] if rem >= 0 else 0)
        d_inter = (outer[add] if add >= 0 else 0) - (outer[rem] if rem >= 0 else 0)
        new_sizes = sizes + d_sizes
        new_inter = inter + d_inter
        new_total = total + (add >= 0) - (rem >= 0)
        new = _objective(new_sizes, new_inter, new_total, target, want, mask, size_weight, compactness)
        if new <= cur or coins[s] < math.exp((cur - new) / temp):
            if add >= 0:
                counts[add] += 1
            if rem >= 0:
                counts[rem] -= 1
            sizes, inter, total, cur = new_sizes, new_inter, new_total, new
            if cur < best[0]:
                best = (cur, counts.copy())
        temp *= decay

    counts = best[1]
    sizes = pat_int.T @ counts
    inter = np.einsum("p,pij->ij", counts, outer)
    achieved = cooccurrence_from_sets(sizes, inter)
    residual = float(np.abs(achieved - target)[mask].max()) if k > 1 else 0.0
    return ProfileFit(patterns, counts, achieved, residual)


def _weighted_order(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random permutation where heavier items tend to come first (Gumbel keys)."""
    keys = np.log(np.maximum(weights, 1e-300)) + rng.gumbel(size=len(weights))
    return np.argsort(-keys, kind="stable")


def assign_profiles(
    fit: ProfileFit, degrees: np.ndarray, hub_bias: float, rng: np.random.Generator
) -> np.ndarray:
    """Member x skill membership matrix realizing the fitted combination counts.

    Endorsed members are drawn with probability growing with degree; richer
    combinations go to members drawn earlier.
    """
    n, k = len(degrees), fit.patterns.shape[1]
    total = int(fit.counts.sum())
    if total > n:
        raise InfeasibleTargetsError(f"profiles need {total} endorsed members, network has {n}")
    order = _weighted_order(np.asarray(degrees, dtype=float) ** hub_bias, rng)[:total]
    by_richness = np.argsort(-fit.patterns.sum(axis=1), kind="stable")
    members = np.zeros((n, k), dtype=bool)
    slot = 0
    for p in by_richness:
        for _ in range(int(fit.counts[p])):
            members[order[slot]] = fit.patterns[p]
            slot += 1
    return members


def independent_profiles(
    want_sizes: np.ndarray, degrees: np.ndarray, hub_bias: float, rng: np.random.Generator
) -> np.ndarray:
    """Membership matrix with each skill's members drawn separately (no overlap target)."""
    n, k = len(degrees), len(want_sizes)
    w = np.asarray(degrees, dtype=float) ** hub_bias
    members = np.zeros((n, k), dtype=bool)
    for j in range(k):
        chosen = _weighted_order(w, rng)[: int(want_sizes[j])]
        members[chosen, j] = True
    return members


# ---------------------------------------------------------------------------
# Endorsement digraphs
# ---------------------------------------------------------------------------


def _direct_skill(
    base: MemberGraph,
    endorsed: np.ndarray,
    n_arcs: int,
    allocation_bias: float,
    rng: np.random.Generator,
) -> EndorsementDigraph:
    """Endorse every member of ``endorsed`` once, then spread the remaining arcs.

    Sources are contacts of the endorsed member, so arcs follow base edges.
    Extra arcs go to members with spare contacts, favouring high degree.
    """
    deg = base.degrees()
    chosen = np.flatnonzero(endorsed)
    pools = {int(v): [int(u) for u in rng.permutation(base.neighbors(v))] for v in chosen}
    arcs: list[tuple[int, int]] = []
    for v in chosen:
        if pools[int(v)]:
            arcs.append((pools[int(v)].pop(), int(v)))
    remaining = n_arcs - len(arcs)
    open_ = [int(v) for v in chosen if pools[int(v)]]
    weights = {v: float(deg[v]) ** allocation_bias for v in open_}
    while remaining > 0 and open_:
        w = np.array([weights[v] for v in open_])
        v = open_[int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right").clip(0, len(open_) - 1))]
        arcs.append((pools[v].pop(), v))
        remaining -= 1
        if not pools[v]:
            open_.remove(v)
    return EndorsementDigraph.from_arcs(base.n, arcs)


def measure_cooccurrence(digraphs: Sequence[EndorsementDigraph]) -> np.ndarray:
    """``[i, j]`` = share of members endorsed for skill i who are also endorsed for j.

    A member is endorsed for a skill when it has an incoming arc in that
    skill's digraph. Rows of skills nobody is endorsed for are all zero.
    """
    if not digraphs:
        return np.zeros((0, 0))
    n = digraphs[0].n
    if any(d.n != n for d in digraphs):
        raise ValueError("digraphs must share the member set")
    e = np.stack([d.endorsed() for d in digraphs], axis=1).astype(np.int64)
    sizes = e.sum(axis=0)
    empty = [k for k in range(len(sizes)) if sizes[k] == 0]
    if empty:
        logger.warning("no member endorsed for skills %s; co-occurrence rows set to 0", empty)
    return cooccurrence_from_sets(sizes, e.T @ e)


@dataclass
class EndorsementResult:
    digraphs: list[EndorsementDigraph]
    achieved: np.ndarray
    residual: float | None
    profile_sizes: np.ndarray


def _endorse(base: MemberGraph, cfg: GeneratorConfig) -> EndorsementResult:
    rng = phase_rng(cfg.seed, PHASE_SKILLS)
    want = cfg.target_sizes()
    deg = base.degrees()
    residual = None
    if cfg.cooccurrence_target is not None:
        fit = fit_profiles(
            cfg.cooccurrence_target, want, rng, steps=cfg.anneal_steps, pool=base.n,
            compactness=cfg.compactness,
        )
        residual = fit.residual
        members = assign_profiles(fit, deg, cfg.hub_bias, rng)
    else:
        members = independent_profiles(want, deg, cfg.hub_bias, rng)
    digraphs = [
        _direct_skill(base, members[:, j], cfg.skill_arc_targets[j], cfg.allocation_bias, rng)
        for j in range(len(cfg.skills))
    ]
    achieved = measure_cooccurrence(digraphs)
    if cfg.cooccurrence_target is not None:
        k = len(cfg.skills)
        mask = ~np.eye(k, dtype=bool)
        residual = float(np.abs(achieved - cfg.cooccurrence_target)[mask].max()) if k > 1 else 0.0
    return EndorsementResult(digraphs, achieved, residual, members.sum(axis=0))


def _check_targets(res: EndorsementResult, cfg: GeneratorConfig) -> None:
    counts = [d.n_arcs for d in res.digraphs]
    for k, (got, want) in enumerate(zip(counts, cfg.skill_arc_targets)):
        if abs(got - want) > cfg.arc_tolerance * want:
            raise InfeasibleTargetsError(
                f"skill {cfg.skills.names[k]!r}: {got} arcs generated, target {want}",
                res.achieved,
                counts,
            )
    if res.residual is not None and res.residual > cfg.cooccurrence_tolerance:
        raise InfeasibleTargetsError(
            f"co-occurrence residual {res.residual:.3f} exceeds tolerance {cfg.cooccurrence_tolerance}",
            res.achieved,
            counts,
        )


def generate_endorsements(base: MemberGraph, cfg: GeneratorConfig) -> list[EndorsementDigraph]:
    """One unweighted endorsement digraph per skill, every arc along a base edge.

    Raises :class:`InfeasibleTargetsError` (with the achieved co-occurrence
    matrix) when arc counts or co-occurrences miss their tolerances.
    """
    res = _endorse(base, cfg)
    _check_targets(res, cfg)
    return res.digraphs


@dataclass
class Dataset:
    config: GeneratorConfig
    base: MemberGraph
    digraphs: list[EndorsementDigraph]
    achieved: np.ndarray
    residual: float | None
    closing_prob: float

    @property
    def skills(self) -> SkillSet:
        return self.config.skills

    @property
    def arc_counts(self) -> list[int]:
        return [d.n_arcs for d in self.digraphs]


def generate_dataset(cfg: GeneratorConfig, strict: bool = True) -> Dataset:
    """Base network plus endorsements; ``strict`` raises on missed targets."""
    p = resolve_closing_prob(cfg)
    base = _grow(cfg.n_target, p, phase_rng(cfg.seed, PHASE_BASE))
    res = _endorse(base, cfg)
    if strict:
        _check_targets(res, cfg)
    return Dataset(cfg, base, res.digraphs, res.achieved, res.residual, p)


# ---------------------------------------------------------------------------
# Collusion spam
# ---------------------------------------------------------------------------


class AttachMode(str, Enum):
    ISOLATED = "isolated"
    LINKED = "linked-to-network"


@dataclass(frozen=True)
class SpamAllianceConfig:
    skill: int = 0
    n_assistants: int = 2
    attach_mode: AttachMode = AttachMode.ISOLATED

    def __post_init__(self) -> None:
        if self.n_assistants < 1:
            raise ValueError("a spam alliance needs at least one assistant")
        object.__setattr__(self, "attach_mode", AttachMode(self.attach_mode))


def inject_spam_alliance(
    d: EndorsementDigraph, cfg: SpamAllianceConfig, rng: np.random.Generator | None = None
) -> tuple[EndorsementDigraph, int]:
    """Append a leader and ``n_assistants`` helpers who endorse each other.

    Every assistant endorses the leader and the leader endorses every
    assistant back, so the score the leader collects is recycled to the
    helpers. In linked mode each assistant is additionally endorsed by one
    randomly chosen existing member. Returns the enlarged digraph and the
    leader's id (the first new member).
    """
    leader = d.n
    helpers = range(d.n + 1, d.n + 1 + cfg.n_assistants)
    arcs: list[tuple[int, int]] = []
    for a in helpers:
        arcs.append((a, leader))
        arcs.append((leader, a))
    if cfg.attach_mode is AttachMode.LINKED and d.n > 0:
        if rng is None:
            raise ValueError("linked spam alliances need a random generator")
        for a in helpers:
            arcs.append((int(rng.integers(d.n)), a))
    return d.with_arcs(arcs, n_new=d.n + 1 + cfg.n_assistants), leader
