"""Endorsement deduction: enrich a main skill's digraph from related skills.

An endorsement of ``j`` by ``i`` for skill ``k`` is read as evidence, with
confidence ``pi[k, main]``, that ``i`` would also endorse ``j`` for the main
skill. Evidence from several skills is combined as the probability of a
union of independent events, folded one skill at a time.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .graph import EndorsementDigraph, SkillSet


class DeductionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SkillDeductionMatrix:
    """``pi[k, t]``: probability that being skilled in ``k`` implies ``t``."""

    values: np.ndarray
    skills: SkillSet | None = None

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DeductionError(f"deduction matrix must be square, got shape {v.shape}")
        if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise DeductionError("deduction matrix entries must lie in [0, 1]")
        if not np.all(np.diag(v) == 1.0):
            bad = [k for k in range(len(v)) if v[k, k] != 1.0]
            raise DeductionError(f"diagonal entries must equal 1 (skills {bad})")
        if self.skills is not None and len(self.skills) != len(v):
            raise DeductionError(f"{len(self.skills)} skill names for a {len(v)}x{len(v)} matrix")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return len(self.values)

    def __getitem__(self, key):
        return self.values[key]

    def related_to(self, main: int) -> list[int]:
        """Skills other than ``main`` that imply it with positive probability."""
        col = self.values[:, main]
        return [k for k in range(self.size) if k != main and col[k] > 0]

    def plan(self, main: int) -> "DeductionPlan":
        return DeductionPlan(main, tuple(self.related_to(main)))


def load_deduction_matrix(path: str | os.PathLike) -> SkillDeductionMatrix:
    """CSV with a header row of skill names followed by one row per skill."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DeductionError(f"{path}: empty deduction matrix file")
    names = tuple(s.strip() for s in rows[0])
    try:
        values = [[float(x) for x in r] for r in rows[1:]]
    except ValueError as exc:
        raise DeductionError(f"{path}: {exc}") from None
    if len(values) != len(names) or any(len(r) != len(names) for r in values):
        raise DeductionError(f"{path}: expected a {len(names)}x{len(names)} matrix")
    return SkillDeductionMatrix(np.array(values), SkillSet(names))


def save_deduction_matrix(pi: SkillDeductionMatrix, path: str | os.PathLike) -> None:
    names = pi.skills.names if pi.skills is not None else tuple(f"s{k}" for k in range(pi.size))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in pi.values:
            writer.writerow([repr(float(x)) for x in row])


@dataclass(frozen=True)
class DeductionPlan:
    """Main skill plus the related skills folded into it, in fold order."""

    main: int
    related: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "related", tuple(int(k) for k in self.related))
        if self.main in self.related:
            raise DeductionError("the main skill cannot be listed as related to itself")
        if len(set(self.related)) != len(self.related):
            raise DeductionError("related skills must be distinct")

    def validate(self, pi: SkillDeductionMatrix) -> None:
        for k in (self.main, *self.related):
            if not 0 <= k < pi.size:
                raise DeductionError(f"skill {k} is not covered by the deduction matrix")
        zero = [k for k in self.related if pi[k, self.main] <= 0]
        if zero:
            raise DeductionError(
                f"skills {zero} do not imply skill {self.main} (pi = 0) and cannot be folded"
            )


def union_probability(existing: float, pi: float) -> float:
    """P(A or B) for independent events with P(A) = existing, P(B) = pi."""
    return existing + pi * (1.0 - existing)


def _check_inputs(
    digraphs: Sequence[EndorsementDigraph], pi: SkillDeductionMatrix, plan: DeductionPlan
) -> int:
    plan.validate(pi)
    needed = (plan.main, *plan.related)
    if max(needed) >= len(digraphs):
        raise DeductionError(f"plan refers to skill {max(needed)} but only {len(digraphs)} digraphs given")
    n = digraphs[plan.main].n
    for k in needed:
        if digraphs[k].n != n:
            raise DeductionError(f"digraph for skill {k} has {digraphs[k].n} members, expected {n}")
    return n


def _fold(
    digraphs: Sequence[EndorsementDigraph], pi: SkillDeductionMatrix, plan: DeductionPlan
) -> Iterable[dict[tuple[int, int], float]]:
    """Yield the sparse weight table after the main skill and after each fold."""
    q = digraphs[plan.main].arc_dict()
    yield q
    for k in plan.related:
        p = float(pi[k, plan.main])
        q = dict(q)
        for u, v, w in digraphs[k].arcs():
            q[(u, v)] = union_probability(q.get((u, v), 0.0), p * w)
        yield q


def deduce(
    digraphs: Sequence[EndorsementDigraph],
    pi: SkillDeductionMatrix,
    plan: DeductionPlan | None = None,
) -> EndorsementDigraph:
    """Weighted main-skill digraph enriched with endorsements deduced from related skills.

    ``digraphs`` is indexed by skill id. ``plan`` defaults to skill 0 as the
    main skill with every skill that implies it, in ascending order.
    Only member pairs endorsed for at least one folded skill are touched.
    """
    if plan is None:
        plan = pi.plan(0)
    n = _check_inputs(digraphs, pi, plan)
    q: dict[tuple[int, int], float] = {}
    for q in _fold(digraphs, pi, plan):
        pass
    return EndorsementDigraph._from_table(n, q)


@dataclass
class PropositionReport:
    """Outcome of checking the four deduction guarantees."""

    passed: bool
    checked_pairs: int
    failures: dict[str, str] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed


def verify_proposition1(
    digraphs: Sequence[EndorsementDigraph],
    pi: SkillDeductionMatrix,
    plan: DeductionPlan | None = None,
) -> PropositionReport:
    """Check bounds (a), monotone growth (b), zero iff unendorsed (c), one iff certain (d).

    Pairs outside the union of input arcs are zero in every fold, so only
    that union is inspected. The first counterexample per property is kept.
    """
    if plan is None:
        plan = pi.plan(0)
    _check_inputs(digraphs, pi, plan)
    folds = list(_fold(digraphs, pi, plan))
    skills = (plan.main, *plan.related)
    implies = {k: (1.0 if k == plan.main else float(pi[k, plan.main])) for k in skills}
    pairs = sorted(set().union(*(digraphs[k].arc_dict() for k in skills)))
    tables = {k: digraphs[k].arc_dict() for k in skills}
    failures: dict[str, str] = {}

    def fail(prop: str, msg: str) -> None:
        failures.setdefault(prop, msg)

    final = folds[-1]
    for pair in pairs:
        prev = 0.0
        for step, q in enumerate(folds):
            val = q.get(pair, 0.0)
            if not 0.0 <= val <= 1.0:
                fail("a", f"Q_{step}{pair} = {val} outside [0, 1]")
            if step > 0 and val < prev:
                fail("b", f"Q_{step}{pair} = {val} < Q_{step - 1}{pair} = {prev}")
            prev = val
        last = final.get(pair, 0.0)
        endorsed_any = any(pair in tables[k] for k in skills)
        if (last == 0.0) == endorsed_any:
            fail("c", f"Q_l{pair} = {last} but endorsed for some skill: {endorsed_any}")
        certain = any(tables[k].get(pair, 0.0) == 1.0 and implies[k] == 1.0 for k in skills)
        if (last == 1.0) != certain:
            fail("d", f"Q_l{pair} = {last!r} but a certain endorsement exists: {certain}")
    return PropositionReport(passed=not failures, checked_pairs=len(pairs), failures=failures)
