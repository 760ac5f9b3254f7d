"""Evaluation protocol: plain vs. deduced ranking for every skill of a dataset."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence, TextIO

import numpy as np

from .deduction import DeductionPlan, SkillDeductionMatrix, deduce
from .graph import EndorsementDigraph
from .metrics import (
    Histogram,
    count_ties,
    kendall_tau,
    leader_displacement,
    score_histogram,
    spearman_rho,
    tie_group_sizes,
    tie_reduction_pct,
)
from .netgen import AttachMode, SpamAllianceConfig, inject_spam_alliance, phase_rng, PHASE_SPAM
from .pagerank import DEFAULT_TIE_TOL, PageRankParams, RankVector, pagerank


@dataclass
class ExperimentReport:
    skill: int
    skill_name: str
    n: int
    n_endorsements: int
    rho: float
    tau: float
    ties_without: int
    ties_with: int
    tie_groups_without: int
    tie_groups_with: int
    tie_reduction_pct: int
    leader: int | None = None
    leader_pos_without: int | None = None
    leader_pos_with: int | None = None
    leader_fall_pct: int | None = None
    histogram_without: Histogram | None = field(default=None, repr=False)
    histogram_with: Histogram | None = field(default=None, repr=False)
    converged: bool = True


@dataclass(frozen=True)
class EvaluationSettings:
    pagerank: PageRankParams = field(default_factory=PageRankParams)
    tie_tol: float = DEFAULT_TIE_TOL
    tie_denominator: Literal["ties", "n"] = "ties"
    n_bins: int = 20
    tau_variant: Literal["b", "a"] = "b"


def with_spam(
    digraphs: Sequence[EndorsementDigraph],
    main: int,
    spam: SpamAllianceConfig | None,
    rng: np.random.Generator | None = None,
) -> tuple[list[EndorsementDigraph], int | None]:
    """Inject an alliance into ``main``'s digraph and pad every other skill to the new size."""
    if spam is None:
        return list(digraphs), None
    spammed, leader = inject_spam_alliance(digraphs[main], spam, rng)
    out = [spammed if k == main else d.enlarged(spammed.n) for k, d in enumerate(digraphs)]
    return out, leader


def rank_both(
    digraphs: Sequence[EndorsementDigraph],
    pi: SkillDeductionMatrix,
    main: int,
    params: PageRankParams,
) -> tuple[RankVector, RankVector, EndorsementDigraph]:
    plain = pagerank(digraphs[main], params)
    enriched = deduce(digraphs, pi, pi.plan(main))
    return plain, pagerank(enriched, params), enriched


def evaluate_skill(
    digraphs: Sequence[EndorsementDigraph],
    pi: SkillDeductionMatrix,
    main: int,
    spam: SpamAllianceConfig | None = None,
    settings: EvaluationSettings = EvaluationSettings(),
    skill_name: str | None = None,
    seed: int = 0,
) -> ExperimentReport:
    n_endorsements = digraphs[main].n_arcs
    rng = phase_rng(seed, PHASE_SPAM) if spam is not None and spam.attach_mode is AttachMode.LINKED else None
    graphs, leader = with_spam(digraphs, main, spam, rng)
    plain, deduced, _ = rank_both(graphs, pi, main, settings.pagerank)
    tol = settings.tie_tol
    n = graphs[main].n
    ties_a, ties_b = count_ties(plain, tol), count_ties(deduced, tol)
    lo = min(plain.scores.min(), deduced.scores.min())
    hi = max(plain.scores.max(), deduced.scores.max())
    report = ExperimentReport(
        skill=main,
        skill_name=skill_name if skill_name is not None else str(main),
        n=n,
        n_endorsements=n_endorsements,
        rho=_safe(spearman_rho, plain, deduced, tol),
        tau=_safe(kendall_tau, plain, deduced, tol, settings.tau_variant),
        ties_without=ties_a,
        ties_with=ties_b,
        tie_groups_without=len(tie_group_sizes(plain, tol)),
        tie_groups_with=len(tie_group_sizes(deduced, tol)),
        tie_reduction_pct=tie_reduction_pct(ties_a, ties_b, n, settings.tie_denominator),
        histogram_without=score_histogram(plain, settings.n_bins, (lo, hi), tol),
        histogram_with=score_histogram(deduced, settings.n_bins, (lo, hi), tol),
        converged=plain.converged and deduced.converged,
    )
    if leader is not None:
        pa, pb, fall = leader_displacement(plain, deduced, leader, tol)
        report.leader = leader
        report.leader_pos_without, report.leader_pos_with, report.leader_fall_pct = pa, pb, fall
    return report


def _safe(fn, *args) -> float:
    from .metrics import UndefinedCorrelationError

    try:
        return fn(*args)
    except UndefinedCorrelationError:
        return math.nan


@dataclass
class SweepCell:
    n_assistants: int
    pos_without: int
    pos_with: int
    fall_pct: int


def assistant_sweep(
    digraphs: Sequence[EndorsementDigraph],
    pi: SkillDeductionMatrix,
    main: int,
    assistants: Sequence[int],
    attach_mode: AttachMode = AttachMode.ISOLATED,
    settings: EvaluationSettings = EvaluationSettings(),
    seed: int = 0,
) -> list[SweepCell]:
    """Leader positions without/with deduction as the alliance grows."""
    cells = []
    for m in assistants:
        spam = SpamAllianceConfig(main, m, attach_mode)
        rng = phase_rng(seed, PHASE_SPAM) if spam.attach_mode is AttachMode.LINKED else None
        graphs, leader = with_spam(digraphs, main, spam, rng)
        plain, deduced, _ = rank_both(graphs, pi, main, settings.pagerank)
        pa, pb, fall = leader_displacement(plain, deduced, leader, settings.tie_tol)
        cells.append(SweepCell(m, pa, pb, fall))
    return cells


# ---------------------------------------------------------------------------
# Running a whole dataset
# ---------------------------------------------------------------------------


@dataclass
class Evaluation:
    reports: list[ExperimentReport]
    sweeps: dict[int, list[SweepCell]] = field(default_factory=dict)

    def averages(self) -> dict[str, float]:
        def mean(attr):
            vals = [getattr(r, attr) for r in self.reports if getattr(r, attr) is not None]
            return float(np.mean(vals)) if vals else math.nan

        keys = ("rho", "tau", "ties_without", "ties_with", "tie_reduction_pct",
                "leader_pos_without", "leader_pos_with", "leader_fall_pct")
        return {k: mean(k) for k in keys}


def _evaluate_task(args):
    digraphs, pi, main, spam, settings, name, seed, sweep = args
    report = evaluate_skill(digraphs, pi, main, spam, settings, name, seed)
    cells = None
    if sweep is not None:
        mode = spam.attach_mode if spam is not None else AttachMode.ISOLATED
        cells = assistant_sweep(digraphs, pi, main, sweep, mode, settings, seed)
    return report, cells


def evaluate_dataset(
    digraphs: Sequence[EndorsementDigraph],
    pi: SkillDeductionMatrix,
    skills: Sequence[int],
    names: Sequence[str],
    spam: SpamAllianceConfig | None = None,
    sweep: Sequence[int] | None = None,
    settings: EvaluationSettings = EvaluationSettings(),
    seed: int = 0,
    workers: int = 1,
) -> Evaluation:
    """Evaluate each main skill; results come back in ``skills`` order for any ``workers``."""
    tasks = []
    for k in skills:
        skill_spam = SpamAllianceConfig(k, spam.n_assistants, spam.attach_mode) if spam is not None else None
        tasks.append((list(digraphs), pi, k, skill_spam, settings, names[k], seed, sweep))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_task, tasks))
    else:
        results = [_evaluate_task(t) for t in tasks]
    ev = Evaluation([r for r, _ in results])
    if sweep is not None:
        ev.sweeps = {k: cells for k, (_, cells) in zip(skills, results)}
    return ev


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

REPORT_COLUMNS = [
    "skill", "n_endorsements", "rho", "tau",
    "ties_without", "ties_with", "tie_reduction_pct",
    "leader_pos_without", "leader_pos_with", "leader_fall_pct",
]


def _fmt(x, digits: int = 4) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.{digits}f}"
    return str(x)


def write_report_csv(ev: Evaluation, stream: TextIO, with_leader: bool) -> None:
    cols = REPORT_COLUMNS if with_leader else REPORT_COLUMNS[:7]
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(cols)
    for r in ev.reports:
        row = [r.skill_name, r.n_endorsements, r.rho, r.tau, r.ties_without, r.ties_with,
               r.tie_reduction_pct, r.leader_pos_without, r.leader_pos_with, r.leader_fall_pct]
        writer.writerow([_fmt(x) for x in row[: len(cols)]])
    avg = ev.averages()
    row = ["AVG", "", avg["rho"], avg["tau"], "", "", avg["tie_reduction_pct"], "", "", avg["leader_fall_pct"]]
    writer.writerow([_fmt(x, 1) if i in (6, 9) else _fmt(x) for i, x in enumerate(row[: len(cols)])])


def write_histogram_csv(r: ExperimentReport, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["bin_low", "bin_high", "count_without", "count_with"])
    h0, h1 = r.histogram_without, r.histogram_with
    for i in range(len(h0.counts)):
        writer.writerow([repr(float(h0.edges[i])), repr(float(h0.edges[i + 1])), int(h0.counts[i]), int(h1.counts[i])])


def write_sweep_csv(ev: Evaluation, names: Sequence[str], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    sizes = [c.n_assistants for c in next(iter(ev.sweeps.values()))]
    header = ["skill"]
    for m in sizes:
        header += [f"{m}_without", f"{m}_with", f"{m}_fall_pct"]
    writer.writerow(header)
    for k, cells in ev.sweeps.items():
        row: list = [names[k]]
        for c in cells:
            row += [c.pos_without, c.pos_with, c.fall_pct]
        writer.writerow(row)
