"""Command-line front end: ``endorank {generate,rank,evaluate,deduce,cooccur}``.

Exit codes: 0 success, 2 configuration or input error, 3 generation could
not meet its targets, 4 PageRank did not converge (outputs are kept).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from dataclasses import replace
from typing import Sequence, TextIO

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .deduction import (
    DeductionError,
    DeductionPlan,
    SkillDeductionMatrix,
    deduce,
    load_deduction_matrix,
    save_deduction_matrix,
)
from .experiment import evaluate_dataset, write_histogram_csv, write_report_csv, write_sweep_csv
from .graph import (
    EndorsementDigraph,
    GraphFormatError,
    SkillSet,
    load_endorsement_digraph,
    load_member_graph,
    load_member_labels,
    save_member_labels,
    save_endorsement_digraph,
    save_member_graph,
    write_endorsement_digraph,
)
from .netgen import InfeasibleTargetsError, generate_dataset, measure_cooccurrence
from .pagerank import ConvergenceWarning, PageRankParams, pagerank, write_rank_csv

logger = logging.getLogger("endorank")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4

MANIFEST = "manifest.json"
DEDUCTION_FILE = "deduction.csv"
BASE_FILE = "base.txt"
NAMES_FILE = "names.txt"


def skill_file(k: int) -> str:
    return f"skill_{k}.txt"


# ---------------------------------------------------------------------------
# Dataset directories
# ---------------------------------------------------------------------------


def _dump_json(obj, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _matrix(a: np.ndarray) -> list[list[float]]:
    return [[round(float(x), 6) for x in row] for row in a]


def write_dataset(cfg: ExperimentConfig, out: str) -> dict:
    """Generate (or copy the inline) dataset into ``out``; returns the manifest."""
    os.makedirs(out, exist_ok=True)
    manifest: dict = {"config": cfg.raw, "seed": cfg.seed, "skills": list(cfg.skills.names)}
    if cfg.generator is not None:
        ds = generate_dataset(cfg.generator)
        save_member_graph(ds.base, os.path.join(out, BASE_FILE))
        digraphs = ds.digraphs
        manifest.update(
            base_file=BASE_FILE,
            n_members=ds.base.n,
            n_edges=ds.base.n_edges,
            triangle_closing_prob=ds.closing_prob,
            cooccurrence_residual=ds.residual,
        )
    else:
        digraphs = list(cfg.dataset.digraphs)
        manifest.update(n_members=cfg.dataset.n)
        if cfg.dataset.names is not None:
            save_member_labels(cfg.dataset.names, os.path.join(out, NAMES_FILE))
            manifest.update(names_file=NAMES_FILE)
    for k, d in enumerate(digraphs):
        save_endorsement_digraph(d, os.path.join(out, skill_file(k)), comment=f"skill {cfg.skills.names[k]}")
    save_deduction_matrix(cfg.deduction_matrix, os.path.join(out, DEDUCTION_FILE))
    manifest.update(
        skill_files=[skill_file(k) for k in range(len(digraphs))],
        deduction_file=DEDUCTION_FILE,
        arc_counts=[d.n_arcs for d in digraphs],
        achieved_cooccurrence=_matrix(measure_cooccurrence(digraphs)),
    )
    _dump_json(manifest, os.path.join(out, MANIFEST))
    return manifest


class Dataset:
    """A dataset directory loaded back from disk."""

    def __init__(self, path: str):
        mpath = os.path.join(path, MANIFEST)
        try:
            with open(mpath, encoding="utf-8") as fh:
                self.manifest = json.load(fh)
        except OSError:
            raise ConfigError(f"{path} is not a dataset directory (no {MANIFEST})") from None
        self.path = path
        self.skills = SkillSet(tuple(self.manifest["skills"]))
        n = self.manifest["n_members"]
        self.digraphs = [load_endorsement_digraph(os.path.join(path, f), n) for f in self.manifest["skill_files"]]

    def deduction_matrix(self) -> SkillDeductionMatrix:
        name = self.manifest.get("deduction_file")
        path = os.path.join(self.path, name) if name else None
        if path is None or not os.path.exists(path):
            raise ConfigError(f"{self.path}: no deduction matrix; --deduce needs one")
        pi = load_deduction_matrix(path)
        if pi.size != len(self.skills):
            raise ConfigError(f"deduction matrix covers {pi.size} skills, dataset has {len(self.skills)}")
        return pi

    def labels(self) -> list[str] | None:
        name = self.manifest.get("names_file")
        if not name:
            return None
        return load_member_labels(os.path.join(self.path, name), self.manifest["n_members"])

    def base(self):
        return load_member_graph(os.path.join(self.path, self.manifest["base_file"]))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _open_out(path: str | None) -> TextIO:
    if path is None or path == "-":
        return sys.stdout
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


def _close(fh: TextIO) -> None:
    if fh is not sys.stdout:
        fh.close()


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "alpha", None) is not None:
        cfg = replace(cfg, pagerank=replace(cfg.pagerank, alpha=args.alpha))
    return cfg


def _params(args) -> PageRankParams:
    return PageRankParams(alpha=args.alpha) if args.alpha is not None else PageRankParams()


def _plan(pi: SkillDeductionMatrix, main: int, related: str | None) -> DeductionPlan:
    if related is None:
        return pi.plan(main)
    ids = [pi.skills.index(s.strip()) if pi.skills else int(s) for s in related.split(",") if s.strip()]
    return DeductionPlan(main, tuple(ids))


def _ranked(digraph: EndorsementDigraph, params: PageRankParams):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return pagerank(digraph, params)


def cmd_generate(args) -> int:
    cfg = _config(args)
    out = args.out or cfg.output_dir
    manifest = write_dataset(cfg, out)
    logger.info("wrote dataset to %s (arcs %s)", out, manifest["arc_counts"])
    return EXIT_OK


def cmd_rank(args) -> int:
    ds = Dataset(args.dataset)
    main = ds.skills.index(args.skill)
    digraph = ds.digraphs[main]
    if args.deduce:
        digraph = deduce(ds.digraphs, ds.deduction_matrix(), _plan(ds.deduction_matrix(), main, args.related))
    r = _ranked(digraph, _params(args))
    fh = _open_out(args.out)
    try:
        write_rank_csv(r, fh, ds.labels())
    finally:
        _close(fh)
    return EXIT_OK if r.converged else EXIT_NOT_CONVERGED


def cmd_deduce(args) -> int:
    ds = Dataset(args.dataset)
    main = ds.skills.index(args.skill)
    pi = ds.deduction_matrix()
    enriched = deduce(ds.digraphs, pi, _plan(pi, main, args.related))
    fh = _open_out(args.out)
    try:
        write_endorsement_digraph(enriched, fh, comment=f"skill {ds.skills.names[main]} with deduced endorsements")
    finally:
        _close(fh)
    return EXIT_OK


def cmd_cooccur(args) -> int:
    ds = Dataset(args.dataset)
    co = measure_cooccurrence(ds.digraphs)
    fh = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["skill", *ds.skills.names])
        for name, row in zip(ds.skills.names, co):
            writer.writerow([name, *(f"{x:.2f}" for x in row)])
    finally:
        _close(fh)
    return EXIT_OK


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in name.lower()).strip("_") or "skill"


def run_evaluation(cfg: ExperimentConfig, out: str, workers: int = 1, dataset: str | None = None) -> bool:
    """Write report, histogram and sweep CSVs into ``out``; returns convergence."""
    os.makedirs(out, exist_ok=True)
    if dataset is not None:
        ds = Dataset(dataset)
        digraphs, skills = ds.digraphs, ds.skills
    else:
        write_dataset(cfg, os.path.join(out, "dataset"))
        ds = Dataset(os.path.join(out, "dataset"))
        digraphs, skills = ds.digraphs, cfg.skills
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        ev = evaluate_dataset(
            digraphs, cfg.deduction_matrix, cfg.main_skills(), skills.names,
            spam=cfg.spam, sweep=cfg.sweep_sizes(), settings=cfg.settings(),
            seed=cfg.seed, workers=workers,
        )
    with open(os.path.join(out, "report.csv"), "w", encoding="utf-8", newline="\n") as fh:
        write_report_csv(ev, fh, with_leader=cfg.spam is not None)
    for r in ev.reports:
        with open(os.path.join(out, f"hist_{r.skill}_{_slug(r.skill_name)}.csv"), "w", encoding="utf-8", newline="\n") as fh:
            write_histogram_csv(r, fh)
    if ev.sweeps:
        with open(os.path.join(out, "sweep.csv"), "w", encoding="utf-8", newline="\n") as fh:
            write_sweep_csv(ev, skills.names, fh)
    return all(r.converged for r in ev.reports)


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    out = args.out or cfg.output_dir
    converged = run_evaluation(cfg, out, args.workers, args.dataset)
    with open(os.path.join(out, "report.csv"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    if not converged:
        logger.error("PageRank did not converge for at least one skill; outputs kept in %s", out)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="endorank",
        description="Skill-endorsement ranking with deduced endorsements.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset directory")
    p.add_argument("--config", required=True, help="JSON config file or preset (table1, table2, toy)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="dataset directory (default: config output_dir)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("rank", help="PageRank one skill, optionally after deduction")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--skill", required=True, help="skill name or index")
    p.add_argument("--deduce", action="store_true", help="fold related skills into the main one first")
    p.add_argument("--related", help="comma-separated related skills (default: all implying the main skill)")
    p.add_argument("--alpha", type=float, help="damping factor (default 0.85)")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="compare plain and deduced rankings for every skill")
    p.add_argument("--config", required=True, help="JSON config file or preset (table1, table2, toy)")
    p.add_argument("--dataset", help="use an existing dataset directory instead of generating one")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--alpha", type=float, help="damping factor")
    p.add_argument("--out", help="output directory (default: config output_dir)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("deduce", help="write the enriched digraph of one skill")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--skill", required=True, help="skill name or index")
    p.add_argument("--related", help="comma-separated related skills")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_deduce)

    p = sub.add_parser("cooccur", help="print the measured skill co-occurrence matrix")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_cooccur)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) is not None and getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")
    try:
        return args.func(args)
    except InfeasibleTargetsError as exc:
        print(f"endorank: infeasible targets: {exc}", file=sys.stderr)
        if exc.achieved is not None:
            print(f"achieved co-occurrence:\n{np.array2string(exc.achieved, precision=2)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, DeductionError, GraphFormatError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"endorank: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
