"""Experiment configuration: one JSON document drives generation and evaluation."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from typing import Any

import numpy as np

from .deduction import SkillDeductionMatrix
from .experiment import EvaluationSettings
from .graph import EndorsementDigraph, SkillSet
from .netgen import AttachMode, GeneratorConfig, SpamAllianceConfig
from .pagerank import PageRankParams

PRESETS = ("table1", "table2", "toy")

# expert-surveyed implication probabilities for the five bundled skills
DEFAULT_SKILLS = ("Programming", "C++", "Java", "Math Mod", "Statistics")
DEFAULT_DEDUCTION = (
    (1.0, 0.7, 0.7, 0.4, 0.3),
    (1.0, 1.0, 0.6, 0.4, 0.3),
    (1.0, 0.7, 1.0, 0.4, 0.3),
    (0.3, 0.2, 0.2, 1.0, 0.8),
    (0.3, 0.2, 0.2, 1.0, 1.0),
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InlineDataset:
    """Endorsement digraphs written out in the config itself (small examples)."""

    n: int
    digraphs: tuple[EndorsementDigraph, ...]
    names: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    skills: SkillSet
    deduction_matrix: SkillDeductionMatrix
    generator: GeneratorConfig | None = None
    dataset: InlineDataset | None = None
    main_skill: int | str = "all"
    pagerank: PageRankParams = field(default_factory=PageRankParams)
    spam: SpamAllianceConfig | None = None
    sweep: tuple[int, int] | None = None
    evaluation: EvaluationSettings = field(default_factory=EvaluationSettings)
    output_dir: str = "out"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def seed(self) -> int:
        return self.generator.seed if self.generator is not None else 0

    def main_skills(self) -> list[int]:
        if self.main_skill == "all":
            return list(range(len(self.skills)))
        return [self.skills.index(self.main_skill)]

    def sweep_sizes(self) -> list[int] | None:
        return None if self.sweep is None else list(range(self.sweep[0], self.sweep[1] + 1))

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = dict(self.raw, seed=seed)
        if self.generator is None:
            return replace(self, raw=raw)
        return replace(self, generator=replace(self.generator, seed=seed), raw=raw)

    def settings(self) -> EvaluationSettings:
        return replace(self.evaluation, pagerank=self.pagerank)


def _take(section: dict, allowed: set[str], where: str) -> dict:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return dict(section)


def _names(cls) -> set[str]:
    return {f.name for f in fields(cls)}


def _generator(doc: dict, skills: SkillSet, seed: int) -> GeneratorConfig:
    g = _take(doc, _names(GeneratorConfig) - {"seed", "skills"}, "generator")
    if "cooccurrence_target" in g and g["cooccurrence_target"] is not None:
        g["cooccurrence_target"] = np.array(g["cooccurrence_target"], dtype=float)
    for key in ("skill_arc_targets", "endorsed_counts"):
        if g.get(key) is not None:
            g[key] = tuple(g[key])
    return GeneratorConfig(seed=seed, skills=skills, **g)


def _inline(doc: dict, skills: SkillSet) -> InlineDataset:
    d = _take(doc, {"n", "arcs", "names"}, "dataset")
    n = int(d["n"])
    arcs = d["arcs"]
    if len(arcs) != len(skills):
        raise ConfigError(f"dataset: {len(arcs)} arc lists for {len(skills)} skills")
    graphs = tuple(EndorsementDigraph.from_arcs(n, [tuple(a) for a in lst]) for lst in arcs)
    names = d.get("names")
    if names is not None and len(names) != n:
        raise ConfigError(f"dataset: {len(names)} member names for {n} members")
    return InlineDataset(n, graphs, None if names is None else tuple(str(x) for x in names))


def parse_config(doc: dict[str, Any]) -> ExperimentConfig:
    """Build a validated config from a decoded JSON document."""
    top = _take(doc, {"seed", "skills", "generator", "dataset", "deduction_matrix", "main_skill",
                      "pagerank", "spam", "sweep", "evaluation", "output_dir", "description"}, "config")
    try:
        skills = SkillSet(tuple(top.get("skills", DEFAULT_SKILLS)))
        seed = int(top.get("seed", 0))
        if ("generator" in top) == ("dataset" in top):
            raise ConfigError("config needs exactly one of 'generator' or 'dataset'")
        generator = _generator(top["generator"], skills, seed) if "generator" in top else None
        dataset = _inline(top["dataset"], skills) if "dataset" in top else None
        pi = SkillDeductionMatrix(np.array(top.get("deduction_matrix", DEFAULT_DEDUCTION), dtype=float), skills)
        main = top.get("main_skill", "all")
        if main != "all":
            skills.index(main)
        pr = PageRankParams(**_take(top.get("pagerank", {}), _names(PageRankParams), "pagerank"))
        spam = None
        if top.get("spam") is not None:
            s = _take(top["spam"], {"n_assistants", "attach_mode"}, "spam")
            spam = SpamAllianceConfig(0, int(s.get("n_assistants", 2)), AttachMode(s.get("attach_mode", "isolated")))
        sweep = None
        if top.get("sweep") is not None:
            lo, hi = (int(x) for x in top["sweep"])
            if not 1 <= lo <= hi:
                raise ConfigError(f"sweep bounds must satisfy 1 <= min <= max, got [{lo}, {hi}]")
            sweep = (lo, hi)
        ev = EvaluationSettings(**_take(top.get("evaluation", {}), _names(EvaluationSettings) - {"pagerank"}, "evaluation"))
        if ev.tie_denominator not in ("ties", "n") or ev.tau_variant not in ("a", "b"):
            raise ConfigError("evaluation: tie_denominator must be 'ties'|'n' and tau_variant 'a'|'b'")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc).strip("'\"")) from None
    return ExperimentConfig(
        skills=skills, deduction_matrix=pi, generator=generator, dataset=dataset, main_skill=main,
        pagerank=pr, spam=spam, sweep=sweep, evaluation=ev,
        output_dir=str(top.get("output_dir", "out")), raw=dict(doc),
    )


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; bundled: {', '.join(PRESETS)}")
    text = resources.files("endorank").joinpath("presets", f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config(source: str | os.PathLike) -> ExperimentConfig:
    """Read a config from a JSON file, or a bundled preset by name."""
    src = os.fspath(source)
    if src in PRESETS and not os.path.exists(src):
        return parse_config(preset_document(src))
    try:
        with open(src, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {src}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{src}: invalid JSON ({exc})") from None
    return parse_config(doc)
