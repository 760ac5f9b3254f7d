"""Rank members of a professional network by skill endorsements.

Endorsements for related skills are folded into the main skill's digraph
as weighted arcs before running PageRank, which breaks ties and weakens
collusion alliances.
"""

from .deduction import (
    DeductionError,
    DeductionPlan,
    SkillDeductionMatrix,
    deduce,
    union_probability,
    verify_proposition1,
)
from .graph import EndorsementDigraph, GraphFormatError, MemberGraph, SkillSet
from .metrics import count_ties, kendall_tau, leader_displacement, spearman_rho
from .netgen import (
    AttachMode,
    GeneratorConfig,
    InfeasibleTargetsError,
    SpamAllianceConfig,
    generate_dataset,
    inject_spam_alliance,
)
from .pagerank import ConvergenceWarning, PageRankParams, RankVector, pagerank, rank_positions

__all__ = [
    "AttachMode", "ConvergenceWarning", "DeductionError", "DeductionPlan", "EndorsementDigraph",
    "GeneratorConfig", "GraphFormatError", "InfeasibleTargetsError", "MemberGraph", "PageRankParams",
    "RankVector", "SkillDeductionMatrix", "SkillSet", "SpamAllianceConfig", "count_ties", "deduce",
    "generate_dataset", "inject_spam_alliance", "kendall_tau", "leader_displacement", "pagerank",
    "rank_positions", "spearman_rho", "union_probability", "verify_proposition1",
]
