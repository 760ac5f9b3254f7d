import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from endorank.deduction import (
    DeductionError,
    DeductionPlan,
    SkillDeductionMatrix,
    deduce,
    load_deduction_matrix,
    save_deduction_matrix,
    union_probability,
    verify_proposition1,
)
from endorank.graph import EndorsementDigraph, SkillSet
from endorank.pagerank import pagerank, rank_positions
from oracles import random_arcs, union_by_subsets


def random_instance(seed, n_max=20, skills_max=5, weighted=True):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, n_max + 1))
    k = int(rng.integers(1, skills_max + 1))
    graphs = [
        EndorsementDigraph.from_arcs(n, random_arcs(rng, n, rng.uniform(0.02, 0.3), weighted and rng.random() < 0.5))
        for _ in range(k)
    ]
    vals = rng.random((k, k))
    vals[rng.random((k, k)) < 0.2] = 0.0
    vals[rng.random((k, k)) < 0.1] = 1.0
    np.fill_diagonal(vals, 1.0)
    return graphs, SkillDeductionMatrix(vals)


def test_two_related_skills_union_formula():
    # j endorsed by i only through two related skills
    g0 = EndorsementDigraph.empty(2)
    g1 = EndorsementDigraph.from_arcs(2, [(0, 1)])
    g2 = EndorsementDigraph.from_arcs(2, [(0, 1)])
    pi = SkillDeductionMatrix([[1, 0.5, 0.5], [0.7, 1, 0.5], [0.4, 0.5, 1]])
    q = deduce([g0, g1, g2], pi, DeductionPlan(0, (1, 2)))
    assert q.weight(0, 1) == pytest.approx(0.7 + 0.4 - 0.7 * 0.4, abs=1e-15)


def test_existing_certain_endorsement_stays_certain():
    g0 = EndorsementDigraph.from_arcs(2, [(0, 1)])
    g1 = EndorsementDigraph.from_arcs(2, [(0, 1), (1, 0)])
    pi = SkillDeductionMatrix([[1, 0.2], [0.6, 1]])
    q = deduce([g0, g1], pi, DeductionPlan(0, (1,)))
    assert q.weight(0, 1) == 1.0
    assert q.weight(1, 0) == pytest.approx(0.6)


@pytest.mark.parametrize("seed", range(30))
def test_weights_equal_inclusion_exclusion(seed):
    graphs, pi = random_instance(seed)
    plan = pi.plan(0)
    q = deduce(graphs, pi, plan)
    n = graphs[0].n
    for u, v in itertools.permutations(range(n), 2):
        probs = [graphs[0].weight(u, v)] + [pi[k, 0] * graphs[k].weight(u, v) for k in plan.related]
        assert abs(q.weight(u, v) - union_by_subsets(probs)) <= 1e-12


@pytest.mark.parametrize("seed", range(30))
def test_proposition_holds_on_random_instances(seed):
    graphs, pi = random_instance(1000 + seed)
    for main in range(pi.size):
        report = verify_proposition1(graphs, pi, pi.plan(main))
        assert report.passed, report.failures


def test_proposition_checker_detects_a_broken_fold(monkeypatch):
    import endorank.deduction as mod

    graphs = [EndorsementDigraph.from_arcs(2, [(0, 1)]), EndorsementDigraph.from_arcs(2, [(1, 0)])]
    pi = SkillDeductionMatrix([[1, 0.5], [0.5, 1]])
    monkeypatch.setattr(mod, "union_probability", lambda e, p: e + p)  # no overlap correction
    graphs[1] = EndorsementDigraph.from_arcs(2, [(0, 1), (1, 0)])
    report = verify_proposition1(graphs, pi, DeductionPlan(0, (1,)))
    assert not report.passed and "a" in report.failures


def test_empty_related_set_is_identity():
    graphs, pi = random_instance(7)
    for main in range(len(graphs)):
        assert deduce(graphs, pi, DeductionPlan(main, ())) == graphs[main]


@pytest.mark.parametrize("seed", range(10))
def test_fold_order_does_not_matter(seed):
    graphs, pi = random_instance(2000 + seed, skills_max=5)
    plan = pi.plan(0)
    a = deduce(graphs, pi, plan)
    b = deduce(graphs, pi, DeductionPlan(0, tuple(reversed(plan.related))))
    assert a.arc_dict().keys() == b.arc_dict().keys()
    for key, w in a.arc_dict().items():
        assert abs(w - b.arc_dict()[key]) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0))
def test_weights_grow_with_implication_strength(seed, bump):
    graphs, pi = random_instance(seed, n_max=8, skills_max=4)
    if pi.size < 2:
        return
    vals = np.array(pi.values)
    stronger = vals.copy()
    stronger[1:, 0] = np.minimum(1.0, vals[1:, 0] + bump * (1 - vals[1:, 0]))
    related = tuple(k for k in range(1, pi.size) if vals[k, 0] > 0)
    plan = DeductionPlan(0, related)
    weak = deduce(graphs, pi, plan).arc_dict()
    strong = deduce(graphs, SkillDeductionMatrix(stronger), plan).arc_dict()
    assert set(weak) == set(strong)
    assert all(strong[k] >= weak[k] - 1e-15 for k in weak)


def _reaches(d, targets):
    """Members with a directed path (possibly empty) into ``targets``."""
    preds = [[] for _ in range(d.n)]
    for u, v, _ in d.arcs():
        preds[v].append(u)
    seen, stack = set(targets), list(targets)
    while stack:
        for u in preds[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


@pytest.mark.parametrize("seed", range(25))
def test_untied_pairs_have_a_changed_ancestor(seed):
    # two tied members can only separate if deduction changed the out-arcs
    # of someone who reaches one of them
    graphs, pi = random_instance(3000 + seed, n_max=14, skills_max=4, weighted=False)
    main = 0
    q = deduce(graphs, pi, pi.plan(main))
    before, after = pagerank(graphs[main]).scores, pagerank(q).scores
    old, new = graphs[main].arc_dict(), q.arc_dict()
    changed_rows = {u for (u, v), w in new.items() if old.get((u, v)) != w}
    pos_before, pos_after = rank_positions(before), rank_positions(after)
    for i, j in itertools.combinations(range(q.n), 2):
        if pos_before[i] == pos_before[j] and pos_after[i] != pos_after[j]:
            assert changed_rows & _reaches(q, {i, j})


def test_plan_defaults_to_skills_implying_main():
    pi = SkillDeductionMatrix([[1, 0.3, 0.0], [0.5, 1, 0.1], [0.0, 0.2, 1]])
    assert pi.plan(0) == DeductionPlan(0, (1,))
    assert pi.plan(1) == DeductionPlan(1, (0, 2))


@pytest.mark.parametrize(
    "values",
    [[[1, 0.5]], [[1, 1.2], [0.1, 1]], [[0.9, 0.1], [0.1, 1]], [[1, -0.1], [0, 1]]],
)
def test_invalid_matrix(values):
    with pytest.raises(DeductionError):
        SkillDeductionMatrix(values)


def test_invalid_plans():
    graphs, _ = random_instance(1, skills_max=1)
    pi = SkillDeductionMatrix([[1, 0.0], [0.0, 1]])
    g = [graphs[0], EndorsementDigraph.empty(graphs[0].n)]
    with pytest.raises(DeductionError, match="pi = 0"):
        deduce(g, pi, DeductionPlan(0, (1,)))
    with pytest.raises(DeductionError):
        DeductionPlan(0, (0,))
    pi2 = SkillDeductionMatrix([[1, 0.5], [0.5, 1]])
    with pytest.raises(DeductionError, match="members"):
        deduce([g[0], EndorsementDigraph.empty(g[0].n + 1)], pi2, DeductionPlan(0, (1,)))


def test_union_probability_bounds():
    assert union_probability(0.0, 0.0) == 0.0
    assert union_probability(1.0, 0.3) == 1.0
    assert union_probability(0.5, 0.5) == 0.75


def test_matrix_csv_round_trip(tmp_path):
    pi = SkillDeductionMatrix([[1, 0.7], [0.25, 1]], SkillSet(("a", "b")))
    path = tmp_path / "pi.csv"
    save_deduction_matrix(pi, path)
    back = load_deduction_matrix(path)
    assert np.array_equal(back.values, pi.values) and back.skills == pi.skills
