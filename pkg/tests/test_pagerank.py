import io
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from endorank.graph import EndorsementDigraph
from endorank.pagerank import (
    ConvergenceWarning,
    PageRankParams,
    google_matrix,
    pagerank,
    rank_positions,
    transition_row,
    write_rank_csv,
)
from oracles import dense_pagerank, random_arcs
from test_graph import digraphs


def test_two_members_one_endorsement():
    d = EndorsementDigraph.from_arcs(2, [(0, 1)])
    r = pagerank(d)
    np.testing.assert_allclose(r.scores, [1 / 2.85, 1.85 / 2.85], rtol=0, atol=1e-12)
    assert list(r.positions) == [2, 1]
    assert r.converged


def test_single_member_and_symmetric_cycle():
    assert pagerank(EndorsementDigraph.empty(1)).scores.tolist() == [1.0]
    r = pagerank(EndorsementDigraph.from_arcs(2, [(0, 1), (1, 0)]))
    np.testing.assert_allclose(r.scores, [0.5, 0.5], atol=1e-15)


def test_weighted_transition_row():
    d = EndorsementDigraph.from_arcs(4, [(0, 1, 1.0), (0, 2, 0.8)])
    np.testing.assert_allclose(transition_row(d, 0), [0, 1 / 1.8, 0.8 / 1.8, 0])
    np.testing.assert_allclose(transition_row(d, 3), [0.25] * 4)


@settings(max_examples=40, deadline=None)
@given(digraphs(max_n=8), st.data())
def test_personalizing_on_a_member_raises_its_score(d, data):
    k = data.draw(st.integers(0, d.n - 1))
    if d.n == 1:
        return
    v = np.zeros(d.n)
    v[k] = 1.0
    assert pagerank(d, personalization=v).scores[k] > pagerank(d).scores[k]


@settings(max_examples=40, deadline=None)
@given(digraphs(max_n=9), st.randoms())
def test_relabeling_permutes_scores(d, rnd):
    perm = list(range(d.n))
    rnd.shuffle(perm)
    base, moved = pagerank(d).scores, pagerank(d.permuted(perm)).scores
    np.testing.assert_allclose(moved[perm], base, atol=1e-14)


def test_no_arcs_gives_uniform_scores():
    r = pagerank(EndorsementDigraph.empty(7))
    np.testing.assert_allclose(r.scores, np.full(7, 1 / 7), atol=1e-15)
    assert list(r.positions) == [1] * 7


@pytest.mark.parametrize("seed", range(20))
def test_matches_dense_eigenvector(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 11))
    arcs = random_arcs(rng, n, density=rng.uniform(0, 0.5), weighted=bool(seed % 2))
    alpha = float(rng.uniform(0.5, 0.95))
    r = pagerank(EndorsementDigraph.from_arcs(n, arcs), alpha=alpha)
    np.testing.assert_allclose(r.scores, dense_pagerank(n, arcs, alpha), rtol=0, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_personalized_matches_dense_eigenvector(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(2, 11))
    arcs = random_arcs(rng, n, density=0.25)
    v = rng.random(n)
    v /= v.sum()
    d = EndorsementDigraph.from_arcs(n, arcs)
    r = pagerank(d, PageRankParams(personalization=v))
    np.testing.assert_allclose(r.scores, dense_pagerank(n, arcs, 0.85, v), atol=1e-9)
    G = google_matrix(d, PageRankParams(personalization=v))
    np.testing.assert_allclose(r.scores @ G, r.scores, atol=1e-10)


@settings(max_examples=80, deadline=None)
@given(digraphs(max_n=10), st.floats(0.05, 0.95))
def test_scores_are_a_positive_distribution(d, alpha):
    r = pagerank(d, alpha=alpha)
    assert abs(r.scores.sum() - 1) < 1e-12
    assert np.all(r.scores > 0)


@settings(max_examples=50, deadline=None)
@given(digraphs(max_n=8), st.floats(0.1, 0.9))
def test_row_scaling_leaves_scores_unchanged(d, c):
    # only relative weights out of a member matter
    scaled = EndorsementDigraph.from_arcs(d.n, [(u, v, w * c) for u, v, w in d.arcs()])
    np.testing.assert_allclose(pagerank(scaled).scores, pagerank(d).scores, atol=1e-12)


def test_zero_restart_mass_can_leave_members_at_zero():
    d = EndorsementDigraph.from_arcs(3, [(0, 1), (1, 0)])
    r = pagerank(d, personalization=[0.5, 0.5, 0.0])
    assert r.scores[2] == 0.0


def test_transition_rows_are_stochastic():
    d = EndorsementDigraph.from_arcs(3, [(0, 1, 0.5), (0, 2, 1.0)])
    np.testing.assert_allclose(transition_row(d, 0), [0, 1 / 3, 2 / 3])
    np.testing.assert_allclose(transition_row(d, 1), [1 / 3] * 3)
    G = google_matrix(d)
    np.testing.assert_allclose(G.sum(axis=1), 1.0)


def test_non_convergence_is_flagged():
    d = EndorsementDigraph.from_arcs(3, [(0, 1), (1, 2), (2, 0), (0, 2)])
    with pytest.warns(ConvergenceWarning):
        r = pagerank(d, max_iterations=2)
    assert not r.converged and r.iterations_used == 2


@pytest.mark.parametrize(
    "kwargs",
    [{"alpha": 1.0}, {"alpha": 0.0}, {"tolerance": 0}, {"max_iterations": 0}, {"personalization": [0.5, 0.6]}],
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        PageRankParams(**kwargs)


def test_competition_ranking_examples():
    assert list(rank_positions([0.5, 0.3, 0.2])) == [1, 2, 3]
    assert list(rank_positions([0.4, 0.4, 0.2])) == [1, 1, 3]
    # three-way tie, two singletons, then the maximum
    assert list(rank_positions([0.1, 0.3, 0.1, 0.1, 0.2, 0.5])) == [4, 2, 4, 4, 3, 1]


def test_competition_ranking_with_tolerance():
    s = np.array([0.3, 0.2, 0.3 * (1 + 1e-12), 0.1, 0.2])
    assert list(rank_positions(s)) == [1, 3, 1, 5, 3]
    assert list(rank_positions(s, tol=0)) == [2, 3, 1, 5, 3]


def test_rank_csv_layout():
    buf = io.StringIO()
    write_rank_csv(pagerank(EndorsementDigraph.from_arcs(2, [(0, 1)])), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "member_index,score,position"
    assert lines[2].endswith(",1") and lines[1].startswith("0,")


def test_sparse_run_has_no_warnings_on_large_graph():
    rng = np.random.default_rng(5)
    n = 1500
    arcs = {(int(u), int(v)) for u, v in rng.integers(0, n, size=(4000, 2)) if u != v}
    d = EndorsementDigraph.from_arcs(n, sorted(arcs))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = pagerank(d)
    assert r.converged and r.residual <= 1e-12
