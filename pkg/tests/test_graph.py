import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from endorank.graph import (
    EndorsementDigraph,
    GraphFormatError,
    MemberGraph,
    SkillSet,
    dumps_endorsement_digraph,
    load_endorsement_digraph,
    read_endorsement_digraph,
    read_member_graph,
    save_member_graph,
    load_member_graph,
    load_member_labels,
    out_weight_sum,
    save_member_labels,
)


@st.composite
def digraphs(draw, max_n=8):
    n = draw(st.integers(1, max_n))
    pairs = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1])))
    weights = draw(st.lists(st.sampled_from([1.0, 0.5, 0.25, 0.8, 0.123456789]), min_size=len(pairs), max_size=len(pairs)))
    return EndorsementDigraph.from_arcs(n, [(u, v, w) for (u, v), w in zip(sorted(pairs), weights)])


def test_from_arcs_sorted_compressed_rows():
    d = EndorsementDigraph.from_arcs(4, [(2, 0), (0, 3, 0.5), (0, 1)])
    assert list(d.indptr) == [0, 2, 2, 3, 3]
    assert list(d.out_neighbors(0)) == [1, 3]
    assert d.weight(0, 3) == 0.5
    assert d.weight(3, 0) == 0.0
    assert list(d.in_degrees()) == [1, 1, 0, 1]
    assert list(d.out_weight_sums()) == [1.5, 0, 1, 0]


@pytest.mark.parametrize(
    "arc, message",
    [((1, 1), "self-loop"), ((0, 5), ">= member count"), ((0, 1, 0.0), "outside"), ((0, 1, 1.5), "outside")],
)
def test_invalid_arcs_rejected(arc, message):
    with pytest.raises(GraphFormatError, match=message):
        EndorsementDigraph.from_arcs(3, [arc])


def test_duplicate_arc_rejected():
    with pytest.raises(GraphFormatError, match="duplicate"):
        EndorsementDigraph.from_arcs(3, [(0, 1), (0, 1)])


def test_read_reports_line_number():
    text = "3\n0 1\n# comment\n2 2\n"
    with pytest.raises(GraphFormatError) as err:
        read_endorsement_digraph(io.StringIO(text), name="x.txt")
    assert err.value.line == 4
    assert "x.txt:4" in str(err.value)


def test_header_mismatch():
    with pytest.raises(GraphFormatError, match="expected 5"):
        read_endorsement_digraph(io.StringIO("3\n0 1\n"), n=5)


@settings(max_examples=60, deadline=None)
@given(digraphs())
def test_text_round_trip(d):
    back = read_endorsement_digraph(io.StringIO(dumps_endorsement_digraph(d)))
    assert back == d


def test_file_round_trip(tmp_path):
    d = EndorsementDigraph.from_arcs(3, [(0, 1, 0.3), (2, 1)])
    path = tmp_path / "d.txt"
    path.write_text(dumps_endorsement_digraph(d))
    assert load_endorsement_digraph(path) == d


def test_enlarged_keeps_arcs_and_adds_isolated_members():
    d = EndorsementDigraph.from_arcs(3, [(0, 1), (2, 1)])
    e = d.enlarged(5)
    assert e.n == 5 and e.arc_dict() == d.arc_dict()
    assert e.restricted(3) == d
    with pytest.raises(ValueError):
        d.enlarged(2)


@settings(max_examples=40, deadline=None)
@given(digraphs(), st.randoms())
def test_permutation_round_trip(d, rnd):
    perm = list(range(d.n))
    rnd.shuffle(perm)
    inverse = np.argsort(perm)
    assert d.permuted(perm).permuted(inverse) == d


def test_member_graph_collapses_duplicates(tmp_path):
    g = read_member_graph(io.StringIO("4\n0 1\n1 0\n2 3\n"))
    assert g.n_edges == 2
    assert g.has_edge(1, 0) and not g.has_edge(0, 2)
    assert list(g.degrees()) == [1, 1, 1, 1]
    path = tmp_path / "g.txt"
    save_member_graph(g, path)
    assert load_member_graph(path) == g
    with pytest.raises(GraphFormatError, match="self-loop"):
        read_member_graph(io.StringIO("2\n1 1\n"))


def test_member_graph_components():
    g = MemberGraph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    assert g.giant_component_fraction() == pytest.approx(0.6)


def test_skill_set_lookup():
    s = SkillSet(("Programming", "C++"))
    assert s.index("c++") == 1 and s.index("0") == 0 and s.index(1) == 1
    with pytest.raises(KeyError):
        s.index("Cobol")
    with pytest.raises(ValueError):
        SkillSet(("a", "a"))


def test_out_weight_sum():
    d = EndorsementDigraph.from_arcs(4, [(0, 1, 1.0), (0, 2, 0.8), (1, 0), (1, 2), (1, 3)])
    assert out_weight_sum(d, 0) == pytest.approx(1.8)
    assert out_weight_sum(d, 1) == 3 == d.out_degrees()[1]
    assert out_weight_sum(d, 3) == 0


def test_spec_style_digraph_file():
    d = read_endorsement_digraph(io.StringIO("3\n0 1\n1 2 0.8\n"), n=3)
    assert sorted(d.arcs()) == [(0, 1, 1.0), (1, 2, 0.8)]
    assert read_endorsement_digraph(io.StringIO("5\n")).n_arcs == 0
    with pytest.raises(GraphFormatError, match="outside"):
        read_endorsement_digraph(io.StringIO("3\n0 1 0.0\n"))


def test_member_labels_round_trip(tmp_path):
    path = tmp_path / "names.txt"
    save_member_labels(["Ana", "Bo Li"], path)
    assert load_member_labels(path, 2) == ["Ana", "Bo Li"]
    with pytest.raises(GraphFormatError):
        load_member_labels(path, 3)
