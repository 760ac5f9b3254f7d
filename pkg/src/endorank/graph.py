"""Member networks and per-skill endorsement digraphs.

Members are dense 0-based indices. Both graph types are immutable once
built; adjacency is kept in compressed out-neighbour form (``indptr``,
``targets``) with targets sorted inside every row.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, TextIO, Union

import numpy as np
import scipy.sparse as sp

PathLike = Union[str, os.PathLike]


class GraphFormatError(ValueError):
    """Raised when a graph file or arc list violates the graph invariants."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _data_lines(stream: TextIO) -> Iterator[tuple[int, list[str]]]:
    """Yield (line number, tokens) for every non-blank, non-comment line."""
    for lineno, raw in enumerate(stream, start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            yield lineno, text.split()


def _parse_int(token: str, lineno: int, path: str | None) -> int:
    try:
        value = int(token)
    except ValueError:
        raise GraphFormatError(f"expected an integer, got {token!r}", lineno, path) from None
    if value < 0:
        raise GraphFormatError(f"negative member index {value}", lineno, path)
    return value


def _read_header(lines: Iterator[tuple[int, list[str]]], path: str | None) -> int:
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise GraphFormatError("missing member count header", None, path) from None
    if len(tokens) != 1:
        raise GraphFormatError("header must hold the member count only", lineno, path)
    return _parse_int(tokens[0], lineno, path)


# ---------------------------------------------------------------------------
# Undirected base network
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MemberGraph:
    """Undirected network of contacts over members ``0..n-1``.

    ``edges`` is an ``(m, 2)`` array with ``u < v`` on every row, sorted
    lexicographically.
    """

    n: int
    edges: np.ndarray
    _indptr: np.ndarray = field(repr=False)
    _nbrs: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "MemberGraph":
        """Build a graph; duplicate and reversed pairs collapse to one edge."""
        if n < 0:
            raise GraphFormatError(f"member count must be non-negative, got {n}")
        seen = set()
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v:
                raise GraphFormatError(f"self-loop on member {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
            seen.add((u, v) if u < v else (v, u))
        edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
        return cls._build(n, edges)

    @classmethod
    def _build(cls, n: int, edges: np.ndarray) -> "MemberGraph":
        both = np.concatenate([edges, edges[:, ::-1]]) if len(edges) else edges
        order = np.lexsort((both[:, 1], both[:, 0])) if len(both) else np.zeros(0, dtype=np.int64)
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=n) if len(both) else np.zeros(n, dtype=np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(n, _frozen(edges), _frozen(indptr), _frozen(both[:, 1].copy()))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> np.ndarray:
        return self._nbrs[self._indptr[v] : self._indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        k = np.searchsorted(row, v)
        return bool(k < len(row) and row[k] == v)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def components(self) -> np.ndarray:
        """Connected-component label of every member."""
        adj = sp.csr_matrix(
            (np.ones(len(self._nbrs)), self._nbrs, self._indptr), shape=(self.n, self.n)
        )
        _, labels = sp.csgraph.connected_components(adj, directed=False)
        return labels

    def giant_component_fraction(self) -> float:
        if self.n == 0:
            return 0.0
        labels = self.components()
        return float(np.bincount(labels).max()) / self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MemberGraph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.edges.tobytes()))


def load_member_graph(path: PathLike) -> MemberGraph:
    """Read a member graph: header line ``n`` then one ``u v`` edge per line."""
    name = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        return read_member_graph(fh, name)


def read_member_graph(stream: TextIO, name: str | None = None) -> MemberGraph:
    lines = _data_lines(stream)
    n = _read_header(lines, name)
    seen = set()
    for lineno, tokens in lines:
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 'u v', got {len(tokens)} fields", lineno, name)
        u = _parse_int(tokens[0], lineno, name)
        v = _parse_int(tokens[1], lineno, name)
        if u == v:
            raise GraphFormatError(f"self-loop on member {u}", lineno, name)
        if u >= n or v >= n:
            raise GraphFormatError(f"endpoint {max(u, v)} >= member count {n}", lineno, name)
        seen.add((u, v) if u < v else (v, u))
    edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
    return MemberGraph._build(n, edges)


def save_member_graph(g: MemberGraph, path: PathLike, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(f"{g.n}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


# ---------------------------------------------------------------------------
# Weighted endorsement digraph
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EndorsementDigraph:
    """Directed endorsement graph for one skill.

    Arc ``(u, v, w)`` means ``u`` endorses ``v`` with confidence ``w`` in
    ``(0, 1]``. Absent arcs have weight 0 and are never stored.
    """

    n: int
    indptr: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "EndorsementDigraph":
        return cls.from_arcs(n, ())

    @classmethod
    def from_arcs(
        cls, n: int, arcs: Iterable[Sequence[float]], *, allow_duplicates: bool = False
    ) -> "EndorsementDigraph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; missing weight means 1."""
        if n < 0:
            raise GraphFormatError(f"member count must be non-negative, got {n}")
        table: dict[tuple[int, int], float] = {}
        for arc in arcs:
            u, v = int(arc[0]), int(arc[1])
            w = float(arc[2]) if len(arc) > 2 else 1.0
            _check_arc(n, u, v, w)
            if (u, v) in table and not allow_duplicates:
                raise GraphFormatError(f"duplicate arc ({u}, {v})")
            table[(u, v)] = w
        return cls._from_table(n, table)

    @classmethod
    def _from_table(cls, n: int, table: dict[tuple[int, int], float]) -> "EndorsementDigraph":
        keys = sorted(table)
        src = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        dst = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        w = np.fromiter((table[k] for k in keys), dtype=np.float64, count=len(keys))
        indptr = np.zeros(n + 1, dtype=np.int64)
        if len(keys):
            np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, _frozen(indptr), _frozen(dst), _frozen(w))

    # -- queries -----------------------------------------------------------

    @property
    def n_arcs(self) -> int:
        return len(self.targets)

    def sources(self) -> np.ndarray:
        """Source member of every stored arc, aligned with ``targets``."""
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))

    def arcs(self) -> Iterator[tuple[int, int, float]]:
        for u, v, w in zip(self.sources(), self.targets, self.weights):
            yield int(u), int(v), float(w)

    def arc_dict(self) -> dict[tuple[int, int], float]:
        return {(u, v): w for u, v, w in self.arcs()}

    def out_neighbors(self, v: int) -> np.ndarray:
        return self.targets[self.indptr[v] : self.indptr[v + 1]]

    def out_weights(self, v: int) -> np.ndarray:
        return self.weights[self.indptr[v] : self.indptr[v + 1]]

    def weight(self, u: int, v: int) -> float:
        row = self.out_neighbors(u)
        k = np.searchsorted(row, v)
        if k < len(row) and row[k] == v:
            return float(self.weights[self.indptr[u] + k])
        return 0.0

    def out_weight_sums(self) -> np.ndarray:
        sums = np.zeros(self.n)
        # ascending arc order keeps the summation deterministic
        np.add.at(sums, self.sources(), self.weights)
        return sums

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.targets, minlength=self.n)

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def endorsed(self) -> np.ndarray:
        """Boolean mask of members with at least one incoming endorsement."""
        return self.in_degrees() > 0

    def is_unweighted(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.array(self.weights), np.array(self.targets), np.array(self.indptr)),
            shape=(self.n, self.n),
        )

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()

    # -- derived graphs ----------------------------------------------------

    def enlarged(self, n_new: int) -> "EndorsementDigraph":
        """Same arcs over a larger member set; new members are isolated."""
        if n_new < self.n:
            raise ValueError(f"cannot shrink a digraph from {self.n} to {n_new} members")
        extra = np.full(n_new - self.n, self.indptr[-1], dtype=np.int64)
        indptr = np.concatenate([self.indptr, extra])
        return EndorsementDigraph(n_new, _frozen(indptr), self.targets, self.weights)

    def with_arcs(self, arcs: Iterable[Sequence[float]], n_new: int | None = None) -> "EndorsementDigraph":
        table = self.arc_dict()
        n = self.n if n_new is None else n_new
        for arc in arcs:
            u, v = int(arc[0]), int(arc[1])
            w = float(arc[2]) if len(arc) > 2 else 1.0
            _check_arc(n, u, v, w)
            if (u, v) in table:
                raise GraphFormatError(f"duplicate arc ({u}, {v})")
            table[(u, v)] = w
        return EndorsementDigraph._from_table(n, table)

    def restricted(self, n_keep: int) -> "EndorsementDigraph":
        """Drop members ``>= n_keep`` together with every arc touching them."""
        table = {(u, v): w for u, v, w in self.arcs() if u < n_keep and v < n_keep}
        return EndorsementDigraph._from_table(n_keep, table)

    def permuted(self, perm: Sequence[int]) -> "EndorsementDigraph":
        """Relabel member ``i`` as ``perm[i]``."""
        perm = np.asarray(perm)
        return EndorsementDigraph.from_arcs(
            self.n, ((perm[u], perm[v], w) for u, v, w in self.arcs())
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EndorsementDigraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.targets, other.targets)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.targets.tobytes(), self.weights.tobytes()))

    def __repr__(self) -> str:
        return f"EndorsementDigraph(n={self.n}, arcs={self.n_arcs})"


def _check_arc(n: int, u: int, v: int, w: float, lineno: int | None = None, path: str | None = None) -> None:
    if u < 0 or v < 0:
        raise GraphFormatError(f"negative member index in arc ({u}, {v})", lineno, path)
    if u == v:
        raise GraphFormatError(f"self-loop on member {u}", lineno, path)
    if u >= n or v >= n:
        raise GraphFormatError(f"endpoint {max(u, v)} >= member count {n}", lineno, path)
    if not (0.0 < w <= 1.0):
        raise GraphFormatError(f"weight {w!r} outside (0, 1]", lineno, path)


def out_weight_sum(d: EndorsementDigraph, v: int) -> float:
    """Total weight of the arcs leaving ``v`` (its out-degree when unweighted)."""
    return float(sum(d.out_weights(v).tolist()))


def load_endorsement_digraph(path: PathLike, n: int | None = None) -> EndorsementDigraph:
    name = os.fspath(path)
    with open(path, encoding="utf-8") as fh:
        return read_endorsement_digraph(fh, n, name)


def read_endorsement_digraph(
    stream: TextIO, n: int | None = None, name: str | None = None
) -> EndorsementDigraph:
    lines = _data_lines(stream)
    header_n = _read_header(lines, name)
    if n is not None and n != header_n:
        raise GraphFormatError(f"header declares {header_n} members, expected {n}", None, name)
    table: dict[tuple[int, int], float] = {}
    for lineno, tokens in lines:
        if len(tokens) not in (2, 3):
            raise GraphFormatError(f"expected 'u v' or 'u v w', got {len(tokens)} fields", lineno, name)
        u = _parse_int(tokens[0], lineno, name)
        v = _parse_int(tokens[1], lineno, name)
        w = 1.0
        if len(tokens) == 3:
            try:
                w = float(tokens[2])
            except ValueError:
                raise GraphFormatError(f"bad weight {tokens[2]!r}", lineno, name) from None
            if not np.isfinite(w):
                raise GraphFormatError(f"bad weight {tokens[2]!r}", lineno, name)
        _check_arc(header_n, u, v, w, lineno, name)
        if (u, v) in table:
            raise GraphFormatError(f"duplicate arc ({u}, {v})", lineno, name)
        table[(u, v)] = w
    return EndorsementDigraph._from_table(header_n, table)


def write_endorsement_digraph(d: EndorsementDigraph, stream: TextIO, comment: str | None = None) -> None:
    if comment:
        stream.write(f"# {comment}\n")
    stream.write(f"{d.n}\n")
    for u, v, w in d.arcs():
        if w == 1.0:
            stream.write(f"{u} {v}\n")
        else:
            stream.write(f"{u} {v} {w!r}\n")


def save_endorsement_digraph(d: EndorsementDigraph, path: PathLike, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_endorsement_digraph(d, fh, comment)


def dumps_endorsement_digraph(d: EndorsementDigraph) -> str:
    buf = io.StringIO()
    write_endorsement_digraph(d, buf)
    return buf.getvalue()


def load_member_labels(path: PathLike, n: int | None = None) -> list[str]:
    """Sidecar name file: line ``i`` holds the label of member ``i``."""
    with open(path, encoding="utf-8") as fh:
        labels = [line.rstrip("\n") for line in fh]
    if n is not None and len(labels) != n:
        raise GraphFormatError(f"{len(labels)} labels for {n} members", None, os.fspath(path))
    return labels


def save_member_labels(labels: Sequence[str], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label in labels:
            if "\n" in label:
                raise ValueError("member labels cannot contain newlines")
            fh.write(f"{label}\n")


@dataclass(frozen=True)
class SkillSet:
    """Ordered skill names; a skill id is a position in this list."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate skill names in {self.names}")

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def index(self, skill: int | str) -> int:
        """Resolve a skill given by index or (case-insensitive) name."""
        if isinstance(skill, (int, np.integer)):
            if not 0 <= skill < len(self.names):
                raise KeyError(f"skill index {skill} out of range 0..{len(self.names) - 1}")
            return int(skill)
        text = str(skill)
        if text.isdigit():
            return self.index(int(text))
        lowered = [s.lower() for s in self.names]
        if text.lower() not in lowered:
            raise KeyError(f"unknown skill {text!r}; known: {', '.join(self.names)}")
        return lowered.index(text.lower())
