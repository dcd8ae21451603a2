"""Finite directed multigraphs, edge matrices and path spaces.

Convention: an edge ``e`` runs from ``s(e)`` to ``r(e)``, while the map
attached to it in a Mauldin-Williams system goes the other way,
``phi_e: T_{r(e)} -> T_{s(e)}``.  Many IFS texts use the opposite
orientation; keep this in mind when writing system files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

Path = tuple  # tuple of edge ids, always composable


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    id: str
    s: str
    r: str


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" | "warning" | "info"
    code: str
    message: str
    subject: str | None = None

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def add(self, severity: str, code: str, message: str, subject: str | None = None) -> None:
        self.findings.append(Finding(severity, code, message, subject))

    def extend(self, other: "ValidationReport") -> None:
        self.findings.extend(other.findings)
        self.info.update(other.info)

    def messages(self) -> list[str]:
        return [f.message for f in self.findings]


class Graph:
    """Immutable finite directed multigraph ``(V, E, r, s)``.

    Vertex and edge ids are strings.  Enumeration order everywhere is
    lexicographic in the ids, so outputs are reproducible.
    """

    def __init__(self, vertices: Iterable, edges: Iterable[Edge | tuple]):
        self.vertices: tuple[str, ...] = tuple(sorted({str(v) for v in vertices}))
        edge_list = []
        for e in edges:
            if not isinstance(e, Edge):
                eid, s, r = e
                e = Edge(str(eid), str(s), str(r))
            edge_list.append(e)
        ids = [e.id for e in edge_list]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate edge ids")
        vset = set(self.vertices)
        for e in edge_list:
            if e.s not in vset or e.r not in vset:
                raise GraphError(f"edge {e.id} references an unknown vertex")
        self.edges: tuple[Edge, ...] = tuple(sorted(edge_list, key=lambda e: e.id))
        self._by_id = {e.id: e for e in self.edges}
        self._out = {v: tuple(e.id for e in self.edges if e.s == v) for v in self.vertices}
        self._in = {v: tuple(e.id for e in self.edges if e.r == v) for v in self.vertices}

    def __repr__(self) -> str:
        return f"Graph(vertices={list(self.vertices)}, edges={[(e.id, e.s, e.r) for e in self.edges]})"

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.edges)

    def edge(self, eid: str) -> Edge:
        try:
            return self._by_id[eid]
        except KeyError:
            raise GraphError(f"unknown edge id {eid!r}") from None

    def s(self, eid: str) -> str:
        return self.edge(eid).s

    def r(self, eid: str) -> str:
        return self.edge(eid).r

    def out_edges(self, v: str) -> tuple[str, ...]:
        self._check_vertex(v)
        return self._out[v]

    def in_edges(self, v: str) -> tuple[str, ...]:
        self._check_vertex(v)
        return self._in[v]

    def _check_vertex(self, v: str) -> None:
        if v not in self._out:
            raise GraphError(f"unknown vertex id {v!r}")

    # paths

    def is_path(self, alpha: Sequence[str]) -> bool:
        if len(alpha) == 0 or any(a not in self._by_id for a in alpha):
            return False
        return all(self.r(a) == self.s(b) for a, b in zip(alpha, alpha[1:]))

    def check_path(self, alpha: Sequence[str]) -> Path:
        alpha = tuple(str(a) for a in alpha)
        if not alpha:
            raise GraphError("empty path")
        for a in alpha:
            self.edge(a)
        for i, (a, b) in enumerate(zip(alpha, alpha[1:])):
            if self.r(a) != self.s(b):
                raise GraphError(f"path not composable at position {i}: r({a}) != s({b})")
        return alpha

    def path_source(self, alpha: Sequence[str]) -> str:
        return self.s(alpha[0])

    def path_range(self, alpha: Sequence[str]) -> str:
        return self.r(alpha[-1])


def validate_graph(g: Graph) -> ValidationReport:
    """Report sinks (no outgoing edge) and sources (no incoming edge)."""
    report = ValidationReport()
    for v in g.vertices:
        if not g.out_edges(v):
            report.add("error", "sink", f"sink: {v}", v)
        if not g.in_edges(v):
            report.add("error", "source", f"source: {v}", v)
    return report


def edge_matrix(g: Graph) -> np.ndarray:
    """0/1 matrix with entry (e, f) = 1 iff r(e) = s(f); rows/cols in ``g.edge_ids`` order."""
    ids = g.edge_ids
    A = np.zeros((len(ids), len(ids)), dtype=int)
    for i, e in enumerate(ids):
        for j, f in enumerate(ids):
            if g.r(e) == g.s(f):
                A[i, j] = 1
    return A


def paths_of_length(g: Graph, k: int, v: str | None = None) -> list[Path]:
    """All composable edge sequences of length ``k``, optionally starting at ``v``.

    Lexicographic in edge ids.
    """
    if k < 1:
        raise GraphError("path length must be >= 1")
    if v is None:
        frontier = [(e,) for e in g.edge_ids]
    else:
        frontier = [(e,) for e in g.out_edges(v)]
    for _ in range(k - 1):
        frontier = [p + (f,) for p in frontier for f in g.out_edges(g.r(p[-1]))]
    return frontier


def simple_cycles(g: Graph) -> list[Path]:
    """Edge sequences of all vertex-simple cycles, each rooted at its least vertex."""
    order = {v: i for i, v in enumerate(g.vertices)}
    cycles: list[Path] = []
    for root in g.vertices:
        stack = [(root, (), frozenset([root]))]
        while stack:
            v, path, seen = stack.pop()
            for e in reversed(g.out_edges(v)):
                w = g.r(e)
                if w == root:
                    cycles.append(path + (e,))
                elif w not in seen and order[w] > order[root]:
                    stack.append((w, path + (e,), seen | {w}))
    cycles.sort(key=lambda c: (len(c), c))
    return cycles


def cycle_has_exit(g: Graph, cycle: Sequence[str]) -> bool:
    on_cycle = set(cycle)
    return any(
        f not in on_cycle for e in cycle for f in g.out_edges(g.s(e))
    )


def condition_L(g: Graph) -> tuple[bool, Path | None]:
    """Check that every loop has an exit.

    Returns ``(True, None)`` or ``(False, witness)`` with the first
    offending cycle.  Only simple cycles need checking: any cycle passes
    through the vertices of some simple cycle it contains.
    """
    for cyc in simple_cycles(g):
        if not cycle_has_exit(g, cyc):
            return False, cyc
    return True, None


def longest_common_prefix(g: Graph | None, alpha: Sequence[str], beta: Sequence[str]) -> int:
    if g is not None and g.s(alpha[0]) != g.s(beta[0]):
        raise GraphError("paths start at different vertices")
    n = 0
    for a, b in zip(alpha, beta):
        if a != b:
            break
        n += 1
    return n


def path_metric(g: Graph | None, alpha: Sequence[str], beta: Sequence[str], c: float) -> float:
    """Ultrametric ``c ** lcp(alpha, beta)`` (0 on the diagonal)."""
    if not 0.0 < c < 1.0:
        raise ValueError("ratio c must lie in (0, 1)")
    if tuple(alpha) == tuple(beta):
        return 0.0
    return c ** longest_common_prefix(g, alpha, beta)


def graph_from_mapping(data: Mapping) -> Graph:
    return Graph(data["vertices"], [(e["id"], e["s"], e["r"]) for e in data["edges"]])
