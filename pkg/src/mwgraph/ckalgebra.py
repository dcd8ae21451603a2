"""Symbolic Cuntz-Krieger calculus on words ``S_alpha S_beta^*``.

Relations used by the rewriting engine:

    S_e^* S_e = P_{r(e)},        P_v = sum_{s(f) = v} S_f S_f^*

from which  (S_a S_b^*)(S_g S_d^*) = S_{a g'} S_d^*  if g = b g',
                                   = S_a S_{d b'}^*  if b = g b',
                                   = 0               otherwise.

Monomials whose shorter word has length exactly ``n`` are linearly
independent, so two elements are equal iff their expansions to a common
depth agree coefficient-wise.  Diagonal elements ``sum c_alpha S_alpha
S_alpha^*`` at a fixed level have norm ``max |c_alpha|``.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .graph import Graph, GraphError, edge_matrix, paths_of_length
from .lipschitz import LipFunction, _same_box, family_lip
from .metric import box_corners, fmt, in_box
from .states import eval_state, state_space_diameter
from .system import DomainError, MWGraph, lip_compose


@dataclass(frozen=True, order=True)
class Word:
    """A path with explicit endpoints; ``edges == ()`` is the vertex projection marker."""

    start: str
    edges: tuple
    end: str

    def __len__(self) -> int:
        return len(self.edges)

    def is_prefix_of(self, other: "Word") -> bool:
        n = len(self.edges)
        return self.start == other.start and other.edges[:n] == self.edges

    def __str__(self) -> str:
        return "-".join(self.edges) if self.edges else f"<{self.start}>"


def word(g: Graph, edges: Iterable[str]) -> Word:
    edges = g.check_path(tuple(edges))
    return Word(g.s(edges[0]), edges, g.r(edges[-1]))


def empty_word(v: str) -> Word:
    return Word(v, (), v)


@dataclass(frozen=True, order=True)
class CKMonomial:
    """``S_alpha S_beta^*`` with r(alpha) = r(beta)."""

    alpha: Word
    beta: Word

    def __post_init__(self):
        if self.alpha.end != self.beta.end:
            raise ValueError(f"monomial words end at different vertices: {self.alpha} / {self.beta}")

    @property
    def depth(self) -> int:
        return min(len(self.alpha), len(self.beta))

    def adjoint(self) -> "CKMonomial":
        return CKMonomial(self.beta, self.alpha)

    def __str__(self) -> str:
        if not self.alpha.edges and not self.beta.edges:
            return f"P[{self.alpha.start}]"
        a = f"S[{self.alpha}]" if self.alpha.edges else ""
        b = f"S*[{self.beta}]" if self.beta.edges else ""
        return a + b


def monomial_mul(x: CKMonomial, y: CKMonomial) -> "CKElement":
    b, gm = x.beta, y.alpha
    if b.is_prefix_of(gm):
        rest = gm.edges[len(b):]
        return CKElement({CKMonomial(Word(x.alpha.start, x.alpha.edges + rest, gm.end), y.beta): 1.0})
    if gm.is_prefix_of(b):
        rest = b.edges[len(gm):]
        return CKElement({CKMonomial(x.alpha, Word(y.beta.start, y.beta.edges + rest, b.end)): 1.0})
    return CKElement({})


class CKElement:
    """Finite linear combination of monomials; zero coefficients are never stored."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[CKMonomial, complex] | None = None):
        self.terms: dict = {k: v for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def generator(cls, g: Graph, e: str) -> "CKElement":
        """``S_e``."""
        return cls({CKMonomial(word(g, (e,)), empty_word(g.r(e))): 1.0})

    @classmethod
    def projection(cls, v: str) -> "CKElement":
        """``P_v``."""
        return cls({CKMonomial(empty_word(v), empty_word(v)): 1.0})

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __add__(self, other: "CKElement") -> "CKElement":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return CKElement(out)

    def __sub__(self, other: "CKElement") -> "CKElement":
        return self + other.scale(-1.0)

    def scale(self, lam: complex) -> "CKElement":
        return CKElement({k: lam * v for k, v in self.terms.items()})

    def adjoint(self) -> "CKElement":
        return CKElement({k.adjoint(): np.conj(v) for k, v in self.terms.items()})

    def __mul__(self, other: "CKElement") -> "CKElement":
        return multiply(self, other)

    def max_depth(self) -> int:
        return max((k.depth for k in self.terms), default=0)

    def coeff_norm(self) -> float:
        """max |coefficient|: the exact norm when ranges and sources are pairwise orthogonal."""
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self) -> str:
        if not self.terms:
            return "CKElement(0)"
        return "CKElement(" + " + ".join(f"{v}*{k}" for k, v in self) + ")"


def multiply(x: CKElement, y: CKElement, mul: Callable = monomial_mul) -> CKElement:
    """Bilinear product, indexing y by its left words so only comparable pairs are visited."""
    if mul is not monomial_mul:
        out = CKElement({})
        for mx, cx in x.terms.items():
            for my, cy in y.terms.items():
                out = out + mul(mx, my).scale(cx * cy)
        return out
    exact = defaultdict(list)     # left word -> terms
    longer = defaultdict(list)    # proper prefix of left word -> terms
    for my, cy in y.terms.items():
        g = my.alpha
        exact[(g.start, g.edges)].append((my, cy))
        for n in range(len(g.edges)):
            longer[(g.start, g.edges[:n])].append((my, cy))
    out: dict = defaultdict(complex)
    for mx, cx in x.terms.items():
        b = mx.beta
        hits = list(longer.get((b.start, b.edges), ()))
        for n in range(len(b.edges) + 1):
            hits.extend(exact.get((b.start, b.edges[:n]), ()))
        for my, cy in hits:
            for mono, c in monomial_mul(mx, my).terms.items():
                out[mono] += c * cx * cy
    return CKElement(_realify(out))


def _realify(d: Mapping) -> dict:
    return {k: (v.real if isinstance(v, complex) and v.imag == 0 else v) for k, v in d.items()}


def vertex_expand(x: CKElement, depth: int, g: Graph) -> CKElement:
    """Rewrite with ``P_v -> sum S_f S_f^*`` until every monomial's shorter word has length >= depth."""
    out: dict = defaultdict(float)
    stack = list(x.terms.items())
    while stack:
        mono, c = stack.pop()
        if mono.depth >= depth:
            out[mono] += c
            continue
        v = mono.alpha.end
        outs = g.out_edges(v)
        if not outs:
            raise GraphError(f"cannot expand past sink {v}")
        for f in outs:
            w = g.r(f)
            stack.append((CKMonomial(Word(mono.alpha.start, mono.alpha.edges + (f,), w),
                                     Word(mono.beta.start, mono.beta.edges + (f,), w)), c))
    return CKElement(out)


def normal_form(x: CKElement, g: Graph, depth: int | None = None) -> CKElement:
    return vertex_expand(x, x.max_depth() if depth is None else depth, g)


def ck_difference(x: CKElement, y: CKElement, g: Graph) -> CKElement:
    """``x - y`` expanded to a common depth (the unique normal form of the difference)."""
    depth = max(x.max_depth(), y.max_depth())
    return vertex_expand(x, depth, g) - vertex_expand(y, depth, g)


def ck_equal(x: CKElement, y: CKElement, g: Graph, tol: float = 0.0) -> bool:
    return ck_difference(x, y, g).coeff_norm() <= tol


# diagonal elements

class DiagonalElement:
    """``sum_{alpha in E^k} c_alpha S_alpha S_alpha^*`` keyed by edge tuples."""

    __slots__ = ("level", "coeffs")

    def __init__(self, level: int, coeffs: Mapping[tuple, complex] | None = None):
        self.level = level
        self.coeffs = dict(coeffs or {})
        for p in self.coeffs:
            if len(p) != level:
                raise ValueError(f"path {p} has length != level {level}")

    def __sub__(self, other: "DiagonalElement") -> "DiagonalElement":
        if self.level != other.level:
            raise ValueError("levels differ; refine first")
        keys = set(self.coeffs) | set(other.coeffs)
        return DiagonalElement(self.level, {p: self.coeffs.get(p, 0.0) - other.coeffs.get(p, 0.0)
                                            for p in keys})

    def __add__(self, other: "DiagonalElement") -> "DiagonalElement":
        return self - other.scale(-1.0)

    def scale(self, lam: complex) -> "DiagonalElement":
        return DiagonalElement(self.level, {p: lam * c for p, c in self.coeffs.items()})

    def __mul__(self, other: "DiagonalElement") -> "DiagonalElement":
        """Pointwise product (the projections are orthogonal)."""
        if self.level != other.level:
            raise ValueError("levels differ; refine first")
        return DiagonalElement(self.level, {p: c * other.coeffs[p]
                                            for p, c in self.coeffs.items() if p in other.coeffs})

    def adjoint(self) -> "DiagonalElement":
        return DiagonalElement(self.level, {p: np.conj(c) for p, c in self.coeffs.items()})

    def __getitem__(self, path) -> complex:
        return self.coeffs.get(tuple(path), 0.0)

    def to_ck(self, g: Graph) -> CKElement:
        return CKElement({CKMonomial(word(g, p), word(g, p)): c for p, c in self.coeffs.items()})

    @classmethod
    def from_ck(cls, x: CKElement, level: int) -> "DiagonalElement":
        coeffs = {}
        for mono, c in x.terms.items():
            if mono.alpha != mono.beta or len(mono.alpha) != level:
                raise ValueError(f"{mono} is not diagonal at level {level}")
            coeffs[mono.alpha.edges] = c
        return cls(level, coeffs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for p in sorted(self.coeffs):
            c = complex(self.coeffs[p])
            w.writerow(["-".join(p), fmt(c.real), fmt(c.imag)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DiagonalElement":
        coeffs = {}
        for row in csv.reader(io.StringIO(text)):
            if not row:
                continue
            path = tuple(row[0].split("-"))
            c = complex(float(row[1]), float(row[2]))
            coeffs[path] = c.real if c.imag == 0 else c
        level = len(next(iter(coeffs))) if coeffs else 0
        return cls(level, coeffs)

    def __repr__(self) -> str:
        return f"DiagonalElement(level={self.level}, terms={len(self.coeffs)})"


def refine(d: DiagonalElement, k: int, g: Graph) -> DiagonalElement:
    """Re-express at level k: the coefficient of alpha is copied to every extension alpha beta."""
    if k < d.level:
        raise ValueError("cannot refine to a lower level")
    if k == d.level:
        return DiagonalElement(k, d.coeffs)
    out = {}
    for p, c in d.coeffs.items():
        for ext in paths_of_length(g, k - d.level, g.r(p[-1])):
            out[p + ext] = c
    return DiagonalElement(k, out)


def diag_norm(d: DiagonalElement) -> float:
    return max((abs(c) for c in d.coeffs.values()), default=0.0)


# finite-level approximants of the diagonal representation

def ia_coefficient(m: MWGraph, a: Mapping[str, LipFunction], mu0: Mapping, alpha) -> complex:
    """``mu0[r(alpha)](a_{s(alpha)} o phi_alpha)`` for a single path, straight from the definition."""
    g = m.graph
    alpha = g.check_path(alpha)
    return eval_state(mu0[g.r(alpha[-1])], lip_compose(a[g.s(alpha[0])], m, alpha))


def _composites(m: MWGraph, k: int) -> dict:
    """Stacked composite maps of all length-k paths, grouped by (s(alpha), r(alpha)).

    Products are formed left to right, in the same order as ``composite_map``.
    """
    g = m.graph
    groups: dict = defaultdict(lambda: ([], [], []))
    for e in g.edge_ids:
        P, A, b = groups[(g.s(e), g.r(e))]
        P.append((e,))
        A.append(m.maps[e].A)
        b.append(m.maps[e].b)
    level = {key: (P, np.array(A), np.array(b)) for key, (P, A, b) in groups.items()}
    for _ in range(k - 1):
        nxt: dict = defaultdict(lambda: ([], [], []))
        for (s, v), (P, A, b) in level.items():
            for f in g.out_edges(v):
                phi = m.maps[f]
                Q, A2, b2 = nxt[(s, g.r(f))]
                Q.extend(p + (f,) for p in P)
                A2.append(A @ phi.A)
                b2.append(A @ phi.b + b)
        level = {key: (Q, np.concatenate(A2), np.concatenate(b2))
                 for key, (Q, A2, b2) in nxt.items()}
    return level


def _check_inputs(m: MWGraph, a: Mapping[str, LipFunction], mu0: Mapping) -> None:
    g = m.graph
    for v in g.vertices:
        if not _same_box(a[v].box, m.box(v)):
            raise DomainError(f"function box {a[v].box} is not the box of vertex {v}")
        mu = mu0[v]
        if mu.dim != len(m.box(v)) or not in_box(mu.points, m.box(v)):
            raise DomainError(f"state at {v} is not supported in its box")
    for e in g.edge_ids:
        if not in_box(m.maps[e](box_corners(m.box(g.r(e)))), m.box(g.s(e))):
            raise DomainError(f"edge {e} maps its box outside the box of {g.s(e)}")


def ia_approx(m: MWGraph, a: Mapping[str, LipFunction], mu0: Mapping, k: int) -> DiagonalElement:
    """Level-k approximant: coefficient at alpha is ``mu0[r(alpha)](a_{s(alpha)} o phi_alpha)``.

    Agrees with :func:`ia_coefficient` on every path up to summation order;
    the composites of a whole level are evaluated as one batch.
    """
    if k < 1:
        raise ValueError("level must be >= 1")
    _check_inputs(m, a, mu0)
    coeffs = {}
    for (s, r), (paths, A, b) in _composites(m, k).items():
        f = a[s]
        if f.is_const:
            coeffs.update((p, f.value) for p in paths)
            continue
        mu = mu0[r]
        X = np.einsum("nij,qj->nqi", A, mu.points) + b[:, None, :]
        vals = f.evaluate(X.reshape(-1, X.shape[-1])).reshape(len(paths), len(mu.weights))
        out = vals @ mu.weights
        coeffs.update(zip(paths, (out.real if f.real else out).tolist()))
    return DiagonalElement(k, coeffs)


def cauchy_bound(m: MWGraph, a: Mapping[str, LipFunction], level: int) -> float:
    return m.c ** level * state_space_diameter(m) * family_lip(a)


def ia_gap(m: MWGraph, a, mu0, mlev: int, klev: int,
           cache: dict | None = None) -> tuple[float, float]:
    """Exact ``||a_m - a_k||`` and the bound ``c^m * diam * c_a``."""
    if not mlev < klev:
        raise ValueError("need mlev < klev")
    cache = {} if cache is None else cache
    for lev in (mlev, klev):
        if lev not in cache:
            cache[lev] = ia_approx(m, a, mu0, lev)
    gap = diag_norm(refine(cache[mlev], klev, m.graph) - cache[klev])
    return gap, cauchy_bound(m, a, mlev)


def hom_defect(m: MWGraph, a, b, mu0, k: int) -> float:
    """``|| ia(ab) - ia(a) ia(b) ||`` at level k."""
    ab = {v: a[v] * b[v] for v in a}
    return diag_norm(ia_approx(m, ab, mu0, k) - ia_approx(m, a, mu0, k) * ia_approx(m, b, mu0, k))


def hom_envelope(m: MWGraph, a, b, k: int) -> float:
    """``c^k * diam * (c_a ||b|| + c_b ||a||)``."""
    from .lipschitz import family_sup

    return m.c ** k * state_space_diameter(m) * (
        family_lip(a) * family_sup(b) + family_lip(b) * family_sup(a))


def edge_pullback(m: MWGraph, a: Mapping[str, LipFunction], e: str) -> dict:
    """The family ``a_{s(e)} o phi_e`` on T_{r(e)}, zero on the other vertices."""
    g = m.graph
    out = {v: LipFunction.const(0.0, m.box(v)) for v in g.vertices}
    out[g.r(e)] = a[g.s(e)].compose(m.maps[e], m.box(g.r(e)))
    return out


def covariance_defect(m: MWGraph, a, mu0, e: str, k: int) -> float:
    """max over alpha' of |ia(a, k)[e alpha'] - ia(a o phi_e, k-1)[alpha']|."""
    if k < 2:
        raise ValueError("need k >= 2")
    g = m.graph
    left = ia_approx(m, a, mu0, k)
    right = ia_approx(m, edge_pullback(m, a, e), mu0, k - 1)
    return max((abs(left[(e,) + p] - right[p]) for p in paths_of_length(g, k - 1, g.r(e))),
               default=0.0)


def ideal_norms(m: MWGraph, a, mu0, kmax: int, eta: float) -> list[tuple[int, float, float]]:
    """Rows ``(k, ||ia(a, k)||, c^k D c_a + eta)`` for a family vanishing on K up to ``eta``."""
    rows = []
    for k in range(1, kmax + 1):
        rows.append((k, diag_norm(ia_approx(m, a, mu0, k)), cauchy_bound(m, a, k) + eta))
    return rows


def ck_identity_check(g: Graph, mul: Callable = monomial_mul,
                      expand: Callable = vertex_expand) -> list[str]:
    """Check the Cuntz-Krieger relations in the rewriting engine; returns failures."""
    failures = []

    def prod(x, y):
        return multiply(x, y, mul)

    ids = g.edge_ids
    A = edge_matrix(g)
    for i, e in enumerate(ids):
        Se = CKElement.generator(g, e)
        lhs = prod(Se.adjoint(), Se)
        if lhs.terms != CKElement.projection(g.r(e)).terms:
            failures.append(f"S_{e}* S_{e} != P_{g.r(e)}")
        if A[i].any():
            rhs = CKElement({})
            for j, f in enumerate(ids):
                if A[i, j]:
                    Sf = CKElement.generator(g, f)
                    rhs = rhs + prod(Sf, Sf.adjoint())
            if not ck_equal(expand(lhs, 1, g), rhs, g):
                failures.append(f"S_{e}* S_{e} != sum_f A({e},f) S_f S_f*")
        for f in ids:
            if f != e:
                Sf = CKElement.generator(g, f)
                if not prod(Se.adjoint(), Sf).is_zero():
                    failures.append(f"S_{e}* S_{f} != 0")
    for v in g.vertices:
        Pv = CKElement.projection(v)
        if not prod(Pv, Pv).terms == Pv.terms:
            failures.append(f"P_{v} not idempotent")
        for w in g.vertices:
            if w != v and not prod(Pv, CKElement.projection(w)).is_zero():
                failures.append(f"P_{v} P_{w} != 0")
        outs = g.out_edges(v)
        if outs:
            rhs = CKElement({})
            for f in outs:
                Sf = CKElement.generator(g, f)
                rhs = rhs + prod(Sf, Sf.adjoint())
            lhs = expand(Pv, 1, g)
            if lhs.terms != rhs.terms:
                failures.append(f"P_{v} != sum_(s(f)={v}) S_f S_f*")
    return failures
