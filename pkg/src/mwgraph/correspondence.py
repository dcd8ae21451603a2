"""The correspondence X = C(E x_G T) at finite resolution.

A section assigns to each edge e a Lipschitz function on the box of r(e):

    (xi . a)_e = xi_e * a_{r(e)}
    (a . xi)_e = (a_{s(e)} o phi_e) * xi_e
    <xi, eta>_v = sum_{r(e) = v} conj(xi_e) * eta_e

and ``i_X(xi) = sum_e S_e i_A(xi_e)`` is approximated at level k by
``sum_{e, alpha} mu0(xi_e o phi_alpha) S_{e alpha} S_alpha^*``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterator, Mapping

import numpy as np

from .ckalgebra import (CKElement, DiagonalElement, ck_difference, diag_norm, ia_approx,
                        multiply)
from .lipschitz import LipFunction, _same_box, parse_expr
from .metric import box_net
from .states import state_space_diameter
from .system import DomainError, MWGraph


class CorrElement:
    """Edge id -> section on the box of r(e); absent edges are the zero section."""

    __slots__ = ("m", "sections")

    def __init__(self, m: MWGraph, sections: Mapping[str, LipFunction] | None = None):
        g = m.graph
        self.m = m
        self.sections: dict = {}
        for e, f in (sections or {}).items():
            g.edge(e)
            if not _same_box(f.box, m.box(g.r(e))):
                raise DomainError(f"section at edge {e} is not declared on the box of {g.r(e)}")
            if not (f.is_const and f.value == 0):
                self.sections[e] = f

    def __getitem__(self, e: str) -> LipFunction:
        if e in self.sections:
            return self.sections[e]
        return LipFunction.const(0.0, self.m.box(self.m.graph.r(e)))

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self.sections))

    def __add__(self, other: "CorrElement") -> "CorrElement":
        keys = set(self.sections) | set(other.sections)
        return CorrElement(self.m, {e: self[e] + other[e] for e in keys})

    def scale(self, lam: complex) -> "CorrElement":
        return CorrElement(self.m, {e: f.scale(lam) for e, f in self.sections.items()})

    def is_zero(self) -> bool:
        return not self.sections

    def lip(self) -> float:
        return max((f.lip for f in self.sections.values()), default=0.0)

    def sup(self) -> float:
        return max((f.sup for f in self.sections.values()), default=0.0)

    def as_family(self, e: str) -> dict:
        """``xi_e`` viewed as an element of C(T): itself at r(e), zero elsewhere."""
        g = self.m.graph
        out = {v: LipFunction.const(0.0, self.m.box(v)) for v in g.vertices}
        out[g.r(e)] = self[e]
        return out

    def __repr__(self) -> str:
        return "CorrElement(" + ", ".join(f"{e}: {self.sections[e].expr()}" for e in self) + ")"

    @classmethod
    def from_dict(cls, m: MWGraph, data: Mapping[str, str]) -> "CorrElement":
        g = m.graph
        out = {}
        for e, text in data.items():
            g.edge(e)
            out[e] = parse_expr(str(text), m.box(g.r(e)))
        return cls(m, out)

    @classmethod
    def load(cls, m: MWGraph, path) -> "CorrElement":
        return cls.from_dict(m, json.loads(FsPath(path).read_text()))


@dataclass(frozen=True)
class RankOnePair:
    """The rank-one operator ``z -> x . <y, z>``."""

    x: CorrElement
    y: CorrElement


def basis_delta(m: MWGraph, e: str) -> CorrElement:
    g = m.graph
    g.edge(e)
    return CorrElement(m, {e: LipFunction.const(1.0, m.box(g.r(e)))})


def right_action(xi: CorrElement, a: Mapping[str, LipFunction]) -> CorrElement:
    g = xi.m.graph
    return CorrElement(xi.m, {e: f * a[g.r(e)] for e, f in xi.sections.items()})


def left_action(m: MWGraph, a: Mapping[str, LipFunction], xi: CorrElement) -> CorrElement:
    g = m.graph
    out = {}
    for e, f in xi.sections.items():
        out[e] = a[g.s(e)].compose(m.maps[e], m.box(g.r(e))) * f
    return CorrElement(m, out)


def inner_product(m: MWGraph, xi: CorrElement, eta: CorrElement) -> dict:
    g = m.graph
    out = {v: LipFunction.const(0.0, m.box(v)) for v in g.vertices}
    for e in set(xi.sections) & set(eta.sections):
        v = g.r(e)
        out[v] = out[v] + xi[e].conj() * eta[e]
    return out


def rank_one_apply(p: RankOnePair, xi: CorrElement) -> CorrElement:
    return right_action(p.x, inner_product(p.x.m, p.y, xi))


def phi_decompose(m: MWGraph, a: Mapping[str, LipFunction]) -> list[RankOnePair]:
    """Pairs ``(x^e, delta^e)`` with ``x^e = {e: a_{s(e)} o phi_e}``; their sum acts as ``a``."""
    g = m.graph
    pairs = []
    for e in g.edge_ids:
        xe = CorrElement(m, {e: a[g.s(e)].compose(m.maps[e], m.box(g.r(e)))})
        if not xe.is_zero():
            pairs.append(RankOnePair(xe, basis_delta(m, e)))
    return pairs


def apply_pairs(pairs, xi: CorrElement) -> CorrElement:
    out = CorrElement(xi.m)
    for p in pairs:
        out = out + rank_one_apply(p, xi)
    return out


def section_gap(xi: CorrElement, eta: CorrElement, step: float | None = None) -> float:
    """Largest pointwise difference of two elements over the vertex nets."""
    m = xi.m
    g = m.graph
    gap = 0.0
    for e in g.edge_ids:
        sp = m.spaces[g.r(e)]
        X = box_net(sp.box, sp.step if step is None else step).points
        d = np.abs(xi[e].evaluate(X) - eta[e].evaluate(X))
        gap = max(gap, float(d.max()))
    return gap


# Toeplitz representation

def ix_approx(m: MWGraph, xi: CorrElement, mu0: Mapping, k: int) -> CKElement:
    """``sum_e S_e * ia_approx(xi_e, k)``, a combination of ``S_{e alpha} S_alpha^*``."""
    out = CKElement({})
    for e in xi:
        d = ia_approx(m, xi.as_family(e), mu0, k)
        out = out + multiply(CKElement.generator(m.graph, e), d.to_ck(m.graph))
    return out


def square_norm(x: CKElement, level: int) -> float:
    """Exact norm ``sqrt(||x^* x||)`` when ``x^* x`` is diagonal at ``level``."""
    return math.sqrt(diag_norm(DiagonalElement.from_ck(multiply(x.adjoint(), x), level)))


def toeplitz_defect(m: MWGraph, xi: CorrElement, eta: CorrElement | None, mu0: Mapping, k: int,
                    mode: str = "inner", a: Mapping[str, LipFunction] | None = None) -> float:
    """Norm of a Toeplitz-identity defect at level k.

    ``inner``: i_X(xi)^* i_X(eta) - i_A(<xi, eta>)
    ``right``: i_X(xi . a) - i_X(xi) i_A(a)
    ``left``:  i_X(a . xi) - i_A(a) i_X(xi), with i_A at level k + 1 (matched depth)
    """
    g = m.graph
    if mode == "inner":
        lhs = multiply(ix_approx(m, xi, mu0, k).adjoint(), ix_approx(m, eta, mu0, k))
        rhs = ia_approx(m, inner_product(m, xi, eta), mu0, k).to_ck(g)
        return diag_norm(DiagonalElement.from_ck(ck_difference(lhs, rhs, g), k))
    if a is None:
        raise ValueError(f"mode {mode!r} needs a function family a")
    if mode == "right":
        lhs = ix_approx(m, right_action(xi, a), mu0, k)
        rhs = multiply(ix_approx(m, xi, mu0, k), ia_approx(m, a, mu0, k).to_ck(g))
    elif mode == "left":
        lhs = ix_approx(m, left_action(m, a, xi), mu0, k)
        rhs = multiply(ia_approx(m, a, mu0, k + 1).to_ck(g), ix_approx(m, xi, mu0, k))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return square_norm(ck_difference(lhs, rhs, g), k)


def toeplitz_envelope(m: MWGraph, xi: CorrElement, eta: CorrElement, k: int) -> float:
    """``N c^k D (c_xi ||eta|| + c_eta ||xi||)``, N the largest in-degree."""
    g = m.graph
    N = max(len(g.in_edges(v)) for v in g.vertices)
    return N * m.c ** k * state_space_diameter(m) * (xi.lip() * eta.sup() + eta.lip() * xi.sup())


def left_action_sup(m: MWGraph, a: Mapping[str, LipFunction], clouds: Mapping) -> float:
    """sup of ``|(a . delta^e)_e|`` over the point clouds ``clouds[r(e)]``, all edges."""
    g = m.graph
    best = 0.0
    for e in g.edge_ids:
        f = left_action(m, a, basis_delta(m, e))[e]
        X = clouds[g.r(e)].points
        best = max(best, float(np.abs(f.evaluate(X)).max()))
    return best


__all__ = [
    "CorrElement", "RankOnePair", "basis_delta", "right_action", "left_action", "inner_product",
    "rank_one_apply", "phi_decompose", "apply_pairs", "section_gap", "ix_approx", "square_norm",
    "toeplitz_defect", "toeplitz_envelope", "left_action_sup",
]
