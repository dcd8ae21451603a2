"""Finitely supported states on C(T_v) and the Wasserstein-1 metric between them.

The sup over 1-Lipschitz test functions that defines the state metric is
computed by Kantorovich duality, as a transportation problem with the
Euclidean ground cost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .lipschitz import LipFunction, family_lip
from .metric import PointCloud, box_corners, box_diameter, greedy_net, in_box
from .system import DomainError, MWGraph, lip_compose
from .transport import transport

MERGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    support: PointCloud
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(self.support):
            raise ValueError("one weight per support point required")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with positive total")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()}, not 1")
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def of(cls, points, weights=None) -> "DiscreteMeasure":
        P = points if isinstance(points, PointCloud) else PointCloud(np.asarray(points, dtype=float))
        if weights is None:
            weights = np.full(len(P), 1.0 / len(P))
        return cls(P, weights)

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        return cls.of(np.asarray(x, dtype=float).reshape(1, -1), [1.0])

    @property
    def points(self) -> np.ndarray:
        return self.support.points

    @property
    def dim(self) -> int:
        return self.support.dim

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n={len(self.weights)}, dim={self.dim})"

    def to_dict(self) -> dict:
        return {"support": self.points.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DiscreteMeasure":
        extra = set(data) - {"support", "weights"}
        if extra:
            raise ValueError(f"unknown measure keys {sorted(extra)}")
        support = np.asarray(data["support"], dtype=float)
        if support.ndim == 1:
            support = support.reshape(-1, 1)
        return cls(PointCloud(support), data["weights"])

    @classmethod
    def load(cls, path) -> "DiscreteMeasure":
        return cls.from_dict(json.loads(FsPath(path).read_text()))


StateFamily = Mapping[str, DiscreteMeasure]


def eval_state(mu: DiscreteMeasure, f: LipFunction):
    """``mu(f) = sum_i w_i f(x_i)``.  Constants are returned exactly (states are unital)."""
    if mu.dim != f.dim or not in_box(mu.points, f.box):
        raise DomainError("measure support is not inside the function's box")
    if f.is_const:
        return f.value
    val = np.dot(mu.weights, f.evaluate(mu.points))
    return float(val) if f.real else complex(val)


def w1(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Exact Wasserstein-1 distance with Euclidean ground cost."""
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    ia = mu.weights > 0
    ib = nu.weights > 0
    C = cdist(mu.points[ia], nu.points[ib])
    cost, _ = transport(mu.weights[ia], nu.weights[ib], C)
    return max(cost, 0.0)


def merge_atoms(points: np.ndarray, weights: np.ndarray, tol: float = MERGE_TOL):
    """Merge support points closer than ``tol``, summing their weights (first occurrence wins)."""
    keep_pts, keep_w = [], []
    for x, w in zip(points, weights):
        for k, y in enumerate(keep_pts):
            if np.max(np.abs(x - y)) <= tol:
                keep_w[k] += w
                break
        else:
            keep_pts.append(x)
            keep_w.append(w)
    return np.array(keep_pts), np.array(keep_w)


def pushforward(m: MWGraph, e: str, mu: DiscreteMeasure) -> DiscreteMeasure:
    """Image measure of ``mu`` under the edge map (from box of r(e) into box of s(e))."""
    box = m.box(m.graph.r(e))
    if mu.dim != len(box) or not in_box(mu.points, box):
        raise DomainError(f"measure not supported in the box of {m.graph.r(e)}")
    pts, w = merge_atoms(m.maps[e](mu.points), mu.weights)
    return DiscreteMeasure(PointCloud(pts), w)


def pushforward_path(m: MWGraph, alpha: Sequence[str], mu: DiscreteMeasure) -> DiscreteMeasure:
    """``mu o phi_alpha^{-1}``: push along alpha_k first, alpha_1 last."""
    for e in reversed(tuple(alpha)):
        mu = pushforward(m, e, mu)
    return mu


def state_diameter(m: MWGraph, v: str) -> float:
    """Diameter of the state space of C(box_v) under W1.

    Equal to the box diameter: Diracs at opposite corners attain it and
    no 1-Lipschitz function oscillates by more on the box.
    """
    return box_diameter(m.box(v))


def state_space_diameter(m: MWGraph) -> float:
    return max(state_diameter(m, v) for v in m.graph.vertices)


def w1_hausdorff(A: Sequence[DiscreteMeasure], B: Sequence[DiscreteMeasure]) -> float:
    """Hausdorff distance between two finite sets of measures under W1."""
    M = np.array([[w1(x, y) for y in B] for x in A])
    return float(max(M.min(axis=1).max(), M.min(axis=0).max()))


def state_hutchinson_step(m: MWGraph, F: Mapping[str, Sequence[DiscreteMeasure]],
                          eps: float = 0.0) -> tuple[dict, float]:
    """Dual set map on families of states; returns the new family and its W1-Hausdorff residual."""
    g = m.graph
    new = {}
    for v in g.vertices:
        pushed = [pushforward(m, e, mu) for e in g.out_edges(v) for mu in F[g.r(e)]]
        keep = greedy_net(pushed, eps, w1)
        new[v] = [pushed[i] for i in keep]
    residual = max(w1_hausdorff(F[v], new[v]) for v in g.vertices)
    return new, residual


def pi_eval(m: MWGraph, a: Mapping[str, LipFunction], alpha: Sequence[str],
            mu0: StateFamily) -> tuple[float, float]:
    """Depth-k value of the evaluation map at the path ``alpha``.

    Returns ``mu0[r(alpha)](a_{s(alpha)} o phi_alpha)`` and the bound
    ``c**k * diam * c_a`` on its distance to the limit ``a(Pi(alpha))``.
    """
    if len(alpha) == 0:
        raise ValueError("path of length at least 1 required")
    alpha = m.graph.check_path(alpha)
    g = m.graph
    f = a[g.s(alpha[0])]
    val = eval_state(mu0[g.r(alpha[-1])], lip_compose(f, m, alpha))
    bound = m.c ** len(alpha) * state_space_diameter(m) * family_lip(a)
    return val, bound


def dirac_family(m: MWGraph, where: str = "lower") -> dict:
    """A Dirac state per vertex, at the lower box corner or the box center."""
    out = {}
    for v, sp in m.spaces.items():
        out[v] = DiscreteMeasure.dirac(sp.lower if where == "lower" else sp.center)
    return out


def corner_family(m: MWGraph) -> dict:
    """Uniform measure on the box corners of each vertex."""
    return {v: DiscreteMeasure.of(box_corners(sp.box)) for v, sp in m.spaces.items()}


def random_measure(box, n: int, rng: np.random.Generator) -> DiscreteMeasure:
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    pts = lo + (hi - lo) * rng.random((n, len(box)))
    w = rng.random(n) + 0.05
    return DiscreteMeasure(PointCloud(pts), w / w.sum())


def random_family(m: MWGraph, n: int, rng: np.random.Generator) -> dict:
    return {v: random_measure(sp.box, n, rng) for v, sp in m.spaces.items()}


__all__ = [
    "DiscreteMeasure", "StateFamily", "eval_state", "w1", "pushforward", "pushforward_path",
    "state_diameter", "state_space_diameter", "state_hutchinson_step", "w1_hausdorff",
    "pi_eval", "dirac_family", "corner_family", "random_family", "random_measure",
    "merge_atoms",
]
