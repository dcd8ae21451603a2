"""Mauldin-Williams graphs: a graph, a box per vertex, an affine contraction per edge.

The map on edge ``e`` goes from the space of ``r(e)`` to the space of
``s(e)`` (against the edge direction).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath
from typing import Mapping, Sequence

import numpy as np

from .affine import AffineMap
from .graph import Graph, GraphError, ValidationReport, paths_of_length, validate_graph
from .lipschitz import LipFunction, as_box
from .metric import (
    PointCloud,
    box_corners,
    box_diameter,
    box_net,
    dedupe,
    hausdorff_distance,
    in_box,
    thin,
)

log = logging.getLogger(__name__)

DEFAULT_STEP = 0.1


class SystemFormatError(ValueError):
    """The system description file is malformed."""


class DomainError(ValueError):
    """Points or functions live on the wrong box."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, approx: "InvariantListApprox"):
        super().__init__(message)
        self.residual = residual
        self.approx = approx


@dataclass(frozen=True)
class Space:
    box: tuple
    step: float = DEFAULT_STEP

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.box])

    @property
    def center(self) -> np.ndarray:
        return np.array([(lo + hi) / 2 for lo, hi in self.box])

    @property
    def diameter(self) -> float:
        return box_diameter(self.box)


class MWGraph:
    """A Mauldin-Williams graph with affine edge maps.

    Construction does not validate; call :func:`validate_mw`.
    """

    def __init__(self, graph: Graph, spaces: Mapping[str, Space], maps: Mapping[str, AffineMap]):
        self.graph = graph
        missing = set(graph.vertices) - set(spaces)
        if missing:
            raise SystemFormatError(f"no space given for vertices {sorted(missing)}")
        missing = set(graph.edge_ids) - set(maps)
        if missing:
            raise SystemFormatError(f"no map given for edges {sorted(missing)}")
        self.spaces = {v: spaces[v] for v in graph.vertices}
        self.maps = {e: maps[e] for e in graph.edge_ids}
        for e in graph.edge_ids:
            phi = self.maps[e]
            if phi.d_in != self.spaces[graph.r(e)].dim or phi.d_out != self.spaces[graph.s(e)].dim:
                raise SystemFormatError(f"map on edge {e} has the wrong shape for its boxes")

    @property
    def c(self) -> float:
        return max(phi.certified_ratio for phi in self.maps.values())

    @property
    def D(self) -> float:
        """Largest vertex-box diameter."""
        return max(sp.diameter for sp in self.spaces.values())

    def box(self, v: str) -> tuple:
        return self.spaces[v].box

    def __repr__(self) -> str:
        return f"MWGraph({self.graph!r}, c={self.c:g})"

    # file format

    @classmethod
    def from_dict(cls, data: Mapping) -> "MWGraph":
        if not isinstance(data, Mapping):
            raise SystemFormatError("system description must be a JSON object")
        extra = set(data) - {"vertices", "edges", "spaces"}
        if extra:
            raise SystemFormatError(f"unknown top-level keys {sorted(extra)}")
        try:
            vertices = [str(v) for v in data["vertices"]]
            edges, maps = [], {}
            for ed in data["edges"]:
                bad = set(ed) - {"id", "s", "r", "map"}
                if bad:
                    raise SystemFormatError(f"unknown edge keys {sorted(bad)}")
                bad = set(ed["map"]) - {"A", "b"}
                if bad:
                    raise SystemFormatError(f"unknown map keys {sorted(bad)}")
                eid = str(ed["id"])
                edges.append((eid, str(ed["s"]), str(ed["r"])))
                maps[eid] = AffineMap(np.array(ed["map"]["A"], dtype=float),
                                      np.array(ed["map"]["b"], dtype=float))
            spaces = {}
            for v, sp in data["spaces"].items():
                bad = set(sp) - {"box", "step"}
                if bad:
                    raise SystemFormatError(f"unknown space keys {sorted(bad)}")
                step = float(sp.get("step", DEFAULT_STEP))
                if step <= 0:
                    raise SystemFormatError("net step must be positive")
                spaces[str(v)] = Space(as_box(sp["box"]), step)
            return cls(Graph(vertices, edges), spaces, maps)
        except SystemFormatError:
            raise
        except (KeyError, TypeError, ValueError, GraphError) as exc:
            raise SystemFormatError(f"malformed system description: {exc}") from exc

    @classmethod
    def load(cls, path) -> "MWGraph":
        text = FsPath(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SystemFormatError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "vertices": list(g.vertices),
            "edges": [{"id": e.id, "s": e.s, "r": e.r, "map": self.maps[e.id].to_dict()}
                      for e in g.edges],
            "spaces": {v: {"box": [list(b) for b in sp.box], "step": sp.step}
                       for v, sp in self.spaces.items()},
        }


def load_fixture(name: str) -> MWGraph:
    """Load one of the bundled systems (DOUBLE, CANTOR, TWOV, LOOP, PLANAR)."""
    ref = resources.files("mwgraph") / "fixtures" / f"{name.upper()}.json"
    return MWGraph.from_dict(json.loads(ref.read_text()))


def validate_mw(m: MWGraph, allow_sources: bool = False) -> ValidationReport:
    """Check contraction ratios, box containment and the sink/source condition.

    ``allow_sources`` relaxes the graph check to "no sinks" only.
    """
    report = validate_graph(m.graph)
    if allow_sources:
        report.findings = [f for f in report.findings if f.code != "source"]
    g = m.graph
    for e in g.edge_ids:
        phi = m.maps[e]
        if not phi.certified_ratio < 1.0:
            report.add("error", "not_contraction",
                       f"edge {e}: not a contraction (certified ratio {phi.certified_ratio:.17g})", e)
        image = phi(box_corners(m.box(g.r(e))))
        if not in_box(image, m.box(g.s(e)), tol=1e-12):
            report.add("error", "box_containment",
                       f"edge {e}: image of box {g.r(e)} leaves box {g.s(e)}", e)
    report.info["c"] = m.c
    return report


def _check_in_box(P: PointCloud, box, what: str) -> None:
    if P.dim != len(box):
        raise DomainError(f"{what}: dimension {P.dim} does not match box")
    if not in_box(P.points, box):
        raise DomainError(f"{what}: points outside the box {box}")


def apply_map(m: MWGraph, e: str, P: PointCloud) -> PointCloud:
    phi = m.maps[e]
    _check_in_box(P, m.box(m.graph.r(e)), f"edge {e}")
    return PointCloud(phi(P.points), phi.certified_ratio * P.resolution)


def composite_map(m: MWGraph, alpha: Sequence[str]) -> AffineMap:
    """``phi_{alpha_1} o ... o phi_{alpha_k}`` from the box of r(alpha) to the box of s(alpha)."""
    alpha = m.graph.check_path(alpha)
    phi = m.maps[alpha[0]]
    for e in alpha[1:]:
        phi = phi.after(m.maps[e])
    return phi


@dataclass
class InvariantListApprox:
    clouds: dict
    residual: float
    eps: float
    history: list = field(default_factory=list)
    certified_bound: float = math.inf

    @property
    def iterations(self) -> int:
        return len(self.history)


def seed_list(m: MWGraph, kind: str = "net", step: float | None = None) -> InvariantListApprox:
    """Starting clouds: a box net per vertex, or a single anchor (lower corner)."""
    clouds = {}
    for v, sp in m.spaces.items():
        if kind == "net":
            clouds[v] = box_net(sp.box, step or sp.step)
        elif kind == "anchor":
            clouds[v] = PointCloud(sp.lower.reshape(1, -1), sp.diameter)
        elif kind == "center":
            clouds[v] = PointCloud(sp.center.reshape(1, -1), sp.diameter / 2)
        else:
            raise ValueError(f"unknown seed kind {kind!r}")
    return InvariantListApprox(clouds, math.inf, 0.0)


def hutchinson_step(m: MWGraph, K: InvariantListApprox, eps: float = 0.0) -> InvariantListApprox:
    """One application of the set map, thinned to an ``eps``-net at every vertex."""
    g = m.graph
    new = {}
    for v in g.vertices:
        images = [apply_map(m, e, K.clouds[g.r(e)]) for e in g.out_edges(v)]
        if not images:
            raise GraphError(f"vertex {v} is a sink")
        union = PointCloud(np.vstack([P.points for P in images]),
                           max(P.resolution for P in images))
        new[v] = thin(union, eps) if eps > 0 else dedupe(union)
    residual = max(hausdorff_distance(K.clouds[v], new[v]) for v in g.vertices)
    return InvariantListApprox(new, residual, eps, K.history + [residual])


def invariant_list(m: MWGraph, eps: float, tol: float, max_iter: int = 100,
                   seed: str | InvariantListApprox = "net") -> InvariantListApprox:
    """Iterate the thinned set map until the Hausdorff step size is at most ``tol``.

    The result records ``certified_bound = (residual + eps) / (1 - c)``, an
    upper bound on the Hausdorff distance from each cloud to the true K_v.
    Raises :class:`ConvergenceError` after ``max_iter`` steps.
    """
    c = m.c
    if not c < 1:
        raise ValueError("system is not contractive")
    K = seed_list(m, seed) if isinstance(seed, str) else seed
    K = InvariantListApprox(K.clouds, K.residual, eps, [])
    for it in range(max_iter):
        K = hutchinson_step(m, K, eps)
        log.debug("iteration %d residual %.3e", it + 1, K.residual)
        if K.residual <= tol:
            K.certified_bound = (K.residual + eps) / (1 - c)
            return K
    K.certified_bound = (K.residual + eps) / (1 - c)
    raise ConvergenceError(
        f"no convergence in {max_iter} iterations (last residual {K.residual:.3e})",
        K.residual, K)


def random_path(m: MWGraph, v: str, k: int, rng: np.random.Generator) -> tuple:
    """Path of length k from v, picking uniformly among out-edges at each step."""
    path = []
    for _ in range(k):
        outs = m.graph.out_edges(v)
        e = outs[rng.integers(len(outs))]
        path.append(e)
        v = m.graph.r(e)
    return tuple(path)


def chaos_game(m: MWGraph, v: str, n: int, seed: int, tol: float = 1e-6) -> PointCloud:
    """Random sample of K_v: images of box centers under random paths.

    Each point is within ``c**depth * D`` of K_v, depth = ceil(log tol / log c).
    """
    if n <= 0:
        raise ValueError("chaos game needs n >= 1 points")
    c = m.c
    depth = max(1, math.ceil(math.log(tol) / math.log(c)))
    rng = np.random.default_rng(seed)
    out = np.empty((n, m.spaces[v].dim))
    for i in range(n):
        alpha = random_path(m, v, depth, rng)
        out[i] = composite_map(m, alpha)(m.spaces[m.graph.r(alpha[-1])].center)
    return PointCloud(out, c ** depth * m.D)


def coding_point(m: MWGraph, alpha: Sequence[str],
                 anchor: Mapping[str, Sequence[float]] | None = None) -> tuple[np.ndarray, float]:
    """Finite-depth coding map: ``phi_alpha(anchor[r(alpha)])`` and the bound ``c**k * D``.

    Every infinite path extending alpha codes a point within the bound.
    Default anchors are the lower box corners.
    """
    alpha = m.graph.check_path(alpha)
    rv = m.graph.r(alpha[-1])
    x = m.spaces[rv].lower if anchor is None else np.asarray(anchor[rv], dtype=float)
    if not in_box(x, m.box(rv)):
        raise DomainError(f"anchor {x.tolist()} outside box of {rv}")
    for e in reversed(alpha):
        x = m.maps[e](x)
    return x, m.c ** len(alpha) * m.D


def lip_compose(f: LipFunction, m: MWGraph, alpha: Sequence[str]) -> LipFunction:
    """``f o phi_alpha`` on the box of r(alpha); constant scales by the ratio product."""
    alpha = m.graph.check_path(alpha)
    g = m.graph
    if len(f.box) != m.spaces[g.s(alpha[0])].dim or not in_box(
            box_corners(m.box(g.s(alpha[0]))), f.box, tol=1e-12) or not in_box(
            box_corners(f.box), m.box(g.s(alpha[0])), tol=1e-12):
        raise DomainError(f"function box {f.box} is not the box of vertex {g.s(alpha[0])}")
    return f.compose(composite_map(m, alpha), m.box(g.r(alpha[-1])))


def level_net(m: MWGraph, v: str, level: int) -> tuple[PointCloud, float]:
    """``{phi_alpha(lower corner) : alpha in E^level(v)}`` and its Hausdorff bound to K_v."""
    pts = [coding_point(m, a)[0] for a in paths_of_length(m.graph, level, v)]
    bound = m.c ** level * m.D
    return PointCloud(np.array(pts), bound), bound
