import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import ACCEPTANCE, ALL
from mwgraph.affine import AffineMap, certified_spectral_norm
from mwgraph.graph import GraphError, longest_common_prefix
from mwgraph.lipschitz import LipError, LipFunction, eval_lip, parse_expr
from mwgraph.metric import PointCloud, box_net, hausdorff_distance
from mwgraph.system import (ConvergenceError, DomainError, InvariantListApprox, MWGraph,
                            SystemFormatError, apply_map, chaos_game, coding_point,
                            hutchinson_step, invariant_list, lip_compose, random_path, seed_list,
                            validate_mw)

UNIT = [(0.0, 1.0)]


def single_edge(A=0.5, b=0.0):
    return MWGraph.from_dict({
        "vertices": ["0"],
        "edges": [{"id": "0", "s": "0", "r": "0", "map": {"A": [[A]], "b": [b]}}],
        "spaces": {"0": {"box": [[0, 1]]}},
    })


# affine maps

def test_certified_norm_exact_cases():
    assert certified_spectral_norm(np.array([[0.5]])) == 0.5
    assert certified_spectral_norm(np.diag([0.2, -0.7])) == 0.7


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (3, 2), elements=st.floats(-2, 2, allow_nan=False)))
def test_certified_norm_is_upper_bound(A):
    assert certified_spectral_norm(A) >= np.linalg.svd(A, compute_uv=False).max()


def test_affine_composition_ratio():
    f = AffineMap([[0.5]], [0.1])
    g = AffineMap([[1 / 3]], [0.0])
    h = f.after(g)
    assert h(np.array([0.9]))[0] == pytest.approx(f(g(np.array([0.9])))[0])
    assert h.certified_ratio == pytest.approx(0.5 / 3)


# validation and file format

def test_validate_fixtures(systems):
    assert validate_mw(systems["DOUBLE"]).info["c"] == 0.5
    assert validate_mw(systems["CANTOR"]).info["c"] == pytest.approx(1 / 3)
    for name in ALL:
        assert validate_mw(systems[name]).ok


def test_validate_not_contraction():
    rep = validate_mw(single_edge(1.0))
    assert not rep.ok and any("not a contraction" in msg for msg in rep.messages())


def test_validate_box_containment():
    rep = validate_mw(single_edge(0.5, 0.6))
    assert [f.code for f in rep.findings] == ["box_containment"]


def test_allow_sources():
    m = MWGraph.from_dict({
        "vertices": ["u", "w"],
        "edges": [{"id": "e", "s": "u", "r": "u", "map": {"A": [[0.5]], "b": [0]}},
                  {"id": "f", "s": "w", "r": "u", "map": {"A": [[0.5]], "b": [0]}}],
        "spaces": {"u": {"box": [[0, 1]]}, "w": {"box": [[0, 1]]}},
    })
    assert not validate_mw(m).ok
    assert validate_mw(m, allow_sources=True).ok


def test_format_errors(tmp_path, systems):
    data = systems["DOUBLE"].to_dict()
    assert MWGraph.from_dict(data).to_dict() == data
    with pytest.raises(SystemFormatError):
        MWGraph.from_dict({**data, "extra": 1})
    bad = json.loads(json.dumps(data))
    bad["edges"][0]["weight"] = 1
    with pytest.raises(SystemFormatError):
        MWGraph.from_dict(bad)
    p = tmp_path / "broken.json"
    p.write_text("{")
    with pytest.raises(SystemFormatError):
        MWGraph.load(p)


# maps and Hutchinson iteration

def test_apply_map(systems):
    m = systems["DOUBLE"]
    P = PointCloud(np.array([[0.0], [1.0]]), 0.1)
    out = apply_map(m, "0", P)
    assert out.points.ravel().tolist() == [0.0, 0.5] and out.resolution == 0.05
    img = apply_map(systems["CANTOR"], "1", PointCloud(np.array([[0.0]])))
    assert img.points[0, 0] == pytest.approx(2 / 3)
    with pytest.raises(DomainError):
        apply_map(m, "0", PointCloud(np.array([[2.0]])))


@pytest.mark.parametrize("name", ALL)
def test_apply_map_resolution_contract(systems, name):
    m = systems[name]
    g = m.graph
    for e in g.edge_ids:
        box = m.box(g.r(e))
        net = box_net(box, 0.25 if len(box) == 1 else 0.5)
        dense = box_net(box, 2 ** -8 if len(box) == 1 else 2 ** -6)
        img = apply_map(m, e, net)
        truth = PointCloud(m.maps[e](dense.points))
        # dense oracle is itself within ratio * dense.resolution of the true image
        slack = m.maps[e].certified_ratio * dense.resolution
        assert hausdorff_distance(img, truth) <= img.resolution + slack + 1e-12


def test_hutchinson_examples(systems):
    m = systems["CANTOR"]
    K = hutchinson_step(m, seed_list(m), eps=0)
    x = K.clouds["0"].points.ravel()
    assert np.all((x <= 1 / 3 + 1e-15) | (x >= 2 / 3 - 1e-15))
    loop = systems["LOOP"]
    fixed = InvariantListApprox({"0": PointCloud(np.array([[0.0]]))}, math.inf, 0.0)
    assert hutchinson_step(loop, fixed).residual == 0.0
    one = InvariantListApprox({"0": PointCloud(np.array([[1.0]]))}, math.inf, 0.0)
    assert hutchinson_step(loop, one).clouds["0"].points.tolist() == [[0.5]]


def test_invariant_list_loop(systems):
    K = invariant_list(systems["LOOP"], eps=1e-6, tol=1e-8, max_iter=100)
    assert K.residual <= 1e-8
    assert np.abs(K.clouds["0"].points).max() <= K.certified_bound


def test_invariant_list_double_dense_oracle(systems):
    m = systems["DOUBLE"]
    eps, tol = 1e-4, 1e-3
    K = invariant_list(m, eps, tol, 60)
    grid = box_net(UNIT, 2 ** -12)
    bound = eps / (1 - m.c) + tol / (1 - m.c) + grid.resolution
    assert hausdorff_distance(K.clouds["0"], grid) <= bound
    assert K.certified_bound == pytest.approx((K.residual + eps) / (1 - m.c))


def test_invariant_list_twov_contracts(systems):
    m = systems["TWOV"]
    K = seed_list(m)
    hist = []
    for _ in range(10):
        K = hutchinson_step(m, K, eps=0)
        hist.append(K.residual)
    for r0, r1 in zip(hist, hist[1:]):
        assert r1 <= m.c * r0 + 1e-12


def test_invariant_list_nonconvergence(systems):
    with pytest.raises(ConvergenceError) as info:
        invariant_list(systems["CANTOR"], 1e-4, 1e-4, max_iter=1, seed="anchor")
    assert info.value.residual > 1e-4


# chaos game and coding map

def test_chaos_game(systems):
    P = chaos_game(systems["DOUBLE"], "0", 1000, seed=1)
    assert len(P) == 1000 and P.points.min() >= 0 and P.points.max() <= 1
    m = systems["CANTOR"]
    Q = chaos_game(m, "0", 1000, seed=2, tol=1e-6)
    delta = Q.resolution
    x = Q.points.ravel()
    assert not np.any((x > 1 / 3 + delta) & (x < 2 / 3 - delta))
    assert np.array_equal(Q.points, chaos_game(m, "0", 1000, seed=2, tol=1e-6).points)
    with pytest.raises(ValueError):
        chaos_game(m, "0", 0, seed=0)


def test_coding_point_examples(systems):
    x, bound = coding_point(systems["DOUBLE"], ("1",) + ("0",) * 19)
    assert x[0] == 0.5 and bound == 2.0 ** -20
    m = systems["CANTOR"]
    x, bound = coding_point(m, ("0",) * 12)
    assert x[0] == 0.0 and bound == pytest.approx(3.0 ** -12)
    ones = [coding_point(m, ("1",) * k)[0][0] for k in (1, 5, 20)]
    assert ones[0] < ones[1] < ones[2] and 1 - ones[2] <= 3.0 ** -20 + 1e-15
    with pytest.raises(GraphError):
        coding_point(systems["TWOV"], ("a", "a"))


@pytest.mark.parametrize("name", ACCEPTANCE + ("PLANAR",))
def test_coding_holder(systems, name):
    m = systems[name]
    rng = np.random.default_rng(7)
    v = m.graph.vertices[0]
    for _ in range(100):
        a = random_path(m, v, 12, rng)
        l = int(rng.integers(0, 12))
        b = a[:l] + random_path(m, m.graph.r(a[l - 1]) if l else v, 12 - l, rng)
        l = longest_common_prefix(m.graph, a, b)
        d = np.linalg.norm(coding_point(m, a)[0] - coding_point(m, b)[0])
        assert d <= m.c ** l * m.D + 1e-12


@pytest.mark.parametrize("name", ACCEPTANCE)
def test_coding_image_property(systems, name):
    m = systems[name]
    K = invariant_list(m, 1e-4, 1e-4, 60)
    rng = np.random.default_rng(11)
    for v in m.graph.vertices:
        for _ in range(30):
            alpha = random_path(m, v, 10, rng)
            x, bound = coding_point(m, alpha)
            near = np.min(np.linalg.norm(K.clouds[v].points - x, axis=1))
            assert near <= bound + K.certified_bound


# Lipschitz calculus

def test_eval_lip_examples():
    x = LipFunction.coord(0, UNIT)
    assert eval_lip(x, [0.25]) == 0.25
    assert eval_lip(x * x, [0.5]) == 0.25
    assert eval_lip(LipFunction.dist([0.5], UNIT), [0.75]) == 0.25
    with pytest.raises(LipError):
        eval_lip(x, [1.5])
    with pytest.raises(LipError):
        eval_lip(x, [0.1, 0.2])


def test_lip_compose_examples(systems):
    m = systems["DOUBLE"]
    x = LipFunction.coord(0, UNIT)
    for k in (1, 4, 9):
        assert lip_compose(x, m, ("0",) * k).lip == 2.0 ** -k
    c = lip_compose(LipFunction.const(0.0, UNIT), m, ("1", "0"))
    assert c.is_const and c.value == 0.0
    f = lip_compose(x, systems["CANTOR"], ("1",))
    assert f.lip == pytest.approx(1 / 3)
    assert eval_lip(f, [0.3]) == pytest.approx((0.3 + 2) / 3)
    with pytest.raises(DomainError):
        lip_compose(LipFunction.coord(0, [(0.0, 2.0)]), m, ("0",))


def test_parse_expr():
    f = parse_expr("x0*x0 + 0.5*dist(0.25) - 1", UNIT)
    assert eval_lip(f, [0.75]) == pytest.approx(0.5625 + 0.25 - 1)
    assert parse_expr("3", UNIT).is_const
    g = parse_expr("x1 - (x0)", [(0, 1), (0, 2)])
    assert eval_lip(g, [0.25, 2.0]) == 1.75
    for bad in ("y", "x0 / 2", "dist(0, 1)", "x0 +", "sin(x0)"):
        with pytest.raises(LipError):
            parse_expr(bad, UNIT)


leaves = st.one_of(
    st.floats(-2, 2).map(lambda v: LipFunction.const(v, [(0, 1), (0, 1)])),
    st.integers(0, 1).map(lambda i: LipFunction.coord(i, [(0, 1), (0, 1)])),
    st.tuples(st.floats(-1, 2), st.floats(-1, 2)).map(
        lambda p: LipFunction.dist(p, [(0, 1), (0, 1)])),
)
PHI = AffineMap([[0.25, -0.25], [0.25, 0.25]], [0.25, 0.5])
exprs = st.recursive(leaves, lambda kids: st.one_of(
    st.tuples(kids, kids).map(lambda t: t[0] + t[1]),
    st.tuples(kids, kids).map(lambda t: t[0] * t[1]),
    st.tuples(st.floats(-3, 3), kids).map(lambda t: t[1].scale(t[0])),
    kids.map(lambda f: f.compose(PHI, [(0, 1), (0, 1)])),
), max_leaves=6)


@settings(max_examples=150, deadline=None)
@given(exprs, st.integers(0, 2 ** 31))
def test_certified_constants_are_sound(f, seed):
    X = np.random.default_rng(seed).random((200, 2))
    vals = f.evaluate(X)
    assert np.abs(vals).max() <= f.sup + 1e-9
    dv = np.abs(vals[:100] - vals[100:])
    dx = np.linalg.norm(X[:100] - X[100:], axis=1)
    assert np.all(dv <= f.lip * dx + 1e-9)
