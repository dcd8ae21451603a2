import numpy as np
import pytest

from mwgraph import LipFunction, load_fixture

ACCEPTANCE = ("DOUBLE", "CANTOR", "TWOV")
ALL = ("DOUBLE", "CANTOR", "TWOV", "LOOP", "PLANAR")


@pytest.fixture(scope="session")
def systems():
    return {name: load_fixture(name) for name in ALL}


def coord_family(m, i=0):
    return {v: LipFunction.coord(i, m.box(v)) for v in m.graph.vertices}


def dist_family(m, p=0.3):
    return {v: LipFunction.dist(np.full(m.spaces[v].dim, p), m.box(v)) for v in m.graph.vertices}


def const_family(m, value):
    return {v: LipFunction.const(value, m.box(v)) for v in m.graph.vertices}


# acceptance bookkeeping: criterion number -> list of (part, ok, detail)
ACCEPTANCE_RESULTS: dict = {}

CRITERIA = {
    1: "invariant-list convergence",
    2: "uniqueness across seeds",
    3: "coding-map bound and Hoelder property",
    4: "i_A Cauchy estimate",
    5: "norm decrease",
    6: "homomorphism defect decay",
    7: "covariance identity",
    8: "mu0-independence",
    9: "Cuntz-Krieger identities",
    10: "Toeplitz identities",
    11: "i_X(delta^e) = S_e",
    12: "ideal vanishing",
    13: "W1 correctness",
    14: "state contraction",
    15: "J(X) = A decomposition",
    16: "pi_eval consistency",
    17: "CLI determinism and exit codes",
}


def acceptance_lines() -> list[str]:
    lines = []
    for n, title in CRITERIA.items():
        parts = ACCEPTANCE_RESULTS.get(n)
        if not parts:
            lines.append(f"criterion {n:2d} NOT RUN  {title}")
            continue
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{p[0]}: {'ok' if p[1] else 'FAILED'} ({p[2]})" for p in parts)
        lines.append(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title} | {detail}")
    return lines


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_lines():
        terminalreporter.write_line(line)
