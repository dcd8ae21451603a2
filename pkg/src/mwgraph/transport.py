"""Transportation simplex (MODI / u-v method) with Bland's anti-cycling rule."""

from __future__ import annotations

from collections import deque

import numpy as np


class TransportError(ValueError):
    pass


def _northwest_corner(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    n, m = len(a), len(b)
    x = np.zeros((n, m))
    basis = []
    sup, dem = a.copy(), b.copy()
    i = j = 0
    while i < n and j < m:
        q = min(sup[i], dem[j])
        x[i, j] = q
        basis.append((i, j))
        sup[i] -= q
        dem[j] -= q
        # exactly one index advances per basic cell, except at the very end
        if i == n - 1 and j == m - 1:
            break
        if (sup[i] <= dem[j] and i < n - 1) or j == m - 1:
            i += 1
        else:
            j += 1
    return x, basis


def _tree_adjacency(basis, n, m):
    adj = [[] for _ in range(n + m)]
    for i, j in basis:
        adj[i].append(n + j)
        adj[n + j].append(i)
    return adj


def _potentials(C, basis, n, m):
    adj = _tree_adjacency(basis, n, m)
    pot = np.full(n + m, np.nan)
    pot[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if np.isnan(pot[nb]):
                i, j = (node, nb - n) if node < n else (nb, node - n)
                # u_i + v_j = C_ij on basic cells
                pot[nb] = C[i, j] - pot[node]
                queue.append(nb)
    return pot[:n], pot[n:]


def _cycle(basis, n, m, enter):
    """Basic cells on the tree path closing the loop with the entering cell, in order from its column."""
    adj = _tree_adjacency(basis, n, m)
    i0, j0 = enter
    start, goal = n + j0, i0
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()  # start (col j0) ... goal (row i0)
    cells = []
    for p, q in zip(path, path[1:]):
        cells.append((p, q - n) if p < n else (q, p - n))
    return cells


def transport(a, b, C, tol: float = 1e-12, max_pivots: int = 100000) -> tuple[float, np.ndarray]:
    """Solve min <C, X> s.t. X 1 = a, X^T 1 = b, X >= 0 exactly (up to rounding).

    ``a`` and ``b`` must have equal totals.  Returns the optimal cost and plan.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    n, m = len(a), len(b)
    if C.shape != (n, m):
        raise TransportError("cost matrix shape does not match the marginals")
    if np.any(a < 0) or np.any(b < 0):
        raise TransportError("negative marginal")
    if abs(a.sum() - b.sum()) > 1e-9 * max(1.0, a.sum()):
        raise TransportError("unbalanced problem")
    b = b * (a.sum() / b.sum())

    x, basis = _northwest_corner(a, b)
    assert len(basis) == n + m - 1
    scale = max(1.0, float(np.abs(C).max()))
    for _ in range(max_pivots):
        u, v = _potentials(C, basis, n, m)
        reduced = C - u[:, None] - v[None, :]
        in_basis = np.zeros((n, m), dtype=bool)
        for cell in basis:
            in_basis[cell] = True
        candidates = np.argwhere((reduced < -tol * scale) & ~in_basis)
        if len(candidates) == 0:
            break
        # Bland: smallest index enters
        enter = tuple(int(t) for t in candidates[0])
        cells = _cycle(basis, n, m, enter)
        minus = cells[0::2]  # path from the entering column alternates -, +, -, ...
        plus = cells[1::2]
        theta = min(x[c] for c in minus)
        leave = min(c for c in minus if x[c] <= theta)
        for c in minus:
            x[c] -= theta
        for c in plus:
            x[c] += theta
        x[enter] += theta
        x[leave] = 0.0
        basis.remove(leave)
        basis.append(enter)
    else:
        raise TransportError("pivot limit reached")
    x[x < 0] = 0.0
    return float((C * x).sum()), x
