"""Affine maps ``x -> A x + b`` with a certified upper bound on their Lipschitz ratio."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_SLACK = 1e-12
POWER_ITERATIONS = 200


def certified_spectral_norm(A: np.ndarray) -> float:
    """Sound upper bound on the operator 2-norm of ``A``.

    Diagonal (incl. 1x1) matrices get the exact max |a_ii|.  Otherwise a
    deterministic power iteration on A^T A is run and the result is
    raised to the LAPACK singular value if that is larger, plus slack.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    if A.shape[0] == A.shape[1] and np.count_nonzero(A - np.diag(np.diagonal(A))) == 0:
        return float(np.max(np.abs(np.diagonal(A))))
    M = A.T @ A
    v = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
    lam = 0.0
    for _ in range(POWER_ITERATIONS):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        lam = float(v @ w)
        v = w / nw
    # power iteration approaches from below; never report less than the SVD value
    est = max(np.sqrt(max(lam, 0.0)), float(np.linalg.norm(A, 2)))
    return est + NORM_SLACK


@dataclass(frozen=True, eq=False)
class AffineMap:
    A: np.ndarray
    b: np.ndarray
    certified_ratio: float = field(default=-1.0)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.shape[0]:
            raise ValueError(f"incompatible affine map shapes A{A.shape}, b{b.shape}")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if self.certified_ratio < 0:
            object.__setattr__(self, "certified_ratio", certified_spectral_norm(A))

    @property
    def d_in(self) -> int:
        return self.A.shape[1]

    @property
    def d_out(self) -> int:
        return self.A.shape[0]

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            return self.A @ X + self.b
        return X @ self.A.T + self.b

    def after(self, inner: "AffineMap") -> "AffineMap":
        """``self o inner``; the ratio bound is the product of both bounds."""
        return AffineMap(
            self.A @ inner.A,
            self.A @ inner.b + self.b,
            self.certified_ratio * inner.certified_ratio,
        )

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(np.eye(d), np.zeros(d), 1.0)

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist()}

    def __repr__(self) -> str:
        return f"AffineMap(A={self.A.tolist()}, b={self.b.tolist()}, ratio={self.certified_ratio:g})"
