"""Cached solve operators for (Gamma_i + rho I)^{-1}.

The ADMM theta-step solves one linear system per column with a matrix that does
not depend on lambda, so it is factored once and reused along a whole path.
When the basis grows, ``augment_factor`` extends a cached operator to the
enlarged matrix through the block-inverse (Schur complement) formula, which
only inverts the small new block.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from data_modules.statistics import ColumnStats
from models.errors import FactorizationError


@dataclass
class ColumnFactor:
    """Q diag(1 / (lam + rho)) Q^T, plus 1/rho on the complement of span(Q).

    Args:
        i (int): column index.
        q (np.ndarray): p x r orthonormal eigenvectors of Gamma_i (r = p for a
            full eigendecomposition, r <= n for the SVD route).
        lam (np.ndarray): matching eigenvalues.
        rho (float): ADMM penalty parameter.
    """

    i: int
    q: np.ndarray
    lam: np.ndarray
    rho: float

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        coef = self.q.T @ v
        scale = 1.0 / (self.lam + self.rho)
        scaled = coef * (scale if coef.ndim == 1 else scale[:, None])
        return self.q @ scaled + (v - self.q @ coef) / self.rho

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(self.dim))


def build_column_factor(stats: ColumnStats, rho: float, data_matrix: Optional[np.ndarray] = None) -> ColumnFactor:
    """Factors Gamma_i + rho I for column ``stats.i``.

    With ``data_matrix`` M (n x p, rows a_i(X^r)) and n < p the factorization
    comes from the thin SVD of M: Gamma_i = M^T M / n has eigenvectors V and
    eigenvalues s^2 / n, and is zero on the orthogonal complement of V.
    """
    if rho <= 0:
        raise ValueError(f"Invalid rho: {rho}")
    gamma = stats.gamma
    if not np.all(np.isfinite(gamma)):
        raise FactorizationError(f"Gamma_{stats.i} has non-finite entries")
    try:
        if data_matrix is not None and data_matrix.shape[0] < data_matrix.shape[1]:
            if data_matrix.shape[1] != stats.dim:
                raise FactorizationError(f"Data matrix has {data_matrix.shape[1]} columns, expected {stats.dim}")
            _, s, vt = scipy.linalg.svd(data_matrix, full_matrices=False)
            return ColumnFactor(stats.i, vt.T, s * s / data_matrix.shape[0], rho)
        lam, q = scipy.linalg.eigh(gamma)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise FactorizationError(f"Factorization of Gamma_{stats.i} failed: {exc}") from exc
    return ColumnFactor(stats.i, q, np.maximum(lam, 0.0), rho)


class AugmentedFactor:
    """Solve operator of [[Gamma, b], [b^T, c]] + rho I built from a cached one.

    Args:
        old: operator for Gamma + rho I (``ColumnFactor`` or another ``AugmentedFactor``).
        b (np.ndarray): p x q cross block.
        c (np.ndarray): q x q new diagonal block.
        rho (float): ADMM penalty parameter.
    """

    def __init__(self, old, b: np.ndarray, c: np.ndarray, rho: float):
        self.i = old.i
        self.old = old
        self.rho = rho
        self.b = np.atleast_2d(b)
        self.old_b = old.apply(self.b)
        schur = c + rho * np.eye(c.shape[0]) - self.b.T @ self.old_b
        schur = 0.5 * (schur + schur.T)
        try:
            self.schur = scipy.linalg.cho_factor(schur)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise FactorizationError(f"Schur complement of column {self.i} is not positive definite") from exc

    @property
    def dim(self) -> int:
        return self.old.dim + self.b.shape[1]

    def apply(self, v: np.ndarray) -> np.ndarray:
        p = self.old.dim
        head, tail = v[:p], v[p:]
        old_head = self.old.apply(head)
        new = scipy.linalg.cho_solve(self.schur, tail - self.b.T @ old_head)
        return np.concatenate([old_head - self.old_b @ new, new], axis=0)

    def dense(self) -> np.ndarray:
        return self.apply(np.eye(self.dim))


def augment_factor(old, b: np.ndarray, c: np.ndarray, rho: float) -> AugmentedFactor:
    if rho <= 0:
        raise ValueError(f"Invalid rho: {rho}")
    c = np.atleast_2d(c)
    if not np.allclose(c, c.T):
        raise ValueError("New diagonal block must be symmetric")
    if b.shape != (old.dim, c.shape[0]):
        raise ValueError(f"Cross block of shape {b.shape}, expected {(old.dim, c.shape[0])}")
    return AugmentedFactor(old, b, c, rho)


class PermutedFactor:
    """Operator expressed in coordinates ``perm`` of an inner operator.

    ``inner`` acts on ``v[perm]``; used when the enlarged column layout
    interleaves the new coordinates with the old ones.
    """

    def __init__(self, inner, perm: np.ndarray):
        self.i = inner.i
        self.inner = inner
        self.perm = np.asarray(perm)

    @property
    def dim(self) -> int:
        return self.inner.dim

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v, dtype=float)
        out[self.perm] = self.inner.apply(v[self.perm])
        return out

    def dense(self) -> np.ndarray:
        out = np.empty((self.dim, self.dim))
        out[np.ix_(self.perm, self.perm)] = self.inner.dense()
        return out


def stack_operators(factors) -> np.ndarray:
    """(d, p, p) dense solve operators, one per column, for the batched theta-step."""
    return np.stack([f.dense() for f in factors])
