"""Orthonormal shifted Legendre polynomials on [0, 1].

phi_k(x) = sqrt(2k + 1) * P_k(2x - 1) where P_k is the classical Legendre
polynomial, so that int_0^1 phi_k phi_l dx = delta_kl and |phi_k| <= sqrt(2k + 1).
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from models.errors import DomainError

MAX_DEGREE = 50
# below this value of x(1 - x) the second derivative comes from the recurrence
_ENDPOINT_WEIGHT = 1e-6

ArrayLike = Union[float, np.ndarray]


def _check_unit_interval(x: np.ndarray) -> None:
    if x.size and (not np.all(np.isfinite(x)) or x.min() < 0.0 or x.max() > 1.0):
        raise DomainError("Legendre basis is defined on [0, 1] only")


def _check_degree(k_max: int) -> None:
    if not 0 <= k_max <= MAX_DEGREE:
        raise ValueError(f"Invalid maximum degree: {k_max} (allowed 0..{MAX_DEGREE})")


def legendre_table(x: ArrayLike, k_max: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values, first and second derivatives of phi_0..phi_kmax.

    Args:
        x (ArrayLike): point(s) in [0, 1].
        k_max (int): highest degree.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: three arrays of shape
        ``(k_max + 1, *x.shape)``.
    """
    x = np.asarray(x, dtype=float)
    _check_unit_interval(x)
    _check_degree(k_max)

    t = 2.0 * x - 1.0
    p = np.zeros((k_max + 1,) + x.shape)
    dp = np.zeros_like(p)
    ddp = np.zeros_like(p)
    p[0] = 1.0
    if k_max >= 1:
        p[1] = t
        dp[1] = 1.0
    for k in range(1, k_max):
        p[k + 1] = ((2 * k + 1) * t * p[k] - k * p[k - 1]) / (k + 1)
        dp[k + 1] = dp[k - 1] + (2 * k + 1) * p[k]
        ddp[k + 1] = ddp[k - 1] + (2 * k + 1) * dp[k]

    scale = np.sqrt(2.0 * np.arange(k_max + 1) + 1.0).reshape((-1,) + (1,) * x.ndim)
    values = scale * p
    d1 = 2.0 * scale * dp

    # Legendre's equation: x(1-x) phi'' = (2x-1) phi' - k(k+1) phi
    weight = x * (1.0 - x)
    interior = weight > _ENDPOINT_WEIGHT
    kk = (np.arange(k_max + 1) * (np.arange(k_max + 1) + 1.0)).reshape(scale.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        from_ode = (t * d1 - kk * values) / weight
    d2 = np.where(interior, from_ode, 4.0 * scale * ddp)
    return values, d1, d2


@dataclass(frozen=True)
class LegendreEval:
    x: float
    max_degree: int
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def eval_legendre(x: float, k_max: int) -> LegendreEval:
    """phi_k(x), phi_k'(x), phi_k''(x) for k = 0..k_max at a single point."""
    values, d1, d2 = legendre_table(float(x), k_max)
    return LegendreEval(float(x), k_max, values, d1, d2)


@dataclass(frozen=True)
class TensorEval:
    """phi_k(xi) phi_l(xj) for 1 <= k, l <= m2 and its partials.

    Every array is m2 x m2, indexed ``[k - 1, l - 1]``.
    """

    values: np.ndarray
    di: np.ndarray
    dii: np.ndarray
    dj: np.ndarray
    djj: np.ndarray


def eval_tensor(xi: float, xj: float, m2: int) -> TensorEval:
    if m2 < 1:
        raise ValueError(f"Invalid truncation: {m2}")
    ui, di, dii = (a[1:] for a in legendre_table(float(xi), m2))
    uj, dj, djj = (a[1:] for a in legendre_table(float(xj), m2))
    return TensorEval(
        values=np.outer(ui, uj),
        di=np.outer(di, uj),
        dii=np.outer(dii, uj),
        dj=np.outer(ui, dj),
        djj=np.outer(ui, djj),
    )
