"""Proximal operators of the l1 and group-l2 penalties."""
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


def soft_threshold(x: ArrayLike, lam: float) -> ArrayLike:
    """S(x, lam) = max(|x| - lam, 0) * sign(x), elementwise."""
    if lam < 0:
        raise ValueError(f"Invalid threshold: {lam}")
    if np.ndim(x) == 0:
        x = float(x)
        if x > lam:
            return x - lam
        if x < -lam:
            return x + lam
        return 0.0
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) > lam, x - lam * np.sign(x), 0.0)


def _shrink_factor(norms: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = 1.0 - thresholds / norms
    return np.where(norms > thresholds, factor, 0.0)


def group_shrink(x: np.ndarray, lam: float) -> np.ndarray:
    """S~(x, lam) = (1 - lam / ||x||_2)_+ x; an exact zero vector when ||x||_2 <= lam."""
    if lam < 0:
        raise ValueError(f"Invalid threshold: {lam}")
    x = np.asarray(x, dtype=float)
    factor = _shrink_factor(np.array(np.linalg.norm(x)), np.array(lam))
    if factor == 0.0:
        return np.zeros_like(x)
    return factor * x


def shrink_groups(vector: np.ndarray, group_index: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Applies ``group_shrink`` to every group of a flat vector at once.

    Args:
        vector (np.ndarray): flat parameters.
        group_index (np.ndarray): group id of every entry.
        thresholds (np.ndarray): one threshold per group.
    """
    norms = np.sqrt(np.bincount(group_index, weights=vector * vector, minlength=thresholds.shape[0]))
    factor = _shrink_factor(norms, thresholds)[group_index]
    return np.where(factor > 0.0, factor * vector, 0.0)
