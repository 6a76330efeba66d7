"""Proximal operators for the lasso, group lasso and sparse group lasso."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError

__all__ = ["soft_threshold", "l1_prox", "group_soft_threshold", "sgl_prox"]


def _check_tau(*taus: float) -> None:
    for tau in taus:
        if not tau >= 0:
            raise InvalidParameterError(f"threshold must be >= 0, got {tau}")


def soft_threshold(x: float, tau: float) -> float:
    """Scalar soft-threshold ``sign(x) * max(|x| - tau, 0)``."""
    _check_tau(tau)
    return float(np.sign(x) * max(abs(x) - tau, 0.0))


def l1_prox(M, tau: float) -> np.ndarray:
    """Entrywise soft-threshold, the prox of ``tau * ||.||_1``."""
    _check_tau(tau)
    M = np.asarray(M, dtype=float)
    return np.sign(M) * np.maximum(np.abs(M) - tau, 0.0)


def group_soft_threshold(v, tau: float) -> np.ndarray:
    """Prox of ``tau * ||.||_2``: shrink ``v`` toward zero by ``tau`` in norm."""
    _check_tau(tau)
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0 or nrm <= tau:
        return np.zeros_like(v)
    return (1.0 - tau / nrm) * v


def sgl_prox(M, tau1: float, tau2: float) -> np.ndarray:
    """Prox of ``tau1 ||Z||_1 + tau2 ||Z||_{2,1}`` with one group per row.

    The sparse group lasso prox factors into an entrywise soft-threshold
    followed by a row-wise group shrinkage.

    Parameters
    ----------
    M : array_like, shape (p, T)
    tau1 : float
        Entrywise (lasso) threshold.
    tau2 : float
        Row-group threshold; row ``j`` collects feature ``j`` over all tasks.
    """
    _check_tau(tau1, tau2)
    Z = l1_prox(M, tau1)
    if Z.ndim != 2:
        raise InvalidParameterError(f"expected a matrix, got shape {Z.shape}")
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    scale = np.zeros_like(norms)
    keep = norms > tau2
    scale[keep] = 1.0 - tau2 / norms[keep]
    return Z * scale
