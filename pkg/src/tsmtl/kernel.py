"""Gaussian temporal kernel weights and the linear operator ``Theta -> Theta (I - W)``.

Tasks are indexed by time ``t = 0, ..., T-1``. Each parameter column
``theta_t`` is approximated by a kernel-weighted combination of the other
columns; the weights live in a ``T x T`` matrix ``W`` whose column ``t``
holds the weights used to approximate ``theta_t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError

__all__ = [
    "WeightMatrix",
    "build_weights",
    "temporal_residual",
    "temporal_adjoint",
    "coupling_gradient",
    "lipschitz_rho1",
]

_UNDERFLOW = 1e-300
_EIGH_MAX_T = 200


@dataclass(frozen=True)
class WeightMatrix:
    """Column-stochastic kernel weights with zero diagonal.

    Attributes
    ----------
    w : ndarray, shape (T, T)
        ``w[l, t]`` is the weight of ``theta_l`` in the approximation of
        ``theta_t``. Read-only.
    sigma : float
        Kernel bandwidth.
    """

    w: np.ndarray
    sigma: float

    @property
    def T(self) -> int:
        return self.w.shape[0]

    @property
    def difference(self) -> np.ndarray:
        """The matrix ``I - W``."""
        return np.eye(self.T) - self.w


def build_weights(T: int, sigma: float = 1.0) -> WeightMatrix:
    """Normalized Gaussian kernel weights for a chain of ``T`` tasks.

    ``w[l, t] = exp(-(l-t)^2 / sigma^2) / sum_{l' != t} exp(-(l'-t)^2 / sigma^2)``
    for ``l != t`` and zero on the diagonal.
    """
    if int(T) != T or T < 2:
        raise InvalidDimensionError(f"need at least 2 tasks, got T={T}")
    if not np.isfinite(sigma) or sigma <= 0:
        raise InvalidParameterError(f"sigma must be > 0, got {sigma}")
    T = int(T)
    idx = np.arange(T)
    dist2 = (idx[:, None] - idx[None, :]) ** 2
    k = np.exp(-dist2 / float(sigma) ** 2)
    np.fill_diagonal(k, 0.0)
    k[k < _UNDERFLOW] = 0.0
    col = k.sum(axis=0)
    # With a tiny bandwidth every neighbour underflows; fall back to the
    # nearest neighbours, which is the sigma -> 0 limit of the kernel.
    for t in np.flatnonzero(col == 0.0):
        d = np.abs(idx - t).astype(float)
        d[t] = np.inf
        k[:, t] = (d == d.min()).astype(float)
    w = k / k.sum(axis=0)
    w.setflags(write=False)
    return WeightMatrix(w=w, sigma=float(sigma))


def _check(M: np.ndarray, W: WeightMatrix, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] != W.T:
        raise InvalidDimensionError(
            f"{name} must have shape (p, {W.T}), got {M.shape}")
    return M


def temporal_residual(Theta, Gamma, W: WeightMatrix) -> np.ndarray:
    """Return ``Theta (I - W) - Gamma``.

    Column ``t`` is ``theta_t - sum_{l != t} w[l, t] theta_l - gamma_t``.
    """
    Theta = _check(Theta, W, "Theta")
    Gamma = _check(Gamma, W, "Gamma")
    if Theta.shape != Gamma.shape:
        raise InvalidDimensionError(
            f"Theta {Theta.shape} and Gamma {Gamma.shape} differ")
    return Theta @ W.difference - Gamma


def temporal_adjoint(M, W: WeightMatrix) -> np.ndarray:
    """Adjoint of ``Theta -> Theta (I - W)``, i.e. ``M (I - W)^T``."""
    M = _check(M, W, "M")
    return M @ W.difference.T


def coupling_gradient(Theta, Gamma, W: WeightMatrix, rho: float) -> np.ndarray:
    """Gradient of ``h(Theta) = rho/2 ||Theta (I - W) - Gamma||_F^2``.

    Column ``t`` is the partial gradient with respect to ``theta_t``.
    """
    if rho <= 0:
        raise InvalidParameterError(f"rho must be > 0, got {rho}")
    return rho * temporal_adjoint(temporal_residual(Theta, Gamma, W), W)


def _sigma_max_sq(D: np.ndarray) -> float:
    G = D @ D.T
    if G.shape[0] <= _EIGH_MAX_T:
        return float(np.linalg.eigvalsh(G)[-1])
    rng = np.random.default_rng(0)
    v = rng.standard_normal(G.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(10000):
        z = G @ v
        lam_new = float(np.linalg.norm(z))
        if lam_new == 0.0:
            return 0.0
        v = z / lam_new
        if abs(lam_new - lam) <= 1e-14 * lam_new:
            return lam_new
        lam = lam_new
    return lam


def lipschitz_rho1(W: WeightMatrix, rho: float) -> float:
    """Sufficient linearization weight ``2 * nu`` for the coupling term.

    ``nu = rho * sigma_max(I - W)^2`` is the Lipschitz constant of
    :func:`coupling_gradient`.
    """
    if rho <= 0:
        raise InvalidParameterError(f"rho must be > 0, got {rho}")
    return 2.0 * rho * _sigma_max_sq(W.difference)
