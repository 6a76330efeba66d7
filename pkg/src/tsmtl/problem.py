"""Problem definition: data container, hyperparameters, objective and metrics."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, Sequence

import numpy as np

from .errors import (
    DegenerateTargetError,
    InvalidDimensionError,
    InvalidParameterError,
)
from .kernel import WeightMatrix, lipschitz_rho1, temporal_residual

__all__ = [
    "ProblemData",
    "Hyperparams",
    "SolverState",
    "evaluate_objective",
    "primal_residuals",
    "rmse",
    "nmse",
    "check_constraint_equivalence",
]

Variant = Literal["two_block", "multi_block"]
VARIANTS: tuple[str, ...] = ("two_block", "multi_block")


@dataclass(frozen=True)
class ProblemData:
    """Per-task regression data ``(X_t, y_t)``, one task per time point.

    Task sizes may differ; every task must share the feature count ``p``.
    """

    tasks: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __init__(self, tasks: Sequence[tuple[np.ndarray, np.ndarray]]):
        checked = []
        p = None
        for t, (X, y) in enumerate(tasks):
            X = np.array(X, dtype=float)
            y = np.array(y, dtype=float).reshape(-1)
            if X.ndim != 2:
                raise InvalidDimensionError(f"task {t}: X must be 2-D, got {X.shape}")
            if X.shape[0] != y.shape[0]:
                raise InvalidDimensionError(
                    f"task {t}: X has {X.shape[0]} rows but y has {y.shape[0]}")
            if X.shape[0] < 1:
                raise InvalidDimensionError(f"task {t} has no samples")
            if p is None:
                p = X.shape[1]
            elif X.shape[1] != p:
                raise InvalidDimensionError(
                    f"task {t} has {X.shape[1]} features, expected {p}")
            if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
                raise InvalidParameterError(f"task {t} contains NaN or Inf")
            X.setflags(write=False)
            y.setflags(write=False)
            checked.append((X, y))
        if not checked:
            raise InvalidDimensionError("need at least one task")
        object.__setattr__(self, "tasks", tuple(checked))

    @property
    def T(self) -> int:
        return len(self.tasks)

    @property
    def p(self) -> int:
        return self.tasks[0][0].shape[1]

    @property
    def counts(self) -> list[int]:
        return [X.shape[0] for X, _ in self.tasks]

    @property
    def targets(self) -> list[np.ndarray]:
        return [y for _, y in self.tasks]

    def predict(self, Theta) -> list[np.ndarray]:
        Theta = np.asarray(Theta, dtype=float)
        return [X @ Theta[:, t] for t, (X, _) in enumerate(self.tasks)]


@dataclass(frozen=True)
class Hyperparams:
    """Regularization weights and ADMM settings.

    ``rho1="auto"`` resolves to :func:`~tsmtl.kernel.lipschitz_rho1`, the
    smallest weight for which the linearized updates are guaranteed to work.
    ``dual_coupling="paper"`` uses ``u_t`` alone in the multi-block theta
    update; ``"exact"`` uses the full adjoint ``U (I - W)^T``.
    """

    lambda1: float = 0.1
    lambda2: float = 0.1
    lambda3: float = 0.1
    sigma: float = 1.0
    rho: float = 1.0
    rho1: float | str = "auto"
    dual_coupling: str = "paper"
    max_iters: int = 1000
    eval_every: int = 1
    tol: float | None = None

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise InvalidParameterError(f"{name} must be >= 0, got {v}")
        for name in ("sigma", "rho"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be > 0, got {v}")
        if self.rho1 != "auto":
            if isinstance(self.rho1, str) or not (np.isfinite(self.rho1) and self.rho1 > 0):
                raise InvalidParameterError(f"rho1 must be > 0 or 'auto', got {self.rho1!r}")
        if self.dual_coupling not in ("paper", "exact"):
            raise InvalidParameterError(
                f"dual_coupling must be 'paper' or 'exact', got {self.dual_coupling!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if int(self.eval_every) != self.eval_every or self.eval_every < 1:
            raise InvalidParameterError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.tol is not None and not self.tol > 0:
            raise InvalidParameterError(f"tol must be > 0, got {self.tol}")

    def resolve_rho1(self, W: WeightMatrix) -> float:
        if self.rho1 == "auto":
            return lipschitz_rho1(W, self.rho)
        return float(self.rho1)

    def with_(self, **changes) -> "Hyperparams":
        return replace(self, **changes)


@dataclass
class SolverState:
    """Primal blocks ``Theta, Gamma, Q, Pi`` and duals ``S, U, V`` (all p x T)."""

    Theta: np.ndarray
    Gamma: np.ndarray
    Q: np.ndarray
    Pi: np.ndarray
    S: np.ndarray
    U: np.ndarray
    V: np.ndarray
    iter: int = 0

    BLOCKS = ("Theta", "Gamma", "Q", "Pi", "S", "U", "V")

    def __post_init__(self):
        shape = np.shape(self.Theta)
        for name in self.BLOCKS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape or arr.ndim != 2:
                raise InvalidDimensionError(
                    f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    @classmethod
    def zeros(cls, p: int, T: int) -> "SolverState":
        return cls(*(np.zeros((p, T)) for _ in cls.BLOCKS))

    @property
    def shape(self) -> tuple[int, int]:
        return self.Theta.shape

    def copy(self) -> "SolverState":
        return SolverState(*(getattr(self, n).copy() for n in self.BLOCKS), iter=self.iter)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, n))) for n in self.BLOCKS)


def _loss(Theta: np.ndarray, data: ProblemData) -> float:
    total = 0.0
    for t, (X, y) in enumerate(data.tasks):
        r = y - X @ Theta[:, t]
        total += 0.5 * float(r @ r)
    return total


def evaluate_objective(Theta, data: ProblemData, hyper: Hyperparams, W: WeightMatrix) -> float:
    """TS-MTL objective at ``Theta``.

    ``sum_t 1/2 ||y_t - X_t theta_t||^2 + lambda1 ||Theta||_1
    + lambda2 ||Theta||_{2,1} + lambda3 ||Theta (I - W)||_1``.
    """
    Theta = np.asarray(Theta, dtype=float)
    if Theta.shape != (data.p, data.T) or W.T != data.T:
        raise InvalidDimensionError(
            f"Theta {Theta.shape} does not match data (p={data.p}, T={data.T}) "
            f"and W (T={W.T})")
    smooth = temporal_residual(Theta, np.zeros_like(Theta), W)
    return (_loss(Theta, data)
            + hyper.lambda1 * float(np.abs(Theta).sum())
            + hyper.lambda2 * float(np.linalg.norm(Theta, axis=1).sum())
            + hyper.lambda3 * float(np.abs(smooth).sum()))


def primal_residuals(state: SolverState, W: WeightMatrix, variant: str):
    """Squared constraint violations ``(r_eq, r_smooth, r_pi, total)``.

    The smoothness constraint couples ``Q`` for the two-block formulation and
    ``Theta`` for the multi-block one.
    """
    if variant not in VARIANTS:
        raise InvalidParameterError(f"unknown variant {variant!r}")
    B = state.Q if variant == "two_block" else state.Theta
    r_eq = float(np.sum((state.Theta - state.Q) ** 2))
    r_smooth = float(np.sum(temporal_residual(B, state.Gamma, W) ** 2))
    r_pi = float(np.sum((state.Gamma - state.Pi) ** 2))
    return r_eq, r_smooth, r_pi, r_eq + r_smooth + r_pi


def rmse(y, yhat) -> float:
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.shape != yhat.shape:
        raise InvalidDimensionError(f"length mismatch: {y.shape[0]} vs {yhat.shape[0]}")
    if y.size == 0:
        raise InvalidDimensionError("rmse of an empty vector")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def nmse(Y, Yhat, denominator: str = "std") -> float:
    """Normalized MSE aggregated over tasks.

    ``sum_t ||Y_t - Yhat_t||^2 / sigma(Y_t)`` divided by the total sample
    count, where ``sigma`` is the population standard deviation
    (``denominator="std"``) or variance (``denominator="var"``).
    """
    if denominator not in ("std", "var"):
        raise InvalidParameterError(f"denominator must be 'std' or 'var', got {denominator!r}")
    if len(Y) != len(Yhat):
        raise InvalidDimensionError(f"{len(Y)} targets but {len(Yhat)} predictions")
    num = 0.0
    n = 0
    for t, (y, yh) in enumerate(zip(Y, Yhat)):
        y = np.asarray(y, dtype=float).reshape(-1)
        yh = np.asarray(yh, dtype=float).reshape(-1)
        if y.shape != yh.shape:
            raise InvalidDimensionError(f"task {t}: length mismatch {y.shape} vs {yh.shape}")
        scale = np.std(y) if denominator == "std" else np.var(y)
        if not scale > 0:
            raise DegenerateTargetError(f"task {t}: targets have zero spread")
        num += float(np.sum((y - yh) ** 2)) / scale
        n += y.size
    if n == 0:
        raise InvalidDimensionError("nmse of empty data")
    return num / n


def check_constraint_equivalence(state: SolverState, W: WeightMatrix) -> float:
    """Gap between the two smoothness constraints, ``||(Theta - Q)(I - W)||_F``.

    Zero whenever ``Theta == Q``.
    """
    a = temporal_residual(state.Theta, state.Gamma, W)
    b = temporal_residual(state.Q, state.Gamma, W)
    return float(np.linalg.norm(a - b))
