"""Linearized two-block and multi-block ADMM for TS-MTL.

Both solvers work on the lifted problem with primal blocks
``Theta, Gamma, Q, Pi`` and constraints ``Theta = Q``, ``Gamma = Pi`` and a
smoothness constraint ``B (I - W) = Gamma``. The two-block variant uses
``B = Q`` and updates ``(Theta, Gamma)`` jointly, then ``(Q, Pi)``. The
multi-block variant uses ``B = Theta`` and updates ``Theta``, then
``Gamma``, then ``(Q, Pi)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InvalidParameterError, StaleCacheError
from .kernel import (
    WeightMatrix,
    build_weights,
    coupling_gradient,
    temporal_adjoint,
    temporal_residual,
)
from .problem import (
    VARIANTS,
    Hyperparams,
    ProblemData,
    SolverState,
    evaluate_objective,
    nmse,
    primal_residuals,
)
from .prox import l1_prox, sgl_prox

__all__ = [
    "FactorizationCache",
    "TraceRecord",
    "RunResult",
    "build_cache",
    "solve_theta_two_block",
    "solve_theta_multi_block",
    "update_gamma",
    "update_q_two_block",
    "update_q_multi_block",
    "update_pi",
    "dual_step",
    "iterate",
    "run",
]


@dataclass(frozen=True)
class FactorizationCache:
    """Cholesky factors of ``X_t^T X_t + shift * I`` for every task."""

    shift: float
    factors: tuple
    Xty: tuple

    def check(self, shift: float) -> None:
        if self.shift != shift:
            raise StaleCacheError(
                f"cache built for shift {self.shift}, update needs {shift}")


def build_cache(data: ProblemData, shift: float) -> FactorizationCache:
    if not shift > 0:
        raise InvalidParameterError(f"shift must be > 0, got {shift}")
    factors = []
    Xty = []
    for X, y in data.tasks:
        G = X.T @ X
        G[np.diag_indices_from(G)] += shift
        factors.append(cho_factor(G, lower=True))
        Xty.append(X.T @ y)
    return FactorizationCache(float(shift), tuple(factors), tuple(Xty))


def cache_shift(variant: str, rho: float, rho1: float) -> float:
    return rho if variant == "two_block" else rho + rho1


@dataclass
class TraceRecord:
    iter: int
    objective: float
    r_eq: float
    r_smooth: float
    r_pi: float
    r_total: float
    val_nmse: float | None = None
    elapsed_seconds: float | None = None


@dataclass
class RunResult:
    trace: list[TraceRecord]
    state: SolverState
    diverged: bool = False
    rho1: float = 0.0
    variant: str = "multi_block"
    converged: bool = False
    extra: dict = field(default_factory=dict)


def solve_theta_two_block(t: int, state: SolverState, data: ProblemData,
                          hyper: Hyperparams, cache: FactorizationCache) -> np.ndarray:
    """Solve ``(X^T X + rho I) theta = X^T y - s_t + rho q_t``."""
    cache.check(hyper.rho)
    rhs = cache.Xty[t] - state.S[:, t] + hyper.rho * state.Q[:, t]
    return cho_solve(cache.factors[t], rhs)


def solve_theta_multi_block(t: int, state: SolverState, data: ProblemData,
                            hyper: Hyperparams, cache: FactorizationCache,
                            h_t, u_tilde_t, rho1: float) -> np.ndarray:
    """Linearized theta step of the multi-block solver.

    Solves ``(X^T X + (rho + rho1) I) theta = X^T y - s_t + rho q_t - u~_t
    - h_t + rho1 theta_t^k`` where ``h_t`` is the coupling gradient at the
    current iterate and ``u~_t`` the dual contribution of the smoothness
    constraint.
    """
    cache.check(hyper.rho + rho1)
    rhs = (cache.Xty[t] - state.S[:, t] + hyper.rho * state.Q[:, t]
           - np.asarray(u_tilde_t) - np.asarray(h_t) + rho1 * state.Theta[:, t])
    return cho_solve(cache.factors[t], rhs)


def update_gamma(d_t, pi_t, u_t, v_t, rho: float) -> np.ndarray:
    """Exact minimizer over ``gamma`` of
    ``-u^T g + rho/2 ||d - g||^2 + v^T g + rho/2 ||g - pi||^2``.

    Works columnwise, so whole ``p x T`` matrices may be passed.
    """
    if not rho > 0:
        raise InvalidParameterError(f"rho must be > 0, got {rho}")
    d_t, pi_t, u_t, v_t = (np.asarray(a, dtype=float) for a in (d_t, pi_t, u_t, v_t))
    return 0.5 * (d_t + pi_t) + (u_t - v_t) / (2.0 * rho)


def update_q_two_block(state: SolverState, hyper: Hyperparams, W: WeightMatrix,
                       rho1: float) -> np.ndarray:
    """Linearized Q step of the two-block solver.

    ``state`` must already carry ``Theta^{k+1}`` and ``Gamma^{k+1}``; ``Q``,
    ``S`` and ``U`` are still at iteration ``k``.
    """
    rho = hyper.rho
    H = coupling_gradient(state.Q, state.Gamma, W, rho)
    A = temporal_adjoint(state.U, W)
    c = rho + rho1
    arg = (rho * state.Theta + rho1 * state.Q + state.S - H - A) / c
    return sgl_prox(arg, hyper.lambda1 / c, hyper.lambda2 / c)


def update_q_multi_block(Theta_new, S, hyper: Hyperparams) -> np.ndarray:
    rho = hyper.rho
    return sgl_prox(np.asarray(Theta_new) + np.asarray(S) / rho,
                    hyper.lambda1 / rho, hyper.lambda2 / rho)


def update_pi(Gamma_new, V, hyper: Hyperparams) -> np.ndarray:
    rho = hyper.rho
    return l1_prox(np.asarray(Gamma_new) + np.asarray(V) / rho, hyper.lambda3 / rho)


def dual_step(state: SolverState, W: WeightMatrix, hyper: Hyperparams, variant: str):
    """Dual ascent on the three constraint blocks. Returns new ``(S, U, V)``."""
    if variant not in VARIANTS:
        raise InvalidParameterError(f"unknown variant {variant!r}")
    rho = hyper.rho
    B = state.Q if variant == "two_block" else state.Theta
    S = state.S + rho * (state.Theta - state.Q)
    U = state.U + rho * temporal_residual(B, state.Gamma, W)
    V = state.V + rho * (state.Gamma - state.Pi)
    return S, U, V


def iterate(state: SolverState, data: ProblemData, hyper: Hyperparams,
            W: WeightMatrix, cache: FactorizationCache, variant: str,
            rho1: float | None = None) -> SolverState:
    """One full ADMM sweep; returns a new state and leaves ``state`` untouched."""
    if variant not in VARIANTS:
        raise InvalidParameterError(f"unknown variant {variant!r}")
    if rho1 is None:
        rho1 = hyper.resolve_rho1(W)
    rho = hyper.rho
    T = data.T
    new = state.copy()

    if variant == "two_block":
        # Z1 = (Theta, Gamma), both from iterate k only.
        for t in range(T):
            new.Theta[:, t] = solve_theta_two_block(t, state, data, hyper, cache)
        D = temporal_residual(state.Q, np.zeros_like(state.Q), W)
        new.Gamma = update_gamma(D, state.Pi, state.U, state.V, rho)
        # Z2 = (Q, Pi)
        new.Q = update_q_two_block(new, hyper, W, rho1)
        new.Pi = update_pi(new.Gamma, state.V, hyper)
    else:
        H = coupling_gradient(state.Theta, state.Gamma, W, rho)
        U_tilde = state.U if hyper.dual_coupling == "paper" else temporal_adjoint(state.U, W)
        for t in range(T):
            new.Theta[:, t] = solve_theta_multi_block(
                t, state, data, hyper, cache, H[:, t], U_tilde[:, t], rho1)
        D = temporal_residual(new.Theta, np.zeros_like(new.Theta), W)
        new.Gamma = update_gamma(D, state.Pi, state.U, state.V, rho)
        new.Q = update_q_multi_block(new.Theta, state.S, hyper)
        new.Pi = update_pi(new.Gamma, state.V, hyper)

    new.S, new.U, new.V = dual_step(new, W, hyper, variant)
    new.iter = state.iter + 1
    return new


def run(data: ProblemData, hyper: Hyperparams, W: WeightMatrix | None = None,
        variant: str = "multi_block", validation: ProblemData | None = None,
        seed: int | None = None, *, nmse_denominator: str = "std",
        timing: bool = True, state: SolverState | None = None) -> RunResult:
    """Run ``hyper.max_iters`` ADMM iterations from the all-zero state.

    A :class:`TraceRecord` is stored every ``hyper.eval_every`` iterations
    (and always for the final one). If any iterate becomes non-finite the run
    stops and ``diverged`` is set; the trace keeps only finite records.

    ``seed`` is accepted for interface symmetry; the solver itself is
    deterministic.
    """
    if variant not in VARIANTS:
        raise InvalidParameterError(f"unknown variant {variant!r}")
    if W is None:
        W = build_weights(data.T, hyper.sigma)
    if W.T != data.T:
        raise InvalidParameterError(f"W has T={W.T}, data has T={data.T}")
    if validation is not None and (validation.T != data.T or validation.p != data.p):
        raise InvalidParameterError("validation data shape does not match training data")
    rho1 = hyper.resolve_rho1(W)
    cache = build_cache(data, cache_shift(variant, hyper.rho, rho1))
    if state is None:
        state = SolverState.zeros(data.p, data.T)

    trace: list[TraceRecord] = []
    diverged = converged = False
    start = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(1, hyper.max_iters + 1):
            nxt = iterate(state, data, hyper, W, cache, variant, rho1)
            if not nxt.is_finite():
                diverged = True
                break
            state = nxt
            last = k == hyper.max_iters
            if not (k % hyper.eval_every == 0 or last or hyper.tol is not None):
                continue
            res = primal_residuals(state, W, variant)
            if hyper.tol is not None and res[3] <= hyper.tol:
                converged = last = True
            if not (k % hyper.eval_every == 0 or last):
                continue
            obj = evaluate_objective(state.Theta, data, hyper, W)
            val = None
            if validation is not None:
                val = nmse(validation.targets, validation.predict(state.Theta),
                           nmse_denominator)
            if not (np.isfinite(obj) and np.all(np.isfinite(res))
                    and (val is None or np.isfinite(val))):
                diverged = True
                break
            elapsed = time.perf_counter() - start if timing else None
            trace.append(TraceRecord(k, obj, *res, val, elapsed))
            if converged:
                break
    return RunResult(trace, state, diverged, rho1, variant, converged)
