"""Temporally smooth multi-task regression solved by two-block and multi-block
linearized ADMM."""

from .kernel import (
    WeightMatrix,
    build_weights,
    coupling_gradient,
    lipschitz_rho1,
    temporal_adjoint,
    temporal_residual,
)
from .problem import (
    Hyperparams,
    ProblemData,
    SolverState,
    check_constraint_equivalence,
    evaluate_objective,
    nmse,
    primal_residuals,
    rmse,
)
from .prox import group_soft_threshold, l1_prox, sgl_prox, soft_threshold
from .solvers import RunResult, TraceRecord, iterate, run

__version__ = "0.1.0"
