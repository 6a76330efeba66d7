"""Temporal kernel weights and the proximal operators.

Run with ``python demos/01_kernel_and_prox.py``.
"""
import numpy as np

from tsmtl import build_weights, coupling_gradient, lipschitz_rho1, sgl_prox, temporal_residual
from tsmtl.prox import l1_prox

np.set_printoptions(precision=4, suppress=True)

# %% Kernel weights
# Column t holds the weights used to approximate theta_t from the other tasks.
# Columns sum to one and the diagonal is zero.
W = build_weights(5, sigma=1.0)
print(W.w)
print("column sums:", W.w.sum(axis=0))

# A wider bandwidth spreads the weight over distant time points
print(build_weights(5, sigma=5.0).w[:, 0])

# %% Smoothness residual
# A parameter matrix that is constant over time has a zero residual,
# since every column is then exactly the weighted mean of the others.
Theta = np.tile([[1.0], [-2.0], [0.5]], (1, 5))
print("constant trajectory:", np.abs(temporal_residual(Theta, 0 * Theta, W)).max())

# a step in the middle shows up around the jump
Theta[:, 3:] += 1.0
print(temporal_residual(Theta, 0 * Theta, W))

# %% Gradient of the coupling term and its Lipschitz constant
rng = np.random.default_rng(0)
Gamma = rng.standard_normal(Theta.shape)
G = coupling_gradient(Theta, Gamma, W, rho=1.0)
print("gradient norm:", np.linalg.norm(G))
print("rho1 (auto) at rho=1:", lipschitz_rho1(W, 1.0))

# %% Proximal operators
v = np.array([[3.0, -0.5, 1.2]])
print("l1 prox, tau=1:", l1_prox(v, 1.0))

# Sparse group lasso: entrywise shrinkage, then the whole row shrinks together.
M = np.array([[3.0, 4.0],
              [0.2, -0.3],
              [1.5, 0.0]])
print(sgl_prox(M, 1.0, 1.0))
# The middle row is removed entirely; the first keeps its direction.
