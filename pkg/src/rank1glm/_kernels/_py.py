"""Pure-numpy fallback for the rank-one objective/gradient kernel."""

import numpy as np


def rank1_obj_grad(X, P, y, alpha, beta, w):
    """Objective and gradients of the rank-one least-squares problem.

    Computes ``0.5 * ||X kron(beta, alpha) + P w - y||^2`` and its
    gradients with respect to alpha, beta and w. ``X^T d`` is reshaped
    into a (p, t) matrix so no Kronecker product matrix is ever formed.
    """
    t = alpha.shape[0]
    p = beta.shape[0]
    d = X @ np.kron(beta, alpha) - y
    if P.shape[1]:
        d += P @ w
    obj = 0.5 * float(d @ d)
    G = (X.T @ d).reshape(p, t)
    grad_alpha = G.T @ beta
    grad_beta = G @ alpha
    grad_w = P.T @ d
    return obj, grad_alpha, grad_beta, grad_w
