"""Joint HRF/activation estimation by rank-one constrained regression.

Minimizes ``0.5 * ||y - X vec(alpha beta^T) - P w||^2`` over the basis
coefficients alpha, the per-condition activations beta and the confound
coefficients w, with analytic gradients and an L-BFGS driver. The scale
and sign ambiguity of the factorization is resolved by peak-normalizing
the fitted response.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import fmin_l_bfgs_b

from . import _kernels
from .design import DesignMatrix
from .exceptions import DegenerateFitError, NumericalFailureError
from .hrf import HrfBasis, glover_hrf


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the L-BFGS driver; defaults match the CLI defaults."""

    max_iter: int = 500
    tol: float = 1e-8
    history: int = 10
    hrf_penalty: float = 0.0


@dataclass(frozen=True)
class RankOneProblem:
    """One voxel's data and design, already whitened if requested.

    Attributes
    ----------
    design : DesignMatrix
        Basis-projected (or FIR) design, n x (p*t), condition-major.
    confounds : array, shape (n, q)
        Nuisance regressors; q may be 0.
    y : array, shape (n,)
        Observed time series.
    basis : HrfBasis
        Maps alpha to the sampled response h = Q @ alpha.
    tr : float
        Repetition time in seconds (used for the canonical-HRF
        initialization).
    """

    design: DesignMatrix
    confounds: np.ndarray
    y: np.ndarray
    basis: HrfBasis
    tr: float

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float).ravel()
        P = np.ascontiguousarray(self.confounds, dtype=float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "confounds", P)
        n = self.design.n
        if y.shape[0] != n or P.shape[0] != n:
            raise ValueError("y, confounds and design disagree on n")
        if self.design.t != self.basis.num_functions:
            raise ValueError("design t does not match the basis")

    @property
    def n(self):
        return self.design.n

    @property
    def p(self):
        return self.design.p

    @property
    def t(self):
        return self.design.t

    @property
    def q(self):
        return self.confounds.shape[1]


@dataclass(frozen=True)
class RankOneFit:
    """Normalized solver output for one voxel."""

    alpha: np.ndarray
    h: np.ndarray
    beta: np.ndarray
    w: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    converged: bool
    degenerate: bool = False
    trace: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def _check_dims(problem, alpha, beta, w):
    alpha = np.ascontiguousarray(alpha, dtype=float).ravel()
    beta = np.ascontiguousarray(beta, dtype=float).ravel()
    w = np.ascontiguousarray(w, dtype=float).ravel()
    if alpha.shape[0] != problem.t:
        raise ValueError(f"alpha must have length {problem.t}")
    if beta.shape[0] != problem.p:
        raise ValueError(f"beta must have length {problem.p}")
    if w.shape[0] != problem.q:
        raise ValueError(f"w must have length {problem.q}")
    return alpha, beta, w


def objective(problem, alpha, beta, w, penalty=0.0):
    """Value of the rank-one least-squares objective at (alpha, beta, w)."""
    alpha, beta, w = _check_dims(problem, alpha, beta, w)
    obj, _, _, _ = _kernels.rank1_obj_grad(
        problem.design.values, problem.confounds, problem.y, alpha, beta, w
    )
    if penalty:
        h = problem.basis.samples @ alpha
        obj += 0.5 * penalty * float(h @ h)
    return obj


def gradient(problem, alpha, beta, w, penalty=0.0):
    """Analytic gradients (d_alpha, d_beta, d_w) of the objective.

    X^T d is reshaped into a (p, t) matrix G so that
    ``grad_alpha = G^T beta`` and ``grad_beta = G alpha``; no Kronecker
    product matrix is ever formed.
    """
    alpha, beta, w = _check_dims(problem, alpha, beta, w)
    _, ga, gb, gw = _kernels.rank1_obj_grad(
        problem.design.values, problem.confounds, problem.y, alpha, beta, w
    )
    if penalty:
        Q = problem.basis.samples
        ga = ga + penalty * (Q.T @ (Q @ alpha))
    return ga, gb, gw


def normalize_fit(h, beta):
    """Resolve the (c*h, beta/c) ambiguity of the rank-one factorization.

    Divides h by its signed extreme value so the normalized response has
    peak +1, and scales beta by the same factor; the product h beta^T is
    unchanged.
    """
    h = np.asarray(h, dtype=float)
    beta = np.asarray(beta, dtype=float)
    i = int(np.argmax(np.abs(h)))
    s = h[i]
    if s == 0:
        raise DegenerateFitError("cannot normalize an all-zero response")
    return h / s, beta * s


def _initial_point(problem):
    """Start near the canonical-GLM solution.

    alpha0 projects the sampled canonical response onto the basis, beta0
    and w0 come from an ordinary least-squares fit with that fixed
    response.
    """
    Q = problem.basis.samples
    r = Q.shape[0]
    canonical = glover_hrf(np.arange(r) * problem.tr)
    alpha0 = np.linalg.lstsq(Q, canonical, rcond=None)[0]
    X3 = problem.design.values.reshape(problem.n, problem.p, problem.t)
    X_hc = X3 @ alpha0
    D = np.hstack([X_hc, problem.confounds])
    coef = np.linalg.lstsq(D, problem.y, rcond=None)[0]
    beta0 = coef[: problem.p]
    w0 = coef[problem.p :]
    return alpha0, beta0, w0


def fit_voxel(problem, options=None, initial=None):
    """Fit the rank-one model for a single voxel.

    Runs L-BFGS jointly over the stacked vector [alpha; beta; w] from
    the canonical-GLM initialization (or ``initial``, a tuple
    ``(alpha0, beta0, w0)``), then normalizes the fitted response to
    peak +1. Deterministic given inputs and options.
    """
    if options is None:
        options = SolverOptions()
    t, p, q = problem.t, problem.p, problem.q
    X, P, y = problem.design.values, problem.confounds, problem.y
    penalty = options.hrf_penalty
    Q = problem.basis.samples

    if initial is None:
        alpha0, beta0, w0 = _initial_point(problem)
    else:
        alpha0, beta0, w0 = _check_dims(problem, *initial)

    if np.ptp(y) == 0:
        # Constant voxel: nothing for the bilinear term to explain.
        h, _ = normalize_fit(Q @ alpha0, np.zeros(p))
        w = np.linalg.lstsq(P, y, rcond=None)[0] if q else np.zeros(0)
        obj = objective(problem, alpha0, np.zeros(p), w, penalty)
        return RankOneFit(
            alpha=alpha0, h=h, beta=np.zeros(p), w=w, objective=obj,
            grad_norm=0.0, iterations=0, converged=True, degenerate=True,
        )

    def fun(x):
        alpha = x[:t]
        beta = x[t : t + p]
        w = x[t + p :]
        obj, ga, gb, gw = _kernels.rank1_obj_grad(X, P, y, alpha, beta, w)
        if penalty:
            h = Q @ alpha
            obj += 0.5 * penalty * float(h @ h)
            ga = ga + penalty * (Q.T @ h)
        g = np.concatenate([ga, gb, gw])
        if not (np.isfinite(obj) and np.all(np.isfinite(g))):
            raise NumericalFailureError(
                "non-finite objective or gradient during line search: "
                f"objective={obj!r}, |x|_inf={np.max(np.abs(x))!r}"
            )
        return obj, g

    trace = [fun(np.concatenate([alpha0, beta0, w0]))[0]]

    def record(xk):
        trace.append(fun(xk)[0])

    xopt = np.concatenate([alpha0, beta0, w0])
    iterations = 0
    # Restart when the driver stalls on its own f-decrease test before the
    # relative gradient criterion is met; a fresh L-BFGS memory usually
    # squeezes out the remaining factor.
    for _ in range(4):
        xopt, fopt, info = fmin_l_bfgs_b(
            fun, xopt, m=options.history, factr=10.0, pgtol=options.tol,
            maxiter=options.max_iter - iterations,
            maxfun=100 * options.max_iter, callback=record,
        )
        iterations += int(info["nit"])
        grad_norm = float(np.max(np.abs(info["grad"]))) if info["grad"].size else 0.0
        converged = grad_norm <= options.tol * max(1.0, abs(fopt))
        if converged or iterations >= options.max_iter or info["nit"] == 0:
            break

    alpha = xopt[:t]
    beta = xopt[t : t + p]
    w = xopt[t + p :]
    h_raw = Q @ alpha
    h, beta = normalize_fit(h_raw, beta)
    alpha = alpha / h_raw[int(np.argmax(np.abs(h_raw)))]
    return RankOneFit(
        alpha=alpha, h=h, beta=beta, w=w, objective=float(fopt),
        grad_norm=grad_norm, iterations=iterations,
        converged=converged, degenerate=False, trace=np.asarray(trace),
    )
