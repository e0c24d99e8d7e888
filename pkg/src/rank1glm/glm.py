"""Classic fixed-HRF GLM: least-squares activation estimates and
held-out-session log-likelihood evaluation."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .design import build_stimulus_matrix, convolve_design
from .exceptions import DegenerateInputError, RankDeficiencyError
from .noise import Ar1Model, estimate_ar1, gaussian_ar1_loglik


@dataclass(frozen=True)
class GlmFit:
    """Least-squares fit of y on [X_h P]."""

    beta: np.ndarray
    w: np.ndarray
    residuals: np.ndarray
    sigma2: float
    rho: Optional[float] = None


def fit_glm(y, X_h, P=None):
    """Ordinary least squares for the fixed-HRF GLM.

    Solves ``y = X_h beta + P w`` by orthogonal decomposition; the
    residual variance uses the n - p - q degrees-of-freedom correction.

    Raises
    ------
    RankDeficiencyError
        If [X_h P] is rank deficient; the offending pivot columns are
        named and a minimum-norm solution is never silently returned.
    """
    y = np.asarray(y, dtype=float).ravel()
    X_h = np.asarray(X_h, dtype=float)
    if P is None:
        P = np.zeros((X_h.shape[0], 0))
    P = np.asarray(P, dtype=float)
    n, p = X_h.shape
    q = P.shape[1]
    if y.shape[0] != n or P.shape[0] != n:
        raise ValueError("y, X_h and P disagree on the number of scans")
    if n < p + q:
        raise ValueError(f"need n >= p + q ({p + q}), got n = {n}")

    D = np.hstack([X_h, P])
    _, R, piv = scipy.linalg.qr(D, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(D.shape) * np.finfo(float).eps if diag.size else 0.0
    bad = [int(piv[i]) for i in range(diag.size) if diag[i] <= tol]
    if bad or diag.size < p + q:
        raise RankDeficiencyError(
            f"design is rank deficient; offending columns: {sorted(bad)}",
            columns=sorted(bad),
        )
    coef = np.linalg.lstsq(D, y, rcond=None)[0]
    beta = coef[:p]
    w = coef[p:]
    residuals = y - X_h @ beta - P @ w
    dof = n - p - q
    sigma2 = float(residuals @ residuals) / dof if dof > 0 else 0.0
    return GlmFit(beta=beta, w=w, residuals=residuals, sigma2=sigma2)


def heldout_loglik(y_test, events_test, h, P_test, tr, whiten=False):
    """Gaussian log-likelihood of a fixed-HRF GLM on an unseen session.

    The design is rebuilt on the test session from ``events_test`` and
    the fixed sampled response ``h``; activations and confound weights
    are refit freshly on the test data, so the score measures HRF
    quality only. The noise model is AR(1) estimated on the test
    residuals when ``whiten`` is true, else i.i.d. Gaussian with the
    maximum-likelihood variance.
    """
    y_test = np.asarray(y_test, dtype=float).ravel()
    n = y_test.shape[0]
    V = build_stimulus_matrix(events_test, n, tr, oversample=1)
    X_h = convolve_design(V, h)
    fit = fit_glm(y_test, X_h, P_test)
    res = fit.residuals
    rms_y = np.sqrt(float(y_test @ y_test) / n)
    if np.sqrt(float(res @ res) / n) <= 1e-14 * max(1.0, rms_y):
        raise DegenerateInputError(
            "held-out residuals are numerically zero; the Gaussian "
            "likelihood is unbounded"
        )
    if whiten:
        model = estimate_ar1(res)
    else:
        model = Ar1Model(rho=0.0, sigma2=float(res @ res) / n, n=n)
    return gaussian_ar1_loglik(y_test, y_test - res, model)
