"""AR(1) residual model: whitening, maximum-likelihood estimation and
Gaussian log-likelihoods for model comparison."""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInputError

#: Search bounds for the autocorrelation; keeps log(1 - rho^2) finite.
RHO_BOUND = 0.99

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Ar1Model:
    """First-order autoregressive noise model.

    Attributes
    ----------
    rho : float
        Lag-1 correlation, clipped to [-0.99, 0.99].
    sigma2 : float
        Innovation variance (> 0).
    n : int
        Number of scans the model was estimated on.
    """

    rho: float
    sigma2: float
    n: int

    def __post_init__(self):
        if abs(self.rho) > RHO_BOUND:
            raise ValueError(f"|rho| must be <= {RHO_BOUND}, got {self.rho}")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")


def whiten(x, rho):
    """Apply the AR(1) whitening operator Z^T to a vector or matrix.

    ``out[0] = sqrt(1 - rho^2) * x[0]`` and ``out[i] = x[i] - rho * x[i-1]``.
    For 2-D input the transform is applied to each column. The whitening
    matrix is never materialized.
    """
    if abs(rho) >= 1:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    out[0] = math.sqrt(1.0 - rho * rho) * x[0]
    out[1:] = x[1:] - rho * x[:-1]
    return out


def _profiled_loglik(residuals, rho):
    """AR(1) log-likelihood with the innovation variance profiled out."""
    n = residuals.shape[0]
    z = whiten(residuals, rho)
    sigma2 = float(z @ z) / n
    return (
        -0.5 * n * math.log(2.0 * math.pi * sigma2)
        + 0.5 * math.log(1.0 - rho * rho)
        - 0.5 * n,
        sigma2,
    )


def estimate_ar1(residuals):
    """Maximum-likelihood AR(1) fit to a residual vector.

    The exact Gaussian likelihood is maximized over rho in
    [-0.99, 0.99] by golden-section search (tolerance 1e-6) with the
    innovation variance profiled out in closed form.
    """
    residuals = np.asarray(residuals, dtype=float)
    n = residuals.shape[0]
    if n < 8:
        raise ValueError(f"need at least 8 residuals, got {n}")
    if np.ptp(residuals) == 0:
        raise DegenerateInputError("residuals have zero variance")

    a, b = -RHO_BOUND, RHO_BOUND
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _profiled_loglik(residuals, c)[0]
    fd = _profiled_loglik(residuals, d)[0]
    while b - a > 1e-6:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _profiled_loglik(residuals, c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _profiled_loglik(residuals, d)[0]
    rho = 0.5 * (a + b)
    _, sigma2 = _profiled_loglik(residuals, rho)
    return Ar1Model(rho=rho, sigma2=sigma2, n=n)


def gaussian_ar1_loglik(y, fitted, model):
    """Exact AR(1) Gaussian log density of ``y`` around ``fitted``, in nats."""
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    if y.shape != fitted.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {fitted.shape}")
    n = y.shape[0]
    z = whiten(y - fitted, model.rho)
    return (
        -0.5 * n * math.log(2.0 * math.pi * model.sigma2)
        + 0.5 * math.log(1.0 - model.rho**2)
        - float(z @ z) / (2.0 * model.sigma2)
    )
