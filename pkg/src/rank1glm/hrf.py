"""Hemodynamic response functions and HRF bases.

Provides the Glover double-gamma canonical response, its derivative
family, and the FIR (identity) basis, together with continuous
evaluation at arbitrary time offsets for asynchronous designs.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# Glover (1999) auditory parameterization of the double-gamma response.
_A1, _B1 = 6.0, 0.9
_A2, _B2 = 12.0, 0.9
_D1 = _A1 * _B1
_D2 = _A2 * _B2
_UNDERSHOOT_RATIO = 0.35

#: Finite-difference step (seconds) for derivative basis columns.
DERIVATIVE_STEP = 1e-3

#: Maximum number of derivative columns in the canonical basis.
MAX_DERIVATIVES = 5


def _glover_raw(t):
    """Unnormalized double-gamma response; zero for t <= 0."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    peak = (tp / _D1) ** _A1 * np.exp(-(tp - _D1) / _B1)
    undershoot = (tp / _D2) ** _A2 * np.exp(-(tp - _D2) / _B2)
    out[pos] = peak - _UNDERSHOOT_RATIO * undershoot
    return out


def _find_peak():
    grid = np.arange(0.0, 16.0, 1e-4)
    vals = _glover_raw(grid)
    i = int(np.argmax(vals))
    return grid[i], vals[i]


_PEAK_TIME, _PEAK_VALUE = _find_peak()


def glover_hrf(t):
    """Canonical HRF value(s) at time ``t`` in seconds.

    Difference of two gamma-shaped bumps, peak-normalized so the maximum
    is exactly 1. Zero for ``t <= 0``.

    Parameters
    ----------
    t : float or array
        Time(s) in seconds.

    Returns
    -------
    float or array
        Dimensionless amplitude, same shape as ``t``.
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("glover_hrf: time values must be finite")
    out = _glover_raw(arr) / _PEAK_VALUE
    if np.isscalar(t) or arr.ndim == 0:
        return float(out)
    return out


def canonical_peak_time():
    """Time in seconds at which the canonical HRF attains its peak."""
    return float(_PEAK_TIME)


@dataclass(frozen=True)
class HrfBasis:
    """A set of ``t`` basis functions spanning admissible HRF shapes.

    Attributes
    ----------
    kind : str
        One of ``'fir'``, ``'canonical'``, ``'custom'``.
    samples : array, shape (r, t)
        Basis functions sampled on the TR grid.
    evaluator : callable, optional
        Maps an array of times (seconds) to a ``(len(times), t)`` matrix.
        ``None`` for bases with no continuous form (FIR).
    """

    kind: str
    samples: np.ndarray
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False
    )

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 2:
            raise ValueError("basis samples must be a 2-D (r, t) matrix")
        r, t = samples.shape
        if t > r:
            raise ValueError(f"basis has more functions ({t}) than samples ({r})")
        sv = np.linalg.svd(samples, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise ValueError("basis columns are not linearly independent")

    @property
    def duration(self):
        """Support length r in scans."""
        return self.samples.shape[0]

    @property
    def num_functions(self):
        """Number of basis functions t."""
        return self.samples.shape[1]


def fir_basis(r):
    """Identity basis of size ``r``: one free coefficient per lag."""
    if r < 1:
        raise ValueError("fir_basis: r must be >= 1")
    return HrfBasis(kind="fir", samples=np.eye(int(r)))


def canonical_basis(r, tr, num_derivatives=0):
    """Canonical HRF plus its first ``num_derivatives`` time derivatives.

    Column 0 is the peak-normalized canonical response sampled at
    ``{0, tr, ..., (r-1) tr}``; column k is its k-th derivative computed
    by iterated central differences on a fine grid and scaled to unit
    Euclidean norm on the sample grid.

    Parameters
    ----------
    r : int
        Basis support in scans.
    tr : float
        Repetition time in seconds.
    num_derivatives : int
        Number of derivative columns, between 0 and 5.

    Returns
    -------
    HrfBasis
        Basis of ``1 + num_derivatives`` columns with a continuous
        evaluator for off-grid sampling.
    """
    if not 0 <= num_derivatives <= MAX_DERIVATIVES:
        raise ValueError(
            f"num_derivatives must be in [0, {MAX_DERIVATIVES}], got {num_derivatives}"
        )
    if r < 1:
        raise ValueError("canonical_basis: r must be >= 1")
    if tr <= 0:
        raise ValueError("canonical_basis: tr must be positive")

    h = DERIVATIVE_STEP
    grid = np.arange(-1.0, (r - 1) * tr + 1.0 + h, h)
    deriv_tables = []
    cur = glover_hrf(grid)
    for _ in range(num_derivatives):
        cur = np.gradient(cur, h)
        deriv_tables.append(cur)

    sample_times = np.arange(r) * tr

    def _eval_unscaled(times):
        times = np.asarray(times, dtype=float)
        cols = [glover_hrf(times)]
        for table in deriv_tables:
            col = np.interp(times, grid, table)
            col[times <= 0] = 0.0
            cols.append(col)
        return np.column_stack(cols)

    unscaled = _eval_unscaled(sample_times)
    scale = np.ones(1 + num_derivatives)
    for k in range(1, 1 + num_derivatives):
        norm = np.linalg.norm(unscaled[:, k])
        if norm > 0:
            scale[k] = 1.0 / norm

    def evaluator(times):
        return _eval_unscaled(times) * scale

    return HrfBasis(kind="canonical", samples=evaluator(sample_times),
                    evaluator=evaluator)


def sample_basis_at_offset(basis, offset, r, tr):
    """Sample a continuous basis at the TR grid shifted back by ``offset``.

    Column k is basis function k evaluated at
    ``{-offset, tr - offset, ..., (r-1) tr - offset}``; values at
    non-positive arguments are 0.

    Raises
    ------
    ValueError
        If the basis has no continuous evaluator (FIR) or ``offset`` is
        outside ``[0, tr)``.
    """
    if basis.evaluator is None:
        raise ValueError(
            f"basis of kind '{basis.kind}' has no continuous form; "
            "off-grid sampling is unsupported"
        )
    if not 0 <= offset < tr:
        raise ValueError(f"offset must lie in [0, tr), got {offset}")
    times = np.arange(r) * tr - offset
    return basis.evaluator(times)
