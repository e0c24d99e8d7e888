"""Stimulus and design matrix construction.

Builds the binary stimulus matrix from event tables and the
lag-expanded design matrices (FIR, basis-projected, asynchronous) whose
product with the vectorized rank-one coefficient matrix reproduces the
convolved GLM design. Column ordering is condition-major throughout:
column index = condition * t + function index.
"""

import io
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .exceptions import FormatError
from .hrf import HrfBasis, sample_basis_at_offset

#: Column index of (condition j, function k) in every design matrix built
#: here; consumers rely on this single convention.
COLUMN_ORDER = "condition_major"


@dataclass(frozen=True)
class EventTable:
    """Stimulus events for one session.

    Attributes
    ----------
    onsets : array of float
        Event onsets in seconds, sorted non-decreasing.
    conditions : array of int
        Condition ids in ``[0, p)``, aligned with ``onsets``.
    p : int
        Number of conditions.
    session_id : str
    """

    onsets: np.ndarray
    conditions: np.ndarray
    p: int
    session_id: str = ""

    def __post_init__(self):
        onsets = np.asarray(self.onsets, dtype=float)
        conditions = np.asarray(self.conditions, dtype=int)
        if onsets.shape != conditions.shape or onsets.ndim != 1:
            raise ValueError("onsets and conditions must be 1-D and aligned")
        if onsets.size and onsets.min() < 0:
            raise ValueError("event onsets must be non-negative")
        order = np.argsort(onsets, kind="stable")
        onsets = onsets[order]
        conditions = conditions[order]
        if conditions.size and (conditions.min() < 0 or conditions.max() >= self.p):
            raise ValueError(f"condition ids must lie in [0, {self.p})")
        object.__setattr__(self, "onsets", onsets)
        object.__setattr__(self, "conditions", conditions)

    def __len__(self):
        return self.onsets.size


@dataclass(frozen=True)
class DesignMatrix:
    """Dense n x (p*t) design with condition-major column ordering."""

    values: np.ndarray
    p: int
    t: int

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != self.p * self.t:
            raise ValueError("design values must be n x (p*t)")

    @property
    def n(self):
        return self.values.shape[0]


def build_stimulus_matrix(events, n, tr, oversample=1):
    """Binary stimulus matrix on a (possibly oversampled) scan grid.

    ``V[i, j] = 1`` iff some event of condition j rounds to fine-grid row
    i, with ``i = round(onset / (tr / oversample))`` and ties toward +inf.
    Multiple events on the same row still yield 1.

    Returns
    -------
    array of shape (n * oversample, p)
    """
    if int(oversample) != oversample or oversample < 1:
        raise ValueError("oversample must be an integer >= 1")
    oversample = int(oversample)
    rows = n * oversample
    fine = tr / oversample
    V = np.zeros((rows, events.p))
    for onset, cond in zip(events.onsets, events.conditions):
        if onset >= n * tr:
            raise ValueError(
                f"event onset {onset} s is outside the session ({n * tr} s)"
            )
        idx = int(np.floor(onset / fine + 0.5))
        idx = min(idx, rows - 1)  # round-up at the very last sample
        V[idx, cond] = 1.0
    return V


def lower_shift(x, k):
    """Shift a vector down k places, filling with zeros.

    Equivalent to multiplying by the lower shift matrix of order k,
    which is never materialized.
    """
    x = np.asarray(x)
    n = x.shape[0]
    if not 0 <= k < n:
        raise ValueError(f"shift order k={k} must satisfy 0 <= k < {n}")
    out = np.zeros_like(x)
    out[k:] = x[: n - k]
    return out


def build_fir_design(V, r):
    """FIR design: column (j*r + k) is V's column j shifted down k scans."""
    V = np.asarray(V, dtype=float)
    n, p = V.shape
    if r > n:
        raise ValueError(f"FIR span r={r} exceeds session length n={n}")
    X = np.zeros((n, p * r))
    for k in range(r):
        X[k:, k::r] = V[: n - k]
    return DesignMatrix(values=X, p=p, t=r)


def build_basis_design(V, basis: HrfBasis):
    """Basis-projected design: column (j*t + k) is V's column j convolved
    with basis function k."""
    V = np.asarray(V, dtype=float)
    n, p = V.shape
    r = basis.duration
    t = basis.num_functions
    if r > n:
        raise ValueError(f"basis span r={r} exceeds session length n={n}")
    Q = basis.samples
    X = np.zeros((n, p * t))
    for lag in range(r):
        X[lag:] += np.kron(V[: n - lag], Q[lag : lag + 1, :])
    return DesignMatrix(values=X, p=p, t=t)


def build_async_design(events, basis: HrfBasis, n, tr):
    """Design for events not aligned to the TR grid.

    Each event contributes the continuous basis sampled at the TR grid
    minus its within-TR offset, shifted down to its base scan.
    Contributions from multiple events of one condition sum.
    """
    if basis.evaluator is None:
        raise ValueError(
            f"basis of kind '{basis.kind}' has no continuous form; "
            "asynchronous designs are unsupported"
        )
    r = basis.duration
    t = basis.num_functions
    p = events.p
    X = np.zeros((n, p * t))
    for onset, cond in zip(events.onsets, events.conditions):
        if onset >= n * tr:
            raise ValueError(
                f"event onset {onset} s is outside the session ({n * tr} s)"
            )
        base = int(np.floor(onset / tr + 1e-12))
        offset = onset - base * tr
        if offset < 0:
            offset = 0.0
        block = sample_basis_at_offset(basis, offset, r, tr)
        stop = min(base + r, n)
        X[base:stop, cond * t : (cond + 1) * t] += block[: stop - base]
    return DesignMatrix(values=X, p=p, t=t)


def convolve_design(V, h):
    """Classic fixed-HRF design: column j is V's column j convolved with
    the sampled response h, truncated to n scans."""
    V = np.asarray(V, dtype=float)
    h = np.asarray(h, dtype=float)
    n, p = V.shape
    if h.size > n:
        raise ValueError(f"HRF length {h.size} exceeds session length n={n}")
    X = np.empty((n, p))
    for j in range(p):
        X[:, j] = np.convolve(V[:, j], h)[:n]
    return X


def read_events(path_or_file, session_id=""):
    """Read a tab-separated events file into an EventTable.

    Format: UTF-8, header ``onset<TAB>condition``, one event per line,
    ``#`` comment lines ignored.
    """
    if hasattr(path_or_file, "read"):
        lines = path_or_file.read().splitlines()
        name = getattr(path_or_file, "name", "<stream>")
    else:
        name = str(path_or_file)
        with io.open(path_or_file, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    rows: List[Tuple[float, int]] = []
    header_seen = False
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if not header_seen:
            fields = stripped.split("\t")
            if [f.strip() for f in fields] != ["onset", "condition"]:
                raise FormatError(
                    f"{name}:{lineno}: expected header 'onset<TAB>condition'"
                )
            header_seen = True
            continue
        fields = stripped.split("\t")
        if len(fields) != 2:
            raise FormatError(f"{name}:{lineno}: expected two tab-separated fields")
        try:
            onset = float(fields[0])
            cond = int(fields[1])
        except ValueError as exc:
            raise FormatError(f"{name}:{lineno}: {exc}") from None
        if cond < 0:
            raise FormatError(f"{name}:{lineno}: negative condition id")
        rows.append((onset, cond))
    if not header_seen:
        raise FormatError(f"{name}: missing header line")
    onsets = np.array([r[0] for r in rows])
    conds = np.array([r[1] for r in rows], dtype=int)
    p = int(conds.max()) + 1 if conds.size else 0
    return EventTable(onsets=onsets, conditions=conds, p=p, session_id=session_id)


def write_events(path, events):
    """Write an EventTable in the tab-separated on-disk format."""
    with io.open(path, "w", encoding="utf-8") as fh:
        fh.write("onset\tcondition\n")
        for onset, cond in zip(events.onsets, events.conditions):
            fh.write(f"{float(onset)!r}\t{int(cond)}\n")
