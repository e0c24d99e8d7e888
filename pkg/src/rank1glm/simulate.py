"""Ground-truth BOLD simulator.

Generates event schedules, voxel time series from a chosen true HRF,
polynomial drift confounds and AR(1) noise. Every draw is deterministic
per (seed, session, voxel) through ``numpy.random.default_rng`` seeded
with the full key, so results are reproducible regardless of execution
order.
"""

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .design import EventTable, build_stimulus_matrix, convolve_design
from .exceptions import SpecInfeasibleError
from .hrf import glover_hrf

RNG_ALGORITHM = "PCG64(SeedSequence([seed, session, voxel]))"


@dataclass(frozen=True)
class SimSpec:
    """Parameters of one synthetic multi-session dataset."""

    n: int = 300
    tr: float = 1.0
    p: int = 10
    isi_range: Tuple[float, float] = (3.0, 6.0)
    true_hrf: Union[str, np.ndarray] = "canonical"
    beta_mean: float = 1.0
    beta_sd: float = 0.5
    drift_order: int = 1
    rho: float = 0.0
    sigma: float = 0.0
    seed: int = 0
    sessions: int = 1
    asynchronous: bool = False
    voxels: int = 1
    repeats: int = 1
    hrf_duration: float = 24.0

    def __post_init__(self):
        if self.isi_range[0] <= 0 or self.isi_range[1] < self.isi_range[0]:
            raise ValueError("isi_range must satisfy 0 < min <= max")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.sessions < 1:
            raise ValueError("sessions must be >= 1")
        if self.voxels < 1:
            raise ValueError("voxels must be >= 1")

    @property
    def hrf_scans(self):
        """HRF support in scans."""
        return int(math.ceil(self.hrf_duration / self.tr))


def _shifted_fn(delta):
    grid = np.arange(0.0, 32.0, 1e-3)
    peak = glover_hrf(grid + delta).max()

    def fn(t):
        return glover_hrf(np.asarray(t, dtype=float) + delta) / peak

    return fn


def shifted_canonical(delta, r, tr):
    """Canonical HRF advanced by ``delta`` seconds, re-peak-normalized,
    sampled at the TR grid of length r."""
    if abs(delta) >= 4:
        raise ValueError(f"|delta| must be < 4 s, got {delta}")
    return _shifted_fn(delta)(np.arange(r) * tr)


def resolve_true_hrf(spec):
    """Sampled true HRF and, when available, its continuous form.

    Named forms: ``'canonical'`` or ``'canonical_shift:<delta>'``.
    """
    r = spec.hrf_scans
    grid = np.arange(r) * spec.tr
    if isinstance(spec.true_hrf, str):
        if spec.true_hrf == "canonical":
            return glover_hrf(grid), glover_hrf
        if spec.true_hrf.startswith("canonical_shift:"):
            delta = float(spec.true_hrf.split(":", 1)[1])
            if abs(delta) >= 4:
                raise ValueError(f"|delta| must be < 4 s, got {delta}")
            fn = _shifted_fn(delta)
            return fn(grid), fn
        raise ValueError(f"unknown true_hrf '{spec.true_hrf}'")
    h = np.asarray(spec.true_hrf, dtype=float)
    if h.ndim != 1:
        raise ValueError("sampled true_hrf must be 1-D")
    return h, None


def drift_confounds(n, order):
    """Legendre polynomials up to ``order`` on [-1, 1], column 0 constant."""
    x = np.linspace(-1.0, 1.0, n)
    return np.polynomial.legendre.legvander(x, order)


def _ar1_noise(rng, n, rho, sigma):
    z = rng.standard_normal(n)
    e = np.empty(n)
    e[0] = sigma / math.sqrt(1.0 - rho * rho) * z[0] if sigma > 0 else 0.0
    for i in range(1, n):
        e[i] = rho * e[i - 1] + sigma * z[i]
    return e


def _schedule(spec, session_index):
    rng = np.random.default_rng([spec.seed, session_index])
    m = spec.p * spec.repeats
    conditions = np.concatenate(
        [rng.permutation(spec.p) for _ in range(spec.repeats)]
    )
    isis = rng.uniform(spec.isi_range[0], spec.isi_range[1], size=m)
    onsets = np.cumsum(isis)
    if not spec.asynchronous:
        onsets = np.round(onsets / spec.tr) * spec.tr
    limit = spec.n * spec.tr
    if onsets.size and onsets[-1] >= limit:
        feasible = int(np.sum(onsets < limit))
        raise SpecInfeasibleError(
            f"schedule overflows the session ({onsets[-1]:.1f} s >= "
            f"{limit:.1f} s); at most {feasible} events fit",
            max_feasible=feasible,
        )
    return EventTable(
        onsets=onsets, conditions=conditions, p=spec.p,
        session_id=f"s{session_index}",
    )


def gen_session(spec, session_index):
    """Generate one session: events, per-voxel BOLD and the truth record.

    Returns
    -------
    events : EventTable
    bold : array, shape (n, voxels)
    truth : dict
        True h (sampled), beta (p x voxels), w (q x voxels), rho, sigma
        and the RNG description.
    """
    events = _schedule(spec, session_index)
    h_sampled, h_fn = resolve_true_hrf(spec)
    if spec.asynchronous and h_fn is None:
        raise ValueError("asynchronous simulation needs a named (continuous) HRF")
    n, v = spec.n, spec.voxels
    P = drift_confounds(n, spec.drift_order)
    q = P.shape[1]

    if spec.asynchronous:
        scan_times = np.arange(n) * spec.tr
        per_cond = np.zeros((n, spec.p))
        for onset, cond in zip(events.onsets, events.conditions):
            per_cond[:, cond] += h_fn(scan_times - onset)
        X_h = per_cond
    else:
        V = build_stimulus_matrix(events, n, spec.tr, oversample=1)
        X_h = convolve_design(V, h_sampled)

    bold = np.empty((n, v))
    betas = np.empty((spec.p, v))
    ws = np.empty((q, v))
    for voxel in range(v):
        # beta is a property of the voxel, shared across sessions; its
        # stream key is disjoint from the session keys.
        rng_beta = np.random.default_rng([spec.seed, 0xBE7A, voxel])
        beta = spec.beta_mean + spec.beta_sd * rng_beta.standard_normal(spec.p)
        rng = np.random.default_rng([spec.seed, session_index, voxel])
        w = rng.standard_normal(q)
        noise = _ar1_noise(rng, n, spec.rho, spec.sigma)
        bold[:, voxel] = X_h @ beta + P @ w + noise
        betas[:, voxel] = beta
        ws[:, voxel] = w

    truth = {
        "h": h_sampled,
        "beta": betas,
        "w": ws,
        "rho": spec.rho,
        "sigma": spec.sigma,
        "confounds": P,
        "rng": RNG_ALGORITHM,
    }
    return events, bold, truth
