"""Multi-session orchestration: dataset handling, per-voxel fitting and
the cross-session validation protocol."""

from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg

from .design import (
    DesignMatrix,
    EventTable,
    build_async_design,
    build_basis_design,
    build_stimulus_matrix,
)
from .exceptions import InsufficientDataError
from .glm import heldout_loglik
from .hrf import HrfBasis, canonical_peak_time, glover_hrf
from .io import read_bold, write_bold  # noqa: F401  (re-exported file API)
from .noise import estimate_ar1, whiten
from .rank_one import RankOneFit, RankOneProblem, SolverOptions, fit_voxel
from .stats import TestResult, paired_mean_test, wilcoxon_signed_rank


@dataclass(frozen=True)
class Session:
    """One scanner session: events, BOLD matrix and confounds."""

    events: EventTable
    bold: np.ndarray
    confounds: np.ndarray

    def __post_init__(self):
        bold = np.asarray(self.bold, dtype=float)
        conf = np.asarray(self.confounds, dtype=float)
        if conf.ndim == 1:
            conf = conf.reshape(-1, 1)
        if bold.ndim != 2:
            raise ValueError("bold must be an n x v matrix")
        if conf.shape[0] != bold.shape[0]:
            raise ValueError("confounds and bold disagree on n")
        object.__setattr__(self, "bold", bold)
        object.__setattr__(self, "confounds", conf)

    @property
    def n(self):
        return self.bold.shape[0]

    @property
    def v(self):
        return self.bold.shape[1]


@dataclass(frozen=True)
class Dataset:
    """Sessions sharing a voxel set and condition set; n may vary."""

    sessions: List[Session]
    tr: float

    def __post_init__(self):
        if not self.sessions:
            raise ValueError("dataset has no sessions")
        v = self.sessions[0].v
        p = self.sessions[0].events.p
        for s in self.sessions:
            if s.v != v:
                raise ValueError("sessions disagree on the voxel count")
            if s.events.p != p:
                raise ValueError("sessions disagree on the condition count")

    @property
    def v(self):
        return self.sessions[0].v

    @property
    def p(self):
        return self.sessions[0].events.p


@dataclass(frozen=True)
class ValidationReport:
    """Cross-session comparison of the fitted vs canonical HRF."""

    loglik_rank1: np.ndarray
    loglik_canonical: np.ndarray
    t_test: TestResult
    wilcoxon: TestResult
    hrfs: np.ndarray
    peak_times: np.ndarray
    top_voxels: np.ndarray
    mean_hrf: np.ndarray
    sd_hrf: np.ndarray
    canonical_peak: float
    mean_peak_shift: float


def _with_intercept(confounds):
    """Append an intercept column unless one is already spanned."""
    n = confounds.shape[0]
    ones = np.ones(n)
    if confounds.shape[1]:
        proj = confounds @ np.linalg.lstsq(confounds, ones, rcond=None)[0]
        if np.linalg.norm(ones - proj) <= 1e-8 * np.sqrt(n):
            return confounds
    return np.hstack([confounds, ones[:, None]])


def _session_design(session, basis, tr, oversample=1, asynchronous=False):
    n = session.n
    if asynchronous:
        return build_async_design(session.events, basis, n, tr)
    if oversample > 1:
        if basis.evaluator is None:
            raise ValueError("oversampling requires a continuous basis")
        step = tr / oversample
        fine_times = np.arange(basis.duration * oversample) * step
        fine = HrfBasis(kind="custom", samples=basis.evaluator(fine_times),
                        evaluator=basis.evaluator)
        V = build_stimulus_matrix(session.events, n, tr, oversample)
        X_fine = build_basis_design(V, fine)
        return DesignMatrix(values=X_fine.values[::oversample],
                            p=X_fine.p, t=X_fine.t)
    V = build_stimulus_matrix(session.events, n, tr, 1)
    return build_basis_design(V, basis)


def _stack_sessions(sessions, basis, tr, oversample, asynchronous):
    designs = [
        _session_design(s, basis, tr, oversample, asynchronous)
        for s in sessions
    ]
    X = np.vstack([d.values for d in designs])
    blocks = [_with_intercept(s.confounds) for s in sessions]
    P = scipy.linalg.block_diag(*blocks)
    Y = np.vstack([s.bold for s in sessions])
    return DesignMatrix(values=X, p=designs[0].p, t=designs[0].t), P, Y


def fit_dataset(dataset, basis, options=None, session_indices=None,
                oversample=1, whiten_noise=False, asynchronous=False):
    """Fit the rank-one model for every voxel on the given sessions.

    Sessions are concatenated time-wise with block-diagonal confounds
    plus per-session intercepts; each voxel is fit independently and
    results are returned in voxel order. With ``whiten_noise`` the AR(1)
    coefficient is estimated per voxel from canonical-GLM residuals and
    y, X, P are whitened before the solver runs.
    """
    if options is None:
        options = SolverOptions()
    sessions = dataset.sessions
    if session_indices is not None:
        sessions = [sessions[i] for i in session_indices]
    if not sessions:
        raise ValueError("no training sessions")
    design, P, Y = _stack_sessions(
        sessions, basis, dataset.tr, oversample, asynchronous
    )

    fits: List[RankOneFit] = []
    for voxel in range(Y.shape[1]):
        y = Y[:, voxel]
        if whiten_noise:
            rho = _canonical_residual_rho(design, P, y, basis, dataset.tr)
            problem = RankOneProblem(
                design=DesignMatrix(values=whiten(design.values, rho),
                                    p=design.p, t=design.t),
                confounds=whiten(P, rho), y=whiten(y, rho),
                basis=basis, tr=dataset.tr,
            )
        else:
            problem = RankOneProblem(
                design=design, confounds=P, y=y, basis=basis, tr=dataset.tr
            )
        fits.append(fit_voxel(problem, options))
    return fits


def _canonical_residual_rho(design, P, y, basis, tr):
    r = basis.duration
    canonical = glover_hrf(np.arange(r) * tr)
    alpha0 = np.linalg.lstsq(basis.samples, canonical, rcond=None)[0]
    X3 = design.values.reshape(design.n, design.p, design.t)
    D = np.hstack([X3 @ alpha0, P])
    coef = np.linalg.lstsq(D, y, rcond=None)[0]
    res = y - D @ coef
    return estimate_ar1(res).rho


def _peak_time(h, tr, alpha=None, evaluator=None):
    """Continuous peak location when the basis has a closed form, else
    parabolic refinement of the grid argmax."""
    if evaluator is not None and alpha is not None:
        fine = np.arange(0.0, h.shape[0] * tr, 0.01)
        curve = evaluator(fine) @ alpha
        return float(fine[int(np.argmax(curve))])
    i = int(np.argmax(h))
    if 0 < i < h.shape[0] - 1:
        y0, y1, y2 = h[i - 1], h[i], h[i + 1]
        denom = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
        return float((i + shift) * tr)
    return float(i * tr)


def cross_session_validate(dataset, basis, options=None, whiten_loglik=False,
                           top_k=100, oversample=1, asynchronous=False):
    """Held-out-session likelihood comparison: fitted vs canonical HRF.

    For each held-out session the rank-one model is fit on the remaining
    sessions; the fitted and canonical responses are then scored by the
    held-out GLM log-likelihood (activations refit on the test session).
    Per-voxel log-likelihoods are summed over held-out sessions and
    compared with a paired t-test and a one-sided Wilcoxon test
    (rank-one > canonical).
    """
    S = len(dataset.sessions)
    if S < 2:
        raise InsufficientDataError("cross-session validation needs >= 2 sessions")
    if options is None:
        options = SolverOptions()
    v = dataset.v
    r = basis.duration
    tr = dataset.tr
    canonical = glover_hrf(np.arange(r) * tr)

    ll_r1 = np.zeros(v)
    ll_can = np.zeros(v)
    alpha_sum = np.zeros((basis.num_functions, v))
    hrf_sum = np.zeros((r, v))

    for held in range(S):
        train = [i for i in range(S) if i != held]
        fits = fit_dataset(
            dataset, basis, options, session_indices=train,
            oversample=oversample, asynchronous=asynchronous,
        )
        test = dataset.sessions[held]
        P_test = _with_intercept(test.confounds)
        for voxel in range(v):
            y_test = test.bold[:, voxel]
            ll_r1[voxel] += heldout_loglik(
                y_test, test.events, fits[voxel].h, P_test, tr,
                whiten=whiten_loglik,
            )
            ll_can[voxel] += heldout_loglik(
                y_test, test.events, canonical, P_test, tr,
                whiten=whiten_loglik,
            )
            alpha_sum[:, voxel] += fits[voxel].alpha
            hrf_sum[:, voxel] += fits[voxel].h

    hrfs = hrf_sum / S
    alphas = alpha_sum / S
    peak_times = np.array([
        _peak_time(hrfs[:, voxel], tr, alphas[:, voxel], basis.evaluator)
        for voxel in range(v)
    ])

    t_test = paired_mean_test(ll_r1, ll_can)
    wilcoxon = wilcoxon_signed_rank(ll_r1, ll_can, alternative="greater")

    top = np.sort(np.argsort(ll_r1)[::-1][: min(top_k, v)])
    mean_hrf = hrfs[:, top].mean(axis=1)
    sd_hrf = hrfs[:, top].std(axis=1)
    can_peak = canonical_peak_time()
    mean_peak_shift = can_peak - float(peak_times[top].mean())

    return ValidationReport(
        loglik_rank1=ll_r1, loglik_canonical=ll_can, t_test=t_test,
        wilcoxon=wilcoxon, hrfs=hrfs, peak_times=peak_times, top_voxels=top,
        mean_hrf=mean_hrf, sd_hrf=sd_hrf, canonical_peak=can_peak,
        mean_peak_shift=mean_peak_shift,
    )
