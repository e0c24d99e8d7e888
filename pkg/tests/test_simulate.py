"""Tests for the ground-truth simulator."""

import numpy as np
import pytest

from rank1glm import (
    SimSpec,
    build_stimulus_matrix,
    convolve_design,
    fit_glm,
    gen_session,
    glover_hrf,
    shifted_canonical,
)
from rank1glm.exceptions import SpecInfeasibleError
from rank1glm.simulate import drift_confounds, resolve_true_hrf


class TestSpec:
    def test_bad_isi_range(self):
        with pytest.raises(ValueError):
            SimSpec(isi_range=(0.0, 5.0))
        with pytest.raises(ValueError):
            SimSpec(isi_range=(6.0, 3.0))

    def test_negative_sigma(self):
        with pytest.raises(ValueError):
            SimSpec(sigma=-0.1)

    def test_hrf_scans_ceiling(self):
        assert SimSpec(tr=2.4, hrf_duration=24.0).hrf_scans == 10
        assert SimSpec(tr=1.0, hrf_duration=24.0).hrf_scans == 24


class TestTrueHrf:
    def test_canonical_by_name(self):
        h, fn = resolve_true_hrf(SimSpec(tr=1.0))
        np.testing.assert_array_equal(h, glover_hrf(np.arange(24) * 1.0))
        assert fn is glover_hrf

    def test_shifted_peak_moves_earlier(self):
        tr = 0.1
        h0 = shifted_canonical(0.0, 240, tr)
        h1 = shifted_canonical(1.0, 240, tr)
        # advancing by 1 s moves the argmax 10 samples earlier (within
        # one grid step)
        shift = np.argmax(h0) - np.argmax(h1)
        assert abs(shift - 10) <= 1
        # coarse grid undersamples the true peak slightly
        assert h1.max() == pytest.approx(1.0, abs=1e-3)

    def test_zero_shift_is_canonical(self):
        np.testing.assert_allclose(
            shifted_canonical(0.0, 24, 1.0),
            glover_hrf(np.arange(24) * 1.0),
            atol=1e-9,
        )

    def test_excessive_shift_rejected(self):
        with pytest.raises(ValueError):
            shifted_canonical(4.0, 24, 1.0)
        with pytest.raises(ValueError):
            resolve_true_hrf(SimSpec(true_hrf="canonical_shift:-4.5"))

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            resolve_true_hrf(SimSpec(true_hrf="boxcar"))

    def test_explicit_samples_passthrough(self):
        h = np.array([0.0, 1.0, 0.5])
        got, fn = resolve_true_hrf(SimSpec(true_hrf=h))
        np.testing.assert_array_equal(got, h)
        assert fn is None


class TestDriftConfounds:
    def test_constant_and_linear(self):
        P = drift_confounds(5, 1)
        np.testing.assert_array_equal(P[:, 0], np.ones(5))
        np.testing.assert_allclose(P[:, 1], np.linspace(-1, 1, 5))

    def test_order_two_quadratic(self):
        P = drift_confounds(101, 2)
        x = np.linspace(-1, 1, 101)
        np.testing.assert_allclose(P[:, 2], 0.5 * (3 * x**2 - 1), atol=1e-12)


class TestGenSession:
    def test_bitwise_determinism(self):
        spec = SimSpec(seed=42, sigma=0.5, rho=0.3, voxels=3, repeats=2)
        e1, b1, t1 = gen_session(spec, 0)
        e2, b2, t2 = gen_session(spec, 0)
        np.testing.assert_array_equal(e1.onsets, e2.onsets)
        np.testing.assert_array_equal(b1, b2)
        np.testing.assert_array_equal(t1["beta"], t2["beta"])

    def test_sessions_differ(self):
        spec = SimSpec(seed=42, sigma=0.5, voxels=1)
        _, b0, _ = gen_session(spec, 0)
        _, b1, _ = gen_session(spec, 1)
        assert not np.array_equal(b0, b1)

    def test_beta_constant_across_sessions(self):
        spec = SimSpec(seed=7, sigma=0.5, voxels=4)
        _, _, t0 = gen_session(spec, 0)
        _, _, t1 = gen_session(spec, 1)
        np.testing.assert_array_equal(t0["beta"], t1["beta"])

    def test_noiseless_matches_convolved_design(self):
        spec = SimSpec(seed=3, sigma=0.0, voxels=2)
        events, bold, truth = gen_session(spec, 0)
        V = build_stimulus_matrix(events, spec.n, spec.tr)
        X_h = convolve_design(V, truth["h"])
        expected = X_h @ truth["beta"] + truth["confounds"] @ truth["w"]
        np.testing.assert_allclose(bold, expected, atol=1e-10)

    def test_noise_level_and_autocorrelation(self):
        spec = SimSpec(
            n=2000, seed=11, sigma=1.0, rho=0.4, beta_mean=0.0, beta_sd=0.0,
            drift_order=0, isi_range=(3.0, 4.0), p=2,
        )
        _, bold, truth = gen_session(spec, 0)
        resid = bold[:, 0] - truth["confounds"] @ truth["w"][:, 0]
        lag1 = np.corrcoef(resid[:-1], resid[1:])[0, 1]
        assert abs(lag1 - 0.4) < 0.05
        assert abs(resid.std() - 1.0 / np.sqrt(1 - 0.16)) < 0.1

    def test_synchronous_onsets_on_grid(self):
        spec = SimSpec(seed=5, tr=2.0, n=200)
        events, _, _ = gen_session(spec, 0)
        np.testing.assert_allclose(events.onsets % 2.0, 0.0, atol=1e-9)

    def test_asynchronous_onsets_off_grid(self):
        spec = SimSpec(seed=5, tr=2.0, n=200, asynchronous=True)
        events, _, _ = gen_session(spec, 0)
        frac = events.onsets % 2.0
        assert np.any((frac > 1e-6) & (frac < 2.0 - 1e-6))

    def test_infeasible_schedule(self):
        spec = SimSpec(n=20, p=10, repeats=2, isi_range=(3.0, 6.0))
        with pytest.raises(SpecInfeasibleError) as exc:
            gen_session(spec, 0)
        assert 0 < exc.value.max_feasible < 20

    def test_glm_recovers_beta_noiseless(self):
        spec = SimSpec(seed=9, sigma=0.0, voxels=1, repeats=3)
        events, bold, truth = gen_session(spec, 0)
        V = build_stimulus_matrix(events, spec.n, spec.tr)
        X_h = convolve_design(V, truth["h"])
        fit = fit_glm(bold[:, 0], X_h, truth["confounds"])
        np.testing.assert_allclose(fit.beta, truth["beta"][:, 0], atol=1e-8)
        np.testing.assert_allclose(fit.w, truth["w"][:, 0], atol=1e-8)

    def test_word_decoding_shape_spec(self):
        # Larger configuration: slow TR, 40 conditions, asynchronous
        # onsets, about 8 s between trials.
        spec = SimSpec(
            n=290, tr=2.4, p=40, repeats=2, isi_range=(7.5, 8.5),
            asynchronous=True, sigma=0.5, voxels=2, seed=21,
        )
        events, bold, truth = gen_session(spec, 0)
        assert len(events) == 80
        assert bold.shape == (290, 2)
        assert truth["beta"].shape == (40, 2)
        assert np.isfinite(bold).all()
