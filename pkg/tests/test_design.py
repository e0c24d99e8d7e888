"""Tests for stimulus and design matrix construction."""

import io

import numpy as np
import pytest

from rank1glm import (
    EventTable,
    build_async_design,
    build_basis_design,
    build_fir_design,
    build_stimulus_matrix,
    canonical_basis,
    convolve_design,
    fir_basis,
    lower_shift,
    read_events,
)
from rank1glm.design import write_events
from rank1glm.exceptions import FormatError
from rank1glm.hrf import HrfBasis


def convolution_oracle(V, h, beta):
    """Brute-force X_h @ beta via per-condition convolution."""
    n, p = V.shape
    out = np.zeros(n)
    for j in range(p):
        out += beta[j] * np.convolve(V[:, j], h)[:n]
    return out


def random_binary(rng, n, p, density=0.1):
    return (rng.random((n, p)) < density).astype(float)


class TestStimulusMatrix:
    def test_single_event(self):
        events = EventTable(onsets=[0.0], conditions=[0], p=1)
        V = build_stimulus_matrix(events, 5, 1.0, 1)
        np.testing.assert_array_equal(V[:, 0], [1, 0, 0, 0, 0])

    def test_closest_tr_rounding(self):
        events = EventTable(onsets=[2.3], conditions=[0], p=1)
        V = build_stimulus_matrix(events, 5, 1.0, 1)
        assert V[2, 0] == 1 and V.sum() == 1

    def test_oversampled_rounding(self):
        events = EventTable(onsets=[2.3], conditions=[0], p=1)
        V = build_stimulus_matrix(events, 5, 1.0, 3)
        assert V.shape == (15, 1)
        assert V[7, 0] == 1 and V.sum() == 1

    def test_binary_when_events_collide(self):
        events = EventTable(onsets=[2.0, 2.2], conditions=[0, 0], p=1)
        V = build_stimulus_matrix(events, 5, 1.0, 1)
        assert V[2, 0] == 1.0

    def test_onset_out_of_range(self):
        events = EventTable(onsets=[5.0], conditions=[0], p=1)
        with pytest.raises(ValueError):
            build_stimulus_matrix(events, 5, 1.0, 1)

    def test_negative_onset_rejected(self):
        with pytest.raises(ValueError):
            EventTable(onsets=[-1.0], conditions=[0], p=1)


class TestLowerShift:
    def test_identity(self):
        x = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(lower_shift(x, 0), x)

    def test_shift_one(self):
        np.testing.assert_array_equal(
            lower_shift(np.array([1.0, 2, 3, 4]), 1), [0, 1, 2, 3]
        )

    def test_shift_three(self):
        np.testing.assert_array_equal(
            lower_shift(np.array([1.0, 0, 0, 0]), 3), [0, 0, 0, 1]
        )

    def test_shift_too_large(self):
        with pytest.raises(ValueError):
            lower_shift(np.zeros(4), 4)


class TestFirDesign:
    def test_single_event_shifted_units(self):
        V = np.zeros((5, 1))
        V[0, 0] = 1
        X = build_fir_design(V, 3).values
        expected = np.zeros((5, 3))
        expected[0, 0] = expected[1, 1] = expected[2, 2] = 1
        np.testing.assert_array_equal(X, expected)

    def test_no_events_zero_matrix(self):
        X = build_fir_design(np.zeros((8, 2)), 4).values
        assert not X.any()

    def test_span_exceeds_session(self):
        with pytest.raises(ValueError):
            build_fir_design(np.zeros((3, 1)), 4)

    def test_factorization_identity(self, rng):
        # X_tilde vec(h beta^T) equals the per-condition convolution.
        for _ in range(50):
            n = int(rng.integers(8, 65))
            p = int(rng.integers(1, 6))
            r = int(rng.integers(1, min(13, n + 1)))
            V = random_binary(rng, n, p)
            h = rng.standard_normal(r)
            beta = rng.standard_normal(p)
            X = build_fir_design(V, r)
            lhs = X.values @ np.kron(beta, h)
            rhs = convolution_oracle(V, h, beta)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(
                1.0, np.max(np.abs(rhs))
            )


class TestBasisDesign:
    def test_fir_basis_bit_for_bit(self, rng):
        V = random_binary(rng, 30, 2)
        np.testing.assert_array_equal(
            build_basis_design(V, fir_basis(6)).values,
            build_fir_design(V, 6).values,
        )

    def test_single_canonical_column_is_convolution(self, rng):
        V = random_binary(rng, 40, 3)
        basis = canonical_basis(12, 1.0, num_derivatives=0)
        X = build_basis_design(V, basis).values
        expected = convolve_design(V, basis.samples[:, 0])
        np.testing.assert_allclose(X, expected, atol=1e-12)

    def test_kronecker_identity(self, rng):
        # X_Q vec(alpha beta^T) == X_fir vec((Q alpha) beta^T)
        for _ in range(10):
            n, p, r, t = 48, 3, 10, 4
            V = random_binary(rng, n, p)
            Q = rng.standard_normal((r, t))
            basis = HrfBasis(kind="custom", samples=Q)
            alpha = rng.standard_normal(t)
            beta = rng.standard_normal(p)
            lhs = build_basis_design(V, basis).values @ np.kron(beta, alpha)
            rhs = build_fir_design(V, r).values @ np.kron(beta, Q @ alpha)
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_equals_fir_times_block_diagonal_basis(self, rng):
        n, p, r, t = 32, 2, 8, 3
        V = random_binary(rng, n, p)
        Q = rng.standard_normal((r, t))
        basis = HrfBasis(kind="custom", samples=Q)
        lhs = build_basis_design(V, basis).values
        rhs = build_fir_design(V, r).values @ np.kron(np.eye(p), Q)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestAsyncDesign:
    def test_on_grid_matches_synchronous(self):
        tr = 2.0
        events = EventTable(onsets=[0.0, 6.0, 14.0], conditions=[0, 1, 0], p=2)
        basis = canonical_basis(8, tr, num_derivatives=2)
        n = 20
        X_async = build_async_design(events, basis, n, tr).values
        V = build_stimulus_matrix(events, n, tr, 1)
        X_sync = build_basis_design(V, basis).values
        np.testing.assert_allclose(X_async, X_sync, atol=1e-12)

    def test_single_off_grid_event(self):
        tr = 2.4
        events = EventTable(onsets=[1.2], conditions=[0], p=1)
        basis = canonical_basis(6, tr, num_derivatives=0)
        X = build_async_design(events, basis, 10, tr).values
        # rows 0..5 hold the event's response starting at scan 0
        vals = basis.evaluator(np.array([-1.2, 1.2, 3.6, 6.0, 8.4, 10.8]))[:, 0]
        np.testing.assert_allclose(X[:6, 0], vals, atol=1e-12)
        assert np.all(X[6:, 0] == 0)

    def test_same_condition_events_sum(self):
        tr = 1.0
        basis = canonical_basis(16, tr, num_derivatives=1)
        both = EventTable(onsets=[0.0, 8.0], conditions=[0, 0], p=1)
        first = EventTable(onsets=[0.0], conditions=[0], p=1)
        second = EventTable(onsets=[8.0], conditions=[0], p=1)
        n = 30
        X = build_async_design(both, basis, n, tr).values
        X1 = build_async_design(first, basis, n, tr).values
        X2 = build_async_design(second, basis, n, tr).values
        np.testing.assert_allclose(X, X1 + X2, atol=1e-12)

    def test_fir_rejected(self):
        events = EventTable(onsets=[0.0], conditions=[0], p=1)
        with pytest.raises(ValueError):
            build_async_design(events, fir_basis(4), 10, 1.0)

    def test_onset_beyond_session(self):
        events = EventTable(onsets=[25.0], conditions=[0], p=1)
        basis = canonical_basis(4, 1.0, num_derivatives=0)
        with pytest.raises(ValueError):
            build_async_design(events, basis, 10, 1.0)


class TestConvolveDesign:
    def test_unit_impulse_reproduces_stimulus(self, rng):
        V = random_binary(rng, 20, 3)
        np.testing.assert_array_equal(convolve_design(V, np.array([1.0])), V)

    def test_single_event_gives_padded_hrf(self):
        V = np.zeros((10, 1))
        V[0, 0] = 1
        h = np.array([0.5, 1.0, 0.25])
        X = convolve_design(V, h)
        np.testing.assert_array_equal(X[:3, 0], h)
        assert np.all(X[3:, 0] == 0)

    def test_column_extraction_from_fir_design(self, rng):
        n, p, r = 40, 4, 8
        V = random_binary(rng, n, p)
        h = rng.standard_normal(r)
        X_fir = build_fir_design(V, r).values
        X_h = convolve_design(V, h)
        for j in range(p):
            e_j = np.zeros(p)
            e_j[j] = 1.0
            np.testing.assert_allclose(
                X_h[:, j], X_fir @ np.kron(e_j, h), atol=1e-12
            )


class TestEventsFile:
    def test_roundtrip(self, tmp_path):
        events = EventTable(
            onsets=[0.5, 2.25, 7.0], conditions=[1, 0, 2], p=3, session_id="a"
        )
        path = tmp_path / "events.tsv"
        write_events(path, events)
        back = read_events(path, session_id="a")
        np.testing.assert_array_equal(back.onsets, events.onsets)
        np.testing.assert_array_equal(back.conditions, events.conditions)
        assert back.p == 3

    def test_comments_ignored(self):
        text = "# comment\nonset\tcondition\n1.0\t0\n# mid\n2.0\t1\n"
        events = read_events(io.StringIO(text))
        assert len(events) == 2

    def test_bad_header(self):
        with pytest.raises(FormatError, match="header"):
            read_events(io.StringIO("time\tcond\n1.0\t0\n"))

    def test_bad_field_reports_line(self):
        with pytest.raises(FormatError, match=":2"):
            read_events(io.StringIO("onset\tcondition\n1.0\tx\n"))
