"""Tests for the measurement core.

Scalar metrics are checked against hand-computed closed forms (worked in
comments next to each case) and against constructed inputs whose answer is
forced by symmetry. Protocol functions are exercised end to end with tiny
GAN configurations, and through their injection points with oracle samplers
so the metric side can be validated without GAN variance in the way.
"""

import numpy as np
import pytest

from ganshift.audit import (
    BoundaryRow,
    ModeReport,
    MomentSummary,
    TemporalModeSeries,
    boundary_distortion_experiment,
    boundary_skew,
    check_prediction_matrix,
    confidence_histogram,
    downsample,
    downsampling_curve,
    gaussian_fit_kl,
    label_correctness,
    mahalanobis_discrepancy,
    mean_discrepancy,
    mode_collapse_experiment,
    mode_histogram,
    modified_inception_score,
    moments,
    spectrum_report,
)
from ganshift.distributions import (
    BayesAnnotator,
    GaussianSpec,
    LabeledDataset,
    ring_mixture,
    sample_gaussian,
    sample_mixture,
)
from ganshift.errors import ContractViolation, NumericError
from ganshift.gan import GanConfig
from ganshift.neural import MlpArch, MlpParams, TrainConfig, init_params
from ganshift.numkit import Rng


def linear_params(w, b=None, head="softmax"):
    w = np.asarray(w, dtype=np.float64)
    b = np.zeros(w.shape[1]) if b is None else np.asarray(b, dtype=np.float64)
    return MlpParams(weights=[w], biases=[b], head=head)


def two_blob_data(n_per_class, sep=6.0, dim=2, seed=0):
    """Well-separated binary Gaussian task; a linear classifier is Bayes."""
    rng = Rng(seed)
    x0 = sample_gaussian(GaussianSpec(np.zeros(dim), 1.0), n_per_class, rng)
    x1 = sample_gaussian(
        GaussianSpec(np.full(dim, sep / np.sqrt(dim)), 1.0), n_per_class, rng
    )
    x = np.vstack([x0, x1])
    y = np.repeat(np.arange(2, dtype=np.int64), n_per_class)
    return LabeledDataset(x, y, class_count=2, source="true-data")


FAST_CLS = TrainConfig(learning_rate=0.05, batch_size=64, iterations=400, seed=1)


# ---------------------------------------------------------------------------
# prediction-matrix validation
# ---------------------------------------------------------------------------

class TestCheckPredictionMatrix:
    def test_valid_matrix_passes_through(self):
        p = np.array([[0.25, 0.75], [1.0, 0.0]])
        assert np.array_equal(check_prediction_matrix(p), p)

    def test_rows_not_summing_to_one_rejected(self):
        with pytest.raises(ContractViolation, match="sum to 1"):
            check_prediction_matrix(np.array([[0.5, 0.4]]))

    def test_negative_entry_rejected(self):
        with pytest.raises(ContractViolation):
            check_prediction_matrix(np.array([[-0.1, 1.1]]))

    def test_empty_rejected(self):
        with pytest.raises(ContractViolation):
            check_prediction_matrix(np.zeros((0, 3)))


# ---------------------------------------------------------------------------
# mode histogram
# ---------------------------------------------------------------------------

class TestModeHistogram:
    def test_uniform_labels_have_zero_tv(self):
        report = mode_histogram(np.tile(np.arange(5), 40), class_count=5)
        assert report.tv_from_uniform == 0.0
        assert report.missing_modes == ()
        assert np.array_equal(report.counts, np.full(5, 40))

    def test_single_class_tv(self):
        # fractions (1,0,0,0,0) vs uniform 0.2 each:
        # 1/2 * (0.8 + 4 * 0.2) = 0.8
        report = mode_histogram(np.zeros(100, dtype=int), class_count=5)
        assert report.tv_from_uniform == pytest.approx(0.8, abs=1e-12)
        assert report.missing_modes == (1, 2, 3, 4)

    def test_two_live_modes_tv(self):
        # fractions (.5,.5,0,0,0): 1/2*(0.3+0.3+0.2*3) = 0.6
        labels = np.array([0, 1] * 50)
        report = mode_histogram(labels, class_count=5)
        assert report.tv_from_uniform == pytest.approx(0.6, abs=1e-12)
        assert report.missing_modes == (2, 3, 4)

    def test_skewed_fractions_tv(self):
        # fractions (.5,.3,.2,0,0): 1/2*(0.3+0.1+0.0+0.2+0.2) = 0.4
        labels = np.repeat([0, 1, 2], [50, 30, 20])
        report = mode_histogram(labels, class_count=5)
        assert report.tv_from_uniform == pytest.approx(0.4, abs=1e-12)

    def test_missing_threshold_is_strict_less_than(self):
        # class 1 sits exactly at the threshold, so it is not missing
        labels = np.repeat([0, 1], [99, 1])
        report = mode_histogram(labels, class_count=2, missing_threshold=0.01)
        assert report.missing_modes == ()
        report = mode_histogram(labels, class_count=2, missing_threshold=0.011)
        assert report.missing_modes == (1,)

    def test_out_of_range_labels_rejected(self):
        with pytest.raises(ContractViolation):
            mode_histogram(np.array([0, 3]), class_count=3)
        with pytest.raises(ContractViolation):
            mode_histogram(np.array([-1, 0]), class_count=3)

    def test_report_validates_fractions(self):
        with pytest.raises(ContractViolation):
            ModeReport(
                counts=np.array([1, 1]),
                fractions=np.array([0.7, 0.7]),
                tv_from_uniform=0.0,
                missing_modes=(),
            )


# ---------------------------------------------------------------------------
# label agreement and confidence
# ---------------------------------------------------------------------------

class TestLabelCorrectness:
    def test_hand_case(self):
        assert label_correctness([0, 1, 1, 0], [0, 1, 0, 0]) == pytest.approx(0.75)

    def test_symmetric(self):
        rng = Rng(7)
        a = rng.integers(5, 200)
        b = rng.integers(5, 200)
        assert label_correctness(a, b) == label_correctness(b, a)

    def test_identical_vectors_score_one(self):
        a = np.arange(10) % 3
        assert label_correctness(a, a) == 1.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ContractViolation):
            label_correctness([0, 1], [0, 1, 2])


class TestConfidenceHistogram:
    def test_edges_span_reciprocal_c_to_one(self):
        p = np.full((10, 4), 0.25)
        counts, edges = confidence_histogram(p, bins=3)
        assert edges[0] == pytest.approx(0.25)
        assert edges[-1] == pytest.approx(1.0)
        assert counts.sum() == 10

    def test_uniform_rows_land_in_first_bin(self):
        p = np.full((10, 4), 0.25)
        counts, _ = confidence_histogram(p, bins=3)
        assert np.array_equal(counts, [10, 0, 0])

    def test_certain_rows_land_in_last_bin(self):
        p = np.tile([1.0, 0.0], (6, 1))
        counts, _ = confidence_histogram(p, bins=5)
        assert np.array_equal(counts, [0, 0, 0, 0, 6])

    def test_matches_scan_oracle(self):
        rng = Rng(11)
        z = rng.uniform(300).reshape(100, 3)
        p = z / np.sum(z, axis=1, keepdims=True)
        bins = 7
        counts, edges = confidence_histogram(p, bins=bins)
        lo, width = 1.0 / 3.0, (1.0 - 1.0 / 3.0) / bins
        expect = np.zeros(bins, dtype=int)
        for row in p:
            conf = max(row)
            expect[min(int((conf - lo) / width), bins - 1)] += 1
        assert np.array_equal(counts, expect)


# ---------------------------------------------------------------------------
# modified inception score
# ---------------------------------------------------------------------------

class TestModifiedInceptionScore:
    def test_constant_predictions_score_one(self):
        # every row equals the marginal, so every KL term is zero
        p = np.tile([0.8, 0.2], (40, 1))
        mean, std = modified_inception_score(p, splits=4, rng=Rng(0))
        assert mean == pytest.approx(1.0, abs=1e-12)
        assert std == pytest.approx(0.0, abs=1e-12)

    def test_confident_balanced_predictions_score_c(self):
        # one-hot rows, balanced: KL(row || uniform marginal) = ln C,
        # so the score is exactly C whenever each chunk stays balanced
        p = np.zeros((40, 4))
        p[np.arange(40), np.arange(40) % 4] = 1.0
        mean, std = modified_inception_score(p, splits=1)
        assert mean == pytest.approx(4.0, abs=1e-12)
        assert std == pytest.approx(0.0, abs=1e-12)

    def test_soft_balanced_hand_value(self):
        # half the rows (0.8,0.2), half (0.2,0.8); marginal (0.5,0.5):
        # KL = 0.8 ln 1.6 + 0.2 ln 0.4 per row, identical for all rows
        p = np.vstack([np.tile([0.8, 0.2], (20, 1)), np.tile([0.2, 0.8], (20, 1))])
        expect = float(np.exp(0.8 * np.log(1.6) + 0.2 * np.log(0.4)))
        mean, std = modified_inception_score(p, splits=1)
        assert mean == pytest.approx(expect, abs=1e-12)
        assert std == pytest.approx(0.0, abs=1e-12)
        assert mean == pytest.approx(1.2126, abs=1e-3)

    def test_zero_probabilities_contribute_zero(self):
        # rows with exact zeros must not produce NaN
        p = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        mean, _ = modified_inception_score(p, splits=1)
        assert np.isfinite(mean)
        assert mean == pytest.approx(2.0, abs=1e-12)

    def test_score_bounded_by_class_count(self):
        # 1 <= score <= C for every chunk, hence for the mean
        rng = Rng(3)
        for trial in range(200):
            n = 12 + int(rng.integers(48, 1)[0])
            c = 2 + int(rng.integers(5, 1)[0])
            z = rng.uniform(n * c).reshape(n, c)
            p = z / np.sum(z, axis=1, keepdims=True)
            mean, _ = modified_inception_score(p, splits=3, rng=rng)
            assert 1.0 - 1e-9 <= mean <= c + 1e-9

    def test_shuffle_is_deterministic_given_rng(self):
        rng = Rng(5)
        z = rng.uniform(200).reshape(50, 4)
        p = z / np.sum(z, axis=1, keepdims=True)
        a = modified_inception_score(p, splits=5, rng=Rng(9))
        b = modified_inception_score(p, splits=5, rng=Rng(9))
        assert a == b

    def test_more_splits_than_rows_rejected(self):
        p = np.full((5, 2), 0.5)
        with pytest.raises(ContractViolation, match="splits"):
            modified_inception_score(p, splits=6)

    def test_chunk_sizes_near_equal(self):
        # 11 rows over 3 splits -> chunks of 4, 4, 3; the score must still
        # be a plain mean over 3 chunk scores
        p = np.tile([0.5, 0.5], (11, 1))
        mean, std = modified_inception_score(p, splits=3, rng=Rng(1))
        assert mean == pytest.approx(1.0, abs=1e-12)
        assert std == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# moment metrics
# ---------------------------------------------------------------------------

class TestMoments:
    def test_hand_case(self):
        # rows (+-1, 0), (0, +-2): mean (0,0),
        # cov = diag(2/3, 8/3) with the n-1 denominator
        x = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -2.0], [0.0, 2.0]])
        s = moments(x)
        assert np.allclose(s.mean, [0.0, 0.0])
        assert np.allclose(s.cov, np.diag([2.0 / 3.0, 8.0 / 3.0]))
        assert s.n == 4

    def test_matches_numpy_cov(self):
        x = Rng(2).normal(90).reshape(30, 3)
        s = moments(x)
        assert np.allclose(s.cov, np.cov(x, rowvar=False), atol=1e-12)

    def test_single_row_rejected(self):
        with pytest.raises(ContractViolation):
            moments(np.array([[1.0, 2.0]]))


class TestMeanDiscrepancy:
    def test_identical_means_give_zero(self):
        s = moments(Rng(0).normal(40).reshape(20, 2))
        assert mean_discrepancy(s, s) == 0.0

    def test_identity_covariance_hand_case(self):
        # diff (3,4), Sigma_T = I: delta = 9 + 16 = 25
        t = MomentSummary(mean=np.array([3.0, 4.0]), cov=np.eye(2), n=10)
        g = MomentSummary(mean=np.zeros(2), cov=np.eye(2), n=10)
        assert mean_discrepancy(t, g) == pytest.approx(25.0, abs=1e-12)

    def test_covariance_weights_not_inverse(self):
        # diff (2,0), Sigma_T = diag(1, 9): 2*1*2 = 4, untouched by the
        # second coordinate's variance
        t = MomentSummary(mean=np.array([2.0, 0.0]), cov=np.diag([1.0, 9.0]), n=10)
        g = MomentSummary(mean=np.zeros(2), cov=np.diag([1.0, 9.0]), n=10)
        assert mean_discrepancy(t, g) == pytest.approx(4.0, abs=1e-12)

    def test_scales_as_fourth_power(self):
        # x -> c x scales the mean gap by c and the covariance by c^2
        rng = Rng(4)
        x = rng.normal(60).reshape(30, 2)
        y = rng.normal(60).reshape(30, 2) + 1.5
        c = 3.0
        base = mean_discrepancy(moments(x), moments(y))
        scaled = mean_discrepancy(moments(c * x), moments(c * y))
        assert scaled == pytest.approx(c**4 * base, rel=1e-10)

    def test_dimension_mismatch_rejected(self):
        t = MomentSummary(mean=np.zeros(2), cov=np.eye(2), n=5)
        g = MomentSummary(mean=np.zeros(3), cov=np.eye(3), n=5)
        with pytest.raises(ContractViolation):
            mean_discrepancy(t, g)


class TestMahalanobisDiscrepancy:
    def test_hand_case(self):
        # diff (2,0), Sigma_T = diag(4,1): 4/4 = 1
        t = MomentSummary(mean=np.array([2.0, 0.0]), cov=np.diag([4.0, 1.0]), n=10)
        g = MomentSummary(mean=np.zeros(2), cov=np.diag([4.0, 1.0]), n=10)
        assert mahalanobis_discrepancy(t, g) == pytest.approx(1.0, abs=1e-12)

    def test_scale_invariant(self):
        rng = Rng(5)
        x = rng.normal(80).reshape(40, 2)
        y = rng.normal(80).reshape(40, 2) + 0.7
        base = mahalanobis_discrepancy(moments(x), moments(y))
        scaled = mahalanobis_discrepancy(moments(5.0 * x), moments(5.0 * y))
        assert scaled == pytest.approx(base, rel=1e-10)


class TestGaussianFitKl:
    def test_self_kl_is_zero(self):
        s = moments(Rng(1).normal(200).reshape(50, 4))
        assert gaussian_fit_kl(s, s) == pytest.approx(0.0, abs=1e-10)

    def test_unit_mean_shift_hand_value(self):
        # KL(N(0,1) || N(1,1)) = 1/2 * 1^2 = 0.5
        t = MomentSummary(mean=np.zeros(1), cov=np.eye(1), n=10)
        g = MomentSummary(mean=np.ones(1), cov=np.eye(1), n=10)
        assert gaussian_fit_kl(t, g) == pytest.approx(0.5, abs=1e-6)

    def test_variance_shrink_hand_value(self):
        # KL(N(0,2) || N(0,1)) = 1/2 (2 - 1 + ln(1/2)) = 0.15342640972
        t = MomentSummary(mean=np.zeros(1), cov=2.0 * np.eye(1), n=10)
        g = MomentSummary(mean=np.zeros(1), cov=np.eye(1), n=10)
        assert gaussian_fit_kl(t, g) == pytest.approx(0.15342640972002736, abs=1e-6)

    def test_direction_is_t_relative_to_g(self):
        # KL(N(0,2)||N(0,1)) != KL(N(0,1)||N(0,2)); pin both sides
        t = MomentSummary(mean=np.zeros(1), cov=2.0 * np.eye(1), n=10)
        g = MomentSummary(mean=np.zeros(1), cov=np.eye(1), n=10)
        forward = gaussian_fit_kl(t, g)
        backward = gaussian_fit_kl(g, t)
        assert forward == pytest.approx(0.5 * (1.0 + np.log(0.5)), abs=1e-10)
        assert backward == pytest.approx(0.5 * (0.5 - 1.0 + np.log(2.0)), abs=1e-10)

    def test_nonnegative_on_random_pairs(self):
        rng = Rng(8)
        for trial in range(30):
            d = 1 + int(rng.integers(5, 1)[0])
            a = rng.normal(d * d).reshape(d, d)
            b = rng.normal(d * d).reshape(d, d)
            t = MomentSummary(mean=rng.normal(d), cov=a @ a.T + 0.1 * np.eye(d), n=10)
            g = MomentSummary(mean=rng.normal(d), cov=b @ b.T + 0.1 * np.eye(d), n=10)
            assert gaussian_fit_kl(t, g) >= -1e-10

    def test_matches_full_matrix_oracle(self):
        # independent evaluation with explicit inverse and slogdet
        rng = Rng(9)
        d = 4
        a = rng.normal(d * d).reshape(d, d)
        b = rng.normal(d * d).reshape(d, d)
        t = MomentSummary(mean=rng.normal(d), cov=a @ a.T + 0.5 * np.eye(d), n=10)
        g = MomentSummary(mean=rng.normal(d), cov=b @ b.T + 0.5 * np.eye(d), n=10)
        inv_g = np.linalg.inv(g.cov)
        diff = g.mean - t.mean
        expect = 0.5 * (
            np.trace(inv_g @ t.cov)
            + diff @ inv_g @ diff
            - d
            + np.linalg.slogdet(g.cov)[1]
            - np.linalg.slogdet(t.cov)[1]
        )
        assert gaussian_fit_kl(t, g) == pytest.approx(expect, rel=1e-10)

    def test_semidefinite_covariance_gets_regularized(self, caplog):
        t = MomentSummary(mean=np.zeros(2), cov=np.diag([1.0, 0.0]), n=10)
        g = MomentSummary(mean=np.zeros(2), cov=np.eye(2), n=10)
        with caplog.at_level("WARNING", logger="ganshift.audit"):
            value = gaussian_fit_kl(t, g)
        assert np.isfinite(value)
        assert any("regularizing" in r.message for r in caplog.records)

    def test_indefinite_covariance_raises_naming_eigenvalue(self):
        g = MomentSummary(mean=np.zeros(2), cov=np.diag([1.0, -1.0]), n=10)
        t = MomentSummary(mean=np.zeros(2), cov=np.eye(2), n=10)
        with pytest.raises(NumericError, match="eigenvalue"):
            gaussian_fit_kl(t, g)


# ---------------------------------------------------------------------------
# spectrum report
# ---------------------------------------------------------------------------

class TestSpectrumReport:
    def test_identical_sets_agree(self):
        x = Rng(0).normal(600).reshape(100, 6)
        report = spectrum_report(x, x)
        assert np.allclose(report.true_eigenvalues, report.synthetic_eigenvalues)
        assert report.true_decay_ratio == report.synthetic_decay_ratio

    def test_isotropic_sample_has_flat_spectrum(self):
        rng = Rng(1)
        x = sample_gaussian(GaussianSpec(np.zeros(10), 1.0), 20000, rng)
        report = spectrum_report(x, x)
        assert report.true_decay_ratio >= 0.8
        assert report.below_half_fraction == 0.0

    def test_anisotropic_synthetic_flagged(self):
        # synthetic side crushes half the coordinates to sigma 0.1, so
        # half the eigenvalues sit near 0.01 while the rest stay near 1
        rng = Rng(2)
        d = 10
        xt = sample_gaussian(GaussianSpec(np.zeros(d), 1.0), 20000, rng)
        scale = np.ones(d)
        scale[d // 2 :] = 0.1
        xs = sample_gaussian(GaussianSpec(np.zeros(d), scale**2), 20000, rng)
        report = spectrum_report(xt, xs)
        assert report.below_half_fraction >= 0.45
        assert report.synthetic_decay_ratio < 0.05
        assert report.true_decay_ratio >= 0.8

    def test_eigenvalues_sorted_and_nonnegative(self):
        rng = Rng(3)
        x = rng.normal(400).reshape(50, 8)
        report = spectrum_report(x, x + 1.0)
        for w in (report.true_eigenvalues, report.synthetic_eigenvalues):
            assert np.all(np.diff(w) <= 1e-12)
            assert np.all(w >= 0.0)

    def test_too_few_rows_rejected(self):
        good = Rng(0).normal(50).reshape(10, 5)
        bad = Rng(1).normal(25).reshape(5, 5)
        with pytest.raises(ContractViolation, match="d \\+ 1"):
            spectrum_report(bad, good)
        with pytest.raises(ContractViolation, match="d \\+ 1"):
            spectrum_report(good, bad)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ContractViolation):
            spectrum_report(np.zeros((10, 2)), np.zeros((10, 3)))


# ---------------------------------------------------------------------------
# downsampling
# ---------------------------------------------------------------------------

class TestDownsample:
    @staticmethod
    def make(n, seed=0):
        rng = Rng(seed)
        x = rng.normal(2 * n).reshape(n, 2)
        y = (np.arange(n) % 2).astype(np.int64)
        return LabeledDataset(x, y, class_count=2, source="true-data")

    def test_factor_one_is_a_permutation(self):
        data = self.make(64)
        out = downsample(data, 1, Rng(5))
        assert out.n == 64
        assert sorted(map(tuple, out.x)) == sorted(map(tuple, data.x))

    def test_keeps_floor_n_over_m(self):
        data = self.make(1024)
        assert downsample(data, 4, Rng(0)).n == 256
        assert downsample(data, 3, Rng(0)).n == 341

    def test_rows_keep_their_labels(self):
        data = self.make(200, seed=3)
        out = downsample(data, 2, Rng(1))
        lookup = {tuple(row): label for row, label in zip(data.x, data.y)}
        for row, label in zip(out.x, out.y):
            assert lookup[tuple(row)] == label

    def test_class_balance_within_hypergeometric_range(self):
        # 500 draws from a 1000/1000 pool: std about 9.7, allow 3 sigma
        data = self.make(2000, seed=7)
        out = downsample(data, 4, Rng(2))
        count0 = int(np.sum(out.y == 0))
        assert abs(count0 - 250) <= 30

    def test_deterministic(self):
        data = self.make(100)
        a = downsample(data, 5, Rng(9))
        b = downsample(data, 5, Rng(9))
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)

    def test_degenerate_factors_rejected(self):
        data = self.make(10)
        with pytest.raises(ContractViolation):
            downsample(data, 0, Rng(0))
        with pytest.raises(ContractViolation):
            downsample(data, 11, Rng(0))


# ---------------------------------------------------------------------------
# mode-collapse experiment
# ---------------------------------------------------------------------------

class TestModeCollapseExperiment:
    @staticmethod
    def ring_data(n=1000, seed=0):
        mix = ring_mixture()
        return mix, sample_mixture(mix, n, Rng(seed), balanced=True)

    def test_restricted_sampler_recovers_constructed_collapse(self):
        # sample only modes 0 and 1 of a five-mode ring; the exact-posterior
        # annotator must report fractions (.5,.5,0,0,0), TV 0.6, and modes
        # 2..4 missing
        mix, data = self.ring_data()
        specs = [mix.components[0], mix.components[1]]

        def sampler(n, rng):
            return np.vstack(
                [
                    sample_gaussian(specs[0], n - n // 2, rng),
                    sample_gaussian(specs[1], n // 2, rng),
                ]
            )

        report, series = mode_collapse_experiment(
            data, GanConfig(), 4000, Rng(3), annotator=BayesAnnotator(mix), sampler=sampler
        )
        assert report.fractions[0] == pytest.approx(0.5, abs=0.02)
        assert report.fractions[1] == pytest.approx(0.5, abs=0.02)
        assert np.all(report.fractions[2:] < 0.02)
        assert report.tv_from_uniform == pytest.approx(0.6, abs=0.02)
        assert report.missing_modes == (2, 3, 4)

    def test_sampler_path_skips_gan_and_reports_single_step(self):
        mix, data = self.ring_data(n=500)
        report, series = mode_collapse_experiment(
            data,
            GanConfig(),
            500,
            Rng(0),
            annotator=BayesAnnotator(mix),
            sampler=lambda n, rng: sample_mixture(mix, n, rng, balanced=True).x,
        )
        assert np.array_equal(series.steps, [0])
        assert np.allclose(series.fractions[0], report.fractions)

    def test_faithful_sampler_shows_no_collapse(self):
        mix, data = self.ring_data()
        report, _ = mode_collapse_experiment(
            data,
            GanConfig(),
            5000,
            Rng(1),
            annotator=BayesAnnotator(mix),
            sampler=lambda n, rng: sample_mixture(mix, n, rng, balanced=True).x,
        )
        assert report.tv_from_uniform < 0.03
        assert report.missing_modes == ()

    def test_unbalanced_training_data_rejected(self):
        mix, data = self.ring_data()
        skew = np.flatnonzero(data.y != 0)[:50]
        keep = np.concatenate([np.flatnonzero(data.y == 0), skew])
        with pytest.raises(ContractViolation, match="unbalanced"):
            mode_collapse_experiment(data.subset(keep), GanConfig(), 100, Rng(0))

    def test_gan_path_runs_end_to_end(self):
        # tiny GAN, tiny budget: checks wiring, not quality
        mix, data = self.ring_data(n=600, seed=4)
        cfg = GanConfig(
            latent_dim=4,
            data_dim=2,
            gen_hidden=(8, 8),
            disc_hidden=(8, 8),
            total_iterations=60,
            checkpoint_every=30,
        )
        report, series = mode_collapse_experiment(
            data, cfg, 400, Rng(5), annotator=BayesAnnotator(mix)
        )
        assert np.array_equal(series.steps, [30, 60])
        assert series.fractions.shape == (2, 5)
        assert np.allclose(series.fractions[-1], report.fractions)
        assert int(report.counts.sum()) == 400

    def test_gan_path_deterministic(self):
        mix, data = self.ring_data(n=400, seed=6)
        cfg = GanConfig(
            latent_dim=4,
            data_dim=2,
            gen_hidden=(8,),
            disc_hidden=(8,),
            total_iterations=40,
            checkpoint_every=40,
        )
        kwargs = dict(annotator=BayesAnnotator(mix))
        r1, s1 = mode_collapse_experiment(data, cfg, 300, Rng(7), **kwargs)
        r2, s2 = mode_collapse_experiment(data, cfg, 300, Rng(7), **kwargs)
        assert np.array_equal(r1.counts, r2.counts)
        assert np.array_equal(s1.fractions, s2.fractions)

    def test_learned_annotator_is_trained_when_none_given(self):
        mix, data = self.ring_data(n=1000, seed=8)
        report, _ = mode_collapse_experiment(
            data,
            GanConfig(),
            3000,
            Rng(2),
            classifier_cfg=FAST_CLS,
            sampler=lambda n, rng: sample_mixture(mix, n, rng, balanced=True).x,
        )
        # ring modes are far apart, so even a linear annotator keeps the
        # faithful sampler's histogram close to uniform
        assert report.tv_from_uniform < 0.05

    def test_series_validation(self):
        with pytest.raises(ContractViolation, match="increase"):
            TemporalModeSeries(
                steps=np.array([10, 10]), fractions=np.full((2, 2), 0.5)
            )
        with pytest.raises(ContractViolation, match="fraction"):
            TemporalModeSeries(steps=np.array([10]), fractions=np.array([[0.6, 0.6]]))


# ---------------------------------------------------------------------------
# boundary distortion
# ---------------------------------------------------------------------------

def true_sampler_for(data):
    """Oracle synthetic source: resample the class-conditional Gaussians the
    dataset was drawn from (unit spherical blobs in two_blob_data)."""
    specs = [
        GaussianSpec(np.mean(data.x[data.y == k], axis=0), 1.0) for k in range(2)
    ]

    def sampler(class_idx, n, rng):
        return sample_gaussian(specs[class_idx], n, rng)

    return sampler


class TestBoundaryDistortionExperiment:
    def test_rows_sources_and_sizes(self):
        data = two_blob_data(200)
        report = boundary_distortion_experiment(
            data,
            GanConfig(),
            FAST_CLS,
            Rng(0),
            downsample_factors=(2, 4),
            oversample_factor=10,
            synthetic_sampler=true_sampler_for(data),
        )
        tags = [r.source for r in report.rows]
        assert tags == ["true", "down-2", "down-4", "up-1", "up-10"]
        n = report.row("true").n_rows
        assert n == 400 - report.holdout_n
        assert report.row("down-2").n_rows == n // 2
        assert report.row("down-4").n_rows == n // 4
        assert report.row("up-1").n_rows == n
        assert report.row("up-10").n_rows == 10 * n
        assert report.holdout_n == 80

    def test_oracle_sampler_erases_synthetic_gap(self):
        # synthetic rows drawn from the true class-conditionals must track
        # the true row's holdout accuracy closely
        data = two_blob_data(300, seed=1)
        report = boundary_distortion_experiment(
            data,
            GanConfig(),
            FAST_CLS,
            Rng(1),
            downsample_factors=(4,),
            synthetic_sampler=true_sampler_for(data),
        )
        true_acc = report.row("true").test_accuracy
        assert true_acc >= 0.95
        assert abs(report.row("up-1").test_accuracy - true_acc) <= 0.03
        assert abs(report.row("up-10").test_accuracy - true_acc) <= 0.03

    def test_label_correctness_high_for_separated_blobs(self):
        data = two_blob_data(200, seed=2)
        report = boundary_distortion_experiment(
            data,
            GanConfig(),
            FAST_CLS,
            Rng(2),
            downsample_factors=(2,),
            synthetic_sampler=true_sampler_for(data),
        )
        for row in report.rows:
            assert row.label_correctness >= 0.95
            assert 1.0 <= row.modified_is_mean <= 2.0

    def test_holdout_excluded_from_training_rows(self):
        data = two_blob_data(100, seed=3)
        report = boundary_distortion_experiment(
            data,
            GanConfig(),
            FAST_CLS,
            Rng(3),
            downsample_factors=(1,),
            holdout_fraction=0.25,
            synthetic_sampler=true_sampler_for(data),
        )
        assert report.holdout_n == 50
        assert report.row("true").n_rows == 150
        # factor 1 down-sampling keeps every training row
        assert report.row("down-1").n_rows == 150

    def test_classifier_params_exposed_per_row(self):
        data = two_blob_data(100, seed=4)
        report = boundary_distortion_experiment(
            data,
            GanConfig(),
            FAST_CLS,
            Rng(4),
            synthetic_sampler=true_sampler_for(data),
        )
        assert set(report.classifier_params) == {"true", "down-4", "up-1", "up-10"}
        for params in report.classifier_params.values():
            assert params.n_layers == 1 and params.head == "softmax"
        assert "lr=0.05" in report.classifier_desc

    def test_deterministic(self):
        data = two_blob_data(100, seed=5)
        kwargs = dict(
            downsample_factors=(2,), synthetic_sampler=true_sampler_for(data)
        )
        a = boundary_distortion_experiment(data, GanConfig(), FAST_CLS, Rng(6), **kwargs)
        b = boundary_distortion_experiment(data, GanConfig(), FAST_CLS, Rng(6), **kwargs)
        assert [r.test_accuracy for r in a.rows] == [r.test_accuracy for r in b.rows]
        assert [r.n_rows for r in a.rows] == [r.n_rows for r in b.rows]

    def test_gan_path_runs_end_to_end(self):
        data = two_blob_data(150, seed=6)
        cfg = GanConfig(
            latent_dim=4,
            data_dim=2,
            gen_hidden=(8, 8),
            disc_hidden=(8, 8),
            total_iterations=50,
            checkpoint_every=50,
        )
        report = boundary_distortion_experiment(
            data, cfg, FAST_CLS, Rng(7), downsample_factors=(2,), oversample_factor=2
        )
        assert [r.source for r in report.rows] == ["true", "down-2", "up-1", "up-2"]
        assert report.row("up-2").n_rows == 2 * report.row("true").n_rows
        assert report.row("true").test_accuracy >= 0.95

    def test_errors_carry_protocol_step(self):
        data = two_blob_data(50, seed=7)

        def broken(class_idx, n, rng):
            return np.ones((n, 3))  # wrong width

        with pytest.raises(ContractViolation, match="step-2"):
            boundary_distortion_experiment(
                data, GanConfig(), FAST_CLS, Rng(0), synthetic_sampler=broken
            )

    def test_nonbinary_labels_rejected(self):
        x = Rng(0).normal(60).reshape(20, 3)
        y = (np.arange(20) % 3).astype(np.int64)
        data = LabeledDataset(x, y, class_count=3, source="true-data")
        with pytest.raises(ContractViolation, match="binary"):
            boundary_distortion_experiment(data, GanConfig(), FAST_CLS, Rng(0))

    def test_bad_factors_rejected(self):
        data = two_blob_data(50)
        with pytest.raises(ContractViolation):
            boundary_distortion_experiment(
                data, GanConfig(), FAST_CLS, Rng(0), downsample_factors=(0,)
            )
        with pytest.raises(ContractViolation):
            boundary_distortion_experiment(
                data, GanConfig(), FAST_CLS, Rng(0), oversample_factor=0
            )

    def test_row_validation(self):
        with pytest.raises(ContractViolation):
            BoundaryRow(
                source="true",
                factor=1,
                n_rows=10,
                train_accuracy=1.2,
                test_accuracy=0.5,
                label_correctness=0.5,
                modified_is_mean=1.0,
                modified_is_std=0.0,
            )


# ---------------------------------------------------------------------------
# boundary skew
# ---------------------------------------------------------------------------

class TestBoundarySkew:
    @staticmethod
    def holdout():
        data = two_blob_data(50, seed=9)
        return data

    def test_identical_classifiers_give_zero(self):
        p = linear_params([[0.0, 1.0], [0.0, 0.0]])
        skew = boundary_skew(p, p, self.holdout())
        assert skew.angle_degrees == pytest.approx(0.0, abs=1e-12)
        assert skew.accuracy_gap == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_normals_give_ninety(self):
        # normals (1,0) and (0,1)
        a = linear_params([[0.0, 1.0], [0.0, 0.0]])
        b = linear_params([[0.0, 0.0], [0.0, 1.0]])
        skew = boundary_skew(a, b, self.holdout())
        assert skew.angle_degrees == pytest.approx(90.0, abs=1e-9)

    def test_forty_five_degrees(self):
        a = linear_params([[0.0, 1.0], [0.0, 0.0]])  # normal (1,0)
        b = linear_params([[0.0, 1.0], [0.0, 1.0]])  # normal (1,1)
        skew = boundary_skew(a, b, self.holdout())
        assert skew.angle_degrees == pytest.approx(45.0, abs=1e-9)

    def test_angle_is_undirected(self):
        # anti-parallel normals describe the same boundary: angle 0
        a = linear_params([[0.0, 1.0], [0.0, 0.0]])
        b = linear_params([[1.0, 0.0], [0.0, 0.0]])  # normal (-1,0)
        skew = boundary_skew(a, b, self.holdout())
        assert skew.angle_degrees == pytest.approx(0.0, abs=1e-9)

    def test_accuracy_gap_sign(self):
        data = self.holdout()
        # blob centers (0,0) and (4.24,4.24): an aligned normal with the
        # boundary through the midpoint separates them; an orthogonal normal
        # cannot beat chance by much
        good = linear_params([[0.0, 1.0], [0.0, 1.0]], b=[0.0, -4.2426])
        bad = linear_params([[0.0, 1.0], [0.0, -1.0]])
        skew = boundary_skew(good, bad, data)
        assert skew.accuracy_gap > 0.3

    def test_zero_normal_raises(self):
        degenerate = linear_params([[0.5, 0.5], [0.2, 0.2]])
        other = linear_params([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NumericError, match="zero-norm"):
            boundary_skew(degenerate, other, self.holdout())

    def test_sigmoid_head_normal_is_the_weight_column(self):
        a = MlpParams(weights=[np.array([[1.0], [0.0]])], biases=[np.zeros(1)], head="sigmoid")
        b = MlpParams(weights=[np.array([[0.0], [1.0]])], biases=[np.zeros(1)], head="sigmoid")
        data = self.holdout()
        skew = boundary_skew(a, b, data)
        assert skew.angle_degrees == pytest.approx(90.0, abs=1e-9)

    def test_hidden_layers_rejected(self):
        deep = init_params(MlpArch(2, (4,), 2, "softmax"), Rng(0))
        flat = linear_params([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ContractViolation, match="linear"):
            boundary_skew(deep, flat, self.holdout())


# ---------------------------------------------------------------------------
# downsampling curve
# ---------------------------------------------------------------------------

class TestDownsamplingCurve:
    def test_factors_and_shared_holdout(self):
        data = two_blob_data(300, seed=10)
        curve = downsampling_curve(data, FAST_CLS, (1, 4, 16), 0.2, Rng(0))
        assert [m for m, _ in curve] == [1, 4, 16]
        for _, acc in curve:
            assert 0.0 <= acc <= 1.0
        # blobs are wide apart, so even 1/16 of the data separates them
        assert curve[0][1] >= 0.95

    def test_factors_must_ascend(self):
        data = two_blob_data(50)
        with pytest.raises(ContractViolation, match="ascending"):
            downsampling_curve(data, FAST_CLS, (4, 2), 0.2, Rng(0))

    def test_deterministic(self):
        data = two_blob_data(100, seed=11)
        a = downsampling_curve(data, FAST_CLS, (1, 2), 0.2, Rng(3))
        b = downsampling_curve(data, FAST_CLS, (1, 2), 0.2, Rng(3))
        assert a == b
