"""Conformal core: scores, ranks, quantiles, bands, coverage, sweeps."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stcp.conformal import (
    Aer,
    Cqr,
    PredictionBand,
    QuantileField,
    ScoreTensor,
    Std,
    SweepRow,
    build_band,
    conformal_quantile,
    conformal_rank,
    coverage_beta,
    empirical_coverage,
    method_from_name,
    read_sweep_csv,
    report_as_dict,
    score_aer,
    score_cqr,
    score_std,
    sweep_to_csv,
    validation_sweep,
)
from stcp.errors import ConfigError, DataError, ShapeError
from stcp.field_tensor import from_array
from stcp.mlp import SIGMA_FLOOR
from stcp.rng import Stream, child_seed


def _uniform_matrix(seed, n, cells):
    return Stream(seed).uniform(n * cells).reshape(n, cells)


class TestMethods:
    def test_tags(self):
        assert Aer().tag == "aer"
        assert Std().tag == "std"
        assert Cqr().tag == "cqr"

    def test_std_passes_validated(self):
        with pytest.raises(ConfigError):
            Std(passes=1)

    @pytest.mark.parametrize("lo,hi", [(0.5, 0.5), (0.9, 0.1), (0.0, 0.5), (0.5, 1.0)])
    def test_cqr_levels_validated(self, lo, hi):
        with pytest.raises(ConfigError):
            Cqr(alpha_lo=lo, alpha_hi=hi)

    def test_from_name(self):
        assert method_from_name("aer") == Aer()
        assert method_from_name("std", passes=8) == Std(passes=8)
        assert method_from_name("cqr") == Cqr()
        with pytest.raises(ConfigError):
            method_from_name("bogus")


class TestScoreTensor:
    def test_rejects_nonfinite(self):
        bad = np.array([[1.0, np.inf]])
        with pytest.raises(DataError):
            ScoreTensor(bad, None, Aer())

    def test_rejects_wrong_rank(self):
        with pytest.raises(ShapeError):
            ScoreTensor(np.zeros(4), None, Aer())

    def test_dims_must_match_cells(self):
        with pytest.raises(ShapeError):
            ScoreTensor(np.zeros((2, 4)), (1, 3, 1, 1), Aer())

    def test_readonly(self):
        s = ScoreTensor(np.zeros((2, 4)), None, Aer())
        with pytest.raises(ValueError):
            s.scores[0, 0] = 1.0


class TestScores:
    def test_aer_exact_match_is_zero(self):
        p = _uniform_matrix(1, 3, 5)
        assert (score_aer(p, p.copy()).scores == 0.0).all()

    def test_aer_scalar_cell(self):
        s = score_aer(np.array([[0.8]]), np.array([[1.0]]))
        assert s.scores[0, 0] == pytest.approx(0.2)

    def test_aer_matches_naive_loop(self):
        pred = _uniform_matrix(7, 2, 4)
        truth = _uniform_matrix(8, 2, 4)
        s = score_aer(pred, truth, dims=(2, 2, 1, 1))
        for i in range(2):
            for j in range(4):
                assert s.scores[i, j] == abs(truth[i, j] - pred[i, j])
        assert s.dims == (2, 2, 1, 1)

    def test_aer_shape_mismatch(self):
        with pytest.raises(ShapeError):
            score_aer(np.zeros((2, 3)), np.zeros((2, 4)))

    def test_std_zero_at_mean(self):
        mu = _uniform_matrix(2, 3, 4)
        sig = np.full((3, 4), 0.7)
        assert (score_std(mu, sig, mu.copy()).scores == 0.0).all()

    def test_std_hand_value(self):
        s = score_std(np.array([[1.0]]), np.array([[0.5]]), np.array([[2.0]]))
        assert s.scores[0, 0] == pytest.approx(2.0)

    def test_std_sigma_homogeneity(self):
        mu = _uniform_matrix(3, 4, 6)
        truth = _uniform_matrix(4, 4, 6)
        sig = 0.1 + _uniform_matrix(5, 4, 6)
        s1 = score_std(mu, sig, truth).scores
        s2 = score_std(mu, 2.0 * sig, truth).scores
        np.testing.assert_allclose(s2, s1 / 2.0, rtol=1e-12)

    def test_std_floor_enforced(self):
        sig = np.full((2, 2), SIGMA_FLOOR / 2)
        with pytest.raises(DataError):
            score_std(np.zeros((2, 2)), sig, np.ones((2, 2)))

    def test_cqr_inside_is_negative(self):
        s = score_cqr(np.array([[3.0]]), np.array([[4.0]]), np.array([[3.5]]))
        assert s.scores[0, 0] == pytest.approx(-0.5)

    def test_cqr_above_band(self):
        s = score_cqr(np.array([[3.0]]), np.array([[4.0]]), np.array([[5.0]]))
        assert s.scores[0, 0] == pytest.approx(1.0)

    def test_cqr_degenerate_band(self):
        v = np.array([[2.5]])
        assert score_cqr(v, v.copy(), v.copy()).scores[0, 0] == 0.0

    def test_cqr_total_on_crossed_models(self):
        # lo > hi is not an error; the score formula is still well defined
        s = score_cqr(np.array([[4.0]]), np.array([[3.0]]), np.array([[3.5]]))
        assert s.scores[0, 0] == pytest.approx(0.5)


class TestRank:
    def test_reference_values(self):
        assert conformal_rank(1000, 0.1) == 901
        assert conformal_rank(100, 0.1) == 91
        assert conformal_rank(5, 0.05) == 6  # overflow: k > n_cal

    def test_float_guard(self):
        # (19+1)*0.95 = 19.000000000000004 in floats; a bare ceil would
        # overflow the index and declare the band infinite for no reason
        assert conformal_rank(19, 0.05) == 19

    def test_alpha_bounds(self):
        for a in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ConfigError):
                conformal_rank(10, a)

    def test_n_cal_bounds(self):
        with pytest.raises(ConfigError):
            conformal_rank(0, 0.1)

    @given(
        n=st.integers(1, 5000),
        alpha=st.floats(0.001, 0.999),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_exact_ceiling(self, n, alpha):
        # oracle: exact rational ceiling via integer arithmetic on the
        # decimal expansion is overkill; compare against ceil with a much
        # finer guard instead and require k in [1, n+1]
        k = conformal_rank(n, alpha)
        v = (n + 1) * (1.0 - alpha)
        assert 1 <= k <= n + 1
        assert k - 1 < v + 1e-6 and k > v - 1.0 - 1e-6


class TestQuantile:
    def test_constant_scores(self):
        s = ScoreTensor(np.full((10, 3), 0.3), None, Aer())
        qf = conformal_quantile(s, 0.5)
        assert (qf.values.data == 0.3).all()

    def test_rank_statistic_grid(self):
        scores = np.arange(1, 1001).reshape(1000, 1) / 1000.0
        qf = conformal_quantile(ScoreTensor(scores, None, Aer()), 0.1)
        assert qf.values.data.ravel()[0] == pytest.approx(0.901)
        assert qf.n_cal == 1000 and qf.alpha == 0.1

    def test_overflow_gives_inf(self):
        s = ScoreTensor(_uniform_matrix(1, 5, 4), None, Aer())
        qf = conformal_quantile(s, 0.05)
        assert np.isinf(qf.values.data).all()

    def test_ties_count_with_multiplicity(self):
        scores = np.array([0.0, 0.0, 0.0, 1.0]).reshape(4, 1)
        qf = conformal_quantile(ScoreTensor(scores, None, Aer()), 0.5)
        # k = ceil(5 * 0.5) = 3 -> third smallest is still 0
        assert qf.values.data.ravel()[0] == 0.0

    def test_unsorted_input_handled(self):
        scores = np.array([0.9, 0.1, 0.5, 0.3, 0.7]).reshape(5, 1)
        qf = conformal_quantile(ScoreTensor(scores, None, Aer()), 0.4)
        # k = ceil(6 * 0.6) = 4 -> fourth smallest = 0.7
        assert qf.values.data.ravel()[0] == pytest.approx(0.7)

    def test_per_cell_independence(self):
        col0 = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        col1 = np.array([50.0, 40.0, 30.0, 20.0, 10.0])
        s = ScoreTensor(np.column_stack([col0, col1]), None, Aer())
        qf = conformal_quantile(s, 0.4)  # k = 4
        assert qf.values.data.ravel()[0] == 4.0
        assert qf.values.data.ravel()[1] == 40.0

    @given(
        n=st.integers(1, 60),
        cells=st.integers(1, 5),
        alpha=st.floats(0.02, 0.98),
        seed=st.integers(0, 2**32),
    )
    @settings(max_examples=100, deadline=None)
    def test_rank_guarantee(self, n, cells, alpha, seed):
        # at least k calibration scores sit at or below qhat in every cell
        scores = _uniform_matrix(seed, n, cells)
        st_ = ScoreTensor(scores, None, Aer())
        k = conformal_rank(n, alpha)
        qf = conformal_quantile(st_, alpha)
        q = qf.values.data.reshape(-1)
        counts = (scores <= q[None, :]).sum(axis=0)
        assert (counts >= min(k, n)).all()

    @given(
        n=st.integers(1, 40),
        seed=st.integers(0, 2**32),
    )
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_alpha(self, n, seed):
        scores = _uniform_matrix(seed, n, 3)
        st_ = ScoreTensor(scores, None, Aer())
        grid = [0.05, 0.2, 0.5, 0.8, 0.95]
        qs = [conformal_quantile(st_, a).values.data.reshape(-1) for a in grid]
        for q1, q2 in zip(qs, qs[1:]):
            assert (q2 <= q1).all()  # qhat non-increasing in alpha


def _qf(values, alpha, n_cal, method):
    return QuantileField(from_array(np.asarray(values, dtype=float), allow_inf=True),
                         alpha, n_cal, method)


class TestBands:
    def test_aer_band(self):
        qf = _qf([0.2], 0.1, 100, Aer())
        band = build_band(qf, pred=np.array([[1.0]]))
        assert band.lower[0, 0] == pytest.approx(0.8)
        assert band.upper[0, 0] == pytest.approx(1.2)
        assert band.width()[0, 0] == pytest.approx(0.4)

    def test_aer_width_constant_across_samples(self):
        qf = _qf([0.2, 0.5], 0.1, 100, Aer())
        pred = _uniform_matrix(3, 6, 2)
        band = build_band(qf, pred=pred)
        w = band.width()
        np.testing.assert_allclose(w, np.broadcast_to([0.4, 1.0], w.shape), rtol=1e-12)

    def test_std_band(self):
        qf = _qf([1.5], 0.1, 100, Std())
        band = build_band(qf, mu=np.array([[0.0]]), sigma=np.array([[2.0]]))
        assert band.lower[0, 0] == pytest.approx(-3.0)
        assert band.upper[0, 0] == pytest.approx(3.0)

    def test_std_width_tracks_sigma(self):
        qf = _qf([2.0], 0.1, 100, Std())
        mu = np.zeros((2, 1))
        sigma = np.array([[1.0], [3.0]])
        band = build_band(qf, mu=mu, sigma=sigma)
        assert band.width()[0, 0] == pytest.approx(4.0)
        assert band.width()[1, 0] == pytest.approx(12.0)

    def test_cqr_negative_quantile_tightens(self):
        qf = _qf([-0.25], 0.1, 100, Cqr())
        band = build_band(qf, lo=np.array([[3.0]]), hi=np.array([[4.0]]))
        assert band.lower[0, 0] == pytest.approx(3.25)
        assert band.upper[0, 0] == pytest.approx(3.75)

    def test_cqr_sorts_crossed_cells(self):
        # strongly negative qhat can invert the interval; construction sorts
        qf = _qf([-2.0], 0.1, 100, Cqr())
        band = build_band(qf, lo=np.array([[3.0]]), hi=np.array([[4.0]]))
        assert band.lower[0, 0] == pytest.approx(2.0)
        assert band.upper[0, 0] == pytest.approx(5.0)
        assert (band.lower <= band.upper).all()

    def test_tag_mismatch_rejected(self):
        qf = _qf([0.2], 0.1, 100, Aer())
        with pytest.raises(ConfigError):
            build_band(qf, mu=np.array([[0.0]]), sigma=np.array([[1.0]]))
        with pytest.raises(ConfigError):
            build_band(_qf([0.2], 0.1, 100, Std()), pred=np.array([[1.0]]))

    def test_cell_count_mismatch(self):
        qf = _qf([0.2, 0.3], 0.1, 100, Aer())
        with pytest.raises(ShapeError):
            build_band(qf, pred=np.zeros((2, 3)))

    def test_std_band_floor_enforced(self):
        qf = _qf([1.0], 0.1, 100, Std())
        with pytest.raises(DataError):
            build_band(qf, mu=np.zeros((1, 1)), sigma=np.zeros((1, 1)))

    def test_infinite_quantile_infinite_band(self):
        qf = _qf([np.inf], 0.05, 5, Aer())
        band = build_band(qf, pred=np.array([[3.0], [7.0]]))
        assert np.isneginf(band.lower).all()
        assert np.isposinf(band.upper).all()

    def test_band_invariant_checked(self):
        with pytest.raises(DataError):
            PredictionBand(np.array([[1.0]]), np.array([[0.5]]), None, 0.1, 10, Aer())


class TestCoverage:
    def test_all_inside(self):
        band = PredictionBand(np.zeros((4, 3)), np.ones((4, 3)), None, 0.1, 100, Aer())
        rep = empirical_coverage(band, np.full((4, 3), 0.5))
        assert rep.mean_coverage == 1.0
        assert (rep.per_cell.data == 1.0).all()

    def test_all_outside(self):
        band = PredictionBand(np.zeros((4, 3)), np.ones((4, 3)), None, 0.1, 100, Aer())
        rep = empirical_coverage(band, np.full((4, 3), 2.0))
        assert rep.mean_coverage == 0.0

    def test_closed_interval_boundary_counts(self):
        band = PredictionBand(np.zeros((1, 2)), np.ones((1, 2)), None, 0.1, 100, Aer())
        rep = empirical_coverage(band, np.array([[0.0, 1.0]]))
        assert rep.mean_coverage == 1.0

    def test_per_cell_fraction(self):
        band = PredictionBand(np.zeros((4, 1)), np.ones((4, 1)), None, 0.1, 100, Aer())
        truths = np.array([[0.5], [0.5], [2.0], [2.0]])
        rep = empirical_coverage(band, truths)
        assert rep.per_cell.data.ravel()[0] == pytest.approx(0.5)
        assert rep.n_val == 4

    def test_tightness_mean_width(self):
        lower = np.array([[0.0, 0.0]])
        upper = np.array([[1.0, 3.0]])
        band = PredictionBand(lower, upper, None, 0.1, 100, Aer())
        rep = empirical_coverage(band, np.array([[0.5, 0.5]]))
        assert rep.tightness == pytest.approx(2.0)

    def test_tightness_excludes_infinite_cells(self):
        lower = np.array([[0.0, -np.inf]])
        upper = np.array([[1.0, np.inf]])
        band = PredictionBand(lower, upper, None, 0.1, 100, Aer())
        rep = empirical_coverage(band, np.array([[0.5, 123.0]]))
        assert rep.tightness == pytest.approx(1.0)
        assert rep.n_infinite_cells == 1
        assert rep.mean_coverage == 1.0  # infinite band counts as covered

    def test_all_infinite_tightness(self):
        band = PredictionBand(
            np.full((2, 2), -np.inf), np.full((2, 2), np.inf), None, 0.05, 5, Aer()
        )
        rep = empirical_coverage(band, np.full((2, 2), 9.9))
        assert rep.tightness == np.inf
        assert rep.n_infinite_cells == 2
        assert rep.beta.interval == (1.0, 1.0)

    def test_shape_mism(self):
        band = PredictionBand(np.zeros((2, 2)), np.ones((2, 2)), None, 0.1, 100, Aer())
        with pytest.raises(ShapeError):
            empirical_coverage(band, np.zeros((3, 2)))

    def test_report_dict_round(self):
        band = PredictionBand(np.zeros((2, 2)), np.ones((2, 2)), None, 0.1, 100, Aer())
        d = report_as_dict(empirical_coverage(band, np.full((2, 2), 0.5)))
        assert d["method"] == "aer"
        assert d["mean_coverage"] == 1.0
        assert d["beta"]["a"] == 91 and d["beta"]["b"] == 10


class TestCoverageBeta:
    def test_reference_parameters(self):
        law = coverage_beta(1000, 0.1)
        assert (law.a, law.b) == (901, 100)
        assert law.mean == pytest.approx(901.0 / 1001.0, rel=1e-15)

    def test_reference_interval(self):
        law = coverage_beta(1000, 0.1, mass=0.99)
        assert law.interval[0] == pytest.approx(0.87422341649124865, abs=2e-10)
        assert law.interval[1] == pytest.approx(0.92297830457776406, abs=2e-10)

    def test_degenerate_overflow(self):
        law = coverage_beta(5, 0.05)
        assert law.b == 0
        assert law.mean == 1.0
        assert law.interval == (1.0, 1.0)

    def test_small_n_reference(self):
        law = coverage_beta(100, 0.1)
        assert (law.a, law.b) == (91, 10)

    def test_interval_shrinks_with_n(self):
        wide = coverage_beta(250, 0.1, mass=0.99)
        narrow = coverage_beta(1000, 0.1, mass=0.99)
        assert (wide.interval[1] - wide.interval[0]) > (
            narrow.interval[1] - narrow.interval[0]
        )

    def test_mass_validated(self):
        with pytest.raises(ConfigError):
            coverage_beta(100, 0.1, mass=1.0)


class TestSyntheticPipeline:
    def test_uniform_scores_hit_beta_mean(self):
        # i.i.d. Uniform(0,1) scores for calibration and validation; over 20
        # seeded repeats the mean coverage must sit inside the central 99%
        # interval of Beta(901, 100)
        law = coverage_beta(1000, 0.1)
        master = 20250823
        covers = []
        for rep in range(20):
            cal = _uniform_matrix(child_seed(master, 2 * rep), 1000, 25)
            val = _uniform_matrix(child_seed(master, 2 * rep + 1), 1000, 25)
            s = score_aer(np.zeros_like(cal), cal)  # scores == the uniforms
            qf = conformal_quantile(s, 0.1)
            band = build_band(qf, pred=np.zeros_like(val))
            covers.append(empirical_coverage(band, val).mean_coverage)
        mean_cov = float(np.mean(covers))
        assert law.interval[0] <= mean_cov <= law.interval[1]


class TestEquivariance:
    @given(
        seed=st.integers(0, 2**32),
        shift=st.floats(-50.0, 50.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_aer_shift(self, seed, shift):
        # adding c to predictions and truths: scores and widths unchanged
        # (to rounding), bands translated by c
        pred = _uniform_matrix(child_seed(seed, 0), 8, 3)
        truth = _uniform_matrix(child_seed(seed, 1), 8, 3)
        val_pred = _uniform_matrix(child_seed(seed, 2), 4, 3)
        s0 = score_aer(pred, truth)
        s1 = score_aer(pred + shift, truth + shift)
        np.testing.assert_allclose(s1.scores, s0.scores, rtol=1e-9, atol=1e-12)
        b0 = build_band(conformal_quantile(s0, 0.2), pred=val_pred)
        b1 = build_band(conformal_quantile(s1, 0.2), pred=val_pred + shift)
        np.testing.assert_allclose(b1.width(), b0.width(), rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(b1.lower, b0.lower + shift, rtol=1e-9, atol=1e-9)

    @given(
        seed=st.integers(0, 2**32),
        scale=st.floats(0.01, 100.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_std_sigma_scale_leaves_band_fixed(self, seed, scale):
        # sigma -> lambda*sigma scales scores by 1/lambda and qhat by
        # 1/lambda; the band is the invariant, not the quantile
        mu = _uniform_matrix(child_seed(seed, 0), 8, 3)
        truth = _uniform_matrix(child_seed(seed, 1), 8, 3)
        sig = 0.5 + _uniform_matrix(child_seed(seed, 2), 8, 3)
        s0 = score_std(mu, sig, truth)
        s1 = score_std(mu, scale * sig, truth)
        np.testing.assert_allclose(s1.scores, s0.scores / scale, rtol=1e-9)
        q0 = conformal_quantile(s0, 0.2)
        q1 = conformal_quantile(s1, 0.2)
        b0 = build_band(q0, mu=mu, sigma=sig)
        b1 = build_band(q1, mu=mu, sigma=scale * sig)
        np.testing.assert_allclose(b1.lower, b0.lower, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(b1.upper, b0.upper, rtol=1e-9, atol=1e-9)

    @given(seed=st.integers(0, 2**32))
    @settings(max_examples=40, deadline=None)
    def test_band_nestedness_all_methods(self, seed):
        n = 30
        truth = _uniform_matrix(child_seed(seed, 0), n, 4)
        pred = _uniform_matrix(child_seed(seed, 1), n, 4)
        sig = 0.2 + _uniform_matrix(child_seed(seed, 2), n, 4)
        lo_p = pred - 0.3
        hi_p = pred + 0.3
        scores = {
            "aer": score_aer(pred, truth),
            "std": score_std(pred, sig, truth),
            "cqr": score_cqr(lo_p, hi_p, truth),
        }
        outputs = {
            "aer": dict(pred=pred),
            "std": dict(mu=pred, sigma=sig),
            "cqr": dict(lo=lo_p, hi=hi_p),
        }
        for tag, s in scores.items():
            prev = None
            for a in (0.1, 0.3, 0.6, 0.9):
                band = build_band(conformal_quantile(s, a), **outputs[tag])
                if prev is not None:
                    assert (band.lower >= prev.lower - 1e-12).all()
                    assert (band.upper <= prev.upper + 1e-12).all()
                prev = band


class TestSweep:
    def _setup(self, seed=11):
        cal_pred = _uniform_matrix(child_seed(seed, 0), 60, 3)
        cal_truth = _uniform_matrix(child_seed(seed, 1), 60, 3)
        val_pred = _uniform_matrix(child_seed(seed, 2), 40, 3)
        val_truth = _uniform_matrix(child_seed(seed, 3), 40, 3)
        return score_aer(cal_pred, cal_truth), val_pred, val_truth

    def test_single_alpha_equals_direct_call(self):
        scores, val_pred, val_truth = self._setup()
        rows = validation_sweep(scores, val_truth, [0.1], pred=val_pred)
        band = build_band(conformal_quantile(scores, 0.1), pred=val_pred)
        rep = empirical_coverage(band, val_truth)
        assert rows[0].empirical == rep.mean_coverage
        assert rows[0].tightness == rep.tightness
        assert rows[0].beta_lo == rep.beta.interval[0]

    def test_row_fields(self):
        scores, val_pred, val_truth = self._setup()
        rows = validation_sweep(scores, val_truth, [0.1, 0.5, 0.9], pred=val_pred)
        assert [r.alpha for r in rows] == [0.1, 0.5, 0.9]
        for r in rows:
            assert r.target == pytest.approx(1.0 - r.alpha)
            assert 0.0 <= r.empirical <= 1.0
            assert r.tightness >= 0.0
            assert r.beta_lo <= r.beta_hi

    def test_empirical_decreases_with_alpha(self):
        scores, val_pred, val_truth = self._setup()
        rows = validation_sweep(
            scores, val_truth, [0.05, 0.25, 0.5, 0.75, 0.95], pred=val_pred
        )
        emp = [r.empirical for r in rows]
        assert all(e2 <= e1 for e1, e2 in zip(emp, emp[1:]))

    def test_grid_validation(self):
        scores, val_pred, val_truth = self._setup()
        with pytest.raises(ConfigError):
            validation_sweep(scores, val_truth, [], pred=val_pred)
        with pytest.raises(ConfigError):
            validation_sweep(scores, val_truth, [0.5, 0.2], pred=val_pred)
        with pytest.raises(ConfigError):
            validation_sweep(scores, val_truth, [0.0, 0.5], pred=val_pred)

    def test_csv_round_trip(self, tmp_path):
        scores, val_pred, val_truth = self._setup()
        rows = validation_sweep(scores, val_truth, [0.1, 0.9], pred=val_pred)
        path = tmp_path / "sweep.csv"
        sweep_to_csv(rows, path)
        assert read_sweep_csv(path) == rows
        header = path.read_text().splitlines()[0]
        assert header == "alpha,target,empirical,tightness,beta_lo,beta_hi"

    def test_csv_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("alpha,nope\n0.1,0.2\n")
        with pytest.raises(DataError):
            read_sweep_csv(path)

    def test_sweep_deterministic(self):
        scores, val_pred, val_truth = self._setup()
        r1 = validation_sweep(scores, val_truth, [0.1, 0.5], pred=val_pred)
        r2 = validation_sweep(scores, val_truth, [0.1, 0.5], pred=val_pred)
        assert r1 == r2
