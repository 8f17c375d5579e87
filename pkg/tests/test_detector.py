import numpy as np
import pytest

from detector import (
    DetectorConfig,
    NullPolicy,
    TrendFit,
    critical_value,
    detect,
    detect_series,
    fit_null,
    fit_trend,
)
from errors import ConfigError, DegenerateNullError
from graph_core import DynamicNetwork
from graph_stats import StatisticId, StatisticSeries
from synthgen import EdgeCountRange, distribution_of, sample_snapshot, sample_stream, trial_rng, two_block_spec

Z975 = 1.959964


def series_of(values, stat=StatisticId.TP, t0=0):
    return StatisticSeries(stat, tuple(range(t0, t0 + len(values))), tuple(values))


class TestFitTrend:
    def test_exact_line(self):
        trend = fit_trend(series_of([1.0, 2.0, 3.0]), [0, 1, 2], "linear")
        assert trend.intercept == pytest.approx(1.0)
        assert trend.slope == pytest.approx(1.0)

    def test_none_is_zero(self):
        assert fit_trend(series_of([4.0, 9.0, 1.0]), [0, 1, 2], "none") == TrendFit(0.0, 0.0)

    def test_constant(self):
        trend = fit_trend(series_of([5.0, 5.0]), [0, 1], "linear")
        assert trend.intercept == pytest.approx(5.0)
        assert trend.slope == pytest.approx(0.0, abs=1e-12)

    def test_needs_two_distinct_times(self):
        with pytest.raises(ConfigError):
            fit_trend(series_of([1.0, 2.0, 3.0]), [1], "linear")

    def test_only_learning_points_used(self):
        trend = fit_trend(series_of([0.0, 1.0, 2.0, 100.0]), [0, 1, 2], "linear")
        assert trend.slope == pytest.approx(1.0)

    def test_residuals_sum_to_zero(self, rng):
        values = rng.normal(size=40) + 0.3 * np.arange(40)
        trend = fit_trend(series_of(values), range(40), "linear")
        residuals = values - trend(np.arange(40))
        assert abs(residuals.sum()) <= 1e-9


class TestFitNull:
    def test_standard_normal_thresholds(self, rng):
        values = rng.normal(size=500)
        values = (values - values.mean()) / values.std(ddof=1)
        null = fit_null(values, 0.05)
        assert null.phi_lower == pytest.approx(-Z975, abs=1e-6)
        assert null.phi_upper == pytest.approx(Z975, abs=1e-6)

    def test_three_values(self):
        null = fit_null([-1.0, 0.0, 1.0], 0.05)
        assert null.mean == pytest.approx(0.0)
        assert null.sd == pytest.approx(1.0)
        assert (null.phi_lower, null.phi_upper) == pytest.approx((-Z975, Z975), abs=1e-6)

    def test_constant_values(self):
        with pytest.raises(DegenerateNullError) as info:
            fit_null([2.0, 2.0, 2.0, 2.0], 0.05, "MSC")
        assert info.value.statistic == "MSC"
        assert "MSC" in str(info.value)

    def test_too_few_values(self):
        with pytest.raises(ConfigError):
            fit_null([1.0, 2.0], 0.05)

    @pytest.mark.parametrize("alpha, z", [(0.05, 1.959964), (0.01, 2.575829), (0.10, 1.644854)])
    def test_critical_value(self, alpha, z):
        assert critical_value(alpha) == pytest.approx(z, abs=1e-6)

    def test_z_agrees_with_thresholds(self, rng):
        null = fit_null(rng.normal(size=50), 0.05)
        for x in rng.normal(scale=3, size=200):
            assert null.rejects(x) == (abs(null.z_score(x)) > null.z_crit)


class TestNullPolicy:
    def test_parse_loo(self):
        assert NullPolicy.parse("loo").kind == "loo"

    def test_parse_range(self):
        policy = NullPolicy.parse("learning:3..6")
        assert policy.learning_ts == (3, 4, 5, 6)
        assert str(policy) == "learning:3..6"

    def test_parse_list(self):
        assert NullPolicy.parse("learning:5,1,3").learning_ts == (1, 3, 5)

    @pytest.mark.parametrize("text", ["learning:", "learning:9..2", "window:1..3", "learning:a..b"])
    def test_parse_invalid(self, text):
        with pytest.raises(ConfigError):
            NullPolicy.parse(text)


class TestDetectorConfig:
    @pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5, -0.1])
    def test_alpha_range(self, alpha):
        with pytest.raises(ConfigError, match="alpha"):
            DetectorConfig(alpha=alpha)

    def test_rejects_unknown_detrend(self):
        with pytest.raises(ConfigError):
            DetectorConfig(detrend="quadratic")

    def test_deduplicates_statistics(self):
        cfg = DetectorConfig(statistics=(StatisticId.MS, StatisticId.TP, StatisticId.MS))
        assert cfg.statistics == (StatisticId.MS, StatisticId.TP)


class TestDetectSeries:
    VALUES = [1.0, 1.1, 0.9, 1.0, 1.05, 0.95, 1.02, 0.98, 5.0, 1.0]

    def test_learning_window_flags_perturbed_point(self):
        learning = [t for t in range(10) if t != 8]
        cfg = DetectorConfig(null_policy=NullPolicy.learning(learning))
        report = detect_series(series_of(self.VALUES), cfg)
        assert report.flagged_times == (8,)
        assert report.null is not None
        assert report.rows[8].z == pytest.approx(max(abs(r.z) for r in report.rows))

    def test_leave_one_out_flags_perturbed_point(self):
        report = detect_series(series_of(self.VALUES), DetectorConfig())
        assert report.flagged_times == (8,)
        assert report.null is None and report.trend is None

    def test_leave_one_out_linear_trend(self, rng):
        values = 2.0 + 0.5 * np.arange(30) + rng.normal(scale=0.1, size=30)
        values[10] += 5.0
        report = detect_series(series_of(values), DetectorConfig(detrend="linear"))
        assert report.flagged_times == (10,)

    def test_flag_matches_thresholds(self, rng):
        report = detect_series(series_of(rng.standard_t(3, size=60)), DetectorConfig())
        for row in report.rows:
            outside = row.detrended < row.lower or row.detrended > row.upper
            assert row.flagged == outside

    @pytest.mark.parametrize("scale, shift", [(1000.0, -2.0), (-3.0, 7.0), (1e-6, 0.5)])
    def test_affine_invariance(self, rng, scale, shift):
        values = rng.normal(size=80)
        values[[5, 40]] += [4.0, -3.5]
        for cfg in (DetectorConfig(), DetectorConfig(null_policy=NullPolicy.learning(range(0, 80, 2)))):
            base = detect_series(series_of(values), cfg)
            moved = detect_series(series_of(scale * values + shift), cfg)
            assert moved.flagged_times == base.flagged_times

    def test_leave_one_out_ignores_tested_value(self, rng):
        values = rng.normal(size=25)
        changed = values.copy()
        changed[12] = 50.0
        first = detect_series(series_of(values), DetectorConfig()).rows[12]
        second = detect_series(series_of(changed), DetectorConfig()).rows[12]
        assert (first.lower, first.upper) == (second.lower, second.upper)
        assert second.flagged

    def test_skipped_steps(self):
        values = [1.0, None, 1.2, 0.8, 1.1, None, 0.9]
        report = detect_series(series_of(values), DetectorConfig())
        assert report.skipped_times == (1, 5)
        assert not any(r.flagged for r in report.rows if r.skipped)
        assert [r.t for r in report.rows] == list(range(7))

    def test_learning_window_outside_series(self):
        cfg = DetectorConfig(null_policy=NullPolicy.learning([0, 1, 2]))
        series = series_of([1.0, 2.0, 1.5, 1.2], stat=StatisticId.MS, t0=1)
        with pytest.raises(ConfigError, match="t=0"):
            detect_series(series, cfg)

    def test_degenerate_leave_one_out(self):
        with pytest.raises(DegenerateNullError):
            detect_series(series_of([1.0, 1.0, 1.0, 1.0, 3.0]), DetectorConfig())


class TestDetect:
    def test_report_per_statistic(self, rng):
        d = distribution_of(two_block_spec(12, 2.0, 1.0))
        net = sample_stream(d, EdgeCountRange(200, 400), 30, rng)
        cfg = DetectorConfig(statistics=(StatisticId.GED, StatisticId.TP))
        report = detect(net, cfg)
        assert [r.statistic for r in report.results] == [StatisticId.GED, StatisticId.TP]
        assert [r.t for r in report[StatisticId.GED].rows] == list(range(1, 30))
        assert [r.t for r in report[StatisticId.TP].rows] == list(range(30))

    def test_deterministic(self):
        d = distribution_of(two_block_spec(12, 2.0, 1.0))
        net = sample_stream(d, EdgeCountRange(200, 400), 20, trial_rng(1))
        cfg = DetectorConfig(statistics=(StatisticId.MS_CORRECTED, StatisticId.DS))
        assert detect(net, cfg) == detect(net, cfg)


def _mixed_density_stream(seed):
    """100 steps at 7k-10k edges, then 100 steps at 1k-10k, one fixed P."""
    d = distribution_of(two_block_spec(50, 2.0, 1.0))
    rng = trial_rng(seed)
    stable, mixed = EdgeCountRange(7000, 10000), EdgeCountRange(1000, 10000)
    snaps = [
        sample_snapshot(d, (stable if t < 100 else mixed).draw(rng), rng, t) for t in range(200)
    ]
    return DynamicNetwork(tuple(snaps), 50)


@pytest.mark.slow
class TestCalibration:
    def test_consistent_statistics_flag_rate(self):
        d = distribution_of(two_block_spec(50, 2.0, 1.0))
        cfg = DetectorConfig(
            statistics=(StatisticId.MS_CORRECTED, StatisticId.DS_CORRECTED, StatisticId.TP)
        )
        flags = {stat: [] for stat in cfg.statistics}
        for seed in range(20):
            net = sample_stream(d, EdgeCountRange(7000, 10000), 200, trial_rng(100, seed))
            report = detect(net, cfg)
            for stat in cfg.statistics:
                flags[stat].extend(r.flagged for r in report[stat].rows)
        for stat, flagged in flags.items():
            assert 0.03 <= np.mean(flagged) <= 0.07, stat

    def test_edit_distance_false_positives(self):
        cfg = DetectorConfig(
            statistics=(StatisticId.GED,), null_policy=NullPolicy.parse("learning:1..99")
        )
        report = detect(_mixed_density_stream(7), cfg)
        tested = [r.flagged for r in report[StatisticId.GED].rows if r.t >= 100]
        assert np.mean(tested) > 0.10
