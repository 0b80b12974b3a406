import io

import numpy as np
import pytest

from etherstat.ingest import write_canonical
from etherstat.stats import (
    fit_exponential,
    fit_power_law,
    inter_arrival_intervals,
    log_binned_histogram,
)
from etherstat.synth import (
    DEFAULT_SIZE_MODEL,
    MmppSpec,
    SizeModel,
    gen_back_to_back,
    gen_mmcpp,
    gen_mmpp,
    gen_pareto_renewal,
    gen_poisson,
    stationary_distribution,
)
from etherstat.trace import validate_timestamps


def canonical_bytes(trace) -> str:
    buf = io.StringIO()
    write_canonical(trace, buf)
    return buf.getvalue()


def ks_two_sample(a, b) -> float:
    # plain empirical-CDF supremum distance
    a, b = np.sort(a), np.sort(b)
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_critical_95(n: int, m: int) -> float:
    return 1.358 * np.sqrt((n + m) / (n * m))


class TestStationaryDistribution:
    def test_two_state_hand_balance(self):
        # pi solves pi0 * q01 = pi1 * q10 -> pi = (q10, q01) / (q01 + q10)
        pi = stationary_distribution([[-1.0, 1.0], [2.0, -2.0]])
        assert pi == pytest.approx([2 / 3, 1 / 3], abs=1e-12)

    @pytest.mark.parametrize("a", [0.1, 1.0, 7.5])
    def test_symmetric_is_half_half(self, a):
        pi = stationary_distribution([[-a, a], [a, -a]])
        assert pi == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_single_state(self):
        assert stationary_distribution([[0.0]]) == pytest.approx([1.0])

    def test_reducible_rejected(self):
        with pytest.raises(ValueError):
            stationary_distribution([[0.0, 0.0], [1.0, -1.0]])

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            stationary_distribution([[-1.0, 1.0]])


class TestSizeModel:
    def test_fixed(self):
        m = SizeModel.fixed(1500)
        assert m.sample(np.random.default_rng(0), 5).tolist() == [1500] * 5

    def test_mixture_probabilities_checked(self):
        with pytest.raises(ValueError):
            SizeModel.mixture([(64, 0.5), (1500, 0.6)])

    def test_bounds_checked(self):
        with pytest.raises(ValueError):
            SizeModel.fixed(30)
        assert SizeModel.fixed(30, bounds=(1, 65535)).sizes == (30,)

    def test_uniform_range(self):
        m = SizeModel.uniform(100, 200)
        s = m.sample(np.random.default_rng(1), 1000)
        assert s.min() >= 100 and s.max() <= 200

    def test_mixture_frequencies(self):
        s = DEFAULT_SIZE_MODEL.sample(np.random.default_rng(2), 20_000)
        frac64 = float(np.mean(s == 64))
        assert frac64 == pytest.approx(0.6, abs=0.02)
        assert set(np.unique(s)) == {64, 1500}


class TestPoisson:
    def test_count_matches_poisson_oracle(self):
        # N ~ Poisson(rate * duration): 1e5 +/- 4 sqrt(1e5)
        trace = gen_poisson(1000.0, 100.0, seed=17)
        assert abs(len(trace) - 100_000) <= 4 * np.sqrt(100_000)

    def test_tiny_duration_usually_empty(self):
        trace = gen_poisson(1.0, 0.001, seed=3)
        assert len(trace) >= 0  # always a valid trace
        assert len(validate_timestamps(trace)) == 0 or len(trace) > 0

    def test_seed_reproducibility(self):
        a = canonical_bytes(gen_poisson(1000.0, 2.0, seed=7))
        b = canonical_bytes(gen_poisson(1000.0, 2.0, seed=7))
        assert a == b
        c = canonical_bytes(gen_poisson(1000.0, 2.0, seed=8))
        assert a != c

    def test_bad_args(self):
        with pytest.raises(ValueError):
            gen_poisson(0.0, 1.0, 0)
        with pytest.raises(ValueError):
            gen_poisson(10.0, 0.0, 0)


TWO_STATE = MmppSpec((10.0, 100.0), ((-1.0, 1.0), (2.0, -2.0)))


class TestMmpp:
    def test_mean_rate_oracle(self):
        # long-run rate = pi . rates = (2/3) 10 + (1/3) 100 = 40/s
        trace = gen_mmpp(TWO_STATE, 1000.0, seed=1)
        assert abs(len(trace) - 40_000) <= 4_000

    def test_equal_rates_indistinguishable_from_poisson(self):
        lam = 50.0
        spec = MmppSpec((lam, lam), ((-1.0, 1.0), (1.0, -1.0)),
                        size_model=SizeModel.fixed(64))
        a = inter_arrival_intervals(gen_mmpp(spec, 210.0, seed=4))[:10_000]
        b = inter_arrival_intervals(
            gen_poisson(lam, 210.0, seed=5, size_model=SizeModel.fixed(64))
        )[:10_000]
        assert a.size == b.size == 10_000
        assert ks_two_sample(a, b) < ks_critical_95(a.size, b.size)

    def test_one_state_matches_poisson_distribution(self):
        spec = MmppSpec((80.0,), ((0.0,),), size_model=SizeModel.fixed(64))
        a = inter_arrival_intervals(gen_mmpp(spec, 130.0, seed=6))[:8_000]
        b = inter_arrival_intervals(
            gen_poisson(80.0, 130.0, seed=7, size_model=SizeModel.fixed(64))
        )[:8_000]
        assert a.size == b.size == 8_000
        assert ks_two_sample(a, b) < ks_critical_95(a.size, b.size)

    def test_requires_unit_batch_parameter(self):
        spec = MmppSpec((10.0, 100.0), ((-1.0, 1.0), (2.0, -2.0)), batch_geometric_p=0.5)
        with pytest.raises(ValueError):
            gen_mmpp(spec, 1.0, 0)

    def test_all_outputs_feasible(self):
        trace = gen_mmpp(TWO_STATE, 100.0, seed=2)
        assert len(validate_timestamps(trace)) == 0

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            MmppSpec((10.0,), ((-1.0, 1.0), (2.0, -2.0)))  # shape mismatch
        with pytest.raises(ValueError):
            MmppSpec((10.0, 20.0), ((-1.0, 0.5), (2.0, -2.0)))  # rows not zero
        with pytest.raises(ValueError):
            MmppSpec((10.0, 20.0), ((1.0, -1.0), (-2.0, 2.0)))  # negative off-diag
        with pytest.raises(ValueError):
            MmppSpec((0.0, 0.0), ((-1.0, 1.0), (2.0, -2.0)))  # no positive rate


class TestMmcpp:
    def test_p1_identical_to_mmpp(self):
        spec = MmppSpec((10.0, 100.0), ((-1.0, 1.0), (2.0, -2.0)), batch_geometric_p=1.0)
        assert canonical_bytes(gen_mmcpp(spec, 40.0, seed=9)) == canonical_bytes(
            gen_mmpp(spec, 40.0, seed=9)
        )

    def test_geometric_batch_mean(self):
        # epochs at ~500/s for 25 s -> ~12500 epochs; mean batch 1/p = 2
        spec = MmppSpec((500.0, 500.0), ((-1.0, 1.0), (1.0, -1.0)),
                        batch_geometric_p=0.5, size_model=SizeModel.fixed(64))
        trace = gen_mmcpp(spec, 25.0, seed=10)
        expected_epochs = 500.0 * 25.0
        ratio = len(trace) / expected_epochs
        assert 1.9 <= ratio <= 2.1

    def test_output_always_feasible(self):
        spec = MmppSpec((200.0, 2000.0), ((-2.0, 2.0), (2.0, -2.0)),
                        batch_geometric_p=0.3)
        trace = gen_mmcpp(spec, 20.0, seed=11)
        assert len(trace) > 0
        assert len(validate_timestamps(trace)) == 0


class TestParetoRenewal:
    def test_tail_probability_oracle(self):
        # CCDF(x) = (x / x_min)^-a for Pareto with scale x_min; intervals are
        # rounded to whole us, so iv > 1000 means the raw draw exceeded 1000.5
        n = 100_000
        trace = gen_pareto_renewal(1.5, 100, 45.0, seed=1)
        iv = inter_arrival_intervals(trace)[:n]
        assert iv.size == n
        p = (1000.5 / 100.0) ** -1.5
        sigma = np.sqrt(p * (1 - p) / n)
        assert abs(np.mean(iv > 1000) - p) <= 3 * sigma

    def test_minimum_gap_always_respected(self):
        iv = inter_arrival_intervals(gen_pareto_renewal(1.5, 100, 2.0, seed=13))
        assert iv.min() >= 100

    def test_seed_reproducibility(self):
        a = canonical_bytes(gen_pareto_renewal(1.5, 100, 1.0, seed=14))
        b = canonical_bytes(gen_pareto_renewal(1.5, 100, 1.0, seed=14))
        assert a == b

    def test_bad_args(self):
        with pytest.raises(ValueError):
            gen_pareto_renewal(0.0, 100, 1.0, 0)
        with pytest.raises(ValueError):
            gen_pareto_renewal(1.5, 0, 1.0, 0)


class TestBackToBack:
    def test_exact_line_rate_gaps(self):
        trace = gen_back_to_back(1500, 10)
        gaps = np.diff(trace.timestamps_us)
        assert np.all(gaps == 121)  # ceil((1500 + 12) * 8e6 / 1e8)

    def test_zero_count(self):
        assert len(gen_back_to_back(1500, 0)) == 0

    def test_validator_finds_nothing(self):
        assert len(validate_timestamps(gen_back_to_back(64, 1000))) == 0

    def test_other_link_rate(self):
        trace = gen_back_to_back(1500, 3, link_rate_bps=1_000_000_000)
        assert np.all(np.diff(trace.timestamps_us) == 13)  # ceil(12.096)


class TestTailShapes:
    """A modulated-Poisson stream has an exponential inter-arrival tail, a
    Pareto renewal stream a polynomial one. Where the slow mode carries most
    of the arrival mass the distinction is visible between the sample median
    and the 99.9th percentile: a semilog line beats a log-log line for the
    former and loses for the latter."""

    def _tail_r2(self, intervals):
        lo = float(np.median(intervals))
        hi = float(np.quantile(intervals, 0.999))
        hist = log_binned_histogram(intervals)
        pts = hist.fit_points(min_count=5)
        semi = fit_exponential(pts, (lo, hi))
        loglog = fit_power_law(pts, (lo, hi))
        return semi.r_squared, loglog.r_squared

    def test_mmpp_tail_is_exponential(self):
        spec = MmppSpec((10.0, 1000.0), ((-0.02, 0.02), (5.0, -5.0)),
                        size_model=SizeModel.fixed(64))
        trace = gen_mmpp(spec, 7500.0, seed=20260810)
        iv = inter_arrival_intervals(trace)[:100_000]
        assert iv.size == 100_000
        r2_semi, r2_log = self._tail_r2(iv)
        assert r2_semi > r2_log

    def test_pareto_tail_is_polynomial(self):
        trace = gen_pareto_renewal(1.5, 100, 45.0, seed=12)
        iv = inter_arrival_intervals(trace)[:100_000]
        r2_semi, r2_log = self._tail_r2(iv)
        assert r2_log > r2_semi


def test_generated_traces_satisfy_trace_invariants():
    for trace in (
        gen_poisson(500.0, 1.0, 0),
        gen_mmpp(TWO_STATE, 5.0, 0),
        gen_pareto_renewal(1.2, 50, 1.0, 0),
        gen_back_to_back(64, 100),
    ):
        t = trace.timestamps_us
        assert t.size == 0 or t[0] >= 0
        assert np.all(np.diff(t) >= 0)
        assert "rng=pcg64" in trace.capture_label
