"""The statistical battery: inter-arrival extraction, exponentially binned
histograms, fixed-bin count aggregation, autocorrelation, averaged-periodogram
power spectra, straight-line fits in log-log and semilog coordinates, and
count statistics.

Conventions fixed here (all configurable where noted):

* Histogram bins are [0, w) then [w*g^(k-1), w*g^k) with w = 2 us and g = 2
  by default; density(k) = count(k) / (width(k) * total), so density * width
  sums to 1 over any non-empty input.
* The autocorrelation at lag k is sum_i (x_i - m)(x_{i+k} - m) / (s2 (n - k))
  with s2 the population variance, which makes lag 0 exactly 1.
* Spectra are one-sided with the DC bin excluded (aggregate traffic carries a
  strong lowest-frequency contribution that would distort straight-line
  fits). With a rectangular window and a single full-length segment the
  power bins sum to the population variance of the mean-removed series, and
  the spectrum equals the transform of the circularly folded autocovariance.
* For fits on histogram bins the x coordinate is the geometric bin centre
  (bin 0 uses half its upper edge). Bins share a constant upper/lower ratio,
  so this choice shifts intercepts but never slopes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import _kernels
from .errors import StatsError
from .trace import Trace

DEFAULT_FIRST_WIDTH_US = 2.0
DEFAULT_GROWTH = 2.0
DEFAULT_BIN_WIDTH_US = 10_000  # 10 ms aggregation bins
DEFAULT_FIT_LOWER_US = 100.0  # timestamping is only trustworthy above ~0.1 ms
DEFAULT_FIT_MIN_COUNT = 5  # sparse bins at the far end carry no fit weight


class Metric(enum.Enum):
    BYTES_PER_SEC = "bytes_per_sec"
    PACKETS_PER_BIN = "packets_per_bin"
    BYTES_PER_BIN = "bytes_per_bin"


class Window(enum.Enum):
    HANN = "hann"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True, eq=False)
class LogHistogram:
    """Counts on an exponentially growing bin grid with a normalised density.

    The grid is generic: inter-arrival histograms use microseconds, file-size
    scans use bytes. first_width_us retains the microsecond name of its main
    use; read it as 'width of bin 0 in the value unit'.
    """

    first_width_us: float
    growth: float
    lowers: np.ndarray
    uppers: np.ndarray
    counts: np.ndarray
    densities: np.ndarray
    total_events: int

    @property
    def widths(self) -> np.ndarray:
        return self.uppers - self.lowers

    def centers(self) -> np.ndarray:
        """Geometric bin centres (bin 0, whose lower edge is 0, uses half its
        upper edge)."""
        return np.where(self.lowers > 0, np.sqrt(self.lowers * self.uppers), self.uppers / 2)

    def fit_points(self, min_count: int = 1) -> np.ndarray:
        """(x, density) pairs for bins with at least min_count events."""
        keep = self.counts >= min_count
        return np.column_stack((self.centers()[keep], self.densities[keep]))


@dataclass(frozen=True, eq=False)
class CountSeries:
    """Aggregated throughput in fixed-width time bins."""

    bin_width_us: int
    start_us: int
    values: np.ndarray
    metric: Metric

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class AcfSeries:
    """Normalised autocorrelation by lag; values[0] is exactly 1."""

    mean: float
    variance: float
    values: np.ndarray

    @property
    def lags(self) -> np.ndarray:
        return np.arange(len(self.values))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided averaged-periodogram power spectrum, DC excluded."""

    frequencies_hz: np.ndarray
    power: np.ndarray
    segment_length: int
    overlap_fraction: float
    window: Window


@dataclass(frozen=True)
class PowerLawFit:
    """Straight-line fit of log y against log x (fit_power_law) or against
    x itself (fit_exponential). exponent is the slope; for spectra fitted as
    S(f) ~ 1/f^alpha, alpha = -exponent."""

    exponent: float
    log_intercept: float
    r_squared: float
    fit_range: Tuple[float, float]
    points_used: int


class CountStats(NamedTuple):
    mean: float
    variance: float
    fano: Optional[float]  # None when the mean is 0


def inter_arrival_intervals(trace: Trace) -> np.ndarray:
    """Differences between successive timestamps, in microseconds. Ties are
    kept as zero intervals. Empty for traces with fewer than two records."""
    return np.diff(trace.timestamps_us)


def _bin_edges(first_width: float, growth: float, vmax: float) -> np.ndarray:
    edges = [0.0, float(first_width)]
    while edges[-1] <= vmax:
        edges.append(first_width * growth ** (len(edges) - 1))
    return np.asarray(edges)


def log_binned_histogram(
    values,
    first_width: float = DEFAULT_FIRST_WIDTH_US,
    growth: float = DEFAULT_GROWTH,
) -> LogHistogram:
    """Histogram on the exponential grid [0,w), [w, wg), [wg, wg^2), ...

    The grid extends to the smallest bin covering the maximum value (a single
    bin for empty input). Densities are count / (width * total); for an
    empty input they are defined as 0.
    """
    if first_width <= 0:
        raise ValueError("first_width must be positive")
    if growth <= 1:
        raise ValueError("growth must exceed 1")
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size and (not np.all(np.isfinite(values)) or values.min() < 0):
        raise ValueError("values must be finite and non-negative")

    vmax = float(values.max()) if values.size else 0.0
    edges = _bin_edges(first_width, growth, vmax)
    counts = (
        _kernels.bin_counts(values, edges)
        if values.size
        else np.zeros(len(edges) - 1, dtype=np.int64)
    )
    lowers, uppers = edges[:-1], edges[1:]
    total = int(values.size)
    if total:
        densities = counts / ((uppers - lowers) * total)
    else:
        densities = np.zeros_like(lowers)
    return LogHistogram(float(first_width), float(growth), lowers, uppers, counts, densities, total)


def aggregate_counts(
    trace: Trace,
    bin_width_us: int = DEFAULT_BIN_WIDTH_US,
    metric: Metric = Metric.BYTES_PER_SEC,
) -> CountSeries:
    """Aggregate a sparse point process into fixed-width count bins.

    A record at time t lands in bin (t - start) // bin_width_us with start
    the first record's timestamp. BYTES_PER_BIN sums are exact, so total
    bytes are conserved.
    """
    if bin_width_us <= 0:
        raise ValueError("bin_width_us must be positive")
    t = trace.timestamps_us
    if t.size == 0:
        return CountSeries(bin_width_us, 0, np.zeros(0), metric)
    start = int(t[0])
    idx = (t - start) // bin_width_us
    nbins = int(idx[-1]) + 1  # t is sorted, so the last index is the largest
    if metric is Metric.PACKETS_PER_BIN:
        values = np.bincount(idx, minlength=nbins).astype(np.float64)
    else:
        values = np.bincount(idx, weights=trace.frame_sizes, minlength=nbins)
        if metric is Metric.BYTES_PER_SEC:
            values = values * (1e6 / bin_width_us)
    return CountSeries(int(bin_width_us), start, values, metric)


def acf_values(values, max_lag: int) -> AcfSeries:
    """Autocorrelation of a plain value sequence for lags 0..max_lag."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if not 1 <= max_lag < n:
        raise StatsError(f"need 1 <= max_lag < n, got max_lag={max_lag}, n={n}")
    if np.all(x == x[0]):
        raise StatsError("autocorrelation is undefined for a constant series")
    xc = x - x.mean()
    s = _kernels.acf_sums(xc, max_lag)
    # c_k = (s_k / (n - k)) / (s_0 / n), arranged so that c_0 is exactly 1
    lags = np.arange(max_lag + 1)
    c = (s * n) / (s[0] * (n - lags))
    return AcfSeries(float(x.mean()), float(s[0] / n), c)


def autocorrelation(series: CountSeries, max_lag: int) -> AcfSeries:
    """Autocorrelation of an aggregated count series."""
    return acf_values(series.values, max_lag)


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def default_segment_length(n: int) -> int:
    """Largest power of two <= n/4, falling back to <= n for short series."""
    target = max(n // 4, 2)
    seg = 1 << (int(target).bit_length() - 1)
    return min(seg, 1 << (int(n).bit_length() - 1)) if n >= 2 else 0


def welch_psd(
    values,
    dt_seconds: float,
    segment_length: Optional[int] = None,
    overlap_fraction: float = 0.5,
    window: Window = Window.HANN,
) -> Spectrum:
    """Averaged modified periodogram of a plain value sequence.

    The mean of the whole series is removed once; segments advance by
    segment_length * (1 - overlap_fraction); each is windowed, transformed,
    squared and normalised by the window power before averaging. Output is
    one-sided (positive frequencies up to Nyquist, doubled except at
    Nyquist) with the DC bin dropped.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    seg = default_segment_length(n) if segment_length is None else int(segment_length)
    if not _is_pow2(seg):
        raise StatsError(f"segment_length must be a power of two >= 2, got {seg}")
    if seg > n:
        raise StatsError(f"series of length {n} is shorter than segment_length {seg}")
    if not 0 <= overlap_fraction < 1:
        raise StatsError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")

    if window is Window.HANN:
        w = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(seg) / seg))
    else:
        w = np.ones(seg)
    win_power = float(np.dot(w, w))

    xc = x - x.mean()
    step = max(1, int(seg * (1.0 - overlap_fraction)))
    half = seg // 2
    acc = np.zeros(half)
    nseg = 0
    for startpos in range(0, n - seg + 1, step):
        spec = np.abs(np.fft.rfft(xc[startpos : startpos + seg] * w)) ** 2
        one_sided = spec[1 : half + 1].copy()
        one_sided[:-1] *= 2.0  # double everything except the Nyquist bin
        acc += one_sided
        nseg += 1
    power = acc / (nseg * win_power * seg)
    freqs = np.arange(1, half + 1) / (seg * dt_seconds)
    return Spectrum(freqs, power, seg, float(overlap_fraction), window)


def power_spectrum(
    series: CountSeries,
    segment_length: Optional[int] = None,
    overlap_fraction: float = 0.5,
    window: Window = Window.HANN,
) -> Spectrum:
    """Power spectrum of an aggregated count series; frequencies in Hz."""
    return welch_psd(
        series.values,
        series.bin_width_us * 1e-6,
        segment_length=segment_length,
        overlap_fraction=overlap_fraction,
        window=window,
    )


def _line_fit(xs, ys, fit_range, points_used) -> PowerLawFit:
    xm, ym = xs.mean(), ys.mean()
    sxx = float(np.sum((xs - xm) ** 2))
    syy = float(np.sum((ys - ym) ** 2))
    sxy = float(np.sum((xs - xm) * (ys - ym)))
    if sxx == 0.0:
        raise StatsError("degenerate fit: all x values coincide")
    slope = sxy / sxx
    intercept = ym - slope * xm
    r2 = 1.0 if syy == 0.0 else min(max(sxy * sxy / (sxx * syy), 0.0), 1.0)
    return PowerLawFit(slope, intercept, r2, fit_range, points_used)


def _select(points, fit_range, log_x: bool):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    lo, hi = (-np.inf, np.inf) if fit_range is None else fit_range
    keep = np.isfinite(x) & np.isfinite(y) & (y > 0) & (x >= lo) & (x <= hi)
    if log_x:
        keep &= x > 0
    if int(keep.sum()) < 3:
        raise StatsError(
            f"need at least 3 qualifying points inside fit_range, have {int(keep.sum())}"
        )
    return x[keep], y[keep], (float(lo), float(hi))


def fit_power_law(points, fit_range: Optional[Tuple[float, float]] = None) -> PowerLawFit:
    """Ordinary least squares of log y on log x over qualifying points
    (positive x and y inside fit_range). A density following b * x^g comes
    back with exponent g and log_intercept ln(b)."""
    x, y, rng = _select(points, fit_range, log_x=True)
    return _line_fit(np.log(x), np.log(y), rng, len(x))


def fit_exponential(points, fit_range: Optional[Tuple[float, float]] = None) -> PowerLawFit:
    """Ordinary least squares of log y on x (semilog). A density following
    b * exp(g x) comes back with exponent g per x unit. Used to test whether
    a tail is exponential rather than polynomial."""
    x, y, rng = _select(points, fit_range, log_x=False)
    return _line_fit(x, np.log(y), rng, len(x))


def count_statistics(series: CountSeries) -> CountStats:
    """Population mean and variance of the bin values, and their ratio (the
    Fano factor; 1 for Poisson counts). Fano is None when the mean is 0."""
    v = series.values
    if v.size == 0:
        raise StatsError("count statistics are undefined for an empty series")
    mean = float(v.mean())
    var = float(v.var())
    fano = var / mean if mean != 0 else None
    return CountStats(mean, var, fano)
