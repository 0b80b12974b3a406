"""Hot numeric kernels with two interchangeable backends.

The loops here dominate runtime on large traces (binning millions of
intervals, lag sums over long count series, scheduling batched frames).
Each kernel has a numba @njit implementation and a vectorised pure-numpy
fallback. Selection is controlled by the ETHERSTAT_BACKEND environment
variable:

    ETHERSTAT_BACKEND=numba   require numba (ImportError if missing)
    ETHERSTAT_BACKEND=numpy   force the pure-numpy path
    unset / auto              numba when importable, numpy otherwise

Integer kernels produce bit-identical results on both backends; the
float kernel (lag sums) agrees to rounding error. benchmarks/
bench_kernels.py times the two paths side by side.
"""

import os

import numpy as np

_choice = os.environ.get("ETHERSTAT_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"ETHERSTAT_BACKEND must be 'auto', 'numba' or 'numpy', got {_choice!r}"
    )

_HAVE_NUMBA = False
if _choice != "numpy":
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise

USE_NUMBA = _HAVE_NUMBA


def backend() -> str:
    """Name of the active backend ('numba' or 'numpy')."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# bin_counts: histogram counting on a monotone edge grid.
# edges[0] <= min(values), edges[-1] > max(values); bin k is [edges[k], edges[k+1]).


def _bin_counts_numpy(values, edges):
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.bincount(idx, minlength=edges.shape[0] - 1).astype(np.int64)


def _bin_counts_loop(values, edges):
    counts = np.zeros(edges.shape[0] - 1, dtype=np.int64)
    for i in range(values.shape[0]):
        v = values[i]
        lo = 0
        hi = edges.shape[0]
        # rightmost bin whose lower edge is <= v
        while lo < hi:
            mid = (lo + hi) // 2
            if edges[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        counts[lo - 1] += 1
    return counts


# ---------------------------------------------------------------------------
# acf_sums: s[k] = sum_i xc[i] * xc[i+k] for k = 0..max_lag (xc mean-removed).


def _acf_sums_numpy(xc, max_lag):
    n = xc.shape[0]
    s = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        s[k] = np.dot(xc[: n - k], xc[k:])
    return s


def _acf_sums_loop(xc, max_lag):
    n = xc.shape[0]
    s = np.zeros(max_lag + 1)
    for k in range(max_lag + 1):
        acc = 0.0
        for i in range(n - k):
            acc += xc[i] * xc[i + k]
        s[k] = acc
    return s


# ---------------------------------------------------------------------------
# schedule_frames: place batched frames on a shared link.
#
# Batch b wants to start at epochs[b] but no earlier than the link becomes
# free; frames inside a batch follow back to back, each occupying the wire
# for busy[j] microseconds (busy is flattened across batches, one entry per
# frame). All arithmetic is int64, so both backends agree exactly.


def _schedule_frames_numpy(epochs, batch_sizes, busy):
    cum = np.concatenate((np.zeros(1, np.int64), np.cumsum(busy)))
    first = np.concatenate((np.zeros(1, np.int64), np.cumsum(batch_sizes)))[:-1]
    before = cum[first]  # busy time of all frames before batch b
    # start_b = max(epochs_b, end_{b-1}) unrolled into a running maximum
    starts = np.maximum.accumulate(epochs - before) + before
    return np.repeat(starts - cum[first], batch_sizes) + cum[:-1]


def _schedule_frames_loop(epochs, batch_sizes, busy):
    out = np.empty(busy.shape[0], dtype=np.int64)
    j = 0
    free_at = np.int64(0)
    for b in range(epochs.shape[0]):
        t = epochs[b] if epochs[b] > free_at else free_at
        for _ in range(batch_sizes[b]):
            out[j] = t
            t += busy[j]
            j += 1
        free_at = t
    return out


if USE_NUMBA:
    _bin_counts_numba = njit(cache=True)(_bin_counts_loop)
    # fastmath lets LLVM vectorise the reduction; sums may differ from the
    # numpy path in the last couple of bits, which the normalisation in
    # stats.acf_values tolerates (lag 0 stays exactly 1 either way)
    _acf_sums_numba = njit(cache=True, fastmath=True)(_acf_sums_loop)
    _schedule_frames_numba = njit(cache=True)(_schedule_frames_loop)

    bin_counts = _bin_counts_numba
    acf_sums = _acf_sums_numba
    schedule_frames = _schedule_frames_numba
else:
    bin_counts = _bin_counts_numpy
    acf_sums = _acf_sums_numpy
    schedule_frames = _schedule_frames_numpy


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs so later calls are pure compute."""
    v = np.array([0.5, 1.5], dtype=np.float64)
    e = np.array([0.0, 1.0, 2.0], dtype=np.float64)
    bin_counts(v, e)
    acf_sums(np.array([1.0, -1.0, 1.0, -1.0]), 1)
    schedule_frames(
        np.array([0, 10], dtype=np.int64),
        np.array([1, 2], dtype=np.int64),
        np.array([5, 5, 5], dtype=np.int64),
    )
