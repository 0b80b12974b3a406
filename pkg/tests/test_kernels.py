"""Backend equivalence: every kernel's numba and numpy paths must agree
(bit-exact for the integer kernels, to rounding for the float one)."""

import numpy as np
import pytest

from etherstat import _kernels


requires_numba = pytest.mark.skipif(
    not _kernels.USE_NUMBA, reason="numba backend not active"
)


def test_backend_reports_active_path():
    assert _kernels.backend() in ("numba", "numpy")


@requires_numba
def test_bin_counts_paths_agree():
    rng = np.random.default_rng(0)
    values = rng.exponential(1000.0, 200_000)
    edges = np.concatenate(([0.0], 2.0 * 2.0 ** np.arange(40)))
    a = _kernels._bin_counts_numpy(values, edges)
    b = _kernels._bin_counts_numba(values, edges)
    assert np.array_equal(a, b)
    assert a.sum() == values.size


@requires_numba
def test_acf_sums_paths_agree():
    rng = np.random.default_rng(1)
    xc = rng.standard_normal(50_000)
    xc -= xc.mean()
    a = _kernels._acf_sums_numpy(xc, 200)
    b = _kernels._acf_sums_numba(xc, 200)
    assert np.allclose(a, b, rtol=1e-10, atol=0)


@requires_numba
def test_schedule_frames_paths_agree():
    rng = np.random.default_rng(2)
    epochs = np.sort(rng.integers(0, 10**8, 5000)).astype(np.int64)
    batches = rng.integers(1, 6, 5000).astype(np.int64)
    busy = rng.integers(5, 150, int(batches.sum())).astype(np.int64)
    a = _kernels._schedule_frames_numpy(epochs, batches, busy)
    b = _kernels._schedule_frames_numba(epochs, batches, busy)
    assert np.array_equal(a, b)


def test_schedule_frames_hand_example():
    # batch 0 at t=0 with two 10 us frames, batch 1 asks for t=5 but the
    # link is busy until 20
    epochs = np.array([0, 5], dtype=np.int64)
    batches = np.array([2, 1], dtype=np.int64)
    busy = np.array([10, 10, 10], dtype=np.int64)
    out = _kernels.schedule_frames(epochs, batches, busy)
    assert out.tolist() == [0, 10, 20]


def test_schedule_frames_no_clamp_when_idle():
    epochs = np.array([0, 100, 250], dtype=np.int64)
    batches = np.array([1, 1, 1], dtype=np.int64)
    busy = np.array([10, 10, 10], dtype=np.int64)
    out = _kernels.schedule_frames(epochs, batches, busy)
    assert out.tolist() == [0, 100, 250]


def test_schedule_frames_empty():
    e = np.zeros(0, dtype=np.int64)
    out = _kernels.schedule_frames(e, e.copy(), e.copy())
    assert out.size == 0


def test_bin_counts_edge_values_go_right():
    # values on an edge belong to the bin whose lower edge they equal
    values = np.array([0.0, 2.0, 4.0, 7.999, 8.0])
    edges = np.array([0.0, 2.0, 4.0, 8.0, 16.0])
    counts = _kernels.bin_counts(values, edges)
    assert counts.tolist() == [1, 1, 2, 1]
