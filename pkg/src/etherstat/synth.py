"""Deterministic, seedable traffic generators.

Five families: Poisson renewal, Markov-modulated Poisson (MMPP), its batched
variant (MMCPP, geometric batch sizes), heavy-tailed Pareto renewal, and a
line-rate back-to-back stream.

All generators draw from numpy's PCG64 stream, so a (generator, seed) pair
produces a byte-identical canonical serialisation across runs; the algorithm
is recorded in the trace label. Timestamps are rounded to the 1 us trace
resolution; resulting zero gaps are kept (downstream statistics treat ties
as real).

Modulated arrivals (MMPP/MMCPP) are placed by a line-rate scheduler: an
arrival epoch may not start before the wire has finished the previous frame
plus its interframe gap, and frames within a compound batch follow back to
back. Queueing at the line rate keeps every generated trace physically
feasible (validate_timestamps finds nothing) and makes the batched generator
with p = 1 reproduce the plain MMPP exactly. Pure renewal generators
(Poisson, Pareto) place arrivals as drawn, without the scheduler.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .trace import (
    DEFAULT_LINK_RATE_BPS,
    IFG_BYTES,
    Direction,
    PacketRecord,
    Protocol,
    Trace,
    frame_busy_us,
)

_RNG_NAME = "pcg64"
_SRC, _SRC_PORT = "10.0.0.1", 40000
_DST, _DST_PORT = "10.0.0.2", 80
_MAX_EVENTS = 20_000_000

DEFAULT_SIZE_BOUNDS = (64, 1500)


class SizeModelKind(enum.Enum):
    FIXED = "fixed"
    MIXTURE = "mixture"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class SizeModel:
    """Frame-size law: a fixed size, a discrete mixture, or uniform integers.

    Sizes are validated against bounds (default 64..1500, the usual Ethernet
    range) at construction.
    """

    kind: SizeModelKind
    sizes: Tuple[int, ...]
    probs: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind is SizeModelKind.MIXTURE:
            if len(self.probs) != len(self.sizes) or not self.sizes:
                raise ValueError("mixture needs one probability per size")
            if abs(sum(self.probs) - 1.0) > 1e-12:
                raise ValueError(f"mixture probabilities sum to {sum(self.probs)}, not 1")
        elif self.kind is SizeModelKind.FIXED:
            if len(self.sizes) != 1:
                raise ValueError("fixed size model takes exactly one size")
        else:
            if len(self.sizes) != 2 or self.sizes[0] > self.sizes[1]:
                raise ValueError("uniform size model takes (min, max) with min <= max")

    @classmethod
    def fixed(cls, size: int, bounds=DEFAULT_SIZE_BOUNDS) -> "SizeModel":
        _check_bounds((size,), bounds)
        return cls(SizeModelKind.FIXED, (int(size),))

    @classmethod
    def mixture(cls, pairs: Sequence[Tuple[int, float]], bounds=DEFAULT_SIZE_BOUNDS) -> "SizeModel":
        sizes = tuple(int(s) for s, _ in pairs)
        probs = tuple(float(p) for _, p in pairs)
        _check_bounds(sizes, bounds)
        return cls(SizeModelKind.MIXTURE, sizes, probs)

    @classmethod
    def uniform(cls, lo: int, hi: int, bounds=DEFAULT_SIZE_BOUNDS) -> "SizeModel":
        _check_bounds((lo, hi), bounds)
        return cls(SizeModelKind.UNIFORM, (int(lo), int(hi)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind is SizeModelKind.FIXED:
            return np.full(n, self.sizes[0], dtype=np.int64)
        if self.kind is SizeModelKind.MIXTURE:
            return rng.choice(np.asarray(self.sizes, dtype=np.int64), size=n, p=self.probs)
        return rng.integers(self.sizes[0], self.sizes[1] + 1, size=n, dtype=np.int64)

    def label(self) -> str:
        if self.kind is SizeModelKind.FIXED:
            return f"fixed:{self.sizes[0]}"
        if self.kind is SizeModelKind.MIXTURE:
            return "mix:" + ",".join(f"{s}:{p:g}" for s, p in zip(self.sizes, self.probs))
        return f"uniform:{self.sizes[0]}:{self.sizes[1]}"


def _check_bounds(sizes, bounds):
    lo, hi = bounds
    for s in sizes:
        if not lo <= s <= hi:
            raise ValueError(f"frame size {s} outside allowed bounds [{lo}, {hi}]")


# small/large dichotomy typical of real frame populations
DEFAULT_SIZE_MODEL = SizeModel.mixture(((64, 0.6), (1500, 0.4)))


@dataclass(frozen=True)
class MmppSpec:
    """Modulating-chain generator matrix, per-state rates, batch law, sizes.

    rates_per_sec[i] is the Poisson arrival rate while the chain sits in
    state i; generator is the transition-rate matrix Q (rows sum to zero,
    off-diagonals non-negative). batch_geometric_p = 1 means single arrivals
    (plain MMPP); p < 1 spawns Geometric(p) frames per epoch.
    """

    rates_per_sec: Tuple[float, ...]
    generator: Tuple[Tuple[float, ...], ...]
    batch_geometric_p: float = 1.0
    size_model: SizeModel = field(default_factory=lambda: DEFAULT_SIZE_MODEL)

    def __post_init__(self):
        object.__setattr__(self, "rates_per_sec", tuple(float(r) for r in self.rates_per_sec))
        object.__setattr__(
            self, "generator", tuple(tuple(float(v) for v in row) for row in self.generator)
        )
        q = self.q
        n = len(self.rates_per_sec)
        if n < 1 or q.shape != (n, n):
            raise ValueError(f"generator must be {n}x{n} to match {n} rates")
        if np.any(np.abs(q.sum(axis=1)) > 1e-12):
            raise ValueError("generator rows must sum to 0")
        off = q[~np.eye(n, dtype=bool)]
        if off.size and off.min() < 0:
            raise ValueError("off-diagonal generator entries must be >= 0")
        if min(self.rates_per_sec) < 0 or max(self.rates_per_sec) <= 0:
            raise ValueError("rates must be >= 0 with at least one > 0")
        if not 0 < self.batch_geometric_p <= 1:
            raise ValueError("batch_geometric_p must lie in (0, 1]")

    @property
    def num_states(self) -> int:
        return len(self.rates_per_sec)

    @property
    def q(self) -> np.ndarray:
        return np.asarray(self.generator, dtype=np.float64)


def stationary_distribution(q) -> np.ndarray:
    """Long-run state occupancy pi of a continuous-time chain: pi q = 0 with
    pi summing to 1 and every component positive. Raises ValueError for a
    reducible or invalid generator."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("generator must be a square matrix")
    n = q.shape[0]
    a = np.vstack([q.T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < n or np.max(np.abs(a @ pi - b)) > 1e-9:
        raise ValueError("generator does not determine a unique stationary distribution")
    if np.any(pi <= 1e-12):
        raise ValueError("chain is reducible: some states have zero long-run occupancy")
    return pi / pi.sum()


def _trace_from(ts_us, sizes, label, link_rate_bps, protocol=Protocol.TCP) -> Trace:
    # tolist() turns the columns into plain ints in one pass, which roughly
    # halves construction time on 1e5+ record traces
    records = [
        PacketRecord(t, _SRC, _SRC_PORT, _DST, _DST_PORT, protocol, s, Direction.UNKNOWN)
        for t, s in zip(np.asarray(ts_us).tolist(), np.asarray(sizes).tolist())
    ]
    return Trace(tuple(records), link_rate_bps=link_rate_bps, capture_label=label)


def _renewal_times_us(draw_gaps, duration_us: int) -> np.ndarray:
    """Cumulate chunked gap draws (already rounded to integer us) until the
    capture window is exceeded."""
    parts = []
    last = 0
    total = 0
    while last <= duration_us:
        gaps = draw_gaps()
        cum = last + np.cumsum(gaps)
        parts.append(cum)
        last = int(cum[-1])
        total += gaps.size
        if last <= duration_us and gaps.sum() == 0:
            raise ValueError("arrival rate too high for the 1 us resolution")
        if total > _MAX_EVENTS:
            raise ValueError(f"generator exceeded {_MAX_EVENTS} events; reduce rate or duration")
    ts = np.concatenate(parts)
    return ts[ts <= duration_us]


def gen_poisson(
    rate_per_sec: float,
    duration_sec: float,
    seed: int,
    size_model: SizeModel = DEFAULT_SIZE_MODEL,
    link_rate_bps: int = DEFAULT_LINK_RATE_BPS,
) -> Trace:
    """Poisson arrivals: i.i.d. exponential inter-arrival times rounded to
    integer microseconds."""
    if rate_per_sec <= 0 or duration_sec <= 0:
        raise ValueError("rate and duration must be positive")
    rng = np.random.default_rng(seed)
    duration_us = int(round(duration_sec * 1e6))
    chunk = max(1024, int(rate_per_sec * duration_sec * 0.25))

    def draw():
        return np.rint(rng.exponential(1.0 / rate_per_sec, chunk) * 1e6).astype(np.int64)

    ts = _renewal_times_us(draw, duration_us)
    sizes = size_model.sample(rng, ts.size)
    label = (
        f"poisson rate={rate_per_sec:g}/s duration={duration_sec:g}s seed={seed} "
        f"sizes={size_model.label()} rng={_RNG_NAME}"
    )
    return _trace_from(ts, sizes, label, link_rate_bps)


def gen_pareto_renewal(
    tail_index_a: float,
    x_min_us: int,
    duration_sec: float,
    seed: int,
    size_model: SizeModel = DEFAULT_SIZE_MODEL,
    link_rate_bps: int = DEFAULT_LINK_RATE_BPS,
) -> Trace:
    """Heavy-tailed renewal traffic: inter-arrivals x_min * U^(-1/a) with U
    uniform on (0, 1], so every gap is at least x_min microseconds."""
    if tail_index_a <= 0:
        raise ValueError("tail index must be positive")
    x_min_us = int(x_min_us)
    if x_min_us < 1:
        raise ValueError("x_min_us must be at least 1 microsecond")
    if duration_sec <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    duration_us = int(round(duration_sec * 1e6))
    mean_gap = (
        x_min_us * tail_index_a / (tail_index_a - 1.0) if tail_index_a > 1 else 10.0 * x_min_us
    )
    chunk = max(1024, int(duration_us / mean_gap * 0.25))

    def draw():
        u = 1.0 - rng.random(chunk)
        return np.rint(x_min_us * u ** (-1.0 / tail_index_a)).astype(np.int64)

    ts = _renewal_times_us(draw, duration_us)
    sizes = size_model.sample(rng, ts.size)
    label = (
        f"pareto a={tail_index_a:g} xmin={x_min_us}us duration={duration_sec:g}s "
        f"seed={seed} sizes={size_model.label()} rng={_RNG_NAME}"
    )
    return _trace_from(ts, sizes, label, link_rate_bps)


def _modulated_epochs_us(spec: MmppSpec, duration_sec: float, rng) -> np.ndarray:
    """Simulate the modulating chain and the arrival epochs inside each
    sojourn (uniform order statistics of a Poisson count)."""
    q = spec.q
    rates = np.asarray(spec.rates_per_sec)
    pi = stationary_distribution(q) if spec.num_states > 1 else np.ones(1)
    state = int(np.searchsorted(np.cumsum(pi), rng.random(), side="right"))
    state = min(state, spec.num_states - 1)

    parts = []
    t = 0.0
    total = 0
    while t < duration_sec:
        out_rate = -q[state, state]
        sojourn = rng.exponential(1.0 / out_rate) if out_rate > 0 else duration_sec - t
        windowed = min(sojourn, duration_sec - t)
        lam = rates[state]
        if lam > 0 and windowed > 0:
            k = rng.poisson(lam * windowed)
            total += int(k)
            if total > _MAX_EVENTS:
                raise ValueError(
                    f"generator exceeded {_MAX_EVENTS} events; reduce rates or duration"
                )
            if k:
                parts.append(t + np.sort(rng.random(k)) * windowed)
        if out_rate > 0:
            weights = np.clip(q[state], 0.0, None)
            weights[state] = 0.0
            u = rng.random() * weights.sum()
            state = int(np.searchsorted(np.cumsum(weights), u, side="right"))
            state = min(state, spec.num_states - 1)
        t += sojourn
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.rint(np.concatenate(parts) * 1e6).astype(np.int64)


def _gen_modulated(spec: MmppSpec, duration_sec: float, seed: int,
                   link_rate_bps: int, kind: str) -> Trace:
    if duration_sec <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    epochs = _modulated_epochs_us(spec, duration_sec, rng)
    if spec.batch_geometric_p < 1.0:
        batches = rng.geometric(spec.batch_geometric_p, epochs.size).astype(np.int64)
    else:
        batches = np.ones(epochs.size, dtype=np.int64)
    sizes = spec.size_model.sample(rng, int(batches.sum()))
    busy = frame_busy_us(sizes, link_rate_bps)
    ts = _kernels.schedule_frames(epochs, batches, busy)
    label = (
        f"{kind} rates={','.join(f'{r:g}' for r in spec.rates_per_sec)}/s "
        f"p={spec.batch_geometric_p:g} duration={duration_sec:g}s seed={seed} "
        f"sizes={spec.size_model.label()} rng={_RNG_NAME}"
    )
    return _trace_from(ts, sizes, label, link_rate_bps)


def gen_mmpp(
    spec: MmppSpec,
    duration_sec: float,
    seed: int,
    link_rate_bps: int = DEFAULT_LINK_RATE_BPS,
) -> Trace:
    """Markov-modulated Poisson traffic: the chain holds state i for an
    exponential sojourn while arrivals come at rates_per_sec[i]. The long-run
    arrival rate is sum_i pi_i * rate_i."""
    if spec.batch_geometric_p != 1.0:
        raise ValueError("gen_mmpp requires batch_geometric_p == 1 (use gen_mmcpp for batches)")
    return _gen_modulated(spec, duration_sec, seed, link_rate_bps, "mmpp")


def gen_mmcpp(
    spec: MmppSpec,
    duration_sec: float,
    seed: int,
    link_rate_bps: int = DEFAULT_LINK_RATE_BPS,
) -> Trace:
    """Compound MMPP: each arrival epoch spawns Geometric(p) frames sent back
    to back at the line rate. With p = 1 the output is identical to gen_mmpp
    for the same seed."""
    return _gen_modulated(spec, duration_sec, seed, link_rate_bps, "mmcpp")


def gen_back_to_back(
    frame_size: int,
    count: int,
    link_rate_bps: int = DEFAULT_LINK_RATE_BPS,
    seed: int = 0,
) -> Trace:
    """Frames at exactly the earliest feasible spacing for the link: the
    previous frame's wire time plus the interframe gap, ceiling-rounded to
    whole microseconds. The fastest stream the validator accepts."""
    if count < 0:
        raise ValueError("count must be >= 0")
    gap = int(frame_busy_us(frame_size, link_rate_bps, IFG_BYTES))
    ts = np.arange(count, dtype=np.int64) * gap
    sizes = np.full(count, int(frame_size), dtype=np.int64)
    label = (
        f"back2back size={frame_size} count={count} link={link_rate_bps}bps "
        f"seed={seed} rng={_RNG_NAME}"
    )
    return _trace_from(ts, sizes, label, link_rate_bps)
