"""Core domain types: packet records, traces, traffic-class filters, and
physical feasibility checks of capture timestamps.

Everything here is immutable after construction and all operations are pure,
so traces can be shared freely between threads and pipeline stages.

PacketRecord is a plain tuple for construction speed (traces run to millions
of records). Code building records from untrusted input calls validate();
Trace re-checks the bulk invariants (ordering, timestamp sign, size range)
vectorised at construction.
"""

from __future__ import annotations

import enum
import functools
import ipaddress
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

DEFAULT_LINK_RATE_BPS = 100_000_000
IFG_BYTES = 12  # mandatory idle gap between Ethernet frames, in byte-times
MAX_FRAME_BYTES = 65_535  # jumbo-safe upper bound; plain Ethernet tops out ~1500


class Protocol(enum.Enum):
    TCP = "TCP"
    UDP = "UDP"
    ICMP = "ICMP"
    OTHER = "OTHER"


class Direction(enum.Enum):
    INBOUND = "INBOUND"
    OUTBOUND = "OUTBOUND"
    UNKNOWN = "UNKNOWN"


class Side(enum.Enum):
    """Which endpoint a port filter applies to."""

    SRC = "SRC"
    DST = "DST"
    EITHER = "EITHER"


@functools.lru_cache(maxsize=65536)
def _ipv4(addr: str) -> ipaddress.IPv4Address:
    # IPv4 only by design; IPv6 strings raise AddressValueError (a ValueError).
    return ipaddress.IPv4Address(addr)


@functools.lru_cache(maxsize=256)
def _networks(prefixes: frozenset) -> tuple:
    return tuple(ipaddress.IPv4Network(p) for p in sorted(prefixes))


class PacketRecord(NamedTuple):
    """One captured frame: kernel timestamp, endpoints, protocol, size."""

    timestamp_us: int  # integer microseconds since capture start
    src_addr: str
    src_port: int
    dst_addr: str
    dst_port: int
    protocol: Protocol
    frame_size_bytes: int
    direction: Direction = Direction.UNKNOWN

    def validate(self) -> "PacketRecord":
        """Raise ValueError unless every field invariant holds; returns self
        so parsers can validate inline."""
        if self.timestamp_us < 0:
            raise ValueError(f"negative timestamp: {self.timestamp_us}")
        if not 0 <= self.src_port <= 65535:
            raise ValueError(f"src port out of range: {self.src_port}")
        if not 0 <= self.dst_port <= 65535:
            raise ValueError(f"dst port out of range: {self.dst_port}")
        if not 0 <= self.frame_size_bytes <= MAX_FRAME_BYTES:
            raise ValueError(f"frame size out of range: {self.frame_size_bytes}")
        _ipv4(self.src_addr)
        _ipv4(self.dst_addr)
        return self


@dataclass(frozen=True)
class Trace:
    """A time-ordered packet sequence plus capture metadata.

    Records must be sorted by timestamp; ties are allowed (a full-duplex
    monitor serialises simultaneous send/receive events in capture order).
    """

    records: tuple
    link_rate_bps: int = DEFAULT_LINK_RATE_BPS
    local_prefixes: frozenset = frozenset()
    capture_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "local_prefixes", frozenset(self.local_prefixes))
        if self.link_rate_bps <= 0:
            raise ValueError(f"link_rate_bps must be positive: {self.link_rate_bps}")
        t = self.timestamps_us
        if t.size:
            if t[0] < 0:
                raise ValueError(f"negative timestamp: {t[0]}")
            if t.size > 1 and np.any(np.diff(t) < 0):
                raise ValueError("records are not sorted by timestamp")
            s = self.frame_sizes
            if s.min() < 0 or s.max() > MAX_FRAME_BYTES:
                raise ValueError("frame size out of range")

    @functools.cached_property
    def timestamps_us(self) -> np.ndarray:
        return np.fromiter(
            (r.timestamp_us for r in self.records), dtype=np.int64, count=len(self.records)
        )

    @functools.cached_property
    def frame_sizes(self) -> np.ndarray:
        return np.fromiter(
            (r.frame_size_bytes for r in self.records), dtype=np.int64, count=len(self.records)
        )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PacketRecord]:
        return iter(self.records)


@dataclass(frozen=True, slots=True)
class FilterSpec:
    """Predicates for selecting a traffic class; absent fields match anything."""

    port_equals: Optional[int] = None
    side: Side = Side.EITHER
    direction: Optional[Direction] = None
    protocol: Optional[Protocol] = None
    exclude_exact_size: Optional[int] = None
    min_size: Optional[int] = None
    max_size: Optional[int] = None

    def __post_init__(self):
        if (
            self.min_size is not None
            and self.max_size is not None
            and self.min_size > self.max_size
        ):
            raise ValueError("min_size exceeds max_size")

    def matches(self, r: PacketRecord) -> bool:
        if self.port_equals is not None:
            if self.side is Side.SRC:
                hit = r.src_port == self.port_equals
            elif self.side is Side.DST:
                hit = r.dst_port == self.port_equals
            else:
                hit = self.port_equals in (r.src_port, r.dst_port)
            if not hit:
                return False
        if self.direction is not None and r.direction is not self.direction:
            return False
        if self.protocol is not None and r.protocol is not self.protocol:
            return False
        if self.exclude_exact_size is not None and r.frame_size_bytes == self.exclude_exact_size:
            return False
        if self.min_size is not None and r.frame_size_bytes < self.min_size:
            return False
        if self.max_size is not None and r.frame_size_bytes > self.max_size:
            return False
        return True


class Violation(NamedTuple):
    record_index: int
    observed_us: int
    earliest_feasible_us: int
    deficit_us: int


@dataclass(frozen=True)
class ViolationReport:
    """Arrivals reported earlier than the wire could have delivered them."""

    entries: tuple
    byte_time_ns: Fraction  # nanoseconds per byte at the trace's link rate
    ifg_bytes: int

    def __len__(self) -> int:
        return len(self.entries)


def classify_direction(record: PacketRecord, local_prefixes: Iterable[str]) -> Direction:
    """INBOUND if only the destination is local, OUTBOUND if only the source
    is; UNKNOWN when both or neither address matches a local prefix."""
    nets = _networks(frozenset(local_prefixes))
    src_local = any(_ipv4(record.src_addr) in n for n in nets)
    dst_local = any(_ipv4(record.dst_addr) in n for n in nets)
    if dst_local and not src_local:
        return Direction.INBOUND
    if src_local and not dst_local:
        return Direction.OUTBOUND
    return Direction.UNKNOWN


def with_directions(trace: Trace, local_prefixes: Optional[Iterable[str]] = None) -> Trace:
    """New trace with each record's direction assigned from the given
    prefixes (defaults to the trace's own local_prefixes)."""
    prefixes = frozenset(local_prefixes) if local_prefixes is not None else trace.local_prefixes
    records = tuple(
        r._replace(direction=classify_direction(r, prefixes)) for r in trace.records
    )
    return replace(trace, records=records, local_prefixes=prefixes)


def apply_filter(trace: Trace, spec: FilterSpec) -> Trace:
    """Records satisfying every present predicate, order preserved; metadata
    carried over unchanged. An empty result is valid."""
    return replace(trace, records=tuple(r for r in trace.records if spec.matches(r)))


def frame_busy_us(frame_size_bytes, link_rate_bps: int, ifg_bytes: int = IFG_BYTES):
    """Microseconds the wire is occupied by a frame plus its interframe gap,
    rounded up to the 1 us capture resolution. Accepts scalars or arrays."""
    bits = (np.asarray(frame_size_bytes, dtype=np.int64) + ifg_bytes) * 8_000_000
    return (bits + link_rate_bps - 1) // link_rate_bps


def validate_timestamps(trace: Trace, ifg_bytes: int = IFG_BYTES) -> ViolationReport:
    """Check each consecutive pair against the earliest physically possible
    arrival time: previous timestamp plus the busy time of the previous frame.

    Violations are reported, never corrected; downstream statistics consume
    the trace as captured.
    """
    byte_time = Fraction(8_000_000_000, trace.link_rate_bps)
    t = trace.timestamps_us
    if t.size < 2:
        return ViolationReport((), byte_time, ifg_bytes)
    feasible = t[:-1] + frame_busy_us(trace.frame_sizes[:-1], trace.link_rate_bps, ifg_bytes)
    bad = np.nonzero(t[1:] < feasible)[0]
    entries = tuple(
        Violation(int(i) + 1, int(t[i + 1]), int(feasible[i]), int(feasible[i] - t[i + 1]))
        for i in bad
    )
    return ViolationReport(entries, byte_time, ifg_bytes)
