"""Trace ingestion and serialisation.

Two text formats are supported:

* the canonical CSV format (the package's own interchange format):
  a fixed header line followed by one record per line,

      timestamp_us,src_addr,src_port,dst_addr,dst_port,protocol,frame_size

  UTF-8, LF line endings, no quoting. Timestamps are relative integer
  microseconds, which keeps generated traces diffable and reproducible.

* a tcpdump-style one-line-per-frame summary. Accepted grammar (anything
  else is skipped and counted):

      HH:MM:SS.ffffff IP <addr>.<port> > <addr>.<port>: <proto> ... length <n>

  The protocol token is case-insensitive; tokens other than tcp/udp/icmp map
  to OTHER. Reported lengths are payload sizes, so a per-protocol header
  allowance is added to recover the frame size on the wire (58 bytes for TCP
  = 14 Ethernet + 20 IP + 20 TCP + 4 FCS, 42 for UDP and anything else).
  Timestamps are rebased so the earliest accepted frame is at 0; a backwards
  jump of more than 12 hours is treated as a midnight rollover.

Malformed lines are skipped and counted; parsing aborts when more than half
of the data lines fail, which almost always means the wrong file was fed in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import IO, Iterable, Tuple

from .errors import IngestError
from .trace import PacketRecord, Protocol, Trace

CANONICAL_HEADER = "timestamp_us,src_addr,src_port,dst_addr,dst_port,protocol,frame_size"

TCP_HEADER_ALLOWANCE = 58
UDP_HEADER_ALLOWANCE = 42

_MAX_ERRORS_KEPT = 20
_HALF_DAY_US = 12 * 3600 * 1_000_000

_TCPDUMP_RE = re.compile(
    r"^(\d{2}):(\d{2}):(\d{2})\.(\d{6}) IP (\S+?)\.(\d+) > (\S+?)\.(\d+): (\w+).* length (\d+)$"
)

_PROTO_TOKENS = {"tcp": Protocol.TCP, "udp": Protocol.UDP, "icmp": Protocol.ICMP}


@dataclass(frozen=True)
class ParseDiagnostics:
    """Per-parse accounting. lines_read counts data lines (header excluded)
    and always equals records_accepted + lines_skipped."""

    lines_read: int
    records_accepted: int
    lines_skipped: int
    first_errors: tuple  # (line_number, message), capped at 20

    def summary(self) -> str:
        return (
            f"{self.lines_read} data lines read, "
            f"{self.records_accepted} records accepted, "
            f"{self.lines_skipped} skipped"
        )


def _finish(records, errors, lines_read, what: str) -> Tuple[Trace, ParseDiagnostics]:
    skipped = lines_read - len(records)
    if lines_read > 0 and skipped * 2 > lines_read:
        raise IngestError(
            f"{skipped} of {lines_read} {what} lines malformed; "
            "this does not look like the right kind of file"
        )
    if any(records[i].timestamp_us > records[i + 1].timestamp_us for i in range(len(records) - 1)):
        records = sorted(records, key=lambda r: r.timestamp_us)  # stable
    diags = ParseDiagnostics(lines_read, len(records), skipped, tuple(errors[:_MAX_ERRORS_KEPT]))
    return Trace(tuple(records)), diags


def parse_canonical(lines: Iterable[str]) -> Tuple[Trace, ParseDiagnostics]:
    """Parse the canonical CSV format.

    Raises IngestError if the header is missing or wrong, or if more than
    half of the data lines are malformed. Directions are left UNKNOWN;
    assign them later with trace.with_directions.
    """
    it = iter(lines)
    header = None
    for line in it:
        header = line.strip()
        break
    if header is None or header != CANONICAL_HEADER:
        raise IngestError(
            f"missing or invalid header; expected {CANONICAL_HEADER!r}, got {header!r}"
        )

    records = []
    errors = []
    lines_read = 0
    for lineno, line in enumerate(it, start=2):
        line = line.strip()
        if not line:
            continue
        lines_read += 1
        parts = line.split(",")
        try:
            if len(parts) != 7:
                raise ValueError(f"expected 7 fields, got {len(parts)}")
            records.append(
                PacketRecord(
                    timestamp_us=int(parts[0]),
                    src_addr=parts[1],
                    src_port=int(parts[2]),
                    dst_addr=parts[3],
                    dst_port=int(parts[4]),
                    protocol=Protocol[parts[5].upper()],
                    frame_size_bytes=int(parts[6]),
                ).validate()
            )
        except (ValueError, KeyError) as exc:
            if len(errors) < _MAX_ERRORS_KEPT:
                errors.append((lineno, str(exc)))
    return _finish(records, errors, lines_read, "CSV")


def parse_tcpdump_text(
    lines: Iterable[str],
    tcp_allowance: int = TCP_HEADER_ALLOWANCE,
    udp_allowance: int = UDP_HEADER_ALLOWANCE,
    other_allowance: int = UDP_HEADER_ALLOWANCE,
) -> Tuple[Trace, ParseDiagnostics]:
    """Parse tcpdump-style text summaries into a trace.

    Output timestamps are non-negative microseconds starting at 0.
    """
    raw = []  # (abs_us, src, sport, dst, dport, proto, size)
    errors = []
    lines_read = 0
    day_offset = 0
    prev_clock = None
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        lines_read += 1
        m = _TCPDUMP_RE.match(line)
        if m is None:
            if len(errors) < _MAX_ERRORS_KEPT:
                errors.append((lineno, "line does not match the accepted grammar"))
            continue
        hh, mm, ss, frac, src, sport, dst, dport, proto_tok, length = m.groups()
        clock_us = ((int(hh) * 60 + int(mm)) * 60 + int(ss)) * 1_000_000 + int(frac)
        if prev_clock is not None and clock_us < prev_clock - _HALF_DAY_US:
            day_offset += 2 * _HALF_DAY_US
        prev_clock = clock_us
        proto = _PROTO_TOKENS.get(proto_tok.lower(), Protocol.OTHER)
        if proto is Protocol.TCP:
            size = int(length) + tcp_allowance
        elif proto is Protocol.UDP:
            size = int(length) + udp_allowance
        else:
            size = int(length) + other_allowance
        try:
            # build once now to validate addresses, ports and size range
            rec = PacketRecord(0, src, int(sport), dst, int(dport), proto, size).validate()
        except ValueError as exc:
            if len(errors) < _MAX_ERRORS_KEPT:
                errors.append((lineno, str(exc)))
            continue
        raw.append((clock_us + day_offset, rec))

    if raw:
        base = min(t for t, _ in raw)
        records = [
            PacketRecord(
                t - base, r.src_addr, r.src_port, r.dst_addr, r.dst_port,
                r.protocol, r.frame_size_bytes,
            )
            for t, r in raw
        ]
    else:
        records = []
    return _finish(records, errors, lines_read, "tcpdump")


def write_canonical(trace: Trace, sink: IO[str]) -> None:
    """Write the canonical CSV format; parse_canonical reproduces the records
    exactly (directions are derived data and are not serialised)."""
    sink.write(CANONICAL_HEADER + "\n")
    for r in trace.records:
        sink.write(
            f"{r.timestamp_us},{r.src_addr},{r.src_port},"
            f"{r.dst_addr},{r.dst_port},{r.protocol.name},{r.frame_size_bytes}\n"
        )
