"""Command-line front end.

Subcommands wire ingestion, filtering, the statistics battery, the traffic
generators and a file-size scan into plot-ready CSV files:

    ingest     tcpdump-style text (or canonical CSV) -> canonical CSV
    filter     select a traffic class from a canonical trace
    iih        inter-event interval histogram        -> bin_lower_us,bin_upper_us,count,density
    psd        averaged-periodogram power spectrum   -> frequency_hz,power
    acf        autocorrelation of binned counts      -> lag,value
    fit        straight line in log-log coordinates  -> exponent,intercept,r_squared,points_used
    validate   physical-feasibility check            -> index,observed_us,earliest_feasible_us,deficit_us
    gen        synthetic traces (poisson/mmpp/mmcpp/pareto/back2back)
    filesizes  log-binned histogram of file sizes under a directory

Exit codes: 0 success, 1 usage error, 2 data error. Diagnostics go to
stderr; data goes to the output file (or stdout with no --out). Densities
and powers are printed with 6 significant digits so outputs are stable
golden-file material.
"""

from __future__ import annotations

import argparse
import os
import stat as statmod
import sys
from typing import Optional

import numpy as np

from . import ingest, stats, synth
from .errors import EtherstatError, StatsError
from .trace import (
    DEFAULT_LINK_RATE_BPS,
    Direction,
    FilterSpec,
    Protocol,
    Side,
    Trace,
    apply_filter,
    validate_timestamps,
    with_directions,
)

_GEN_KINDS = ("poisson", "mmpp", "mmcpp", "pareto", "back2back")


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _read_trace(path: str) -> Trace:
    with open(path, "r", encoding="utf-8") as fh:
        trace, diags = ingest.parse_canonical(fh)
    if diags.lines_skipped:
        print(f"{path}: {diags.summary()}", file=sys.stderr)
    return trace


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def _write_rows(path: Optional[str], header: str, rows) -> None:
    sink, owned = _open_out(path)
    try:
        sink.write(header + "\n")
        for row in rows:
            sink.write(row + "\n")
    finally:
        if owned:
            sink.close()


def _write_trace(path: Optional[str], trace: Trace) -> None:
    sink, owned = _open_out(path)
    try:
        ingest.write_canonical(trace, sink)
    finally:
        if owned:
            sink.close()


def _hist_rows(hist: stats.LogHistogram, unit: str):
    header = f"bin_lower_{unit},bin_upper_{unit},count,density"
    rows = [
        f"{_fmt(lo)},{_fmt(up)},{int(c)},{_fmt(d)}"
        for lo, up, c, d in zip(hist.lowers, hist.uppers, hist.counts, hist.densities)
    ]
    return header, rows


# --------------------------------------------------------------------------
# subcommand handlers


def _cmd_ingest(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        if args.format == "tcpdump":
            trace, diags = ingest.parse_tcpdump_text(
                fh,
                tcp_allowance=args.tcp_allowance,
                udp_allowance=args.udp_allowance,
                other_allowance=args.udp_allowance,
            )
        else:
            trace, diags = ingest.parse_canonical(fh)
    print(diags.summary(), file=sys.stderr)
    for lineno, msg in diags.first_errors:
        print(f"  line {lineno}: {msg}", file=sys.stderr)
    _write_trace(args.out, trace)
    return 0


def _cmd_filter(args) -> int:
    trace = _read_trace(args.input)
    if args.local:
        trace = with_directions(trace, args.local)
    spec = FilterSpec(
        port_equals=args.port,
        side=Side[args.side.upper()],
        direction=Direction[args.direction.upper()] if args.direction else None,
        protocol=Protocol[args.protocol.upper()] if args.protocol else None,
        exclude_exact_size=args.exclude_size,
        min_size=args.min_size,
        max_size=args.max_size,
    )
    filtered = apply_filter(trace, spec)
    print(f"{len(filtered)} of {len(trace)} records kept", file=sys.stderr)
    _write_trace(args.out, filtered)
    return 0


def _cmd_iih(args) -> int:
    trace = _read_trace(args.input)
    intervals = stats.inter_arrival_intervals(trace)
    hist = stats.log_binned_histogram(intervals, args.first_width, args.growth)
    header, rows = _hist_rows(hist, "us")
    _write_rows(args.out, header, rows)
    return 0


def _aggregate(args, trace: Trace) -> stats.CountSeries:
    return stats.aggregate_counts(trace, args.bin_width_us, stats.Metric(args.metric))


def _cmd_psd(args) -> int:
    trace = _read_trace(args.input)
    series = _aggregate(args, trace)
    spec = stats.power_spectrum(
        series,
        segment_length=args.segment_length,
        overlap_fraction=args.overlap,
        window=stats.Window[args.window.upper()],
    )
    rows = [f"{_fmt(f)},{_fmt(p)}" for f, p in zip(spec.frequencies_hz, spec.power)]
    _write_rows(args.out, "frequency_hz,power", rows)
    return 0


def _cmd_acf(args) -> int:
    trace = _read_trace(args.input)
    series = _aggregate(args, trace)
    acf = stats.autocorrelation(series, args.max_lag)
    rows = [f"{lag},{_fmt(v)}" for lag, v in zip(acf.lags, acf.values)]
    _write_rows(args.out, "lag,value", rows)
    return 0


def _load_fit_points(path: str, min_count: int):
    """Accept any CSV this tool emits: histogram schemas use the geometric
    bin centre vs density (bins below min_count dropped); any other
    two-column schema is taken as (x, y) directly."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header[0].startswith("bin_lower"):
        lowers = np.array([float(r[0]) for r in rows])
        uppers = np.array([float(r[1]) for r in rows])
        counts = np.array([int(r[2]) for r in rows])
        dens = np.array([float(r[3]) for r in rows])
        x = np.where(lowers > 0, np.sqrt(lowers * uppers), uppers / 2)
        keep = counts >= min_count
        return np.column_stack((x[keep], dens[keep])), True
    if len(header) < 2:
        raise EtherstatError(f"{path}: need at least two columns to fit")
    pts = np.array([[float(r[0]), float(r[1])] for r in rows])
    return pts, False


def _cmd_fit(args) -> int:
    points, is_hist = _load_fit_points(args.infile, args.min_count)
    xmin = args.xmin
    if xmin is None and is_hist:
        xmin = stats.DEFAULT_FIT_LOWER_US
    lo = -np.inf if xmin is None else xmin
    hi = np.inf if args.xmax is None else args.xmax
    fit = stats.fit_power_law(points, (lo, hi))
    row = f"{_fmt(fit.exponent)},{_fmt(fit.log_intercept)},{_fmt(fit.r_squared)},{fit.points_used}"
    _write_rows(args.out, "exponent,intercept,r_squared,points_used", [row])
    return 0


def _cmd_validate(args) -> int:
    trace = _read_trace(args.input)
    if args.link_rate_bps:
        trace = Trace(trace.records, link_rate_bps=args.link_rate_bps,
                      local_prefixes=trace.local_prefixes, capture_label=trace.capture_label)
    report = validate_timestamps(trace, ifg_bytes=args.ifg_bytes)
    rows = [
        f"{v.record_index},{v.observed_us},{v.earliest_feasible_us},{v.deficit_us}"
        for v in report.entries
    ]
    _write_rows(args.out, "index,observed_us,earliest_feasible_us,deficit_us", rows)
    print(
        f"{len(report)} violations in {len(trace)} records "
        f"(byte time {report.byte_time_ns} ns, ifg {report.ifg_bytes} bytes)",
        file=sys.stderr,
    )
    return 0


def _parse_size_model(text: str) -> synth.SizeModel:
    kind, _, rest = text.partition(":")
    if kind == "fixed":
        return synth.SizeModel.fixed(int(rest))
    if kind in ("mix", "mixture"):
        pairs = []
        for item in rest.split(","):
            size_s, _, prob_s = item.partition(":")
            pairs.append((int(size_s), float(prob_s)))
        return synth.SizeModel.mixture(pairs)
    if kind == "uniform":
        lo, _, hi = rest.partition(":")
        return synth.SizeModel.uniform(int(lo), int(hi))
    raise EtherstatError(f"unknown size model {text!r}")


def _parse_q(text: str):
    return tuple(tuple(float(v) for v in row.split(",")) for row in text.split(";"))


def _read_config(path: str) -> dict:
    cfg = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise EtherstatError(f"{path}: expected key=value, got {line!r}")
            cfg[key.strip()] = value.strip()
    return cfg


def _cmd_gen(args) -> int:
    cfg = _read_config(args.config) if args.config else {}

    def pick(flag, key, cast, default=None):
        if flag is not None:
            return flag
        if key in cfg:
            return cast(cfg[key])
        return default

    kind = args.kind or cfg.get("kind")
    if kind not in _GEN_KINDS:
        raise EtherstatError(f"gen needs a kind out of {', '.join(_GEN_KINDS)} (got {kind!r})")
    duration = pick(args.duration, "duration", float, 1.0)
    seed = pick(args.seed, "seed", int, 0)
    size_model = synth.DEFAULT_SIZE_MODEL
    sm_text = args.size_model or cfg.get("size_model")
    if sm_text:
        size_model = _parse_size_model(sm_text)
    link_rate = pick(args.link_rate_bps, "link_rate", int, DEFAULT_LINK_RATE_BPS)

    if kind == "poisson":
        rate = pick(args.rate, "rate", float)
        if rate is None:
            raise EtherstatError("poisson needs --rate")
        trace = synth.gen_poisson(rate, duration, seed, size_model, link_rate)
    elif kind in ("mmpp", "mmcpp"):
        rates_text = args.rates or cfg.get("rates")
        q_text = args.q or cfg.get("q")
        if not rates_text or not q_text:
            raise EtherstatError(f"{kind} needs --rates and --q")
        p = pick(args.p, "p", float, 1.0 if kind == "mmpp" else 0.5)
        spec = synth.MmppSpec(
            rates_per_sec=tuple(float(r) for r in rates_text.split(",")),
            generator=_parse_q(q_text),
            batch_geometric_p=p,
            size_model=size_model,
        )
        gen = synth.gen_mmpp if kind == "mmpp" else synth.gen_mmcpp
        trace = gen(spec, duration, seed, link_rate)
    elif kind == "pareto":
        a = pick(args.a, "a", float)
        xmin = pick(args.xmin_us, "xmin_us", int)
        if a is None or xmin is None:
            raise EtherstatError("pareto needs --a and --xmin-us")
        trace = synth.gen_pareto_renewal(a, xmin, duration, seed, size_model, link_rate)
    else:  # back2back
        size = pick(args.size, "size", int, 1500)
        count = pick(args.count, "count", int, 1000)
        trace = synth.gen_back_to_back(size, count, link_rate, seed)

    print(f"{len(trace)} records: {trace.capture_label}", file=sys.stderr)
    _write_trace(args.out, trace)
    return 0


def scan_file_sizes(root_path: str):
    """Walk a directory tree collecting regular-file sizes in bytes.

    Symbolic links are not followed (and not counted); entries whose size
    cannot be read are skipped and counted. Returns (histogram, skipped)
    with bins starting at [0, 1) byte and doubling.
    """
    if not os.path.isdir(root_path):
        raise EtherstatError(f"not a readable directory: {root_path}")
    sizes = []
    skipped = 0

    def on_error(_err):
        nonlocal skipped
        skipped += 1

    for dirpath, _dirnames, filenames in os.walk(root_path, onerror=on_error, followlinks=False):
        for name in filenames:
            try:
                st = os.lstat(os.path.join(dirpath, name))
            except OSError:
                skipped += 1
                continue
            if statmod.S_ISREG(st.st_mode):
                sizes.append(st.st_size)
    hist = stats.log_binned_histogram(sizes, first_width=1.0, growth=2.0)
    return hist, skipped


def _cmd_filesizes(args) -> int:
    hist, skipped = scan_file_sizes(args.root)
    header, rows = _hist_rows(hist, "bytes")
    _write_rows(args.out, header, rows)
    print(f"{hist.total_events} files counted, {skipped} entries skipped", file=sys.stderr)
    return 0


# --------------------------------------------------------------------------
# parser assembly


def _build_parser() -> _Parser:
    parser = _Parser(prog="etherstat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse tcpdump-style text or canonical CSV")
    p.add_argument("input")
    p.add_argument("--format", choices=("tcpdump", "canonical"), default="tcpdump")
    p.add_argument("--tcp-allowance", type=int, default=ingest.TCP_HEADER_ALLOWANCE,
                   help="bytes added to reported TCP lengths")
    p.add_argument("--udp-allowance", type=int, default=ingest.UDP_HEADER_ALLOWANCE,
                   help="bytes added to reported UDP/other lengths")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("filter", help="select records matching a traffic class")
    p.add_argument("input")
    p.add_argument("--port", type=int)
    p.add_argument("--side", choices=("src", "dst", "either"), default="either")
    p.add_argument("--direction", choices=("inbound", "outbound", "unknown"))
    p.add_argument("--protocol", choices=("tcp", "udp", "icmp", "other"))
    p.add_argument("--exclude-size", type=int, help="drop frames of exactly this size")
    p.add_argument("--min-size", type=int)
    p.add_argument("--max-size", type=int)
    p.add_argument("--local", action="append", default=[],
                   help="local CIDR prefix for direction classification (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("iih", help="inter-event interval histogram")
    p.add_argument("input")
    p.add_argument("--first-width", type=float, default=stats.DEFAULT_FIRST_WIDTH_US)
    p.add_argument("--growth", type=float, default=stats.DEFAULT_GROWTH)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_iih)

    for name, help_text in (("psd", "power spectrum of binned counts"),
                            ("acf", "autocorrelation of binned counts")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input")
        p.add_argument("--bin-width-us", type=int, default=stats.DEFAULT_BIN_WIDTH_US)
        p.add_argument("--metric", choices=[m.value for m in stats.Metric],
                       default=stats.Metric.BYTES_PER_SEC.value)
        if name == "psd":
            p.add_argument("--segment-length", type=int)
            p.add_argument("--overlap", type=float, default=0.5)
            p.add_argument("--window", choices=("hann", "rectangular"), default="hann")
            p.set_defaults(func=_cmd_psd)
        else:
            p.add_argument("--max-lag", type=int, default=100)
            p.set_defaults(func=_cmd_acf)
        p.add_argument("--out")

    p = sub.add_parser("fit", help="straight-line fit in log-log coordinates")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--xmin", type=float, help="lower fit bound in the x domain "
                   "(default 100 for histogram inputs)")
    p.add_argument("--xmax", type=float)
    p.add_argument("--min-count", type=int, default=stats.DEFAULT_FIT_MIN_COUNT,
                   help="drop histogram bins with fewer events")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("validate", help="timestamp physical-feasibility check")
    p.add_argument("input")
    p.add_argument("--ifg-bytes", type=int, default=12)
    p.add_argument("--link-rate-bps", type=int,
                   help="override the link rate (default 100 Mbps)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("gen", help="generate a synthetic trace")
    p.add_argument("kind", nargs="?", choices=_GEN_KINDS)
    p.add_argument("--config", help="key=value file (kind, rate, rates, q, p, "
                   "duration, seed, size_model, ...); flags override it")
    p.add_argument("--rate", type=float, help="poisson arrivals per second")
    p.add_argument("--rates", help="per-state rates, e.g. 10,1000")
    p.add_argument("--q", help="generator matrix rows, e.g. -1,1;2,-2")
    p.add_argument("--p", type=float, help="geometric batch parameter (mmcpp)")
    p.add_argument("--a", type=float, help="pareto tail index")
    p.add_argument("--xmin-us", type=int, help="pareto minimum gap in us")
    p.add_argument("--size", type=int, help="back2back frame size")
    p.add_argument("--count", type=int, help="back2back frame count")
    p.add_argument("--duration", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--size-model", help="fixed:N | mix:S:P,S:P | uniform:LO:HI")
    p.add_argument("--link-rate-bps", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("filesizes", help="log-binned histogram of file sizes")
    p.add_argument("root")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_filesizes)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (EtherstatError, StatsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
