import pytest

from etherstat import _kernels
from etherstat.trace import Direction, PacketRecord, Protocol, Trace


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the jitted kernels once so timed tests measure compute only
    _kernels.warmup()


def make_record(
    t,
    size=1500,
    src="10.0.0.1",
    sport=1234,
    dst="10.0.0.2",
    dport=80,
    proto=Protocol.TCP,
    direction=Direction.UNKNOWN,
):
    return PacketRecord(t, src, sport, dst, dport, proto, size, direction)


def make_trace(timestamps, sizes=None, link_rate_bps=100_000_000, **kw):
    if sizes is None:
        sizes = [1500] * len(timestamps)
    records = tuple(make_record(t, s, **kw) for t, s in zip(timestamps, sizes))
    return Trace(records, link_rate_bps=link_rate_bps)
