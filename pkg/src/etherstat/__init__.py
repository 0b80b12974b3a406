"""etherstat: statistical analysis and synthetic generation of
switched-Ethernet packet traces.

Library surface: trace/filter types and feasibility checks (trace), text
ingestion (ingest), the statistics battery (stats), traffic generators
(synth), and the command-line front end (cli).
"""

from .errors import EtherstatError, IngestError, StatsError
from .ingest import ParseDiagnostics, parse_canonical, parse_tcpdump_text, write_canonical
from .stats import (
    AcfSeries,
    CountSeries,
    CountStats,
    LogHistogram,
    Metric,
    PowerLawFit,
    Spectrum,
    Window,
    acf_values,
    aggregate_counts,
    autocorrelation,
    count_statistics,
    fit_exponential,
    fit_power_law,
    inter_arrival_intervals,
    log_binned_histogram,
    power_spectrum,
    welch_psd,
)
from .synth import (
    MmppSpec,
    SizeModel,
    gen_back_to_back,
    gen_mmcpp,
    gen_mmpp,
    gen_pareto_renewal,
    gen_poisson,
    stationary_distribution,
)
from .trace import (
    Direction,
    FilterSpec,
    PacketRecord,
    Protocol,
    Side,
    Trace,
    Violation,
    ViolationReport,
    apply_filter,
    classify_direction,
    validate_timestamps,
    with_directions,
)

__version__ = "0.1.0"
