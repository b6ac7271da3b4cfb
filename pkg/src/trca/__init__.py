"""Root cause analysis for threshold-based monitoring systems.

Thresholded series are turned into binary anomaly indicators, a lagged causal
graph is learned from offline indicators, and root causes of an online
incident are read off that graph.
"""

from .citest import chi_square_sf, gsquare, tabulate
from .discovery import DiscoveryConfig, discover_summary, discover_window_graph
from .errors import (
    ConfigError,
    ContractViolation,
    DataError,
    GenerationError,
    InputError,
    InsufficientDataError,
    ParseError,
    TrcaError,
)
from .evaluation import ExperimentConfig, emit_results, f1_score, run_experiment, threshold_sweep
from .graph import SummaryGraph, WindowGraph, check_assumption5, collapse_to_summary, scc_decompose
from .rca import AnomalyReport, analyze, detect_anomalies, trca, trca_agent
from .timeseries import (
    BinaryPanel,
    ThresholdSpec,
    TimeSeriesPanel,
    binarize,
    load_panel,
    normalize,
    select_thresholds,
)

__version__ = "0.1.0"
