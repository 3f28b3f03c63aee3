"""Seeded graph matching by percolation with iterative repair."""

__version__ = "0.1.0"

from .engine import Matching, ScoreKey, weight
from .ews import expand_once, expand_when_stuck
from .graph import Graph, GraphError, build_graph, read_edge_list
from .irma import IrmaConfig, IrmaRun, irma
from .metrics import MetricsReport, score_matching
from .parallel import parallel_ews, parallel_irma
from .synth import Instance, SamplingConfig, barabasi_albert, erdos_renyi, pick_seed, sample_pair

__all__ = [
    "Graph", "GraphError", "Instance", "IrmaConfig", "IrmaRun", "Matching", "MetricsReport",
    "SamplingConfig", "ScoreKey", "barabasi_albert", "build_graph", "erdos_renyi", "expand_once",
    "expand_when_stuck", "irma", "parallel_ews", "parallel_irma", "pick_seed", "read_edge_list",
    "sample_pair", "score_matching", "weight",
]
