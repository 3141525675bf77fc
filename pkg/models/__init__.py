"""
Модели данных: проводимости, сетки, параметризованные системы, базисы и результаты.
"""
from .conductivity import ConductivityPoint, MultiplierSpec, MultiplierTerm
from .grid import ConductivityGrid, GridAxis
from .system import Deflation, ParametrizedSystem
from .basis import AlphaSolution, GramData, GreedyConfig, ReducedRows, SupportBasis, TraceEntry
from .results import ApproxResult, ErrorMap, EstimateResult, FitResult, PolyEvaluation, PolyModel
from .specs import MiniHeadSpec, SynthSpec

__all__ = [
    "ConductivityPoint", "MultiplierSpec", "MultiplierTerm",
    "ConductivityGrid", "GridAxis",
    "Deflation", "ParametrizedSystem",
    "AlphaSolution", "GramData", "GreedyConfig", "ReducedRows", "SupportBasis", "TraceEntry",
    "ApproxResult", "ErrorMap", "EstimateResult", "FitResult", "PolyEvaluation", "PolyModel",
    "MiniHeadSpec", "SynthSpec"
]
