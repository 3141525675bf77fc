"""
Сервисы с вычислительной логикой.
"""
from .numerics_service import HeadFactorization, NumericsService
from .basis_service import BasisService
from .generator_service import GeneratorService
from .estimation_service import EstimationService
from .poly_service import PolyService
from .bench_service import BenchService

__all__ = [
    "HeadFactorization",
    "NumericsService",
    "BasisService",
    "GeneratorService",
    "EstimationService",
    "PolyService",
    "BenchService"
]
