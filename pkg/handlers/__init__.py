"""
Обработчики подкоманд CLI.
"""
from .model import register_model_handlers
from .basis import register_basis_handlers
from .estimation import register_estimation_handlers
from .comparison import register_comparison_handlers
from .history import register_history_handlers

__all__ = [
    "register_model_handlers",
    "register_basis_handlers",
    "register_estimation_handlers",
    "register_comparison_handlers",
    "register_history_handlers"
]
