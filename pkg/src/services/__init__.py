"""Services package."""

from .integrator import flat_gark_step, integrate, mgark_step, newton_solve, stage_values
from .problems import component_partition, component_problem, get_problem, list_problems
from .schemes import get_base, list_entries, make
from .storage import SchemeStorage, storage

__all__ = [
    "SchemeStorage",
    "component_partition",
    "component_problem",
    "flat_gark_step",
    "get_base",
    "get_problem",
    "integrate",
    "list_entries",
    "list_problems",
    "make",
    "mgark_step",
    "newton_solve",
    "stage_values",
    "storage",
]
