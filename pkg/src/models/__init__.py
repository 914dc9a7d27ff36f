"""Models package."""

from .couplings import EtaFamily, MisPair, Normalization
from .experiment import Command, ExperimentResult, ExperimentSpec, OutputFormat, SchemeId
from .problem import (
    JacobianMode,
    PartitionedIvp,
    ProblemMetadata,
    SolverConfig,
    StepStats,
    Trajectory,
)
from .reports import (
    CheckReport,
    ConditionResidual,
    ConvergenceStudy,
    MonotonicityReport,
    OrderReport,
    Partition,
    Partitioning,
    StabilityReport,
)
from .tableau import (
    Finding,
    FlatGarkTableau,
    MrGarkScheme,
    RkTableau,
    Severity,
    StructureTag,
    ValidationReport,
)

__all__ = [
    "CheckReport",
    "Command",
    "ConditionResidual",
    "ConvergenceStudy",
    "EtaFamily",
    "ExperimentResult",
    "ExperimentSpec",
    "Finding",
    "FlatGarkTableau",
    "JacobianMode",
    "MisPair",
    "MonotonicityReport",
    "MrGarkScheme",
    "Normalization",
    "OrderReport",
    "OutputFormat",
    "Partition",
    "PartitionedIvp",
    "Partitioning",
    "ProblemMetadata",
    "RkTableau",
    "SchemeId",
    "Severity",
    "SolverConfig",
    "StabilityReport",
    "StepStats",
    "StructureTag",
    "Trajectory",
    "ValidationReport",
]
