"""CLI experiment models."""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from .reports import Partitioning


class Command(str, Enum):
    CHECK = "check"
    CONVERGE = "converge"
    STABILITY = "stability"
    MONOTONICITY = "monotonicity"
    INTEGRATE = "integrate"
    LIST = "list"
    EXPORT = "export"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class SchemeId(BaseModel):
    """Catalog key plus its parameters."""
    name: str
    M: int = Field(default=1, ge=1)
    variant: Optional[str] = None


class ExperimentSpec(BaseModel):
    """One CLI invocation."""
    command: Command
    scheme: Optional[SchemeId] = None
    scheme_file: Optional[Path] = None
    problem: Optional[str] = None
    H_list: List[float] = Field(default_factory=list)
    t_end: float = 1.0
    output: Optional[Path] = None
    format: OutputFormat = OutputFormat.TEXT
    partitioning: Optional[Partitioning] = None
    rho: Optional[float] = None
    mu: Optional[float] = None
    r_max: Optional[float] = None
    expect_order: Optional[int] = None
    record_micro: bool = False

    @field_validator("H_list")
    @classmethod
    def _positive_steps(cls, value: List[float]) -> List[float]:
        if any(h <= 0 for h in value):
            raise ValueError("step sizes must be positive")
        return value


class ExperimentResult(BaseModel):
    """Outcome of an experiment: exit code plus a JSON-ready payload."""
    command: Command
    exit_code: int = 0
    payload: Dict[str, Any] = Field(default_factory=dict)
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    artifacts: List[str] = Field(default_factory=list)
