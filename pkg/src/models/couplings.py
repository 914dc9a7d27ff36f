"""Coupling-construction inputs."""

from enum import Enum

from pydantic import BaseModel, ConfigDict

from .eta import EtaFamily
from .tableau import RkTableau

__all__ = ["EtaFamily", "MisPair", "Normalization"]


class Normalization(str, Enum):
    """How coupling matrices of a multirate additive pair are given."""
    GARK = "gark"
    MRK = "mrk"


class MisPair(BaseModel):
    """Explicit outer (slow) method and inner (fast) method of an MIS scheme."""
    model_config = ConfigDict(frozen=True)

    outer: RkTableau
    inner: RkTableau
