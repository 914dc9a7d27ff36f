"""Pydantic field types for numpy arrays given as exact rationals or floats."""

from fractions import Fraction
from typing import Annotated, Any, List

import numpy as np
from pydantic import BeforeValidator, PlainSerializer


def _to_number(value: Any) -> float:
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    return float(value)


def _rationalize(value: Any) -> Any:
    if isinstance(value, (list, tuple)):
        return [_rationalize(v) for v in value]
    return _to_number(value)


def to_array(value: Any) -> np.ndarray:
    """Convert nested lists of numbers, Fractions or "p/q" strings to a read-only array."""
    if isinstance(value, np.ndarray):
        arr = np.array(value, dtype=float)
    else:
        arr = np.array(_rationalize(value), dtype=float)
    arr.flags.writeable = False
    return arr


def to_array_list(value: Any) -> List[np.ndarray]:
    return [to_array(v) for v in value]


def _serialize(arr: np.ndarray) -> list:
    return arr.tolist()


def _serialize_list(arrays: List[np.ndarray]) -> list:
    return [a.tolist() for a in arrays]


Array = Annotated[
    np.ndarray,
    BeforeValidator(to_array),
    PlainSerializer(_serialize, return_type=list),
]

ArrayList = Annotated[
    List[np.ndarray],
    BeforeValidator(to_array_list),
    PlainSerializer(_serialize_list, return_type=list),
]
