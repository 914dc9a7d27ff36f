"""Shared fixtures."""

import io

import numpy as np
import pytest
from rich.console import Console

from src.models import MrGarkScheme, PartitionedIvp, RkTableau
from src.services.schemes import CATALOG, get_base, make

MULTIRATE_NAMES = [name for name in CATALOG if name != "mis"]


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def ssp2() -> RkTableau:
    return get_base("ssp2")


@pytest.fixture
def radau1a() -> RkTableau:
    return get_base("radau1a")


@pytest.fixture
def mrk_radau1a() -> MrGarkScheme:
    return make("mrk-radau1a-3", 2)


def linear_ivp(lam_slow: float, lam_fast: float, y0: float = 1.0) -> PartitionedIvp:
    """Scalar y' = lam_slow·y + lam_fast·y."""
    return PartitionedIvp(
        name="scalar",
        dim=1,
        f_slow=lambda t, y: lam_slow * y,
        f_fast=lambda t, y: lam_fast * y,
        y0=[y0],
        exact=lambda t: np.array([y0 * np.exp((lam_slow + lam_fast) * t)]),
        jac_slow=lambda t, y: np.array([[lam_slow]]),
        jac_fast=lambda t, y: np.array([[lam_fast]]),
    )


def rk_step(tab: RkTableau, f, y: np.ndarray, h: float) -> np.ndarray:
    """One step of an explicit method for an autonomous right-hand side."""
    K = []
    for i in range(tab.s):
        Y = y + h * sum((tab.A[i, j] * K[j] for j in range(i)), np.zeros_like(y))
        K.append(f(Y))
    return y + h * sum(tab.b[i] * K[i] for i in range(tab.s))


@pytest.fixture
def quiet_cli(monkeypatch):
    """Route CLI log output to a buffer so stdout holds only reports."""
    from src.cli import commands

    monkeypatch.setattr(commands, "err_console", Console(file=io.StringIO(), stderr=True))
    return commands
