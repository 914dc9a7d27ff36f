"""Catalog of named base methods and multirate schemes."""

import logging
from typing import Callable, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..errors import InvalidParameter, UnknownScheme
from ..models import EtaFamily, FlatGarkTableau, MisPair, MrGarkScheme, Normalization, Partitioning, RkTableau
from .couplings import additive_multirate, mis_to_gark, mrk_scheme, stability_decoupled_fs
from .tableau import compose_steps

logger = logging.getLogger(__name__)

Scheme = Union[MrGarkScheme, FlatGarkTableau]


# Base methods
BASE_TABLEAUS: Dict[str, RkTableau] = {
    "explicit-euler": RkTableau(A=[[0]], b=[1], name="explicit-euler"),
    "implicit-euler": RkTableau(A=[[1]], b=[1], name="implicit-euler"),
    "midpoint": RkTableau(A=[["1/2"]], b=[1], name="midpoint"),
    "ssp2": RkTableau(A=[[0, 0], [1, 0]], b=["1/2", "1/2"], name="ssp2"),
    "heun3": RkTableau(A=[[0, 0, 0], ["1/3", 0, 0], [0, "2/3", 0]], b=["1/4", 0, "3/4"], name="heun3"),
    "kutta3": RkTableau(A=[[0, 0, 0], ["1/2", 0, 0], [-1, 2, 0]], b=["1/6", "2/3", "1/6"], name="kutta3"),
    "rk4": RkTableau(
        A=[[0, 0, 0, 0], ["1/2", 0, 0, 0], [0, "1/2", 0, 0], [0, 0, 1, 0]],
        b=["1/6", "1/3", "1/3", "1/6"],
        name="rk4",
    ),
    "radau1a": RkTableau(A=[["1/4", "-1/4"], ["1/4", "5/12"]], b=["1/4", "3/4"], name="radau1a"),
    "radau2a": RkTableau(A=[["5/12", "-1/12"], ["3/4", "1/4"]], b=["3/4", "1/4"], name="radau2a"),
    "mis3-outer": RkTableau(
        A=[[0, 0, 0], ["1/4", 0, 0], ["-2/9", "8/9", 0]], b=["1/4", 0, "3/4"], name="mis3-outer",
    ),
}


def get_base(name: str) -> RkTableau:
    try:
        return BASE_TABLEAUS[name]
    except KeyError:
        raise UnknownScheme(f"unknown base method '{name}'", known=sorted(BASE_TABLEAUS)) from None


class CatalogEntry(BaseModel):
    """A registered scheme factory."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    summary: str
    factory: Callable[..., Scheme]
    variants: List[str] = []
    default_variant: Optional[str] = None
    expected_order: int
    partitioning: Partitioning = Partitioning.ADDITIVE


def _radau1a_mrk(M: int, variant: Optional[str]) -> MrGarkScheme:
    base = get_base("radau1a")
    At = np.array([[0.0, 0.0], [2 / 3 - M / 3, M / 3]])
    return mrk_scheme(base, base, At, At, EtaFamily.from_weights([1, 0]), M, name="mrk-radau1a-3")


def _radau2a_mrk(M: int, variant: Optional[str]) -> MrGarkScheme:
    # The printed coefficient block repeats the RADAU-IA numbers.
    base = get_base("radau1a" if variant == "printed" else "radau2a")
    At = np.array([[1 / 3, 0.0], [2.0 - M, M - 1.0]])
    return mrk_scheme(base, base, At, At, EtaFamily.from_weights([1.5, -0.5]), M, name="mrk-radau2a-3")


def _add_stable_2(M: int, variant: Optional[str]) -> MrGarkScheme:
    b_f = np.array([0.5, 0.5])
    b_s = np.array([3.0, 4 * M - 1.0]) / (4 * M + 2)
    A_f = np.array([[0.25, -M / 2], [(M + 1) / 2, 0.25]])
    A_s = np.array([[1.5, -M * (4 * M - 1.0)], [3.0 * (M + 1), (4 * M - 1) / 2]]) / (4 * M + 2)
    later = [np.outer(np.ones(2), b_s) for _ in range(M - 1)]
    return additive_multirate(A_f, A_s, later, b_f, b_s, M, name="add-stable-2")


def _add_stable_3_radau(M: int, variant: Optional[str]) -> MrGarkScheme:
    radau = get_base("radau1a").A
    A = np.zeros((4, 4))
    A[:2, :2] = radau
    A[2:, 2:] = radau
    At_f = np.zeros((4, 4))
    At_f[3, 2:] = [-1 / 3, 1 / 3]
    At_s = np.zeros((4, 4))
    At_s[1, :2] = [-1 / 3, 1 / 3]
    A_f = A + (M - 1) * At_f
    A_s = A + (M - 1) * At_s
    eta = EtaFamily.from_weights([1, 0, 0, 0])
    later = [A_s + eta.F(lam, 4) for lam in range(1, M)]
    return additive_multirate(
        A_f, A_s, later, [0.25, 0.75, 0, 0], [0, 0, 0.25, 0.75], M,
        normalization=Normalization.MRK, name="add-stable-3-radau",
    )


def _first_step_sf(M: int) -> List[np.ndarray]:
    return [np.array([[0.0, 0.0], [float(M), 0.0]])] + [np.zeros((2, 2)) for _ in range(M - 1)]


def _ssp2_scheme(M: int, couplings_fs: List[np.ndarray], couplings_sf: List[np.ndarray], name: str) -> MrGarkScheme:
    base = get_base("ssp2")
    return MrGarkScheme(
        fast=base, slow=base, M=M, couplings_fs=couplings_fs, couplings_sf=couplings_sf, name=name,
    )


def _ssp2_decoupled(M: int, variant: Optional[str]) -> MrGarkScheme:
    base = get_base("ssp2")
    sf = _first_step_sf(M)
    return _ssp2_scheme(M, stability_decoupled_fs(base, base, sf), sf, "ssp2-mr-decoupled")


def _ssp2_firstfast(M: int, variant: Optional[str]) -> MrGarkScheme:
    A = get_base("ssp2").A
    return _ssp2_scheme(M, [A] * M, _first_step_sf(M), "ssp2-mr-firstfast")


def _ssp2_lastslow(M: int, variant: Optional[str]) -> MrGarkScheme:
    A = get_base("ssp2").A
    fs = [np.zeros((2, 2)) for _ in range(M - 1)] + [M * A]
    return _ssp2_scheme(M, fs, _first_step_sf(M), "ssp2-mr-lastslow")


def two_stage_decoupled(base: RkTableau, M: int) -> MrGarkScheme:
    """Explicit-preserving coupling A^{sf,1} = [[0, 0], [M/(2 b_2), 0]] with the decoupled A^{fs}."""
    if base.s != 2:
        raise InvalidParameter(f"base method must have two stages, '{base.name}' has {base.s}")
    sf = [np.array([[0.0, 0.0], [M / (2 * base.b[1]), 0.0]])] + [np.zeros((2, 2)) for _ in range(M - 1)]
    return MrGarkScheme(
        fast=base, slow=base, M=M, couplings_fs=stability_decoupled_fs(base, base, sf),
        couplings_sf=sf, name=f"table3-2stage[{base.name}]",
    )


def _table3(M: int, variant: Optional[str]) -> MrGarkScheme:
    return two_stage_decoupled(get_base(variant or "ssp2"), M)


def _mis(M: int, variant: Optional[str]) -> FlatGarkTableau:
    outer = get_base(variant or "mis3-outer")
    inner = compose_steps(get_base("kutta3"), M)
    return mis_to_gark(MisPair(outer=outer, inner=inner), inner_steps=M)


CATALOG: Dict[str, CatalogEntry] = {
    e.name: e
    for e in [
        CatalogEntry(
            name="mrk-radau1a-3",
            summary="RADAU-IA pair coupled through the first micro-step",
            factory=_radau1a_mrk,
            expected_order=3,
        ),
        CatalogEntry(
            name="mrk-radau2a-3",
            summary="RADAU-IIA first micro-step coupling (printed coefficients by default)",
            factory=_radau2a_mrk,
            variants=["printed", "radau2a"],
            default_variant="printed",
            expected_order=1,
        ),
        CatalogEntry(
            name="add-stable-2",
            summary="Algebraically stable multirate additive pair of order two",
            factory=_add_stable_2,
            expected_order=2,
        ),
        CatalogEntry(
            name="add-stable-3-radau",
            summary="Doubled RADAU-IA multirate additive pair of order three",
            factory=_add_stable_3_radau,
            expected_order=3,
            partitioning=Partitioning.COMPONENT,
        ),
        CatalogEntry(
            name="ssp2-mr-decoupled",
            summary="SSP2 base with stability-decoupled couplings",
            factory=_ssp2_decoupled,
            expected_order=2,
        ),
        CatalogEntry(
            name="ssp2-mr-firstfast",
            summary="SSP2 base, slow stages see the first micro-step, A^{fs} = A",
            factory=_ssp2_firstfast,
            expected_order=2,
        ),
        CatalogEntry(
            name="ssp2-mr-lastslow",
            summary="SSP2 base, slow terms only in the last micro-step",
            factory=_ssp2_lastslow,
            expected_order=2,
        ),
        CatalogEntry(
            name="table3-2stage",
            summary="Two-stage base with the explicit order-two slow-fast coupling",
            factory=_table3,
            variants=["ssp2", "radau1a", "radau2a"],
            default_variant="ssp2",
            expected_order=2,
        ),
        CatalogEntry(
            name="mis",
            summary="Multirate infinitesimal step method with a Kutta RK3 inner method",
            factory=_mis,
            variants=["mis3-outer", "heun3"],
            default_variant="mis3-outer",
            expected_order=3,
        ),
    ]
}


def get_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownScheme(f"unknown scheme '{name}'", known=sorted(CATALOG)) from None


def make(name: str, M: int = 1, variant: Optional[str] = None) -> Scheme:
    """Build a catalog scheme for M micro-steps."""
    entry = get_entry(name)
    if M < 1:
        raise InvalidParameter(f"M must be at least 1, got {M}")
    variant = variant or entry.default_variant
    if variant is not None and variant not in entry.variants:
        raise InvalidParameter(f"scheme '{name}' has no variant '{variant}'", variants=entry.variants)
    logger.debug("Building %s with M=%d variant=%s", name, M, variant)
    return entry.factory(M, variant)


def list_entries() -> List[CatalogEntry]:
    return list(CATALOG.values())
