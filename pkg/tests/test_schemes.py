"""Tests for the scheme catalog."""

import numpy as np
import pytest

from src.errors import InvalidParameter, UnknownScheme
from src.models import FlatGarkTableau, MrGarkScheme
from src.services.schemes import (
    BASE_TABLEAUS,
    CATALOG,
    get_base,
    list_entries,
    make,
    two_stage_decoupled,
)
from src.services.monotonicity import am_radius
from src.services.order import classified_order
from src.services.stability import stability_report
from src.services.tableau import validate_rk

# Verdict under the entry's partitioning (None: not pinned) and the M with a positive a.m. radius.
# Explicit entries have P_ii = -b_i² < 0; radau and add-stable couplings carry negative entries.
FINGERPRINTS = {
    "mrk-radau1a-3": (None, ()),
    "mrk-radau2a-3": (None, ()),
    "add-stable-2": (True, ()),
    "add-stable-3-radau": (True, ()),
    "ssp2-mr-decoupled": (False, ()),
    "ssp2-mr-firstfast": (False, (1,)),
    "ssp2-mr-lastslow": (False, (1, 2, 3, 4)),
    "table3-2stage": (False, ()),
    "mis": (False, ()),
}


@pytest.mark.parametrize("name", list(BASE_TABLEAUS))
def test_base_tableaus_are_valid(name):
    tab = get_base(name)
    assert tab.name == name
    assert validate_rk(tab).ok


@pytest.mark.parametrize("name", list(CATALOG))
@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_every_entry_builds(name, M):
    sch = make(name, M)
    assert sch.M == M
    if isinstance(sch, MrGarkScheme):
        assert validate_rk(sch.fast).ok
        assert validate_rk(sch.slow).ok
        assert len(sch.couplings_fs) == M
    else:
        assert isinstance(sch, FlatGarkTableau)


@pytest.mark.parametrize("name", [n for n in CATALOG if CATALOG[n].variants])
def test_every_variant_builds(name):
    for variant in CATALOG[name].variants:
        assert make(name, 2, variant) is not None


def test_add_stable_2_weights_depend_on_M():
    sch = make("add-stable-2", 3)
    np.testing.assert_allclose(sch.slow.b, [3 / 14, 11 / 14])
    np.testing.assert_allclose(sch.fast.b, [0.5, 0.5])


def test_printed_radau2a_variant_uses_radau1a_numbers():
    assert make("mrk-radau2a-3", 2).fast.name == "radau1a"
    assert make("mrk-radau2a-3", 2, "radau2a").fast.name == "radau2a"


def test_two_stage_coupling_needs_two_stages():
    with pytest.raises(InvalidParameter):
        two_stage_decoupled(get_base("heun3"), 2)


def test_two_stage_coupling_entry():
    sch = two_stage_decoupled(get_base("radau2a"), 3)
    np.testing.assert_allclose(sch.couplings_sf[0], [[0, 0], [3 / (2 * 0.25), 0]])
    assert all(not np.any(a) for a in sch.couplings_sf[1:])


def test_unknown_names():
    with pytest.raises(UnknownScheme):
        get_base("nosuch")
    with pytest.raises(UnknownScheme) as err:
        make("nosuch")
    assert "mis" in err.value.details["known"]


def test_bad_parameters():
    with pytest.raises(InvalidParameter):
        make("ssp2-mr-lastslow", 0)
    with pytest.raises(InvalidParameter):
        make("table3-2stage", 2, "rk4")


def test_catalog_listing():
    entries = list_entries()
    assert [e.name for e in entries] == list(CATALOG)
    assert all(e.expected_order >= 1 for e in entries)


@pytest.mark.parametrize("M", [1, 3])
def test_mis_entry_records_inner_steps(M):
    flat = make("mis", M)
    assert flat.M == M
    assert not flat.telescoped
    assert flat.step_ratio == 1
    np.testing.assert_allclose(flat.b_f.sum(), 1.0)


def test_fingerprints_cover_catalog():
    assert set(FINGERPRINTS) == set(CATALOG)


@pytest.mark.parametrize("name", list(FINGERPRINTS))
@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_catalog_fingerprint(name, M):
    entry = CATALOG[name]
    stable, positive_radius = FINGERPRINTS[name]
    sch = make(name, M)
    assert classified_order(sch) == entry.expected_order
    if stable is not None:
        assert stability_report(sch, entry.partitioning).algebraically_stable is stable
    assert (am_radius(sch) > 0) is (M in positive_radius)
