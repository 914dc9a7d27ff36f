"""Tests for tableau validation, flattening and stage structure."""

import numpy as np
import pytest

from src.errors import InvalidParameter, StructuralError
from src.models import FlatGarkTableau, MrGarkScheme, RkTableau, Severity, StructureTag
from src.services.couplings import single_rate
from src.services.schemes import get_base, make
from src.services.tableau import (
    classify_structure,
    compose_steps,
    flatten,
    internal_consistency_residuals,
    stage_blocks,
    unflatten,
    validate_rk,
)


class TestRkTableau:
    def test_rational_strings_are_parsed(self):
        tab = RkTableau(A=[["1/4", "-1/4"], ["1/4", "5/12"]], b=["1/4", "3/4"])
        np.testing.assert_allclose(tab.A[1, 1], 5 / 12)
        np.testing.assert_allclose(tab.c, [0.0, 2 / 3])

    def test_arrays_are_read_only(self, ssp2):
        with pytest.raises(ValueError):
            ssp2.A[0, 0] = 1.0

    def test_explicit_flags(self, ssp2, radau1a):
        assert ssp2.is_explicit
        assert not radau1a.is_explicit
        assert get_base("implicit-euler").is_diagonally_implicit


class TestValidateRk:
    def test_consistent_tableau_is_ok(self, radau1a):
        report = validate_rk(radau1a)
        assert report.ok
        assert report.findings[0].severity == Severity.INFO

    def test_wrong_abscissae_report_row_sum_residual(self, radau1a):
        bad = RkTableau(A=radau1a.A, b=radau1a.b, c=[0, "1/2"])
        report = validate_rk(bad)
        assert not report.ok
        finding = next(f for f in report.findings if f.code == "row-sum")
        assert finding.severity == Severity.ERROR
        np.testing.assert_allclose(finding.residual, 1 / 6, atol=1e-15)

    def test_inconsistent_weights_warn(self):
        report = validate_rk(RkTableau(A=[[0]], b=["1/2"]))
        assert report.ok
        assert any(f.code == "weights" and f.severity == Severity.WARNING for f in report.findings)

    def test_shape_mismatch(self):
        report = validate_rk(RkTableau(A=[[0, 0], [1, 0]], b=[1], c=[0, 1]))
        assert not report.ok
        assert {f.code for f in report.findings} >= {"shape-A", "shape-c"}


class TestFlatten:
    def test_ssp2_fast_block(self):
        flat = flatten(make("ssp2-mr-firstfast", 2))
        expected = np.array([
            [0, 0, 0, 0],
            [0.5, 0, 0, 0],
            [0.25, 0.25, 0, 0],
            [0.25, 0.25, 0.5, 0],
        ])
        np.testing.assert_allclose(flat.A_ff, expected)
        np.testing.assert_allclose(flat.b_f, [0.25] * 4)
        np.testing.assert_allclose(flat.c_f, [0, 0.5, 0.5, 1.0])

    def test_coupling_blocks(self):
        sch = make("ssp2-mr-lastslow", 3)
        flat = flatten(sch)
        assert flat.A_fs.shape == (6, 2)
        assert flat.A_sf.shape == (2, 6)
        np.testing.assert_allclose(flat.A_fs[4:], 3 * sch.fast.A)
        np.testing.assert_allclose(flat.A_sf[:, :2], sch.couplings_sf[0] / 3)

    @pytest.mark.parametrize("name", ["mrk-radau1a-3", "add-stable-2", "ssp2-mr-decoupled"])
    @pytest.mark.parametrize("M", [1, 2, 4])
    def test_unflatten_recovers_couplings(self, name, M):
        sch = make(name, M)
        back = unflatten(flatten(sch), M)
        np.testing.assert_allclose(back.fast.A, sch.fast.A, atol=1e-14)
        np.testing.assert_allclose(back.fast.b, sch.fast.b, atol=1e-14)
        for got, want in zip(back.couplings_fs + back.couplings_sf, sch.couplings_fs + sch.couplings_sf):
            np.testing.assert_allclose(got, want, atol=1e-13)

    def test_unflatten_rejects_indivisible_stage_count(self):
        flat = flatten(make("ssp2-mr-firstfast", 2))
        with pytest.raises(StructuralError):
            unflatten(flat, 3)

    def test_unflatten_rejects_non_telescoping_fast_block(self):
        flat = flatten(make("ssp2-mr-firstfast", 2))
        data = flat.model_dump()
        A_ff = np.array(flat.A_ff)
        A_ff[3, 0] = 0.3
        data.update(A_ff=A_ff, c_f=None)
        with pytest.raises(StructuralError):
            unflatten(FlatGarkTableau(**data), 2)


class TestComposeSteps:
    def test_two_ssp2_steps(self, ssp2):
        doubled = compose_steps(ssp2, 2)
        assert doubled.s == 4
        np.testing.assert_allclose(doubled.b, [0.25] * 4)
        np.testing.assert_allclose(doubled.c, [0, 0.5, 0.5, 1.0])

    def test_single_step_is_identity(self, radau1a):
        np.testing.assert_allclose(compose_steps(radau1a, 1).A, radau1a.A)

    def test_rejects_zero_steps(self, ssp2):
        with pytest.raises(InvalidParameter):
            compose_steps(ssp2, 0)


class TestStructure:
    def test_stage_blocks_of_lower_triangular_matrix(self):
        A = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0]], dtype=float)
        blocks = stage_blocks(A)
        assert [b.tolist() for b in blocks] == [[0], [1], [2]]

    def test_stage_blocks_dependencies_first(self):
        A = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 1]], dtype=float)
        order = [b.tolist() for b in stage_blocks(A)]
        assert order.index([1]) < order.index([0])
        assert [2] in order

    def test_full_matrix_is_one_block(self, radau1a):
        blocks = stage_blocks(radau1a.A)
        assert len(blocks) == 1
        assert sorted(blocks[0].tolist()) == [0, 1]

    @pytest.mark.parametrize("M", [1, 3])
    def test_explicit_schemes(self, M):
        for name in ("ssp2-mr-firstfast", "ssp2-mr-lastslow"):
            assert classify_structure(make(name, M)) is StructureTag.EXPLICIT

    def test_decoupled_ssp2_couples_first_fast_stage_to_slow_stage(self):
        assert classify_structure(make("ssp2-mr-decoupled", 2)) is StructureTag.FIRST_MICROSTEP
        assert classify_structure(make("ssp2-mr-decoupled", 1)) is StructureTag.STAGGERED

    def test_first_microstep_coupled(self, mrk_radau1a):
        assert mrk_radau1a.structure_tag is StructureTag.FIRST_MICROSTEP

    def test_single_macro_step_is_fully_coupled(self):
        assert classify_structure(make("mrk-radau1a-3", 1)) is StructureTag.FULLY_COUPLED
        assert classify_structure(single_rate(get_base("midpoint"))) is StructureTag.FULLY_COUPLED

    def test_uncoupled_implicit_partitions_are_staggered(self):
        euler = get_base("implicit-euler")
        sch = MrGarkScheme(
            fast=euler, slow=euler, M=1, couplings_fs=[[[0]]], couplings_sf=[[[0]]],
        )
        assert classify_structure(sch) is StructureTag.STAGGERED


class TestMrGarkScheme:
    def test_wrong_number_of_couplings(self, ssp2):
        with pytest.raises(StructuralError):
            MrGarkScheme(fast=ssp2, slow=ssp2, M=2, couplings_fs=[ssp2.A], couplings_sf=[ssp2.A, ssp2.A])

    def test_wrong_coupling_shape(self, ssp2):
        with pytest.raises(StructuralError):
            MrGarkScheme(fast=ssp2, slow=ssp2, M=1, couplings_fs=[[[0, 0, 0]]], couplings_sf=[ssp2.A])

    def test_round_trip_through_json(self, mrk_radau1a):
        data = mrk_radau1a.model_dump(mode="json")
        again = MrGarkScheme.model_validate(data)
        for got, want in zip(again.couplings_fs, mrk_radau1a.couplings_fs):
            np.testing.assert_array_equal(got, want)


class TestInternalConsistency:
    def test_first_fast_coupling_is_inconsistent(self):
        res_fast, res_slow = internal_consistency_residuals(make("ssp2-mr-firstfast", 2))
        np.testing.assert_allclose(res_fast, 0.5)
        np.testing.assert_allclose(res_slow, 0.0, atol=1e-15)

    @pytest.mark.parametrize("M", [1, 2, 3])
    def test_mrk_radau1a_is_consistent(self, M):
        assert max(internal_consistency_residuals(make("mrk-radau1a-3", M))) < 1e-13
