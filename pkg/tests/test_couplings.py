"""Tests for coupling constructors."""

import numpy as np
import pytest

from src.errors import DomainError, InvalidEta, InvalidOuter, SingularWeights, StructuralError
from src.models import EtaFamily, MisPair, Normalization, RkTableau
from src.services.couplings import (
    additive_multirate,
    coupling_condition_residual,
    dense_output_fs,
    kr_scheme,
    mis_to_gark,
    mrk_scheme,
    single_rate,
    stability_decoupled_fs,
)
from src.services.schemes import get_base, make
from src.services.stability import is_stability_decoupled
from src.services.tableau import compose_steps


class TestStabilityDecoupled:
    def test_ssp2_two_microsteps(self, ssp2):
        sf = [np.array([[0, 0], [2.0, 0]]), np.zeros((2, 2))]
        fs = stability_decoupled_fs(ssp2, ssp2, sf)
        np.testing.assert_allclose(fs[0], [[0.5, -1.5], [0.5, 0.5]])
        np.testing.assert_allclose(fs[1], [[0.5, 0.5], [0.5, 0.5]])

    def test_coupling_condition_vanishes(self, ssp2, rng):
        sf = [rng.standard_normal((2, 2)) for _ in range(3)]
        for a_fs, a_sf in zip(stability_decoupled_fs(ssp2, ssp2, sf), sf):
            assert coupling_condition_residual(ssp2, ssp2, a_fs, a_sf) < 1e-14

    def test_zero_fast_weight_is_rejected(self, ssp2):
        heun3 = get_base("heun3")
        with pytest.raises(SingularWeights):
            stability_decoupled_fs(heun3, ssp2, [np.zeros((2, 3))])

    def test_shape_is_checked(self, ssp2):
        with pytest.raises(StructuralError):
            stability_decoupled_fs(ssp2, ssp2, [np.zeros((3, 2))])


class TestKrScheme:
    def test_couplings_follow_eta(self, radau1a):
        eta = EtaFamily.from_weights([1, 0])
        sch = kr_scheme(radau1a, radau1a, np.zeros((2, 2)), np.zeros((2, 2)), eta, 3)
        np.testing.assert_allclose(sch.couplings_fs[2], [[2 / 3, 0], [2 / 3, 0]])
        assert all(np.all(a == 0) for a in sch.couplings_sf[1:])
        assert sch.first_microstep_only

    def test_eta_sum_rule_violation(self, radau1a):
        eta = EtaFamily.from_weights([1, 1])
        with pytest.raises(InvalidEta):
            kr_scheme(radau1a, radau1a, np.zeros((2, 2)), np.zeros((2, 2)), eta, 2)

    def test_eta_columns_must_match_slow_stages(self, radau1a):
        with pytest.raises(StructuralError):
            kr_scheme(radau1a, radau1a, np.zeros((2, 2)), np.zeros((2, 2)), EtaFamily.from_weights([1]), 2)

    def test_mrk_normalization(self, radau1a):
        At = np.array([[0, 0], [0, 1.0]])
        sch = mrk_scheme(radau1a, radau1a, At, At, EtaFamily.from_weights([1, 0]), 2)
        np.testing.assert_allclose(sch.couplings_fs[0], At / 2)
        np.testing.assert_allclose(sch.couplings_sf[0], 2 * At)

    def test_catalog_radau1a_couplings(self, mrk_radau1a):
        np.testing.assert_allclose(mrk_radau1a.couplings_fs[0], [[0, 0], [0, 1 / 3]])
        np.testing.assert_allclose(mrk_radau1a.couplings_sf[0], [[0, 0], [0, 4 / 3]])


class TestDenseOutput:
    @pytest.mark.parametrize("M", [1, 2, 5])
    def test_partition_of_unity_gives_M_row_sums(self, ssp2, M):
        d = lambda j, theta: (1 - theta) if j == 0 else theta
        fs = dense_output_fs(ssp2, d, ssp2.c, M)
        np.testing.assert_allclose(sum(fs).sum(axis=1), [M, M])
        np.testing.assert_allclose(ssp2.b @ sum(fs) @ np.ones(2), M)

    def test_interpolation_points(self, ssp2):
        fs = dense_output_fs(ssp2, lambda j, theta: theta if j == 1 else 0.0, ssp2.c, 2)
        np.testing.assert_allclose(fs[1][:, 1], [0.5, 1.0])

    def test_abscissa_outside_unit_interval(self, ssp2):
        with pytest.raises(DomainError):
            dense_output_fs(ssp2, lambda j, theta: 0.0, [0.0, 1.5], 2)


class TestAdditiveMultirate:
    def test_add_stable_2_weights(self):
        sch = make("add-stable-2", 3)
        np.testing.assert_allclose(sch.slow.b, [3 / 14, 11 / 14])
        np.testing.assert_allclose(sch.couplings_fs[1], np.outer(np.ones(2), [3 / 14, 11 / 14]))

    def test_add_stable_2_is_stability_decoupled(self):
        for M in (1, 2, 3, 4):
            assert is_stability_decoupled(make("add-stable-2", M))

    def test_mrk_normalization_scales_couplings(self):
        A = np.array([[0.5, 0], [0.5, 0.5]])
        sch = additive_multirate(A, A, [A], [0.5, 0.5], [0.5, 0.5], 2, normalization=Normalization.MRK)
        np.testing.assert_allclose(sch.couplings_fs[0], A / 2)
        np.testing.assert_allclose(sch.couplings_sf[0], 2 * A)
        np.testing.assert_allclose(sch.couplings_sf[1], 0)

    def test_wrong_number_of_later_matrices(self):
        A = np.eye(2)
        with pytest.raises(StructuralError):
            additive_multirate(A, A, [], [0.5, 0.5], [0.5, 0.5], 3)

    def test_single_rate(self, ssp2):
        sch = single_rate(ssp2)
        assert sch.M == 1
        np.testing.assert_array_equal(sch.couplings_fs[0], ssp2.A)


class TestMisToGark:
    def test_stage_counts_and_abscissae(self):
        outer = get_base("mis3-outer")
        flat = mis_to_gark(MisPair(outer=outer, inner=get_base("kutta3")))
        assert flat.n_fast == 9
        assert flat.n_slow == 3
        np.testing.assert_allclose(flat.A_sf.sum(axis=1), outer.c, atol=1e-15)
        np.testing.assert_allclose(flat.b_f.sum(), 1.0)
        np.testing.assert_allclose(flat.A_ff.sum(axis=1), flat.A_fs.sum(axis=1), atol=1e-14)

    def test_composed_inner_method(self):
        inner = compose_steps(get_base("ssp2"), 3)
        flat = mis_to_gark(MisPair(outer=get_base("heun3"), inner=inner))
        assert flat.n_fast == 18

    @pytest.mark.parametrize("outer", [
        get_base("implicit-euler"),
        get_base("ssp2"),
        RkTableau(A=[[0, 0], ["1/2", 0]], b=[0, 1], c=["1/10", "1/2"]),
    ])
    def test_invalid_outer(self, outer):
        with pytest.raises(InvalidOuter):
            mis_to_gark(MisPair(outer=outer, inner=get_base("ssp2")))
