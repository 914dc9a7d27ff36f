"""Tests for algebraic stability analysis."""

import numpy as np
import pytest

from src.errors import DomainError
from src.models import MrGarkScheme, Partitioning, RkTableau
from src.services.couplings import single_rate, stability_decoupled_fs
from src.services.schemes import get_base, make
from src.services.stability import (
    assemble_p,
    base_p_matrix,
    conditional_stability_weight,
    conditional_step_bound,
    is_algebraically_stable,
    is_psd,
    is_stability_decoupled,
    p_blocks,
    stability_report,
)
from src.services.tableau import flatten


class TestPMatrix:
    def test_radau1a(self, radau1a):
        np.testing.assert_allclose(base_p_matrix(radau1a), [[1 / 16, -1 / 16], [-1 / 16, 1 / 16]], atol=1e-15)
        assert is_psd(base_p_matrix(radau1a))[0]

    def test_ssp2_is_not_algebraically_stable(self, ssp2):
        ok, lam = is_psd(base_p_matrix(ssp2))
        assert not ok
        assert lam < 0

    def test_blocks_are_symmetric(self, mrk_radau1a):
        P = assemble_p(*p_blocks(flatten(mrk_radau1a)))
        np.testing.assert_allclose(P, P.T, atol=1e-15)
        assert P.shape == (6, 6)

    def test_psd_threshold_scales_with_norm(self):
        assert is_psd(np.diag([1e6, -1e-6]))[0]
        assert not is_psd(np.diag([1.0, -1e-6]))[0]


class TestVerdicts:
    @pytest.mark.parametrize("M", [1, 2, 3, 4])
    def test_add_stable_2(self, M):
        sch = make("add-stable-2", M)
        stable, _ = is_algebraically_stable(sch)
        assert stable
        assert is_stability_decoupled(sch)

    def test_add_stable_3_full_p_is_indefinite(self):
        stable, lam = is_algebraically_stable(make("add-stable-3-radau", 2))
        assert not stable
        assert lam < 0

    @pytest.mark.parametrize("M", [1, 2, 3, 4])
    def test_add_stable_3_is_stable_componentwise(self, M):
        """Each partition only sees its own RADAU-IA block, so P_ff and P_ss are PSD."""
        report = stability_report(make("add-stable-3-radau", M), Partitioning.COMPONENT)
        assert report.algebraically_stable
        assert report.bases_stable

    def test_mrk_radau1a_is_not_decoupled(self, mrk_radau1a):
        assert not is_stability_decoupled(mrk_radau1a)

    @pytest.mark.parametrize("M", [1, 2, 3])
    def test_decoupled_ssp2_has_zero_mixed_block(self, M):
        _, P_fs, _ = p_blocks(flatten(make("ssp2-mr-decoupled", M)))
        np.testing.assert_allclose(P_fs, 0, atol=1e-14)


def _random_base(rng, s: int, stable: bool) -> RkTableau:
    """Method with P = Q for a chosen symmetric Q: BA = (Q + bbᵀ)/2 + skew."""
    b = rng.uniform(0.2, 1.0, s)
    b /= b.sum()
    G = rng.normal(size=(s, s))
    Q = G @ G.T + 0.1 * np.eye(s)
    if not stable:
        v = rng.normal(size=s)
        v /= np.linalg.norm(v)
        Q -= (np.linalg.eigvalsh(Q)[-1] + 0.6) * np.outer(v, v)
    S = rng.normal(size=(s, s))
    return RkTableau(A=((Q + np.outer(b, b)) / 2 + S - S.T) / b[:, None], b=b)


class TestDecoupledEquivalence:
    def test_random_base_has_prescribed_p(self, rng):
        tab = _random_base(rng, 3, stable=False)
        assert not is_psd(base_p_matrix(tab))[0]
        assert is_psd(base_p_matrix(_random_base(rng, 3, stable=True)))[0]

    def test_full_p_is_psd_iff_both_bases_are(self, rng):
        seen = set()
        for _ in range(200):
            s = int(rng.integers(2, 4))
            M = int(rng.integers(1, 5))
            fast = _random_base(rng, s, bool(rng.integers(2)))
            slow = _random_base(rng, s, bool(rng.integers(2)))
            sf = [rng.normal(size=(s, s)) for _ in range(M)]
            sch = MrGarkScheme(
                fast=fast, slow=slow, M=M, couplings_fs=stability_decoupled_fs(fast, slow, sf), couplings_sf=sf,
            )
            assert is_stability_decoupled(sch)
            bases = is_psd(base_p_matrix(fast))[0] and is_psd(base_p_matrix(slow))[0]
            assert is_algebraically_stable(sch)[0] is bases
            seen.add(bases)
        assert seen == {True, False}


class TestConditionalStability:
    def test_stable_scheme_needs_no_shift(self):
        assert conditional_stability_weight(make("add-stable-2", 2)) == 0.0

    def test_single_rate_ssp2(self, ssp2):
        r = conditional_stability_weight(single_rate(ssp2))
        np.testing.assert_allclose(r, 2.0, atol=1e-8)

    def test_negative_weights_have_no_shift(self):
        fast = get_base("ssp2")
        slow = RkTableau(A=[[0, 0], [1, 0]], b=["3/2", "-1/2"])
        sch = MrGarkScheme(fast=fast, slow=slow, M=1, couplings_fs=[fast.A], couplings_sf=[fast.A])
        assert conditional_stability_weight(sch) is None

    def test_step_bound(self):
        np.testing.assert_allclose(conditional_step_bound(2.0, -0.5), 0.5)
        assert conditional_step_bound(0.0, -1.0) is None

    def test_step_bound_needs_negative_mu(self):
        with pytest.raises(DomainError):
            conditional_step_bound(1.0, 0.0)


class TestReport:
    def test_additive_report(self):
        report = stability_report(make("add-stable-2", 2), mu=-0.5)
        assert report.algebraically_stable
        assert report.stability_decoupled
        assert report.bases_stable
        assert report.conditional_r == 0.0
        assert report.step_bound is None

    def test_component_partitioning_ignores_mixed_block(self):
        sch = make("mrk-radau1a-3", 1)
        additive = stability_report(sch, Partitioning.ADDITIVE)
        component = stability_report(sch, Partitioning.COMPONENT)
        assert component.partitioning is Partitioning.COMPONENT
        assert component.algebraically_stable
        assert component.min_eigenvalue >= additive.min_eigenvalue - 1e-12

    def test_conditional_step_bound_from_report(self, ssp2):
        report = stability_report(single_rate(ssp2), mu=-1.0)
        assert not report.algebraically_stable
        np.testing.assert_allclose(report.conditional_r, 2.0, atol=1e-8)
        np.testing.assert_allclose(report.step_bound, 1.0, atol=1e-8)

    def test_report_serializes(self, mrk_radau1a):
        data = stability_report(mrk_radau1a).model_dump(mode="json")
        assert isinstance(data["P_fs"], list)
        assert len(data["P_ff"]) == 4
