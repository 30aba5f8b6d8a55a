"""Tests for the FKM and product cone certificates."""

import numpy as np
import pytest

from fkmcone.certify import (
    FKM_COLUMNS,
    PRODUCT_COLUMNS,
    PRODUCT_THRESHOLD,
    ThetaSource,
    Verdict,
    certify_fkm,
    certify_product,
    irreducible_inequality,
    product_chain,
    product_lists,
    reducible_inequality,
    sweep,
    sweep_products,
)
from fkmcone.clifford import delta
from fkmcone.utils import InvalidParameterError


class TestCertifyFKM:
    def test_m9_k1(self):
        cert = certify_fkm(9, 1)
        assert cert.verdict is Verdict.CERTIFIED
        assert cert.n == 15
        assert cert.dim_cone == 30
        assert cert.alpha_sq == pytest.approx(84.0)
        assert cert.theta_src is ThetaSource.SCALED
        assert cert.normal_radius == pytest.approx(np.arctan(np.sqrt(3) / 2))
        assert cert.margin == pytest.approx(cert.normal_radius - 2 * cert.theta_rad)
        assert cert.simplified_theta_rad == pytest.approx(np.arctan(1.2 / 15))

    def test_m3_k3(self):
        cert = certify_fkm(3, 3)
        assert cert.certified
        assert cert.n == 11
        assert cert.diagnostics["inner_alpha_sq"] == pytest.approx(17.85, abs=0.01)

    def test_m2_k2_inconclusive(self):
        cert = certify_fkm(2, 2)
        assert cert.verdict is Verdict.INCONCLUSIVE
        assert cert.theta_src is ThetaSource.DIRECT
        assert cert.theta_rad is None
        assert cert.reason == "no vanishing angle"
        assert cert.corroboration["irreducible"] is None

    def test_m2_k1_invalid(self):
        cert = certify_fkm(2, 1)
        assert cert.verdict is Verdict.INVALID
        assert cert.n == 1
        assert cert.theta_rad is None
        assert "n - m" in cert.reason

    def test_rejects_bad_arguments(self):
        with pytest.raises(InvalidParameterError):
            certify_fkm(1, 1)
        with pytest.raises(InvalidParameterError):
            certify_fkm(3, 0)

    def test_tolerances_recorded(self):
        cert = certify_fkm(9, 1)
        assert cert.tolerances["ODE_RTOL"] == pytest.approx(1e-10)


class TestSweep:
    def test_k1_certifies_large_m(self):
        certs = sweep(range(2, 13), [1])
        certified = {c.m for c in certs if c.certified}
        assert certified == {9, 10, 11, 12}

    def test_certified_set(self):
        certs = sweep(range(2, 13), range(2, 9))
        for cert in certs:
            n = cert.k * delta(cert.m) - 1
            if n - cert.m < 1:
                assert cert.verdict is Verdict.INVALID
            else:
                assert cert.certified == (cert.k * delta(cert.m) >= 12), cert

    def test_ordering_and_monotone_in_k(self):
        certs = sweep([3, 2], [4, 3, 5, 6])
        assert [(c.m, c.k) for c in certs] == sorted((c.m, c.k) for c in certs)
        for m in (2, 3):
            flags = [c.certified for c in certs if c.m == m]
            assert flags == sorted(flags)

    def test_margins_consistent(self):
        for cert in sweep([2, 3, 9], [1, 6]):
            if cert.certified:
                assert cert.margin > 0
                assert cert.margin == pytest.approx(
                    cert.normal_radius - 2 * cert.theta_rad
                )

    def test_threads_match_serial(self):
        serial = sweep([2, 3, 5], [2, 3])
        threaded = sweep([2, 3, 5], [2, 3], workers=2)
        assert [c.model_dump() for c in serial] == [c.model_dump() for c in threaded]

    def test_empty(self):
        assert sweep([], [1, 2]) == []


class TestInequalities:
    def test_positive_range(self):
        n = np.arange(11, 10_001)
        assert np.all(irreducible_inequality(n) > 0)
        assert np.all(reducible_inequality(n) > 0)

    def test_below_domain(self):
        assert np.isnan(irreducible_inequality(9))
        assert np.isnan(reducible_inequality(1))
        assert isinstance(reducible_inequality(11), float)

    def test_product_chain(self):
        for k in range(21, 101):
            theta, radius = product_chain(k)
            assert theta < radius

    def test_product_chain_small_k(self):
        with pytest.raises(InvalidParameterError):
            product_chain(2)


class TestCertifyProduct:
    def test_four_threes(self):
        cert = certify_product([3, 3, 3, 3])
        assert cert.verdict is Verdict.CERTIFIED
        assert cert.dim_cone == 21
        assert cert.alpha_sq == pytest.approx(48.0)
        assert cert.diagnostics["inner_alpha_sq"] == pytest.approx(
            48.0 * 144 / 441
        )
        assert cert.diagnostics["factor_radii"] == pytest.approx([np.pi / 4] * 4)
        threshold = cert.corroboration["threshold_alpha_sq"]
        assert threshold == pytest.approx(144 * 48.0 / 21**2)
        assert cert.corroboration["threshold_margin"] == pytest.approx(
            PRODUCT_THRESHOLD - threshold
        )
        assert cert.corroboration["threshold_margin"] > 0

    def test_two_threes_inconclusive(self):
        cert = certify_product([3, 3])
        assert cert.verdict is Verdict.INCONCLUSIVE
        assert cert.dim_cone == 11
        assert cert.theta_src is ThetaSource.DIRECT

    @pytest.mark.parametrize("factors", [[3], [2, 3], [3, 4], [4, 4, 4]])
    def test_invalid(self, factors):
        assert certify_product(factors).verdict is Verdict.INVALID

    def test_even_factor_reason(self):
        cert = certify_product([3, 3, 8])
        assert cert.verdict is Verdict.INVALID
        assert "odd" in cert.reason

    def test_mixed_factors(self):
        cert = certify_product([3, 9])
        assert cert.certified
        assert cert.dim_cone == 23
        assert cert.alpha_sq == pytest.approx(3 * 22 * (1 - 1 / 17))
        assert cert.corroboration["threshold_margin"] > 0

    def test_sweep_dimensions(self):
        certs = sweep_products(range(21, 101))
        dims = [c.dim_cone for c in certs]
        assert dims == sorted(dims)
        assert set(dims) == set(range(21, 101))
        for cert in certs:
            if cert.dim_cone == 22:
                assert cert.verdict is Verdict.INVALID
                assert cert.factors == []
            else:
                assert cert.certified, cert.factors
                assert cert.corroboration["threshold_margin"] > 0

    def test_sweep_single_dimension(self):
        certs = sweep_products([23])
        assert [c.factors for c in certs] == [[3, 9]]

    def test_sweep_threads_match_serial(self):
        serial = sweep_products([21, 22, 37])
        threaded = sweep_products([21, 22, 37], workers=2)
        assert [c.model_dump() for c in serial] == [c.model_dump() for c in threaded]


class TestProductLists:
    def test_dim21(self):
        assert product_lists(21) == [[3, 3, 3, 3]]

    def test_dim22_has_none(self):
        assert product_lists(22) == []

    def test_homogeneous_and_extremal(self):
        # link dimensions summing to 36: 9 + 9 + 9 + 9 and 5 + 5 + 5 + 21
        assert product_lists(37) == [[3, 3, 3, 11], [5, 5, 5, 5]]

    @pytest.mark.parametrize("dim", range(23, 101))
    def test_lists_are_valid(self, dim):
        lists = product_lists(dim)
        assert lists
        for factors in lists:
            assert len(factors) >= 2
            assert all(f >= 3 and f % 2 == 1 for f in factors)
            assert sum(2 * f - 1 for f in factors) + 1 == dim


class TestCsvRow:
    def test_fkm_columns(self):
        assert list(certify_fkm(3, 3).csv_row()) == FKM_COLUMNS

    def test_product_columns(self):
        row = certify_product([3, 3, 3, 3]).csv_row()
        assert list(row) == PRODUCT_COLUMNS
        assert row["factors"] == "3;3;3;3"
        assert row["verdict"] == "certified"
