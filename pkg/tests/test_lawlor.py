"""Tests for the vanishing-angle ODE and its profiles."""

import numpy as np
import pytest

from fkmcone.clifford import build_system
from fkmcone.config import settings
from fkmcone.foliation import foliation_params, sample_level_point
from fkmcone.frames import build_frame, numeric_profile
from fkmcone.lawlor import (
    Profile,
    VanishingAngleQuery,
    angle_table,
    bound_F,
    existence_threshold,
    limit_form,
    scaled_bound,
    start_coefficient,
    table_alpha,
    vanishing_angle,
)
from fkmcone.utils import InvalidParameterError


def solve(dim, alpha_sq, profile=Profile.BOUND):
    query = VanishingAngleQuery(dim=dim, alpha=np.sqrt(alpha_sq), profile=profile)
    return vanishing_angle(query)


class TestProfiles:
    def test_bound_dominates_limit(self):
        t = np.linspace(0.0, 0.3, 31)
        for d in (2, 5, 11, 40):
            assert np.all(bound_F(3.0, t, d) >= limit_form(3.0, t) - 1e-14)

    def test_bound_approaches_limit(self):
        t = np.linspace(0.0, 0.2, 11)
        np.testing.assert_allclose(
            bound_F(2.0, t, 10**6), limit_form(2.0, t), atol=1e-5
        )

    def test_bound_at_zero(self):
        assert bound_F(4.0, 0.0, 11) == 1.0
        assert limit_form(4.0, 0.0) == 1.0

    def test_bound_needs_d2(self):
        with pytest.raises(InvalidParameterError):
            bound_F(1.0, 0.1, 1)


class TestQuery:
    def test_negative_alpha(self):
        with pytest.raises(ValueError):
            VanishingAngleQuery(dim=12, alpha=-1.0)

    def test_small_dim(self):
        with pytest.raises(ValueError):
            VanishingAngleQuery(dim=2, alpha=1.0)

    def test_numeric_needs_callable(self):
        with pytest.raises(ValueError):
            VanishingAngleQuery(dim=12, alpha=1.0, profile=Profile.NUMERIC)

    def test_table_limited_to_dim12(self):
        with pytest.raises(ValueError):
            VanishingAngleQuery(dim=13, alpha=1.0, profile=Profile.TABLE)


class TestStart:
    def test_discriminant(self):
        assert start_coefficient(12, 30.0) is None
        assert start_coefficient(12, 25.0) == pytest.approx(30.0)
        a = start_coefficient(12, 0.0)
        assert a == pytest.approx(30.0 * 2)


class TestVanishingAngle:
    @pytest.mark.parametrize("profile", [Profile.BOUND, Profile.LIMIT])
    def test_nonexistence_dim12_alpha30(self, profile):
        result = solve(12, 30.0, profile)
        assert not result.exists
        assert result.theta_rad is None
        assert result.reason == "start-infeasible"

    def test_existence_dim12_table_value(self):
        result = solve(12, 17.85, Profile.LIMIT)
        assert result.exists
        assert result.reason == "hit-zero"
        assert result.theta_deg <= 11.23 + 0.3
        assert np.tan(result.theta_rad) == pytest.approx(result.tan_theta)

    def test_bound_sharper_than_limit(self):
        bound = solve(12, 17.85, Profile.BOUND)
        limit = solve(12, 17.85, Profile.LIMIT)
        assert bound.exists
        assert bound.theta_rad <= limit.theta_rad + 1e-9

    def test_existence_dim12_alpha19(self):
        assert solve(12, 19.0, Profile.LIMIT).exists
        assert solve(12, 19.0, Profile.BOUND).exists

    def test_no_angle_for_small_fkm_cones(self):
        # (m, k) = (2, 2): dim 6 with alpha^2 = 6 (n - 1) = 12
        assert not solve(6, 12.0).exists

    def test_residual_small(self):
        result = solve(12, 17.85, Profile.LIMIT)
        assert result.max_residual < 1e-6
        assert result.steps > 0

    def test_repeat_is_cached(self):
        assert solve(14, 20.0) == solve(14, 20.0)

    def test_monotone_in_alpha(self):
        results = [solve(12, a, Profile.LIMIT) for a in np.linspace(0.0, 19.5, 20)]
        assert all(r.exists for r in results)
        thetas = np.array([r.theta_rad for r in results])
        assert np.all(np.diff(thetas) > 0)

    def test_stable_under_tighter_steps(self):
        tight = settings.model_copy(update={"ODE_RTOL": 1e-12, "ODE_ATOL": 1e-15})
        query = VanishingAngleQuery(dim=12, alpha=0.0)
        coarse = vanishing_angle(query)
        fine = vanishing_angle(query, tight)
        assert coarse.exists and fine.exists
        assert 0 < coarse.theta_rad < np.pi / 2
        assert fine.steps > coarse.steps
        assert abs(fine.theta_rad - coarse.theta_rad) < 1e-8

    def test_alpha19_matches_printed_table(self):
        # the printed dimension-12 column gives 11.23 degrees on this row
        assert solve(12, 19.0, Profile.LIMIT).theta_deg == pytest.approx(11.23, abs=0.1)


class TestTableProfile:
    def test_rounds_up_to_grid(self):
        assert table_alpha(4.2249, 0.1) == pytest.approx(4.3)
        assert table_alpha(4.4, 0.1) == pytest.approx(4.4)
        assert table_alpha(0.0, 0.1) == 0.0
        with pytest.raises(InvalidParameterError):
            table_alpha(1.0, 0.0)

    def test_row_of_n11(self):
        table = solve(12, 17.85, Profile.TABLE)
        exact = solve(12, 17.85, Profile.LIMIT)
        assert table.profile is Profile.TABLE
        assert table.alpha_sq == pytest.approx(17.85)
        assert table.row_alpha_sq == pytest.approx(18.49)
        assert exact.theta_rad < table.theta_rad
        assert table.theta_deg <= 11.23 + 0.3

    def test_row_of_n10_fails(self):
        result = solve(12, 19.44, Profile.TABLE)
        assert result.row_alpha_sq == pytest.approx(20.25)
        assert not result.exists
        assert result.reason == "radical-negative"

    def test_small_dims_use_bound(self):
        table = solve(8, 2.0, Profile.TABLE)
        row = solve(8, table.row_alpha_sq, Profile.BOUND)
        assert table.theta_rad == pytest.approx(row.theta_rad, rel=1e-9)


class TestThreshold:
    def test_dim12_bracket(self):
        lo, hi = existence_threshold(12, Profile.TABLE, lo=19.0, hi=19.44)
        assert 19.0 <= lo < hi < 19.44
        assert hi - lo <= 1e-3
        assert lo == pytest.approx(4.4**2, abs=1e-3)

    def test_exact_profiles(self):
        limit = existence_threshold(12, Profile.LIMIT, lo=19.6, hi=19.7)
        bound = existence_threshold(12, Profile.BOUND, lo=20.25, hi=20.7)
        assert limit[1] - limit[0] <= 1e-3
        assert limit[1] < bound[0]

    def test_bad_bracket(self):
        with pytest.raises(InvalidParameterError):
            existence_threshold(12, Profile.LIMIT, lo=30.0, hi=31.0)


class TestScaledBound:
    @pytest.mark.parametrize("dim", [14, 18, 24, 40])
    def test_strict_scaling_inequality(self, dim):
        alpha = np.sqrt(17.85) * dim / 12.0
        bound = scaled_bound(dim, alpha, Profile.LIMIT)
        assert bound.exists
        assert bound.inner_alpha_sq == pytest.approx(17.85)
        direct = vanishing_angle(
            VanishingAngleQuery(dim=dim, alpha=alpha, profile=Profile.LIMIT)
        )
        assert direct.exists
        assert direct.tan_theta < bound.tan_bound
        assert bound.tan_bound < scaled_bound(dim, alpha).tan_bound

    def test_fkm_n11(self):
        # cone over the minimal hypersurface of S^11 x S^11
        bound = scaled_bound(22, np.sqrt(60.0))
        assert bound.inner_alpha_sq == pytest.approx(17.85, abs=0.01)
        # twice the angle stays below the normal radius arctan(1/2) of (m, n) = (3, 11)
        assert 2 * bound.theta_rad < np.arctan(0.5)

    def test_fkm_n10_has_no_bound(self):
        bound = scaled_bound(20, np.sqrt(54.0))
        assert bound.inner_alpha_sq == pytest.approx(19.44)
        assert not bound.exists
        assert bound.tan_bound is None

    def test_geodesic_case(self):
        bound = scaled_bound(24, 0.0)
        assert bound.exists
        assert 0 < bound.tan_bound < np.inf

    def test_rejects_small_dim(self):
        with pytest.raises(InvalidParameterError):
            scaled_bound(12, 1.0)


class TestAngleTable:
    def test_shape_and_order(self):
        table = angle_table([6, 8], [1.0, 1.5, 2.0])
        assert len(table) == 6
        assert [r.dim for r in table] == [6, 6, 6, 8, 8, 8]
        assert [r.alpha_sq for r in table[:3]] == pytest.approx([1.0, 2.25, 4.0])


class TestNumericProfile:
    def test_numeric_solve_runs(self):
        system = build_system(3, 3)
        c = foliation_params(system).c
        frame = build_frame(system, sample_level_point(system, c, seed=0))
        profile = numeric_profile(system, frame, points=60)
        query = VanishingAngleQuery(
            dim=2 * system.n,
            alpha=np.sqrt(profile.alpha_sq),
            profile=Profile.NUMERIC,
            profile_fn=profile,
        )
        result = vanishing_angle(query)
        assert result.profile is Profile.NUMERIC
        assert result.dim == 22
        assert result.alpha_sq == pytest.approx(60.0, abs=1e-6)
