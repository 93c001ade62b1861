"""zeta evaluation and the MMSE <-> adaptive-LS SINR conversion."""

import math

import numpy as np
import pytest

from lsrx.distributions import (ScalarDistribution, WindowSpec,
                                window_distribution, window_moments_closed_form)
from lsrx.errors import DomainError
from lsrx.distributions import ratio_moment_1, ratio_moment_2
from lsrx.relation import (als_from_mmse, capacity_gap, poor_wang_zeta,
                           zeta_steady, zeta_transient)


class TestZetaTransient:
    def test_rectangular_closed_form(self):
        ctx = zeta_transient(1.0, 3.0, WindowSpec.rectangular())
        assert ctx.zeta == pytest.approx(1.5)
        assert ctx.r == pytest.approx(0.5)

    def test_rectangular_unlimited_training(self):
        assert zeta_transient(1.0, 1e9, WindowSpec.rectangular()).zeta == \
            pytest.approx(1.0, abs=1e-8)
        assert zeta_transient(1.0, math.inf, WindowSpec.rectangular()).zeta == 1.0

    def test_exponential_closed_form(self):
        ctx = zeta_transient(1.0, 2.0, WindowSpec.exponential(1.0))
        want = (1 - math.exp(-2.0)) / (1 - math.exp(-1.0)) ** 2
        assert ctx.zeta == pytest.approx(want, abs=1e-12)
        assert ctx.zeta == pytest.approx(2.164, abs=5e-4)
        assert ctx.r == pytest.approx(math.e, abs=1e-12)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("eta", [2.5, 6.0])
    @pytest.mark.parametrize("lbar", [0.8, 3.0])
    def test_closed_forms_match_generic_path(self, beta, eta, lbar):
        if eta <= beta:
            pytest.skip("needs eta > beta")
        for window in (WindowSpec.rectangular(), WindowSpec.exponential(lbar)):
            ctx = zeta_transient(beta, eta, window)
            d = window_distribution(window, eta)
            w11 = ratio_moment_1(d, 1, ctx.r)
            w12 = ratio_moment_2(d, 1, ctx.r)
            assert abs(ctx.zeta - float(np.real(w11)) / w12) < 1e-10
            # the r value solves the pinned moment equation
            w01 = ratio_moment_1(d, 0, ctx.r)
            assert abs(w01 - (1.0 - beta / eta)) < 1e-10

    def test_custom_window_generic_path(self):
        dist = ScalarDistribution.point_masses([1.0, 0.4], [0.6, 0.4])
        ctx = zeta_transient(1.0, 3.0, WindowSpec.custom(dist))
        wm = window_moments_closed_form(WindowSpec.custom(dist), 3.0, ctx.r)
        assert abs(wm.w01 - 2.0 / 3.0) < 1e-10
        assert ctx.zeta == pytest.approx(float(np.real(wm.w11)) / wm.w12)

    def test_requires_more_training_than_receive_dims(self):
        with pytest.raises(DomainError):
            zeta_transient(2.0, 1.5, WindowSpec.rectangular())


class TestZetaSteady:
    def test_unit_window(self):
        ctx = zeta_steady(1.0, WindowSpec.exponential(1.0))
        assert ctx.zeta == pytest.approx(1.0 / (1.0 - math.exp(-1.0)), abs=1e-12)
        assert ctx.zeta == pytest.approx(1.5820, abs=5e-5)

    def test_long_window_limit(self):
        assert zeta_steady(1.0, WindowSpec.exponential(1e8)).zeta == \
            pytest.approx(1.0, abs=1e-7)

    def test_beta_two(self):
        ctx = zeta_steady(2.0, WindowSpec.exponential(1.0))
        assert ctx.zeta == pytest.approx(2.0 / (1.0 - math.exp(-2.0)), abs=1e-12)
        assert ctx.zeta == pytest.approx(2.3130, abs=5e-5)

    def test_rectangular_rejected(self):
        with pytest.raises(DomainError):
            zeta_steady(1.0, WindowSpec.rectangular())


class TestConversion:
    def test_perfect_training_limit(self):
        ctx = zeta_transient(1.0, math.inf, WindowSpec.rectangular())
        for mode in ("training", "semi_blind"):
            assert als_from_mmse(7.3, ctx, mode) == pytest.approx(7.3)

    def test_reference_values(self):
        ctx = zeta_transient(1.0, 3.0, WindowSpec.rectangular())  # zeta = 1.5
        assert als_from_mmse(10.0, ctx, "training") == pytest.approx(
            10.0 / 1.55, abs=1e-12)
        assert als_from_mmse(10.0, ctx, "training") == pytest.approx(6.4516, abs=5e-5)
        assert als_from_mmse(10.0, ctx, "semi_blind") == pytest.approx(
            10.0 / 6.5, abs=1e-12)
        assert als_from_mmse(10.0, ctx, "semi_blind") == pytest.approx(1.5385, abs=5e-5)

    def test_monotone_in_sinr_and_zeta(self):
        ctx_lo = zeta_transient(1.0, 5.0, WindowSpec.rectangular())
        ctx_hi = zeta_transient(1.0, 2.0, WindowSpec.rectangular())
        assert ctx_lo.zeta < ctx_hi.zeta
        for mode in ("training", "semi_blind"):
            s = [als_from_mmse(v, ctx_lo, mode) for v in (1.0, 5.0, 20.0)]
            assert s[0] < s[1] < s[2]
            assert als_from_mmse(5.0, ctx_hi, mode) < als_from_mmse(5.0, ctx_lo, mode)


class TestCapacityGap:
    def test_zeta_one_is_free(self):
        ctx = zeta_transient(1.0, math.inf, WindowSpec.rectangular())
        assert capacity_gap(10.0, ctx, "training") == pytest.approx(0.0)
        assert capacity_gap(10.0, ctx, "semi_blind") == pytest.approx(0.0)

    def test_infinite_zeta_costs_everything(self):
        ctx = zeta_transient(1.0, 1.0 + 1e-13, WindowSpec.rectangular())
        assert capacity_gap(10.0, ctx, "semi_blind") == pytest.approx(
            math.log(11.0), rel=1e-6)

    def test_reference_value(self):
        ctx = zeta_transient(1.0, 3.0, WindowSpec.rectangular())
        assert capacity_gap(10.0, ctx, "semi_blind") == pytest.approx(
            math.log(1 + 10.0 / 3.0), abs=1e-12)
        assert capacity_gap(10.0, ctx, "semi_blind") == pytest.approx(1.466, abs=5e-4)

    def test_consistent_with_conversion(self):
        ctx = zeta_transient(1.0, 4.0, WindowSpec.exponential(2.0))
        for mode in ("training", "semi_blind"):
            s_als = als_from_mmse(8.0, ctx, mode)
            want = math.log(1 + 8.0) - math.log(1 + s_als)
            assert capacity_gap(8.0, ctx, mode) == pytest.approx(want, abs=1e-12)


class TestPoorWang:
    def test_values(self):
        assert poor_wang_zeta(1.0) == pytest.approx(1.5)
        assert poor_wang_zeta(10.0) == pytest.approx(1.05)
        exact = zeta_steady(1.0, WindowSpec.exponential(10.0)).zeta
        assert exact == pytest.approx(1.0508, abs=5e-5)
        assert poor_wang_zeta(1e9) == pytest.approx(1.0, abs=1e-8)

    def test_accurate_for_long_windows(self):
        for lbar in (5.0, 10.0, 20.0):
            exact = zeta_steady(1.0, WindowSpec.exponential(lbar)).zeta
            assert abs(poor_wang_zeta(lbar) - exact) / exact < 0.02
