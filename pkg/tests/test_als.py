"""Transient and steady-state fixed points of the adaptive LS receiver."""

import numpy as np
import pytest

from lsrx.als import (
    AlsParams,
    als_residuals,
    als_second_order_residuals,
    als_steady_state,
    als_stieltjes,
    als_transient_sinr,
    pinned_window_argument,
    solve_als_first,
    solve_als_second,
)
from lsrx.distributions import (
    ScalarDistribution,
    WindowSpec,
    ratio_moment_1,
    window_moments_closed_form,
)
from lsrx.errors import DomainError, IllPosedError
from lsrx.mmse import MmseParams, mmse_sinr, solve_mmse, solve_mmse_second_order
from lsrx.relation import als_from_mmse, zeta_steady, zeta_transient

FLAT = ScalarDistribution.point_masses([1.0], [1.0])
EXP = ScalarDistribution.exponential(1.0)
RECT = WindowSpec.rectangular()


def make(alpha=0.5, beta=1.0, eta=2.0, sigma2=0.1, mu=0.1, dist_h=FLAT,
         window=RECT, s_type="iid", b_type="iid", mode="training"):
    return AlsParams(alpha=alpha, beta=beta, eta=eta, sigma2=sigma2, mu=mu,
                     dist_p=FLAT, dist_h=dist_h, window=window,
                     s_type=s_type, b_type=b_type, mode=mode)


def first_order_values(p):
    first = solve_als_first(p)
    wm = window_moments_closed_form(p.window, p.eta, float(np.real(first.r)))
    return first, wm


class TestFirstOrder:
    def test_reference_case_residuals(self):
        # (alpha, beta, eta, sigma2, mu) = (0.5, 1, 2, 0.1, 0.1), flat channel
        p = make()
        first = solve_als_first(p)
        assert np.max(np.abs(als_residuals(p, first))) < 1e-10

    @pytest.mark.parametrize("s_type", ["iid", "isometric"])
    @pytest.mark.parametrize("b_type", ["iid", "orthogonal"])
    @pytest.mark.parametrize("window", [RECT, WindowSpec.exponential(1.5)])
    @pytest.mark.parametrize("mu", [0.0, 0.2])
    def test_residuals_every_branch(self, s_type, b_type, window, mu):
        p = make(eta=2.5, mu=mu, dist_h=EXP, window=window,
                 s_type=s_type, b_type=b_type)
        first = solve_als_first(p)
        assert np.max(np.abs(als_residuals(p, first))) < 1e-9

    def test_exact_relations_at_solution(self):
        p = make(dist_h=EXP, window=WindowSpec.exponential(2.0), mu=0.3)
        f = solve_als_first(p)
        wm = window_moments_closed_form(p.window, p.eta, f.r)
        assert abs(f.nu - 1.0 / (p.sigma2 * wm.w11 - p.z)) < 1e-12
        assert abs(f.r - (f.omega + (p.beta / p.eta) * p.sigma2 * f.g)) < 1e-12
        assert abs(p.beta * (1.0 + p.z * f.g) - p.eta * (1.0 - wm.w01)) < 1e-10

    def test_no_loading_pins_window_argument(self):
        # rectangular, beta=1, eta=2: r = 1 and W01 = 1/2
        assert pinned_window_argument(RECT, 1.0, 2.0) == pytest.approx(1.0)
        p = make(mu=0.0)
        first, wm = first_order_values(p)
        assert float(np.real(first.r)) == pytest.approx(1.0, abs=1e-12)
        assert wm.w01 == pytest.approx(0.5, abs=1e-12)

    def test_no_loading_matches_mmse_moments(self):
        # i.i.d. training, mu=0: W11-scaled moments solve the exact-covariance
        # system, so W11*g equals the MMSE transform at z = -sigma2
        for dist_h in (FLAT, EXP):
            p = make(eta=3.0, mu=0.0, dist_h=dist_h)
            first, wm = first_order_values(p)
            m = solve_mmse(MmseParams(0.5, 1.0, 0.1, FLAT, dist_h, "iid"))
            assert abs(wm.w11 * first.g - m.g) < 1e-8
            assert abs(wm.w11 * first.rho - m.rho1) < 1e-8
            lhs = first.tau - p.alpha * p.e_p * wm.ew
            assert abs(lhs - wm.w11 * (m.tau1 - p.alpha * p.e_p)) < 1e-8

    def test_unlimited_training_reaches_exact_covariance(self):
        # eta -> infinity without windowing: omega, psi -> 0, nu -> 1/sigma2,
        # and the remaining moments converge to the MMSE ones
        p = make(eta=1e4, mu=0.1, dist_h=EXP)
        f = solve_als_first(p)
        m = solve_mmse(MmseParams(0.5, 1.0, 0.1, FLAT, EXP, "iid"))
        assert abs(f.omega) < 1e-3
        assert abs(f.psi) < 1e-3
        assert abs(f.nu - 10.0) / 10.0 < 1e-3
        assert abs(f.g - m.g) / abs(m.g) < 1e-3
        assert abs(f.rho - m.rho1) / abs(m.rho1) < 1e-3
        assert abs(f.tau - m.tau1) / abs(m.tau1) < 1e-3

    def test_rank_deficiency_guard(self):
        with pytest.raises(IllPosedError):
            solve_als_first(make(eta=0.8, mu=0.0))
        with pytest.raises(IllPosedError):
            solve_als_first(make(sigma2=0.0, mu=0.0))

    def test_identity_chain(self):
        for s_type, b_type in (("iid", "iid"), ("iid", "orthogonal"),
                               ("isometric", "iid"), ("isometric", "orthogonal")):
            p = make(eta=2.5, mu=0.15, dist_h=EXP,
                     window=WindowSpec.exponential(2.0),
                     s_type=s_type, b_type=b_type)
            f = solve_als_first(p)
            wm = window_moments_closed_form(p.window, p.eta, f.r)
            x_e = -f.rho * (f.psi - wm.ew)
            x_h = -f.nu * (f.tau - p.alpha * p.e_p * wm.ew)
            ea01 = ratio_moment_1(p.dist_p, 0, x_e)
            ea11 = ratio_moment_1(p.dist_p, 1, x_e)
            ha01 = ratio_moment_1(p.dist_h, 0, x_h)
            ha11 = ratio_moment_1(p.dist_h, 1, x_h)
            assert abs(p.beta * (1.0 + p.z * f.g)
                       - p.eta * (1.0 - wm.w01)) < 1e-9
            lhs = p.beta * (1.0 - f.g / f.nu)
            for other in (p.eta * f.omega * wm.w11,
                          p.alpha * (1.0 - ea01),
                          -p.alpha * f.rho * (f.psi - wm.ew) * ea11,
                          p.beta_star * (1.0 - ha01),
                          -f.nu * (f.tau - p.alpha * p.e_p * wm.ew)
                          * p.beta_star * ha11):
                assert abs(lhs - other) < 1e-9


class TestSecondOrder:
    def test_unlimited_training_matches_mmse_second_order(self):
        p = make(eta=1e4, mu=0.1, dist_h=EXP)
        f = solve_als_first(p)
        so = solve_als_second(p, f)
        mp = MmseParams(0.5, 1.0, 0.1, FLAT, EXP, "iid")
        msol = solve_mmse(mp)
        mso = solve_mmse_second_order(mp, msol)
        for got, want in ((so.rho2, mso.rho2), (so.rho3, mso.rho3),
                          (so.rho4, mso.rho4), (so.tau2, mso.tau2),
                          (so.tau3, mso.tau3)):
            assert abs(got - want) / abs(want) < 1e-3

    def test_vanishing_interference(self):
        p = make(alpha=1e-9, mu=0.1)
        f = solve_als_first(p)
        so = solve_als_second(p, f)
        assert abs(so.psi4) < 1e-6
        assert abs(so.rho4) < 1e-6

    def test_interference_power_identities_no_loading(self):
        # i.i.d. training, mu=0, beta=1, eta=3, flat channel
        p = make(eta=3.0, mu=0.0)
        f = solve_als_first(p)
        so = solve_als_second(p, f)
        wm = window_moments_closed_form(p.window, p.eta, float(np.real(f.r)))
        rho = float(np.real(f.rho))
        assert abs(so.rho4 + p.sigma2 * so.rho2 - rho / wm.w12) < 1e-8
        assert abs(so.psi4 + p.sigma2 * so.psi2 - (wm.w11 / wm.w12 - 1.0)) < 1e-8

    def test_gamma_trace_identity_with_loading(self):
        for b_type in ("iid", "orthogonal"):
            p = make(eta=2.5, mu=0.2, dist_h=EXP,
                     window=WindowSpec.exponential(1.5), b_type=b_type)
            f = solve_als_first(p)
            so = solve_als_second(p, f)
            wm = window_moments_closed_form(p.window, p.eta, float(np.real(f.r)))
            lhs = float(np.real(f.g)) + np.conj(p.z) * so.g2
            assert abs(lhs - (p.eta / p.beta) * so.r2 * wm.w12) < 1e-9

    def test_residuals_every_branch(self):
        for s_type in ("iid", "isometric"):
            for b_type in ("iid", "orthogonal"):
                p = make(eta=2.5, mu=0.1, dist_h=EXP,
                         window=WindowSpec.exponential(2.0),
                         s_type=s_type, b_type=b_type)
                f = solve_als_first(p)
                so = solve_als_second(p, f)
                assert np.max(np.abs(als_second_order_residuals(p, f, so))) < 1e-9


class TestTransientSinr:
    def test_converges_to_mmse(self):
        for dist_h in (FLAT, EXP):
            p = make(eta=1e4, mu=0.1, dist_h=dist_h)
            f = solve_als_first(p)
            so = solve_als_second(p, f)
            got = als_transient_sinr(p, f, so, 1.0).sinr
            want = mmse_sinr(solve_mmse(MmseParams(0.5, 1.0, 0.1, FLAT, dist_h,
                                                   "iid")), 1.0)
            assert abs(got - want) / want < 1e-3

    @pytest.mark.parametrize("mode", ["training", "semi_blind"])
    def test_matches_zeta_conversion(self, mode):
        p = make(eta=3.0, mu=0.0, dist_h=EXP, mode=mode)
        f = solve_als_first(p)
        so = solve_als_second(p, f)
        got = als_transient_sinr(p, f, so, 1.0).sinr
        s_mmse = mmse_sinr(solve_mmse(MmseParams(0.5, 1.0, 0.1, FLAT, EXP,
                                                 "iid")), 1.0)
        ctx = zeta_transient(1.0, 3.0, RECT)
        assert got == pytest.approx(als_from_mmse(s_mmse, ctx, mode), rel=1e-6)

    def test_zero_power_stream(self):
        p = make()
        f = solve_als_first(p)
        so = solve_als_second(p, f)
        assert als_transient_sinr(p, f, so, 0.0).sinr == 0.0

    def test_semi_blind_zero_amplitude(self):
        p = make(mode="semi_blind")
        f = solve_als_first(p)
        so = solve_als_second(p, f)
        assert als_transient_sinr(p, f, so, 0.0).sinr == 0.0


class TestSteadyState:
    def test_long_window_approaches_mmse(self):
        p = make(eta=5.0, mu=0.0, window=WindowSpec.exponential(1e3))
        got = als_steady_state(p, 1.0).sinr
        want = mmse_sinr(solve_mmse(MmseParams(0.5, 1.0, 0.1, FLAT, FLAT,
                                               "iid")), 1.0)
        assert abs(got - want) / want < 5e-3

    def test_unit_window_reference_value(self):
        # MMSE SINR tuned to 10; zeta = 1/(1-1/e); training SINR ~ 6.0969
        alpha = 0.5
        sigma2 = 0.1 - alpha / 11.0
        p = make(alpha=alpha, sigma2=sigma2, eta=7.0, mu=0.0,
                 window=WindowSpec.exponential(1.0))
        got = als_steady_state(p, 1.0).sinr
        ctx = zeta_steady(1.0, WindowSpec.exponential(1.0))
        assert ctx.zeta == pytest.approx(1.5820, abs=5e-5)
        assert got == pytest.approx(10.0 / (ctx.zeta + (ctx.zeta - 1.0) / 10.0),
                                    rel=1e-6)
        assert got == pytest.approx(6.10, abs=5e-3)

    def test_rectangular_window_rejected(self):
        with pytest.raises(DomainError):
            als_steady_state(make(mu=0.1))

    def test_training_types_agree_at_unlimited_training(self):
        # with a fixed-length window both training types reduce to the same
        # steady state; compare the transients deep into convergence
        eta = 4e6
        vals = {}
        for b_type in ("iid", "orthogonal"):
            p = make(eta=eta, mu=0.1, window=WindowSpec.exponential(2.0),
                     b_type=b_type)
            f = solve_als_first(p)
            so = solve_als_second(p, f)
            vals[b_type] = als_transient_sinr(p, f, so, 1.0).sinr
        assert abs(vals["iid"] - vals["orthogonal"]) / vals["iid"] < 1e-6
        steady = als_steady_state(make(eta=5.0, mu=0.1,
                                       window=WindowSpec.exponential(2.0)), 1.0)
        assert abs(vals["iid"] - steady.sinr) / steady.sinr < 1e-5


class TestOrthogonalTrainingMomentMap:
    @pytest.mark.parametrize("s_type", ["iid", "isometric"])
    def test_effective_load_form(self, s_type):
        # Orthogonal training, mu=0: the adaptive moments coincide with the
        # exact-covariance moments at effective noise sigma2*D_B, scaled by
        # D_B/W11, where D_B = 1 - (alpha/eta_star)*rho_mmse*E11 evaluated at
        # that same effective noise (self-consistent reading; the literal
        # sigma2 evaluation is refuted by finite-system Monte Carlo).
        p = make(eta=3.0, mu=0.0, dist_h=EXP, s_type=s_type, b_type="orthogonal")
        f = solve_als_first(p)
        wm = window_moments_closed_form(p.window, p.eta, float(np.real(f.r)))
        rho_hat = float(np.real(-f.rho * (f.psi - wm.ew)))
        e11 = ratio_moment_1(p.dist_p, 1, rho_hat)
        d_b = 1.0 - (p.alpha / p.eta_star) * rho_hat * e11
        m = solve_mmse(MmseParams(p.alpha, p.beta, p.sigma2 * d_b, FLAT, EXP,
                                  s_type))
        assert abs(m.rho1 - rho_hat) / rho_hat < 1e-8
        assert abs(f.rho - d_b * m.rho1 / wm.w11) / abs(f.rho) < 1e-8
        assert abs(f.g - d_b * m.g / wm.w11) / abs(f.g) < 1e-8


class TestStieltjes:
    def test_transform_tail(self):
        p = make(dist_h=EXP, window=WindowSpec.exponential(2.0), eta=4.0)
        z = -0.1 + 40j
        assert abs(als_stieltjes(p, z) + 1.0 / z) < 2e-3

    def test_noise_only_spectrum_vs_eigenvalues(self, rng):
        # alpha -> 0: spectrum of the windowed noise sample covariance
        n = 256
        i = 2 * n
        sigma2 = 1.0
        vals = []
        for _ in range(6):
            noise = (rng.standard_normal((n, i))
                     + 1j * rng.standard_normal((n, i))) * np.sqrt(sigma2 / 2)
            lam = np.linalg.eigvalsh(noise @ noise.conj().T / i)
            vals.append(np.mean(1.0 / (lam - (-1.0 + 0.5j))))
        p = make(alpha=1e-10, sigma2=sigma2, eta=2.0)
        got = als_stieltjes(p, -1.0 + 0.5j)
        assert abs(np.mean(vals) - got) / abs(got) < 0.02

    def test_requires_upper_half_plane(self):
        with pytest.raises(DomainError):
            als_stieltjes(make(), -0.1)
