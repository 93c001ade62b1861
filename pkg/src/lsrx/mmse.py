"""Large-system fixed point for the full-CSI MMSE receiver.

Solves the three-variable system (g, rho1, tau1) describing the limiting
spectrum of the received-signal covariance and the per-stream SINR, plus the
auxiliary second-order moments (rho2..rho4, tau2, tau3) that express the SINR
as signal power over interference-plus-noise power.
"""

from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist_mod
from .distributions import ScalarDistribution, ratio_moment_1, ratio_moment_2
from .errors import DegenerateParameterError, DomainError, NonConvergenceError
from .rootfind import solve_1d, solve_2d

__all__ = [
    "MmseParams",
    "MmseSolution",
    "MmseSecondOrder",
    "solve_mmse",
    "mmse_sinr",
    "solve_mmse_second_order",
    "alternate_mmse_sinr",
    "mmse_stieltjes",
    "mmse_residuals",
]


@dataclass(frozen=True)
class MmseParams:
    """System ratios and eigenvalue laws for the MMSE fixed point.

    alpha = streams per transmit dimension, beta = receive per transmit
    dimension, sigma2 = noise variance.  dist_p is the law of the squared
    amplitudes, dist_h the law of the first min(M,N) squared channel singular
    values.  s_type selects i.i.d. or isometric precoding.
    """

    alpha: float
    beta: float
    sigma2: float
    dist_p: ScalarDistribution
    dist_h: ScalarDistribution
    s_type: str = "iid"
    beta_star: float = field(init=False)
    e_p: float = field(init=False)

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise DomainError("alpha and beta must be positive")
        if self.sigma2 < 0:
            raise DomainError("sigma2 must be nonnegative")
        if self.s_type not in ("iid", "isometric"):
            raise DomainError("s_type must be 'iid' or 'isometric'")
        if self.s_type == "isometric" and self.alpha > 1.0 + 1e-12:
            raise DomainError("isometric precoding requires alpha <= 1")
        object.__setattr__(self, "beta_star", min(self.beta, 1.0))
        object.__setattr__(self, "e_p", self.dist_p.mean())


@dataclass(frozen=True)
class MmseSolution:
    """First-order solution: Stieltjes transform g and moments rho1, tau1."""

    g: complex
    rho1: complex
    tau1: complex
    z: complex


@dataclass(frozen=True)
class MmseSecondOrder:
    """Second-order moments; index 2 pairs with the noise power, 3 with the
    channel-weighted power and 4 with the interference power."""

    rho2: complex
    rho3: complex
    rho4: complex
    tau2: complex
    tau3: complex


def _emoments(params, rho):
    e11 = ratio_moment_1(params.dist_p, 1, rho)
    denom = 1.0 if params.s_type == "iid" else 1.0 - params.alpha * rho * e11
    return e11, denom


def _channel_arg(params, z, e11, denom):
    # x such that Hbar_{m,1} = E[H^m/(1+xH)]; uses tau - alpha*E_P = -alpha*E11/denom
    return -params.alpha * e11 / (denom * z)


def _solution_from_rho(params, z, rho):
    e11, denom = _emoments(params, rho)
    g = -(1.0 - (params.alpha / params.beta) * rho * e11) / z
    tau = params.alpha * params.e_p - params.alpha * e11 / denom
    return MmseSolution(g=g, rho1=rho, tau1=tau, z=z)


def _rho_residual(params, z):
    def f(rho):
        e11, denom = _emoments(params, rho)
        x = _channel_arg(params, z, e11, denom)
        h11 = ratio_moment_1(params.dist_h, 1, x)
        return rho + params.beta_star * h11 / (z * denom)

    return f


def solve_mmse(params, z=None):
    """Solve the first-order MMSE fixed point at z (default -sigma2).

    Real z < 0 is solved directly with a bracketed scalar search for rho1;
    upper-half-plane z uses a damped Newton on the complex rho1.
    """
    if z is None:
        z = -params.sigma2
    z = complex(z)
    if z.imag == 0:
        if z.real >= 0:
            raise DomainError("real-axis evaluation needs z = -sigma2 < 0")
        return _solve_real_axis(params, z.real)
    if z.imag < 0:
        raise DomainError("z must satisfy Im(z) > 0 or be negative real")
    return _solve_complex(params, z)


def _solve_real_axis(params, z):
    f = _rho_residual(params, z)
    hi = max(1.0, 2.0 * params.beta_star * params.dist_h.mean() / (-z))
    for _ in range(80):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise NonConvergenceError("could not bracket the positive root of the SINR moment")
    report = solve_1d(f, (0.0, hi), tol=1e-13)
    rho = float(report.root)
    return _solution_from_rho(params, complex(z), rho)


def _solve_complex(params, z, seed=None):
    def residual(v):
        rho = complex(v[0])
        return np.array([_rho_residual(params, z)(rho)], dtype=complex)

    if seed is None:
        seed = -params.beta_star * params.dist_h.mean() / z
    try:
        report = solve_2d(residual, np.array([seed], dtype=complex), tol=1e-12)
    except NonConvergenceError:
        # continuation in alpha from the no-interference limit
        rho = -params.beta_star * params.dist_h.mean() / z
        for a in np.linspace(params.alpha / 8.0, params.alpha, 8):
            pa = MmseParams(a, params.beta, params.sigma2, params.dist_p,
                            params.dist_h, params.s_type)
            def res_a(v, pa=pa):
                return np.array([_rho_residual(pa, z)(complex(v[0]))], dtype=complex)
            report = solve_2d(res_a, np.array([rho], dtype=complex), tol=1e-12)
            rho = complex(np.atleast_1d(report.root)[0])
    rho = complex(np.atleast_1d(report.root)[0])
    return _solution_from_rho(params, z, rho)


def mmse_residuals(params, sol):
    """Residuals of the three defining equations at a candidate solution."""
    z, rho, tau, g = sol.z, sol.rho1, sol.tau1, sol.g
    e11, denom = _emoments(params, rho)
    x = (tau - params.alpha * params.e_p) / z
    h11 = ratio_moment_1(params.dist_h, 1, x)
    r_g = g + (1.0 - (params.alpha / params.beta) * rho * e11) / z
    r_rho = rho + params.beta_star * h11 / (z * denom)
    r_tau = tau - (params.alpha * params.e_p - params.alpha * e11 / denom)
    return np.array([r_g, r_rho, r_tau])


def mmse_sinr(sol, pk):
    """Asymptotic SINR of a stream with squared amplitude pk."""
    return float(pk) * float(np.real(sol.rho1))


def solve_mmse_second_order(params, sol):
    """Solve the linear second-order system given a first-order solution.

    The equations are affine in (rho2, tau2), (rho3, tau3) and rho4 once the
    first-order moments are fixed, so each branch is an exact linear solve.
    """
    z, rho, tau = sol.z, sol.rho1, sol.tau1
    alpha, beta_star = params.alpha, params.beta_star
    az2 = 1.0 / abs(z) ** 2
    x = (tau - alpha * params.e_p) / z

    e12 = ratio_moment_2(params.dist_p, 1, rho)
    e22 = ratio_moment_2(params.dist_p, 2, rho)
    h12 = ratio_moment_2(params.dist_h, 1, x)
    h22 = ratio_moment_2(params.dist_h, 2, x)

    if params.s_type == "iid":
        scale = 1.0 - alpha * beta_star * az2 * e22 * h22
        if abs(scale) < 1e-14:
            raise DegenerateParameterError("second-order system is singular")
        rho2 = beta_star * az2 * h12 / scale
        tau2 = alpha * rho2 * e22
        rho3 = beta_star * az2 * h22 / scale
        tau3 = alpha * rho3 * e22
        rho4 = alpha * rho3 * e12
    else:
        e02 = ratio_moment_2(params.dist_p, 0, rho)
        h02 = ratio_moment_2(params.dist_h, 0, x)
        d_e = alpha * (e02 - 1.0) + 1.0
        d_h = beta_star * (h02 - 1.0) + 1.0
        if abs(d_e) < 1e-14 or abs(d_h) < 1e-14:
            raise DegenerateParameterError("second-order system is singular")
        off = abs(alpha * params.e_p - tau) ** 2
        # rho_j = [b* az2 (c_j + tau_j h22)]/d_e with c_2 = h12, c_3 = h22,
        # tau_j = [a rho_j e22 - b* az2 off hden_j]/d_h  -> 2x2 per j
        def pair(c_j, hden):
            a_mat = np.array(
                [[1.0, -beta_star * az2 * h22 / d_e],
                 [-alpha * e22 / d_h, 1.0]], dtype=complex)
            b_vec = np.array(
                [beta_star * az2 * c_j / d_e,
                 -beta_star * az2 * off * hden / d_h], dtype=complex)
            return np.linalg.solve(a_mat, b_vec)

        rho2, tau2 = pair(h12, h12)
        rho3, tau3 = pair(h22, h22)
        rho4 = alpha * e12 * (rho3 - abs(rho) ** 2) / d_e

    out = MmseSecondOrder(rho2=rho2, rho3=rho3, rho4=rho4, tau2=tau2, tau3=tau3)
    res = _second_order_residuals(params, sol, out)
    if np.max(np.abs(res)) > 1e-10:
        raise DegenerateParameterError(
            f"second-order residuals too large: {np.max(np.abs(res)):.3e}")
    return out


def _second_order_residuals(params, sol, so):
    z, rho, tau = sol.z, sol.rho1, sol.tau1
    alpha, beta_star = params.alpha, params.beta_star
    az2 = 1.0 / abs(z) ** 2
    x = (tau - alpha * params.e_p) / z
    e12 = ratio_moment_2(params.dist_p, 1, rho)
    e22 = ratio_moment_2(params.dist_p, 2, rho)
    h12 = ratio_moment_2(params.dist_h, 1, x)
    h22 = ratio_moment_2(params.dist_h, 2, x)
    if params.s_type == "iid":
        return np.array([
            so.rho2 - beta_star * az2 * (h12 + so.tau2 * h22),
            so.rho3 - beta_star * az2 * (1.0 + so.tau3) * h22,
            so.rho4 - alpha * so.rho3 * e12,
            so.tau2 - alpha * so.rho2 * e22,
            so.tau3 - alpha * so.rho3 * e22,
        ])
    e02 = ratio_moment_2(params.dist_p, 0, rho)
    h02 = ratio_moment_2(params.dist_h, 0, x)
    d_e = alpha * (e02 - 1.0) + 1.0
    d_h = beta_star * (h02 - 1.0) + 1.0
    off = abs(alpha * params.e_p - tau) ** 2
    return np.array([
        so.rho2 - beta_star * az2 * (h12 + so.tau2 * h22) / d_e,
        so.rho3 - beta_star * az2 * (1.0 + so.tau3) * h22 / d_e,
        so.rho4 - alpha * (so.rho3 * e12 - abs(rho) ** 2 * e12) / d_e,
        so.tau2 - (alpha * so.rho2 * e22 - beta_star * az2 * off * h12) / d_h,
        so.tau3 - (alpha * so.rho3 * e22 - beta_star * az2 * off * h22) / d_h,
    ])


def alternate_mmse_sinr(sol, second, pk):
    """SINR from the signal/interference decomposition; must match
    :func:`mmse_sinr` since rho4 + sigma2*rho2 collapses to conj(rho1)."""
    sigma2 = -float(np.real(sol.z))
    den = np.conj(second.rho4) + sigma2 * second.rho2
    if abs(den) < 1e-300:
        raise DegenerateParameterError("interference-plus-noise power vanished")
    return float(pk) * abs(sol.rho1) ** 2 / float(np.real(den))


def mmse_stieltjes(params, z):
    """Stieltjes transform of the limiting covariance spectrum at Im(z) > 0."""
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("Stieltjes transform evaluation needs Im(z) > 0")
    return solve_mmse(params, z).g
