"""Large-system analysis of the adaptive least-squares receiver.

The transient behaviour after a finite number of training symbols is governed
by a seven-variable fixed point (g, rho, tau, psi, omega, nu, r) over the
windowed sample covariance.  The output SINR additionally needs second-order
moments, solved in three affine stages.  The steady-state (unlimited
training) regime with a fixed-length window reuses the same machinery under
the rescaling eta -> 1, z -> -mu, with window moments replaced by their
eta-scaled limits.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import (
    ScalarDistribution,
    WindowSpec,
    ratio_moment_1,
    ratio_moment_2,
    window_distribution,
    window_moments_closed_form,
)
from .errors import (
    DegenerateParameterError,
    DomainError,
    IllPosedError,
    NonConvergenceError,
)
from .rootfind import damped_fixed_point, solve_1d, solve_2d

__all__ = [
    "AlsParams",
    "AlsFirstOrder",
    "AlsSecondOrder",
    "AlsSinr",
    "solve_als_first",
    "solve_als_second",
    "als_transient_sinr",
    "als_steady_state",
    "als_stieltjes",
    "als_residuals",
    "als_second_order_residuals",
    "pinned_window_argument",
]


@dataclass(frozen=True)
class AlsParams:
    """Ratios, laws and receiver options for the adaptive LS fixed point.

    eta is the normalized training length i/N, mu the diagonal loading
    constant (the covariance estimate is loaded with mu/eta), sigma2 the
    noise variance.  b_type selects i.i.d. or orthogonal training sequences,
    mode selects training-based or semi-blind filter estimation.
    """

    alpha: float
    beta: float
    eta: float
    sigma2: float
    mu: float
    dist_p: ScalarDistribution
    dist_h: ScalarDistribution
    window: WindowSpec
    s_type: str = "iid"
    b_type: str = "iid"
    mode: str = "training"
    eta_star: float = field(init=False)
    e_p: float = field(init=False)

    def __post_init__(self):
        if min(self.alpha, self.beta, self.eta) <= 0:
            raise DomainError("alpha, beta, eta must be positive")
        if self.sigma2 < 0 or self.mu < 0:
            raise DomainError("sigma2 and mu must be nonnegative")
        if self.s_type not in ("iid", "isometric"):
            raise DomainError("s_type must be 'iid' or 'isometric'")
        if self.b_type not in ("iid", "orthogonal"):
            raise DomainError("b_type must be 'iid' or 'orthogonal'")
        if self.mode not in ("training", "semi_blind"):
            raise DomainError("mode must be 'training' or 'semi_blind'")
        if self.s_type == "isometric" and self.alpha > 1.0 + 1e-12:
            raise DomainError("isometric precoding requires alpha <= 1")
        object.__setattr__(self, "eta_star", max(self.eta, self.alpha))
        object.__setattr__(self, "e_p", self.dist_p.mean())

    @property
    def z(self):
        return -self.mu / self.eta

    @property
    def beta_star(self):
        return min(self.beta, 1.0)


@dataclass(frozen=True)
class AlsFirstOrder:
    """Solution of the seven-variable transient fixed point."""

    g: complex
    rho: complex
    tau: complex
    psi: complex
    omega: complex
    nu: complex
    r: complex


@dataclass(frozen=True)
class AlsSecondOrder:
    """Second-order moments; index 2 pairs with the noise power, 3 with the
    channel-weighted power and 4 with the interference power."""

    g2: float
    g3: float
    g4: float
    rho2: float
    rho3: float
    rho4: float
    psi2: float
    psi3: float
    psi4: float
    omega2: float
    omega3: float
    omega4: float
    r2: float
    r3: float
    r4: float
    tau2: float
    tau3: float
    nu2: float
    nu3: float


@dataclass(frozen=True)
class AlsSinr:
    """Per-stream SINR with its signal / interference-plus-noise split."""

    sinr: float
    signal_power: float
    inp_a1_term: float
    inp_a2_term: float
    a1: float
    a2: float


# --------------------------------------------------------------------------
# window kernels: transient moments at normalized length eta, or the
# eta -> infinity scaled limits for fixed-length windows
# --------------------------------------------------------------------------

class _TransientWindow:
    def __init__(self, spec, eta):
        self.spec = spec
        self.eta = eta

    def moments(self, r):
        wm = window_moments_closed_form(self.spec, self.eta, r)
        return wm.ew, wm.w11, wm.w12, wm.w22

    def pinned_r(self, beta, eta):
        # solves eta * r * W11(r) = beta, i.e. W01 = 1 - beta/eta
        if eta <= beta:
            raise IllPosedError(
                "sample covariance is rank deficient in the limit: eta <= beta with mu = 0")
        if self.spec.shape == "rectangular":
            return beta / (eta - beta)
        if self.spec.shape == "exponential":
            lbar = self.spec.lbar
            return (math.exp(beta / lbar) - 1.0) / (1.0 - math.exp((beta - eta) / lbar))

        def f(r):
            _, w11, _, _ = self.moments(r)
            return eta * r * float(np.real(w11)) - beta

        hi = 1.0
        for _ in range(60):
            if f(hi) > 0:
                break
            hi *= 4.0
        return float(solve_1d(f, (1e-12, hi), tol=1e-13).root)


class _ScaledWindow:
    """eta-scaled limits of the exponential window moments (fixed lbar)."""

    def __init__(self, lbar):
        self.lbar = lbar

    def moments(self, r):
        lbar = self.lbar
        if r == 0:
            return lbar, lbar, lbar, lbar / 2.0
        w11 = lbar * (np.log(1.0 + r) if isinstance(r, complex)
                      else math.log1p(r)) / r
        w12 = lbar / (1.0 + r)
        if isinstance(r, complex) and r.imag != 0:
            w12 = float(np.imag(r * w11) / np.imag(r))
            w22 = float(np.real((w11 - w12) / np.conj(r)))
        else:
            w11 = float(np.real(w11))
            w12 = float(np.real(w12))
            w22 = (w11 - w12) / r
        return lbar, w11, w12, w22

    def pinned_r(self, beta, eta):
        return math.exp(beta / self.lbar) - 1.0


@dataclass(frozen=True)
class _Problem:
    """Parameter pack shared by the transient and steady-state solves."""

    alpha: float
    beta: float
    eta: float
    eta_star: float
    sigma2: float
    z: complex
    dist_p: ScalarDistribution
    dist_h: ScalarDistribution
    s_type: str
    b_type: str
    e_p: float
    kernel: object

    @property
    def beta_star(self):
        return min(self.beta, 1.0)


def _normalize_z(z):
    z = complex(z)
    return z.real if z.imag == 0 else z


def _transient_problem(params, z=None):
    return _Problem(
        alpha=params.alpha, beta=params.beta, eta=params.eta,
        eta_star=params.eta_star, sigma2=params.sigma2,
        z=_normalize_z(params.z if z is None else z),
        dist_p=params.dist_p, dist_h=params.dist_h,
        s_type=params.s_type, b_type=params.b_type, e_p=params.e_p,
        kernel=_TransientWindow(params.window, params.eta),
    )


def _scaled_problem(params):
    if params.window.shape != "exponential":
        raise DomainError(
            "steady-state analysis needs a fixed-length (exponential) window")
    # Corollary limits: z -> -mu, eta -> 1, i.i.d. training relations
    return _Problem(
        alpha=params.alpha, beta=params.beta, eta=1.0,
        eta_star=max(1.0, params.alpha), sigma2=params.sigma2,
        z=-float(params.mu),
        dist_p=params.dist_p, dist_h=params.dist_h,
        s_type=params.s_type, b_type="iid", e_p=params.e_p,
        kernel=_ScaledWindow(params.window.lbar),
    )


def pinned_window_argument(window, beta, eta):
    """The window moment argument r fixed by beta(1+z g) = eta r W11 at z=0."""
    if eta <= beta:
        raise IllPosedError("no diagonal loading requires eta > beta")
    return _TransientWindow(window, eta).pinned_r(beta, eta)


# --------------------------------------------------------------------------
# first-order solve
# --------------------------------------------------------------------------

def _first_chain(p, rho, r, omega=None):
    """Evaluate the dependent variables of the fixed point at (rho, r).

    With z = 0 the argument r is pinned and omega is the second search
    variable; otherwise (rho, r) are searched and omega is recovered from its
    own equation.  Returns (first_order, residual_vector).
    """
    ew, w11, _, _ = p.kernel.moments(r)
    den_nu = p.sigma2 * w11 - p.z
    if abs(den_nu) < 1e-300:
        raise DegenerateParameterError("nu denominator vanished")
    nu = 1.0 / den_nu
    if p.z == 0:
        q = (p.eta / p.beta) * omega * w11
        g = nu * (1.0 - q)
    else:
        g = (p.eta * r * w11 / p.beta - 1.0) / p.z
        q = 1.0 - g / nu
    d_b = 1.0 if p.b_type == "iid" else 1.0 - (p.beta / p.eta_star) * q
    d_s = 1.0 if p.s_type == "iid" else 1.0 - p.beta * q
    if min(abs(d_b), abs(d_s)) < 1e-12:
        raise DegenerateParameterError("branch denominator vanished")
    psi = ew - w11 / d_b
    x_e = -rho * (psi - ew)
    ea11 = ratio_moment_1(p.dist_p, 1, x_e)
    tau = p.alpha * p.e_p * ew + p.alpha * (psi - ew) * ea11 / d_s
    x_h = -nu * (tau - p.alpha * p.e_p * ew)
    ha11 = ratio_moment_1(p.dist_h, 1, x_h)
    rho_eq = nu * p.beta_star * ha11 / d_s
    omega_eq = (p.alpha / p.eta) * rho * ea11 / d_b
    if p.z == 0:
        res = np.array([rho - rho_eq, omega - omega_eq])
        first = AlsFirstOrder(g=g, rho=rho, tau=tau, psi=psi, omega=omega, nu=nu, r=r)
    else:
        r_eq = omega_eq + (p.beta / p.eta) * p.sigma2 * g
        res = np.array([rho - rho_eq, r - r_eq])
        first = AlsFirstOrder(g=g, rho=rho, tau=tau, psi=psi, omega=omega_eq, nu=nu, r=r)
    return first, res


def _noise_only_r(p):
    """r in the alpha -> 0 limit, seeding the full solve."""
    if p.sigma2 == 0:
        return 0.0 if p.z.imag == 0 else 0.0 + 0.0j

    def g_map(r):
        _, w11, _, _ = p.kernel.moments(r)
        return (p.beta / p.eta) * p.sigma2 / (p.sigma2 * w11 - p.z)

    seed = p.beta / p.eta if p.z.imag == 0 else complex(p.beta / p.eta)
    try:
        return damped_fixed_point(g_map, seed, damping=0.7, tol=1e-12, max_iter=400).root
    except NonConvergenceError as exc:
        return exc.report.root


def _solve_first(p):
    real_axis = p.z.imag == 0
    if real_axis and p.z.real == 0:
        if p.sigma2 == 0:
            raise IllPosedError("sigma2 = 0 with mu = 0 leaves nu undefined")
        r_pin = p.kernel.pinned_r(p.beta, p.eta)
        _, w11, _, _ = p.kernel.moments(r_pin)
        nu0 = 1.0 / (p.sigma2 * float(np.real(w11)))
        rho0 = nu0 * p.beta_star * p.dist_h.mean()
        omega0 = (p.alpha / p.eta) * rho0 * ratio_moment_1(
            p.dist_p, 1, rho0 * float(np.real(w11)))
        seed = np.array([rho0, max(omega0, 1e-3 * rho0 / p.eta)])
        rho, omega = _solve_with_alpha_continuation(p, seed, r_pin=r_pin)
        first, _ = _first_chain(p, rho, r_pin, omega=omega)
        return first

    r0 = _noise_only_r(p)
    _, w11, _, _ = p.kernel.moments(r0)
    nu0 = 1.0 / (p.sigma2 * w11 - p.z)
    rho0 = nu0 * p.beta_star * p.dist_h.mean()
    if real_axis:
        seed = np.array([float(np.real(rho0)), float(np.real(r0))])
    else:
        seed = np.array([rho0, r0], dtype=complex)
    rho, r = _solve_with_alpha_continuation(p, seed)
    first, _ = _first_chain(p, rho, r)
    return first


def _scaled_residual(p, seed, r_pin):
    # constant scales keep the residual map as smooth as the raw equations
    # while staying conditioned when the unknowns grow with eta
    scale = 1.0 + np.abs(seed)
    dtype = complex if np.iscomplexobj(seed) else float

    def residual(v):
        try:
            if p.z == 0:
                _, res = _first_chain(p, v[0], r_pin, omega=v[1])
            else:
                _, res = _first_chain(p, v[0], v[1])
        except DomainError:
            return np.array([1e6, 1e6], dtype=dtype)
        return res / scale

    return residual, scale


def _solve_with_alpha_continuation(p, seed, r_pin=None):
    residual, scale = _scaled_residual(p, seed, r_pin)
    try:
        root = solve_2d(residual, seed, tol=1e-11, scale=scale).root
        return np.atleast_1d(root)
    except NonConvergenceError:
        pass
    x = seed
    for a in np.linspace(p.alpha / 8.0, p.alpha, 8):
        pa = _Problem(alpha=a, beta=p.beta, eta=p.eta, eta_star=max(p.eta, a),
                      sigma2=p.sigma2, z=p.z, dist_p=p.dist_p, dist_h=p.dist_h,
                      s_type=p.s_type, b_type=p.b_type, e_p=p.e_p, kernel=p.kernel)
        res_a, scale_a = _scaled_residual(pa, x, r_pin)
        x = np.atleast_1d(solve_2d(res_a, x, tol=1e-11, scale=scale_a).root)
    return x


def solve_als_first(params, z=None):
    """Solve the transient seven-variable fixed point at z = -mu/eta."""
    p = _transient_problem(params, z=z)
    return _solve_first(p)


def als_residuals(params, first, z=None, scaled=False):
    """Residuals of the seven defining equations at a candidate solution."""
    p = _scaled_problem(params) if scaled else _transient_problem(params, z=z)
    return _residuals(p, first)


def _residuals(p, first):
    g, rho, tau = first.g, first.rho, first.tau
    psi, omega, nu, r = first.psi, first.omega, first.nu, first.r
    ew, w11, _, _ = p.kernel.moments(r)
    q = 1.0 - g / nu
    d_b = 1.0 if p.b_type == "iid" else 1.0 - (p.beta / p.eta_star) * q
    d_s = 1.0 if p.s_type == "iid" else 1.0 - p.beta * q
    x_e = -rho * (psi - ew)
    x_h = -nu * (tau - p.alpha * p.e_p * ew)
    ea11 = ratio_moment_1(p.dist_p, 1, x_e)
    ha11 = ratio_moment_1(p.dist_h, 1, x_h)
    return np.array([
        g - nu * (1.0 + (p.alpha / p.beta) * rho * (psi - ew) * ea11),
        rho - nu * p.beta_star * ha11 / d_s,
        tau - (p.alpha * p.e_p * ew + p.alpha * (psi - ew) * ea11 / d_s),
        psi - (ew - w11 / d_b),
        omega - (p.alpha / p.eta) * rho * ea11 / d_b,
        nu - 1.0 / (p.sigma2 * w11 - p.z),
        r - (omega + (p.beta / p.eta) * p.sigma2 * g),
    ])


# --------------------------------------------------------------------------
# second-order stages
# --------------------------------------------------------------------------

@dataclass
class _Ctx:
    p: object
    first: AlsFirstOrder
    ew: float
    w11: float
    w12: float
    w22: float
    ea: dict
    ha: dict
    q: float
    d_s: float
    d_b: float
    d_e2: float
    d_h2: float
    d_psi: float
    d_omega: float
    off_psi: float
    off_tau: float
    rho_sq: float
    nu_sq: float


def _context(p, first):
    if p.z.imag != 0:
        raise DomainError("second-order moments are defined on the real axis")
    g = float(np.real(first.g))
    rho = float(np.real(first.rho))
    tau = float(np.real(first.tau))
    psi = float(np.real(first.psi))
    omega = float(np.real(first.omega))
    nu = float(np.real(first.nu))
    r = float(np.real(first.r))
    fo = AlsFirstOrder(g=g, rho=rho, tau=tau, psi=psi, omega=omega, nu=nu, r=r)

    ew, w11, w12, w22 = (float(np.real(v)) for v in p.kernel.moments(r))
    x_e = -rho * (psi - ew)
    x_h = -nu * (tau - p.alpha * p.e_p * ew)
    ea = {
        (0, 1): ratio_moment_1(p.dist_p, 0, x_e),
        (1, 1): ratio_moment_1(p.dist_p, 1, x_e),
        (0, 2): ratio_moment_2(p.dist_p, 0, x_e),
        (1, 2): ratio_moment_2(p.dist_p, 1, x_e),
        (2, 2): ratio_moment_2(p.dist_p, 2, x_e),
    }
    ha = {
        (0, 2): ratio_moment_2(p.dist_h, 0, x_h),
        (1, 2): ratio_moment_2(p.dist_h, 1, x_h),
        (2, 2): ratio_moment_2(p.dist_h, 2, x_h),
    }
    q = 1.0 - g / nu
    d_s = 1.0 if p.s_type == "iid" else 1.0 - p.beta * q
    d_b = 1.0 if p.b_type == "iid" else 1.0 - (p.beta / p.eta_star) * q
    d_e2 = p.alpha * (ea[(0, 2)] - 1.0) + 1.0
    d_h2 = p.beta_star * (ha[(0, 2)] - 1.0) + 1.0
    d_psi = (p.alpha / p.eta_star) * (ea[(0, 2)] - 1.0) + 1.0
    d_omega = (p.eta / p.eta_star) * (omega**2 * w22 - 2.0 * omega * w11) + 1.0
    return _Ctx(
        p=p, first=fo, ew=ew, w11=w11, w12=w12, w22=w22, ea=ea, ha=ha, q=q,
        d_s=d_s, d_b=d_b, d_e2=d_e2, d_h2=d_h2, d_psi=d_psi, d_omega=d_omega,
        off_psi=(ew - psi) ** 2, off_tau=(p.alpha * p.e_p * ew - tau) ** 2,
        rho_sq=rho**2, nu_sq=nu**2,
    )


def _gamma2_alternate(ctx, rho2, psi2, nu2):
    # g + conj(z) g2 = (eta/beta) r2 W12 degenerates as z -> 0; this form,
    # derived from the same trace identity, stays finite for all z
    p, f = ctx.p, ctx.first
    num = f.g * nu2 + (p.alpha / p.beta) * (
        (f.psi - ctx.ew) * rho2 + f.rho * psi2) * ctx.nu_sq * ctx.ea[(1, 2)]
    return num / f.nu


def _psi_eq(ctx, r_j, rho_term):
    # rho_term carries the moment factor: rho_j*Ea12 for j=2,3 and
    # rho4*Ea12 + |rho|^2*Ea22 for j=4
    p = ctx.p
    if p.b_type == "iid":
        return r_j * ctx.w22
    return (r_j * ctx.w22 - (p.alpha / p.eta_star) * ctx.off_psi * rho_term) / ctx.d_psi


def _omega_eq(ctx, core, g_j):
    p = ctx.p
    if p.b_type == "iid":
        return (p.alpha / p.eta) * core
    return ((p.alpha / p.eta) * core
            - p.sigma2 * (p.beta / p.eta_star) * g_j * ctx.first.omega**2 * ctx.w22
            ) / ctx.d_omega


def _tau_eq(ctx, j, psi_j, rho_j, nu_j):
    p = ctx.p
    core = p.alpha * (psi_j * ctx.ea[(1, 2)] + ctx.off_psi * rho_j * ctx.ea[(2, 2)])
    if p.s_type == "iid":
        return core
    if j == 2:
        h_term = ctx.p.beta_star * nu_j * ctx.off_tau * ctx.ha[(1, 2)]
    else:
        h_term = ctx.p.beta_star * ctx.off_tau * (
            nu_j * ctx.ha[(1, 2)] + ctx.nu_sq * ctx.ha[(2, 2)])
    return (core - h_term) / ctx.d_h2


def _rho_eq(ctx, j, nu_j, tau_j, psi_j, psi4=None, rho3=None, psi3=None):
    p = ctx.p
    if j == 2:
        num = p.beta_star * (nu_j * ctx.ha[(1, 2)] + ctx.nu_sq * tau_j * ctx.ha[(2, 2)])
    elif j == 3:
        num = p.beta_star * (
            nu_j * ctx.ha[(1, 2)] + ctx.nu_sq * (1.0 + tau_j) * ctx.ha[(2, 2)])
    else:
        num = p.alpha * (rho3 * ctx.ea[(1, 2)] + psi3 * ctx.rho_sq * ctx.ea[(2, 2)])
        if p.s_type == "isometric":
            num = num - p.alpha * (1.0 + psi4) * ctx.rho_sq * ctx.ea[(1, 2)]
            return num / ctx.d_e2
        return num
    if p.s_type == "isometric":
        num = num - p.alpha * psi_j * ctx.rho_sq * ctx.ea[(1, 2)]
        return num / ctx.d_e2
    return num


def _stage1(ctx):
    p = ctx.p

    def unpack(v):
        r2, rho2 = v
        nu2 = ctx.nu_sq * (1.0 + p.sigma2 * r2 * ctx.w22)
        psi2 = _psi_eq(ctx, r2, rho2 * ctx.ea[(1, 2)])
        tau2 = _tau_eq(ctx, 2, psi2, rho2, nu2)
        g2 = _gamma2_alternate(ctx, rho2, psi2, nu2)
        core = rho2 * ctx.ea[(1, 2)] + ctx.rho_sq * psi2 * ctx.ea[(2, 2)]
        omega2 = _omega_eq(ctx, core, g2)
        return nu2, psi2, tau2, g2, omega2

    scale = np.array([1.0 + p.sigma2 * ctx.nu_sq / p.eta, 1.0 + ctx.nu_sq])

    def residual(v):
        r2, rho2 = v
        nu2, psi2, tau2, g2, omega2 = unpack(v)
        rho_eq = _rho_eq(ctx, 2, nu2, tau2, psi2)
        r_eq = omega2 + p.sigma2 * (p.beta / p.eta) * g2
        return np.array([r2 - r_eq, rho2 - rho_eq]) / scale

    root = np.atleast_1d(solve_2d(residual, np.zeros(2), tol=1e-12, scale=scale).root)
    r2, rho2 = (float(v) for v in root)
    nu2, psi2, tau2, g2, omega2 = unpack(root)
    return dict(r=r2, rho=rho2, nu=nu2, psi=psi2, tau=tau2, g=g2, omega=omega2)


def _stage2(ctx, s1):
    p = ctx.p
    g3 = (p.beta_star / p.beta) * (
        s1["nu"] * ctx.ha[(1, 2)] + ctx.nu_sq * s1["tau"] * ctx.ha[(2, 2)])

    def unpack(v):
        omega3, rho3 = v
        r3 = omega3 + p.sigma2 * (p.beta / p.eta) * g3
        nu3 = p.sigma2 * ctx.nu_sq * r3 * ctx.w22
        psi3 = _psi_eq(ctx, r3, rho3 * ctx.ea[(1, 2)])
        tau3 = _tau_eq(ctx, 3, psi3, rho3, nu3)
        return r3, nu3, psi3, tau3

    scale = np.array([1.0 + ctx.nu_sq / p.eta, 1.0 + ctx.nu_sq])

    def residual(v):
        omega3, rho3 = v
        r3, nu3, psi3, tau3 = unpack(v)
        core = rho3 * ctx.ea[(1, 2)] + ctx.rho_sq * psi3 * ctx.ea[(2, 2)]
        rho_eq = _rho_eq(ctx, 3, nu3, tau3, psi3)
        omega_eq = _omega_eq(ctx, core, g3)
        return np.array([omega3 - omega_eq, rho3 - rho_eq]) / scale

    root = np.atleast_1d(solve_2d(residual, np.zeros(2), tol=1e-12, scale=scale).root)
    omega3, rho3 = (float(v) for v in root)
    r3, nu3, psi3, tau3 = unpack(root)
    return dict(r=r3, rho=rho3, nu=nu3, psi=psi3, tau=tau3, g=g3, omega=omega3)


def _stage3(ctx, s1, s2):
    p = ctx.p
    g4 = (p.alpha / p.beta) * (
        s1["rho"] * ctx.ea[(1, 2)] + s1["psi"] * ctx.rho_sq * ctx.ea[(2, 2)])

    def unpack(psi4):
        rho4 = _rho_eq(ctx, 4, None, None, None, psi4=psi4,
                       rho3=s2["rho"], psi3=s2["psi"])
        core = rho4 * ctx.ea[(1, 2)] + ctx.rho_sq * (1.0 + psi4) * ctx.ea[(2, 2)]
        omega4 = _omega_eq(ctx, core, g4)
        r4 = omega4 + p.sigma2 * (p.beta / p.eta) * g4
        return rho4, omega4, r4

    psi_scale = 1.0 + abs(s1["psi"])

    def residual(psi4):
        rho4, omega4, r4 = unpack(psi4)
        rho_term = rho4 * ctx.ea[(1, 2)] + ctx.rho_sq * ctx.ea[(2, 2)]
        psi_eq = _psi_eq(ctx, r4, rho_term)
        return (psi4 - psi_eq) / psi_scale

    psi4 = float(solve_1d(residual, s1["psi"], tol=1e-13).root)
    rho4, omega4, r4 = unpack(psi4)
    return dict(r=r4, rho=rho4, psi=psi4, g=g4, omega=omega4)


def solve_als_second(params, first, scaled=False):
    """Solve the staged second-order system given the first-order solution.

    Stage 1 finds the noise-paired moments in (r2, rho2); stage 2 the
    channel-paired moments in (omega3, rho3); stage 3 the interference-paired
    moments in the single variable psi4.  Each stage is affine given the
    first-order values, so the zero-finders converge in one Newton step.
    """
    p = _scaled_problem(params) if scaled else _transient_problem(params)
    ctx = _context(p, first)
    s1 = _stage1(ctx)
    s2 = _stage2(ctx, s1)
    s3 = _stage3(ctx, s1, s2)
    out = AlsSecondOrder(
        g2=s1["g"], g3=s2["g"], g4=s3["g"],
        rho2=s1["rho"], rho3=s2["rho"], rho4=s3["rho"],
        psi2=s1["psi"], psi3=s2["psi"], psi4=s3["psi"],
        omega2=s1["omega"], omega3=s2["omega"], omega4=s3["omega"],
        r2=s1["r"], r3=s2["r"], r4=s3["r"],
        tau2=s1["tau"], tau3=s2["tau"],
        nu2=s1["nu"], nu3=s2["nu"],
    )
    res = second_order_residuals(ctx, out)
    worst = float(np.max(np.abs(res)))
    scale = 1.0 + max(abs(v) for v in vars(out).values())
    if worst > 1e-9 * scale:
        raise NonConvergenceError(f"second-order residuals too large: {worst:.3e}")
    return out


def second_order_residuals(ctx, so):
    """Residuals of every stage equation at a candidate second-order point."""
    p = ctx.p
    res = []
    for j, (r_j, rho_j, psi_j, omega_j, g_j) in {
        2: (so.r2, so.rho2, so.psi2, so.omega2, so.g2),
        3: (so.r3, so.rho3, so.psi3, so.omega3, so.g3),
        4: (so.r4, so.rho4, so.psi4, so.omega4, so.g4),
    }.items():
        if j == 2:
            res.append(rho_j - _rho_eq(ctx, 2, so.nu2, so.tau2, psi_j))
            res.append(so.tau2 - _tau_eq(ctx, 2, psi_j, rho_j, so.nu2))
            res.append(so.nu2 - ctx.nu_sq * (1.0 + p.sigma2 * r_j * ctx.w22))
            res.append(g_j - _gamma2_alternate(ctx, rho_j, psi_j, so.nu2))
            core = rho_j * ctx.ea[(1, 2)] + ctx.rho_sq * psi_j * ctx.ea[(2, 2)]
            rho_term = rho_j
        elif j == 3:
            res.append(rho_j - _rho_eq(ctx, 3, so.nu3, so.tau3, psi_j))
            res.append(so.tau3 - _tau_eq(ctx, 3, psi_j, rho_j, so.nu3))
            res.append(so.nu3 - p.sigma2 * ctx.nu_sq * r_j * ctx.w22)
            res.append(g_j - (p.beta_star / p.beta) * (
                so.nu2 * ctx.ha[(1, 2)] + ctx.nu_sq * so.tau2 * ctx.ha[(2, 2)]))
            core = rho_j * ctx.ea[(1, 2)] + ctx.rho_sq * psi_j * ctx.ea[(2, 2)]
            rho_term = rho_j
        else:
            res.append(rho_j - _rho_eq(ctx, 4, None, None, None, psi4=psi_j,
                                       rho3=so.rho3, psi3=so.psi3))
            res.append(g_j - (p.alpha / p.beta) * (
                so.rho2 * ctx.ea[(1, 2)] + so.psi2 * ctx.rho_sq * ctx.ea[(2, 2)]))
            core = rho_j * ctx.ea[(1, 2)] + ctx.rho_sq * (1.0 + psi_j) * ctx.ea[(2, 2)]
            rho_term = rho_j * ctx.ea[(1, 2)] + ctx.rho_sq * ctx.ea[(2, 2)]
        res.append(omega_j - _omega_eq(ctx, core, g_j))
        res.append(r_j - (omega_j + p.sigma2 * (p.beta / p.eta) * g_j))
        if j == 4:
            res.append(psi_j - _psi_eq(ctx, r_j, rho_term))
        else:
            res.append(psi_j - _psi_eq(ctx, r_j, rho_j * ctx.ea[(1, 2)]))
    return np.array(res)


def als_second_order_residuals(params, first, second, scaled=False):
    """Residuals of every second-order equation at a candidate solution."""
    p = _scaled_problem(params) if scaled else _transient_problem(params)
    return second_order_residuals(_context(p, first), second)


# --------------------------------------------------------------------------
# SINR assembly
# --------------------------------------------------------------------------

def _sinr_from_parts(mode, pk, sigma2, ew, first, second):
    rho = float(np.real(first.rho))
    psi = float(np.real(first.psi))
    ak = math.sqrt(pk)
    if mode == "semi_blind":
        a1, a2 = 1.0, -ak * rho
    else:
        a1, a2 = ak * (ew - psi), 1.0
    term_rho = second.rho4 + sigma2 * second.rho2
    term_psi = second.psi4 + sigma2 * second.psi2
    inp1 = a1**2 * term_rho
    inp2 = a2**2 * term_psi
    den = inp1 + inp2
    num = pk * a1**2 * rho**2
    if den <= 0:
        if num == 0:
            return AlsSinr(0.0, 0.0, inp1, inp2, a1, a2)
        raise DegenerateParameterError("interference-plus-noise power vanished")
    return AlsSinr(num / den, num, inp1, inp2, a1, a2)


def als_transient_sinr(params, first, second, pk):
    """Transient per-stream SINR from the first- and second-order moments."""
    ew, _, _, _ = _TransientWindow(params.window, params.eta).moments(
        float(np.real(first.r)))
    return _sinr_from_parts(params.mode, pk, params.sigma2, ew, first, second)


def als_steady_state(params, pk=1.0):
    """Steady-state SINR (unlimited training) for a fixed-length window."""
    p = _scaled_problem(params)
    first = _solve_first(p)
    second = solve_als_second(params, first, scaled=True)
    ew = p.kernel.lbar
    return _sinr_from_parts(params.mode, pk, params.sigma2, ew, first, second)


def als_steady_state_first(params):
    """First-order scaled solution of the steady-state system."""
    p = _scaled_problem(params)
    return _solve_first(p)


def als_stieltjes(params, z):
    """Stieltjes transform of the windowed sample covariance spectrum."""
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("Stieltjes transform evaluation needs Im(z) > 0")
    p = _transient_problem(params, z=z)
    return _solve_first(p).g
