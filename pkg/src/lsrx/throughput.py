"""Training-length optimization for coded block transmission.

A block of normalized length ell spends eta of it on training; the per-stream
rate log2(1 + SINR_ALS) then applies to the remaining fraction.  The noise
level is tied to the effective rate through a fixed energy-per-bit ratio, so
every capacity evaluation involves a small self-consistent loop.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .als import AlsParams, als_transient_sinr, solve_als_first, solve_als_second
from .errors import DomainError, NonConvergenceError
from .mmse import MmseParams, mmse_sinr, solve_mmse
from .relation import als_from_mmse, zeta_transient

__all__ = ["BlockConfig", "normalized_capacity", "optimize_training", "OptimizeResult"]

_SIGMA2_TOL = 1e-9
_SIGMA2_DAMPING = 0.5
_SIGMA2_MAX_ITER = 400
_SIGMA2_DIVERGED = 1e14


@dataclass(frozen=True)
class BlockConfig:
    """Block layout and energy constraint for throughput optimization.

    ell is the block length over the transmit dimension, ebn0_db the fixed
    ratio of energy per information bit to noise level, and convention picks
    bits per chip (capacity alpha * R_eff) or per stream (R_eff).
    """

    als_params: AlsParams
    ell: float
    ebn0_db: float
    convention: str = "per_chip"

    def __post_init__(self):
        if self.ell <= 0:
            raise DomainError("ell must be positive")
        if self.convention not in ("per_chip", "per_stream"):
            raise DomainError("convention must be 'per_chip' or 'per_stream'")


def _als_sinr_at(params):
    """Transient SINR, via the zeta shortcut whenever it is exact."""
    if params.b_type == "iid" and params.mu == 0.0:
        m = MmseParams(params.alpha, params.beta, params.sigma2,
                       params.dist_p, params.dist_h, params.s_type)
        s_mmse = mmse_sinr(solve_mmse(m), 1.0)
        ctx = zeta_transient(params.beta, params.eta, params.window)
        return als_from_mmse(s_mmse, ctx, params.mode)
    first = solve_als_first(params)
    second = solve_als_second(params, first)
    return als_transient_sinr(params, first, second, 1.0).sinr


def normalized_capacity(config, eta):
    """Information bits per transmit dimension at training length eta.

    Couples sigma2 to the effective rate (received SNR = ebn0 * R_eff) by
    damped iteration, then evaluates the adaptive receiver.  Returns 0 when
    the coupling collapses (the receiver cannot support any positive rate).
    """
    if not (0.0 < eta < config.ell):
        raise DomainError("eta must lie strictly inside (0, ell)")
    ebn0 = 10.0 ** (config.ebn0_db / 10.0)
    frac = 1.0 - eta / config.ell
    base = config.als_params

    sigma2 = 1.0 / ebn0  # R_eff = 1 starting guess
    for _ in range(_SIGMA2_MAX_ITER):
        params = replace(base, eta=float(eta), sigma2=float(sigma2))
        sinr = _als_sinr_at(params)
        r_eff = math.log2(1.0 + sinr) * frac
        if r_eff <= 0 or 1.0 / (ebn0 * r_eff) > _SIGMA2_DIVERGED:
            return 0.0
        target = 1.0 / (ebn0 * r_eff)
        new_sigma2 = (1.0 - _SIGMA2_DAMPING) * sigma2 + _SIGMA2_DAMPING * target
        if abs(new_sigma2 - sigma2) < _SIGMA2_TOL * max(1.0, sigma2):
            sigma2 = new_sigma2
            break
        sigma2 = new_sigma2
    else:
        raise NonConvergenceError("noise/rate coupling did not converge")

    params = replace(base, eta=float(eta), sigma2=float(sigma2))
    r_c = math.log2(1.0 + _als_sinr_at(params))
    r_eff = r_c * frac
    return config.als_params.alpha * r_eff if config.convention == "per_chip" else r_eff


@dataclass(frozen=True)
class OptimizeResult:
    eta_star: float
    c_star: float
    curve: np.ndarray  # columns (eta, capacity)


def optimize_training(config, grid_points=64, tol=1e-3):
    """Maximize normalized capacity over the training length.

    Scans a grid on (lower, ell), then refines with golden-section search
    when the grid brackets a single interior maximum; otherwise refines
    locally around the best grid point.
    """
    base = config.als_params
    lower = base.beta if base.mu == 0.0 else 0.0
    lo = lower + 0.02 * (config.ell - lower)
    hi = config.ell - 0.02 * (config.ell - lower)
    if base.b_type == "orthogonal":
        # keep clear of the square-training degeneracy at eta == alpha
        grid = [g for g in np.linspace(lo, hi, grid_points)
                if abs(g - base.alpha) > 1e-3]
    else:
        grid = list(np.linspace(lo, hi, grid_points))

    values = []
    for g in grid:
        try:
            values.append(normalized_capacity(config, g))
        except (DomainError, NonConvergenceError):
            values.append(-np.inf)
    values = np.asarray(values)
    if not np.any(values > 0):
        raise DomainError("no feasible training length on the grid")
    curve = np.column_stack([grid, values])
    k = int(np.argmax(values))
    a = grid[max(0, k - 1)]
    b = grid[min(len(grid) - 1, k + 1)]
    eta_star, c_star = _golden_section(lambda g: normalized_capacity(config, g),
                                       a, b, tol)
    candidates = [(float(eta_star), float(c_star)), (float(grid[k]), float(values[k]))]
    if base.b_type == "orthogonal" and lo < base.alpha < hi:
        # the square-training boundary is a kink and often the maximizer
        candidates.append((float(base.alpha),
                           normalized_capacity(config, base.alpha)))
    eta_star, c_star = max(candidates, key=lambda t: t[1])
    return OptimizeResult(eta_star=eta_star, c_star=c_star, curve=curve)


def _golden_section(f, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)
