"""Conversion between MMSE and adaptive-LS SINR through the constant zeta.

With i.i.d. training and no diagonal loading the adaptive receiver's SINR is
a deterministic function of the MMSE SINR and a single constant
zeta = W11/W12 that depends only on the receive ratio, the training length
and the window shape.  This module evaluates zeta (transient and
steady-state), applies the conversion, and quantifies the capacity cost of
adaptivity.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import WindowSpec, window_moments_closed_form
from .errors import DomainError

__all__ = [
    "ZetaContext",
    "zeta_transient",
    "zeta_steady",
    "als_from_mmse",
    "capacity_gap",
    "poor_wang_zeta",
]


@dataclass(frozen=True)
class ZetaContext:
    """zeta with the parameters that produced it (eta is inf in steady state)."""

    beta: float
    eta: float
    window: WindowSpec
    zeta: float
    r: float


def _pinned_r_generic(window, beta, eta):
    # W01(r) = 1 - beta/eta, i.e. eta * r * W11(r) = beta; W01 is monotone in r
    from .rootfind import solve_1d

    def f(r):
        wm = window_moments_closed_form(window, eta, r)
        return eta * r * float(np.real(wm.w11)) - beta

    return float(solve_1d(f, (1e-12, 1e6), tol=1e-13).root)


def zeta_transient(beta, eta, window):
    """zeta after eta normalized training symbols.

    Rectangular windows give 1 + beta/(eta - beta); exponential windows have
    a closed form; custom windows invert the pinned window moment
    numerically.  Requires eta > beta.
    """
    if eta <= beta:
        raise DomainError("transient zeta requires eta > beta")
    if math.isinf(eta):
        if window.shape == "rectangular":
            return ZetaContext(beta, eta, window, 1.0, 0.0)
        raise DomainError("eta = inf with a decaying window is the steady-state case")
    if window.shape == "rectangular":
        r = beta / (eta - beta)
        zeta = 1.0 + beta / (eta - beta)
    elif window.shape == "exponential":
        lbar = window.lbar
        r = (math.exp(beta / lbar) - 1.0) / (1.0 - math.exp((beta - eta) / lbar))
        zeta = (beta * (1.0 - math.exp(-eta / lbar))
                / (lbar * (1.0 - math.exp((beta - eta) / lbar))
                   * (1.0 - math.exp(-beta / lbar))))
    else:
        r = _pinned_r_generic(window, beta, eta)
        wm = window_moments_closed_form(window, eta, r)
        zeta = float(np.real(wm.w11)) / wm.w12
    return ZetaContext(beta, eta, window, float(zeta), float(r))


def zeta_steady(beta, window):
    """Steady-state zeta for a fixed-length window (exponential with finite
    normalized length); approaches 1 as the window grows."""
    if window.shape != "exponential":
        raise DomainError("steady-state zeta needs a fixed-length (exponential) window")
    lbar = window.lbar
    r = math.exp(beta / lbar) - 1.0
    zeta = beta / (lbar * (1.0 - math.exp(-beta / lbar)))
    return ZetaContext(beta, math.inf, window, float(zeta), float(r))


def als_from_mmse(sinr_mmse, ctx, mode):
    """Adaptive-LS SINR implied by an MMSE SINR at the given zeta."""
    s = float(sinr_mmse)
    if s < 0:
        raise DomainError("SINR must be nonnegative")
    z = ctx.zeta
    if mode == "training":
        if s == 0:
            return 0.0
        return s / (z + (z - 1.0) / s)
    if mode == "semi_blind":
        return s / (z + (z - 1.0) * s)
    raise DomainError("mode must be 'training' or 'semi_blind'")


def capacity_gap(sinr_mmse, ctx, mode):
    """Capacity lost per stream (nats) by adapting instead of knowing the
    covariance; 0 at zeta = 1 and log(1 + SINR) as zeta diverges."""
    s = float(sinr_mmse)
    z = ctx.zeta
    if mode == "semi_blind":
        return math.log1p((1.0 - 1.0 / z) * s)
    if mode == "training":
        return math.log1p(((1.0 - 1.0 / z) / ((s - 1.0) / z + 1.0)) * s)
    raise DomainError("mode must be 'training' or 'semi_blind'")


def poor_wang_zeta(lbar):
    """Earlier approximation 1/(2 lbar) + 1 to the steady-state zeta at
    beta = 1, kept for comparison plots."""
    if lbar <= 0:
        raise DomainError("lbar must be positive")
    return 1.0 / (2.0 * lbar) + 1.0
