"""Scalar eigenvalue laws and the ratio moments used by every fixed point.

The asymptotic analysis only ever touches the limiting laws of three scalar
quantities: the squared transmit amplitudes P, the squared channel singular
values H, and the data-window weights W.  Every fixed-point equation is built
from expectations of the two forms

    X_{m,1}(x) = E[X^m / (1 + x X)]        (first kind)
    X_{m,2}(x) = E[X^m / |1 + x X|^2]      (second kind)

which this module evaluates exactly for atomic laws and by adaptive
quadrature for continuous ones.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import exp1

from .errors import DomainError, SingularityError

__all__ = [
    "ScalarDistribution",
    "WindowSpec",
    "WindowMoments",
    "expect",
    "ratio_moment_1",
    "ratio_moment_2",
    "exponential_channel_H11",
    "window_distribution",
    "window_moments_closed_form",
]

# Quadrature noise is well below every tolerance used downstream (1e-8).
_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-11, limit=200)

# The exponential tail beyond 40 mean lengths is ~4e-18 of the mass, i.e.
# invisible at double precision for any bounded integrand.
_EXP_CUTOFF = 40.0


@dataclass(frozen=True)
class ScalarDistribution:
    """Law of a nonnegative scalar random variable.

    Kinds
    -----
    ``point_masses``
        atoms ``values`` with probabilities ``weights``.
    ``exponential``
        density exp(-v/mean)/mean on [0, inf).
    ``empirical``
        equal-weight atoms at the given samples (edf semantics).
    ``log_uniform``
        density 1/(v log(hi/lo)) on [lo, hi]; this is the limiting law of
        exponentially decaying window weights and is produced internally by
        :func:`window_distribution`.
    """

    kind: str
    values: tuple = ()
    weights: tuple = ()
    mean_value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0

    # -- constructors -----------------------------------------------------

    @classmethod
    def point_masses(cls, values, weights):
        values = tuple(float(v) for v in values)
        weights = tuple(float(w) for w in weights)
        if len(values) != len(weights) or not values:
            raise DomainError("values and weights must be equal-length and non-empty")
        if any(v < 0 for v in values):
            raise DomainError("support points must be nonnegative")
        if any(w < 0 for w in weights):
            raise DomainError("weights must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-12:
            raise DomainError("weights must sum to 1 within 1e-12")
        if all(v == 0 or w == 0 for v, w in zip(values, weights)):
            raise DomainError("law must not put all mass at zero")
        return cls(kind="point_masses", values=values, weights=weights)

    @classmethod
    def exponential(cls, mean):
        mean = float(mean)
        if not (mean > 0 and math.isfinite(mean)):
            raise DomainError("exponential law needs a finite positive mean")
        return cls(kind="exponential", mean_value=mean)

    @classmethod
    def empirical(cls, samples):
        samples = tuple(float(s) for s in samples)
        if not samples:
            raise DomainError("empirical law needs at least one sample")
        if any(s < 0 for s in samples):
            raise DomainError("samples must be nonnegative")
        if all(s == 0 for s in samples):
            raise DomainError("law must not put all mass at zero")
        return cls(kind="empirical", values=samples)

    @classmethod
    def log_uniform(cls, lo, hi=1.0):
        lo, hi = float(lo), float(hi)
        if not (0 < lo < hi):
            raise DomainError("log_uniform needs 0 < lo < hi")
        return cls(kind="log_uniform", lo=lo, hi=hi)

    # -- basic functionals -------------------------------------------------

    def _atoms(self):
        if self.kind == "point_masses":
            return np.asarray(self.values), np.asarray(self.weights)
        if self.kind == "empirical":
            v = np.asarray(self.values)
            return v, np.full(v.size, 1.0 / v.size)
        raise TypeError(f"{self.kind} law is not atomic")

    @property
    def is_atomic(self):
        return self.kind in ("point_masses", "empirical")

    def mean(self):
        if self.is_atomic:
            v, w = self._atoms()
            return float(w @ v)
        if self.kind == "exponential":
            return self.mean_value
        c = 1.0 / math.log(self.hi / self.lo)
        return c * (self.hi - self.lo)

    def moment(self, m):
        """E[X^m] for integer m >= 0."""
        if m == 0:
            return 1.0
        if self.is_atomic:
            v, w = self._atoms()
            return float(w @ v**m)
        if self.kind == "exponential":
            return math.factorial(m) * self.mean_value**m
        c = 1.0 / math.log(self.hi / self.lo)
        return c * (self.hi**m - self.lo**m) / m

    def support_bounds(self):
        """(min, max) of the numerically relevant support."""
        if self.is_atomic:
            v, _ = self._atoms()
            return float(v.min()), float(v.max())
        if self.kind == "exponential":
            return 0.0, _EXP_CUTOFF * self.mean_value
        return self.lo, self.hi

    def cdf(self, x):
        if self.is_atomic:
            v, w = self._atoms()
            return float(w[v <= x].sum())
        if self.kind == "log_uniform":
            if x <= self.lo:
                return 0.0
            if x >= self.hi:
                return 1.0
            return math.log(x / self.lo) / math.log(self.hi / self.lo)
        return 1.0 - math.exp(-x / self.mean_value) if x > 0 else 0.0


def _integrate(dist, fn, complex_valued):
    """Integrate fn against the density of a continuous law."""
    if dist.kind == "exponential":
        mu = dist.mean_value
        weight = lambda t: math.exp(-t / mu) / mu
        a, b = 0.0, _EXP_CUTOFF * mu
    elif dist.kind == "log_uniform":
        c = 1.0 / math.log(dist.hi / dist.lo)
        weight = lambda t: c / t
        a, b = dist.lo, dist.hi
    else:  # pragma: no cover - guarded by callers
        raise TypeError(dist.kind)

    if complex_valued:
        re = quad(lambda t: (fn(t) * weight(t)).real, a, b, **_QUAD_OPTS)[0]
        im = quad(lambda t: (fn(t) * weight(t)).imag, a, b, **_QUAD_OPTS)[0]
        out = complex(re, im)
    else:
        out = quad(lambda t: fn(t) * weight(t), a, b, **_QUAD_OPTS)[0]
    if not np.all(np.isfinite([np.real(out), np.imag(out)])):
        raise DomainError("integrand is not integrable against this law")
    return out


def expect(dist, f):
    """E[f(X)] for a bounded function f on the support of dist.

    Atomic kinds are exact sums; continuous kinds use adaptive quadrature.
    """
    if dist.is_atomic:
        v, w = dist._atoms()
        return float(sum(wi * f(vi) for vi, wi in zip(v, w)))
    return _integrate(dist, f, complex_valued=False)


def _check_pole_first_kind(dist, x):
    if dist.is_atomic:
        v, _ = dist._atoms()
        d = np.abs(1.0 + x * v)
        scale = np.maximum(1.0, np.abs(x) * v)
        if np.any(d < 1e-13 * scale):
            raise SingularityError("1 + x*X vanishes on the support")
        return
    # continuous laws: a real x places the pole -1/x on the positive axis
    if np.imag(x) != 0:
        return
    xr = float(np.real(x))
    if xr >= 0:
        return
    lo, hi = dist.support_bounds()
    pole = -1.0 / xr
    if dist.kind == "exponential" or lo <= pole <= hi:
        raise SingularityError("pole -1/x lies inside the support")


def ratio_moment_1(dist, m, x):
    """First-kind ratio moment E[X^m / (1 + x X)].

    Returns a float for real x and a complex value otherwise.  Satisfies
    E[X^m] = X_{m,1} + x X_{m+1,1}.
    """
    if m < 0 or m != int(m):
        raise DomainError("m must be a nonnegative integer")
    m = int(m)
    if x == 0:
        return dist.moment(m)
    _check_pole_first_kind(dist, x)
    if dist.is_atomic:
        v, w = dist._atoms()
        out = np.sum(w * v**m / (1.0 + x * v))
        return complex(out) if np.iscomplexobj(np.asarray(x)) or isinstance(x, complex) else float(out)
    if isinstance(x, complex) and x.imag != 0:
        return _integrate(dist, lambda t: t**m / (1.0 + x * t), complex_valued=True)
    xr = float(np.real(x))
    return _integrate(dist, lambda t: t**m / (1.0 + xr * t), complex_valued=False)


def ratio_moment_2(dist, m, x):
    """Second-kind ratio moment E[X^m / |1 + x X|^2] (always real).

    Satisfies X_{m,1} = X_{m,2} + conj(x) X_{m+1,2}.
    """
    if m < 0 or m != int(m):
        raise DomainError("m must be a nonnegative integer")
    m = int(m)
    if x == 0:
        return dist.moment(m)
    _check_pole_first_kind(dist, x)
    a, b = float(np.real(x)), float(np.imag(x))
    if dist.is_atomic:
        v, w = dist._atoms()
        return float(np.sum(w * v**m / ((1.0 + a * v) ** 2 + (b * v) ** 2)))
    return _integrate(
        dist, lambda t: t**m / ((1.0 + a * t) ** 2 + (b * t) ** 2), complex_valued=False
    )


# -- mean-one exponential channel closed form -------------------------------

def _e1_scaled(y):
    """exp(y) * E1(y), stable for large |y| via a continued fraction."""
    if abs(y) <= 30.0:
        return np.exp(y) * exp1(y)
    if np.real(y) <= 0:
        raise DomainError("scaled E1 requires Re(y) > 0 for large |y|")
    # modified Lentz on E1(y) e^y = 1/(y+1 - 1/(y+3 - 4/(y+5 - 9/(...))))
    tiny = 1e-300
    b = y + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for k in range(1, 200):
        a = -(k * k)
        b = b + 2.0
        d = 1.0 / (b + a * d)
        c = b + a / c
        delta = c * d
        h = h * delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise DomainError("continued fraction for E1 did not converge")


def exponential_channel_H11(x):
    """E[H/(1+xH)] for mean-one exponential H, in closed form.

    Equals (1 - f(x))/x with f(x) = x^-1 exp(1/x) E1(1/x); the x -> 0 limit
    is E[H] = 1.  Independent of the quadrature path in
    :func:`ratio_moment_1`, which it must match to 1e-9.
    """
    if x == 0:
        return 1.0
    if np.imag(x) == 0:
        xr = float(np.real(x))
        if xr < 0:
            raise DomainError("negative real x hits the pole of the integrand")
        if xr < 1e-4:
            # asymptotic series: E[h/(1+xh)] = sum (-x)^k (k+1)!
            return 1.0 - 2.0 * xr + 6.0 * xr**2 - 24.0 * xr**3
        fa = _e1_scaled(1.0 / xr) / xr
        return (1.0 - fa) / xr
    xc = complex(x)
    fa = _e1_scaled(1.0 / xc) / xc
    return (1.0 - fa) / xc


# -- window laws -------------------------------------------------------------

@dataclass(frozen=True)
class WindowSpec:
    """Shape of the data window applied to the sample covariance.

    ``rectangular`` weights every symbol equally; ``exponential`` decays with
    normalized length ``lbar`` (the window length over the system dimension);
    ``custom`` carries an explicit weight law.
    """

    shape: str
    lbar: float = 0.0
    dist: ScalarDistribution = None

    @classmethod
    def rectangular(cls):
        return cls(shape="rectangular")

    @classmethod
    def exponential(cls, lbar):
        lbar = float(lbar)
        if not (lbar > 0):
            raise DomainError("exponential window needs lbar > 0")
        return cls(shape="exponential", lbar=lbar)

    @classmethod
    def custom(cls, dist):
        if not isinstance(dist, ScalarDistribution):
            raise DomainError("custom window needs a ScalarDistribution")
        return cls(shape="custom", dist=dist)


def window_distribution(spec, eta):
    """Limiting law of the window weights after eta normalized symbols.

    Rectangular windows give a unit point mass at 1; exponential windows give
    the log-uniform law on [exp(-eta/lbar), 1]; custom laws pass through.
    """
    if eta <= 0:
        raise DomainError("eta must be positive")
    if spec.shape == "rectangular":
        return ScalarDistribution.point_masses([1.0], [1.0])
    if spec.shape == "exponential":
        return ScalarDistribution.log_uniform(math.exp(-eta / spec.lbar), 1.0)
    return spec.dist


@dataclass(frozen=True)
class WindowMoments:
    """The window ratio moments every receiver fixed point consumes."""

    w01: complex
    w11: complex
    w12: float
    w22: float
    ew: float


def window_moments_closed_form(spec, eta, r):
    """W_{0,1}, W_{1,1}, W_{1,2}, W_{2,2} and E[W] at argument r.

    Rectangular and exponential windows use closed forms; custom windows fall
    back to the generic ratio moments.  r = 0 is handled by its limit values.
    """
    r = complex(r) if (isinstance(r, complex) and r.imag != 0) else float(np.real(r))
    if spec.shape == "rectangular":
        if r == 0:
            return WindowMoments(1.0, 1.0, 1.0, 1.0, 1.0)
        a2 = abs(1.0 + r) ** 2
        out = WindowMoments(1.0 / (1.0 + r), 1.0 / (1.0 + r), 1.0 / a2, 1.0 / a2, 1.0)
    elif spec.shape == "exponential":
        lbar = spec.lbar
        lo = math.exp(-eta / lbar)
        ew = (lbar / eta) * (1.0 - lo)
        if r == 0:
            ew2 = (lbar / (2.0 * eta)) * (1.0 - lo * lo)
            return WindowMoments(1.0, ew, ew, ew2, ew)
        if isinstance(r, complex):
            delta = (lbar / eta) * (np.log(1.0 + lo * r) - np.log(1.0 + r))
        else:
            # log1p keeps 1 - w01 fully accurate when eta is huge
            delta = (lbar / eta) * (math.log1p(lo * r) - math.log1p(r))
        w01 = 1.0 + delta
        w11 = -delta / r
        if isinstance(r, complex):
            # E[W/|1+rW|^2] by partial fractions over the conjugate pole pair
            w12 = float(np.imag(r * w11) / np.imag(r))
            w22 = float(np.real((w11 - w12) / np.conj(r)))
        else:
            w12 = float(ew / ((1.0 + r) * (1.0 + lo * r)))
            w22 = float((np.real(w11) - w12) / r)
        out = WindowMoments(w01, w11, w12, w22, ew)
    elif spec.shape == "custom":
        d = spec.dist
        out = WindowMoments(
            ratio_moment_1(d, 0, r),
            ratio_moment_1(d, 1, r),
            ratio_moment_2(d, 1, r),
            ratio_moment_2(d, 2, r),
            d.mean(),
        )
    else:
        raise DomainError(f"unknown window shape {spec.shape!r}")
    return out
