"""Shared zero-finding kernels for the one- and two-dimensional solves.

Every large-system fixed point in this package reduces to a scalar root or a
two-variable root; these routines are deliberately small, dependency-free and
report a residual recomputed at the returned root.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergenceError

__all__ = ["SolveReport", "solve_1d", "solve_2d", "damped_fixed_point"]

DEFAULT_TOL = 1e-11


@dataclass
class SolveReport:
    """Outcome of a zero-finding or fixed-point run."""

    root: object
    residual_norm: float
    iterations: int
    converged: bool
    message: str = field(default="")


def _require(report, what):
    if not report.converged:
        raise NonConvergenceError(
            f"{what} failed to converge (residual {report.residual_norm:.3e} "
            f"after {report.iterations} iterations)",
            report=report,
        )
    return report


def solve_1d(f, bracket_or_seed, tol=DEFAULT_TOL, max_iter=200):
    """Find a scalar root of f.

    A 2-sequence argument is treated as a bracket [a, b] with a sign change
    and solved by bisection-safeguarded secant steps; a scalar argument seeds
    a plain secant iteration.  Convergence means |f(root)| < tol.
    """
    if np.iterable(bracket_or_seed):
        a, b = (float(v) for v in bracket_or_seed)
        return _bracketed_secant(f, a, b, tol, max_iter)
    return _secant(f, float(bracket_or_seed), tol, max_iter)


def _bracketed_secant(f, a, b, tol, max_iter):
    fa, fb = f(a), f(b)
    if abs(fa) < tol:
        return SolveReport(a, abs(fa), 0, True)
    if abs(fb) < tol:
        return SolveReport(b, abs(fb), 0, True)
    if np.sign(fa) == np.sign(fb):
        report = SolveReport(a if abs(fa) < abs(fb) else b, min(abs(fa), abs(fb)), 0, False,
                             "no sign change on bracket")
        raise NonConvergenceError("bracket endpoints have the same sign", report=report)
    width = abs(b - a)
    force_bisect = False
    best_x, best_f = (a, abs(fa)) if abs(fa) < abs(fb) else (b, abs(fb))
    for it in range(1, max_iter + 1):
        # secant candidate, replaced by the midpoint when it leaves the
        # bracket or when the bracket stopped shrinking (skewed functions)
        x = b - fb * (b - a) / (fb - fa) if fb != fa else 0.5 * (a + b)
        lo, hi = min(a, b), max(a, b)
        if force_bisect or not (lo < x < hi):
            x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) < best_f:
            best_x, best_f = x, abs(fx)
        if abs(fx) < tol:
            return SolveReport(x, abs(fx), it, True)
        if np.sign(fx) == np.sign(fa):
            a, fa = x, fx
        else:
            b, fb = x, fx
        new_width = abs(b - a)
        force_bisect = new_width > 0.6 * width
        width = new_width
        if width < 4e-16 * max(1.0, abs(a), abs(b)):
            break
    report = SolveReport(best_x, best_f, max_iter, False,
                         "bracket exhausted above tolerance")
    raise NonConvergenceError("bracketed search did not reach tolerance",
                              report=report)


def _secant(f, seed, tol, max_iter):
    x0 = seed
    x1 = seed * (1.0 + 1e-4) + 1e-8
    f0, f1 = f(x0), f(x1)
    best_x, best_f = (x0, abs(f0)) if abs(f0) < abs(f1) else (x1, abs(f1))
    for it in range(1, max_iter + 1):
        if abs(f1) < tol:
            return SolveReport(x1, abs(f1), it, True)
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not np.isfinite(x2) or abs(x2) > 1e12 * max(1.0, abs(seed)):
            break
        x0, f0 = x1, f1
        x1 = x2
        f1 = f(x1)
        if abs(f1) < best_f:
            best_x, best_f = x1, abs(f1)
    report = SolveReport(best_x, best_f, max_iter, bool(best_f < tol), "secant stalled")
    if not report.converged:
        raise NonConvergenceError("secant iteration did not converge", report=report)
    return report


def _pack(vec, is_complex):
    v = np.atleast_1d(np.asarray(vec))
    if is_complex:
        return np.concatenate([v.real, v.imag]).astype(float)
    return v.astype(float)


def _unpack(x, is_complex, n):
    if is_complex:
        return x[:n] + 1j * x[n:]
    return x.copy()


def solve_2d(f, seed, tol=DEFAULT_TOL, max_iter=100, scale=None):
    """Damped Newton for a small residual system f(x) = 0.

    ``seed`` may be a real or complex vector (complex unknowns are unpacked
    into real and imaginary parts).  The Jacobian is forward finite
    differences with a relative step of 1e-7, and each Newton step is halved
    up to 30 times until the residual norm decreases.  ``scale`` optionally
    gives the natural magnitude of each unknown so the difference step stays
    meaningful when seeding far below it (e.g. at zero).
    """
    seed = np.atleast_1d(np.asarray(seed))
    is_complex = np.iscomplexobj(seed)
    n = seed.size
    if scale is None:
        scale = np.ones(n)
    scale = np.abs(np.asarray(scale, dtype=float))
    if is_complex:
        scale = np.concatenate([scale, scale])

    def residual(xr):
        out = np.atleast_1d(np.asarray(f(_unpack(xr, is_complex, n))))
        return _pack(out, is_complex)

    x = _pack(seed, is_complex)
    fx = residual(x)
    norm = np.linalg.norm(fx)
    best_x, best_norm = x.copy(), norm
    perturbed = False
    it = 0
    while it < max_iter:
        it += 1
        if norm < tol:
            return SolveReport(_unpack(x, is_complex, n), float(norm), it - 1, True)
        jac = np.empty((fx.size, x.size))
        for j in range(x.size):
            h = 1e-7 * (scale[j] + abs(x[j]))
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (residual(xp) - fx) / h
        try:
            step = np.linalg.solve(jac, -fx)
        except np.linalg.LinAlgError:
            if perturbed:
                report = SolveReport(_unpack(best_x, is_complex, n), float(best_norm),
                                     it, False, "singular Jacobian")
                raise NonConvergenceError("singular Jacobian", report=report)
            perturbed = True
            x = x + 1e-8 * (1.0 + np.abs(x))
            fx = residual(x)
            norm = np.linalg.norm(fx)
            continue
        lam = 1.0
        improved = False
        for _ in range(30):
            x_new = x + lam * step
            f_new = residual(x_new)
            n_new = np.linalg.norm(f_new)
            if np.isfinite(n_new) and n_new < norm:
                x, fx, norm = x_new, f_new, n_new
                improved = True
                break
            lam *= 0.5
        if norm < best_norm:
            best_x, best_norm = x.copy(), norm
        if not improved:
            break
    converged = bool(best_norm < tol)
    report = SolveReport(_unpack(best_x, is_complex, n), float(best_norm), it, converged,
                         "" if converged else "newton stalled")
    if not converged:
        raise NonConvergenceError("damped Newton did not converge", report=report)
    return report


def damped_fixed_point(g, seed, damping=1.0, tol=1e-12, max_iter=500):
    """Iterate x <- (1-d) x + d g(x) until the update norm drops below tol."""
    if not (0.0 < damping <= 1.0):
        raise ValueError("damping must lie in (0, 1]")
    x = np.asarray(seed, dtype=complex) if np.iscomplexobj(np.asarray(seed)) else np.asarray(
        seed, dtype=float
    )
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    for it in range(1, max_iter + 1):
        gx = np.atleast_1d(np.asarray(g(x[0] if scalar else x)))
        x_new = (1.0 - damping) * x + damping * gx
        if not np.all(np.isfinite(np.abs(x_new))):
            report = SolveReport(x[0] if scalar else x, np.inf, it, False, "diverged")
            raise NonConvergenceError("fixed-point iteration diverged", report=report)
        delta = np.linalg.norm(x_new - x)
        x = x_new
        if delta < tol:
            root = x[0] if scalar else x
            res = np.linalg.norm(np.atleast_1d(np.asarray(g(root))) - x)
            return SolveReport(root, float(res), it, True)
    root = x[0] if scalar else x
    res = np.linalg.norm(np.atleast_1d(np.asarray(g(root))) - x)
    report = SolveReport(root, float(res), max_iter, False, "max iterations")
    raise NonConvergenceError("fixed-point iteration did not converge", report=report)
