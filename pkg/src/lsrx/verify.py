"""Built-in verification suites behind `lsrx verify`.

Each check prints one line with the worst residual observed and PASS/FAIL.
The identity suite exercises the analytic identities every solution must
satisfy; the oracle suite compares asymptotic predictions against
finite-system eigenvalue and SINR measurements at moderate size.
"""

import numpy as np

from .als import (AlsParams, als_residuals, als_stieltjes, als_transient_sinr,
                  solve_als_first, solve_als_second)
from .distributions import (ScalarDistribution, WindowSpec, ratio_moment_1,
                            ratio_moment_2, window_distribution,
                            window_moments_closed_form)
from .mmse import MmseParams, mmse_sinr, mmse_stieltjes, solve_mmse, solve_mmse_second_order
from .montecarlo import (ChannelPreset, TrialConfig, build_system,
                         empirical_stieltjes, run_trials, trial_streams)
from .relation import als_from_mmse, zeta_transient

_FLAT = ScalarDistribution.point_masses([1.0], [1.0])
_EXP = ScalarDistribution.exponential(1.0)


def _report(name, worst, tol):
    ok = worst < tol
    print(f"  {name:55s} worst={worst:10.3e} tol={tol:g} "
          f"{'PASS' if ok else 'FAIL'}")
    return ok


def identity_suite():
    print("identity suite")
    ok = True

    worst = 0.0
    for dist in (_FLAT, _EXP, ScalarDistribution.empirical([0.2, 1.0, 2.5])):
        for m in range(3):
            for x in (0.2, 1.0, 3.0):
                a = dist.moment(m) - (ratio_moment_1(dist, m, x)
                                      + x * ratio_moment_1(dist, m + 1, x))
                b = ratio_moment_1(dist, m, x) - (
                    ratio_moment_2(dist, m, x) + x * ratio_moment_2(dist, m + 1, x))
                worst = max(worst, abs(a), abs(b))
    ok &= _report("ratio-moment identities (all kinds)", worst, 1e-10)

    worst = 0.0
    for lbar in (0.5, 2.0):
        spec = WindowSpec.exponential(lbar)
        for eta in (1.0, 4.0):
            wd = window_distribution(spec, eta)
            for r in (0.1, 1.5):
                wm = window_moments_closed_form(spec, eta, r)
                worst = max(
                    worst,
                    abs(wm.w01 - ratio_moment_1(wd, 0, r)),
                    abs(wm.w11 - ratio_moment_1(wd, 1, r)),
                    abs(wm.w12 - ratio_moment_2(wd, 1, r)),
                    abs(wm.w22 - ratio_moment_2(wd, 2, r)))
    ok &= _report("window closed forms vs quadrature", worst, 1e-10)

    worst = 0.0
    for s_type in ("iid", "isometric"):
        for dist_h in (_FLAT, _EXP):
            p = MmseParams(0.6, 1.0, 0.15, _FLAT, dist_h, s_type)
            sol = solve_mmse(p)
            so = solve_mmse_second_order(p, sol)
            lhs = p.beta * (1.0 + sol.z * sol.g)
            e01 = ratio_moment_1(p.dist_p, 0, sol.rho1)
            e11 = ratio_moment_1(p.dist_p, 1, sol.rho1)
            x = (sol.tau1 - p.alpha * p.e_p) / sol.z
            h01 = ratio_moment_1(p.dist_h, 0, x)
            h11 = ratio_moment_1(p.dist_h, 1, x)
            chain = [p.alpha * (1.0 - e01), p.alpha * sol.rho1 * e11,
                     p.beta_star * (1.0 - h01),
                     p.beta_star * (sol.tau1 - p.alpha * p.e_p) * h11 / sol.z]
            worst = max(worst, max(abs(lhs - c) for c in chain))
            worst = max(worst, abs(so.rho4 + p.sigma2 * so.rho2 - np.conj(sol.rho1)))
    ok &= _report("MMSE trace-identity chain + power split", worst, 1e-8)

    worst = 0.0
    for s_type, b_type in (("iid", "iid"), ("isometric", "orthogonal")):
        p = AlsParams(alpha=0.5, beta=1.0, eta=2.5, sigma2=0.1, mu=0.05,
                      dist_p=_FLAT, dist_h=_EXP, window=WindowSpec.exponential(2.0),
                      s_type=s_type, b_type=b_type)
        first = solve_als_first(p)
        worst = max(worst, float(np.max(np.abs(als_residuals(p, first)))))
    ok &= _report("ALS seven-equation residuals", worst, 1e-9)

    worst = 0.0
    p = AlsParams(alpha=0.5, beta=1.0, eta=3.0, sigma2=0.1, mu=0.0,
                  dist_p=_FLAT, dist_h=_EXP, window=WindowSpec.rectangular())
    first = solve_als_first(p)
    second = solve_als_second(p, first)
    wm = window_moments_closed_form(p.window, p.eta, float(np.real(first.r)))
    worst = max(
        abs(second.rho4 + p.sigma2 * second.rho2 - float(np.real(first.rho)) / wm.w12),
        abs(second.psi4 + p.sigma2 * second.psi2 - (wm.w11 / wm.w12 - 1.0)))
    ok &= _report("ALS interference-power identities (no loading)", worst, 1e-8)

    worst = 0.0
    m = MmseParams(0.5, 1.0, 0.1, _FLAT, _EXP, "iid")
    s_mmse = mmse_sinr(solve_mmse(m), 1.0)
    out = als_transient_sinr(p, first, second, 1.0)
    ctx = zeta_transient(1.0, 3.0, WindowSpec.rectangular())
    worst = abs(out.sinr - als_from_mmse(s_mmse, ctx, "training")) / out.sinr
    ok &= _report("pipeline SINR vs zeta conversion (relative)", worst, 1e-6)
    return bool(ok)


def oracle_suite():
    print("oracle suite")
    ok = True
    z = -0.1 + 0.05j
    cfg = TrialConfig(preset=ChannelPreset.cdma_rayleigh(), n=256, alpha=0.5,
                      beta=1.0, eta=2.0, sigma2=0.1, seed=5, trials=1)
    vals = []
    for t in range(4):
        sys = build_system(cfg, trial_streams(cfg.seed, t))
        hsa = sys.h @ sys.s * sys.a
        vals.append(empirical_stieltjes(hsa @ hsa.conj().T, z))
    g_emp = np.mean(vals)
    g_th = mmse_stieltjes(MmseParams(0.5, 1.0, 0.1, _FLAT, _EXP, "iid"), z)
    ok &= _report("covariance spectrum vs eigen-oracle (relative)",
                  abs(g_emp - g_th) / abs(g_th), 0.03)

    vals = []
    for t in range(4):
        streams = trial_streams(cfg.seed, t)
        sys = build_system(cfg, streams)
        rng = streams.role("noise")
        noise = (rng.standard_normal((sys.m, sys.i))
                 + 1j * rng.standard_normal((sys.m, sys.i))) * np.sqrt(sys.sigma2 / 2)
        sr = (sys.h @ sys.s * sys.a) @ sys.b.conj().T + noise
        vals.append(empirical_stieltjes((sr * sys.weights) @ sr.conj().T / sys.i, z))
    ap = AlsParams(alpha=0.5, beta=1.0, eta=2.0, sigma2=0.1, mu=0.0,
                   dist_p=_FLAT, dist_h=_EXP, window=WindowSpec.rectangular())
    g_th = als_stieltjes(ap, z)
    ok &= _report("sample-covariance spectrum vs eigen-oracle (relative)",
                  abs(np.mean(vals) - g_th) / abs(g_th), 0.03)

    rep = run_trials(TrialConfig(preset=ChannelPreset.rich_mimo(), n=64, alpha=0.5,
                                 beta=1.0, eta=2.0, sigma2=0.1, mu=0.1,
                                 receiver="als", trials=40, seed=9))
    ok &= _report("adaptive receiver SINR vs Monte Carlo (dB)",
                  abs(rep.mean_sinr_db - rep.asymptotic_sinr_db), 0.5)
    return bool(ok)
