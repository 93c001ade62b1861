"""Batch front end: JSON configs in, CSV/JSON tables out.

One command per run.  Every run writes <prefix>.csv and <prefix>.meta.json
(the fully resolved config, library versions and seed) so each table is
reproducible from its sidecar alone.  Exit codes: 0 success, 2 solver
non-convergence, 3 configuration error.
"""

import argparse
import csv
import json
import math
import os
import sys
import tempfile

import numpy as np
import scipy

from . import __version__
from .als import AlsParams, als_transient_sinr, solve_als_first, solve_als_second
from .distributions import ScalarDistribution, WindowSpec
from .errors import ConfigError, DomainError, NonConvergenceError
from .mmse import (MmseParams, alternate_mmse_sinr, mmse_sinr, solve_mmse,
                   solve_mmse_second_order)
from .montecarlo import ChannelPreset, TrialConfig, run_trials
from .relation import poor_wang_zeta, zeta_steady, zeta_transient
from .throughput import BlockConfig, optimize_training

COMMANDS = ("mmse", "als", "als-sweep", "relation", "simulate", "optimize")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return v


def _require_keys(obj, required, optional, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")


def _parse_dist(obj, where):
    _require_keys(obj, ["kind"], ["values", "weights", "mean", "samples"], where)
    kind = obj["kind"]
    try:
        if kind == "point_masses":
            return ScalarDistribution.point_masses(obj["values"], obj["weights"])
        if kind == "exponential":
            return ScalarDistribution.exponential(obj["mean"])
        if kind == "empirical":
            return ScalarDistribution.empirical(obj["samples"])
    except (KeyError, DomainError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown kind {kind!r}")


def _parse_window(obj, where):
    if obj is None:
        return WindowSpec.rectangular()
    _require_keys(obj, ["shape"], ["lbar", "dist"], where)
    shape = obj["shape"]
    try:
        if shape == "rectangular":
            return WindowSpec.rectangular()
        if shape == "exponential":
            return WindowSpec.exponential(obj["lbar"])
        if shape == "custom":
            return WindowSpec.custom(_parse_dist(obj["dist"], where + ".dist"))
    except (KeyError, DomainError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown shape {shape!r}")


def _sigma2_of(params, where):
    if "sigma2" in params and "snr_db" in params:
        raise ConfigError(f"{where}: give sigma2 or snr_db, not both")
    if "snr_db" in params:
        return 10.0 ** (-params["snr_db"] / 10.0)
    if "sigma2" in params:
        return float(params["sigma2"])
    raise ConfigError(f"{where}: needs sigma2 or snr_db")


def _parse_als_params(params, where, eta_required=True):
    required = ["alpha", "beta", "dist_p", "dist_h"]
    optional = ["eta", "sigma2", "snr_db", "mu", "window", "s_type", "b_type", "mode"]
    if eta_required:
        required.append("eta")
    _require_keys(params, required, optional, where)
    return AlsParams(
        alpha=float(params["alpha"]), beta=float(params["beta"]),
        eta=float(params.get("eta", 1.0)), sigma2=_sigma2_of(params, where),
        mu=float(params.get("mu", 0.0)),
        dist_p=_parse_dist(params["dist_p"], where + ".dist_p"),
        dist_h=_parse_dist(params["dist_h"], where + ".dist_h"),
        window=_parse_window(params.get("window"), where + ".window"),
        s_type=params.get("s_type", "iid"), b_type=params.get("b_type", "iid"),
        mode=params.get("mode", "training"))


# -- command implementations -------------------------------------------------

def _run_mmse(params, seed):
    _require_keys(params, ["alpha", "beta", "dist_p", "dist_h"],
                  ["sigma2", "snr_db", "s_type"], "params")
    p = MmseParams(float(params["alpha"]), float(params["beta"]),
                   _sigma2_of(params, "params"),
                   _parse_dist(params["dist_p"], "params.dist_p"),
                   _parse_dist(params["dist_h"], "params.dist_h"),
                   params.get("s_type", "iid"))
    sol = solve_mmse(p)
    so = solve_mmse_second_order(p, sol)
    sinr = mmse_sinr(sol, 1.0)
    header = ["alpha", "beta", "sigma2", "s_type", "g", "rho1", "tau1",
              "rho2", "rho3", "rho4", "tau2", "tau3", "sinr", "sinr_db",
              "sinr_alternate"]
    row = [p.alpha, p.beta, p.sigma2, p.s_type, sol.g.real, sol.rho1.real,
           sol.tau1.real, so.rho2.real, so.rho3.real, so.rho4.real,
           so.tau2.real, so.tau3.real, sinr, 10.0 * math.log10(sinr),
           alternate_mmse_sinr(sol, so, 1.0)]
    return header, [row], {}


def _run_als(params, seed):
    p = _parse_als_params(params, "params")
    first = solve_als_first(p)
    second = solve_als_second(p, first)
    out = als_transient_sinr(p, first, second, 1.0)
    header = ["alpha", "beta", "eta", "sigma2", "mu", "s_type", "b_type", "mode",
              "g", "rho", "tau", "psi", "omega", "nu", "r",
              "sinr", "sinr_db", "signal_power", "inp_a1_term", "inp_a2_term"]
    row = [p.alpha, p.beta, p.eta, p.sigma2, p.mu, p.s_type, p.b_type, p.mode,
           first.g.real, first.rho.real, first.tau.real, first.psi.real,
           first.omega.real, first.nu.real, first.r.real,
           out.sinr, 10.0 * math.log10(out.sinr) if out.sinr > 0 else -math.inf,
           out.signal_power, out.inp_a1_term, out.inp_a2_term]
    return header, [row], {}


def _eta_list(params, where):
    etas = params["etas"]
    if isinstance(etas, dict):
        _require_keys(etas, ["start", "stop", "count"], [], where + ".etas")
        return list(np.linspace(etas["start"], etas["stop"], int(etas["count"])))
    return [float(e) for e in etas]


def _run_als_sweep(params, seed):
    etas = _eta_list(params, "params")
    base = _parse_als_params({k: v for k, v in params.items() if k != "etas"},
                             "params", eta_required=False)
    combos = [(s, b) for s in ("iid", "isometric") for b in ("iid", "orthogonal")
              if not (s == "isometric" and base.alpha > 1.0)]
    m_cache = {}
    rows = []
    from dataclasses import replace
    for s_type, b_type in combos:
        if s_type not in m_cache:
            mp = MmseParams(base.alpha, base.beta, base.sigma2, base.dist_p,
                            base.dist_h, s_type)
            m_cache[s_type] = mmse_sinr(solve_mmse(mp), 1.0)
        for eta in etas:
            p = replace(base, eta=float(eta), s_type=s_type, b_type=b_type)
            first = solve_als_first(p)
            second = solve_als_second(p, first)
            s_tr = als_transient_sinr(replace(p, mode="training"), first, second, 1.0).sinr
            s_sb = als_transient_sinr(replace(p, mode="semi_blind"), first, second, 1.0).sinr
            rows.append([s_type, b_type, eta,
                         10.0 * math.log10(s_tr), 10.0 * math.log10(s_sb),
                         10.0 * math.log10(m_cache[s_type])])
    header = ["s_type", "b_type", "eta", "sinr_db_training", "sinr_db_semiblind",
              "sinr_db_mmse"]
    return header, rows, {}


def _run_relation(params, seed):
    _require_keys(params, ["betas"], ["lbars", "etas", "window"], "params")
    shape = params.get("window", "exponential")
    rows = []
    if shape == "exponential":
        if "lbars" not in params:
            raise ConfigError("params: exponential relation sweep needs lbars")
        etas = params.get("etas", "inf")
        for beta in params["betas"]:
            for lbar in params["lbars"]:
                w = WindowSpec.exponential(float(lbar))
                if etas == "inf":
                    ctx = zeta_steady(float(beta), w)
                    rows.append([beta, "inf", lbar, ctx.zeta, poor_wang_zeta(lbar)])
                else:
                    for eta in etas:
                        ctx = zeta_transient(float(beta), float(eta), w)
                        rows.append([beta, eta, lbar, ctx.zeta, ""])
    elif shape == "rectangular":
        if "etas" not in params or params["etas"] == "inf":
            raise ConfigError("params: rectangular relation sweep needs finite etas")
        for beta in params["betas"]:
            for eta in params["etas"]:
                ctx = zeta_transient(float(beta), float(eta), WindowSpec.rectangular())
                rows.append([beta, eta, "", ctx.zeta, ""])
    else:
        raise ConfigError(f"params.window: unknown shape {shape!r}")
    header = ["beta", "eta", "lbar", "zeta", "zeta_poor_wang"]
    return header, rows, {}


def _run_simulate(params, seed, threads=1):
    required = ["preset", "n", "trials"]
    optional = ["alpha", "beta", "eta", "sigma2", "snr_db", "mu", "window",
                "s_type", "b_type", "mode", "receiver", "seed", "modulation"]
    _require_keys(params, required, optional, "params")
    preset_obj = params["preset"]
    _require_keys(preset_obj, ["kind"], ["taps"], "params.preset")
    kind = preset_obj["kind"]
    if kind == "fir_cyclic":
        preset = ChannelPreset.fir_cyclic(preset_obj.get("taps")
                                          or ChannelPreset.proakis_c().taps)
    elif kind in ("rich_mimo", "cdma_rayleigh"):
        preset = ChannelPreset(kind=kind)
    else:
        raise ConfigError(f"params.preset: unknown kind {kind!r}")
    cfg = TrialConfig(
        preset=preset, n=int(params["n"]), alpha=float(params.get("alpha", 1.0)),
        beta=float(params.get("beta", 1.0)), eta=float(params.get("eta", 1.0)),
        sigma2=_sigma2_of(params, "params"), mu=float(params.get("mu", 0.0)),
        window=_parse_window(params.get("window"), "params.window"),
        s_type=params.get("s_type", "iid"), b_type=params.get("b_type", "iid"),
        mode=params.get("mode", "training"), receiver=params.get("receiver", "mmse"),
        trials=int(params["trials"]),
        seed=int(seed if seed is not None else params.get("seed", 0)),
        modulation=params.get("modulation", "qpsk"))
    report = run_trials(cfg, threads=threads)
    rows = []
    asym_db = report.asymptotic_sinr_db
    for t in range(report.per_stream.shape[0]):
        for k in range(report.per_stream.shape[1]):
            emp = report.per_stream[t, k]
            rows.append([t, k, 10.0 * math.log10(emp), asym_db])
    header = ["trial", "stream", "sinr_db_empirical", "sinr_db_asymptotic"]
    summary = {"mean_sinr": report.mean_sinr, "stderr": report.stderr,
               "mean_sinr_db": report.mean_sinr_db,
               "asymptotic_sinr": report.asymptotic_sinr,
               "seed": report.seed, "trials": report.trials}
    return header, rows, {"summary": summary}


def _run_optimize(params, seed):
    _require_keys(params, ["als_params", "ell", "ebn0_db"],
                  ["convention", "grid_points"], "params")
    base = _parse_als_params(dict(params["als_params"], sigma2=1.0),
                             "params.als_params", eta_required=False)
    cfg = BlockConfig(als_params=base, ell=float(params["ell"]),
                      ebn0_db=float(params["ebn0_db"]),
                      convention=params.get("convention", "per_chip"))
    res = optimize_training(cfg, grid_points=int(params.get("grid_points", 64)))
    rows = [[eta, c] for eta, c in res.curve]
    header = ["eta", "capacity"]
    return header, rows, {"optimum": {"eta_star": res.eta_star, "c_star": res.c_star}}


# -- output handling ---------------------------------------------------------

def _atomic_write(path, payload):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_outputs(prefix, header, rows, extra, config, seed, fmt):
    meta = {"config": config, "seed": seed,
            "versions": {"lsrx": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__}}
    meta.update(extra)
    if fmt == "csv":
        import io
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        _atomic_write(prefix + ".csv", buf.getvalue())
        produced = [prefix + ".csv"]
    else:
        payload = [dict(zip(header, row)) for row in rows]
        _atomic_write(prefix + ".json", json.dumps(payload, indent=2) + "\n")
        produced = [prefix + ".json"]
    _atomic_write(prefix + ".meta.json", json.dumps(meta, indent=2, default=str) + "\n")
    return produced + [prefix + ".meta.json"]


def run(config_path, out=None, fmt=None, seed=None, threads=1):
    """Execute one config file; returns the list of files written."""
    try:
        with open(config_path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _require_keys(config, ["command", "params"], ["output", "format"], "config")
    command = config["command"]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    prefix = out or config.get("output")
    if not prefix:
        raise ConfigError("no output prefix (config 'output' or --out)")
    fmt = fmt or config.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")

    params = config["params"]
    if command == "mmse":
        header, rows, extra = _run_mmse(params, seed)
    elif command == "als":
        header, rows, extra = _run_als(params, seed)
    elif command == "als-sweep":
        header, rows, extra = _run_als_sweep(params, seed)
    elif command == "relation":
        header, rows, extra = _run_relation(params, seed)
    elif command == "simulate":
        header, rows, extra = _run_simulate(params, seed, threads=threads)
    else:
        header, rows, extra = _run_optimize(params, seed)
    resolved = dict(config, output=prefix, format=fmt)
    return _write_outputs(prefix, header, rows, extra, resolved, seed, fmt)


# -- verification suites -----------------------------------------------------

def _verify_identities():
    from .verify import identity_suite
    return identity_suite()


def _verify_oracles():
    from .verify import oracle_suite
    return oracle_suite()


def main(argv=None):
    parser = argparse.ArgumentParser(prog="lsrx", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="execute a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="output path prefix")
    p_run.add_argument("--format", choices=("csv", "json"), default=None)
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--threads", type=int, default=1)

    p_ver = sub.add_parser("verify", help="run built-in verification suites")
    p_ver.add_argument("suite", choices=("identities", "oracles", "all"),
                       nargs="?", default="all")

    args = parser.parse_args(argv)

    if args.cmd == "run":
        try:
            files = run(args.config, out=args.out, fmt=args.format,
                        seed=args.seed, threads=args.threads)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 3
        except NonConvergenceError as exc:
            print(f"solver error: {exc}", file=sys.stderr)
            return 2
        except DomainError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 3
        for f in files:
            print(f)
        return 0

    ok = True
    if args.suite in ("identities", "all"):
        ok &= _verify_identities()
    if args.suite in ("oracles", "all"):
        ok &= _verify_oracles()
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
