"""Command-line runner: ``postcon <command> [options]``.

Exit codes: 0 pass, 1 contract violation, 2 config error, 3 inconclusive.
Experiment commands require ``--seed``. Outputs go to ``--out``, else
``$POSTCON_OUTPUT_DIR``, else ``./postcon_out``.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

import numpy as np

from postcon import rates
from postcon.consistency import (
    ContractionConfig,
    fit_rate,
    inconsistency_ratio,
    monotone_in_n,
    pushforward_reduction_check,
    run_contraction,
    stability_sweep,
)
from postcon.errors import InfeasibleRateError, PreconditionError
from postcon.forward import GridFunction, solve_elliptic_1d
from postcon.norms import GridNorm, HilbertNorm
from postcon.priors import (
    GaussianPrior,
    UniformPrior,
    small_ball_curve,
    uniform_small_ball_lower,
)
from postcon.records import output_dir, write_csv
from postcon.spectral import ScaleSpec
from postcon.svg import line_plot

EXIT_PASS, EXIT_VIOLATION, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3

PRESETS = {
    "conjugate-t3": {"kind": "conjugate", "t": 3.0, "r": 1.0},
    "conjugate-t2.5": {"kind": "conjugate", "t": 2.5, "r": 1.0},
    "conjugate-t4": {"kind": "conjugate", "t": 4.0, "r": 1.0},
    "large-data": {"kind": "large_data", "n_grid": (10, 40, 160, 640), "eps": 0.1, "sigma": 0.1},
    "elliptic": {"kind": "elliptic", "n_grid": (10, 40, 160, 640), "eps": 0.1, "sigma": 0.002},
}


class ConfigError(ValueError):
    pass


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    vals = [float(v) for v in str(text).replace(",", " ").split()]
    if not vals:
        raise ConfigError("empty list")
    return vals


def _ints(text):
    return [int(round(v)) for v in _floats(text)]


def _read_config(path, section):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    cp.read(path)
    out = {}
    for name in ("experiment", section):
        if cp.has_section(name):
            out.update({k.replace("-", "_"): v for k, v in cp.items(name)})
    return out


def _merge(file_values, args, keys):
    """Config-file values overridden by any flag that was given."""
    merged = dict(file_values)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _seeds(args):
    return list(range(args.seed, args.seed + args.replicates))


def _print(msg=""):
    print(msg, flush=True)


# -- rates ------------------------------------------------------------------------------


def _print_certificate(cert):
    _print(f"kappa = {cert.kappa:.6f}   ({cert.problem}, form={cert.form})")
    s = "-" if cert.s is None else f"{cert.s:.6f}"
    _print(f"witness: p = {cert.p:.6f}  q = {cert.q:.6f}  eta = {cert.eta:.6f}  "
           f"theta = {cert.theta:.6f}  s = {s}  lam = {cert.lam:.6f}")
    _print("slacks:  " + "  ".join(f"({i + 1}) {v:.3e}" for i, v in enumerate(cert.slacks)))
    _print(f"replay:  {'ok' if cert.replay() else 'FAILED'}")


def cmd_rates(args):
    which = args.which
    out = output_dir(args.out)
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    rows = []
    if which == "gaussian":
        cert = rates.rate_gaussian_case(args.t, args.r, form=args.form)
        opt = rates.rate_opt_closed(args.t, args.r)
        _print_certificate(cert)
        _print(f"kappa_cor = {cert.kappa:.4f}   kappa_opt = {opt:.4f}   "
               f"kappa_smallball = {rates.kappa_small_ball(args.t, args.r):.4f}")
        rows.append(("kappa_cor", cert.kappa))
        rows.append(("kappa_opt", opt))
        ok = cert.replay()
    elif which == "general":
        cert = rates.rate_general_optimize(args.rho, args.e, lam=args.lam, s=args.s,
                                           sigma0=args.sigma0, form=args.form)
        _print_certificate(cert)
        rows.append(("kappa", cert.kappa))
        ok = cert.replay()
    elif which == "no-tail":
        k = rates.rate_no_tail(args.s, args.sigma0, args.rho)
        _print(f"kappa < {k:.6f}")
        rows.append(("kappa", k))
        ok = True
    elif which == "condition":
        c = rates.consistency_condition(args.lam, args.e)
        _print(f"consistency condition: {'holds' if c else 'fails'}")
        rows.append(("condition", int(c)))
        ok = True
    elif which == "opt":
        k = rates.rate_opt_closed(args.t, args.r)
        _print(f"kappa_opt = {k:.6f}")
        rows.append(("kappa_opt", k))
        ok = True
    elif which == "large-data":
        stated, proof = rates.rate_large_data(args.beta, args.rho)
        _print(f"stated bound = {stated:.6f}   proof bound = {proof:.6f}")
        rows += [("stated", stated), ("proof", proof)]
        ok = True
    elif which == "elliptic":
        k = rates.rate_elliptic(args.alpha, args.d, args.r, args.rho)
        _print(f"kappa < {k:.6f}")
        rows.append(("kappa", k))
        ok = True
    else:  # uniform
        k = rates.rate_uniform_prior(args.alpha, args.nu, args.d, args.r)
        _print(f"kappa < {k:.6f}")
        rows.append(("kappa", k))
        ok = True
    path = write_csv(os.path.join(out, f"rates_{which}.csv"), ("quantity", "value"), rows, cfg)
    _print(f"wrote {path}")
    return EXIT_PASS if ok else EXIT_VIOLATION


# -- figure ------------------------------------------------------------------------------


def cmd_figure1(args):
    grid = _floats(args.t_grid)
    for t in grid:
        if not t > args.r + 1:
            raise PreconditionError("t > r + 1", f"t = {t} is not above r + 1 = {args.r + 1}")
    table = rates.figure1_table(args.r, grid, form=args.form)
    out = output_dir(args.out)
    cfg = {"r": args.r, "t_grid": grid, "form": args.form}
    csv_path = write_csv(os.path.join(out, "figure1.csv"), ("t", "kappa_cor", "kappa_opt", "kappa_smallball"),
                         [(r.t, r.kappa_cor, r.kappa_opt, r.kappa_smallball) for r in table], cfg)
    _print(f"{'t':>8} {'kappa_cor':>10} {'kappa_opt':>10} {'kappa_sb':>10}")
    for r in table:
        _print(f"{r.t:8.3f} {r.kappa_cor:10.5f} {r.kappa_opt:10.5f} {r.kappa_smallball:10.5f}")
    ts = [r.t for r in table]
    line_plot(os.path.join(out, "figure1.svg"), [
        {"x": ts, "y": [r.kappa_cor for r in table], "label": "kappa_cor (optimized)", "markers": True},
        {"x": ts, "y": [r.kappa_smallball for r in table], "label": "kappa_smallball", "dashed": True},
        {"x": ts, "y": [r.kappa_opt for r in table], "label": "kappa_opt"},
    ], title=f"Contraction rates, r = {args.r:g}", xlabel="t", ylabel="kappa")
    _print(f"wrote {csv_path}")
    bad = [r for r in table if not r.ordered]
    for r in bad:
        _print(f"ordering violated at t = {r.t}: {r.kappa_cor} <= {r.kappa_smallball} + 1e-3 <= {r.kappa_opt}")
    return EXIT_VIOLATION if bad else EXIT_PASS


# -- contraction experiments --------------------------------------------------------------


_CFG_FIELDS = {f.name for f in fields(ContractionConfig)}


def _contraction_config(args, default_preset):
    values = {}
    preset = args.preset or default_preset
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    values.update(PRESETS[preset])
    values.update(_merge(_read_config(args.config, args.command), args,
                         ("n_grid", "eps", "level", "n_samples", "t", "r", "sigma", "trunc", "kind", "m")))
    unknown = set(values) - _CFG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    conv = {"n_grid": _ints, "seeds": _ints}
    for k, v in list(values.items()):
        if k in conv:
            values[k] = tuple(conv[k](v))
        elif k in ("kind", "method"):
            values[k] = str(v)
        elif k in ("trunc", "n_samples", "n_modes", "m"):
            values[k] = int(v)
        else:
            values[k] = float(v)
    values["seeds"] = tuple(_seeds(args))
    return ContractionConfig(**values)


def _run_rows(cfg, workers):
    if workers <= 1 or len(cfg.seeds) == 1:
        return run_contraction(cfg)
    chunks = [cfg.seeds[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run_contraction, [cfg] * len(chunks), chunks))
    rows = sorted((row for p in parts for row in p.rows), key=lambda row: (row.seed, row.n))
    return type(parts[0])(tuple(rows), cfg)


_ROW_COLUMNS = ("n", "seed", "eps", "mass", "stderr", "ess", "method", "radius", "radius_mass", "flag")


def _write_curve(out, stem, curve, fit, seeds):
    cfg = curve.config.to_table()
    write_csv(os.path.join(out, f"{stem}.csv"), _ROW_COLUMNS,
              [tuple(getattr(r, c) for c in _ROW_COLUMNS) for r in curve.rows], cfg, seeds)
    if fit is not None:
        write_csv(os.path.join(out, f"{stem}_fit.csv"), ("kappa_hat", "intercept", "residual", "n_min", "n_max"),
                  [(fit.kappa_hat, fit.intercept, fit.residual, *fit.n_range)], cfg, seeds)
        ns = sorted({r.n for r in curve.rows})
        med = [float(np.median([r.radius for r in curve.rows if r.n == n])) for n in ns]
        line = [math.exp(fit.intercept) * n ** (-fit.kappa_hat) for n in ns]
        if min(med) > 0:
            line_plot(os.path.join(out, f"{stem}.svg"), [
                {"x": ns, "y": med, "label": "median radius", "markers": True},
                {"x": ns, "y": line, "label": f"fit kappa = {fit.kappa_hat:.3f}", "dashed": True},
            ], title=f"{curve.config.kind}: posterior radius at level {curve.config.level:g}",
                xlabel="n", ylabel="radius", logx=True, logy=True)


def _summary(status, msg):
    label = {EXIT_PASS: "PASS", EXIT_VIOLATION: "FAIL", EXIT_INCONCLUSIVE: "INCONCLUSIVE"}[status]
    _print(f"summary: {label}: {msg}")
    return status


def cmd_contract(args):
    cfg = _contraction_config(args, "conjugate-t3")
    out = output_dir(args.out)
    curve = _run_rows(cfg, args.workers)
    fit = fit_rate(curve) if len(cfg.n_grid) >= 4 else None
    _write_curve(out, "contract", curve, fit, cfg.seeds)
    mono = sum(monotone_in_n(curve.for_seed(s)) for s in cfg.seeds) / len(cfg.seeds)
    msg = f"monotone fraction = {mono:.3f}"
    ok = mono >= 0.95
    if fit is not None:
        msg += f", kappa_hat = {fit.kappa_hat:.4f}"
        if cfg.kind == "conjugate" and cfg.t > cfg.r + 1:
            lo = rates.kappa_small_ball(cfg.t, cfg.r) - 0.1
            hi = rates.rate_opt_closed(cfg.t, cfg.r) + 0.1
            msg += f" (sandwich [{lo:.4f}, {hi:.4f}])"
            ok = ok and lo <= fit.kappa_hat <= hi
    if curve.flagged:
        return _summary(EXIT_INCONCLUSIVE, msg + f", {len(curve.flagged)} flagged rows")
    return _summary(EXIT_PASS if ok else EXIT_VIOLATION, msg)


def cmd_elliptic(args):
    cfg = _contraction_config(args, "elliptic")
    if cfg.kind != "elliptic":
        raise ConfigError("elliptic command needs kind = elliptic")
    out = output_dir(args.out)
    curve = _run_rows(cfg, args.workers)
    fit = fit_rate(curve) if len(cfg.n_grid) >= 4 else None
    _write_curve(out, "elliptic", curve, fit, cfg.seeds)
    prior = cfg.uniform_prior()
    f = np.ones(prior.m + 1)
    sweep = stability_sweep(prior, f, 2000, np.random.default_rng([args.seed, 7]))
    red_rows, red_ok, red_flag = [], True, False
    for seed in cfg.seeds:
        rng = np.random.default_rng([seed, 8])
        z = prior.sample_states(rng, 1)[0]
        p = solve_elliptic_1d(GridFunction(prior.fields(z[None])[0]), GridFunction(f))
        n = args.reduction_n
        x = np.arange(1, n + 1) / (n + 1.0)
        y = p(x) + args.reduction_sigma * rng.standard_normal(n)
        res = pushforward_reduction_check(prior, z, (x, y), args.reduction_eps, f, sweep.M_hat,
                                          args.reduction_sigma, cfg.n_samples, rng)
        red_rows.append((seed, res.eps, res.M_hat, res.lhs, res.lhs_se, res.rhs, res.rhs_se, res.slack, res.ess))
        red_ok &= res.holds
        red_flag |= res.ess < 50
    write_csv(os.path.join(out, "elliptic_reduction.csv"),
              ("seed", "eps", "M_hat", "lhs", "lhs_se", "rhs", "rhs_se", "slack", "ess"),
              red_rows, cfg.to_table(), cfg.seeds)
    mono = sum(monotone_in_n(curve.for_seed(s)) for s in cfg.seeds) / len(cfg.seeds)
    msg = f"monotone fraction = {mono:.3f}, reduction {'holds' if red_ok else 'violated'}, M_hat = {sweep.M_hat:.4f}"
    if curve.flagged or red_flag:
        return _summary(EXIT_INCONCLUSIVE, msg + ", unreliable estimates present")
    return _summary(EXIT_PASS if mono >= 0.95 and red_ok else EXIT_VIOLATION, msg)


def cmd_inconsistency(args):
    values = _merge(_read_config(args.config, "inconsistency"), args, ("n_grid", "theta", "k_max"))
    if "n_grid" not in values:
        raise ConfigError("n grid required")
    n_grid = _ints(values["n_grid"])
    theta = float(values.get("theta", 0.5))
    k_max = values.get("k_max")
    k_max = None if k_max is None else int(k_max)
    zero = bool(args.zero_noise)
    seeds = [args.seed] if zero else _seeds(args)
    out = output_dir(args.out)
    rows, ok = [], True
    by_n = {}
    for n in n_grid:
        bound = -0.5 * math.sqrt(n)
        for seed in seeds:
            res = inconsistency_ratio(n, theta, k_max=k_max, zero_noise=zero,
                                      rng=None if zero else np.random.default_rng([seed, n]))
            rows.append((n, seed, theta, res.log_ratio, bound, int(res.log_ratio <= bound), res.k_max,
                         res.log_tail_bound))
            by_n.setdefault(n, []).append(res.log_ratio)
    cfg = {"n_grid": n_grid, "theta": theta, "k_max": k_max, "zero_noise": zero}
    write_csv(os.path.join(out, "inconsistency.csv"),
              ("n", "seed", "theta", "log_ratio", "bound", "below_bound", "k_max", "log_tail_bound"),
              rows, cfg, seeds)
    line_plot(os.path.join(out, "inconsistency.svg"), [
        {"x": n_grid, "y": [float(np.median(by_n[n])) for n in n_grid],
         "label": "log-ratio" if zero else "median log-ratio", "markers": True},
        {"x": n_grid, "y": [-0.5 * math.sqrt(n) for n in n_grid], "label": "-sqrt(n)/2", "dashed": True},
    ], title="Inconsistency example", xlabel="n", ylabel="log odds", logx=True)
    if zero:
        vals = [by_n[n][0] for n in n_grid]
        below = all(v <= -0.5 * math.sqrt(n) for v, n in zip(vals, n_grid) if n >= 100)
        decreasing = all(b < a for a, b in zip(vals, vals[1:]))
        ok = below and decreasing
        for n, v in zip(n_grid, vals):
            _print(f"n = {n:6d}  log-ratio = {v:.4f}  bound = {-0.5 * math.sqrt(n):.4f}")
        msg = f"bound {'holds' if below else 'violated'}, {'strictly decreasing' if decreasing else 'not decreasing'}"
    else:
        fracs = {n: float(np.mean([v <= -0.5 * math.sqrt(n) for v in by_n[n]])) for n in n_grid}
        for n, fr in fracs.items():
            _print(f"n = {n:6d}  fraction below bound = {fr:.3f}")
        ok = all(fr >= 0.95 for n, fr in fracs.items() if n >= 100)
        msg = "bound holds in >= 95% of seeds" if ok else "bound fails in more than 5% of seeds"
    return _summary(EXIT_PASS if ok else EXIT_VIOLATION, msg)


def cmd_smallball(args):
    values = _merge(_read_config(args.config, "smallball"), args,
                    ("kind", "gamma_decay", "n_modes", "beta", "m", "eps_grid", "n_samples", "nu", "t", "r",
                     "norm_index", "trunc"))
    kind = str(values.get("kind", "uniform"))
    eps_grid = _floats(values.get("eps_grid", "0.5,0.3,0.2,0.1"))
    n_samples = int(values.get("n_samples", 10**6))
    rng = np.random.default_rng([args.seed, 11])
    if kind == "uniform":
        prior = UniformPrior.power_law(float(values.get("gamma_decay", 2.0)), int(values.get("n_modes", 16)),
                                       mean=float(values.get("mean", 2.0)), beta=float(values.get("beta", 1.0)),
                                       m=int(values.get("m", 128)))
        norm = GridNorm("holder", h=1.0 / prior.m, alpha=prior.beta)
        center = prior.mean_values
        nu = float(values.get("nu", 0.9))
        bounds = [uniform_small_ball_lower(prior, nu, e) for e in eps_grid]
    elif kind == "gaussian":
        t, trunc = float(values.get("t", 2.0)), int(values.get("trunc", 64))
        prior = GaussianPrior(t, trunc)
        norm = HilbertNorm(float(values.get("norm_index", 0.0)), ScaleSpec(r=float(values.get("r", 1.0)), trunc=trunc))
        center = np.zeros(trunc)
        bounds = [math.nan] * len(eps_grid)
    else:
        raise ConfigError(f"unknown prior kind {kind!r}")
    est = small_ball_curve(prior, center, eps_grid, norm, n_samples, rng)
    out = output_dir(args.out)
    cfg = {k: v for k, v in values.items()}
    cfg.update({"kind": kind, "eps_grid": eps_grid, "n_samples": n_samples})
    write_csv(os.path.join(out, "smallball.csv"),
              ("eps", "estimate", "stderr", "analytic_bound", "n_samples", "seed"),
              [(e.eps, e.estimate, e.stderr, b, e.n_samples, args.seed) for e, b in zip(est, bounds)],
              cfg, [args.seed])
    ok, flagged = True, False
    for e, b in zip(est, bounds):
        upper = math.log(e.estimate + 3 * e.stderr)
        _print(f"eps = {e.eps:<6g} estimate = {e.estimate:.6g} +- {e.stderr:.2g}  analytic = {b:.4g}"
               + (f"  [{e.flag}]" if e.flag else ""))
        flagged |= bool(e.flag)
        if not math.isnan(b):
            ok &= b <= upper
    pos = [(e.eps, e.estimate) for e in est if e.estimate > 0]
    if len(pos) > 1:
        line_plot(os.path.join(out, "smallball.svg"),
                  [{"x": [p[0] for p in pos], "y": [p[1] for p in pos], "label": "MC estimate", "markers": True}],
                  title="Small-ball probability", xlabel="eps", ylabel="probability", logx=True, logy=True)
    if flagged:
        return _summary(EXIT_INCONCLUSIVE, "zero-hit estimates present")
    return _summary(EXIT_PASS if ok else EXIT_VIOLATION,
                    "analytic bound below MC + 3 SE" if ok else "analytic bound exceeds MC + 3 SE")


# -- parser ------------------------------------------------------------------------------------


def _experiment_flags(p, replicates=1):
    p.add_argument("--seed", type=int, required=True, help="base seed (mandatory)")
    p.add_argument("--replicates", type=int, default=replicates, help="number of consecutive seeds")
    p.add_argument("--config", help="INI file; flags override its values")
    p.add_argument("--out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="postcon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("rates", help="theoretical contraction rates")
    rsub = pr.add_subparsers(dest="which", required=True)

    def rp(name, *req, opt=()):
        p = rsub.add_parser(name)
        for flag in req:
            p.add_argument(f"--{flag}", type=float, required=True)
        for flag in opt:
            p.add_argument(f"--{flag}", type=float)
        p.add_argument("--form", choices=rates.FORMS, default="theorem")
        p.add_argument("--out")
        p.set_defaults(func=cmd_rates)
        return p

    rp("gaussian", "t", "r")
    rp("general", "rho", "e", opt=("lam", "s", "sigma0"))
    rp("no-tail", "s", "sigma0", "rho")
    rp("condition", "lam", "e")
    rp("opt", "t", "r")
    rp("large-data", "beta", "rho")
    rp("elliptic", "alpha", "d", "r", "rho")
    rp("uniform", "alpha", "nu", "d", "r")

    pf = sub.add_parser("figure1", help="rate table and plot for the Gaussian regression model")
    pf.add_argument("--r", type=float, default=1.0)
    pf.add_argument("--t-grid", default="2.2,2.5,3,4,6")
    pf.add_argument("--form", choices=rates.FORMS, default="theorem")
    pf.add_argument("--out")
    pf.set_defaults(func=cmd_figure1)

    for name, func, reps in (("contract", cmd_contract, 10), ("elliptic", cmd_elliptic, 2)):
        p = sub.add_parser(name, help=f"{name} contraction experiment")
        _experiment_flags(p, reps)
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--kind")
        p.add_argument("--n-grid")
        p.add_argument("--eps", type=float)
        p.add_argument("--level", type=float)
        p.add_argument("--n-samples", type=int)
        p.add_argument("--t", type=float)
        p.add_argument("--r", type=float)
        p.add_argument("--sigma", type=float)
        p.add_argument("--trunc", type=int)
        p.add_argument("--mesh", dest="m", type=int, help="grid intervals for field and pressure")
        p.add_argument("--workers", type=int, default=1)
        if name == "elliptic":
            p.add_argument("--reduction-n", type=int, default=200, help="observations for the reduction check")
            p.add_argument("--reduction-sigma", type=float, default=0.01)
            p.add_argument("--reduction-eps", type=float, default=0.05)
        p.set_defaults(func=func)

    pi = sub.add_parser("inconsistency", help="posterior odds in the atomic two-component example")
    _experiment_flags(pi, 100)
    pi.add_argument("--n-grid")
    pi.add_argument("--theta", type=float)
    pi.add_argument("--k-max", type=int)
    pi.add_argument("--zero-noise", action="store_true")
    pi.set_defaults(func=cmd_inconsistency)

    ps = sub.add_parser("smallball", help="small-ball probabilities: MC against the analytic bound")
    _experiment_flags(ps)
    ps.add_argument("--kind", choices=("uniform", "gaussian"))
    ps.add_argument("--gamma-decay", type=float)
    ps.add_argument("--n-modes", type=int)
    ps.add_argument("--beta", type=float)
    ps.add_argument("--m", type=int)
    ps.add_argument("--eps-grid")
    ps.add_argument("--n-samples", type=int)
    ps.add_argument("--nu", type=float)
    ps.add_argument("--t", type=float)
    ps.add_argument("--r", type=float)
    ps.add_argument("--norm-index", type=float)
    ps.add_argument("--trunc", type=int)
    ps.set_defaults(func=cmd_smallball)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PreconditionError, ValueError) as exc:
        cond = getattr(exc, "condition", None)
        print(f"postcon: error: {exc}" + (f" [condition: {cond}]" if cond else ""), file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleRateError as exc:
        print(f"postcon: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
