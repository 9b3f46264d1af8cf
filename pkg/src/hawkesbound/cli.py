"""Command-line front end.

Subcommands ``analyze``, ``simulate``, ``verify`` and ``gw`` all read one
JSON config (see :mod:`hawkesbound.config`); flags override its fields.

Exit codes: 0 success, 2 analysis or input error (including a spectral
radius that is too large), 3 a simulation cap was hit, 4 at least one
verification verdict is FAIL.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from hawkesbound import config as cfgmod
from hawkesbound.clustersim import choose_burn_in, simulate_window
from hawkesbound.errors import (
    Diverged,
    HawkesBoundError,
    NodeCapExceeded,
    NonConvergence,
    RateCapExceeded,
)
from hawkesbound.gwtree import gw_mgf_bound, gw_mgf_limit, gw_mgf_recursion, sample_gw_sizes, univariate_optimal_xi
from hawkesbound.model import cluster_mean_sizes
from hawkesbound.spectral import bound_constants, ge_certificate, operator_norm_inf, optimize_xi, spectral_radius
from hawkesbound.thinning import simulate_thinning
from hawkesbound.verify import FAIL, f_fold_norm, run_verification

EXIT_OK, EXIT_ANALYSIS, EXIT_CAP, EXIT_FAIL = 0, 2, 3, 4


def _certificate(h, cfg):
    """Constants for the configured certificate policy."""
    policy = cfg["certificate"]
    n_cap = policy.get("n_cap", 2000)
    if policy["policy"] == "fixed":
        return bound_constants(ge_certificate(h, policy["r"], n_cap=n_cap))
    return optimize_xi(h, n_cap=n_cap)


def _out_path(cfg, name):
    os.makedirs(cfg["out"], exist_ok=True)
    return os.path.join(cfg["out"], name)


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_analyze(cfg):
    model = cfgmod.build_model(cfg)
    h = model.interaction_matrix()
    consts = _certificate(h, cfg)
    result = {
        "spectral_radius": spectral_radius(h),
        "operator_norm_inf": operator_norm_inf(h),
        "cert": consts.cert.as_dict(),
        "xi": consts.xi,
        "c": consts.c,
        "unbounded_xi": consts.unbounded,
        "mean_cluster_sizes": cluster_mean_sizes(h).tolist(),
    }
    if model.m == 1 and 0 < h.entries[0, 0] < 1:
        result["univariate_xi_max"] = univariate_optimal_xi(float(h.entries[0, 0]))[0]
    _dump(result, _out_path(cfg, "analysis.json"))
    print(json.dumps(result, indent=2))
    return EXIT_OK


def _burn_in(model, cfg):
    if cfg["burn_in"] is not None:
        return cfg["burn_in"]
    a, b = cfg["window"]
    burn_in, value, passed = choose_burn_in(model, a, b, cfg["burn_in_eps"], n_probe=cfg["n_probe"],
                                            rng_seed=cfg["seed"])
    if not passed:
        print(f"warning: burn-in check still {value:.3g} at burn_in={burn_in:g}", file=sys.stderr)
    return burn_in


def cmd_simulate(cfg):
    model = cfgmod.build_model(cfg)
    a, b = cfg["window"]
    burn_in = _burn_in(model, cfg)
    if cfg["engine"] == "cluster":
        seq = simulate_window(model, a, b, burn_in, cfg["seed"], max_nodes=cfg["max_nodes"])
    else:
        seq = simulate_thinning(model, a, b, burn_in, cfg["seed"], rate_cap=cfg["rate_cap"],
                                max_events=cfg["max_nodes"])
    path = _out_path(cfg, "events.csv")
    seq.to_csv(path)
    print(f"{len(seq)} events in [{a:g}, {b:g}) written to {path}")
    return EXIT_OK


def plot_report(report, path):
    """Log empirical MGF with its CI band against the log bound, as a standalone SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "hawkesbound"
    u = np.array([p.u for p in report.grid])
    tiny = np.finfo(float).tiny
    point = np.log([max(p.mgf.point, tiny) for p in report.grid])
    lo = np.log([max(p.mgf.ci_lo, tiny) for p in report.grid])
    hi = np.log([max(p.mgf.ci_hi, tiny) for p in report.grid])
    bound = np.log([p.bound for p in report.grid])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.fill_between(u, lo, hi, color="tab:blue", alpha=0.25, label=f"{report.ci_level:.0%} CI")
    ax.plot(u, point, "o-", color="tab:blue", label="log empirical MGF")
    ax.plot(u, bound, "s--", color="tab:red", label="log bound")
    ax.set_xlabel("u (fraction of the certified exponent)")
    ax.set_ylabel("log E exp(xi N)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_verify(cfg):
    model = cfgmod.build_model(cfg)
    h = model.interaction_matrix()
    consts = _certificate(h, cfg)
    f = cfgmod.build_f(cfg)
    u_grid = cfg["u_grid"]
    if "xi_grid" in cfg:
        fold = f_fold_norm(f, cfg["t_period"]) if f is not None else 1.0
        u_grid = [xi * fold / consts.xi for xi in cfg["xi_grid"]]
    a, b = cfg["window"]
    report = run_verification(
        model, (a, b), u_grid, cfg["n_reps"], burn_in=cfg["burn_in"], engine=cfg["engine"],
        rng_seed=cfg["seed"], cert=consts.cert, ci_level=cfg["ci_level"], f=f, t_period=cfg.get("t_period"),
        threads=cfg["threads"], burn_in_eps=cfg["burn_in_eps"], n_probe=cfg["n_probe"],
    )
    report.extra["config"] = cfgmod.resolved(cfg)
    report.to_json(_out_path(cfg, "report.json"))
    report.to_csv(_out_path(cfg, "report.csv"))
    if cfg["svg"]:
        plot_report(report, _out_path(cfg, "report.svg"))

    print(f"cert r={consts.cert.r:.6g} k={consts.cert.k:.6g} xi={consts.xi:.6g}  burn_in={report.burn_in:g}"
          f" (check {report.burn_in_check_value:.3g}, {'passed' if report.burn_in_passed else 'NOT passed'})")
    for p in report.grid:
        print(f"u={p.u:<6g} bound={p.bound:<12.6g} mgf={p.mgf.point:<12.6g}"
              f" [{p.mgf.ci_lo:.6g}, {p.mgf.ci_hi:.6g}] {p.mgf.method:<9} {p.verdict}")
    return EXIT_FAIL if FAIL in report.verdicts else EXIT_OK


def cmd_gw(cfg):
    model = cfgmod.build_model(cfg, check=False)
    h = model.interaction_matrix()
    gw = cfg["gw"]
    root = gw["root_type"]
    if root > model.m:
        raise ValueError(f"gw.root_type must lie in [1, {model.m}]")
    sizes = sample_gw_sizes(h, np.full(gw["n_trees"], root), cfg["seed"], cfg["max_nodes"], cfg["threads"])
    result = {
        "root_type": root,
        "n_trees": gw["n_trees"],
        "mean_size": float(sizes.mean()),
        "var_size": float(sizes.var(ddof=1)) if sizes.size > 1 else math.nan,
        "max_size": int(sizes.max()),
        "recursion": [],
    }
    spr = spectral_radius(h)
    if spr < 1:
        result["expected_mean_size"] = float(cluster_mean_sizes(h)[root - 1])
        consts = _certificate(h, cfg)
        result["cert"] = consts.cert.as_dict()
        result["xi"] = consts.xi
    for t in gw["t_grid"]:
        row = {"t": t}
        try:
            row["g_n"] = gw_mgf_recursion(h, t, gw["n_gens"]).tolist()
        except Diverged as exc:
            row["g_n"] = f"diverged at generation {exc.at_generation}"
        try:
            row["g_limit"] = gw_mgf_limit(h, t).tolist()
        except (Diverged, NonConvergence) as exc:
            row["g_limit"] = str(exc)
        if spr < 1 and t <= consts.xi:
            row["bound"] = gw_mgf_bound(consts.cert, t)
        result["recursion"].append(row)
    _dump(result, _out_path(cfg, "gw.json"))
    print(json.dumps(result, indent=2))
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "verify": cmd_verify, "gw": cmd_gw}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hawkesbound", description="Exponential-moment bounds for multivariate Hawkes processes.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "spectral radius, certificate and exponent constants",
        "simulate": "simulate one window and write events.csv",
        "verify": "Monte Carlo check of the exponential-moment bound",
        "gw": "Galton-Watson tree statistics and log-MGF recursion",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
        p.add_argument("--out", metavar="DIR", help="output directory (default: current)")
        p.add_argument("--svg", action="store_true", default=None, help="also write report.svg (verify)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config, {"seed": args.seed, "threads": args.threads, "out": args.out,
                                        "svg": args.svg})
        return COMMANDS[args.command](cfg)
    except (NodeCapExceeded, RateCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (HawkesBoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
