"""Command-line surface: fit, simulate, bootstrap, selftest.

Exit codes: 0 success, 1 selftest failure, 2 malformed CSV, 3 fit
failure, 4 configuration error.  Every artifact embeds the tool version,
the effective configuration, and the base seed; artifacts are
byte-identical across reruns of the same configuration (timing is
printed to stderr, never written into files).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import DataError, read_csv_dataset
from .errors import FitFailure
from .estimators import ESTIMATORS, fit_named
from .bootstrap import bootstrap
from .simlab import (ISE_GRID_HI, ISE_GRID_LO, ISE_GRID_POINTS, SimDesign,
                     estimand_f0, run_study)

EXIT_BAD_CSV = 2
EXIT_FIT_FAILURE = 3
EXIT_BAD_CONFIG = 4

F_CONVENTION = ("left-continuous step: F(t) is the value at the smallest "
                "knot >= t; first value before all knots, last value after")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_CONFIG)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj)}")


def _emit_json(payload: dict, path: Path | None):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    if path is None:
        print(text)
    else:
        path.write_text(text + "\n", encoding="utf-8")


def _estimate_payload(res) -> dict:
    out = {
        "beta": list(res.beta),
        "objective": res.objective,
        "flags": list(res.flags),
        "f_knots": None,
        "f_convention": None,
    }
    if res.f is not None:
        out["f_knots"] = [[float(k), float(v)]
                          for k, v in zip(res.f.knots, res.f.values)]
        out["f_convention"] = F_CONVENTION
    theta = getattr(res.report, "theta_hat", None) \
        or getattr(res.report, "theta_tilde", None)
    out["theta"] = list(theta.theta) if theta is not None else None
    return out


def cmd_fit(args) -> int:
    try:
        data = read_csv_dataset(args.csv)
    except (DataError, OSError) as exc:
        print(f"error: bad CSV: {exc}", file=sys.stderr)
        return EXIT_BAD_CSV
    names = [e.strip() for e in args.estimator.split(",") if e.strip()]
    bad = [e for e in names if e not in ESTIMATORS]
    if bad:
        print(f"error: unknown estimator(s) {bad}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    config = {"n_starts": args.starts, "tie_mode": args.ties,
              "grid_points": args.grid_points}
    payload = {
        "tool_version": __version__,
        "base_seed": args.seed,
        "config": {
            "csv": str(args.csv), "estimator": names, "seed": args.seed,
            "starts": args.starts, "ties": args.ties,
            "grid_points": args.grid_points, "bootstrap": args.bootstrap,
            "alpha": args.alpha, "censored": data.censored,
        },
        "estimates": {},
    }
    for name in names:
        try:
            res = fit_named(name, data, seed=args.seed, **config)
        except (FitFailure, ValueError) as exc:
            print(f"error: fit {name} failed: {exc}", file=sys.stderr)
            return EXIT_FIT_FAILURE
        payload["estimates"][name] = _estimate_payload(res)
    if args.bootstrap:
        payload["bootstrap"] = {}
        for name in names:
            try:
                summary = bootstrap(data, name, B=args.bootstrap,
                                    alpha=args.alpha, seed=args.seed,
                                    estimator_config=config)
            except (FitFailure, ValueError) as exc:
                print(f"error: bootstrap {name} failed: {exc}", file=sys.stderr)
                return EXIT_FIT_FAILURE
            payload["bootstrap"][name] = {
                "B": summary.B, "alpha": summary.alpha,
                "se": list(summary.se),
                "ci_lower": list(summary.ci_lower),
                "ci_upper": list(summary.ci_upper),
                "n_failed": summary.n_failed,
            }
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    _emit_json(payload, out_dir / "fit.json" if out_dir else None)
    return 0


_SIM_KEYS = {
    "n": int, "error_law": str, "h_law": str, "n_reps": int, "seed": int,
    "estimators": str, "bootstrap_b": int, "bootstrap_alpha": float,
    "bootstrap_estimators": str, "n_jobs": int, "full_scale": str,
}


def parse_sim_config(text: str) -> dict:
    """Flat ``key = value`` lines; '#' comments; unknown keys are errors."""
    cfg: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SIM_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            cfg[key] = _SIM_KEYS[key](value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value for {key}: {value!r}")
    if "n" not in cfg:
        raise ValueError("config must set n")
    return cfg


def _sim_table_csv(report) -> str:
    p = len(next(iter(report.metrics.values())).rb)
    cols = ["Method"]
    for k in range(1, p + 1):
        cols += [f"RB_b{k}_x100", f"Var_b{k}_x100", f"MSE_b{k}_x100"]
    lines = [",".join(cols)]
    for name in report.estimators:
        m = report.metrics[name]
        cells = [name]
        for k in range(p):
            cells += [repr(float(m.rb[k])), repr(float(m.var[k])),
                      repr(float(m.mse[k]))]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _qq_csv(report, design: SimDesign) -> str:
    """Quantiles of the mean estimated CDF against parametric references."""
    from scipy.special import logit, ndtri

    header = "prob,q_f_tilde,q_normal_ref,q_logistic_ref,q_true_f0\n"
    if report.f_curve_mean is None:
        return header
    grid = np.linspace(ISE_GRID_LO, ISE_GRID_HI, ISE_GRID_POINTS)
    curve = np.asarray(report.f_curve_mean)
    probs = np.arange(0.01, 0.995, 0.01)
    q_est = np.interp(probs, curve, grid)
    s_norm = np.sqrt(np.pi ** 2 / 3.0)
    q_norm = ndtri(probs) * s_norm
    q_logi = logit(probs)
    f0_grid = np.asarray(estimand_f0(design)(grid))
    q_true = np.interp(probs, f0_grid, grid)
    lines = [header]
    for row in zip(probs, q_est, q_norm, q_logi, q_true):
        lines.append(",".join(repr(float(c)) for c in row) + "\n")
    return "".join(lines)


def cmd_simulate(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_sim_config(text)
    except (OSError, ValueError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    names = [e.strip() for e in cfg.get("estimators", "prl,score,cox").split(",")
             if e.strip()]
    bad = [e for e in names if e not in ESTIMATORS]
    if bad:
        print(f"error: unknown estimator(s) {bad}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    n_reps = cfg.get("n_reps", 200)
    if args.reps is not None:
        n_reps = args.reps
    if args.full_scale or cfg.get("full_scale", "no") in ("yes", "true", "1"):
        n_reps = 1000
    try:
        design = SimDesign(
            n=cfg["n"], error_law=cfg.get("error_law", "extreme_value"),
            h_law=cfg.get("h_law", "identity"), n_reps=n_reps,
            seed=cfg.get("seed", 0),
        )
    except ValueError as exc:
        print(f"error: bad design: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    bootstrap_config = None
    if "bootstrap_b" in cfg:
        bootstrap_config = {
            "B": cfg["bootstrap_b"],
            "alpha": cfg.get("bootstrap_alpha", 0.05),
            "estimators": [
                e.strip() for e in
                cfg.get("bootstrap_estimators", "score").split(",") if e.strip()
            ],
        }
    report = run_study(design, names, bootstrap_config=bootstrap_config,
                       n_jobs=cfg.get("n_jobs", 1))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "tool_version": __version__,
        "base_seed": design.seed,
        "config_echo": text,
        "config_parsed": cfg,
        "cli_overrides": {"reps": args.reps, "full_scale": args.full_scale},
        "report": report.to_dict(),
    }
    _emit_json(payload, out_dir / "report.json")
    (out_dir / "table.csv").write_text(_sim_table_csv(report), encoding="utf-8")
    (out_dir / "qq.csv").write_text(_qq_csv(report, design), encoding="utf-8")
    print(f"simulate: wall clock {report.wall_clock_s:.1f}s "
          f"(not written into artifacts)", file=sys.stderr)
    return 0


def cmd_bootstrap(args) -> int:
    try:
        data = read_csv_dataset(args.csv)
    except (DataError, OSError) as exc:
        print(f"error: bad CSV: {exc}", file=sys.stderr)
        return EXIT_BAD_CSV
    if args.estimator not in ESTIMATORS:
        print(f"error: unknown estimator {args.estimator!r}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        summary = bootstrap(data, args.estimator, B=args.B, alpha=args.alpha,
                            seed=args.seed)
    except (FitFailure, ValueError) as exc:
        print(f"error: bootstrap failed: {exc}", file=sys.stderr)
        return EXIT_FIT_FAILURE
    payload = {
        "tool_version": __version__,
        "base_seed": args.seed,
        "config": {"csv": str(args.csv), "estimator": args.estimator,
                   "B": args.B, "alpha": args.alpha, "seed": args.seed},
        "B": summary.B, "alpha": summary.alpha,
        "se": list(summary.se),
        "ci_lower": list(summary.ci_lower), "ci_upper": list(summary.ci_upper),
        "n_failed": summary.n_failed,
    }
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    _emit_json(payload, out_dir / "bootstrap.json" if out_dir else None)
    return 0


def cmd_selftest(_args) -> int:
    from .selftest import run_selftest

    return run_selftest()


def main(argv=None) -> int:
    parser = _Parser(prog="pairlik",
                     description="semiparametric transformation-model fits "
                                 "by pairwise rank likelihood")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit estimators to a CSV dataset")
    p_fit.add_argument("csv")
    p_fit.add_argument("--estimator", default="score",
                       help="comma-separated subset of prl,score,pdr4,cox")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--starts", type=int, default=25)
    p_fit.add_argument("--ties", choices=("strict", "tie_aware"),
                       default="strict")
    p_fit.add_argument("--grid-points", type=int, default=4096)
    p_fit.add_argument("--bootstrap", type=int, default=0, metavar="B")
    p_fit.add_argument("--alpha", type=float, default=0.05)
    p_fit.add_argument("--out-dir", default=None)
    p_fit.set_defaults(func=cmd_fit)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo study")
    p_sim.add_argument("config", help="flat key = value text configuration")
    p_sim.add_argument("--out-dir", default="sim-out")
    p_sim.add_argument("--reps", type=int, default=None,
                       help="override the configured replicate count")
    p_sim.add_argument("--full-scale", action="store_true",
                       help="run 1000 replicates regardless of config")
    p_sim.set_defaults(func=cmd_simulate)

    p_boot = sub.add_parser("bootstrap", help="bootstrap a CSV dataset fit")
    p_boot.add_argument("csv")
    p_boot.add_argument("--estimator", default="score")
    p_boot.add_argument("-B", type=int, default=200)
    p_boot.add_argument("--alpha", type=float, default=0.05)
    p_boot.add_argument("--seed", type=int, default=0)
    p_boot.add_argument("--out-dir", default=None)
    p_boot.set_defaults(func=cmd_bootstrap)

    p_self = sub.add_parser("selftest", help="run the built-in oracle checks")
    p_self.set_defaults(func=cmd_selftest)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
