"""Command-line entry point: ``lessketch <subcommand> --config FILE``.

Exit status is 0 on success, 1 for configuration problems and 2 for data
problems (unreadable or malformed datasets, degenerate problems).
"""
import argparse
import os
import shlex
import sys

import numpy as np

from .bench import (
    Mode,
    emit_svg_plot,
    format_meta,
    parse_config,
    run_diagnostics,
    run_sweep,
    write_diagnostics_csv,
)
from .data import write_csv
from .errors import ConfigError, SketchError
from .leverage import approx_leverage_scores, exact_leverage_scores

SUBCOMMANDS = {
    "sweep-ols": Mode.OLS,
    "sweep-lasso": Mode.LASSO,
    "sweep-svd": Mode.SVD,
    "diagnose": Mode.DIAGNOSTICS,
    "leverage": None,
}

_PLOT_TITLES = {
    Mode.OLS: ("normalized excess loss vs sketch size", "d/(n-d-1)"),
    Mode.LASSO: ("normalized constrained excess loss vs sketch size", "d/(n-d-1)"),
    Mode.SVD: ("relative rSVD residual vs sketch size", "n lambda_n / |A|_F^2"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="lessketch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--trials", type=int, help="override trials per cell")
        p.add_argument("--out", help="override the output directory")
        if name == "leverage":
            p.add_argument("--approx", action="store_true", help="use SRHT-approximated scores")
    return parser


def load_config(args):
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    cfg = parse_config(text)
    if SUBCOMMANDS[args.command] is not None:
        cfg.mode = SUBCOMMANDS[args.command]
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg.validate()


def _write_leverage(cfg, approx, out_dir):
    ds = cfg.load_dataset()
    if approx:
        profile = approx_leverage_scores(ds.a, seed=cfg.master_seed)
    else:
        profile = exact_leverage_scores(ds.a)
    with open(os.path.join(out_dir, "leverage.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write("row,score,prob\n")
        for i, (s, p) in enumerate(zip(profile.scores, profile.probs)):
            fh.write(f"{i},{s:.10g},{p:.10g}\n")
    return f"coherence = {profile.coherence:.10g}\nsum = {float(np.sum(profile.scores)):.10g}\n"


def run(args, argv):
    cfg = load_config(args)
    os.makedirs(cfg.output_dir, exist_ok=True)
    extra = ""
    if args.command == "leverage":
        extra = _write_leverage(cfg, args.approx, cfg.output_dir)
    elif cfg.mode is Mode.DIAGNOSTICS:
        reports = run_diagnostics(cfg)
        with open(os.path.join(cfg.output_dir, "diagnostics.csv"), "wb") as fh:
            write_diagnostics_csv(reports, fh)
    else:
        results = run_sweep(cfg)
        with open(os.path.join(cfg.output_dir, "results.csv"), "wb") as fh:
            write_csv(results, fh)
        title, label = _PLOT_TITLES[cfg.mode]
        with open(os.path.join(cfg.output_dir, "plot.svg"), "wb") as fh:
            emit_svg_plot(results, fh, title=title, reference_label=label)
    with open(os.path.join(cfg.output_dir, "meta.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_meta(cfg, "lessketch " + " ".join(shlex.quote(a) for a in argv)))
        fh.write(extra)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        run(args, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SketchError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
