"""Command-line entry point.

Subcommands mirror the experiment runners; every run takes a JSON config
(--config), an output directory (--out), and an optional seed override.
Numeric outputs are written as CSV/JSON with 17-significant-digit
decimals; matplotlib figures are rendered alongside unless --no-figures
is given.

Exit codes: 0 success, 1 invalid config or usage, 2 theorem-audit
inconsistency.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments as exp
from .experiments import ConfigError, load_config

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INCONSISTENT = 2


def _lam_tag(idx, lam):
    return f"{idx}_{lam:g}".replace(".", "p").replace("-", "m")


def _cmd_table1(cfg, out, figures):
    header, rows = exp.run_table1(cfg)
    exp.write_csv(out / "table1.csv", header, rows)
    if figures:
        from . import plots
        plots.plot_table1(rows, out / "table1.png")
    return EXIT_OK


def _cmd_ratio(cfg, out, figures):
    header, rows, skipped = exp.run_ratio(cfg)
    for n, lam in skipped:
        print(f"warning: no spurious point for n={n}, lambda={lam:g}; row skipped",
              file=sys.stderr)
    exp.write_csv(out / "ratio.csv", header, rows)
    if figures:
        from . import plots
        plots.plot_ratio(rows, out / "ratio.png")
    return EXIT_OK


def _cmd_pgd_compare(cfg, out, figures):
    curves, summary = exp.run_pgd_compare(cfg)
    exp.write_csv(out / "pgd_curves.csv",
                  ["seed", "lambda", "iter", "f", "dist", "grad_norm", "perturbed"],
                  curves)
    exp.write_csv(out / "pgd_summary.csv",
                  ["seed", "lambda", "iters_to_tol", "converged"], summary)
    if figures:
        from . import plots
        plots.plot_pgd_compare(curves, out / "pgd_compare.png")
    return EXIT_OK


def _cmd_landscape(cfg, out, figures):
    grids = exp.run_landscape(cfg)
    for idx, (lam, sweep) in enumerate(grids):
        rows = [
            (s, t, sweep.lambda_min[i, j])
            for i, s in enumerate(sweep.s_values)
            for j, t in enumerate(sweep.t_values)
        ]
        exp.write_csv(out / f"landscape_{_lam_tag(idx, lam)}.csv",
                      ["s", "t", "lambda_min"], rows)
    if figures:
        from . import plots
        plots.plot_landscape(grids, out / "landscape.png")
    return EXIT_OK


def _cmd_theorem_audit(cfg, out, figures):
    header, rows, all_ok = exp.run_theorem_audit(cfg)
    exp.write_csv(out / "theorem_audit.csv", header, rows)
    if figures:
        from . import plots
        plots.plot_theorem_audit(rows, out / "theorem_audit.png")
    if not all_ok:
        bad = sum(1 for r in rows if not r[-1])
        print(f"theorem audit: {bad}/{len(rows)} verdicts inconsistent",
              file=sys.stderr)
        return EXIT_INCONSISTENT
    print(f"theorem audit: {len(rows)} verdicts, all consistent")
    return EXIT_OK


def _cmd_rip_estimate(cfg, out, figures):
    result = exp.run_rip_estimate(cfg)
    payload = json.dumps(result, indent=2, sort_keys=True)
    (out / "rip_estimate.json").write_text(payload + "\n")
    if figures:
        from . import plots
        plots.plot_rip_estimate(result, out / "rip_estimate.png")
    print(payload)
    return EXIT_OK


_COMMANDS = {
    "table1": _cmd_table1,
    "ratio": _cmd_ratio,
    "pgd-compare": _cmd_pgd_compare,
    "landscape": _cmd_landscape,
    "theorem-audit": _cmd_theorem_audit,
    "rip-estimate": _cmd_rip_estimate,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bmsense",
        description="Matrix-sensing landscape experiments (CSV/JSON emitters).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    expected = args.command.replace("-", "_")
    try:
        cfg = load_config(args.config, seed_override=args.seed)
        if cfg.experiment != expected:
            raise ConfigError(
                f"config declares experiment {cfg.experiment!r}, "
                f"but the {args.command} subcommand was invoked"
            )
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, not args.no_figures)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
