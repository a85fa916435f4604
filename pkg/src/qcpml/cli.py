"""Command-line entry point.

    qcpml solve|converge|decay|stability|spectrum --config cfg.toml
          --out DIR [--threads N] [--seed S]

The subcommand overrides the study kind in the configuration file, so one
file can drive several studies.
"""

from __future__ import annotations

import argparse
import sys

from . import harness

_SUMMARIES = {}


def _summary(kind):
    def deco(fn):
        _SUMMARIES[kind] = fn
        return fn
    return deco


@_summary("solve")
def _print_solve(result):
    run, diag = result
    print(f"solved R={diag['R']:g} with {diag['unknowns']} unknowns: "
          f"residual {diag['residual']:.2e}, pivot ratio "
          f"{diag['pivot_ratio']:.2e}, L2 on matched region "
          f"{diag['l2_on_gr']:.6e}")


@_summary("converge")
def _print_converge(study):
    for rec in study.records:
        print(f"R={rec.R:<6g} err_l2={rec.err_l2:.6e} err_h1={rec.err_h1:.6e} "
              f"ratio={rec.ratio:.4f} pivot={rec.pivot:.2e}")
    if study.fit.inconclusive:
        print(f"rate fit inconclusive: {study.fit.reason}")
    else:
        print(f"fitted decay rate {study.fit.rate:.4f} over "
              f"{study.fit.points_used} points (beta_max = {study.beta_max:.4f})")


@_summary("decay")
def _print_decay(probe):
    print(f"mode {probe.mode} amplitude slope {probe.slope:.4f} on "
          f"x in ({probe.window[0]:g}, {probe.window[1]:g}); "
          f"expected {probe.expected_slope:.4f}")


@_summary("stability")
def _print_stability(study):
    for rec in study.records:
        print(f"R={rec.R:<6g} ratio={rec.ratio:.6f} pivot={rec.pivot:.2e}")
    state = "FLAGGED" if study.flagged else "plateau"
    print(f"ratio variation over top half: {100 * study.variation:.2f}% "
          f"({state})")


@_summary("spectrum")
def _print_spectrum(scan):
    for mu, d, ok in zip(scan.eigenvalues, scan.distances, scan.converged):
        mark = "" if ok else "  [unconverged]"
        print(f"mu = {mu.real:+.6f}{mu.imag:+.6f}i  "
              f"distance to curve {d:.4f}{mark}")
    for note in scan.notes:
        print(f"note: {note}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qcpml",
        description="PML waveguide solver and study harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in ("solve", "converge", "decay", "stability", "spectrum"):
        p = sub.add_parser(kind, help=f"run a {kind} study")
        p.add_argument("--config", required=True, help="TOML study file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="concurrent solves across the R sweep")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for the eigensolver start vector")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = harness.load_config(args.config, out_dir=args.out,
                                  threads=args.threads, seed=args.seed)
        cfg.study = args.command
        result = harness.run_study(cfg)
    except harness.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    _SUMMARIES[args.command](result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
