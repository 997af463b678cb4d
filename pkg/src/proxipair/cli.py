"""Command line interface: ``proxipair <subcommand> <config> [options]``.

Subcommands: ``run`` executes the whole pipeline (gap, map verification,
solve, stability, oracle) and writes every artifact; ``gap``, ``solve``,
``stability`` and ``oracle`` execute one stage, reusing earlier results found
in the output directory and recomputing missing prerequisites.

Exit codes: 0 all enabled checks passed, 1 some check failed, 2 configuration
error.  The default output directory is, in order of precedence, the
``--output-dir`` option, the config's ``output_dir`` key, then
``$PROXIPAIR_OUTPUT_ROOT/<config-stem>`` or ``./runs/<config-stem>``.
"""

from __future__ import annotations

import argparse
import os
import sys

from .configfile import ConfigError, load_config
from .geometry import GeometryError
from .mappings import CertificationError
from .pipeline import STAGES, run_stages

OUTPUT_ROOT_ENV = "PROXIPAIR_OUTPUT_ROOT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxipair",
        description="Coupled best proximity point experiments: solve, verify, "
                    "and stress-test cyclic maps between convex sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run the full pipeline and write all artifacts"),
        ("gap", "compute the inter-set distance and a proximal pair"),
        ("solve", "verify the map conditions and solve for a coupled pair"),
        ("stability", "check the perturbation-stability bounds by sampling"),
        ("oracle", "compare the solver against the grid-search ground truth"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="problem configuration file")
        p.add_argument("--output-dir", default=None,
                       help="directory for artifacts (see docs for defaults)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--quiet", action="store_true",
                       help="suppress informational output")
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
    return parser


def resolve_output_dir(args, cfg) -> str:
    if args.output_dir:
        return args.output_dir
    if cfg.output_dir:
        return cfg.output_dir
    stem = os.path.splitext(os.path.basename(cfg.path))[0]
    root = os.environ.get(OUTPUT_ROOT_ENV, os.path.join(".", "runs"))
    return os.path.join(root, stem)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    except (ConfigError, CertificationError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed

    stages = list(STAGES) if args.command == "run" else [args.command]
    try:
        return run_stages(cfg, stages, resolve_output_dir(args, cfg),
                          quiet=args.quiet, figures=not args.no_figures)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
