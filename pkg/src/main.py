"""Phi4LDP - Main module

This module is the command-line entry point of the Phi4LDP lab.
Every subcommand runs one experiment (see `COMMANDS`) from a
`config.json` file or from the manifest of an earlier run;
`report` turns a results directory into plots and a summary table.

Exit status: 0 on success, 2 on usage or configuration errors,
3 on experiment failures.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import argparse                                     # noqa: E402
from typing import Optional                         # noqa: E402
from initialization import initialization           # noqa: E402
from ldp_lab import ldp_lab                         # noqa: E402
from report import report                           # noqa: E402
from util.style import print_style                  # noqa: E402

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3

# Subcommand -> (experiment kind, help text)
COMMANDS = {
    "simulate": ("simulate", "dump one trajectory to trajectory.csv"),
    "besov": ("besov-verify", "verify the dyadic partition and Besov norms"),
    "rate": ("rate-eval", "evaluate the rate function on a trajectory CSV"),
    "mode-ldp": ("mode-ldp", "mode-level LDP against the Gaussian tail"),
    "ldp-sweep": ("tail-sweep", "tail sweep of the shifted solution"),
    "linear-sweep": ("linear-sweep", "tail sweep of Z_eps - x_eps"),
    "moment-fit": ("moment-scaling", "eps-scaling of the stochastic "
                                     "convolution"),
    "shifted-fit": ("shifted-fit", "eps-scaling of the shifted solution"),
    "scaling-check": ("scaling-check", "KS check of the Brownian scaling law"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phi4ldp",
        description="Small-time large deviations lab for the dynamical "
                    "Phi^4_1 model on the torus."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        source = sub.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", help="path of a config .json file")
        source.add_argument("--manifest",
                            help="rerun from a manifest.json of earlier run")
        sub.add_argument("--output", default=None,
                         help="override the output directory")
        sub.add_argument("--quiet", action="store_true",
                         help="suppress console output")

    sub = subparsers.add_parser("report", help="plots and summary table")
    sub.add_argument("--input", required=True, help="results directory")
    sub.add_argument("--quiet", action="store_true")

    return parser


def _fail(kind: str, exc: Exception) -> None:
    print(print_style.RED + f"{kind}: " + print_style.END + str(exc),
          file=sys.stderr)


def run_cli(argv: Optional[list] = None) -> int:
    """
    Parses `argv`, runs the requested subcommand and returns the
    exit status.
    """

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    verbose = not args.quiet

    try:
        if args.command == "report":
            report(args.input, verbose)
        else:
            kind = COMMANDS[args.command][0]
            config_path = args.config or args.manifest
            paths, config = initialization(config_path, kind, args.output,
                                           verbose)
            ldp_lab(paths, config, verbose)

    except (ValueError, TypeError, KeyError, FileNotFoundError) as exc:
        _fail("Configuration error", exc)
        return EXIT_CONFIG
    except (UserWarning, FloatingPointError) as exc:
        _fail("Experiment failed", exc)
        return EXIT_FAILURE

    return EXIT_OK


def main():
    """
    Main function for the Phi4LDP command line.
    """
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
