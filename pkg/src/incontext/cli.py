"""``incontext`` command-line driver.

Exit status: 0 when every check passes, 1 when a check fails (the report is
still written), 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from .formats import FormatError, parse_config, read_text
from .report import MODES, ConfigError, ExperimentConfig, run

__all__ = ["main", "build_parser"]

_MODE_HELP = {
    "verify": "run the acceptance and supporting checks",
    "fit": "fit an algebra element (or masked transformer) to a target and report error vs N",
    "realize": "realize an algebra element as a layer stack and compare against direct evaluation",
    "ot": "exact W_1 and W_2 between two serialized measures (ot.mu, ot.nu)",
    "probe": "masked-measure limit and convergence probes",
}


def _defaults_epilog() -> str:
    lines = ["config keys (flat 'key = value' file, '#' comments) and defaults:"]
    for k, v in ExperimentConfig().echo().items():
        if k == "mode":
            continue
        if isinstance(v, list):
            v = ",".join(str(x) for x in v) or "(all)"
        lines.append(f"  {k} = {v}")
    lines.append("tol defaults per mode: verify uses the per-check thresholds; fit 1e-2; realize 1e-3 "
                 "(eps of the product network); ot 1e-9; probe 1e-2")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--seed", type=int, metavar="U64", help="random seed (default 1)")
    common.add_argument("--out", metavar="DIR", help="output directory (default incontext-out)")
    common.add_argument("--tol", type=float, metavar="FLOAT", help="override the mode tolerance")
    common.add_argument("--quiet", action="store_true", help="only print the summary line")

    parser = argparse.ArgumentParser(prog="incontext", description=__doc__.split("\n\n")[0],
                                     epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="mode", required=True, metavar="{" + ",".join(MODES) + "}")
    for mode in MODES:
        sub.add_parser(mode, parents=[common], help=_MODE_HELP[mode], description=_MODE_HELP[mode],
                       epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def _load(args) -> ExperimentConfig:
    mapping = parse_config(read_text(args.config)) if args.config else {}
    mapping.pop("mode", None)
    cfg = ExperimentConfig.from_mapping(mapping)
    cfg.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.tol is not None:
        cfg.tol = args.tol
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, FormatError, OSError) as exc:
        print(f"incontext: error: {exc}", file=sys.stderr)
        return 2
    log = (lambda _msg: None) if args.quiet else print
    try:
        report = run(cfg, log=log)
    except (ConfigError, FormatError, OSError) as exc:
        print(f"incontext: error: {exc}", file=sys.stderr)
        return 2
    n_pass = sum(c.passed for c in report.checks)
    for c in report.checks:
        if cfg.mode != "verify" and not args.quiet:
            print(c.line())
    print(f"{n_pass}/{len(report.checks)} checks passed; report written to {report.files['report']}")
    return 0 if report.passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
