"""``colab list`` and ``colab run``."""

from __future__ import annotations

import argparse
import os
import sys

from colab.config import ConfigError, parse_config
from colab.experiments import EXIT_USAGE, REGISTRY, UsageError, list_experiments, run_experiment


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list experiments")
    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("name")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    run.add_argument("--out", help="output root (default: $COLAB_OUT or ./colab_out)")
    run.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, desc in list_experiments():
            print(f"{name:24s} {desc}")
        return 0
    if args.name not in REGISTRY:
        print(f"colab: error: unknown experiment {args.name!r}", file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("colab: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(args.config, args.overrides)
    except (ConfigError, OSError) as exc:
        print(f"colab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or cfg.output_dir or os.environ.get("COLAB_OUT") or "colab_out"
    try:
        result = run_experiment(args.name, cfg, out, args.threads)
    except UsageError as exc:
        print(f"colab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for key, ok in result.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'}  {key}")
    if result.error:
        print(f"numerical guard: {result.error}", file=sys.stderr)
    print(f"{result.name}: {result.status} ({result.wall_time:.2f} s) -> {os.path.join(out, result.name)}")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
