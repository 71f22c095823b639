"""Command-line entry points: train, evaluate, export, gradcheck, version.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .errors import DogfightError


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dogfight",
                     description="Air-combat RL sandbox: temporal-fusion "
                                 "policies trained with soft actor-critic")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p_train = sub.add_parser("train", help="run a training loop from a JSON "
                                           "run configuration")
    p_train.add_argument("--config", required=True, help="run config JSON")
    p_train.add_argument("--resume", default=None,
                         help="resume state (.npz) from a previous run")
    p_train.add_argument("--quiet", action="store_true",
                         help="suppress per-episode progress lines")

    p_eval = sub.add_parser("evaluate", help="deterministic evaluation of a "
                                             "checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--opponent", default="pure_pursuit")
    p_eval.add_argument("--episodes", type=int, default=20)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--config", default=None,
                        help="run config JSON (defaults to config.json next "
                             "to the checkpoint, else built-ins)")

    p_export = sub.add_parser("export", help="export evaluation episode "
                                             "traces as JSON lines")
    p_export.add_argument("--checkpoint", required=True)
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--opponent", default="pure_pursuit")
    p_export.add_argument("--episodes", type=int, default=3)
    p_export.add_argument("--seed", type=int, default=0)
    p_export.add_argument("--config", default=None)

    p_grad = sub.add_parser("gradcheck", help="run the finite-difference "
                                              "gradient suite")
    p_grad.add_argument("--seed", type=int, default=0)

    sub.add_parser("version", help="print the package version")
    return parser


def _network_config(args):
    if args.config is not None:
        from .config import load_run_config
        return load_run_config(args.config).network
    return None


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "version":
            print(__version__)
            return 0

        if args.command == "gradcheck":
            from .gradcheck import main as gradcheck_main
            return gradcheck_main(args.seed)

        if args.command == "train":
            from .config import load_run_config
            from .sac import train
            cfg = load_run_config(args.config)
            result = train(cfg, resume_from=args.resume, quiet=args.quiet)
            print(f"trained {result.episodes_run} episodes "
                  f"({result.env_steps} env steps); checkpoint: "
                  f"{result.final_checkpoint}")
            print(f"metrics: {result.metrics_path}")
            return 0

        if args.command == "evaluate":
            from .evaluation import evaluate
            report = evaluate(args.checkpoint, args.opponent, args.episodes,
                              args.seed, net_cfg=_network_config(args))
            print(json.dumps(report.to_dict(), indent=2))
            return 0

        if args.command == "export":
            from .evaluation import export_trajectories
            written = export_trajectories(args.checkpoint, args.opponent,
                                          args.episodes, args.out,
                                          seed=args.seed,
                                          net_cfg=_network_config(args))
            for path in written:
                print(path)
            return 0
    except DogfightError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
