"""Command line entry point: one subcommand per pipeline stage.

Exit codes: 0 success, 2 configuration error, 3 missing dependency.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import PipelineConfig, load_config
from .errors import CivError, ConfigError, MissingDependency
from .pipeline import STAGES, StageRunner
from .rag import HttpChatClient


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="civ",
        description=(
            "Chart instruction data engine: generate charts and QA pairs, "
            "filter corpora, assemble and score a CQA benchmark."
        ),
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        p.add_argument("--config", required=False, help="pipeline config JSON")
        p.add_argument("--out", required=True, help="pipeline output root directory")
        if stage == "stats":
            p.add_argument("--dataset", required=False, help="dataset directory override")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else PipelineConfig()
        if getattr(args, "dataset", None):
            from dataclasses import replace

            config = replace(config, paths=replace(config.paths, input_dataset=args.dataset))
        runner = StageRunner(config, args.out, llm_client=HttpChatClient.from_env())
        manifest = runner.run_stage(args.stage)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except MissingDependency as e:
        print(f"dependency error: {e}", file=sys.stderr)
        return 3
    except CivError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(json.dumps({"stage": manifest["stage"], "counts": manifest["counts"]}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
