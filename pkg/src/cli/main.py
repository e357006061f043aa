"""
erfund command line.

    python -m src.cli.main calibrate --history history.csv --out out/
    python -m src.cli.main rank --history history.csv --assessments panel.csv \
        --reliabilities reliabilities.csv --out out/

Exit codes: 0 success, 1 validation error, 2 computation error.
"""
import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

ROOT_DIR = Path(__file__).resolve().parents[2]
load_dotenv(dotenv_path=ROOT_DIR / ".env")

from src.cli.commands import COMMANDS, CommandInputs, run_command  # noqa: E402
from src.cli.config import load_config  # noqa: E402
from src.errors import ErfundError, ValidationFailure  # noqa: E402
from src.observability import (  # noqa: E402
    COMMAND_LATENCY,
    COMMANDS_TOTAL,
    log_event,
    metrics_snapshot,
    record_error,
)

# Optional error monitoring (Sentry)
SENTRY_DSN = os.environ.get("SENTRY_DSN")
if SENTRY_DSN:
    try:
        import sentry_sdk

        sentry_sdk.init(
            dsn=SENTRY_DSN,
            traces_sample_rate=float(os.environ.get("SENTRY_TRACES_SAMPLE_RATE", "0.0")),
            environment=os.environ.get("SENTRY_ENVIRONMENT", "development"),
        )
    except Exception:
        pass


class _Parser(argparse.ArgumentParser):
    """Usage errors go through the structured error path instead of exiting."""

    def error(self, message: str):
        raise ValidationFailure(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="erfund",
        description="Rank funding proposals by combining expert reviews with the evidential reasoning rule.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="YAML or JSON pipeline config (default: nsfc-case-study preset).")
    parser.add_argument("--history", help="CSV: project_id,expert_id,criterion_id,grade,outcome")
    parser.add_argument("--assessments", help="CSV: project_id,expert_id,criterion_id,grade")
    parser.add_argument("--reliabilities", help="CSV: project_id,expert_id,reliability ('*' = every project)")
    parser.add_argument("--outcomes", help="CSV: project_id,outcome (compare only)")
    parser.add_argument("--out", default="out", help="Output directory.")
    parser.add_argument("--mode", choices=("raw", "normalized"), help="Expert weight mode.")
    parser.add_argument("--round4", action="store_true", help="Round belief matrices to 4 decimals before use.")
    return parser


def _fail(command: str, exc: ErfundError) -> int:
    COMMANDS_TOTAL.labels(command, "error").inc()
    record_error("command_failed", {"command": command, **exc.to_dict()})
    log_event("command_failed", level=logging.ERROR, command=command, exit_code=exc.exit_code, **exc.to_dict())
    print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
    return exc.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ValidationFailure as exc:
        return _fail("usage", exc)

    started = time.perf_counter()
    try:
        config = load_config(
            args.config,
            {"expert_weight_mode": args.mode, "calibration_rounding": 4 if args.round4 else None},
        )
        inputs = CommandInputs(
            history=args.history,
            assessments=args.assessments,
            reliabilities=args.reliabilities,
            outcomes=args.outcomes,
            out=args.out,
        )
        result = run_command(args.command, config, inputs)
    except ErfundError as exc:
        return _fail(args.command, exc)
    finally:
        COMMAND_LATENCY.labels(args.command).observe(time.perf_counter() - started)

    COMMANDS_TOTAL.labels(args.command, "ok").inc()
    log_event("command_completed", command=args.command, files=len(result.files), metrics=metrics_snapshot())
    print(json.dumps({**result.summary, "files": result.files}, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
