"""
Observability helpers: structured logging + Prometheus metrics.
"""

import json
import logging
import os
import time
from typing import Any, Dict, List

try:
    from prometheus_client import Counter, Histogram
    PROM_AVAILABLE = True
except Exception:
    Counter = None
    Histogram = None
    PROM_AVAILABLE = False

LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
LOGGER_NAME = os.environ.get("LOG_NAME", "erfund")

logger = logging.getLogger(LOGGER_NAME)
if not logger.handlers:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
logger.setLevel(LOG_LEVEL)


RECENT_ERRORS: List[Dict[str, Any]] = []
MAX_RECENT_ERRORS = 50


def record_error(event: str, payload: dict) -> None:
    RECENT_ERRORS.append({"event": event, **payload, "ts": time.time()})
    if len(RECENT_ERRORS) > MAX_RECENT_ERRORS:
        RECENT_ERRORS.pop(0)


class _NoopMetric:
    _metrics = {}

    def labels(self, *args, **kwargs):
        return self

    def inc(self, *args, **kwargs):
        return None

    def observe(self, *args, **kwargs):
        return None


COMMANDS_TOTAL = (
    Counter(
        "erfund_commands_total",
        "CLI commands run",
        ["command", "status"],
    )
    if PROM_AVAILABLE
    else _NoopMetric()
)
PROJECTS_EVALUATED = (
    Counter(
        "erfund_projects_evaluated_total",
        "Projects pushed through the aggregation pipeline",
        ["mode"],
    )
    if PROM_AVAILABLE
    else _NoopMetric()
)
EVIDENCE_COMBINED = (
    Counter(
        "erfund_evidence_combined_total",
        "Pieces of evidence folded by the ER rule",
    )
    if PROM_AVAILABLE
    else _NoopMetric()
)
COMMAND_LATENCY = (
    Histogram(
        "erfund_command_duration_seconds",
        "CLI command duration in seconds",
        ["command"],
    )
    if PROM_AVAILABLE
    else _NoopMetric()
)


def log_event(event: str, level: int = logging.INFO, **fields) -> None:
    payload = {"event": event, **fields}
    logger.log(level, json.dumps(payload, ensure_ascii=True, sort_keys=True, default=str))


def _counter_total(counter) -> float:
    try:
        return sum(metric._value.get() for metric in counter._metrics.values())
    except Exception:
        return 0.0


def _plain_total(counter) -> float:
    try:
        return counter._value.get()
    except Exception:
        return 0.0


def metrics_snapshot() -> dict:
    return {
        "recent_errors": RECENT_ERRORS[-MAX_RECENT_ERRORS:],
        "commands_total": _counter_total(COMMANDS_TOTAL),
        "projects_evaluated_total": _counter_total(PROJECTS_EVALUATED),
        "evidence_combined_total": _plain_total(EVIDENCE_COMBINED),
    }
