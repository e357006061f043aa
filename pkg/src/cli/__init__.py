from src.cli.commands import COMMANDS, CommandInputs, CommandResult, run_command
from src.cli.config import PipelineConfig, config_digest, load_config
from src.cli.readers import parse_assessments, parse_history, parse_outcomes, parse_reliability_overrides
from src.cli.writers import Report, ReportRow, read_belief_matrix_json, read_profiles_json, read_report_json

__all__ = [
    "COMMANDS",
    "CommandInputs",
    "CommandResult",
    "PipelineConfig",
    "Report",
    "ReportRow",
    "config_digest",
    "load_config",
    "parse_assessments",
    "parse_history",
    "parse_outcomes",
    "parse_reliability_overrides",
    "read_belief_matrix_json",
    "read_profiles_json",
    "read_report_json",
    "run_command",
]
