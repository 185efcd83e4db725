from .experiment import ExperimentSpec, resolve_spec, run_experiment, run_single_seed
from .replay import replay
from .specfile import SpecError, parse_spec_file, parse_spec_text, write_spec_text
from .summarize import SummarizeError, format_table, summarize

__all__ = [
    "ExperimentSpec", "SpecError", "SummarizeError", "format_table",
    "parse_spec_file", "parse_spec_text", "replay", "resolve_spec",
    "run_experiment", "run_single_seed", "summarize", "write_spec_text",
]
