"""Skill-tree tasks for compositional multi-hop arithmetic reasoning."""

__version__ = "0.1.0"

from .lang import (  # noqa: E402
    Operator,
    Program,
    ProgramError,
    apply_arith,
    apply_string,
    evaluate,
    parse_program,
    render_program,
    trace,
)

__all__ = [
    "Operator",
    "Program",
    "ProgramError",
    "apply_arith",
    "apply_string",
    "evaluate",
    "parse_program",
    "render_program",
    "trace",
]
