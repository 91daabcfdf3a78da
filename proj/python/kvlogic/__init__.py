"""Satisfiability, model checking and proof checking for multi-agent modal
logic K with a knowing-what operator Kv_i(formula, value-name)."""

try:
    from ._kvlogic import (
        Formula,
        check_model,
        decide,
        oracle_sat,
        parse,
        verify_proof,
    )
except ImportError:  # in-tree builds put the extension on sys.path directly
    from _kvlogic import (
        Formula,
        check_model,
        decide,
        oracle_sat,
        parse,
        verify_proof,
    )

__all__ = [
    "Formula",
    "check_model",
    "decide",
    "oracle_sat",
    "parse",
    "verify_proof",
]
