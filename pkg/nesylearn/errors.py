"""
NeSyLearn Errors Module

Exception hierarchy for the library plus a mapping of every error type to a
short explanation and a fix suggestion. The CLI decodes any exception it
catches through ``describe_error()`` and prints ``format_diagnostic()`` on
stderr, so users see what went wrong with their task file or their run.

License: MIT
"""

from typing import Any, Dict, Optional


class NesyLearnError(Exception):
    """Base class for every error raised by nesylearn."""


class ArityError(NesyLearnError, ValueError):
    """A concept or cluster sequence has the wrong length."""


class DomainError(NesyLearnError, ValueError):
    """A concept id, cluster index or label lies outside its space."""


class BudgetExceededError(NesyLearnError):
    """An enumeration would exceed its configured cap."""

    def __init__(self, message: str, cap: int):
        super().__init__(f"{message} (cap={cap})")
        self.cap = cap


class TaskSpecError(NesyLearnError, ValueError):
    """A task file is malformed; ``line`` anchors the offending entry."""

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        where = ""
        if source is not None and line is not None:
            where = f"{source}:{line}: "
        elif line is not None:
            where = f"line {line}: "
        elif source is not None:
            where = f"{source}: "
        super().__init__(f"{where}{message}")
        self.line = line
        self.source = source


class TruthTableError(TaskSpecError):
    """An explicit truth table does not define a total function on Z^m."""


class NoSolutionError(NesyLearnError):
    """The DCSP has no solution (the No Conflict assumption fails)."""


class VerdictWithheldError(NesyLearnError):
    """Learnability cannot be decided from an incomplete enumeration."""


class AbductionError(NesyLearnError):
    """No candidate concept sequence is consistent with the label."""


class DistributionError(NesyLearnError, ValueError):
    """A concept distribution is unnormalised or vanishes somewhere on B."""


class PredictorError(NesyLearnError, ValueError):
    """A predictor table is not a valid row-stochastic L x L matrix."""


ERROR_MAPPINGS: Dict[str, Dict[str, Any]] = {
    "ArityError": {
        "simple_explanation": (
            "A concept sequence does not have the length the knowledge base expects. "
            "Addition-style tasks take 2 * n_digits concepts."
        ),
        "fix_suggestion": "Check n_digits / m in the [kb] table and the rows of your table, pool or weights.",
        "tags": ["kb", "arity", "input"],
        "emoji": "📏",
    },
    "DomainError": {
        "simple_explanation": (
            "A concept id, cluster index or label falls outside its allowed range "
            "(concepts must lie in 0..L-1, labels in the label space of the task)."
        ),
        "fix_suggestion": "Make sure every concept is below L and every label is produced by the knowledge base.",
        "tags": ["kb", "domain", "input"],
        "emoji": "🚦",
    },
    "BudgetExceededError": {
        "simple_explanation": (
            "The enumeration would be larger than the configured cap, so it was stopped "
            "instead of running for a very long time."
        ),
        "fix_suggestion": "Raise --pool-cap / --solution-cap (or NESYLEARN_POOL_CAP / NESYLEARN_SOLUTION_CAP), or shrink the task.",
        "tags": ["budget", "enumeration", "cap"],
        "emoji": "⏳",
    },
    "TaskSpecError": {
        "simple_explanation": "The task file could not be understood. The message names the key and line at fault.",
        "fix_suggestion": "Fix the reported entry; see the task file schema in the README.",
        "tags": ["config", "task-file", "parse"],
        "emoji": "📝",
    },
    "TruthTableError": {
        "simple_explanation": (
            "The truth table does not give exactly one label for every concept sequence in Z^m."
        ),
        "fix_suggestion": "Add the missing rows (or remove duplicates) so that all L^m sequences are covered once.",
        "tags": ["config", "kb", "truth-table"],
        "emoji": "🧩",
    },
    "NoSolutionError": {
        "simple_explanation": (
            "No cluster-to-concept assignment satisfies all constraints, so the data conflicts "
            "with the knowledge base."
        ),
        "fix_suggestion": "Check the dataset labels, or disable injectivity with --no-injective if clusters may share concepts.",
        "tags": ["dcsp", "unsatisfiable", "assumption"],
        "emoji": "🚫",
    },
    "VerdictWithheldError": {
        "simple_explanation": (
            "The solution space was only partly enumerated, so uniqueness of the solution cannot be decided."
        ),
        "fix_suggestion": "Raise the solution cap and run again.",
        "tags": ["dcsp", "verdict", "cap"],
        "emoji": "✋",
    },
    "AbductionError": {
        "simple_explanation": "No concept sequence in the candidate pool produces the requested label.",
        "fix_suggestion": "Use a label from the task's label space or widen the pool restriction.",
        "tags": ["abduction", "risk"],
        "emoji": "🔍",
    },
    "DistributionError": {
        "simple_explanation": (
            "The concept distribution must sum to 1 and give every sequence in B a positive weight."
        ),
        "fix_suggestion": "Normalise the weights and list every pool sequence with a weight above zero.",
        "tags": ["distribution", "sampling", "assumption"],
        "emoji": "🎲",
    },
    "PredictorError": {
        "simple_explanation": (
            "The predictor must be an L x L matrix of non-negative numbers whose rows sum to 1."
        ),
        "fix_suggestion": "Check the predictor file: one row per cluster, one column per concept.",
        "tags": ["predictor", "risk", "input"],
        "emoji": "🧮",
    },
    "ValueError": {
        "simple_explanation": "An option or argument has a value outside its allowed range.",
        "fix_suggestion": "Check the numbers on the command line, e.g. epsilon must lie strictly between 0 and 1.",
        "tags": ["input", "options"],
        "emoji": "🔢",
    },
    "FileNotFoundError": {
        "simple_explanation": "A file given on the command line does not exist.",
        "fix_suggestion": "Check the path and try again.",
        "tags": ["io", "file"],
        "emoji": "📂",
    },
    "__unknown__": {
        "simple_explanation": "An unexpected error occurred while running the analysis.",
        "fix_suggestion": "Run again with --verbose and report the traceback if the problem persists.",
        "tags": ["unknown"],
        "emoji": "⚠️",
    },
}


def get_error_mapping(error_type: str) -> Dict[str, Any]:
    """Return the explanation entry for an error type name, or the fallback."""
    return ERROR_MAPPINGS.get(error_type, ERROR_MAPPINGS["__unknown__"])


def describe_error(exception: BaseException) -> Dict[str, Any]:
    """Decode an exception into a diagnostic dictionary.

    Subclasses without an entry of their own fall back to the nearest mapped
    base class before the generic fallback.
    """
    mapping = ERROR_MAPPINGS["__unknown__"]
    for klass in type(exception).__mro__:
        if klass.__name__ in ERROR_MAPPINGS:
            mapping = ERROR_MAPPINGS[klass.__name__]
            break

    return {
        "error_type": type(exception).__name__,
        "original_message": str(exception) or "No message provided",
        "simple_explanation": mapping["simple_explanation"],
        "fix_suggestion": mapping["fix_suggestion"],
        "tags": list(mapping["tags"]),
        "emoji": mapping["emoji"],
        "line": getattr(exception, "line", None),
        "cap": getattr(exception, "cap", None),
    }


def format_diagnostic(decoded: Dict[str, Any]) -> str:
    """Format a decoded error dictionary into a short human-readable block."""
    if not decoded or not isinstance(decoded, dict):
        return "Invalid diagnostic data"

    lines = [
        f"{decoded.get('emoji', '⚠️')} {decoded.get('error_type', 'Error')}: "
        f"{decoded.get('original_message', '')}",
        f"   why: {decoded.get('simple_explanation', 'No explanation available')}",
        f"   fix: {decoded.get('fix_suggestion', 'No suggestion available')}",
    ]
    return "\n".join(lines)


__all__ = [
    "NesyLearnError",
    "ArityError",
    "DomainError",
    "BudgetExceededError",
    "TaskSpecError",
    "TruthTableError",
    "NoSolutionError",
    "VerdictWithheldError",
    "AbductionError",
    "DistributionError",
    "PredictorError",
    "ERROR_MAPPINGS",
    "get_error_mapping",
    "describe_error",
    "format_diagnostic",
]
