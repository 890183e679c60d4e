"""
NeSyLearn Test Suite

Test Modules:
    - test_kb.py: knowledge bases, abduction index, distributions
    - test_dcsp.py: DCSP construction, enumeration, verdicts
    - test_risks.py: risk functionals and the minimizer inclusion check
    - test_simulate.py: sampling, ERM trials, sweeps and bounds
    - test_ensemble.py: merged tasks and the modadd grid
    - test_taskspec.py: task file parsing and configuration
    - test_errors.py: error hierarchy and diagnostics
    - test_utils.py: helpers
    - test_cli.py: command-line interface

Running Tests:
    pytest
    pytest -m "not slow"
    pytest tests/test_dcsp.py

License: MIT
"""

import sys
from pathlib import Path

# Add parent directory to path for imports
TEST_DIR = Path(__file__).parent
PROJECT_ROOT = TEST_DIR.parent
sys.path.insert(0, str(PROJECT_ROOT))

# Sample task files for testing
SAMPLE_TASKS = {
    "addition": """name = "addition"
seed = 2023

[kb]
builtin = "add"
L = 10
""",
    "multiplication": """name = "multiplication"

[kb]
builtin = "mul"
""",
    "xor": """name = "xor"

[kb]
builtin = "xor"
""",
    "modadd9": """name = "modadd9"

[kb]
builtin = "modadd"
k = 9
""",
    "modadd3": """name = "modadd3"

[kb]
builtin = "modadd"
k = 3
""",
    "modadd4": """name = "modadd4"

[kb]
builtin = "modadd"
k = 4
""",
    "modadd3_free": """name = "modadd3-free"

[kb]
builtin = "modadd"
k = 3

[analysis]
injective = false
""",
    "modadd4_free": """name = "modadd4-free"

[kb]
builtin = "modadd"
k = 4

[analysis]
injective = false
""",
    "xor_weights": """name = "xor-weights"

[kb]
L = 2
m = 2
table = [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]]

[distribution]
kind = "weights"
weights = [[0, 0, 0.4], [0, 1, 0.2], [1, 0, 0.2], [1, 1, 0.2]]
""",
    "bad_k": """name = "broken"

[kb]
builtin = "modadd"
k = 1
""",
    "unknown_key": """name = "typo"

[kb]
builtin = "add"
digits = 2
""",
    "not_toml": """name = "broken"
[kb
builtin = "add"
""",
}


def write_task(directory: Path, key: str) -> Path:
    """Write one of the sample task files into ``directory`` and return its path."""
    path = Path(directory) / f"{key}.toml"
    path.write_text(SAMPLE_TASKS[key], encoding="utf-8")
    return path


class TestHelper:
    """Helper class with assertion shortcuts for tests."""

    @staticmethod
    def assert_valid_report(report: dict):
        """Assert that a learnability report dict has all required fields."""
        required_fields = ["task", "learnable", "d", "L", "d_over_L", "num_solutions",
                           "expected_error", "union", "assumptions"]
        for field in required_fields:
            assert field in report, f"Missing required field: {field}"
        assert 0 <= report["d"] <= report["L"]
        assert report["learnable"] == (report["num_solutions"] == 1)
        assert report["expected_error"] <= report["d_over_L"] + 1e-12

    @staticmethod
    def assert_valid_diagnostic(decoded: dict):
        """Assert that a decoded error has all diagnostic fields."""
        for field in ["error_type", "original_message", "simple_explanation", "fix_suggestion",
                      "tags", "emoji"]:
            assert field in decoded, f"Missing diagnostic field: {field}"
        assert len(decoded["simple_explanation"]) > 10
        assert len(decoded["fix_suggestion"]) > 10
        assert decoded["tags"]


__all__ = [
    "SAMPLE_TASKS",
    "write_task",
    "TestHelper",
    "TEST_DIR",
    "PROJECT_ROOT",
]
