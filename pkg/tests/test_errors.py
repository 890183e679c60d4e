"""
Error Hierarchy and Diagnostics Tests for NeSyLearn

License: MIT
"""

import pytest

from nesylearn.errors import (
    ERROR_MAPPINGS,
    BudgetExceededError,
    DistributionError,
    NesyLearnError,
    TaskSpecError,
    TruthTableError,
    VerdictWithheldError,
    describe_error,
    format_diagnostic,
    get_error_mapping,
)
from tests import TestHelper


class TestErrorMappings:
    """Tests for error mappings completeness and structure."""

    def test_all_mappings_have_required_fields(self):
        """Test that all mappings have required fields."""
        required_fields = ['simple_explanation', 'fix_suggestion', 'tags', 'emoji']

        for error_type, mapping in ERROR_MAPPINGS.items():
            for field in required_fields:
                assert field in mapping, f"{error_type} missing {field}"

    def test_all_explanations_not_empty(self):
        for mapping in ERROR_MAPPINGS.values():
            assert len(mapping['simple_explanation']) > 10
            assert len(mapping['fix_suggestion']) > 10

    def test_every_library_error_is_mapped(self):
        """Each concrete NesyLearnError subclass has its own entry."""
        def subclasses(klass):
            for sub in klass.__subclasses__():
                yield sub
                yield from subclasses(sub)

        for klass in subclasses(NesyLearnError):
            if klass.__module__ != "nesylearn.errors":
                continue
            assert klass.__name__ in ERROR_MAPPINGS, f"{klass.__name__} not mapped"

    def test_fallback_exists(self):
        assert '__unknown__' in ERROR_MAPPINGS


class TestGetErrorMapping:
    """Tests for get_error_mapping() function."""

    def test_budget(self):
        assert 'cap' in get_error_mapping('BudgetExceededError')['simple_explanation']

    def test_unknown_error(self):
        assert get_error_mapping('NonExistentError') == ERROR_MAPPINGS['__unknown__']


class TestTaskSpecError:
    """Tests for line-anchored task file errors."""

    def test_source_and_line(self):
        error = TaskSpecError("unknown key", line=5, source="task.toml")
        assert str(error) == "task.toml:5: unknown key"
        assert error.line == 5

    def test_line_only(self):
        assert str(TaskSpecError("bad", line=2)) == "line 2: bad"

    def test_no_location(self):
        assert str(TaskSpecError("bad")) == "bad"

    def test_truth_table_error_is_a_task_error(self):
        assert issubclass(TruthTableError, TaskSpecError)

    def test_value_error_compatibility(self):
        with pytest.raises(ValueError):
            raise DistributionError("weights do not sum to 1")


class TestDescribeError:
    """Tests for describe_error() and format_diagnostic()."""

    def test_budget_error(self):
        decoded = describe_error(BudgetExceededError("pool too large", cap=50))
        TestHelper.assert_valid_diagnostic(decoded)
        assert decoded['error_type'] == 'BudgetExceededError'
        assert decoded['cap'] == 50
        assert decoded['original_message'] == 'pool too large (cap=50)'

    def test_subclass_falls_back_to_base_entry(self):
        class CustomTableError(TruthTableError):
            pass

        decoded = describe_error(CustomTableError("rows missing"))
        assert decoded['error_type'] == 'CustomTableError'
        assert decoded['simple_explanation'] == ERROR_MAPPINGS['TruthTableError']['simple_explanation']

    def test_builtin_value_error(self):
        decoded = describe_error(ValueError("epsilon must lie in (0, 1)"))
        assert decoded['tags'] == ERROR_MAPPINGS['ValueError']['tags']

    def test_unmapped_exception(self):
        decoded = describe_error(RuntimeError())
        assert decoded['original_message'] == 'No message provided'
        assert decoded['tags'] == ['unknown']

    def test_line_is_carried(self):
        assert describe_error(TaskSpecError("bad", line=7))['line'] == 7

    def test_format_diagnostic(self):
        text = format_diagnostic(describe_error(VerdictWithheldError("cap reached")))
        lines = text.splitlines()
        assert 'VerdictWithheldError: cap reached' in lines[0]
        assert lines[1].strip().startswith('why:')
        assert lines[2].strip().startswith('fix:')

    def test_format_invalid_input(self):
        assert format_diagnostic({}) == "Invalid diagnostic data"


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
