"""
Utility Functions Tests for NeSyLearn

License: MIT
"""

import io
import json
import math

import numpy as np
import pytest

from nesylearn.errors import ArityError
from nesylearn.utils import (
    canonical_json,
    digits_to_number,
    hamming,
    parse_int_range,
    split_list,
    stable_hash,
    to_jsonable,
    write_csv,
)


class TestDigits:
    """Tests for digits_to_number() and split_list()."""

    def test_digits(self):
        assert digits_to_number((1, 2, 3)) == 123
        assert digits_to_number((0, 7)) == 7

    def test_split(self):
        assert split_list((1, 2, 3, 4)) == ((1, 2), (3, 4))

    def test_split_odd_length(self):
        with pytest.raises(ArityError):
            split_list((1, 2, 3))


class TestJson:
    """Tests for to_jsonable(), canonical_json() and stable_hash()."""

    def test_numpy_values(self):
        assert to_jsonable({"a": np.int64(3), "b": np.float64(0.5), "c": np.bool_(True)}) == {
            "a": 3, "b": 0.5, "c": True}

    def test_non_finite(self):
        assert to_jsonable([math.inf, -math.inf, math.nan]) == ["inf", "-inf", "nan"]

    def test_sets_are_sorted(self):
        assert to_jsonable(frozenset({(2, 2), (0, 0)})) == [[0, 0], [2, 2]]

    def test_canonical_key_order(self):
        assert canonical_json({"b": 1, "a": 2}) == canonical_json({"a": 2, "b": 1})
        assert json.loads(canonical_json({"x": (1, 2)})) == {"x": [1, 2]}

    def test_stable_hash(self):
        assert stable_hash({"a": 1, "b": [1, 2]}) == stable_hash({"b": (1, 2), "a": 1})
        assert stable_hash({"a": 1}) != stable_hash({"a": 2})
        assert len(stable_hash({})) == 64


class TestWriteCsv:
    """Tests for write_csv()."""

    def test_header_and_rows(self):
        stream = io.StringIO()
        count = write_csv([{"N": 1, "acc": 0.5, "extra": "x"}, {"N": 2}], ["N", "acc"], stream)
        assert count == 2
        assert stream.getvalue() == "N,acc\n1,0.5\n2,\n"

    def test_empty(self):
        stream = io.StringIO()
        assert write_csv([], ["a"], stream) == 0
        assert stream.getvalue() == "a\n"


class TestParseIntRange:
    """Tests for parse_int_range()."""

    def test_inclusive_range(self):
        assert parse_int_range("2..5") == [2, 3, 4, 5]

    def test_list(self):
        assert parse_int_range("5, 2,3,2") == [2, 3, 5]

    @pytest.mark.parametrize("text", ["5..2", "", "a..b"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            parse_int_range(text)


class TestHamming:
    """Tests for hamming()."""

    def test_distance(self):
        assert hamming((0, 1, 2), (0, 2, 1)) == 2
        assert hamming((3, 4), (3, 4)) == 0


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
