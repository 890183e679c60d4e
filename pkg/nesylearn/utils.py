"""
NeSyLearn Utilities Module

Helper functions shared by the analysis modules and the CLI: digit
encoding for the arithmetic knowledge bases, canonical JSON, hashing,
CSV emission and small parsing helpers.

License: MIT
"""

import csv
import hashlib
import json
import math
from typing import Any, Iterable, List, Mapping, Sequence, TextIO, Tuple

import numpy as np

from nesylearn.errors import ArityError


def digits_to_number(digits: Sequence[int]) -> int:
    """Read a digit sequence as a base-10 number, most-significant digit first."""
    number = 0
    for digit in digits:
        number = number * 10 + int(digit)
    return number


def split_list(items: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Split an even-length sequence into its two contiguous halves."""
    if len(items) % 2:
        raise ArityError(f"cannot split a sequence of odd length {len(items)} into two operands")
    half = len(items) // 2
    return tuple(items[:half]), tuple(items[half:])


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, tuples, sets and non-finite floats into JSON-safe values.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    Sets are emitted sorted so output does not depend on hashing order.
    """
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return [to_jsonable(v) for v in sorted(value)]
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def canonical_json(value: Any, indent: int = 2) -> str:
    """Serialise with sorted keys so identical reports give identical bytes."""
    return json.dumps(to_jsonable(value), sort_keys=True, indent=indent, ensure_ascii=False)


def stable_hash(value: Any) -> str:
    """SHA-256 of the compact canonical JSON form of ``value``."""
    payload = json.dumps(to_jsonable(value), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def write_csv(rows: Iterable[Mapping[str, Any]], columns: Sequence[str], stream: TextIO) -> int:
    """Write dict rows under a fixed header; returns the number of data rows."""
    writer = csv.DictWriter(stream, fieldnames=list(columns), lineterminator="\n",
                            extrasaction="ignore")
    writer.writeheader()
    count = 0
    for row in rows:
        writer.writerow({key: to_jsonable(row.get(key)) for key in columns})
        count += 1
    return count


def parse_int_range(text: str) -> List[int]:
    """Parse ``"2..10"`` (inclusive) or ``"2,3,5"`` into a sorted list of ints."""
    text = text.strip()
    if ".." in text:
        low, _, high = text.partition("..")
        start, stop = int(low), int(high)
        if stop < start:
            raise ValueError(f"empty range {text!r}")
        return list(range(start, stop + 1))
    values = sorted({int(part) for part in text.split(",") if part.strip()})
    if not values:
        raise ValueError(f"empty range {text!r}")
    return values


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of positions where two equal-length sequences differ."""
    return sum(1 for x, y in zip(a, b) if x != y)


__all__ = [
    "digits_to_number",
    "split_list",
    "to_jsonable",
    "canonical_json",
    "stable_hash",
    "write_csv",
    "parse_int_range",
    "hamming",
]
