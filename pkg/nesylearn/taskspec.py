"""
NeSyLearn Task File Module

Parses TOML task files into validated ``TaskSpec`` objects and resolves
the run configuration (enumeration caps, seed) from command-line flags,
environment variables, the task file and built-in defaults, in that order.

Every semantic error names the offending key and, when the key appears in
the file, its 1-based line.

License: MIT
"""

import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, NoReturn, Optional, Tuple, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from nesylearn.dcsp import DEFAULT_SOLUTION_CAP
from nesylearn.errors import DistributionError, DomainError, TaskSpecError
from nesylearn.kb import (
    BUILTINS,
    DEFAULT_POOL_CAP,
    AbductionIndex,
    ConceptDistribution,
    KnowledgeBase,
    build_abduction_index,
    load_kb,
)
from nesylearn.risks import DEFAULT_A3_CANDIDATES
from nesylearn.simulate import DEFAULT_SEED

POOL_CAP_ENV = "NESYLEARN_POOL_CAP"
SOLUTION_CAP_ENV = "NESYLEARN_SOLUTION_CAP"

_TOP_KEYS = {"name", "seed", "kb", "distribution", "analysis"}
_KB_KEYS = {"builtin", "L", "n_digits", "k", "m", "table", "pool"}
_DIST_KEYS = {"kind", "weights"}
_ANALYSIS_KEYS = {"injective", "pool_cap", "solution_cap", "a3_candidates"}

_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-]+)\s*\]")
_ASSIGN = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")
_DECODE_LINE = re.compile(r"line (\d+)")


@dataclass(frozen=True)
class KbSpec:
    builtin: Optional[str] = None
    L: int = 10
    n_digits: int = 1
    k: Optional[int] = None
    m: Optional[int] = None
    table: Optional[Tuple[Tuple[int, ...], ...]] = None
    pool: Optional[Tuple[Tuple[int, ...], ...]] = None


@dataclass(frozen=True)
class DistributionSpec:
    kind: str = "uniform"
    weights: Optional[Tuple[Tuple[float, ...], ...]] = None


@dataclass(frozen=True)
class AnalysisSpec:
    injective: bool = True
    pool_cap: Optional[int] = None
    solution_cap: Optional[int] = None
    a3_candidates: int = DEFAULT_A3_CANDIDATES


@dataclass(frozen=True)
class TaskSpec:
    """A parsed task file. ``lines`` maps dotted keys (``kb.k``) to their line."""

    name: str
    kb: KbSpec
    distribution: DistributionSpec = field(default_factory=DistributionSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)
    seed: Optional[int] = None
    source: Optional[str] = None
    lines: Mapping[str, int] = field(default_factory=dict, compare=False, repr=False)

    def line_of(self, key: str) -> Optional[int]:
        """Line of a dotted key, else of any key with that last component, else of a table header."""
        if key in self.lines:
            return self.lines[key]
        for dotted, line in sorted(self.lines.items(), key=lambda item: item[1]):
            if dotted.rsplit(".", 1)[-1] == key:
                return line
        return None

    def to_dict(self) -> Dict[str, Any]:
        """Resolved content, independent of formatting and key order."""
        return {
            "name": self.name,
            "seed": self.seed,
            "kb": {
                "builtin": self.kb.builtin,
                "L": self.kb.L,
                "n_digits": self.kb.n_digits,
                "k": self.kb.k,
                "m": self.kb.m,
                "table": self.kb.table,
                "pool": self.kb.pool,
            },
            "distribution": {"kind": self.distribution.kind, "weights": self.distribution.weights},
            "analysis": {
                "injective": self.analysis.injective,
                "pool_cap": self.analysis.pool_cap,
                "solution_cap": self.analysis.solution_cap,
                "a3_candidates": self.analysis.a3_candidates,
            },
        }


def _scan_lines(text: str) -> Dict[str, int]:
    lines: Dict[str, int] = {}
    table = ""
    for number, raw in enumerate(text.splitlines(), start=1):
        header = _HEADER.match(raw)
        if header and not raw.lstrip().startswith("[["):
            table = header.group(1)
            lines.setdefault(table, number)
            continue
        assign = _ASSIGN.match(raw)
        if assign:
            key = f"{table}.{assign.group(1)}" if table else assign.group(1)
            lines.setdefault(key, number)
    return lines


class _Reader:
    """Typed access to one TOML table, raising line-anchored errors."""

    def __init__(self, data: Mapping[str, Any], prefix: str, allowed: set, lines: Mapping[str, int],
                 source: Optional[str]):
        self.data = data
        self.prefix = prefix
        self.lines = lines
        self.source = source
        for key in data:
            if key not in allowed:
                self.fail(key, f"unknown key {self._dotted(key)!r}; expected one of {', '.join(sorted(allowed))}")

    def _dotted(self, key: str) -> str:
        return f"{self.prefix}.{key}" if self.prefix else key

    def fail(self, key: str, message: str) -> NoReturn:
        line = self.lines.get(self._dotted(key), self.lines.get(self.prefix))
        raise TaskSpecError(message, line=line, source=self.source)

    def get(self, key: str, kind: Union[type, Tuple[type, ...]], default: Any = None) -> Any:
        if key not in self.data:
            return default
        value = self.data[key]
        kinds = kind if isinstance(kind, tuple) else (kind,)
        if isinstance(value, bool) and bool not in kinds:
            self.fail(key, f"{self._dotted(key)} must be {' or '.join(k.__name__ for k in kinds)}, got a boolean")
        if not isinstance(value, kinds):
            self.fail(key, f"{self._dotted(key)} must be {' or '.join(k.__name__ for k in kinds)}, "
                           f"got {type(value).__name__}")
        return value

    def positive(self, key: str, default: Optional[int] = None) -> Optional[int]:
        value = self.get(key, int, default)
        if value is not None and value < 1:
            self.fail(key, f"{self._dotted(key)} must be positive, got {value}")
        return value

    def rows(self, key: str, number: type = int) -> Optional[Tuple[Tuple[Any, ...], ...]]:
        value = self.get(key, list)
        if value is None:
            return None
        rows = []
        for row in value:
            if not isinstance(row, list) or not row:
                self.fail(key, f"{self._dotted(key)} must be a list of non-empty arrays")
            for item in row:
                if isinstance(item, bool) or not isinstance(item, (int, float)):
                    self.fail(key, f"{self._dotted(key)} holds a non-numeric entry {item!r}")
                if number is int and not isinstance(item, int):
                    self.fail(key, f"{self._dotted(key)} holds a non-integer entry {item!r}")
            rows.append(tuple(number(item) if number is int else item for item in row))
        return tuple(rows)


def parse_task_text(text: str, source: Optional[str] = None) -> TaskSpec:
    """Parse and validate the TOML text of a task file."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        match = _DECODE_LINE.search(str(exc))
        raise TaskSpecError(f"invalid TOML: {exc}", line=int(match.group(1)) if match else None,
                            source=source) from exc

    lines = _scan_lines(text)
    top = _Reader(data, "", _TOP_KEYS, lines, source)
    name = top.get("name", str)
    if not name:
        raise TaskSpecError("the task file needs a non-empty 'name'", line=lines.get("name"), source=source)
    seed = top.get("seed", int)
    if "kb" not in data or not isinstance(data["kb"], dict):
        raise TaskSpecError("the task file needs a [kb] table", line=lines.get("kb"), source=source)

    kb = _Reader(data["kb"], "kb", _KB_KEYS, lines, source)
    builtin = kb.get("builtin", str)
    table = kb.rows("table")
    if builtin is None and table is None:
        kb.fail("builtin", f"[kb] needs 'builtin' ({', '.join(BUILTINS)}) or 'table'")
    if builtin is not None and table is not None:
        kb.fail("table", "[kb] takes either 'builtin' or 'table', not both")
    if builtin is not None and builtin not in BUILTINS:
        kb.fail("builtin", f"unknown builtin {builtin!r}; choose one of {', '.join(BUILTINS)}")
    m = kb.positive("m")
    if table is not None and m is None:
        m = len(table[0]) - 1
        if m < 1:
            kb.fail("table", "truth table rows need at least one concept and a label")
    if builtin is not None and m is not None:
        kb.fail("m", f"'m' applies to truth tables only; use n_digits for {builtin}")
    default_L = 2 if builtin == "xor" else 10
    kb_spec = KbSpec(
        builtin=builtin,
        L=kb.positive("L", default_L),
        n_digits=kb.positive("n_digits", 1),
        k=kb.get("k", int),
        m=m,
        table=table,
        pool=kb.rows("pool"),
    )
    if builtin is not None and builtin != "modadd" and kb_spec.k is not None:
        kb.fail("k", f"'k' applies to modadd only, not {builtin}")

    dist = _Reader(data.get("distribution", {}), "distribution", _DIST_KEYS, lines, source)
    kind = dist.get("kind", str, "uniform")
    if kind not in ("uniform", "weights"):
        dist.fail("kind", f"distribution.kind must be 'uniform' or 'weights', got {kind!r}")
    weights = dist.rows("weights", number=float)
    if kind == "weights" and weights is None:
        dist.fail("weights", "distribution.kind = 'weights' needs a weights array")
    if kind == "uniform" and weights is not None:
        dist.fail("weights", "weights are only read when distribution.kind = 'weights'")

    analysis = _Reader(data.get("analysis", {}), "analysis", _ANALYSIS_KEYS, lines, source)
    analysis_spec = AnalysisSpec(
        injective=analysis.get("injective", bool, True),
        pool_cap=analysis.positive("pool_cap"),
        solution_cap=analysis.positive("solution_cap"),
        a3_candidates=analysis.positive("a3_candidates", DEFAULT_A3_CANDIDATES),
    )
    return TaskSpec(name=name, kb=kb_spec, distribution=DistributionSpec(kind, weights),
                    analysis=analysis_spec, seed=seed, source=source, lines=lines)


def parse_task_file(path: Union[str, Path]) -> TaskSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise TaskSpecError(f"task file is not UTF-8 text: {exc}", source=str(path)) from exc
    return parse_task_text(text, source=str(path))


def _env_cap(variable: str) -> Optional[int]:
    raw = os.environ.get(variable)
    if raw is None or not raw.strip():
        return None
    try:
        value = int(raw.strip().replace("_", ""))
    except ValueError:
        raise TaskSpecError(f"{variable}={raw!r} is not an integer", source="environment") from None
    if value < 1:
        raise TaskSpecError(f"{variable} must be positive, got {value}", source="environment")
    return value


def resolve_caps(spec: Optional[TaskSpec] = None, pool_cap: Optional[int] = None,
                 solution_cap: Optional[int] = None) -> Tuple[int, int]:
    """Flag, then environment, then task file, then default; for both caps."""
    resolved = []
    for flag, variable, attr, default in (
        (pool_cap, POOL_CAP_ENV, "pool_cap", DEFAULT_POOL_CAP),
        (solution_cap, SOLUTION_CAP_ENV, "solution_cap", DEFAULT_SOLUTION_CAP),
    ):
        value = flag if flag is not None else _env_cap(variable)
        if value is None and spec is not None:
            value = getattr(spec.analysis, attr)
        resolved.append(default if value is None else value)
    return resolved[0], resolved[1]


def resolve_seed(spec: Optional[TaskSpec] = None, seed: Optional[int] = None) -> int:
    if seed is not None:
        return seed
    if spec is not None and spec.seed is not None:
        return spec.seed
    return DEFAULT_SEED


def build_index(spec: TaskSpec, kb: Optional[KnowledgeBase] = None,
                pool_cap: Optional[int] = None) -> AbductionIndex:
    kb = kb if kb is not None else load_kb(spec)
    return build_abduction_index(kb, cap=resolve_caps(spec, pool_cap=pool_cap)[0])


def build_distribution(spec: TaskSpec, index: AbductionIndex) -> ConceptDistribution:
    """P(Z) from the [distribution] table; weight problems point at the weights key."""
    if spec.distribution.kind == "uniform":
        return ConceptDistribution.uniform(index)
    m = index.kb.arity
    mapping: Dict[Tuple[int, ...], float] = {}
    try:
        for row in spec.distribution.weights or ():
            if len(row) != m + 1:
                raise DistributionError(f"weight row {list(row)} must list {m} concepts and one weight")
            z = tuple(int(v) for v in row[:-1])
            if z in mapping:
                raise DistributionError(f"sequence {z} is weighted twice")
            mapping[z] = float(row[-1])
        return ConceptDistribution.from_weights(index, mapping)
    except (DistributionError, DomainError) as exc:
        raise TaskSpecError(str(exc), line=spec.line_of("weights"), source=spec.source) from exc


def load_task(path: Union[str, Path], pool_cap: Optional[int] = None
              ) -> Tuple[TaskSpec, KnowledgeBase, AbductionIndex, ConceptDistribution]:
    """Parse a task file and build everything the analyses need from it."""
    spec = parse_task_file(path)
    kb = load_kb(spec)
    index = build_index(spec, kb, pool_cap=pool_cap)
    return spec, kb, index, build_distribution(spec, index)


__all__ = [
    "POOL_CAP_ENV",
    "SOLUTION_CAP_ENV",
    "KbSpec",
    "DistributionSpec",
    "AnalysisSpec",
    "TaskSpec",
    "parse_task_text",
    "parse_task_file",
    "resolve_caps",
    "resolve_seed",
    "build_index",
    "build_distribution",
    "load_task",
]
