"""
NeSyLearn Knowledge Base Module

Concept and label spaces, the logical forward operator of a task and the
abduction structures derived from it: the candidate pool B and the
abduction sets A(y) = {z in B : forward(z) = y}.

A knowledge base is a finite function over Z^m. Built-in programs cover
the arithmetic tasks (add, mul, modadd, with multi-digit operands split
into two contiguous halves) and XOR; anything else can be given as an
explicit truth table.

License: MIT
"""

import itertools
import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from nesylearn.errors import (
    ArityError,
    BudgetExceededError,
    DistributionError,
    DomainError,
    TaskSpecError,
    TruthTableError,
)
from nesylearn.utils import digits_to_number, hamming, split_list

if TYPE_CHECKING:
    from nesylearn.taskspec import TaskSpec

logger = logging.getLogger(__name__)

Concept = int
ConceptSeq = Tuple[int, ...]
Label = int

BUILTINS = ("add", "mul", "xor", "modadd")
DEFAULT_POOL_CAP = 10**6
MODADD_MAX_K = 10


def _forward_add(z: ConceptSeq, k: Optional[int]) -> Label:
    nums1, nums2 = split_list(z)
    return digits_to_number(nums1) + digits_to_number(nums2)


def _forward_mul(z: ConceptSeq, k: Optional[int]) -> Label:
    nums1, nums2 = split_list(z)
    return digits_to_number(nums1) * digits_to_number(nums2)


def _forward_xor(z: ConceptSeq, k: Optional[int]) -> Label:
    return z[0] ^ z[1]


def _forward_modadd(z: ConceptSeq, k: Optional[int]) -> Label:
    nums1, nums2 = split_list(z)
    return (digits_to_number(nums1) + digits_to_number(nums2)) % k


_PROGRAMS = {
    "add": _forward_add,
    "mul": _forward_mul,
    "xor": _forward_xor,
    "modadd": _forward_modadd,
}


@dataclass(frozen=True, eq=False)
class KnowledgeBase:
    """A task's forward operator over Z^m, with Z = {0, ..., L-1}.

    Exactly one of ``builtin`` and ``table`` is set. ``pool`` optionally
    restricts the candidate pool B; by default B is the whole grid Z^m.
    """

    name: str
    arity: int
    concept_count: int
    builtin: Optional[str] = None
    k: Optional[int] = None
    table: Optional[Mapping[ConceptSeq, Label]] = None
    pool: Optional[Tuple[ConceptSeq, ...]] = None
    _memo: Dict[ConceptSeq, Label] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.arity < 1:
            raise ArityError(f"arity must be positive, got {self.arity}")
        if self.concept_count < 1:
            raise DomainError(f"concept count L must be positive, got {self.concept_count}")
        if (self.builtin is None) == (self.table is None):
            raise TaskSpecError("a knowledge base needs exactly one of a builtin program or a truth table")
        if self.builtin is not None:
            self._check_builtin()
        if self.pool is not None:
            if not self.pool:
                raise DomainError("a restricted pool must not be empty")
            for z in self.pool:
                self.validate(z)

    def _check_builtin(self) -> None:
        if self.builtin not in _PROGRAMS:
            raise TaskSpecError(f"unknown builtin {self.builtin!r}; choose one of {', '.join(BUILTINS)}")
        if self.builtin == "xor":
            if self.arity != 2 or self.concept_count != 2:
                raise TaskSpecError("xor is defined for L=2 and m=2 only")
        elif self.arity % 2:
            raise ArityError(f"{self.builtin} needs an even arity (2 * n_digits), got {self.arity}")
        if self.builtin == "modadd":
            if self.k is None or self.k < 2:
                raise TaskSpecError(f"modadd requires k >= 2, got {self.k}")
            if self.k > MODADD_MAX_K:
                warnings.warn(f"modadd with k={self.k} lies outside the studied range 2 <= k <= 10",
                              stacklevel=3)

    @property
    def m(self) -> int:
        return self.arity

    @property
    def L(self) -> int:
        return self.concept_count

    def validate(self, z: Sequence[int]) -> ConceptSeq:
        """Return ``z`` as a tuple, raising if its length or ids are out of range."""
        z = tuple(int(v) for v in z)
        if len(z) != self.arity:
            raise ArityError(f"{self.name}: expected {self.arity} concepts, got {len(z)}")
        for v in z:
            if not 0 <= v < self.concept_count:
                raise DomainError(f"{self.name}: concept id {v} outside [0, {self.concept_count})")
        return z

    def forward(self, z: Sequence[int]) -> Label:
        """Validated forward operator."""
        return self.evaluate(self.validate(z))

    def evaluate(self, z: ConceptSeq) -> Label:
        """Unchecked, memoised forward operator for tuples already known to be valid."""
        label = self._memo.get(z)
        if label is None:
            if self.table is not None:
                label = self.table[z]
            else:
                label = _PROGRAMS[self.builtin](z, self.k)
            self._memo[z] = label
        return label

    @cached_property
    def label_space(self) -> Tuple[Label, ...]:
        return build_abduction_index(self).labels

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "builtin": self.builtin or "table",
            "k": self.k,
            "L": self.concept_count,
            "m": self.arity,
            "pool_restricted": self.pool is not None,
        }


@dataclass(frozen=True)
class AbductionIndex:
    """The candidate pool B and its partition into abduction sets A(y).

    Sequences are kept in lexicographic order, which is also the tie-break
    order used by abduction.
    """

    kb: KnowledgeBase
    pool: Tuple[ConceptSeq, ...]
    by_label: Mapping[Label, Tuple[ConceptSeq, ...]]

    @property
    def labels(self) -> Tuple[Label, ...]:
        return tuple(sorted(self.by_label))

    @property
    def size(self) -> int:
        return len(self.pool)

    def abduction_set(self, y: Label) -> Tuple[ConceptSeq, ...]:
        """A(y); empty for labels no pool sequence produces."""
        return self.by_label.get(y, ())

    def label_of(self, z: ConceptSeq) -> Label:
        return self.kb.evaluate(z)


@dataclass(frozen=True, eq=False)
class ConceptDistribution:
    """P(Z) over the candidate pool, aligned with ``index.pool``.

    Every sequence in B must carry a weight of at least ``kappa > 0``, so a
    point mass (or any weight table that misses part of B) is rejected.
    """

    index: AbductionIndex
    probs: np.ndarray
    kind: str = "weights"

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (self.index.size,):
            raise DistributionError(f"expected {self.index.size} weights, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise DistributionError("weights must be finite and non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise DistributionError(f"weights sum to {total!r}, not 1")
        if np.any(probs <= 0):
            first = self.index.pool[int(np.flatnonzero(probs <= 0)[0])]
            raise DistributionError(f"sequence {first} in B has zero probability")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, index: AbductionIndex) -> "ConceptDistribution":
        return cls(index=index, probs=np.full(index.size, 1.0 / index.size), kind="uniform")

    @classmethod
    def from_weights(cls, index: AbductionIndex,
                     weights: Mapping[Sequence[int], float]) -> "ConceptDistribution":
        """Weights keyed by concept sequence; every member of B must be listed."""
        position = {z: i for i, z in enumerate(index.pool)}
        probs = np.zeros(index.size)
        for z, w in weights.items():
            z = tuple(int(v) for v in z)
            if z not in position:
                raise DomainError(f"weighted sequence {z} is not in the candidate pool")
            probs[position[z]] = float(w)
        return cls(index=index, probs=probs, kind="weights")

    @property
    def kb(self) -> KnowledgeBase:
        return self.index.kb

    @property
    def kappa(self) -> float:
        return float(self.probs.min())

    @property
    def support_size(self) -> int:
        return self.index.size

    @property
    def weights(self) -> Dict[ConceptSeq, float]:
        return {z: float(p) for z, p in zip(self.index.pool, self.probs)}


def build_abduction_index(kb: KnowledgeBase, cap: int = DEFAULT_POOL_CAP) -> AbductionIndex:
    """Enumerate B (the full grid Z^m unless the KB restricts it) and group it by label."""
    if kb.pool is not None:
        if len(kb.pool) > cap:
            raise BudgetExceededError(f"{kb.name}: restricted pool has {len(kb.pool)} sequences", cap)
        pool = tuple(sorted(set(kb.pool)))
    else:
        size = kb.concept_count ** kb.arity
        if size > cap:
            raise BudgetExceededError(
                f"{kb.name}: |B| = {kb.concept_count}^{kb.arity} = {size} is too large to enumerate", cap)
        pool = tuple(itertools.product(range(kb.concept_count), repeat=kb.arity))

    groups: Dict[Label, List[ConceptSeq]] = {}
    for z in pool:
        groups.setdefault(kb.evaluate(z), []).append(z)
    by_label = {y: tuple(zs) for y, zs in sorted(groups.items())}
    logger.debug("abduction index for %s: |B|=%d, |Y|=%d", kb.name, len(pool), len(by_label))
    return AbductionIndex(kb=kb, pool=pool, by_label=by_label)


def make_builtin(builtin: str, L: int = 10, n_digits: int = 1, k: Optional[int] = None,
                 name: Optional[str] = None, pool: Optional[Iterable[Sequence[int]]] = None) -> KnowledgeBase:
    """Construct one of the built-in knowledge bases.

    Example:
        >>> make_builtin("modadd", k=9).forward((9, 9))
        0
    """
    if builtin == "xor":
        L, arity = 2, 2
    else:
        if n_digits < 1:
            raise ArityError(f"n_digits must be positive, got {n_digits}")
        arity = 2 * n_digits
    if name is None:
        name = f"modadd{k}" if builtin == "modadd" else builtin
    return KnowledgeBase(
        name=name,
        arity=arity,
        concept_count=L,
        builtin=builtin,
        k=k if builtin == "modadd" else None,
        pool=tuple(tuple(int(v) for v in z) for z in pool) if pool is not None else None,
    )


def from_table(name: str, L: int, m: int, rows: Iterable[Sequence[int]],
               pool: Optional[Iterable[Sequence[int]]] = None) -> KnowledgeBase:
    """Build a knowledge base from rows ``(z_1, ..., z_m, label)`` covering all of Z^m."""
    table: Dict[ConceptSeq, Label] = {}
    for row in rows:
        row = tuple(int(v) for v in row)
        if len(row) != m + 1:
            raise TruthTableError(f"truth table row {row} must have {m} concepts and one label")
        z, label = row[:-1], row[-1]
        if any(not 0 <= v < L for v in z):
            raise TruthTableError(f"truth table row {row} uses a concept outside [0, {L})")
        if z in table:
            raise TruthTableError(f"truth table lists {z} twice")
        table[z] = label
    missing = L**m - len(table)
    if missing:
        first = next(z for z in itertools.product(range(L), repeat=m) if z not in table)
        raise TruthTableError(f"truth table is not total: {missing} of {L**m} sequences missing, e.g. {first}")
    return KnowledgeBase(
        name=name,
        arity=m,
        concept_count=L,
        table=table,
        pool=tuple(tuple(int(v) for v in z) for z in pool) if pool is not None else None,
    )


def forward(kb: KnowledgeBase, z: Sequence[int]) -> Label:
    """Apply the forward operator of ``kb`` to a concept sequence."""
    return kb.forward(z)


def load_kb(spec: "TaskSpec") -> KnowledgeBase:
    """Turn a parsed task file into a validated knowledge base.

    Errors carry the line of the key at fault when the spec knows it.
    """
    kb_spec = spec.kb
    try:
        if kb_spec.table is not None:
            return from_table(spec.name, kb_spec.L, kb_spec.m, kb_spec.table, pool=kb_spec.pool)
        return make_builtin(kb_spec.builtin, L=kb_spec.L, n_digits=kb_spec.n_digits, k=kb_spec.k,
                            name=spec.name, pool=kb_spec.pool)
    except TaskSpecError as exc:
        if exc.line is not None:
            raise
        key = "table" if kb_spec.table is not None else "builtin"
        if kb_spec.builtin == "modadd" and (kb_spec.k is None or kb_spec.k < 2):
            key = "k"
        raise type(exc)(str(exc), line=spec.line_of(key), source=spec.source) from exc
    except (ArityError, DomainError) as exc:
        raise TaskSpecError(str(exc), line=spec.line_of("kb"), source=spec.source) from exc


def ambiguity_witness(index: AbductionIndex) -> Dict[str, Any]:
    """Show why an ambiguous task needs a restricted hypothesis space.

    A task is ambiguous when some A(y) holds two or more sequences. The
    witness maps every z in B to another member of A(forward(z)) whenever
    one exists: a hypothesis that memorises per sequence reaches zero NeSy
    risk with it while its concept error stays positive.
    """
    ambiguous_labels = [y for y, zs in index.by_label.items() if len(zs) >= 2]
    witness: Dict[ConceptSeq, ConceptSeq] = {}
    wrong = 0
    for z in index.pool:
        candidates = index.abduction_set(index.label_of(z))
        other = next((c for c in candidates if c != z), z)
        witness[z] = other
        wrong += hamming(z, other)
    error = wrong / (index.size * index.kb.arity)
    return {
        "task": index.kb.name,
        "ambiguous": bool(ambiguous_labels),
        "ambiguous_labels": ambiguous_labels,
        "witness": witness,
        "witness_nesy_error": 0.0,
        "witness_concept_error": error,
    }


__all__ = [
    "Concept",
    "ConceptSeq",
    "Label",
    "BUILTINS",
    "DEFAULT_POOL_CAP",
    "KnowledgeBase",
    "AbductionIndex",
    "ConceptDistribution",
    "build_abduction_index",
    "make_builtin",
    "from_table",
    "forward",
    "load_kb",
    "ambiguity_witness",
]
