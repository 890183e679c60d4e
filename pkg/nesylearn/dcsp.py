"""
NeSyLearn DCSP Module

Builds the derived constraint satisfaction problem of a task, enumerates
its complete solution space and computes Union(S) and the disagreement d.

Variables V_0..V_{L-1} stand for the L input clusters, indexed by their
ground-truth concept, so the reference labeling is always the identity
assignment. A constraint (pattern, target) requires
forward(assignment applied to pattern) == target.

License: MIT
"""

import itertools
import logging
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from nesylearn.errors import ArityError, DomainError, NoSolutionError, VerdictWithheldError
from nesylearn.kb import DEFAULT_POOL_CAP, AbductionIndex, KnowledgeBase, Label, build_abduction_index

logger = logging.getLogger(__name__)

ClusterSeq = Tuple[int, ...]
Solution = Tuple[int, ...]
Assignment = FrozenSet[Tuple[int, int]]

DEFAULT_SOLUTION_CAP = 10**6
DEFAULT_LISTED = 64
BRUTE_FORCE_MAX_L = 8


@dataclass(frozen=True, order=True)
class DcspConstraint:
    """``forward_task(V(pattern)) == target``; ``task`` indexes ``DcspInstance.tasks``."""

    task: int
    pattern: ClusterSeq
    target: Label


@dataclass(frozen=True, eq=False)
class DcspInstance:
    """The triple <V, D, C>: L variables over the concept set, plus constraints."""

    tasks: Tuple[KnowledgeBase, ...]
    constraints: Tuple[DcspConstraint, ...]
    L: int
    injective: bool = True
    name: str = ""

    @property
    def domain(self) -> range:
        return range(self.L)

    @property
    def key(self) -> Tuple[Any, ...]:
        """Hashable identity of the constraint set (tasks are compared by identity)."""
        return (tuple(id(kb) for kb in self.tasks), self.L, self.injective, self.constraints)

    def satisfies(self, assignment: Sequence[int]) -> bool:
        """Check a full assignment against every constraint and the all-different flag."""
        if len(assignment) != self.L:
            return False
        if self.injective and len(set(assignment)) != self.L:
            return False
        for c in self.constraints:
            kb = self.tasks[c.task]
            if kb.evaluate(tuple(assignment[p] for p in c.pattern)) != c.target:
                return False
        return True


def _dedupe(constraints: Iterable[DcspConstraint]) -> Tuple[DcspConstraint, ...]:
    return tuple(sorted(set(constraints)))


def _check_pattern(kb: KnowledgeBase, pattern: Sequence[int]) -> ClusterSeq:
    pattern = tuple(int(c) for c in pattern)
    if len(pattern) != kb.arity:
        raise ArityError(f"{kb.name}: pattern {pattern} has length {len(pattern)}, expected {kb.arity}")
    for c in pattern:
        if not 0 <= c < kb.concept_count:
            raise DomainError(f"{kb.name}: cluster index {c} outside [0, {kb.concept_count})")
    return pattern


def build_from_dataset(kb: KnowledgeBase, data: Iterable[Tuple[Sequence[int], Label]],
                       injective: bool = True) -> DcspInstance:
    """One constraint per (pattern, label) sample; duplicates collapse.

    Labels outside the task's label space are rejected. A consistent-looking
    dataset may still be unsatisfiable; that surfaces as an empty solution
    space, not here.
    """
    labels = set(kb.label_space)
    constraints = []
    for pattern, label in data:
        pattern = _check_pattern(kb, pattern)
        label = int(label)
        if label not in labels:
            raise DomainError(f"{kb.name}: label {label} is not produced by the knowledge base")
        constraints.append(DcspConstraint(0, pattern, label))
    return DcspInstance(tasks=(kb,), constraints=_dedupe(constraints), L=kb.concept_count,
                        injective=injective, name=kb.name)


def build_task_level(kb: KnowledgeBase, injective: bool = True, cap: int = DEFAULT_POOL_CAP,
                     index: Optional[AbductionIndex] = None) -> DcspInstance:
    """The infinite-data instance: one constraint (z, forward(z)) per z in B."""
    if index is None:
        index = build_abduction_index(kb, cap=cap)
    constraints = tuple(DcspConstraint(0, z, index.label_of(z)) for z in index.pool)
    return DcspInstance(tasks=(kb,), constraints=_dedupe(constraints), L=kb.concept_count,
                        injective=injective, name=kb.name)


class _Search:
    """Chronological backtracking with forward checking, ascending variable and value order.

    With a fixed variable order every constraint touching two or more
    variables becomes forward-checkable exactly when its second-highest
    variable is assigned; it is scheduled there and prunes the domain of its
    highest variable. Single-variable constraints are applied at the root.
    """

    def __init__(self, inst: DcspInstance):
        self.inst = inst
        self.L = inst.L
        self.schedule: List[List[Tuple[DcspConstraint, int]]] = [[] for _ in range(self.L)]
        self.unary: List[Tuple[DcspConstraint, int]] = []
        self._allowed_cache: Dict[Tuple[Any, ...], FrozenSet[int]] = {}
        for c in inst.constraints:
            variables = sorted(set(c.pattern))
            if len(variables) == 1:
                self.unary.append((c, variables[0]))
            else:
                self.schedule[variables[-2]].append((c, variables[-1]))
        self.nodes = 0

    def _allowed(self, c: DcspConstraint, free: int, assignment: List[int]) -> FrozenSet[int]:
        template = tuple(-1 if p == free else assignment[p] for p in c.pattern)
        key = (c.task, c.target, template)
        allowed = self._allowed_cache.get(key)
        if allowed is None:
            kb = self.inst.tasks[c.task]
            allowed = frozenset(
                u for u in range(self.L)
                if kb.evaluate(tuple(u if t == -1 else t for t in template)) == c.target
            )
            self._allowed_cache[key] = allowed
        return allowed

    def run(self) -> Iterator[Solution]:
        domains = [frozenset(range(self.L)) for _ in range(self.L)]
        assignment = [-1] * self.L
        for c, var in self.unary:
            domains[var] = domains[var] & self._allowed(c, var, assignment)
            if not domains[var]:
                return
        yield from self._extend(0, assignment, domains)

    def _extend(self, i: int, assignment: List[int], domains: List[FrozenSet[int]]) -> Iterator[Solution]:
        if i == self.L:
            yield tuple(assignment)
            return
        for value in sorted(domains[i]):
            self.nodes += 1
            assignment[i] = value
            pruned = list(domains)
            consistent = True
            if self.inst.injective:
                for j in range(i + 1, self.L):
                    if value in pruned[j]:
                        pruned[j] = pruned[j] - {value}
                        if not pruned[j]:
                            consistent = False
                            break
            if consistent:
                for c, free in self.schedule[i]:
                    narrowed = pruned[free] & self._allowed(c, free, assignment)
                    if not narrowed:
                        consistent = False
                        break
                    pruned[free] = narrowed
            if consistent:
                yield from self._extend(i + 1, assignment, pruned)
        assignment[i] = -1


@dataclass(frozen=True)
class SolutionSpace:
    """The enumerated solutions of one instance, in enumeration order.

    ``complete`` is False only when the enumeration cap fired; the space then
    holds the first ``cap`` solutions.
    """

    L: int
    solutions: Tuple[Solution, ...]
    complete: bool = True
    injective: bool = True
    name: str = ""
    cap: Optional[int] = None
    runtime_ms: float = field(default=0.0, compare=False)

    @property
    def num_solutions(self) -> int:
        return len(self.solutions)

    @cached_property
    def union(self) -> Assignment:
        return disagreement(self)[1]

    @property
    def d(self) -> int:
        return disagreement(self)[0]

    def to_dict(self, max_listed: int = DEFAULT_LISTED) -> Dict[str, Any]:
        """JSON-ready form; solution lists longer than ``max_listed`` are elided."""
        payload: Dict[str, Any] = {
            "task": self.name,
            "num_solutions": self.num_solutions,
            "L": self.L,
            "complete": self.complete,
            "injective": self.injective,
        }
        if self.solutions:
            payload["d"] = self.d
            payload["union"] = [list(pair) for pair in sorted(self.union)]
        else:
            payload["d"] = None
            payload["union"] = []
        elided = self.num_solutions > max_listed
        payload["solutions_elided"] = elided
        payload["solutions"] = [] if elided else [list(s) for s in self.solutions]
        return payload


def solve_enumerate(inst: DcspInstance, cap: int = DEFAULT_SOLUTION_CAP) -> SolutionSpace:
    """Enumerate every satisfying assignment, stopping once more than ``cap`` exist.

    An empty result is valid: it reports that the No Conflict assumption
    fails for this instance.
    """
    if cap < 1:
        raise ValueError(f"solution cap must be at least 1, got {cap}")
    started = time.perf_counter()
    search = _Search(inst)
    solutions: List[Solution] = []
    complete = True
    for solution in search.run():
        if len(solutions) == cap:
            complete = False
            break
        solutions.append(solution)
    runtime_ms = (time.perf_counter() - started) * 1000.0

    if not complete:
        logger.warning("%s: enumeration stopped at the cap of %d solutions", inst.name or "dcsp", cap)
    logger.debug("%s: %d solutions (complete=%s) after %d nodes in %.1f ms",
                 inst.name or "dcsp", len(solutions), complete, search.nodes, runtime_ms)
    return SolutionSpace(L=inst.L, solutions=tuple(solutions), complete=complete,
                         injective=inst.injective, name=inst.name, cap=cap, runtime_ms=runtime_ms)


def disagreement(space: SolutionSpace) -> Tuple[int, Assignment]:
    """Return ``(d, Union(S))`` with d = L - |Union(S)|."""
    if not space.solutions:
        raise NoSolutionError(f"{space.name or 'dcsp'}: the solution space is empty")
    table = np.asarray(space.solutions, dtype=np.int64)
    agreed = np.all(table == table[0], axis=0)
    union = frozenset((int(i), int(table[0, i])) for i in np.flatnonzero(agreed))
    return space.L - len(union), union


def concept_error(solution: Sequence[int]) -> float:
    """Fraction of clusters whose assigned concept differs from the identity."""
    return sum(1 for i, v in enumerate(solution) if i != v) / len(solution)


def expected_concept_error(space: SolutionSpace) -> float:
    """Mean concept error of a solution drawn uniformly from the space."""
    if not space.solutions:
        raise NoSolutionError(f"{space.name or 'dcsp'}: the solution space is empty")
    table = np.asarray(space.solutions, dtype=np.int64)
    wrong = table != np.arange(space.L)
    return float(wrong.mean())


@dataclass(frozen=True)
class LearnabilityReport:
    task: str
    learnable: bool
    d: int
    L: int
    num_solutions: int
    expected_error: float
    union: Assignment
    injective: bool = True
    assumptions: Tuple[str, ...] = ()

    @property
    def error_bound(self) -> float:
        return self.d / self.L

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "learnable": self.learnable,
            "d": self.d,
            "L": self.L,
            "error_bound": self.error_bound,
            "d_over_L": self.error_bound,
            "num_solutions": self.num_solutions,
            "expected_error": self.expected_error,
            "union": [list(pair) for pair in sorted(self.union)],
            "injective": self.injective,
            "assumptions": list(self.assumptions),
        }


def verdict(space: SolutionSpace) -> LearnabilityReport:
    """Learnable iff the complete solution space is a single assignment."""
    if not space.complete:
        raise VerdictWithheldError(
            f"{space.name or 'dcsp'}: only {space.num_solutions} solutions were enumerated before the "
            f"cap of {space.cap}; uniqueness cannot be decided")
    d, union = disagreement(space)
    assumptions = ["clusters are indexed by their ground-truth concept (identity is the reference)"]
    if space.injective:
        assumptions.append("assignments are injective (restricted hypothesis space)")
    else:
        assumptions.append("assignments may map several clusters to one concept")
    return LearnabilityReport(
        task=space.name,
        learnable=space.num_solutions == 1,
        d=d,
        L=space.L,
        num_solutions=space.num_solutions,
        expected_error=expected_concept_error(space),
        union=union,
        injective=space.injective,
        assumptions=tuple(assumptions),
    )


def analyze_task(kb: KnowledgeBase, injective: bool = True, pool_cap: int = DEFAULT_POOL_CAP,
                 solution_cap: int = DEFAULT_SOLUTION_CAP) -> Tuple[SolutionSpace, LearnabilityReport]:
    """Task-level pipeline: build, enumerate and decide."""
    space = solve_enumerate(build_task_level(kb, injective=injective, cap=pool_cap), cap=solution_cap)
    report = verdict(space)
    logger.info("%s: %d solution(s), d=%d, learnable=%s", kb.name, report.num_solutions, report.d,
                report.learnable)
    return space, report


def brute_force_solutions(inst: DcspInstance) -> List[Solution]:
    """Exhaustive oracle over all L! injective (or L^L) assignments, for small L."""
    if inst.L > BRUTE_FORCE_MAX_L:
        raise ValueError(f"brute force is limited to L <= {BRUTE_FORCE_MAX_L}, got {inst.L}")
    if inst.injective:
        candidates = itertools.permutations(range(inst.L))
    else:
        candidates = itertools.product(range(inst.L), repeat=inst.L)
    return [tuple(a) for a in candidates if inst.satisfies(a)]


__all__ = [
    "ClusterSeq",
    "Solution",
    "DEFAULT_SOLUTION_CAP",
    "DcspConstraint",
    "DcspInstance",
    "SolutionSpace",
    "LearnabilityReport",
    "build_from_dataset",
    "build_task_level",
    "solve_enumerate",
    "disagreement",
    "verdict",
    "concept_error",
    "expected_concept_error",
    "analyze_task",
    "brute_force_solutions",
]
