"""
NeSyLearn Ensemble Module

Several tasks that share one concept space constrain the same cluster
variables. Merging their task-level DCSPs keeps exactly the assignments
every task accepts, so an ensemble can be learnable even when none of its
members is. The module also sweeps that effect over pairs of modular
addition tasks.

License: MIT
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from nesylearn.dcsp import (
    DEFAULT_SOLUTION_CAP,
    DcspConstraint,
    DcspInstance,
    LearnabilityReport,
    SolutionSpace,
    build_task_level,
    disagreement,
    solve_enumerate,
    verdict,
)
from nesylearn.errors import DomainError, NoSolutionError
from nesylearn.kb import DEFAULT_POOL_CAP, MODADD_MAX_K, KnowledgeBase, make_builtin

logger = logging.getLogger(__name__)

MODADD_MIN_K = 2
GRID_COLUMNS = ("k1", "k2", "d", "d_over_L", "num_solutions", "learnable", "complete")


@dataclass(frozen=True)
class EnsembleSpec:
    """Tasks analysed jointly over shared variables; arities may differ, L may not."""

    tasks: Tuple[KnowledgeBase, ...]
    name: str = ""

    def __post_init__(self):
        if not self.tasks:
            raise DomainError("an ensemble needs at least one task")
        sizes = {kb.concept_count for kb in self.tasks}
        if len(sizes) > 1:
            raise DomainError(f"ensemble tasks disagree on the concept count L: {sorted(sizes)}")
        if not self.name:
            object.__setattr__(self, "name", "+".join(kb.name for kb in self.tasks))

    @property
    def L(self) -> int:
        return self.tasks[0].concept_count

    @classmethod
    def modadd(cls, k1: int, k2: int, L: int = 10) -> "EnsembleSpec":
        return cls(tasks=(make_builtin("modadd", L=L, k=k1), make_builtin("modadd", L=L, k=k2)),
                   name=f"modadd{k1}+modadd{k2}")


def merge(specs: Union[EnsembleSpec, Iterable[KnowledgeBase]], injective: bool = True,
          pool_cap: int = DEFAULT_POOL_CAP, name: str = "") -> DcspInstance:
    """Union of the members' task-level constraints over one shared variable set.

    Each constraint keeps the index of the task it came from. A single task
    yields the same constraints as ``build_task_level``.
    """
    ensemble = specs if isinstance(specs, EnsembleSpec) else EnsembleSpec(tuple(specs), name=name)
    constraints = []
    for position, kb in enumerate(ensemble.tasks):
        for c in build_task_level(kb, injective=injective, cap=pool_cap).constraints:
            constraints.append(DcspConstraint(position, c.pattern, c.target))
    return DcspInstance(tasks=ensemble.tasks, constraints=tuple(sorted(set(constraints))),
                        L=ensemble.L, injective=injective, name=name or ensemble.name)


def analyze_ensemble(specs: Union[EnsembleSpec, Iterable[KnowledgeBase]], injective: bool = True,
                     pool_cap: int = DEFAULT_POOL_CAP,
                     solution_cap: int = DEFAULT_SOLUTION_CAP) -> Tuple[SolutionSpace, LearnabilityReport]:
    """Merge, enumerate and decide; learnable iff the merged space is a single assignment."""
    space = solve_enumerate(merge(specs, injective=injective, pool_cap=pool_cap), cap=solution_cap)
    report = verdict(space)
    logger.info("%s: %d solution(s), d=%d", space.name, report.num_solutions, report.d)
    return space, report


@dataclass(frozen=True)
class GridCell:
    k1: int
    k2: int
    d: Optional[int]
    L: int
    num_solutions: int
    complete: bool

    @property
    def d_over_L(self) -> Optional[float]:
        return None if self.d is None else self.d / self.L

    @property
    def learnable(self) -> Optional[bool]:
        if not self.complete:
            return None
        return self.num_solutions == 1

    def mirrored(self) -> "GridCell":
        return GridCell(self.k2, self.k1, self.d, self.L, self.num_solutions, self.complete)

    def to_row(self) -> Dict[str, Any]:
        return {
            "k1": self.k1,
            "k2": self.k2,
            "d": self.d,
            "d_over_L": self.d_over_L,
            "num_solutions": self.num_solutions,
            "learnable": self.learnable,
            "complete": self.complete,
        }


@dataclass(frozen=True)
class GridReport:
    """All ordered pairs (k1, k2) over ``k_values``, row-major."""

    k_values: Tuple[int, ...]
    L: int
    cells: Tuple[GridCell, ...]

    @property
    def capped(self) -> List[GridCell]:
        return [cell for cell in self.cells if not cell.complete]

    def cell(self, k1: int, k2: int) -> GridCell:
        n = len(self.k_values)
        return self.cells[self.k_values.index(k1) * n + self.k_values.index(k2)]

    def to_csv_rows(self) -> List[Dict[str, Any]]:
        return [cell.to_row() for cell in self.cells]

    def to_matrix(self, key: str = "d_over_L") -> np.ndarray:
        """Heatmap input: entry [i, j] holds ``key`` for (k_values[i], k_values[j]); NaN when capped."""
        n = len(self.k_values)
        matrix = np.full((n, n), np.nan)
        for index, cell in enumerate(self.cells):
            value = getattr(cell, key)
            if value is not None:
                matrix[index // n, index % n] = float(value)
        return matrix

    def matrix_rows(self, key: str = "d_over_L") -> List[Dict[str, Any]]:
        matrix = self.to_matrix(key)
        return [
            {"k": k, **{str(k2): matrix[i, j] for j, k2 in enumerate(self.k_values)}}
            for i, k in enumerate(self.k_values)
        ]


def _grid_cell(args: Tuple[int, int, int, bool, int]) -> GridCell:
    k1, k2, L, injective, cap = args
    tasks = [make_builtin("modadd", L=L, k=k1)]
    if k2 != k1:
        tasks.append(make_builtin("modadd", L=L, k=k2))
    space = solve_enumerate(merge(tasks, injective=injective), cap=cap)
    if not space.solutions:
        raise NoSolutionError(f"modadd{k1}+modadd{k2}: the merged DCSP has no solution")
    d = disagreement(space)[0] if space.complete else None
    logger.debug("grid cell (%d, %d): %d solution(s), complete=%s", k1, k2, space.num_solutions,
                 space.complete)
    return GridCell(k1, k2, d, L, space.num_solutions, space.complete)


def ensemble_grid(k_range: Sequence[int], L: int = 10, injective: bool = True,
                  cap: int = DEFAULT_SOLUTION_CAP, workers: int = 1) -> GridReport:
    """d/L and solution counts for every pair of ModAdd(k1), ModAdd(k2).

    The diagonal is the single-task analysis. Each unordered pair is solved
    once and mirrored; cells whose enumeration hit ``cap`` are reported with
    ``complete`` false and no d.
    """
    k_values = tuple(sorted(set(int(k) for k in k_range)))
    if not k_values:
        raise DomainError("the k range is empty")
    outside = [k for k in k_values if not MODADD_MIN_K <= k <= MODADD_MAX_K]
    if outside:
        raise DomainError(f"k values must lie in [{MODADD_MIN_K}, {MODADD_MAX_K}], got {outside}")

    pairs = [(k1, k2) for i, k1 in enumerate(k_values) for k2 in k_values[i:]]
    jobs = [(k1, k2, L, injective, cap) for k1, k2 in pairs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(_grid_cell, jobs))
    else:
        solved = [_grid_cell(job) for job in jobs]

    by_pair: Dict[Tuple[int, int], GridCell] = {}
    for cell in solved:
        by_pair[(cell.k1, cell.k2)] = cell
        by_pair[(cell.k2, cell.k1)] = cell.mirrored()
    cells = tuple(by_pair[(k1, k2)] for k1 in k_values for k2 in k_values)
    report = GridReport(k_values=k_values, L=L, cells=cells)
    if report.capped:
        logger.warning("%d grid cell(s) hit the solution cap of %d", len(report.capped), cap)
    logger.info("ensemble grid over k=%s finished", list(k_values))
    return report


__all__ = [
    "GRID_COLUMNS",
    "EnsembleSpec",
    "GridCell",
    "GridReport",
    "merge",
    "analyze_ensemble",
    "ensemble_grid",
]
