"""
NeSyLearn Simulation Module

Monte Carlo counterpart of the learnability results. Under the restricted
hypothesis space, empirical NeSy risk minimisation on a sampled dataset is
exactly: build the dataset DCSP, enumerate its solutions, pick one.
This module samples datasets, runs that procedure with seeded tie-breaking,
sweeps it over sample sizes and checks the sample-complexity and
average-error bounds against what it observes.

Randomness: trial i of a run draws everything from
``numpy.random.default_rng(trial_seed(base_seed, i))``, so results do not
depend on execution order or worker count.

License: MIT
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from nesylearn.dcsp import (
    DEFAULT_SOLUTION_CAP,
    ClusterSeq,
    Solution,
    SolutionSpace,
    build_from_dataset,
    build_task_level,
    concept_error,
    solve_enumerate,
    verdict,
)
from nesylearn.errors import DistributionError, NoSolutionError
from nesylearn.kb import ConceptDistribution, KnowledgeBase, Label
from nesylearn.risks import Predictor, nesy_risk

logger = logging.getLogger(__name__)

DEFAULT_SEED = 2023
CONFIDENCE = 0.99

TRIAL_COLUMNS = ("task", "seed", "N", "num_solutions", "concept_error", "nesy_error", "covered",
                 "runtime_ms")
SUMMARY_COLUMNS = ("task", "N", "mean_acc", "stderr", "bound_line", "reasoning_acc",
                   "reasoning_stderr", "coverage_rate", "capped_trials")


def trial_seed(base_seed: int, index: int) -> int:
    """Independent per-trial seed derived from ``(base_seed, index)``."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1)[0])


def clopper_pearson(k: int, n: int, confidence: float = CONFIDENCE) -> Tuple[float, float]:
    """Exact two-sided binomial confidence interval for k successes in n trials."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    alpha = 1.0 - confidence
    low = float(stats.beta.ppf(alpha / 2, k, n - k + 1)) if k > 0 else 0.0
    high = float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k)) if k < n else 1.0
    return low, high


def _stderr(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(values.std(ddof=1) / math.sqrt(values.size))


def _draw(dist: ConceptDistribution, N: int, rng: np.random.Generator) -> np.ndarray:
    if N < 1:
        raise ValueError(f"sample size must be at least 1, got {N}")
    return rng.choice(dist.support_size, size=N, p=dist.probs)


def sample_dataset(dist: ConceptDistribution, N: int, seed: int) -> List[Tuple[ClusterSeq, Label]]:
    """N i.i.d. draws z ~ dist, each emitted as (z as cluster sequence, forward(z))."""
    rng = np.random.default_rng(seed)
    pool = dist.index.pool
    return [(pool[i], dist.index.label_of(pool[i])) for i in _draw(dist, N, rng)]


@dataclass(frozen=True)
class TrialReport:
    task: str
    seed: int
    N: int
    num_solutions: int
    chosen_solution: Solution
    concept_error: float
    nesy_error: float
    covered: bool
    capped: bool = False
    runtime_ms: float = field(default=0.0, compare=False)

    def to_row(self, timings: bool = False) -> Dict[str, Any]:
        return {
            "task": self.task,
            "seed": self.seed,
            "N": self.N,
            "num_solutions": self.num_solutions,
            "concept_error": self.concept_error,
            "nesy_error": self.nesy_error,
            "covered": int(self.covered),
            "runtime_ms": round(self.runtime_ms, 3) if timings else 0,
        }


class _SolveCache:
    """Solutions and NeSy errors already computed within one run.

    Covered datasets all produce the task-level instance, so most trials at
    large N share a single enumeration.
    """

    def __init__(self):
        self.spaces: Dict[Any, SolutionSpace] = {}
        self.nesy: Dict[Solution, float] = {}

    def space(self, key: Any, solve) -> SolutionSpace:
        space = self.spaces.get(key)
        if space is None:
            space = self.spaces[key] = solve()
        return space

    def nesy_error(self, kb: KnowledgeBase, dist: ConceptDistribution, solution: Solution) -> float:
        value = self.nesy.get(solution)
        if value is None:
            value = self.nesy[solution] = nesy_risk(Predictor.from_assignment(solution), kb, dist)
        return value


def erm_trial(kb: KnowledgeBase, dist: ConceptDistribution, N: int, seed: int,
              injective: bool = True, cap: int = DEFAULT_SOLUTION_CAP,
              cache: Optional[_SolveCache] = None) -> TrialReport:
    """Sample N pairs, solve the dataset DCSP and pick a solution uniformly at random."""
    if dist.kb is not kb:
        raise DistributionError(f"distribution was built for {dist.kb.name!r}, not {kb.name!r}")
    cache = cache if cache is not None else _SolveCache()
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    seen = np.unique(_draw(dist, N, rng))
    pool = dist.index.pool
    inst = build_from_dataset(kb, [(pool[i], dist.index.label_of(pool[i])) for i in seen],
                              injective=injective)
    space = cache.space((inst.constraints, injective, cap), lambda: solve_enumerate(inst, cap=cap))
    if not space.solutions:
        raise NoSolutionError(f"{kb.name}: a realizable dataset produced an unsatisfiable DCSP")
    chosen = space.solutions[int(rng.integers(space.num_solutions))]
    report = TrialReport(
        task=kb.name,
        seed=seed,
        N=N,
        num_solutions=space.num_solutions,
        chosen_solution=chosen,
        concept_error=concept_error(chosen),
        nesy_error=cache.nesy_error(kb, dist, chosen),
        covered=seen.size == dist.support_size,
        capped=not space.complete,
        runtime_ms=(time.perf_counter() - started) * 1000.0,
    )
    if report.capped:
        logger.warning("%s: trial seed=%d at N=%d hit the solution cap", kb.name, seed, N)
    return report


@dataclass(frozen=True)
class SweepPoint:
    N: int
    repeats: int
    mean_acc: float
    stderr: float
    reasoning_acc: float
    reasoning_stderr: float
    coverage_rate: float
    capped_trials: int


@dataclass(frozen=True)
class SweepResult:
    """Per-N accuracy summaries plus the asymptotic line 1 - d/L."""

    task: str
    d: int
    L: int
    expected_error: float
    points: Tuple[SweepPoint, ...]
    trials: Tuple[TrialReport, ...]
    assumptions: Tuple[str, ...] = ()

    @property
    def bound_line(self) -> float:
        return 1.0 - self.d / self.L

    @property
    def capped_trials(self) -> int:
        return sum(p.capped_trials for p in self.points)

    def summary_rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "task": self.task,
                "N": p.N,
                "mean_acc": p.mean_acc,
                "stderr": p.stderr,
                "bound_line": self.bound_line,
                "reasoning_acc": p.reasoning_acc,
                "reasoning_stderr": p.reasoning_stderr,
                "coverage_rate": p.coverage_rate,
                "capped_trials": p.capped_trials,
            }
            for p in self.points
        ]


def _summarise(N: int, trials: Sequence[TrialReport]) -> SweepPoint:
    acc = np.array([1.0 - t.concept_error for t in trials])
    reasoning = np.array([1.0 - t.nesy_error for t in trials])
    return SweepPoint(
        N=N,
        repeats=len(trials),
        mean_acc=float(acc.mean()),
        stderr=_stderr(acc),
        reasoning_acc=float(reasoning.mean()),
        reasoning_stderr=_stderr(reasoning),
        coverage_rate=float(np.mean([t.covered for t in trials])),
        capped_trials=sum(t.capped for t in trials),
    )


def _run_point(args: Tuple[Any, ...]) -> List[TrialReport]:
    kb, dist, N, seeds, injective, cap, seeded = args
    cache = _SolveCache()
    if seeded is not None:
        cache.spaces.update(seeded)
    return [erm_trial(kb, dist, N, seed, injective=injective, cap=cap, cache=cache) for seed in seeds]


def _run_grid(kb: KnowledgeBase, dist: ConceptDistribution, N_grid: Sequence[int], repeats: int,
              base_seed: int, injective: bool, cap: int, workers: int,
              seeded: Optional[Dict[Any, SolutionSpace]] = None) -> List[List[TrialReport]]:
    if repeats < 1:
        raise ValueError(f"repeats must be at least 1, got {repeats}")
    jobs = []
    for n_index, N in enumerate(N_grid):
        seeds = [trial_seed(base_seed, n_index * repeats + r) for r in range(repeats)]
        jobs.append((kb, dist, int(N), seeds, injective, cap, seeded))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_point, jobs))
    results = []
    for job in jobs:
        results.append(_run_point(job))
        logger.info("%s: N=%d done (%d trials)", kb.name, job[2], repeats)
    return results


def sweep(kb: KnowledgeBase, dist: ConceptDistribution, N_grid: Sequence[int], repeats: int,
          base_seed: int = DEFAULT_SEED, injective: bool = True, cap: int = DEFAULT_SOLUTION_CAP,
          workers: int = 1) -> SweepResult:
    """ERM trials for every N in the grid, aggregated into mean and standard error."""
    task_inst = build_task_level(kb, injective=injective, index=dist.index)
    task_space = solve_enumerate(task_inst, cap=cap)
    report = verdict(task_space)
    seeded = {(task_inst.constraints, injective, cap): task_space}
    per_point = _run_grid(kb, dist, N_grid, repeats, base_seed, injective, cap, workers, seeded)
    points = tuple(_summarise(int(N), trials) for N, trials in zip(N_grid, per_point))
    return SweepResult(
        task=kb.name,
        d=report.d,
        L=report.L,
        expected_error=report.expected_error,
        points=points,
        trials=tuple(t for trials in per_point for t in trials),
        assumptions=(
            f"P(Z) is {dist.kind} over B",
            "ERM ties broken uniformly at random among enumerated solutions",
        ),
    )


def check_error_bound(result: SweepResult, confidence: float = CONFIDENCE) -> Dict[str, Any]:
    """Compare mean concept error against d/L at every N.

    A point violates the bound only when a one-sided t lower limit of its
    mean error still exceeds d/L.
    """
    bound = result.d / result.L
    rows = []
    for p in result.points:
        mean_error = 1.0 - p.mean_acc
        slack = 0.0
        if p.repeats > 1:
            slack = float(stats.t.ppf(confidence, p.repeats - 1)) * p.stderr
        rows.append({
            "N": p.N,
            "mean_error": mean_error,
            "slack": slack,
            "violates": mean_error - slack > bound + 1e-12,
            "reasoning_minus_concept_acc": p.reasoning_acc - p.mean_acc,
        })
    return {
        "task": result.task,
        "bound": bound,
        "expected_error": result.expected_error,
        "confidence": confidence,
        "holds": not any(row["violates"] for row in rows),
        "points": rows,
    }


def sample_complexity_bound(kb: KnowledgeBase, dist: ConceptDistribution, epsilon: float) -> float:
    """(1/kappa) * ln(|B| / epsilon): beyond this many samples the error is at most epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if dist.kb is not kb:
        raise DistributionError(f"distribution was built for {dist.kb.name!r}, not {kb.name!r}")
    return math.log(dist.support_size / epsilon) / dist.kappa


def bound_report(kb: KnowledgeBase, dist: ConceptDistribution, epsilon: float) -> Dict[str, Any]:
    bound = sample_complexity_bound(kb, dist, epsilon)
    return {
        "task": kb.name,
        "epsilon": epsilon,
        "kappa": dist.kappa,
        "pool_size": dist.support_size,
        "bound": bound,
        "ceil": math.ceil(bound),
        "required_samples": math.floor(bound) + 1,
        "log": "natural",
        "assumptions": [f"P(Z) is {dist.kind} over B"],
    }


def coverage_validation(kb: KnowledgeBase, dist: ConceptDistribution, N_grid: Sequence[int],
                        repeats: int, base_seed: int = DEFAULT_SEED, epsilon: Optional[float] = None,
                        erm: bool = True, injective: bool = True, cap: int = DEFAULT_SOLUTION_CAP,
                        confidence: float = CONFIDENCE, workers: int = 1) -> Dict[str, Any]:
    """Empirical frequency of incomplete coverage against |B|(1-kappa)^N and |B|e^(-N kappa).

    With ``erm`` the trials also run the ERM step, so the failure frequency
    Pr[concept error > 0] is reported; ``epsilon`` adds a pass/fail check of
    that frequency against epsilon. Trials whose solution enumeration hit
    ``cap`` are counted in ``capped_trials`` per point and in total.
    """
    size, kappa = dist.support_size, dist.kappa
    if erm:
        per_point = _run_grid(kb, dist, N_grid, repeats, base_seed, injective, cap, workers)
    else:
        per_point = []
        for n_index, N in enumerate(N_grid):
            covered = []
            for r in range(repeats):
                rng = np.random.default_rng(trial_seed(base_seed, n_index * repeats + r))
                covered.append(np.unique(_draw(dist, int(N), rng)).size == size)
            per_point.append(covered)

    rows = []
    for N, trials in zip(N_grid, per_point):
        if erm:
            uncovered = sum(not t.covered for t in trials)
            failures: Optional[int] = sum(t.concept_error > 0 for t in trials)
            capped = sum(t.capped for t in trials)
        else:
            uncovered = sum(not c for c in trials)
            failures = None
            capped = 0
        q_low, q_high = clopper_pearson(uncovered, repeats, confidence)
        bound_exact = size * (1.0 - kappa) ** N
        row: Dict[str, Any] = {
            "N": int(N),
            "trials": repeats,
            "empirical_q": uncovered / repeats,
            "q_interval": [q_low, q_high],
            "bound_q": bound_exact,
            "bound_q_exp": size * math.exp(-N * kappa),
            "violates": q_low > bound_exact,
            "capped_trials": capped,
        }
        if failures is not None:
            f_low, f_high = clopper_pearson(failures, repeats, confidence)
            row["empirical_failure"] = failures / repeats
            row["failure_interval"] = [f_low, f_high]
            if epsilon is not None:
                row["epsilon_ok"] = f_low <= epsilon
        rows.append(row)

    report: Dict[str, Any] = {
        "task": kb.name,
        "pool_size": size,
        "kappa": kappa,
        "confidence": confidence,
        "holds": not any(row["violates"] or row.get("epsilon_ok") is False for row in rows),
        "capped_trials": sum(row["capped_trials"] for row in rows),
        "points": rows,
        "assumptions": [f"P(Z) is {dist.kind} over B"],
    }
    if epsilon is not None:
        report["epsilon"] = epsilon
        report["bound_N"] = sample_complexity_bound(kb, dist, epsilon)
    return report


__all__ = [
    "DEFAULT_SEED",
    "TRIAL_COLUMNS",
    "SUMMARY_COLUMNS",
    "ConceptDistribution",
    "TrialReport",
    "SweepPoint",
    "SweepResult",
    "trial_seed",
    "clopper_pearson",
    "sample_dataset",
    "erm_trial",
    "sweep",
    "check_error_bound",
    "sample_complexity_bound",
    "bound_report",
    "coverage_validation",
]
