"""
NeSyLearn - Decide Whether a Neuro-Symbolic Task Is Learnable

NeSyLearn reduces the learnability of a neuro-symbolic task (inputs mapped
through discrete concepts to labels by a logical knowledge base) to a
derived constraint satisfaction problem. A task is learnable exactly when
that problem has a single solution; otherwise the disagreement d between
its solutions bounds the concept error of any risk minimiser by d/L.

Quick Start:
    >>> import nesylearn
    >>>
    >>> kb = nesylearn.make_builtin("add")
    >>> nesylearn.analyze(kb).learnable
    True
    >>> report = nesylearn.analyze(nesylearn.make_builtin("modadd", k=9))
    >>> report.d, report.num_solutions
    (2, 2)
    >>> _, joint = nesylearn.analyze_ensemble(nesylearn.EnsembleSpec.modadd(3, 4))
    >>> joint.learnable
    True

Main Functions:
    - analyze(task) -> LearnabilityReport
    - build_abduction_index(kb) -> AbductionIndex
    - solve_enumerate(instance) -> SolutionSpace
    - sweep(kb, dist, N_grid, repeats) -> SweepResult
    - evaluate_all(predictor, kb) -> dict

License: MIT
"""

from pathlib import Path

# Version information
from nesylearn._version import (
    __api_version__,
    __author__,
    __copyright__,
    __description__,
    __license__,
    __python_requires__,
    __release_date__,
    __status__,
    __title__,
    __url__,
    __version__,
    __version_info__,
    get_version,
    get_version_info,
    print_version_info,
)

# Derived CSP
from nesylearn.dcsp import (
    DcspConstraint,
    DcspInstance,
    LearnabilityReport,
    SolutionSpace,
    analyze_task,
    brute_force_solutions,
    build_from_dataset,
    build_task_level,
    concept_error,
    disagreement,
    expected_concept_error,
    solve_enumerate,
    verdict,
)

# Ensembles
from nesylearn.ensemble import EnsembleSpec, GridReport, analyze_ensemble, ensemble_grid, merge

# Errors
from nesylearn.errors import (
    AbductionError,
    ArityError,
    BudgetExceededError,
    DistributionError,
    DomainError,
    NesyLearnError,
    NoSolutionError,
    PredictorError,
    TaskSpecError,
    TruthTableError,
    VerdictWithheldError,
    describe_error,
)

# Knowledge bases
from nesylearn.kb import (
    AbductionIndex,
    ConceptDistribution,
    KnowledgeBase,
    ambiguity_witness,
    build_abduction_index,
    forward,
    from_table,
    load_kb,
    make_builtin,
)

# Risks
from nesylearn.risks import (
    Predictor,
    a3_risk,
    abduce,
    abl_risk,
    check_minimizer_inclusion,
    concept_risk,
    enumerate_predictors,
    evaluate_all,
    nesy_risk,
    pnl_risk,
    wmc,
)

# Simulation
from nesylearn.simulate import (
    SweepResult,
    TrialReport,
    clopper_pearson,
    coverage_validation,
    erm_trial,
    sample_complexity_bound,
    sample_dataset,
    sweep,
)

# Task files
from nesylearn.taskspec import TaskSpec, load_task, parse_task_file, parse_task_text, resolve_caps

__all__ = [
    # Version info
    "__version__",
    "__version_info__",
    "__title__",
    "__description__",
    "__url__",
    "__author__",
    "__license__",
    "__copyright__",
    "__python_requires__",
    "__status__",
    "__release_date__",
    "__api_version__",
    "get_version",
    "get_version_info",
    "print_version_info",
    # Knowledge bases
    "KnowledgeBase",
    "AbductionIndex",
    "ConceptDistribution",
    "make_builtin",
    "from_table",
    "forward",
    "load_kb",
    "build_abduction_index",
    "ambiguity_witness",
    # Derived CSP
    "DcspConstraint",
    "DcspInstance",
    "SolutionSpace",
    "LearnabilityReport",
    "build_from_dataset",
    "build_task_level",
    "solve_enumerate",
    "disagreement",
    "verdict",
    "analyze_task",
    "concept_error",
    "expected_concept_error",
    "brute_force_solutions",
    # Risks
    "Predictor",
    "concept_risk",
    "nesy_risk",
    "wmc",
    "pnl_risk",
    "abduce",
    "abl_risk",
    "a3_risk",
    "evaluate_all",
    "enumerate_predictors",
    "check_minimizer_inclusion",
    # Simulation
    "TrialReport",
    "SweepResult",
    "sample_dataset",
    "erm_trial",
    "sweep",
    "sample_complexity_bound",
    "clopper_pearson",
    "coverage_validation",
    # Ensembles
    "EnsembleSpec",
    "GridReport",
    "merge",
    "analyze_ensemble",
    "ensemble_grid",
    # Task files
    "TaskSpec",
    "parse_task_file",
    "parse_task_text",
    "load_task",
    # Errors
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
    "describe_error",
]


# Package-level convenience function
def analyze(task, injective=None):
    """
    Task-level learnability verdict for a knowledge base, task spec or task file path.

    Args:
        task: A KnowledgeBase, a parsed TaskSpec, or the path of a TOML task file
        injective: Override the injectivity setting (task files default to True)

    Returns:
        LearnabilityReport

    Example:
        >>> nesylearn.analyze("tasks/xor.toml").d
        2
    """
    if isinstance(task, KnowledgeBase):
        return analyze_task(task, injective=True if injective is None else injective)[1]
    if isinstance(task, (str, Path)):
        task = parse_task_file(task)
    if isinstance(task, TaskSpec):
        pool_cap, solution_cap = resolve_caps(task)
        flag = task.analysis.injective if injective is None else injective
        return analyze_task(load_kb(task), injective=flag, pool_cap=pool_cap, solution_cap=solution_cap)[1]
    raise TypeError(f"analyze() expects a KnowledgeBase, TaskSpec or path, got {type(task).__name__}")


# Add analyze to public API
__all__.append("analyze")
