"""
NeSyLearn Command-Line Interface (CLI) Module

Command-line tools for analysing task files from the terminal.

Commands:
    nesylearn analyze <task.toml>     - Task-level learnability verdict (JSON)
    nesylearn sample <task.toml>      - ERM trials over sample sizes (CSV)
    nesylearn ensemble ...            - Merged tasks or the modadd grid
    nesylearn risks <task.toml>       - Risk values of a predictor (JSON)
    nesylearn bound <task.toml>       - Sample-complexity bound (JSON)
    nesylearn coverage <task.toml>    - Coverage-failure validation (JSON)
    nesylearn inclusion <task.toml>   - Surrogate minimizer inclusion check (JSON)
    nesylearn --version               - Show version information

Stdout carries data only. Diagnostics, logging and (unless --manifest is
given) the run manifest go to stderr.

Exit codes: 0 success, 1 error, 3 an enumeration cap was hit.

License: MIT
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, TextIO

from nesylearn._version import __api_version__, __description__, __title__, __version__, print_version_info
from nesylearn.dcsp import DEFAULT_LISTED, brute_force_solutions, build_task_level, solve_enumerate, verdict
from nesylearn.ensemble import GRID_COLUMNS, EnsembleSpec, analyze_ensemble, ensemble_grid
from nesylearn.errors import (
    BudgetExceededError,
    NesyLearnError,
    TaskSpecError,
    VerdictWithheldError,
    describe_error,
    format_diagnostic,
)
from nesylearn.kb import AbductionIndex, ConceptDistribution, KnowledgeBase, ambiguity_witness, load_kb
from nesylearn.risks import Predictor, check_minimizer_inclusion, enumerate_predictors, evaluate_all
from nesylearn.simulate import (
    SUMMARY_COLUMNS,
    TRIAL_COLUMNS,
    bound_report,
    check_error_bound,
    coverage_validation,
    sweep,
)
from nesylearn.taskspec import (
    TaskSpec,
    build_distribution,
    build_index,
    parse_task_file,
    resolve_caps,
    resolve_seed,
)
from nesylearn.utils import canonical_json, parse_int_range, stable_hash, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CAPPED = 3


@dataclass
class RunManifest:
    """Everything needed to reproduce one run; only the timestamps vary between reruns."""

    command: str
    options: Dict[str, Any]
    task_hash: Optional[str] = None
    tool: str = "nesylearn"
    version: str = __version__
    api_version: str = __api_version__
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    finished_at: Optional[str] = None

    def finish(self) -> "RunManifest":
        self.finished_at = datetime.now(timezone.utc).isoformat()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool": self.tool,
            "version": self.version,
            "api_version": self.api_version,
            "command": self.command,
            "task_hash": self.task_hash,
            "options": dict(sorted(self.options.items())),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }

    def emit(self, path: Optional[str]) -> None:
        if path:
            Path(path).write_text(canonical_json(self.to_dict()) + "\n", encoding="utf-8")
        else:
            print(json.dumps({"manifest": self.to_dict()}, sort_keys=True), file=sys.stderr)


@dataclass
class _Task:
    spec: TaskSpec
    kb: KnowledgeBase
    index: AbductionIndex
    dist: ConceptDistribution
    injective: bool
    pool_cap: int
    solution_cap: int


def _load(args: argparse.Namespace, manifest: RunManifest) -> _Task:
    spec = parse_task_file(args.task)
    pool_cap, solution_cap = resolve_caps(spec, args.pool_cap, args.solution_cap)
    kb = load_kb(spec)
    index = build_index(spec, kb, pool_cap=pool_cap)
    dist = build_distribution(spec, index)
    injective = spec.analysis.injective if args.injective is None else args.injective
    manifest.task_hash = stable_hash(spec.to_dict())
    manifest.options.update(task=args.task, pool_cap=pool_cap, solution_cap=solution_cap,
                            injective=injective)
    logger.info("loaded %s: |B|=%d, |Y|=%d, kappa=%.6g", kb.name, index.size, len(index.labels),
                dist.kappa)
    return _Task(spec, kb, index, dist, injective, pool_cap, solution_cap)


def _emit_json(payload: Any, out: TextIO) -> None:
    out.write(canonical_json(payload) + "\n")


def cmd_analyze(args: argparse.Namespace, manifest: RunManifest, out: TextIO) -> int:
    task = _load(args, manifest)
    manifest.options.update(max_listed=args.max_listed, check=args.check, witness=args.witness)
    inst = build_task_level(task.kb, injective=task.injective, index=task.index)
    space = solve_enumerate(inst, cap=task.solution_cap)
    if not space.complete:
        logger.warning("%s: verdict withheld, %d solutions enumerated before the cap",
                       task.kb.name, space.num_solutions)
        _emit_json(space.to_dict(args.max_listed), out)
        return EXIT_CAPPED

    payload = verdict(space).to_dict()
    listing = space.to_dict(args.max_listed)
    payload.update(pool_size=task.index.size, complete=True,
                   solutions=listing["solutions"], solutions_elided=listing["solutions_elided"])
    if args.check:
        brute = set(brute_force_solutions(inst))
        payload["brute_force_agrees"] = brute == set(space.solutions)
        if not payload["brute_force_agrees"]:
            logger.error("%s: enumeration disagrees with brute force", task.kb.name)
    if args.witness:
        witness = ambiguity_witness(task.index)
        witness.pop("witness")
        payload["ambiguity"] = witness
    _emit_json(payload, out)
    if args.check and not payload["brute_force_agrees"]:
        return EXIT_ERROR
    return EXIT_OK


def cmd_sample(args: argparse.Namespace, manifest: RunManifest, out: TextIO) -> int:
    task = _load(args, manifest)
    seed = resolve_seed(task.spec, args.seed)
    grid = parse_int_range(args.n)
    manifest.options.update(n=grid, repeats=args.repeats, seed=seed, workers=args.workers,
                            timings=args.timings, summary=args.summary)
    result = sweep(task.kb, task.dist, grid, args.repeats, base_seed=seed, injective=task.injective,
                   cap=task.solution_cap, workers=args.workers)
    write_csv((t.to_row(args.timings) for t in result.trials), TRIAL_COLUMNS, out)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8", newline="") as stream:
            write_csv(result.summary_rows(), SUMMARY_COLUMNS, stream)
    check = check_error_bound(result)
    if not check["holds"]:
        logger.warning("%s: mean concept error exceeds d/L=%.3f at some N", task.kb.name, check["bound"])
    if result.capped_trials:
        logger.warning("%d trial(s) hit the solution cap", result.capped_trials)
        return EXIT_CAPPED
    return EXIT_OK


def _shared_injective(paths: List[str], specs: List[TaskSpec]) -> bool:
    settings = {spec.analysis.injective for spec in specs}
    if len(settings) > 1:
        listed = ", ".join(f"{path}={spec.analysis.injective}" for path, spec in zip(paths, specs))
        raise TaskSpecError(f"task files disagree on analysis.injective ({listed}); "
                            "pass --injective or --no-injective")
    return settings.pop()


def cmd_ensemble(args: argparse.Namespace, manifest: RunManifest, out: TextIO) -> int:
    pool_cap, solution_cap = resolve_caps(None, args.pool_cap, args.solution_cap)
    injective = True if args.injective is None else args.injective
    manifest.options.update(solution_cap=solution_cap, injective=injective, L=args.L)

    if args.modadd_grid:
        k_values = parse_int_range(args.modadd_grid)
        manifest.options.update(modadd_grid=k_values, matrix=args.matrix, workers=args.workers)
        manifest.task_hash = stable_hash({"modadd_grid": k_values, "L": args.L})
        report = ensemble_grid(k_values, L=args.L, injective=injective, cap=solution_cap,
                               workers=args.workers)
        if args.matrix:
            write_csv(report.matrix_rows(), ["k"] + [str(k) for k in report.k_values], out)
        else:
            write_csv(report.to_csv_rows(), GRID_COLUMNS, out)
        return EXIT_CAPPED if report.capped else EXIT_OK

    if args.modadd:
        k1, k2 = args.modadd
        ensemble = EnsembleSpec.modadd(k1, k2, L=args.L)
        manifest.options.update(modadd=[k1, k2])
        manifest.task_hash = stable_hash({"modadd": [k1, k2], "L": args.L})
    elif args.tasks:
        specs = [parse_task_file(path) for path in args.tasks]
        ensemble = EnsembleSpec(tuple(load_kb(spec) for spec in specs))
        manifest.options.update(tasks=list(args.tasks))
        manifest.task_hash = stable_hash([spec.to_dict() for spec in specs])
        if args.injective is None:
            injective = _shared_injective(args.tasks, specs)
            manifest.options.update(injective=injective)
    else:
        raise NesyLearnError("ensemble needs task files, --modadd K1 K2 or --modadd-grid KMIN..KMAX")

    _, report = analyze_ensemble(ensemble, injective=injective, pool_cap=pool_cap,
                                 solution_cap=solution_cap)
    payload = report.to_dict()
    payload["members"] = [kb.name for kb in ensemble.tasks]
    _emit_json(payload, out)
    return EXIT_OK


def _predictor(name: str, L: int) -> Predictor:
    if name == "identity":
        return Predictor.identity(L)
    if name == "uniform":
        return Predictor.uniform(L)
    return Predictor.load(name)


def cmd_risks(args: argparse.Namespace, manifest: RunManifest, out: TextIO) -> int:
    task = _load(args, manifest)
    n = args.n if args.n is not None else task.spec.analysis.a3_candidates
    manifest.options.update(predictor=args.predictor, surrogate=args.surrogate, n=n)
    pred = _predictor(args.predictor, task.kb.concept_count)
    risks = evaluate_all(pred, task.kb, task.dist, n=n)
    if args.surrogate != "all":
        risks = {"concept": risks["concept"], args.surrogate: risks[args.surrogate]}
    _emit_json({
        "task": task.kb.name,
        "predictor": args.predictor,
        "assignment": list(pred.to_assignment()),
        "a3_candidates": n,
        "risks": risks,
    }, out)
    return EXIT_OK


def cmd_bound(args: argparse.Namespace, manifest: RunManifest, out: TextIO) -> int:
    task = _load(args, manifest)
    manifest.options.update(epsilon=args.epsilon)
    _emit_json(bound_report(task.kb, task.dist, args.epsilon), out)
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace, manifest: RunManifest, out: TextIO) -> int:
    task = _load(args, manifest)
    seed = resolve_seed(task.spec, args.seed)
    grid = parse_int_range(args.n)
    manifest.options.update(n=grid, repeats=args.repeats, seed=seed, epsilon=args.epsilon,
                            erm=not args.no_erm, workers=args.workers)
    report = coverage_validation(task.kb, task.dist, grid, args.repeats, base_seed=seed,
                                 epsilon=args.epsilon, erm=not args.no_erm, injective=task.injective,
                                 cap=task.solution_cap, workers=args.workers)
    _emit_json(report, out)
    if not report["holds"]:
        logger.warning("%s: an empirical frequency exceeds its bound", task.kb.name)
    if report["capped_trials"]:
        logger.warning("%d trial(s) hit the solution cap", report["capped_trials"])
        return EXIT_CAPPED
    return EXIT_OK


def cmd_inclusion(args: argparse.Namespace, manifest: RunManifest, out: TextIO) -> int:
    task = _load(args, manifest)
    n = args.n if args.n is not None else task.spec.analysis.a3_candidates
    manifest.options.update(n=n, permutations_only=args.permutations_only)
    predictors = enumerate_predictors(task.kb.concept_count, injective=args.permutations_only)
    report = check_minimizer_inclusion(task.kb, task.dist, predictors, n=n)
    _emit_json(report, out)
    return EXIT_OK


def _task_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("task", type=str, help="TOML task file")
    _cap_options(parent)
    return parent


def _cap_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pool-cap", type=int, default=None,
                        help="Largest candidate pool to enumerate (env NESYLEARN_POOL_CAP)")
    parser.add_argument("--solution-cap", type=int, default=None,
                        help="Most DCSP solutions to enumerate (env NESYLEARN_SOLUTION_CAP)")
    parser.add_argument("--injective", action=argparse.BooleanOptionalAction, default=None,
                        help="Require distinct clusters to map to distinct concepts")


def _trial_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=str, required=True, help='Sample sizes, e.g. "10,100,1000" or "1..20"')
    parser.add_argument("--repeats", type=int, default=10, help="Trials per sample size (default: 10)")
    parser.add_argument("--seed", type=int, default=None, help="Base seed (default: task seed or 2023)")
    parser.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1)")


def create_parser() -> argparse.ArgumentParser:
    """Create and configure the argument parser for the CLI."""
    parser = argparse.ArgumentParser(
        prog="nesylearn",
        description=f"{__title__} - {__description__}",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  nesylearn analyze tasks/addition.toml              Learnability verdict
  nesylearn sample tasks/modadd9.toml --n 50,200 --repeats 20
  nesylearn ensemble --modadd 3 4                    Merged ModAdd(3) and ModAdd(4)
  nesylearn ensemble --modadd-grid 2..10 --matrix    d/L heatmap matrix
  nesylearn risks tasks/xor.toml --predictor uniform
  nesylearn bound tasks/addition.toml --epsilon 0.01
        """,
    )
    parser.add_argument("-V", "--version", action="store_true", help="Show version information and exit")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug details on stderr")
    parser.add_argument("-q", "--quiet", action="store_true", help="Only log warnings and errors")
    parser.add_argument("--manifest", type=str, default=None,
                        help="Write the run manifest to this JSON file instead of stderr")

    commands = parser.add_subparsers(dest="command")
    task = _task_parent()

    analyze = commands.add_parser("analyze", parents=[task], help="Task-level learnability verdict")
    analyze.add_argument("--max-listed", type=int, default=DEFAULT_LISTED,
                         help=f"List solutions only up to this many (default: {DEFAULT_LISTED})")
    analyze.add_argument("--check", action="store_true",
                         help="Cross-check the enumeration against brute force (L <= 8)")
    analyze.add_argument("--witness", action="store_true",
                         help="Report the ambiguity witness of an unrestricted hypothesis space")

    sample = commands.add_parser("sample", parents=[task], help="ERM trials over sample sizes (CSV)")
    _trial_options(sample)
    sample.add_argument("--summary", type=str, default=None, help="Write per-N summary CSV here")
    sample.add_argument("--timings", action="store_true", help="Fill the runtime_ms column")

    ensemble = commands.add_parser("ensemble", help="Merged task analysis or the modadd grid")
    ensemble.add_argument("tasks", nargs="*", help="TOML task files sharing one concept count")
    ensemble.add_argument("--modadd", type=int, nargs=2, metavar=("K1", "K2"), default=None)
    ensemble.add_argument("--modadd-grid", type=str, default=None, metavar="KMIN..KMAX")
    ensemble.add_argument("--matrix", action="store_true", help="Emit the grid as a d/L matrix")
    ensemble.add_argument("--L", type=int, default=10, help="Concept count for modadd (default: 10)")
    ensemble.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1)")
    _cap_options(ensemble)

    risks = commands.add_parser("risks", parents=[task], help="Risk values of a predictor")
    risks.add_argument("--predictor", type=str, default="identity",
                       help='Matrix file, "identity" or "uniform" (default: identity)')
    risks.add_argument("--surrogate", choices=["all", "nesy", "pnl", "abl", "a3"], default="all")
    risks.add_argument("--n", type=int, default=None, help="A3 candidate count (default: task or 16)")

    bound = commands.add_parser("bound", parents=[task], help="Sample-complexity bound")
    bound.add_argument("--epsilon", type=float, required=True, help="Target error in (0, 1)")

    coverage = commands.add_parser("coverage", parents=[task], help="Coverage-failure validation")
    _trial_options(coverage)
    coverage.add_argument("--epsilon", type=float, default=None,
                          help="Also check Pr[concept error > 0] against epsilon")
    coverage.add_argument("--no-erm", action="store_true", help="Only sample; skip the ERM step")

    inclusion = commands.add_parser("inclusion", parents=[task],
                                    help="Check surrogate minimizers against NeSy risk minimizers")
    inclusion.add_argument("--n", type=int, default=None, help="A3 candidate count (default: task or 16)")
    inclusion.add_argument("--permutations-only", action="store_true",
                           help="Enumerate the L! injective predictors instead of all L^L")
    return parser


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunManifest, TextIO], int]] = {
    "analyze": cmd_analyze,
    "sample": cmd_sample,
    "ensemble": cmd_ensemble,
    "risks": cmd_risks,
    "bound": cmd_bound,
    "coverage": cmd_coverage,
    "inclusion": cmd_inclusion,
}


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if args.version:
        print_version_info()
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_ERROR

    _configure_logging(args.verbose, args.quiet)
    manifest = RunManifest(command=args.command, options={})
    try:
        code = COMMANDS[args.command](args, manifest, sys.stdout)
    except (VerdictWithheldError, BudgetExceededError) as exc:
        print(format_diagnostic(describe_error(exc)), file=sys.stderr)
        code = EXIT_CAPPED
    except (NesyLearnError, OSError, ValueError) as exc:
        logger.debug("command failed", exc_info=True)
        print(format_diagnostic(describe_error(exc)), file=sys.stderr)
        return EXIT_ERROR
    manifest.finish().emit(args.manifest)
    return code


def cli_entry_point():
    """Entry point for console script (used by setuptools)."""
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())


__all__ = [
    "EXIT_OK",
    "EXIT_ERROR",
    "EXIT_CAPPED",
    "RunManifest",
    "COMMANDS",
    "create_parser",
    "main",
    "cli_entry_point",
]
