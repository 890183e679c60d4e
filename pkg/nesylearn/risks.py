"""
NeSyLearn Risks Module

The risk functionals of a task under a discrete predictor:

- concept risk: fraction of clusters whose argmax concept is wrong
- NeSy risk: probability that the predicted concept sequence yields a
  different label than the true one
- PNL risk: negative log weighted model count over A(y)
- ABL risk: negative log likelihood of the single abduced candidate
  (nearest in Hamming distance to the prediction)
- A3 risk: negative log of the likelihood mass on the n most likely
  candidates of A(y), which interpolates between ABL-style (n=1) and PNL
  (n = |A(y)|)

A zero likelihood gives ``math.inf`` rather than a clamped value, so the
minimizer structure of the surrogates stays exact.

License: MIT
"""

import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from nesylearn.errors import AbductionError, DistributionError, PredictorError
from nesylearn.kb import (
    AbductionIndex,
    ConceptDistribution,
    ConceptSeq,
    KnowledgeBase,
    Label,
    build_abduction_index,
)

logger = logging.getLogger(__name__)

ROW_TOLERANCE = 1e-9
SMOOTHED_CONFIDENCE = 1.0 - 1e-3
DEFAULT_A3_CANDIDATES = 16
SURROGATES = ("pnl", "abl", "a3")
# Largest likelihood block (rows x candidates) held in memory at once.
BLOCK_ENTRIES = 1 << 22

WeightedCount = float


@dataclass(frozen=True, eq=False)
class Predictor:
    """Row c is the categorical distribution the model assigns to cluster c.

    ``argmax`` resolves ties to the lowest concept id.
    """

    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise PredictorError(f"predictor must be a non-empty square L x L matrix, got shape {table.shape}")
        if not np.all(np.isfinite(table)) or np.any(table < 0):
            raise PredictorError("predictor entries must be finite and non-negative")
        sums = table.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOLERANCE)
        if bad.size:
            raise PredictorError(f"row {int(bad[0])} sums to {float(sums[bad[0]])!r}, not 1")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @property
    def L(self) -> int:
        return self.table.shape[0]

    @property
    def argmax(self) -> Tuple[int, ...]:
        return tuple(int(v) for v in np.argmax(self.table, axis=1))

    def to_assignment(self) -> Tuple[int, ...]:
        return self.argmax

    def predict(self, pattern: Sequence[int]) -> ConceptSeq:
        """f applied position-wise to a cluster sequence."""
        labels = self.argmax
        return tuple(labels[c] for c in pattern)

    @classmethod
    def identity(cls, L: int) -> "Predictor":
        return cls(np.eye(L))

    @classmethod
    def uniform(cls, L: int) -> "Predictor":
        return cls(np.full((L, L), 1.0 / L))

    @classmethod
    def from_assignment(cls, assignment: Sequence[int], confidence: float = 1.0) -> "Predictor":
        """One-hot rows on ``assignment``, smoothed to ``confidence`` when below 1.

        The remaining mass of each row is spread evenly over the other concepts.
        """
        L = len(assignment)
        if not 0.0 < confidence <= 1.0:
            raise PredictorError(f"confidence must lie in (0, 1], got {confidence}")
        if confidence < 1.0 and L < 2:
            raise PredictorError("smoothing needs at least two concepts")
        rest = (1.0 - confidence) / (L - 1) if L > 1 else 0.0
        table = np.full((L, L), rest)
        table[np.arange(L), np.asarray(assignment, dtype=int)] = confidence
        return cls(table)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Predictor":
        """Read a whitespace- or comma-separated matrix, one row per cluster."""
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        delimiter = "," if "," in text else None
        try:
            table = np.loadtxt(path, delimiter=delimiter, ndmin=2)
        except ValueError as exc:
            raise PredictorError(f"{path}: not a rectangular numeric matrix ({exc})") from exc
        return cls(table)


def _resolve(kb: KnowledgeBase, dist: Optional[ConceptDistribution]) -> ConceptDistribution:
    if dist is None:
        return ConceptDistribution.uniform(build_abduction_index(kb))
    if dist.kb is not kb:
        raise DistributionError(f"distribution was built for {dist.kb.name!r}, not {kb.name!r}")
    return dist


def _check_size(pred: Predictor, kb: KnowledgeBase) -> None:
    if pred.L != kb.concept_count:
        raise PredictorError(f"predictor has L={pred.L} but {kb.name} has L={kb.concept_count}")


def _likelihoods(pred: Predictor, patterns: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Matrix of prod_t table[pattern_t, candidate_t]: one row per pattern, one column per candidate."""
    block = np.ones((patterns.shape[0], candidates.shape[0]))
    for t in range(patterns.shape[1]):
        block *= pred.table[np.ix_(patterns[:, t], candidates[:, t])]
    return block


def _likelihood_blocks(pred: Predictor, patterns: np.ndarray, candidates: np.ndarray,
                       block_entries: Optional[int] = None) -> Iterator[np.ndarray]:
    """Row slices of the likelihood matrix, each with at most ``block_entries`` entries."""
    step = max(1, (block_entries or BLOCK_ENTRIES) // max(1, candidates.shape[0]))
    for start in range(0, patterns.shape[0], step):
        yield _likelihoods(pred, patterns[start:start + step], candidates)


def _neg_log(value: float) -> float:
    return math.inf if value <= 0.0 else -math.log(value)


def concept_risk(pred: Predictor, marginal: Optional[Sequence[float]] = None) -> float:
    """Fraction of clusters whose argmax differs from their own index.

    With ``marginal`` the clusters are weighted by their probability mass.
    """
    wrong = np.asarray(pred.argmax) != np.arange(pred.L)
    if marginal is None:
        return float(wrong.mean())
    marginal = np.asarray(marginal, dtype=float)
    if marginal.shape != (pred.L,) or np.any(marginal < 0) or abs(marginal.sum() - 1.0) > ROW_TOLERANCE:
        raise DistributionError("cluster marginal must be a probability vector of length L")
    return float(marginal[wrong].sum())


def nesy_risk(pred: Predictor, kb: KnowledgeBase, dist: Optional[ConceptDistribution] = None) -> float:
    """P(forward(f(z)) != forward(z)) for z drawn from ``dist``."""
    _check_size(pred, kb)
    dist = _resolve(kb, dist)
    labels = pred.argmax
    risk = 0.0
    for z, p in zip(dist.index.pool, dist.probs):
        if kb.evaluate(tuple(labels[c] for c in z)) != kb.evaluate(z):
            risk += p
    return float(risk)


def wmc(pred: Predictor, candidates: Iterable[ConceptSeq], pattern: Sequence[int]) -> WeightedCount:
    """Sum over candidates of the product of per-position predictor probabilities."""
    candidates = np.asarray(list(candidates), dtype=int)
    if candidates.size == 0:
        return 0.0
    pattern = np.asarray(pattern, dtype=int)
    return float(_likelihoods(pred, pattern[None, :], candidates)[0].sum())


def _per_label(kb: KnowledgeBase, dist: ConceptDistribution):
    """Yield (A(y) as array, probabilities of its members) per label present in B."""
    position = {z: i for i, z in enumerate(dist.index.pool)}
    for y, members in dist.index.by_label.items():
        arr = np.asarray(members, dtype=int)
        probs = np.array([dist.probs[position[z]] for z in members])
        yield y, arr, probs


def pnl_risk(pred: Predictor, kb: KnowledgeBase, dist: Optional[ConceptDistribution] = None) -> float:
    """-E log WMC(A(forward(z)) | z); ``inf`` when any count vanishes."""
    _check_size(pred, kb)
    dist = _resolve(kb, dist)
    risk = 0.0
    for _, members, probs in _per_label(kb, dist):
        counts = np.concatenate([block.sum(axis=1) for block in _likelihood_blocks(pred, members, members)])
        for p, count in zip(probs, counts):
            term = _neg_log(float(count))
            if math.isinf(term):
                return math.inf
            risk += p * term
    return float(risk)


def abduce(pred: Predictor, kb: KnowledgeBase, pattern: Sequence[int], y: Label,
           index: Optional[AbductionIndex] = None) -> ConceptSeq:
    """Candidate in A(y) closest in Hamming distance to the prediction on ``pattern``.

    Ties go to the lexicographically smallest candidate.
    """
    if index is None:
        index = build_abduction_index(kb)
    candidates = index.abduction_set(y)
    if not candidates:
        raise AbductionError(f"{kb.name}: no candidate sequence produces label {y}")
    prediction = np.asarray(pred.predict(pattern), dtype=int)
    distances = (np.asarray(candidates, dtype=int) != prediction).sum(axis=1)
    return candidates[int(np.argmin(distances))]


def abl_risk(pred: Predictor, kb: KnowledgeBase, dist: Optional[ConceptDistribution] = None) -> float:
    """-E log P(abduced candidate | z) with Hamming-nearest abduction."""
    _check_size(pred, kb)
    dist = _resolve(kb, dist)
    risk = 0.0
    for z, p in zip(dist.index.pool, dist.probs):
        target = abduce(pred, kb, z, dist.index.label_of(z), index=dist.index)
        likelihood = float(np.prod(pred.table[np.asarray(z), np.asarray(target)]))
        term = _neg_log(likelihood)
        if math.isinf(term):
            return math.inf
        risk += p * term
    return float(risk)


def _top_mass(scores: np.ndarray, n: int) -> np.ndarray:
    if n >= scores.shape[1]:
        return scores.sum(axis=1)
    # Sum of the n largest scores per row; ties leave it unchanged.
    return -np.partition(-scores, n - 1, axis=1)[:, :n].sum(axis=1)


def a3_risk(pred: Predictor, kb: KnowledgeBase, dist: Optional[ConceptDistribution] = None,
            n: int = DEFAULT_A3_CANDIDATES) -> float:
    """-E log of the likelihood mass on the n most likely members of A(y).

    Candidates are ranked by likelihood under the predictor; ties at the
    cut do not change the mass. With n >= |A(y)| the sum is the full weighted model
    count and the value equals ``pnl_risk``.
    """
    if n < 1:
        raise ValueError(f"candidate set size must be at least 1, got {n}")
    _check_size(pred, kb)
    dist = _resolve(kb, dist)
    risk = 0.0
    for _, members, probs in _per_label(kb, dist):
        masses = np.concatenate([_top_mass(block, n) for block in _likelihood_blocks(pred, members, members)])
        for p, mass in zip(probs, masses):
            term = _neg_log(float(mass))
            if math.isinf(term):
                return math.inf
            risk += p * term
    return float(risk)


def evaluate_all(pred: Predictor, kb: KnowledgeBase, dist: Optional[ConceptDistribution] = None,
                 n: int = DEFAULT_A3_CANDIDATES) -> Dict[str, float]:
    dist = _resolve(kb, dist)
    return {
        "concept": concept_risk(pred),
        "nesy": nesy_risk(pred, kb, dist),
        "pnl": pnl_risk(pred, kb, dist),
        "abl": abl_risk(pred, kb, dist),
        "a3": a3_risk(pred, kb, dist, n=n),
    }


def enumerate_predictors(L: int, injective: bool = False,
                         confidence: float = SMOOTHED_CONFIDENCE) -> List[Predictor]:
    """All smoothed one-hot predictors on L concepts, in lexicographic assignment order."""
    if injective:
        assignments: Iterable[Tuple[int, ...]] = itertools.permutations(range(L))
    else:
        assignments = itertools.product(range(L), repeat=L)
    return [Predictor.from_assignment(a, confidence=confidence) for a in assignments]


def _minimizers(values: np.ndarray) -> np.ndarray:
    finite = np.isfinite(values)
    if not finite.any():
        return np.ones(values.shape, dtype=bool)
    best = values[finite].min()
    return finite & np.isclose(values, best, rtol=1e-9, atol=1e-12)


def check_minimizer_inclusion(kb: KnowledgeBase, dist: Optional[ConceptDistribution] = None,
                              predictors: Optional[Sequence[Predictor]] = None,
                              n: int = DEFAULT_A3_CANDIDATES) -> Dict[str, Any]:
    """Check that every surrogate minimizer also minimizes the NeSy risk.

    By default all L^L smoothed one-hot predictors are enumerated. The report
    lists the minimizers of each risk, any violating predictors, and whether
    predictors with positive NeSy risk score strictly worse than the
    identity predictor on every surrogate.
    """
    dist = _resolve(kb, dist)
    if predictors is None:
        predictors = enumerate_predictors(kb.concept_count)
    if not predictors:
        raise PredictorError("no predictors to compare")

    rows = [evaluate_all(pred, kb, dist, n=n) for pred in predictors]
    assignments = [list(pred.argmax) for pred in predictors]
    nesy = np.array([row["nesy"] for row in rows])
    nesy_best = _minimizers(nesy)

    identity = tuple(range(kb.concept_count))
    identity_at = next((i for i, pred in enumerate(predictors) if pred.argmax == identity), None)

    surrogates: Dict[str, Any] = {}
    holds = True
    for name in SURROGATES:
        values = np.array([row[name] for row in rows])
        best = _minimizers(values)
        violations = [assignments[i] for i in np.flatnonzero(best & ~nesy_best)]
        separated = None
        if identity_at is not None:
            worse = values[nesy > 0]
            separated = bool(np.all(worse > values[identity_at])) if worse.size else True
        surrogates[name] = {
            "minimizers": [assignments[i] for i in np.flatnonzero(best)],
            "min_value": float(values[best].min()) if np.isfinite(values[best]).any() else math.inf,
            "subset_of_nesy_minimizers": not violations,
            "violations": violations,
            "identity_strictly_better_than_nesy_errors": separated,
        }
        holds = holds and not violations

    if not holds:
        logger.warning("%s: a surrogate minimizer does not minimize the NeSy risk", kb.name)
    return {
        "task": kb.name,
        "num_predictors": len(predictors),
        "holds": holds,
        "nesy_minimizers": [assignments[i] for i in np.flatnonzero(nesy_best)],
        "surrogates": surrogates,
        "a3_candidates": n,
        "assumptions": [
            f"predictors are one-hot rows smoothed to confidence {SMOOTHED_CONFIDENCE}"
            if predictors and float(predictors[0].table.max()) < 1.0 else "predictors as given",
            "abduction ties broken lexicographically",
            f"P(Z) is {dist.kind} over B",
        ],
    }


__all__ = [
    "WeightedCount",
    "Predictor",
    "SMOOTHED_CONFIDENCE",
    "DEFAULT_A3_CANDIDATES",
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
]
