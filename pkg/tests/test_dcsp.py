"""
DCSP Tests for NeSyLearn

License: MIT
"""

import itertools

import pytest

from nesylearn.dcsp import (
    DcspConstraint,
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
from nesylearn.errors import ArityError, DomainError, NoSolutionError, VerdictWithheldError
from nesylearn.kb import make_builtin
from tests import TestHelper


class TestTaskLevelVerdicts:
    """Learnability verdicts of the built-in tasks."""

    def test_addition_is_learnable(self):
        space, report = analyze_task(make_builtin("add"))
        assert report.learnable is True
        assert report.d == 0
        assert space.solutions == (tuple(range(10)),)
        TestHelper.assert_valid_report(report.to_dict())

    def test_multiplication_is_learnable(self):
        _, report = analyze_task(make_builtin("mul"))
        assert report.learnable is True
        assert report.num_solutions == 1

    def test_xor(self):
        space, report = analyze_task(make_builtin("xor"))
        assert report.learnable is False
        assert report.num_solutions == 2
        assert report.d == 2
        assert report.error_bound == 1.0
        assert report.union == frozenset()
        assert set(space.solutions) == {(0, 1), (1, 0)}

    def test_modadd9(self):
        space, report = analyze_task(make_builtin("modadd", k=9))
        assert report.num_solutions == 2
        assert report.d == 2
        assert report.error_bound == pytest.approx(0.2)
        assert report.expected_error == pytest.approx(0.1)
        assert (0, 0) not in report.union and (9, 9) not in report.union
        assert (4, 4) in report.union

    def test_modadd10(self):
        _, report = analyze_task(make_builtin("modadd", k=10))
        assert report.num_solutions == 2
        assert report.d == 10

    @pytest.mark.parametrize("k, count", [(2, 28800), (3, 864), (4, 144)])
    def test_small_modulus_counts(self, k, count):
        _, report = analyze_task(make_builtin("modadd", k=k))
        assert report.num_solutions == count
        assert report.d == 10
        assert report.learnable is False

    def test_report_dict(self):
        payload = analyze_task(make_builtin("modadd", k=9))[1].to_dict()
        TestHelper.assert_valid_report(payload)
        assert payload["d_over_L"] == pytest.approx(0.2)

    def test_non_injective_addition_still_unique(self):
        _, report = analyze_task(make_builtin("add"), injective=False)
        assert report.learnable is True
        assert report.injective is False


class TestSolverAgainstBruteForce:
    """The enumerator returns exactly the brute-force solution set."""

    @pytest.mark.parametrize("builtin, L, k", [
        ("add", 5, None), ("add", 6, None), ("mul", 5, None), ("mul", 6, None),
        ("modadd", 5, 2), ("modadd", 6, 3), ("modadd", 6, 4), ("xor", 2, None),
    ])
    def test_injective(self, builtin, L, k):
        inst = build_task_level(make_builtin(builtin, L=L, k=k))
        assert set(solve_enumerate(inst).solutions) == set(brute_force_solutions(inst))

    @pytest.mark.parametrize("builtin, L, k", [("mul", 4, None), ("modadd", 4, 2), ("modadd", 5, 3)])
    def test_non_injective(self, builtin, L, k):
        inst = build_task_level(make_builtin(builtin, L=L, k=k), injective=False)
        assert set(solve_enumerate(inst).solutions) == set(brute_force_solutions(inst))

    def test_enumeration_order_is_lexicographic(self):
        space = solve_enumerate(build_task_level(make_builtin("modadd", k=4)))
        assert list(space.solutions) == sorted(space.solutions)

    def test_brute_force_limit(self):
        with pytest.raises(ValueError):
            brute_force_solutions(build_task_level(make_builtin("add")))


class TestDatasetInstances:
    """Tests for build_from_dataset()."""

    def test_single_sample(self):
        inst = build_from_dataset(make_builtin("add", L=4), [((0, 0), 0)])
        space = solve_enumerate(inst)
        assert space.num_solutions == 6
        assert all(s[0] == 0 for s in space.solutions)
        d, union = disagreement(space)
        assert d == 3
        assert union == frozenset({(0, 0)})

    def test_duplicates_collapse(self):
        inst = build_from_dataset(make_builtin("add"), [((1, 2), 3), ((1, 2), 3), ((0, 0), 0)])
        assert len(inst.constraints) == 2
        assert inst.constraints[0] == DcspConstraint(0, (0, 0), 0)

    def test_label_outside_space(self):
        with pytest.raises(DomainError):
            build_from_dataset(make_builtin("add"), [((1, 2), 19)])

    def test_pattern_length(self):
        with pytest.raises(ArityError):
            build_from_dataset(make_builtin("add"), [((1, 2, 3), 6)])

    def test_conflicting_data_has_no_solution(self):
        space = solve_enumerate(build_from_dataset(make_builtin("add"), [((0, 0), 0), ((0, 0), 1)]))
        assert space.num_solutions == 0
        assert space.to_dict()["d"] is None
        with pytest.raises(NoSolutionError):
            verdict(space)

    def test_full_dataset_matches_task_level(self):
        kb = make_builtin("add")
        data = [((a, b), a + b) for a in range(10) for b in range(10)]
        assert build_from_dataset(kb, data).constraints == build_task_level(kb).constraints

    def test_identity_satisfies_task_level(self):
        inst = build_task_level(make_builtin("modadd", k=7))
        assert inst.satisfies(tuple(range(10)))
        assert not inst.satisfies((1, 0) + tuple(range(2, 10)))

    def test_zero_sum_pins_only_zero(self):
        space = solve_enumerate(build_from_dataset(make_builtin("add"), [((0, 0), 0)]))
        expected = {(0,) + rest for rest in itertools.permutations(range(1, 10))}
        assert space.complete is True
        assert space.num_solutions == 362880
        assert set(space.solutions) == expected

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_task_level_solutions_survive_any_dataset(self, k):
        kb = make_builtin("modadd", k=k, L=6)
        task_level = set(solve_enumerate(build_task_level(kb)).solutions)
        data = [((a, b), (a + b) % k) for a, b in [(0, 1), (2, 2), (3, 5), (4, 1)]]
        for size in range(1, len(data) + 1):
            space = solve_enumerate(build_from_dataset(kb, data[:size]))
            assert space.complete is True
            assert task_level <= set(space.solutions)


class TestCaps:
    """Tests for the enumeration cap."""

    def test_cap_marks_space_incomplete(self):
        space = solve_enumerate(build_task_level(make_builtin("xor")), cap=1)
        assert space.complete is False
        assert space.num_solutions == 1
        with pytest.raises(VerdictWithheldError):
            verdict(space)

    def test_cap_equal_to_count_is_complete(self):
        space = solve_enumerate(build_task_level(make_builtin("xor")), cap=2)
        assert space.complete is True

    def test_invalid_cap(self):
        with pytest.raises(ValueError):
            solve_enumerate(build_task_level(make_builtin("xor")), cap=0)


class TestErrors:
    """Tests for concept_error() and expected_concept_error()."""

    def test_identity_has_no_error(self):
        assert concept_error((0, 1, 2)) == 0.0

    def test_swap(self):
        assert concept_error((1, 0)) == 1.0
        assert concept_error((1, 0, 2, 3)) == 0.5

    def test_expected_error_bounded_by_disagreement(self):
        space = solve_enumerate(build_task_level(make_builtin("modadd", k=4)))
        assert expected_concept_error(space) <= disagreement(space)[0] / space.L

    def test_solution_listing_elided(self):
        payload = solve_enumerate(build_task_level(make_builtin("modadd", k=4))).to_dict(max_listed=64)
        assert payload["num_solutions"] == 144
        assert payload["solutions_elided"] is True
        assert payload["solutions"] == []


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
