"""
Task File Tests for NeSyLearn

License: MIT
"""

import pytest

import nesylearn
from nesylearn.dcsp import DEFAULT_SOLUTION_CAP
from nesylearn.errors import TaskSpecError
from nesylearn.kb import DEFAULT_POOL_CAP
from nesylearn.simulate import DEFAULT_SEED
from nesylearn.taskspec import (
    POOL_CAP_ENV,
    SOLUTION_CAP_ENV,
    build_distribution,
    build_index,
    load_task,
    parse_task_file,
    parse_task_text,
    resolve_caps,
    resolve_seed,
)
from nesylearn.utils import stable_hash
from tests import PROJECT_ROOT, SAMPLE_TASKS, TestHelper, write_task

CAPPED_TASK = """name = "capped"

[kb]
builtin = "add"

[analysis]
pool_cap = 500
solution_cap = 1000
injective = false
"""


class TestParseTaskText:
    """Tests for parse_task_text() on valid files."""

    def test_builtin_defaults(self):
        spec = parse_task_text(SAMPLE_TASKS["multiplication"])
        assert spec.name == "multiplication"
        assert spec.kb.builtin == "mul"
        assert spec.kb.L == 10
        assert spec.kb.n_digits == 1
        assert spec.distribution.kind == "uniform"
        assert spec.analysis.injective is True
        assert spec.seed is None

    def test_xor_defaults_to_binary(self):
        assert parse_task_text(SAMPLE_TASKS["xor"]).kb.L == 2

    def test_table_infers_m(self):
        spec = parse_task_text(SAMPLE_TASKS["xor_weights"])
        assert spec.kb.m == 2
        assert spec.kb.table[3] == (1, 1, 0)
        assert spec.distribution.weights[0] == (0.0, 0.0, 0.4)

    def test_analysis_section(self):
        spec = parse_task_text(CAPPED_TASK)
        assert spec.analysis.pool_cap == 500
        assert spec.analysis.injective is False

    def test_line_lookup(self):
        spec = parse_task_text(SAMPLE_TASKS["modadd9"])
        assert spec.line_of("kb.k") == 5
        assert spec.line_of("k") == 5
        assert spec.line_of("weights") is None


class TestParseErrors:
    """Tests for line-anchored parse errors."""

    def test_unknown_key(self):
        with pytest.raises(TaskSpecError) as info:
            parse_task_text(SAMPLE_TASKS["unknown_key"], source="typo.toml")
        assert info.value.line == 5
        assert "kb.digits" in str(info.value)

    def test_invalid_toml(self):
        with pytest.raises(TaskSpecError) as info:
            parse_task_text(SAMPLE_TASKS["not_toml"])
        assert info.value.line == 2

    def test_missing_name(self):
        with pytest.raises(TaskSpecError, match="name"):
            parse_task_text('[kb]\nbuiltin = "add"\n')

    def test_missing_kb(self):
        with pytest.raises(TaskSpecError, match=r"\[kb\]"):
            parse_task_text('name = "empty"\n')

    def test_builtin_and_table(self):
        text = 'name = "both"\n[kb]\nbuiltin = "xor"\ntable = [[0, 0, 0]]\n'
        with pytest.raises(TaskSpecError) as info:
            parse_task_text(text)
        assert info.value.line == 4

    def test_unknown_builtin(self):
        with pytest.raises(TaskSpecError, match="unknown builtin"):
            parse_task_text('name = "sub"\n[kb]\nbuiltin = "sub"\n')

    def test_k_outside_modadd(self):
        with pytest.raises(TaskSpecError) as info:
            parse_task_text('name = "add"\n[kb]\nbuiltin = "add"\nk = 3\n')
        assert info.value.line == 4

    def test_m_with_builtin(self):
        with pytest.raises(TaskSpecError, match="n_digits"):
            parse_task_text('name = "add"\n[kb]\nbuiltin = "add"\nm = 2\n')

    def test_boolean_is_not_an_int(self):
        with pytest.raises(TaskSpecError, match="boolean"):
            parse_task_text('name = "add"\n[kb]\nbuiltin = "add"\nL = true\n')

    def test_non_positive_cap(self):
        with pytest.raises(TaskSpecError, match="positive"):
            parse_task_text('name = "add"\n[kb]\nbuiltin = "add"\n[analysis]\npool_cap = 0\n')

    def test_weights_without_kind(self):
        text = ('name = "w"\n[kb]\nbuiltin = "xor"\n[distribution]\n'
                'weights = [[0, 0, 1.0]]\n')
        with pytest.raises(TaskSpecError) as info:
            parse_task_text(text)
        assert info.value.line == 5

    def test_weights_kind_needs_weights(self):
        text = 'name = "w"\n[kb]\nbuiltin = "xor"\n[distribution]\nkind = "weights"\n'
        with pytest.raises(TaskSpecError) as info:
            parse_task_text(text)
        assert info.value.line == 4


class TestDistributions:
    """Tests for build_index() and build_distribution()."""

    def test_weighted(self):
        spec = parse_task_text(SAMPLE_TASKS["xor_weights"])
        dist = build_distribution(spec, build_index(spec))
        assert dist.kappa == pytest.approx(0.2)

    def test_uniform(self):
        spec = parse_task_text(SAMPLE_TASKS["addition"])
        assert build_distribution(spec, build_index(spec)).kappa == pytest.approx(0.01)

    def test_missing_sequence_points_at_weights(self):
        text = ('name = "w"\n[kb]\nbuiltin = "xor"\n\n[distribution]\nkind = "weights"\n'
                'weights = [[0, 0, 0.5], [0, 1, 0.5]]\n')
        spec = parse_task_text(text, source="w.toml")
        with pytest.raises(TaskSpecError) as info:
            build_distribution(spec, build_index(spec))
        assert info.value.line == 7

    def test_load_task(self, tmp_path):
        spec, kb, index, dist = load_task(write_task(tmp_path, "modadd9"))
        assert spec.source.endswith("modadd9.toml")
        assert kb.k == 9
        assert index.size == 100
        assert dist.index is index

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_task_file(tmp_path / "absent.toml")


class TestPackageAnalyze:
    """Tests for the package-level analyze() convenience."""

    def test_from_path(self, tmp_path):
        report = nesylearn.analyze(write_task(tmp_path, "modadd9"))
        assert report.d == 2
        assert report.error_bound == pytest.approx(0.2)

    def test_injective_override(self):
        report = nesylearn.analyze(parse_task_text(SAMPLE_TASKS["addition"]), injective=False)
        assert report.learnable is True
        assert report.injective is False

    def test_rejects_other_types(self):
        with pytest.raises(TypeError):
            nesylearn.analyze(42)


class TestConfiguration:
    """Tests for cap and seed resolution."""

    @pytest.fixture(autouse=True)
    def clean_env(self, monkeypatch):
        monkeypatch.delenv(POOL_CAP_ENV, raising=False)
        monkeypatch.delenv(SOLUTION_CAP_ENV, raising=False)

    def test_defaults(self):
        assert resolve_caps() == (DEFAULT_POOL_CAP, DEFAULT_SOLUTION_CAP)

    def test_file_over_default(self):
        assert resolve_caps(parse_task_text(CAPPED_TASK)) == (500, 1000)

    def test_env_over_file(self, monkeypatch):
        monkeypatch.setenv(SOLUTION_CAP_ENV, "2_000")
        assert resolve_caps(parse_task_text(CAPPED_TASK)) == (500, 2000)

    def test_flag_over_env(self, monkeypatch):
        monkeypatch.setenv(POOL_CAP_ENV, "300")
        assert resolve_caps(parse_task_text(CAPPED_TASK), pool_cap=50) == (50, 1000)

    @pytest.mark.parametrize("raw", ["many", "0", "-4"])
    def test_invalid_env(self, monkeypatch, raw):
        monkeypatch.setenv(POOL_CAP_ENV, raw)
        with pytest.raises(TaskSpecError) as info:
            resolve_caps()
        assert info.value.source == "environment"

    def test_seed(self):
        assert resolve_seed() == DEFAULT_SEED == 2023
        assert resolve_seed(parse_task_text(SAMPLE_TASKS["addition"])) == 2023
        assert resolve_seed(parse_task_text(SAMPLE_TASKS["xor"]), seed=5) == 5


class TestTaskHash:
    """The resolved content hash ignores formatting."""

    def test_reformatting_keeps_hash(self):
        tidy = parse_task_text(SAMPLE_TASKS["modadd9"])
        reordered = parse_task_text('# ModAdd(9)\nname = "modadd9"\n\n[kb]\n  k   = 9\n  builtin = "modadd"\n')
        assert stable_hash(tidy.to_dict()) == stable_hash(reordered.to_dict())

    def test_content_change_changes_hash(self):
        first = parse_task_text(SAMPLE_TASKS["modadd9"])
        second = parse_task_text(SAMPLE_TASKS["modadd9"].replace("k = 9", "k = 8"))
        assert stable_hash(first.to_dict()) != stable_hash(second.to_dict())



SHIPPED_TASKS = PROJECT_ROOT / "tasks"

SHIPPED_VERDICTS = {
    "addition": (True, 0, 1),
    "multiplication": (True, 0, 1),
    "xor": (False, 2, 2),
    "xor_table": (False, 2, 2),
    "modadd3": (False, 10, 864),
    "modadd4": (False, 10, 144),
    "modadd9": (False, 2, 2),
}


class TestShippedTasks:
    """Every task file under tasks/ parses and keeps its documented verdict."""

    def test_every_file_has_a_verdict(self):
        assert {path.stem for path in SHIPPED_TASKS.glob("*.toml")} == set(SHIPPED_VERDICTS)

    @pytest.mark.parametrize("stem", sorted(SHIPPED_VERDICTS))
    def test_verdict(self, stem):
        path = SHIPPED_TASKS / f"{stem}.toml"
        spec = parse_task_file(path)
        build_distribution(spec, build_index(spec, nesylearn.load_kb(spec)))
        report = nesylearn.analyze(path)
        TestHelper.assert_valid_report(report.to_dict())
        assert (report.learnable, report.d, report.num_solutions) == SHIPPED_VERDICTS[stem]

    def test_package_docstring_example(self, monkeypatch):
        monkeypatch.chdir(PROJECT_ROOT)
        assert nesylearn.analyze("tasks/xor.toml").d == 2

if __name__ == '__main__':
    pytest.main([__file__, '-v'])
