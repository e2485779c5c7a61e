"""The fixture contract: solvers hit their optima, tests catch their corruptions."""

import json
import time

import pytest

from fixture_scripts import test_script as load_test_script
from fixture_scripts import (
    CATEGORIES,
    SANDBOX_TIMEOUT_SECS,
    FixtureError,
    FixtureScript,
    corrupted_output,
    list_instances,
    make_workspace,
    run_script,
    solver_script,
    verify,
)

INSTANCE_IDS = [
    "prod-plan-1",
    "knapsack-1",
    "diet-1",
    "transport-1",
    "sched-1",
    "blend-1",
]

SOLVER_LIBRARIES = ("gurobipy", "cvxpy", "pulp", "pyomo", "scipy")


class TestManifest:
    def test_lists_all_instances(self, corpus_root):
        assert [e["id"] for e in list_instances(corpus_root)] == INSTANCE_IDS

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FixtureError):
            list_instances(tmp_path)


@pytest.mark.parametrize("instance_id", INSTANCE_IDS)
class TestSolverScripts:
    def test_reproduces_optimum_exactly_within_timeout(self, corpus_root, entries, tmp_path, instance_id):
        entry = next(e for e in entries if e["id"] == instance_id)
        script = solver_script(corpus_root, instance_id)
        ws = make_workspace(tmp_path, corpus_root / instance_id / "data.json")
        started = time.monotonic()
        proc = run_script(script, ws, timeout=SANDBOX_TIMEOUT_SECS)
        elapsed = time.monotonic() - started
        assert proc.returncode == 0, proc.stderr
        assert elapsed < SANDBOX_TIMEOUT_SECS
        output = json.loads((ws / "output.json").read_text())
        # fixtures are exact-rational by construction, so equality is exact
        assert output[entry["objective_key"]] == float(entry["optimal_value"])

    def test_no_external_solver_dependency(self, corpus_root, instance_id):
        script = solver_script(corpus_root, instance_id)
        for lib in SOLVER_LIBRARIES:
            assert lib not in script.text

    def test_reads_data_and_writes_output(self, corpus_root, instance_id):
        script = solver_script(corpus_root, instance_id)
        assert "data.json" in script.text and "output.json" in script.text


@pytest.mark.parametrize("instance_id", INSTANCE_IDS)
@pytest.mark.parametrize("category", CATEGORIES)
class TestTestScripts:
    def test_passes_on_reference_output(self, corpus_root, tmp_path, instance_id, category):
        script = load_test_script(corpus_root, instance_id, category)
        ws = make_workspace(
            tmp_path,
            corpus_root / instance_id / "data.json",
            corpus_root / instance_id / "sample_output.json",
        )
        proc = run_script(script, ws)
        assert proc.returncode == 0, proc.stderr

    def test_fails_with_message_on_corrupted_counterpart(self, corpus_root, tmp_path, instance_id, category):
        script = load_test_script(corpus_root, instance_id, category)
        ws = make_workspace(
            tmp_path,
            corpus_root / instance_id / "data.json",
            corrupted_output(corpus_root, instance_id, category),
        )
        proc = run_script(script, ws)
        assert proc.returncode != 0
        assert proc.stderr.strip(), "failure must carry a stderr message"

    def test_has_supervised_kind_header(self, corpus_root, instance_id, category):
        script = load_test_script(corpus_root, instance_id, category)
        assert script.text.splitlines()[0] == "# kind: supervised"


class TestNegativeCaseScripts:
    @pytest.mark.parametrize("instance_id", ["diet-1", "sched-1", "blend-1"])
    def test_broken_solvers_crash_with_a_message(self, corpus_root, tmp_path, instance_id):
        script = solver_script(corpus_root, instance_id, role="broken_solver")
        ws = make_workspace(tmp_path, corpus_root / instance_id / "data.json")
        proc = run_script(script, ws)
        assert proc.returncode != 0
        assert proc.stderr.strip()

    def test_bad_output_solver_writes_but_fails_constraints(self, corpus_root, tmp_path):
        script = solver_script(corpus_root, "transport-1", role="bad_output_solver")
        ws = make_workspace(tmp_path, corpus_root / "transport-1" / "data.json")
        assert run_script(script, ws).returncode == 0
        assert (ws / "output.json").exists()
        check = load_test_script(corpus_root, "transport-1", "constraints")
        proc = run_script(check, ws)
        assert proc.returncode != 0
        assert "demand" in proc.stderr


class TestApiValidation:
    def test_unknown_role_rejected(self, corpus_root):
        with pytest.raises(FixtureError):
            solver_script(corpus_root, "diet-1", role="mystery")

    def test_unknown_category_rejected(self, corpus_root):
        with pytest.raises(FixtureError):
            load_test_script(corpus_root, "diet-1", "vibes")

    def test_missing_negative_variant_reported(self, corpus_root):
        with pytest.raises(FixtureError):
            solver_script(corpus_root, "prod-plan-1", role="broken_solver")

    def test_solver_contract_enforced_at_construction(self, tmp_path):
        path = tmp_path / "solver.py"
        path.write_text("print('no files touched')\n")
        with pytest.raises(FixtureError):
            FixtureScript(text=path.read_text(), role="solver", instance_id="x", path=path)


def test_verify_reports_no_problems(corpus_root, tmp_path):
    assert verify(corpus_root, tmp_path) == []


def test_verify_catches_a_seeded_corruption(corpus_root, tmp_path):
    import shutil

    broken_corpus = tmp_path / "corpus"
    shutil.copytree(corpus_root, broken_corpus)
    sample = broken_corpus / "prod-plan-1" / "sample_output.json"
    sample.write_text(json.dumps({"x": -1.0, "y": 5.0, "objective": 7.0}))
    problems = verify(broken_corpus, tmp_path / "scratch")
    assert any("prod-plan-1" in p for p in problems)
