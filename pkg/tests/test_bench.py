import csv
import json
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st
from support import AttemptScript, ScriptedBackend, make_record

from optagent.bench import (
    CSV_HEADER,
    BenchReport,
    OutcomeRow,
    aggregate,
    classify,
    emit_report,
    emit_sweep,
    objective_matches,
    report_to_jsonable,
    run_matrix,
    run_sweep,
)
from optagent.llm import ReplayBackend, Transcript


def passing_runner(instance, output):
    return True


def failing_runner(instance, output):
    return False


GOOD_OUTPUT = {"x": 4.0, "y": 0.0, "objective": 12.0}


class TestClassify:
    def test_matching_objective_and_tests_is_solved(self, instances):
        record = make_record("prod-plan-1", winning_output=GOOD_OUTPUT)
        row = classify(record, instances["prod-plan-1"], test_runner=passing_runner)
        assert row.solved and row.executed

    def test_validity_tests_rerun_for_real(self, instances):
        record = make_record("prod-plan-1", winning_output=GOOD_OUTPUT)
        row = classify(record, instances["prod-plan-1"])  # default runner uses the sandbox
        assert row.solved

    def test_near_miss_objective_is_executed_not_solved(self, instances):
        output = dict(GOOD_OUTPUT, objective=11.9)
        record = make_record("prod-plan-1", winning_output=output)
        row = classify(record, instances["prod-plan-1"], test_runner=passing_runner)
        assert row.executed and not row.solved
        assert "objective_mismatch" in row.flags

    def test_no_output_is_neither_executed_nor_solved(self, instances):
        record = make_record("prod-plan-1", executed=False, agent_solved=False)
        row = classify(record, instances["prod-plan-1"], test_runner=passing_runner)
        assert not row.executed and not row.solved

    def test_missing_objective_field_is_flagged(self, instances):
        record = make_record("prod-plan-1", winning_output={"x": 4.0, "y": 0.0})
        row = classify(record, instances["prod-plan-1"], test_runner=passing_runner)
        assert not row.solved
        assert "objective_field_missing" in row.flags

    def test_failing_validity_tests_block_solved(self, instances):
        record = make_record("prod-plan-1", winning_output=GOOD_OUTPUT)
        row = classify(record, instances["prod-plan-1"], test_runner=failing_runner)
        assert not row.solved
        assert "validity_test_failed" in row.flags

    def test_corrupted_outputs_classified_unsolved(self, instances, corpus_root):
        for category in ("format", "constraints", "consistency"):
            doc = json.loads((corpus_root / "prod-plan-1" / "corrupted" / f"{category}.json").read_text())
            record = make_record("prod-plan-1", winning_output=doc)
            row = classify(record, instances["prod-plan-1"])
            assert not row.solved, category

    def test_classify_is_deterministic(self, instances):
        record = make_record("prod-plan-1", winning_output=GOOD_OUTPUT)
        rows = {classify(record, instances["prod-plan-1"], test_runner=passing_runner) for _ in range(3)}
        assert len(rows) == 1

    def test_tolerance_arithmetic(self):
        assert objective_matches(12.0, 12.0)
        assert objective_matches(12.0 + 1e-5, 12.0)  # inside 1e-4 relative
        assert not objective_matches(11.9, 12.0)
        assert objective_matches(0.0, 0.0)
        assert objective_matches(5e-7, 0.0)  # absolute floor


class TestAggregation:
    def test_solved_row_must_be_executed(self):
        with pytest.raises(ValueError):
            OutcomeRow("i", "full", executed=False, solved=True, attempts=1, tokens=0, duration_ms=0)

    def test_rates_are_count_over_corpus_size(self):
        rows = [
            OutcomeRow("a", "full", True, True, 1, 10, 5),
            OutcomeRow("b", "full", True, False, 1, 10, 5),
            OutcomeRow("c", "full", False, False, 1, 10, 5),
        ]
        stats = aggregate(rows, ["full"])["full"]
        assert stats.success_rate == 1 / 3
        assert stats.execution_rate == 2 / 3

    def test_empty_mode_rates_are_zero(self):
        stats = aggregate([], ["debug"])["debug"]
        assert stats.success_rate == 0.0 and stats.execution_rate == 0.0

    @given(
        st.lists(
            st.tuples(st.booleans(), st.booleans()),
            min_size=1,
            max_size=50,
        )
    )
    def test_success_never_exceeds_execution(self, pairs):
        rows = [
            OutcomeRow(f"i{k}", "full", executed or solved, solved and (executed or solved), 1, 0, 0)
            for k, (executed, solved) in enumerate(pairs)
        ]
        stats = aggregate(rows, ["full"])["full"]
        assert stats.success_rate <= stats.execution_rate


class TestRunMatrix:
    def test_single_instance_single_mode_single_row(self, manifest, transcripts_root, tmp_path):
        sub = [e for e in manifest.entries if e.id == "prod-plan-1"]
        import dataclasses

        small = dataclasses.replace(manifest, entries=tuple(sub))
        provider = lambda iid, mode: ReplayBackend(Transcript.load(transcripts_root / f"{iid}.jsonl"))
        report = run_matrix(small, ["prompt_only"], provider, runs_root=tmp_path)
        assert len(report.rows) == 1
        assert report.rows[0].solved

    def test_all_failing_backend_gives_zero_rates(self, manifest, tmp_path):
        provider = lambda iid, mode: ReplayBackend(Transcript())  # always misses
        report = run_matrix(manifest, ["prompt_only"], provider, runs_root=tmp_path)
        stats = report.mode_stats["prompt_only"]
        assert stats.success_rate == 0.0
        assert stats.execution_rate == 0.0

    def test_concurrent_workers_match_serial_rates(self, manifest, transcripts_root, tmp_path):
        provider = lambda iid, mode: ReplayBackend(Transcript.load(transcripts_root / f"{iid}.jsonl"))
        serial = run_matrix(manifest, ["debug"], provider, runs_root=tmp_path / "serial")
        threaded = run_matrix(manifest, ["debug"], provider, workers=3, runs_root=tmp_path / "threaded")
        assert serial.mode_stats["debug"].success_rate == threaded.mode_stats["debug"].success_rate
        assert serial.mode_stats["debug"].execution_rate == threaded.mode_stats["debug"].execution_rate
        assert [(r.instance_id, r.solved) for r in serial.rows] == [
            (r.instance_id, r.solved) for r in threaded.rows
        ]

    def test_bundled_suite_mode_ordering(self, manifest, transcripts_root, tmp_path):
        provider = lambda iid, mode: ReplayBackend(Transcript.load(transcripts_root / f"{iid}.jsonl"))
        report = run_matrix(
            manifest,
            ["prompt_only", "debug", "debug_supervised", "full"],
            provider,
            runs_root=tmp_path,
        )
        rates = {m: s.success_rate for m, s in report.mode_stats.items()}
        assert rates["prompt_only"] <= rates["debug"] <= rates["debug_supervised"] <= rates["full"]


class TestEmit:
    def make_report(self):
        rows = [
            OutcomeRow("a", "full", True, True, 1, 100, 11, snop_length=414),
            OutcomeRow("b", "full", True, False, 2, 50, 7, snop_length=500),
        ]
        return BenchReport(
            corpus_version="1",
            config={"modes": ["full"]},
            rows=rows,
            mode_stats=aggregate(rows, ["full"]),
            generated_at="2026-01-01T00-00-00",
        )

    def test_csv_header_schema(self, tmp_path):
        paths = emit_report(self.make_report(), tmp_path)
        lines = paths["csv"].read_text().splitlines()
        assert lines[0] == "instance,mode,executed,solved,attempts,tokens,duration_ms"
        assert lines[1] == "a,full,true,true,1,100,11"

    def test_empty_report_is_header_only(self, tmp_path):
        report = BenchReport(corpus_version="1", config={}, rows=[], mode_stats={}, generated_at="t")
        paths = emit_report(report, tmp_path)
        assert paths["csv"].read_text() == ",".join(CSV_HEADER) + "\n"

    def test_plot_data_has_snop_length_column(self, tmp_path):
        paths = emit_report(self.make_report(), tmp_path)
        rows = list(csv.DictReader(paths["plot"].open()))
        assert "snop_length" in rows[0]
        instance_rows = [r for r in rows if r["kind"] == "instance"]
        assert instance_rows[0]["snop_length"] == "414"
        mode_rows = [r for r in rows if r["kind"] == "mode_rates"]
        assert mode_rows[0]["success_rate"] == "0.500000"

    def test_json_report_round_trips(self, tmp_path):
        paths = emit_report(self.make_report(), tmp_path, json_path=tmp_path / "r.json")
        doc = json.loads(paths["json"].read_text())
        assert doc["mode_stats"]["full"]["solved"] == 1
        assert doc["rows"][0]["instance"] == "a"
        assert not list(tmp_path.glob("*.partial"))

    def test_report_echoes_per_run_token_totals(self, tmp_path):
        report = self.make_report()
        doc = report_to_jsonable(report)
        assert doc["mode_stats"]["full"]["token_sum"] == 150
        assert doc["rows"][0]["tokens"] == 100


class TestSweep:
    def test_augmentation_sweep_zero_maps_to_supervised(self, manifest, transcripts_root, tmp_path):
        import dataclasses

        sub = dataclasses.replace(
            manifest, entries=tuple(e for e in manifest.entries if e.id == "prod-plan-1")
        )
        provider = lambda iid, mode: ReplayBackend(Transcript.load(transcripts_root / f"{iid}.jsonl"))
        rows = run_sweep(sub, "augmentations", [0, 1], "full", provider, runs_root=tmp_path)
        assert rows[0]["mode"] == "debug_supervised"
        assert rows[1]["mode"] == "full"
        assert all(r["success_rate"] == 1.0 for r in rows)
        out = emit_sweep(rows, tmp_path / "sweep.csv")
        parsed = list(csv.DictReader(out.open()))
        assert parsed[0]["param"] == "augmentations"

    def test_unknown_parameter_rejected(self, manifest, tmp_path):
        with pytest.raises(ValueError):
            run_sweep(manifest, "bogus", [1], "full", lambda i, m: None, runs_root=tmp_path)


def test_fuzzed_classification_keeps_rate_invariant(instances):
    rng = random.Random(20260811)
    instance = instances["prod-plan-1"]
    rows = []
    for _ in range(200):
        executed = rng.random() < 0.7
        agent_solved = executed and rng.random() < 0.7
        output = None
        if agent_solved:
            output = {"x": 4.0, "y": 0.0}
            if rng.random() < 0.8:
                output["objective"] = rng.choice([12.0, 11.9, 12.0 + 1e-5, 0.0])
        record = make_record(
            "prod-plan-1", executed=executed, agent_solved=agent_solved, winning_output=output
        )
        runner = passing_runner if rng.random() < 0.8 else failing_runner
        rows.append(classify(record, instance, test_runner=runner))
    for row in rows:
        assert not (row.solved and not row.executed)
    stats = aggregate(rows, ["full"])["full"]
    assert stats.success_rate <= stats.execution_rate
