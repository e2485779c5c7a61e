import io
import json
import sys
import threading
import time

import pytest

from optagent import cli


def run_cli(argv):
    return cli.main(argv)


@pytest.fixture()
def replay_args(transcripts_root):
    return ["--backend", "replay", "--transcript", str(transcripts_root)]


class TestHelp:
    def test_top_level_help_is_golden(self, monkeypatch):
        from conftest import GOLDEN_ROOT

        monkeypatch.setenv("COLUMNS", "100")
        parser = cli.build_parser()
        golden = GOLDEN_ROOT / "cli_help.txt"
        assert golden.exists()
        assert parser.format_help() == golden.read_text()

    def test_solve_help_enumerates_every_flag(self, monkeypatch):
        from conftest import GOLDEN_ROOT

        monkeypatch.setenv("COLUMNS", "100")
        parser = cli.build_parser()
        help_text = parser.format_help()
        # subcommand help: capture via the subparser
        sub_help = (GOLDEN_ROOT / "cli_help_solve.txt").read_text()
        for flag in (
            "--mode",
            "--max-debug-iters",
            "--max-fix-iters",
            "--augmentations",
            "--backend",
            "--transcript",
            "--solver",
            "--timeout-secs",
            "--workers",
            "--config",
        ):
            assert flag in sub_help
        assert "solve" in help_text and "bench" in help_text and "review" in help_text


class TestSolve:
    def test_solved_exit_zero_and_prints_output_path(self, corpus_root, replay_args, tmp_path, capsys):
        code = run_cli(
            [
                "solve",
                str(corpus_root / "prod-plan-1" / "snop.txt"),
                str(corpus_root / "prod-plan-1" / "data.json"),
                "--tests",
                str(corpus_root / "prod-plan-1" / "tests"),
                "--mode",
                "debug_supervised",
                "--runs-root",
                str(tmp_path / "runs"),
                *replay_args,
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "status: solved" in out
        assert "output.json" in out

    def test_missing_data_file_exit_one_names_path(self, corpus_root, tmp_path, capsys):
        missing = tmp_path / "nope" / "data.json"
        code = run_cli(
            ["solve", str(corpus_root / "prod-plan-1" / "snop.txt"), str(missing)]
        )
        err = capsys.readouterr().err
        assert code == 1
        assert str(missing) in err

    def test_failing_transcript_exit_three(self, corpus_root, replay_args, tmp_path):
        code = run_cli(
            [
                "solve",
                str(corpus_root / "sched-1" / "snop.txt"),
                str(corpus_root / "sched-1" / "data.json"),
                "--mode",
                "prompt_only",
                "--runs-root",
                str(tmp_path / "runs"),
                *replay_args,
            ]
        )
        assert code == 3

    def test_transcript_dir_resolves_by_instance_id(self, corpus_root, replay_args, tmp_path):
        # sched-1 snop solved via its own transcript requires the file to resolve from the dir
        code = run_cli(
            [
                "solve",
                str(corpus_root / "diet-1" / "snop.txt"),
                str(corpus_root / "diet-1" / "data.json"),
                "--mode",
                "debug",
                "--runs-root",
                str(tmp_path / "runs"),
                *replay_args,
            ]
        )
        assert code == 0

    def test_nonconformant_data_exit_one(self, corpus_root, tmp_path, capsys):
        bad = tmp_path / "data.json"
        bad.write_text('{"profit": 3, "capacity": 4}')
        code = run_cli(
            ["solve", str(corpus_root / "prod-plan-1" / "snop.txt"), str(bad)]
        )
        assert code == 1
        assert "input_format" in capsys.readouterr().err

    def test_unknown_config_key_rejected(self, corpus_root, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"mode": "debug", "surprise": 1}')
        code = run_cli(
            [
                "solve",
                str(corpus_root / "prod-plan-1" / "snop.txt"),
                str(corpus_root / "prod-plan-1" / "data.json"),
                "--config",
                str(cfg),
            ]
        )
        assert code == 1
        assert "surprise" in capsys.readouterr().err

    def test_sandbox_interpreter_configurable(self, corpus_root, transcripts_root, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sandbox": {"interpreter_cmd": [sys.executable], "timeout_secs": 30}}))
        code = run_cli(
            [
                "solve",
                str(corpus_root / "prod-plan-1" / "snop.txt"),
                str(corpus_root / "prod-plan-1" / "data.json"),
                "--mode",
                "prompt_only",
                "--backend",
                "replay",
                "--transcript",
                str(transcripts_root),
                "--config",
                str(cfg),
                "--runs-root",
                str(tmp_path / "runs"),
            ]
        )
        assert code == 0

    def test_missing_interpreter_is_a_clean_error(self, corpus_root, transcripts_root, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sandbox": {"interpreter_cmd": ["no-such-interpreter-xyz"]}}))
        code = run_cli(
            [
                "solve",
                str(corpus_root / "prod-plan-1" / "snop.txt"),
                str(corpus_root / "prod-plan-1" / "data.json"),
                "--mode",
                "prompt_only",
                "--backend",
                "replay",
                "--transcript",
                str(transcripts_root),
                "--config",
                str(cfg),
                "--runs-root",
                str(tmp_path / "runs"),
            ]
        )
        assert code == 1
        assert "interpreter" in capsys.readouterr().err

    def test_config_file_feeds_defaults_flags_win(self, corpus_root, transcripts_root, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "mode": "prompt_only",
                    "backend": "replay",
                    "transcript": str(transcripts_root),
                }
            )
        )
        code = run_cli(
            [
                "solve",
                str(corpus_root / "diet-1" / "snop.txt"),
                str(corpus_root / "diet-1" / "data.json"),
                "--config",
                str(cfg),
                "--runs-root",
                str(tmp_path / "runs"),
                "--mode",
                "debug",  # flag beats the config file's prompt_only
            ]
        )
        assert code == 0


class TestBench:
    def test_five_mode_table(self, corpus_root, replay_args, tmp_path, capsys):
        code = run_cli(
            [
                "bench",
                str(corpus_root),
                "--report-dir",
                str(tmp_path / "reports"),
                "--runs-root",
                str(tmp_path / "runs"),
                *replay_args,
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        table_lines = [l for l in out.splitlines() if l and not l.startswith(("report:", "mode "))]
        assert len(table_lines) == 5
        assert (tmp_path / "reports" / "rows.csv").exists()

    def test_single_mode_single_row(self, corpus_root, replay_args, tmp_path, capsys):
        code = run_cli(
            [
                "bench",
                str(corpus_root),
                "--modes",
                "full",
                "--report-dir",
                str(tmp_path / "reports"),
                "--runs-root",
                str(tmp_path / "runs"),
                *replay_args,
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert sum(1 for l in out.splitlines() if l.startswith("full")) == 1

    def test_sweep_emits_data_file(self, corpus_root, replay_args, tmp_path):
        code = run_cli(
            [
                "bench",
                str(corpus_root),
                "--modes",
                "full",
                "--sweep",
                "augmentations=0..2",
                "--report-dir",
                str(tmp_path / "reports"),
                "--sweep-out",
                str(tmp_path / "sweep.csv"),
                "--runs-root",
                str(tmp_path / "runs"),
                *replay_args,
            ]
        )
        assert code == 0
        assert (tmp_path / "sweep.csv").exists()
        assert "augmentations" in (tmp_path / "sweep.csv").read_text()

    def test_bad_corpus_exit_one(self, tmp_path, capsys):
        code = run_cli(["bench", str(tmp_path)])
        assert code == 1
        assert "manifest" in capsys.readouterr().err


class TestValidate:
    def test_fixture_corpus_validates(self, corpus_root, capsys):
        code = run_cli(["validate", str(corpus_root)])
        out = capsys.readouterr().out
        assert code == 0
        assert out.count(": ok") == 6


class TestTranscriptCmd:
    def test_inspect_lists_records(self, transcripts_root, capsys):
        code = run_cli(["transcript", str(transcripts_root / "prod-plan-1.jsonl")])
        out = capsys.readouterr().out
        assert code == 0
        assert "10 records" in out

    def test_missing_file_exit_one(self, tmp_path):
        assert run_cli(["transcript", str(tmp_path / "none.jsonl")]) == 1


class TestReview:
    def test_no_paused_run_exit_one(self, tmp_path, capsys):
        code = run_cli(["review", "ghost-run", "--runs-root", str(tmp_path)])
        assert code == 1
        assert "no paused run" in capsys.readouterr().err

    def test_pause_and_resume_flow(self, corpus_root, transcripts_root, tmp_path, monkeypatch):
        runs_root = tmp_path / "runs"
        result = {}

        def solve():
            result["code"] = run_cli(
                [
                    "solve",
                    str(corpus_root / "prod-plan-1" / "snop.txt"),
                    str(corpus_root / "prod-plan-1" / "data.json"),
                    "--tests",
                    str(corpus_root / "prod-plan-1" / "tests"),
                    "--mode",
                    "debug_supervised",
                    "--review-policy",
                    "interactive",
                    "--backend",
                    "replay",
                    "--transcript",
                    str(transcripts_root),
                    "--runs-root",
                    str(runs_root),
                ]
            )

        thread = threading.Thread(target=solve)
        thread.start()
        marker = None
        for _ in range(200):
            markers = list(runs_root.glob("*/*/review/REVIEW_PENDING"))
            if markers:
                marker = markers[0]
                break
            time.sleep(0.05)
        assert marker is not None, "solve never paused for review"
        run_id = marker.parent.parent.parent.name
        monkeypatch.setattr("sys.stdin", io.StringIO("\n"))
        code = run_cli(["review", run_id, "--runs-root", str(runs_root)])
        assert code == 0
        thread.join(timeout=30)
        assert result["code"] == 0
