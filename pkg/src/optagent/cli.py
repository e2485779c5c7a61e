"""Command-line entry point: solve, bench, review, validate, transcript."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .agent import Mode, PipelineConfig, run_pipeline
from .bench import (
    ALL_MODES,
    emit_report,
    emit_sweep,
    format_rate_table,
    run_matrix,
    run_sweep,
)
from .corpus import CorpusError, ProblemInstance, integrity_check, load_corpus, load_instance, load_test_scripts
from .llm import (
    API_KEY_ENV,
    BASE_URL_ENV,
    LiveBackend,
    LiveConfig,
    RecordingBackend,
    ReplayBackend,
    Transcript,
)
from .sandbox import SandboxSpawnFailure
from .snop import SnopError, check_conformance, parse_format, parse_snop

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_EXECUTED_ONLY = 2
EXIT_FAILED = 3

_STATUS_EXIT = {"solved": EXIT_OK, "executed_only": EXIT_EXECUTED_ONLY, "failed": EXIT_FAILED}

_DEFAULTS = {
    "mode": "full",
    "max_debug_iters": None,  # mode default applies when unset
    "max_fix_iters": None,
    "augmentations": None,
    "backend": "live",
    "transcript": None,
    "solver": None,
    "timeout_secs": 60.0,
    "workers": 1,
    "model": "gpt-4",
    "base_url": "http://localhost:8000",
    "runs_root": "runs",
    "review_policy": "batch",
    "sandbox": {},
}

_SANDBOX_KEYS = {"interpreter_cmd", "timeout_secs"}


class CliError(Exception):
    pass


def _load_config_file(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise CliError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(doc) - set(_DEFAULTS))
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(unknown)}")
    sandbox = doc.get("sandbox", {})
    if sandbox:
        bad = sorted(set(sandbox) - _SANDBOX_KEYS)
        if bad:
            raise CliError(f"unknown sandbox config keys: {', '.join(bad)}")
    return doc


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < environment < flags (flags win)."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        # sandbox.timeout_secs seeds the execution timeout unless set directly
        sandbox_cfg = file_cfg.get("sandbox") or {}
        if "timeout_secs" in sandbox_cfg and "timeout_secs" not in file_cfg:
            merged["timeout_secs"] = sandbox_cfg["timeout_secs"]
        merged.update(file_cfg)
    if os.environ.get(BASE_URL_ENV):
        merged["base_url"] = os.environ[BASE_URL_ENV]
    flag_map = {
        "mode": "mode",
        "max_debug_iters": "max_debug_iters",
        "max_fix_iters": "max_fix_iters",
        "augmentations": "augmentations",
        "backend": "backend",
        "transcript": "transcript",
        "solver": "solver",
        "timeout_secs": "timeout_secs",
        "workers": "workers",
        "model": "model",
        "runs_root": "runs_root",
        "review_policy": "review_policy",
    }
    for attr, key in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value
    return merged


def _pipeline_kwargs(cfg: dict) -> dict:
    kwargs = {
        "solver": cfg["solver"],
        "model": cfg["model"],
        "timeout_secs": float(cfg["timeout_secs"]),
        "review_policy": cfg["review_policy"],
    }
    if cfg["max_debug_iters"] is not None:
        kwargs["max_debug_iters"] = int(cfg["max_debug_iters"])
    if cfg["max_fix_iters"] is not None:
        kwargs["max_fix_iters"] = int(cfg["max_fix_iters"])
    if cfg["augmentations"] is not None:
        kwargs["augmentation_count"] = int(cfg["augmentations"])
    sandbox = cfg.get("sandbox") or {}
    if sandbox.get("interpreter_cmd"):
        kwargs["interpreter_cmd"] = tuple(sandbox["interpreter_cmd"])
    return kwargs


def _live_backend(cfg: dict) -> LiveBackend:
    return LiveBackend(
        LiveConfig(
            base_url=cfg["base_url"],
            api_key=os.environ.get(API_KEY_ENV),
            timeout_secs=float(cfg["timeout_secs"]),
        )
    )


def _load_transcript(path: Path) -> Transcript:
    if not path.exists():
        return Transcript()
    return Transcript.load(path)


def _solve_backend(cfg: dict, instance_id: str):
    backend_kind = cfg["backend"]
    if backend_kind == "live":
        return _live_backend(cfg)
    if cfg["transcript"] is None:
        raise CliError(f"backend {backend_kind!r} needs --transcript")
    transcript_path = Path(cfg["transcript"])
    if backend_kind == "replay":
        if transcript_path.is_dir():
            transcript_path = transcript_path / f"{instance_id}.jsonl"
        return ReplayBackend(_load_transcript(transcript_path))
    if backend_kind == "record":
        if transcript_path.is_dir() or not transcript_path.suffix:
            transcript_path.mkdir(parents=True, exist_ok=True)
            transcript_path = transcript_path / f"{instance_id}.jsonl"
        return RecordingBackend(_live_backend(cfg), Transcript(path=transcript_path))
    raise CliError(f"unknown backend {backend_kind!r}")


def _bench_backend_provider(cfg: dict):
    backend_kind = cfg["backend"]
    if backend_kind == "live":
        backend = _live_backend(cfg)
        return lambda instance_id, mode: backend
    if cfg["transcript"] is None:
        raise CliError(f"backend {backend_kind!r} needs --transcript")
    root = Path(cfg["transcript"])
    if backend_kind == "replay":

        def provider(instance_id: str, mode: str):
            path = root / f"{instance_id}.jsonl" if root.is_dir() else root
            return ReplayBackend(_load_transcript(path))

        return provider
    if backend_kind == "record":
        live = _live_backend(cfg)

        def provider(instance_id: str, mode: str):
            root.mkdir(parents=True, exist_ok=True)
            return RecordingBackend(live, Transcript(path=root / f"{instance_id}__{mode}.jsonl"))

        return provider
    raise CliError(f"unknown backend {backend_kind!r}")


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    snop_path = Path(args.snop)
    data_path = Path(args.data)
    if not snop_path.exists():
        print(f"error: SNOP file not found: {snop_path}", file=sys.stderr)
        return EXIT_USAGE
    if not data_path.exists():
        print(f"error: data file not found: {data_path}", file=sys.stderr)
        return EXIT_USAGE
    try:
        snop = parse_snop(snop_path.read_text(encoding="utf-8"))
        data = json.loads(data_path.read_text(encoding="utf-8"))
        report = check_conformance(parse_format(snop.input_format), data)
        if not report.ok:
            details = "; ".join(f"{v.path}: {v.message}" for v in report.violations)
            print(f"error: data does not conform to input_format: {details}", file=sys.stderr)
            return EXIT_USAGE
        tests = load_test_scripts(Path(args.tests)) if args.tests else ()
        # corpus-layout documents are named <id>/snop.txt; use the directory then
        instance_id = snop_path.stem if snop_path.stem != "snop" else snop_path.resolve().parent.name
        instance = ProblemInstance(
            id=instance_id,
            snop=snop,
            data_path=data_path,
            validity_tests=tests,
            optimal_value=None,
            sample_output_path=None,
            problem_class=snop.problem_type,
            objective_key="objective",
        )
        config = PipelineConfig.for_mode(
            cfg["mode"], runs_root=Path(cfg["runs_root"]), **_pipeline_kwargs(cfg)
        )
        backend = _solve_backend(cfg, instance.id)
    except (SnopError, CliError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        record = run_pipeline(instance, config, backend)
    except SandboxSpawnFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"status: {record.status}")
    if record.winning_attempt_id is not None:
        winner = next(a for a in record.attempts if a.attempt_id == record.winning_attempt_id)
        if winner.workspace is not None:
            print(f"output: {winner.workspace.path / 'output.json'}")
    print(f"record: {config.runs_root / record.run_id / 'record.json'}")
    return _STATUS_EXIT[record.status]


def _parse_sweep(spec: str) -> tuple[str, list[int]]:
    try:
        param, span = spec.split("=", 1)
        lo, hi = span.split("..", 1)
        return param.strip(), list(range(int(lo), int(hi) + 1))
    except ValueError:
        raise CliError(f"bad sweep spec {spec!r}; expected param=LO..HI")


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    try:
        manifest = load_corpus(Path(args.corpus))
        provider = _bench_backend_provider(cfg)
        modes = (
            [Mode(m.strip()) for m in args.modes.split(",")]
            if args.modes
            else list(ALL_MODES)
        )
        if args.sweep:
            param, values = _parse_sweep(args.sweep)
            rows = run_sweep(
                manifest,
                param,
                values,
                modes[0],
                provider,
                config_kwargs=_pipeline_kwargs(cfg),
                runs_root=Path(cfg["runs_root"]),
                workers=int(cfg["workers"]),
            )
            out = Path(args.sweep_out) if args.sweep_out else Path(args.report_dir) / f"sweep_{param}.csv"
            emit_sweep(rows, out)
            print(f"sweep data: {out}")
            return EXIT_OK
        report = run_matrix(
            manifest,
            modes,
            provider,
            config_kwargs=_pipeline_kwargs(cfg),
            workers=int(cfg["workers"]),
            runs_root=Path(cfg["runs_root"]),
        )
    except (CorpusError, CliError, SnopError, ValueError, SandboxSpawnFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    paths = emit_report(report, Path(args.report_dir), json_path=args.out)
    print(format_rate_table(report))
    print(f"report: {paths['json']}")
    return EXIT_OK


def cmd_review(args: argparse.Namespace) -> int:
    runs_root = Path(args.runs_root or "runs")
    run_dir = runs_root / args.run_id
    markers = sorted(run_dir.glob("*/review/REVIEW_PENDING"))
    if not markers:
        print(f"error: no paused run awaiting review under {run_dir}", file=sys.stderr)
        return EXIT_USAGE
    review_dir = markers[0].parent
    print(f"tests awaiting review: {review_dir}")
    for path in sorted(review_dir.glob("*.py")):
        print(f"  {path}")
    print("edit the scripts, then press Enter to resume the run")
    try:
        input()
    except EOFError:
        pass
    (review_dir / "confirm").write_text("confirmed\n", encoding="utf-8")
    print("resumed")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        manifest = load_corpus(Path(args.corpus))
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    failures = 0
    for instance_id in manifest.ids():
        try:
            instance = load_instance(manifest, instance_id)
            report = integrity_check(instance)
        except CorpusError as exc:
            print(f"{instance_id}: ERROR {exc}")
            failures += 1
            continue
        if report.ok:
            print(f"{instance_id}: ok")
        else:
            failures += 1
            for violation in report.violations:
                print(f"{instance_id}: {violation.kind.value} {violation.path} {violation.message}")
    counts = manifest.counts()
    print(f"{len(manifest.entries)} instances ({counts}) — {failures} with problems")
    return EXIT_OK if failures == 0 else EXIT_USAGE


def cmd_transcript(args: argparse.Namespace) -> int:
    path = Path(args.path)
    if not path.exists():
        print(f"error: transcript not found: {path}", file=sys.stderr)
        return EXIT_USAGE
    transcript = Transcript.load(path)
    total_prompt = total_completion = 0
    for i, rec in enumerate(transcript.records):
        print(f"{i:>3} {rec.digest[:12]} prompt={rec.prompt_tokens} completion={rec.completion_tokens}")
        total_prompt += rec.prompt_tokens
        total_completion += rec.completion_tokens
    print(f"{len(transcript.records)} records, prompt tokens {total_prompt}, completion tokens {total_completion}")
    return EXIT_OK


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=[m.value for m in Mode], help="pipeline mode")
    parser.add_argument("--max-debug-iters", type=int, dest="max_debug_iters", help="debug loop budget")
    parser.add_argument("--max-fix-iters", type=int, dest="max_fix_iters", help="test-fix loop budget")
    parser.add_argument("--augmentations", type=int, help="rephrasing count for full mode")
    parser.add_argument("--backend", choices=["live", "replay", "record"], help="LLM backend")
    parser.add_argument("--transcript", help="transcript file or directory for replay/record")
    parser.add_argument("--solver", help="override the SNOP's solver")
    parser.add_argument("--timeout-secs", type=float, dest="timeout_secs", help="sandbox timeout per execution")
    parser.add_argument("--workers", type=int, help="concurrent bench workers")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--model", help="model identifier sent to the backend")
    parser.add_argument("--runs-root", dest="runs_root", help="directory for run artifacts")
    parser.add_argument(
        "--review-policy",
        dest="review_policy",
        choices=["batch", "interactive"],
        help="supervised-test review gate policy",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optagent",
        description="Formulate, solve, test, and benchmark natural-language optimization problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the pipeline on one SNOP + data file")
    p_solve.add_argument("snop", help="path to the SNOP document")
    p_solve.add_argument("data", help="path to data.json")
    p_solve.add_argument("--tests", help="directory of supervised test scripts")
    _add_common_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run the mode matrix over a corpus")
    p_bench.add_argument("corpus", help="corpus root directory")
    p_bench.add_argument("--modes", help="comma-separated mode list (default: all five)")
    p_bench.add_argument("--out", help="path for the report JSON")
    p_bench.add_argument("--report-dir", dest="report_dir", default="reports", help="directory for report files")
    p_bench.add_argument("--sweep", help="sensitivity sweep, e.g. augmentations=0..5")
    p_bench.add_argument("--sweep-out", dest="sweep_out", help="path for the sweep CSV")
    _add_common_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_review = sub.add_parser("review", help="confirm a paused supervised-test review")
    p_review.add_argument("run_id", help="run id awaiting review")
    p_review.add_argument("--runs-root", dest="runs_root", help="directory holding run artifacts")
    p_review.set_defaults(func=cmd_review)

    p_validate = sub.add_parser("validate", help="check corpus integrity")
    p_validate.add_argument("corpus", help="corpus root directory")
    p_validate.set_defaults(func=cmd_validate)

    p_transcript = sub.add_parser("transcript", help="inspect a transcript file")
    p_transcript.add_argument("path", help="transcript JSONL file")
    p_transcript.set_defaults(func=cmd_transcript)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
