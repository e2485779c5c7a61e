"""Benchmark harness: mode matrices, ground-truth classification, rate reports.

The agent never sees ground truth; classification is the harness's job. A run
counts as executed when some attempt wrote an output file, and as solved when
the agent finished solved AND the winning output's objective matches the known
optimum within tolerance AND the instance's curated validity tests pass when
re-run against that output. Solved therefore always implies executed.
"""

from __future__ import annotations

import csv
import datetime
import json
import shutil
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .agent import Mode, PipelineConfig, RunRecord, run_pipeline
from .corpus import CorpusManifest, ProblemInstance, load_instance
from .llm import token_totals
from .sandbox import Classification, Sandbox, SandboxConfig
from .snop import serialize_snop

REL_TOL = 1e-4
ABS_TOL = 1e-6

CSV_HEADER = ("instance", "mode", "executed", "solved", "attempts", "tokens", "duration_ms")

ALL_MODES = (Mode.PROMPT_ONLY, Mode.DEBUG, Mode.DEBUG_AUTOTESTS, Mode.DEBUG_SUPERVISED, Mode.FULL)


@dataclass(frozen=True)
class OutcomeRow:
    instance_id: str
    mode: str
    executed: bool
    solved: bool
    attempts: int
    tokens: int
    duration_ms: int
    snop_length: int = 0
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.solved and not self.executed:
            raise ValueError("a solved row must be executed")


@dataclass(frozen=True)
class ModeStats:
    mode: str
    total: int
    solved: int
    executed: int
    success_rate: float
    execution_rate: float
    token_sum: int
    token_mean: float
    token_stddev: float


@dataclass
class BenchReport:
    corpus_version: str
    config: dict
    rows: list[OutcomeRow] = field(default_factory=list)
    mode_stats: dict[str, ModeStats] = field(default_factory=dict)
    generated_at: str = ""


def objective_matches(value: float, optimal: float, rel_tol: float = REL_TOL, abs_tol: float = ABS_TOL) -> bool:
    return abs(value - optimal) <= max(abs_tol, rel_tol * abs(optimal))


def rerun_validity_tests(instance: ProblemInstance, output: dict, sandbox_config: SandboxConfig | None = None) -> bool:
    """Stage the winning output in a scratch workspace and re-run curated tests."""
    tmp = Path(tempfile.mkdtemp(prefix=f"classify-{instance.id}-"))
    try:
        sandbox = Sandbox(tmp, sandbox_config or SandboxConfig())
        ws = sandbox.stage("", instance, label="validity")
        (ws.path / "output.json").write_text(json.dumps(output), encoding="utf-8")
        report = sandbox.run_tests(ws, instance.validity_tests)
        return report.passed
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def classify(
    record: RunRecord,
    instance: ProblemInstance,
    rel_tol: float = REL_TOL,
    abs_tol: float = ABS_TOL,
    test_runner: Callable[[ProblemInstance, dict], bool] | None = None,
) -> OutcomeRow:
    """Turn one run into an outcome row against the instance's ground truth."""
    executed = any(
        e.classification is Classification.RAN_WITH_OUTPUT
        for attempt in record.attempts
        for e in attempt.executions
    )
    flags: list[str] = []
    solved = False
    if record.solved and record.winning_output is not None:
        output = record.winning_output
        value = output.get(instance.objective_key) if isinstance(output, dict) else None
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            flags.append("objective_field_missing")
        elif instance.optimal_value is None:
            flags.append("no_ground_truth")
        elif not objective_matches(float(value), instance.optimal_value, rel_tol, abs_tol):
            flags.append("objective_mismatch")
        else:
            runner = test_runner or rerun_validity_tests
            if runner(instance, output):
                solved = True
            else:
                flags.append("validity_test_failed")
    return OutcomeRow(
        instance_id=record.instance_id,
        mode=record.config.mode.value,
        executed=executed,
        solved=solved,
        attempts=len(record.attempts),
        tokens=record.completion_tokens,
        duration_ms=int(record.duration_secs * 1000),
        snop_length=len(serialize_snop(instance.snop)),
        flags=tuple(flags),
    )


def aggregate(rows: Sequence[OutcomeRow], modes: Iterable[str]) -> dict[str, ModeStats]:
    stats = {}
    for mode in modes:
        mode_rows = [r for r in rows if r.mode == mode]
        total = len(mode_rows)
        solved = sum(r.solved for r in mode_rows)
        executed = sum(r.executed for r in mode_rows)
        token_sum, token_mean, token_std = token_totals([r.tokens for r in mode_rows])
        stats[mode] = ModeStats(
            mode=mode,
            total=total,
            solved=solved,
            executed=executed,
            success_rate=solved / total if total else 0.0,
            execution_rate=executed / total if total else 0.0,
            token_sum=token_sum,
            token_mean=token_mean,
            token_stddev=token_std,
        )
    return stats


def run_matrix(
    manifest: CorpusManifest,
    modes: Sequence[Mode | str],
    backend_provider: Callable[[str, str], object],
    config_kwargs: dict | None = None,
    workers: int = 1,
    runs_root: Path | str = Path("runs"),
    rel_tol: float = REL_TOL,
    abs_tol: float = ABS_TOL,
) -> BenchReport:
    """Run every (instance, mode) pair and aggregate the two rates per mode."""
    modes = [Mode(m) for m in modes]
    config_kwargs = dict(config_kwargs or {})
    runs_root = Path(runs_root)
    jobs = [(mode, instance_id) for mode in modes for instance_id in manifest.ids()]

    def run_one(job: tuple[Mode, str]) -> OutcomeRow:
        mode, instance_id = job
        instance = load_instance(manifest, instance_id)
        config = PipelineConfig.for_mode(
            mode, runs_root=runs_root / mode.value, **config_kwargs
        )
        backend = backend_provider(instance_id, mode.value)
        record = run_pipeline(instance, config, backend, run_id=f"{instance_id}")
        return classify(record, instance, rel_tol=rel_tol, abs_tol=abs_tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, jobs))
    else:
        rows = [run_one(job) for job in jobs]

    report = BenchReport(
        corpus_version=manifest.version,
        config={
            "modes": [m.value for m in modes],
            "rel_tol": rel_tol,
            "abs_tol": abs_tol,
            **{k: v for k, v in config_kwargs.items() if k != "runs_root"},
        },
        rows=rows,
        mode_stats=aggregate(rows, [m.value for m in modes]),
        generated_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
    return report


def report_to_jsonable(report: BenchReport) -> dict:
    return {
        "corpus_version": report.corpus_version,
        "config": report.config,
        "generated_at": report.generated_at,
        "mode_stats": {
            mode: {
                "total": s.total,
                "solved": s.solved,
                "executed": s.executed,
                "success_rate": s.success_rate,
                "execution_rate": s.execution_rate,
                "token_sum": s.token_sum,
                "token_mean": s.token_mean,
                "token_stddev": s.token_stddev,
            }
            for mode, s in report.mode_stats.items()
        },
        "rows": [
            {
                "instance": r.instance_id,
                "mode": r.mode,
                "executed": r.executed,
                "solved": r.solved,
                "attempts": r.attempts,
                "tokens": r.tokens,
                "duration_ms": r.duration_ms,
                "snop_length": r.snop_length,
                "flags": list(r.flags),
            }
            for r in report.rows
        ],
    }


def _write_atomic(path: Path, content: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_suffix(path.suffix + ".partial")
    partial.write_text(content, encoding="utf-8")
    partial.replace(path)
    return path


def emit_report(report: BenchReport, out_dir: Path | str, json_path: Path | str | None = None) -> dict[str, Path]:
    """Write the report JSON, the per-run CSV table, and the plot-data CSV."""
    out_dir = Path(out_dir)
    stamp = report.generated_at.replace(":", "-") or "report"
    json_target = Path(json_path) if json_path else out_dir / f"{stamp}.json"
    paths = {
        "json": _write_atomic(
            json_target,
            json.dumps(report_to_jsonable(report), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        )
    }

    rows_lines = [",".join(CSV_HEADER)]
    for r in report.rows:
        rows_lines.append(
            f"{r.instance_id},{r.mode},{str(r.executed).lower()},{str(r.solved).lower()},"
            f"{r.attempts},{r.tokens},{r.duration_ms}"
        )
    paths["csv"] = _write_atomic(out_dir / "rows.csv", "\n".join(rows_lines) + "\n")

    plot_lines = ["kind,mode,instance,snop_length,solved,success_rate,execution_rate"]
    for mode, s in report.mode_stats.items():
        plot_lines.append(f"mode_rates,{mode},,,,{s.success_rate:.6f},{s.execution_rate:.6f}")
    for r in report.rows:
        plot_lines.append(
            f"instance,{r.mode},{r.instance_id},{r.snop_length},{str(r.solved).lower()},,"
        )
    paths["plot"] = _write_atomic(out_dir / "plot_data.csv", "\n".join(plot_lines) + "\n")
    return paths


def format_rate_table(report: BenchReport) -> str:
    lines = [f"{'mode':<18} {'success':>8} {'execution':>10} {'solved':>7} {'total':>6}"]
    for mode, s in report.mode_stats.items():
        lines.append(
            f"{mode:<18} {s.success_rate:>8.3f} {s.execution_rate:>10.3f} {s.solved:>7} {s.total:>6}"
        )
    return "\n".join(lines)


def run_sweep(
    manifest: CorpusManifest,
    param: str,
    values: Sequence[int],
    mode: Mode | str,
    backend_provider: Callable[[str, str], object],
    config_kwargs: dict | None = None,
    runs_root: Path | str = Path("runs"),
    workers: int = 1,
) -> list[dict]:
    """Sensitivity sweep over augmentation count or iteration budgets."""
    if param not in ("augmentations", "max_debug_iters", "max_fix_iters"):
        raise ValueError(f"unknown sweep parameter {param!r}")
    mode = Mode(mode)
    rows = []
    for value in values:
        kwargs = dict(config_kwargs or {})
        sweep_mode = mode
        if param == "augmentations":
            # augmenting zero times in full mode is exactly debug_supervised
            if value == 0 and mode is Mode.FULL:
                sweep_mode = Mode.DEBUG_SUPERVISED
            else:
                kwargs["augmentation_count"] = value
        else:
            kwargs[param] = value
        report = run_matrix(
            manifest,
            [sweep_mode],
            backend_provider,
            config_kwargs=kwargs,
            workers=workers,
            runs_root=Path(runs_root) / f"{param}-{value}",
        )
        stats = report.mode_stats[sweep_mode.value]
        rows.append(
            {
                "param": param,
                "value": value,
                "mode": sweep_mode.value,
                "success_rate": stats.success_rate,
                "execution_rate": stats.execution_rate,
            }
        )
    return rows


def emit_sweep(rows: list[dict], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["param", "value", "mode", "success_rate", "execution_rate"])
        writer.writeheader()
        writer.writerows(rows)
    return path
