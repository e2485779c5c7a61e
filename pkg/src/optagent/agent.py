"""The pipeline state machine: formulate, generate code, execute, test, repair.

One attempt walks FORMULATE -> CODEGEN -> EXECUTE, looping through DEBUG on
execution errors and (in test-running modes) TESTGEN -> REVIEW -> TESTRUN with
a FIX loop on failing tests, until it reaches SOLVED or FAILED. Augmentation
fans the same walk out over rephrased copies of the problem; the run is solved
as soon as any attempt is.

Budgets make termination provable: every attempt executes at most
1 + max_debug_iters + max_fix_iters times.
"""

from __future__ import annotations

import json
import shutil
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .corpus import ProblemInstance
from .llm import ChatExchange, ChatMessage, Completion, LlmError
from .prompts import TemplateRegistry, instruction_block_for, render
from .sandbox import (
    Classification,
    ExecutionResult,
    Sandbox,
    SandboxConfig,
    TestReport,
    TestResult,
    TestScript,
    Workspace,
)
from .snop import ANY, Snop, check_conformance, extract_params, parse_format, parse_snop, serialize_snop
from .snop import SnopError

SYSTEM_PREAMBLE = "You are an expert assistant for mathematical optimization and solver programming."

REVIEW_CONFIRM_FILE = "confirm"
REVIEW_PENDING_MARKER = "REVIEW_PENDING"


class Mode(Enum):
    PROMPT_ONLY = "prompt_only"
    DEBUG = "debug"
    DEBUG_AUTOTESTS = "debug_autotests"
    DEBUG_SUPERVISED = "debug_supervised"
    FULL = "full"


TEST_RUNNING_MODES = (Mode.DEBUG_AUTOTESTS, Mode.DEBUG_SUPERVISED, Mode.FULL)
REVIEWED_MODES = (Mode.DEBUG_SUPERVISED, Mode.FULL)


class AttemptState(Enum):
    FORMULATE = "FORMULATE"
    CODEGEN = "CODEGEN"
    EXECUTE = "EXECUTE"
    DEBUG = "DEBUG"
    TESTGEN = "TESTGEN"
    REVIEW = "REVIEW"
    TESTRUN = "TESTRUN"
    FIX = "FIX"
    SOLVED = "SOLVED"
    FAILED = "FAILED"


class ReviewTimeout(Exception):
    pass


@dataclass
class PipelineConfig:
    mode: Mode
    max_debug_iters: int = 3
    max_fix_iters: int = 3
    augmentation_count: int = 0
    solver: str | None = None
    model: str = "gpt-4"
    temperature: float = 0.0
    timeout_secs: float = 60.0
    review_policy: str = "batch"  # batch | interactive
    review_timeout_secs: float = 300.0
    runs_root: Path = Path("runs")
    concurrent_attempts: bool = False
    interpreter_cmd: tuple[str, ...] | None = None  # None: the running interpreter

    def __post_init__(self):
        self.mode = Mode(self.mode)
        self.runs_root = Path(self.runs_root)
        if self.max_debug_iters < 0 or self.max_fix_iters < 0 or self.augmentation_count < 0:
            raise ValueError("iteration and augmentation budgets must be >= 0")
        if self.mode is Mode.FULL and self.augmentation_count < 1:
            raise ValueError("full mode requires augmentation_count >= 1")
        if self.mode is not Mode.FULL and self.augmentation_count != 0:
            raise ValueError(f"mode {self.mode.value} does not augment")
        if self.mode is Mode.PROMPT_ONLY and self.max_debug_iters != 0:
            raise ValueError("prompt_only mode implies max_debug_iters = 0")
        if self.review_policy not in ("batch", "interactive"):
            raise ValueError(f"unknown review policy {self.review_policy!r}")

    @classmethod
    def for_mode(cls, mode: Mode | str, **kwargs) -> "PipelineConfig":
        """Build a config with the mode's natural defaults for unset budgets."""
        mode = Mode(mode)
        if mode is Mode.PROMPT_ONLY:
            kwargs.setdefault("max_debug_iters", 0)
            kwargs.setdefault("max_fix_iters", 0)
        elif mode is Mode.DEBUG:
            kwargs.setdefault("max_fix_iters", 0)
        if mode is Mode.FULL:
            kwargs.setdefault("augmentation_count", 5)
        else:
            kwargs.setdefault("augmentation_count", 0)
        return cls(mode=mode, **kwargs)

    def to_snapshot(self) -> dict:
        return {
            "mode": self.mode.value,
            "max_debug_iters": self.max_debug_iters,
            "max_fix_iters": self.max_fix_iters,
            "augmentation_count": self.augmentation_count,
            "solver": self.solver,
            "model": self.model,
            "temperature": self.temperature,
            "timeout_secs": self.timeout_secs,
            "review_policy": self.review_policy,
        }


@dataclass
class Attempt:
    attempt_id: str
    rephrase_index: int
    snop: Snop
    state: AttemptState = AttemptState.FORMULATE
    formulation: str | None = None
    code_versions: list[str] = field(default_factory=list)
    executions: list[ExecutionResult] = field(default_factory=list)
    test_reports: list[TestReport] = field(default_factory=list)
    debug_iters_used: int = 0
    fix_iters_used: int = 0
    state_trail: list[str] = field(default_factory=list)
    failure_reason: str | None = None
    workspace: Workspace | None = None

    @property
    def solved(self) -> bool:
        return self.state is AttemptState.SOLVED

    def final_output(self) -> Any:
        for result in reversed(self.executions):
            if result.classification is Classification.RAN_WITH_OUTPUT:
                return result.output
        return None


@dataclass
class RunRecord:
    run_id: str
    instance_id: str
    config: PipelineConfig
    attempts: list[Attempt]
    status: str  # solved | executed_only | failed
    skipped_rephrasings: list[dict]
    prompt_tokens: int
    completion_tokens: int
    llm_calls: int
    duration_secs: float
    winning_attempt_id: str | None = None
    winning_output: Any = None

    @property
    def solved(self) -> bool:
        return self.status == "solved"


class _MeteredBackend:
    """Count tokens and calls flowing through a backend during one run."""

    def __init__(self, inner):
        self._inner = inner
        self.prompt_tokens = 0
        self.completion_tokens = 0
        self.calls = 0

    def complete(self, exchange: ChatExchange) -> Completion:
        completion = self._inner.complete(exchange)
        self.prompt_tokens += completion.prompt_token_count
        self.completion_tokens += completion.completion_token_count
        self.calls += 1
        return completion


def _exchange(prompt: str, config: PipelineConfig) -> ChatExchange:
    return ChatExchange(
        messages=(ChatMessage("system", SYSTEM_PREAMBLE), ChatMessage("user", prompt)),
        model=config.model,
        temperature=config.temperature,
    )


_FENCE_START = "```"


def extract_code(text: str) -> str:
    """Concatenate fenced code blocks, or return the raw text when unfenced."""
    blocks = extract_scripts(text)
    if not blocks:
        return ""
    if len(blocks) == 1 and _FENCE_START not in text:
        return text
    return "".join(blocks)


def extract_scripts(text: str) -> list[str]:
    """Each fenced block is one script; unfenced non-empty text is one script."""
    blocks = []
    lines = text.split("\n")
    i = 0
    current: list[str] | None = None
    while i < len(lines):
        line = lines[i]
        if line.strip().startswith(_FENCE_START):
            if current is None:
                current = []
            else:
                blocks.append("\n".join(current) + "\n")
                current = None
            i += 1
            continue
        if current is not None:
            current.append(line)
        i += 1
    if current:  # unterminated fence: keep what we saw
        blocks.append("\n".join(current) + "\n")
    if blocks:
        return blocks
    if text.strip():
        return [text]
    return []


def formulate(snop: Snop, backend, templates: TemplateRegistry, config: PipelineConfig) -> str:
    """Produce the markdown formulation for a SNOP."""
    prompt = render(templates.get("formulation"), {"snop": serialize_snop(snop)})
    return backend.complete(_exchange(prompt, config)).text


def _effective_solver(snop: Snop, config: PipelineConfig) -> str:
    solver = config.solver or snop.solver
    return solver if solver and solver != ANY else "a suitable"


def generate_code(snop: Snop, formulation: str, backend, templates: TemplateRegistry, config: PipelineConfig) -> str:
    """Three threaded codegen calls (variables, constraints, objective), assembled."""
    solver = _effective_solver(snop, config)
    block = instruction_block_for(solver)
    serialized = serialize_snop(snop)
    parts: list[str] = []
    for name in ("codegen_vars", "codegen_constraints", "codegen_objective"):
        bindings = {
            "snop": serialized,
            "formulation": formulation,
            "solver": solver,
            "solver_instructions": block.text,
        }
        if name != "codegen_vars":
            bindings["code"] = "".join(parts)
        prompt = render(templates.get(name), bindings)
        completion = backend.complete(_exchange(prompt, config))
        parts.append(extract_code(completion.text))
    return "".join(parts)


def _scrub_paths(text: str, ws: Workspace | None) -> str:
    """Strip workspace paths from error text so prompts are location-independent.

    Interpreter tracebacks embed the absolute path of the code file; leaving
    it in would make replay digests depend on where the run happened to live.
    """
    if ws is None:
        return text
    root = str(ws.path)
    return text.replace(root + "/", "").replace(root, ".")


def debug_cycle(attempt: Attempt, error_text: str, backend, templates: TemplateRegistry, config: PipelineConfig) -> str:
    """Ask for a corrected program after an execution error; appends a code version."""
    error_text = _scrub_paths(error_text, attempt.workspace)
    prompt = render(
        templates.get("debug"),
        {"formulation": attempt.formulation or "", "code": attempt.code_versions[-1], "error": error_text},
    )
    new_code = extract_code(backend.complete(_exchange(prompt, config)).text)
    attempt.code_versions.append(new_code)
    attempt.debug_iters_used += 1
    return new_code


def fix_cycle(attempt: Attempt, report: TestReport, backend, templates: TemplateRegistry, config: PipelineConfig) -> str:
    """Ask for a corrected program after failing tests; appends a code version."""
    failures = "\n".join(
        f"{r.script_id}: {_scrub_paths(r.message, attempt.workspace)}" for r in report.failures()
    )
    prompt = render(
        templates.get("codefix"),
        {"snop": serialize_snop(attempt.snop), "code": attempt.code_versions[-1], "failures": failures},
    )
    new_code = extract_code(backend.complete(_exchange(prompt, config)).text)
    attempt.code_versions.append(new_code)
    attempt.fix_iters_used += 1
    return new_code


def generate_tests(snop: Snop, formulation: str, backend, templates: TemplateRegistry, config: PipelineConfig) -> list[str]:
    """Ask for validity-test scripts; may legitimately come back empty."""
    prompt = render(
        templates.get("testgen"), {"snop": serialize_snop(snop), "formulation": formulation}
    )
    return extract_scripts(backend.complete(_exchange(prompt, config)).text)


def review_gate(
    tests: list[TestScript],
    policy: str,
    instance: ProblemInstance,
    review_dir: Path,
    timeout_secs: float,
) -> list[TestScript]:
    """Pass generated tests through supervision before they gate the attempt.

    batch: substitute the instance's curated supervised tests (the offline
    stand-in for expert revision). interactive: park the scripts in an
    editable directory and wait for a confirm marker, then use the edited
    contents.
    """
    review_dir.mkdir(parents=True, exist_ok=True)
    for i, script in enumerate(tests):
        shutil.copyfile(script.path, review_dir / f"{i}.py")
    if policy == "batch":
        curated = [t for t in instance.validity_tests if t.kind == "supervised"]
        return curated if curated else tests
    marker = review_dir / REVIEW_PENDING_MARKER
    marker.write_text("waiting for review; create 'confirm' in this directory to resume\n")
    confirm = review_dir / REVIEW_CONFIRM_FILE
    deadline = time.monotonic() + timeout_secs
    while not confirm.exists():
        if time.monotonic() > deadline:
            raise ReviewTimeout(f"no confirmation within {timeout_secs}s at {review_dir}")
        time.sleep(0.05)
    marker.unlink(missing_ok=True)
    reviewed = sorted(p for p in review_dir.glob("*.py"))
    return [TestScript(path=p, kind="supervised") for p in reviewed]


def augment(
    snop: Snop, backend, templates: TemplateRegistry, config: PipelineConfig, k: int
) -> tuple[list[tuple[int, Snop]], list[dict]]:
    """Produce up to k rephrasings; ones that mutate the parameter set are skipped."""
    original_params = extract_params(snop).names
    prompt = render(templates.get("rephrase"), {"snop": serialize_snop(snop)})
    valid: list[tuple[int, Snop]] = []
    skipped: list[dict] = []
    for index in range(1, k + 1):
        completion = backend.complete(_exchange(prompt, config))
        text = completion.text
        if _FENCE_START in text:
            scripts = extract_scripts(text)
            text = scripts[0] if scripts else text
        try:
            candidate = parse_snop(text)
            rephrased = Snop(
                problem_type=snop.problem_type,
                problem_info=candidate.problem_info,
                input_format=snop.input_format,
                output_info=candidate.output_info,
                output_format=snop.output_format,
                objective=candidate.objective,
                solver=snop.solver,
            )
        except SnopError as exc:
            skipped.append({"index": index, "reason": "unparseable", "detail": str(exc)})
            continue
        params = extract_params(rephrased).names
        if params != original_params:
            diff = sorted(params.symmetric_difference(original_params))
            skipped.append({"index": index, "reason": "param_set_mutated", "detail": ", ".join(diff)})
            continue
        valid.append((index, rephrased))
    return valid, skipped


def _structural_report(snop: Snop, output: Any) -> TestReport:
    """Conformance of the output document against the output format, as a test report."""
    report = check_conformance(parse_format(snop.output_format), output)
    if report.ok:
        return TestReport(results=(TestResult("auto:structural-conformance", True),))
    message = "; ".join(f"{v.path}: {v.message}" for v in report.violations)
    return TestReport(results=(TestResult("auto:structural-conformance", False, message),))


def run_attempt(
    instance: ProblemInstance,
    snop_variant: Snop,
    rephrase_index: int,
    config: PipelineConfig,
    backend,
    templates: TemplateRegistry,
    sandbox: Sandbox,
) -> Attempt:
    """Drive one attempt through the state machine until SOLVED or FAILED."""
    attempt = Attempt(
        attempt_id=f"attempt-{rephrase_index}",
        rephrase_index=rephrase_index,
        snop=snop_variant,
    )

    def goto(state: AttemptState) -> None:
        attempt.state = state
        attempt.state_trail.append(state.value)

    def fail(reason: str) -> Attempt:
        attempt.failure_reason = reason
        goto(AttemptState.FAILED)
        return attempt

    try:
        goto(AttemptState.FORMULATE)
        formulation = formulate(snop_variant, backend, templates, config)
        if not formulation.strip():
            return fail("formulation_empty")
        attempt.formulation = formulation

        goto(AttemptState.CODEGEN)
        code = generate_code(snop_variant, formulation, backend, templates, config)
        attempt.code_versions.append(code)
        ws = sandbox.stage(code, instance, label=attempt.attempt_id)
        attempt.workspace = ws

        tests: list[TestScript] | None = None
        while True:
            goto(AttemptState.EXECUTE)
            sandbox.write_code(ws, attempt.code_versions[-1])
            result = sandbox.execute(ws, timeout=config.timeout_secs)
            attempt.executions.append(result)

            if result.classification in (Classification.RUNTIME_ERROR, Classification.TIMEOUT):
                if attempt.debug_iters_used < config.max_debug_iters:
                    goto(AttemptState.DEBUG)
                    error_text = result.stderr.strip() or f"execution ended in {result.classification.value}"
                    debug_cycle(attempt, error_text, backend, templates, config)
                    continue
                return fail("debug_budget_exhausted")
            if result.classification is Classification.RAN_NO_OUTPUT:
                return fail("no_output_written")

            # ran_with_output
            if config.mode in (Mode.PROMPT_ONLY, Mode.DEBUG):
                goto(AttemptState.SOLVED)
                return attempt

            if tests is None:
                goto(AttemptState.TESTGEN)
                scripts = generate_tests(snop_variant, formulation, backend, templates, config)
                tests_dir = ws.path / "tests"
                tests_dir.mkdir(exist_ok=True)
                staged = []
                for i, text in enumerate(scripts):
                    path = tests_dir / f"auto_{i}.py"
                    path.write_text(text, encoding="utf-8")
                    staged.append(TestScript(path=path, kind="auto"))
                if config.mode in REVIEWED_MODES:
                    goto(AttemptState.REVIEW)
                    tests = review_gate(
                        staged,
                        config.review_policy,
                        instance,
                        ws.path / "review",
                        config.review_timeout_secs,
                    )
                else:
                    tests = staged

            goto(AttemptState.TESTRUN)
            if tests:
                report = sandbox.run_tests(ws, tests, timeout=config.timeout_secs)
            else:
                # testgen produced nothing: structural conformance is the sole gate
                report = _structural_report(snop_variant, result.output)
            attempt.test_reports.append(report)
            if report.passed:
                goto(AttemptState.SOLVED)
                return attempt
            if attempt.fix_iters_used < config.max_fix_iters:
                goto(AttemptState.FIX)
                fix_cycle(attempt, report, backend, templates, config)
                continue
            return fail("fix_budget_exhausted")
    except (LlmError, ReviewTimeout) as exc:
        return fail(f"{type(exc).__name__}: {exc}")


def run_pipeline(
    instance: ProblemInstance,
    config: PipelineConfig,
    backend,
    templates: TemplateRegistry | None = None,
    sandbox: Sandbox | None = None,
    run_id: str | None = None,
) -> RunRecord:
    """Run the whole pipeline for one instance; all failures become statuses."""
    templates = templates or TemplateRegistry()
    run_id = run_id or f"{instance.id}-{uuid.uuid4().hex[:8]}"
    run_dir = config.runs_root / run_id
    if sandbox is None:
        sandbox_config = SandboxConfig(timeout_secs=config.timeout_secs)
        if config.interpreter_cmd:
            sandbox_config = SandboxConfig(
                interpreter_cmd=tuple(config.interpreter_cmd), timeout_secs=config.timeout_secs
            )
        sandbox = Sandbox(run_dir, sandbox_config)
    meter = _MeteredBackend(backend)
    started = time.monotonic()

    variants: list[tuple[int, Snop]] = [(0, instance.snop)]
    skipped: list[dict] = []
    if config.mode is Mode.FULL and config.augmentation_count > 0:
        try:
            extra, skipped = augment(instance.snop, meter, templates, config, config.augmentation_count)
            variants.extend(extra)
        except LlmError as exc:
            skipped = [{"index": -1, "reason": "augmentation_backend_failure", "detail": str(exc)}]

    attempts: list[Attempt] = []
    if config.concurrent_attempts and len(variants) > 1:
        with ThreadPoolExecutor(max_workers=len(variants)) as pool:
            futures = [
                pool.submit(run_attempt, instance, snop_v, idx, config, meter, templates, sandbox)
                for idx, snop_v in variants
            ]
            attempts = [f.result() for f in futures]
    else:
        for idx, snop_v in variants:
            attempt = run_attempt(instance, snop_v, idx, config, meter, templates, sandbox)
            attempts.append(attempt)
            if attempt.solved:
                break

    solved_attempts = [a for a in attempts if a.solved]
    winner = min(solved_attempts, key=lambda a: a.rephrase_index) if solved_attempts else None
    if winner is not None:
        status = "solved"
    elif any(
        e.classification is Classification.RAN_WITH_OUTPUT for a in attempts for e in a.executions
    ):
        status = "executed_only"
    else:
        status = "failed"

    record = RunRecord(
        run_id=run_id,
        instance_id=instance.id,
        config=config,
        attempts=attempts,
        status=status,
        skipped_rephrasings=skipped,
        prompt_tokens=meter.prompt_tokens,
        completion_tokens=meter.completion_tokens,
        llm_calls=meter.calls,
        duration_secs=time.monotonic() - started,
        winning_attempt_id=winner.attempt_id if winner else None,
        winning_output=winner.final_output() if winner else None,
    )
    persist_record(record, run_dir)
    return record


def record_to_jsonable(record: RunRecord) -> dict:
    return {
        "run_id": record.run_id,
        "instance_id": record.instance_id,
        "config": record.config.to_snapshot(),
        "status": record.status,
        "skipped_rephrasings": record.skipped_rephrasings,
        "prompt_tokens": record.prompt_tokens,
        "completion_tokens": record.completion_tokens,
        "llm_calls": record.llm_calls,
        "duration_secs": record.duration_secs,
        "winning_attempt_id": record.winning_attempt_id,
        "winning_output": record.winning_output,
        "attempts": [
            {
                "attempt_id": a.attempt_id,
                "rephrase_index": a.rephrase_index,
                "state": a.state.value,
                "state_trail": a.state_trail,
                "formulation": a.formulation,
                "code_versions": a.code_versions,
                "debug_iters_used": a.debug_iters_used,
                "fix_iters_used": a.fix_iters_used,
                "failure_reason": a.failure_reason,
                "workspace": str(a.workspace.path) if a.workspace else None,
                "executions": [
                    {
                        "classification": e.classification.value,
                        "exit_status": e.exit_status,
                        "stdout": e.stdout,
                        "stderr": e.stderr,
                        "duration_secs": e.duration_secs,
                        "output": e.output,
                    }
                    for e in a.executions
                ],
                "test_reports": [
                    {
                        "passed": r.passed,
                        "results": [
                            {"script_id": t.script_id, "passed": t.passed, "message": t.message}
                            for t in r.results
                        ],
                    }
                    for r in a.test_reports
                ],
            }
            for a in record.attempts
        ],
    }


def persist_record(record: RunRecord, run_dir: Path) -> Path:
    """Write record.json atomically (via a .partial file) for the audit trail."""
    run_dir.mkdir(parents=True, exist_ok=True)
    target = run_dir / "record.json"
    partial = run_dir / "record.json.partial"
    partial.write_text(
        json.dumps(record_to_jsonable(record), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    partial.replace(target)
    return target
