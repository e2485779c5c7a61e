"""Shared helpers: scripted backends and fakes for exercising the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from optagent.agent import Attempt, AttemptState, PipelineConfig, RunRecord
from optagent.llm import Completion
from optagent.sandbox import Classification, ExecutionResult, TestReport, TestResult, Workspace
from optagent.snop import Snop, serialize_snop

# Substrings identifying which template produced a prompt (from the built-in bodies).
MARKERS = {
    "formulation": "Reply with the markdown formulation only.",
    "codegen_vars": "Write the opening section",
    "codegen_constraints": "appending the section that builds",
    "codegen_objective": "append the section that sets",
    "testgen": "standalone test scripts",
    "rephrase": "Rephrase the natural-language parts",
    "debug": "raised an error when it was executed",
    "codefix": "failed validation tests",
}

GOOD_FORMULATION = "## Model\n\nVariables, constraints, and objective as described.\n"

# A solver program usable with any instance: copies data.json into output.json
# under a fixed key and reports a constant objective.
GOOD_CODE = (
    "import json\n"
    "with open('data.json') as f:\n"
    "    data = json.load(f)\n"
    "# [constraints]\n"
    "# [objective]\n"
    "with open('output.json', 'w') as f:\n"
    "    json.dump({'objective': 12.0, 'x': 4.0, 'y': 0.0}, f)\n"
)
BROKEN_CODE = (
    "import json\n"
    "with open('data.json') as f:\n"
    "    data = json.load(f)\n"
    "# [constraints]\n"
    "# [objective]\n"
    "raise RuntimeError('scripted failure')\n"
)


def split_three(code: str) -> tuple[str, str, str]:
    i = code.index("# [constraints]")
    j = code.index("# [objective]")
    return code[:i], code[i:j], code[j:]


@dataclass
class AttemptScript:
    """What the scripted backend answers during one attempt."""

    formulation: str = GOOD_FORMULATION
    parts: tuple[str, str, str] = field(default_factory=lambda: split_three(GOOD_CODE))
    debug: list[str] = field(default_factory=list)
    fix: list[str] = field(default_factory=list)
    testgen: str = "```python\nimport sys\nsys.exit(0)\n```\n"


class ScriptedBackend:
    """Answer pipeline prompts from per-attempt scripts, like a scripted model.

    Attempts advance on each formulation request; debug and fix responses are
    consumed per attempt in order (the last entry repeats once exhausted).
    """

    def __init__(self, attempts: list[AttemptScript], rephrasings: list[str] | None = None):
        self.attempts = attempts
        self.rephrasings = rephrasings or []
        self.exchanges = []
        self._attempt = -1
        self._rephrase_i = 0
        self._debug_i = 0
        self._fix_i = 0

    def _current(self) -> AttemptScript:
        return self.attempts[min(self._attempt, len(self.attempts) - 1)]

    def complete(self, exchange) -> Completion:
        self.exchanges.append(exchange)
        prompt = exchange.messages[-1].content
        if MARKERS["formulation"] in prompt:
            self._attempt += 1
            self._debug_i = 0
            self._fix_i = 0
            text = self._current().formulation
        elif MARKERS["codegen_vars"] in prompt:
            text = self._current().parts[0]
        elif MARKERS["codegen_constraints"] in prompt:
            text = self._current().parts[1]
        elif MARKERS["codegen_objective"] in prompt:
            text = self._current().parts[2]
        elif MARKERS["testgen"] in prompt:
            text = self._current().testgen
        elif MARKERS["rephrase"] in prompt:
            text = self.rephrasings[self._rephrase_i % len(self.rephrasings)]
            self._rephrase_i += 1
        elif MARKERS["debug"] in prompt:
            responses = self._current().debug or [BROKEN_CODE]
            text = responses[min(self._debug_i, len(responses) - 1)]
            self._debug_i += 1
        elif MARKERS["codefix"] in prompt:
            responses = self._current().fix or [BROKEN_CODE]
            text = responses[min(self._fix_i, len(responses) - 1)]
            self._fix_i += 1
        else:  # pragma: no cover - scenario bug
            raise AssertionError(f"unrecognized prompt: {prompt[:120]}")
        return Completion(
            text=text,
            prompt_token_count=len(prompt) // 4,
            completion_token_count=len(text) // 4,
            backend="live",
        )


def make_rephrasings(snop: Snop, k: int, drop_marker: str | None = None) -> list[str]:
    """Valid rewordings; optionally corrupt them by dropping one param marker."""
    docs = []
    for i in range(1, k + 1):
        info = tuple(f"Reworded ({i}): {s}" for s in snop.problem_info)
        if drop_marker is not None:
            info = tuple(s.replace(drop_marker, "SOMETHING") for s in info)
        rephrased_fields = dict(
            problem_type=snop.problem_type,
            problem_info=info,
            input_format=snop.input_format,
            output_info=tuple(f"Reworded ({i}): {s}" for s in snop.output_info),
            output_format=snop.output_format,
            objective=f"Reworded ({i}): {snop.objective}",
            solver=snop.solver,
        )
        docs.append(serialize_snop(Snop(**rephrased_fields)))
    return docs


class FakeSandbox:
    """Recorded-results sandbox stand-in: no subprocesses, scripted outcomes.

    Per attempt, the first ``errors_per_attempt`` executions fail at runtime;
    later ones produce an output document. Tests always fail when
    ``tests_always_fail`` is set. Counts every execute call.
    """

    def __init__(self, root: Path, errors_per_attempt: int = 0, tests_always_fail: bool = False,
                 output: dict | None = None):
        self.root = Path(root)
        self.errors_per_attempt = errors_per_attempt
        self.tests_always_fail = tests_always_fail
        self.output = output if output is not None else {"objective": 12.0, "x": 4.0, "y": 0.0}
        self.execute_calls = 0
        self._per_ws_calls: dict[Path, int] = {}

    def stage(self, code: str, instance, label: str | None = None) -> Workspace:
        path = self.root / (label or "ws")
        n = 1
        while path.exists():
            n += 1
            path = self.root / f"{label or 'ws'}-{n}"
        path.mkdir(parents=True)
        code_path = path / "code.py"
        code_path.write_text(code, encoding="utf-8")
        data_path = path / "data.json"
        data_path.write_text("{}", encoding="utf-8")
        return Workspace(path=path, code_path=code_path, data_path=data_path, created_at=0.0)

    def write_code(self, ws: Workspace, code: str) -> None:
        ws.code_path.write_text(code, encoding="utf-8")

    def execute(self, ws: Workspace, timeout: float | None = None) -> ExecutionResult:
        self.execute_calls += 1
        calls = self._per_ws_calls.get(ws.path, 0) + 1
        self._per_ws_calls[ws.path] = calls
        if calls <= self.errors_per_attempt:
            return ExecutionResult(
                classification=Classification.RUNTIME_ERROR,
                exit_status=1,
                stdout="",
                stderr=f"RuntimeError: scripted failure {calls}",
                duration_secs=0.0,
            )
        return ExecutionResult(
            classification=Classification.RAN_WITH_OUTPUT,
            exit_status=0,
            stdout="",
            stderr="",
            duration_secs=0.0,
            output=dict(self.output),
        )

    def run_tests(self, ws: Workspace, tests, timeout: float | None = None) -> TestReport:
        if self.tests_always_fail:
            return TestReport(results=(TestResult("auto:scripted", False, "scripted test failure"),))
        return TestReport(results=(TestResult("auto:scripted", True),))


def make_record(
    instance_id: str,
    mode: str = "full",
    executed: bool = True,
    agent_solved: bool = True,
    winning_output: dict | None = None,
    completion_tokens: int = 100,
    attempts: int = 1,
    augmentation_count: int | None = None,
) -> RunRecord:
    """Assemble a minimal RunRecord the way a finished pipeline would."""
    config = PipelineConfig.for_mode(mode, **(
        {"augmentation_count": augmentation_count} if augmentation_count is not None else {}
    ))
    attempt_list = []
    for i in range(attempts):
        executions = []
        if executed:
            executions.append(
                ExecutionResult(
                    classification=Classification.RAN_WITH_OUTPUT,
                    exit_status=0,
                    stdout="",
                    stderr="",
                    duration_secs=0.01,
                    output=winning_output,
                )
            )
        else:
            executions.append(
                ExecutionResult(
                    classification=Classification.RUNTIME_ERROR,
                    exit_status=1,
                    stdout="",
                    stderr="boom",
                    duration_secs=0.01,
                )
            )
        attempt = Attempt(attempt_id=f"attempt-{i}", rephrase_index=i, snop=None)
        attempt.executions = executions
        attempt.state = (
            AttemptState.SOLVED if agent_solved and i == attempts - 1 else AttemptState.FAILED
        )
        attempt_list.append(attempt)
    status = "solved" if agent_solved else ("executed_only" if executed else "failed")
    return RunRecord(
        run_id=f"{instance_id}-test",
        instance_id=instance_id,
        config=config,
        attempts=attempt_list,
        status=status,
        skipped_rephrasings=[],
        prompt_tokens=completion_tokens * 3,
        completion_tokens=completion_tokens,
        llm_calls=4,
        duration_secs=0.05,
        winning_attempt_id=f"attempt-{attempts - 1}" if agent_solved else None,
        winning_output=winning_output if agent_solved else None,
    )
