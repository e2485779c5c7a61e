"""Isolated execution of generated solver programs and test scripts.

Each pipeline attempt gets its own workspace directory holding the code file
and a copy of the instance's data.json; the program is run with the workspace
as working directory and is expected to write output.json there. Test scripts
follow an exit-status protocol: status 0 means pass, anything else is a
failure whose message is the script's last stderr line.

Working-directory confinement is a trust boundary for cooperating fixture
code, not a security guarantee.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any


class SandboxSpawnFailure(Exception):
    """The interpreter itself could not be started (distinct from program failure)."""


class IoFailure(Exception):
    pass


class Classification(Enum):
    RAN_WITH_OUTPUT = "ran_with_output"
    RAN_NO_OUTPUT = "ran_no_output"
    RUNTIME_ERROR = "runtime_error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class SandboxConfig:
    interpreter_cmd: tuple[str, ...] = (sys.executable,)
    timeout_secs: float = 60.0
    grace_secs: float = 1.0
    code_ext: str = "py"


@dataclass(frozen=True)
class TestScript:
    """A validity-test descriptor: a script path plus its provenance kind."""

    __test__ = False  # not a pytest class, despite the name

    path: Path
    kind: str  # auto | supervised | human

    def __post_init__(self):
        if self.kind not in ("auto", "supervised", "human"):
            raise ValueError(f"unknown test kind {self.kind!r}")


@dataclass(frozen=True)
class Workspace:
    path: Path
    code_path: Path
    data_path: Path
    created_at: float


@dataclass(frozen=True)
class ExecutionResult:
    classification: Classification
    exit_status: int | None
    stdout: str
    stderr: str
    duration_secs: float
    output: Any = None  # parsed output.json, when one was written


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    script_id: str
    passed: bool
    message: str = ""


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    results: tuple[TestResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> tuple[TestResult, ...]:
        return tuple(r for r in self.results if not r.passed)


class Sandbox:
    """Stages and runs code in per-attempt workspaces under one root directory."""

    def __init__(self, root: Path | str, config: SandboxConfig | None = None):
        self.root = Path(root)
        self.config = config or SandboxConfig()

    def stage(self, code: str, instance, label: str | None = None) -> Workspace:
        """Create a fresh workspace holding the code file and the instance data."""
        base = label or f"ws-{getattr(instance, 'id', 'adhoc')}"
        path = self.root / base
        n = 1
        while path.exists():
            n += 1
            path = self.root / f"{base}-{n}"
        try:
            path.mkdir(parents=True)
            code_path = path / f"code.{self.config.code_ext}"
            code_path.write_text(code, encoding="utf-8")
            data_path = path / "data.json"
            shutil.copyfile(instance.data_path, data_path)
        except OSError as exc:
            raise IoFailure(f"cannot stage workspace at {path}: {exc}") from exc
        return Workspace(path=path, code_path=code_path, data_path=data_path, created_at=time.time())

    def write_code(self, ws: Workspace, code: str) -> None:
        try:
            ws.code_path.write_text(code, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write code file {ws.code_path}: {exc}") from exc

    def execute(self, ws: Workspace, timeout: float | None = None) -> ExecutionResult:
        """Run the staged code file and classify what happened."""
        timeout = self.config.timeout_secs if timeout is None else timeout
        output_path = ws.path / "output.json"
        if output_path.exists():
            output_path.unlink()
        cmd = list(self.config.interpreter_cmd) + [ws.code_path.name]
        start = time.monotonic()
        try:
            proc = subprocess.run(
                cmd,
                cwd=ws.path,
                capture_output=True,
                text=True,
                timeout=timeout,
            )
            duration = time.monotonic() - start
            stdout, stderr, exit_status = proc.stdout, proc.stderr, proc.returncode
            timed_out = False
        except subprocess.TimeoutExpired as exc:
            duration = time.monotonic() - start
            stdout = _expired_text(exc.stdout)
            stderr = _expired_text(exc.stderr)
            exit_status = None
            timed_out = True
        except FileNotFoundError as exc:
            raise SandboxSpawnFailure(f"interpreter not found: {cmd[0]}") from exc

        output = None
        if timed_out:
            classification = Classification.TIMEOUT
        elif exit_status != 0:
            classification = Classification.RUNTIME_ERROR
        else:
            output = _read_output(output_path)
            classification = (
                Classification.RAN_WITH_OUTPUT if output is not None else Classification.RAN_NO_OUTPUT
            )
        result = ExecutionResult(
            classification=classification,
            exit_status=exit_status,
            stdout=_relativize(stdout, ws.path),
            stderr=_relativize(stderr, ws.path),
            duration_secs=duration,
            output=output,
        )
        self._log(ws, " ".join(cmd), result)
        return result

    def _log(self, ws: Workspace, cmd: str, result: ExecutionResult) -> None:
        entry = (
            f"$ {cmd}\n"
            f"classification: {result.classification.value}"
            f" exit={result.exit_status} duration={result.duration_secs:.3f}s\n"
        )
        if result.stdout:
            entry += f"--- stdout ---\n{result.stdout}\n"
        if result.stderr:
            entry += f"--- stderr ---\n{result.stderr}\n"
        try:
            with open(ws.path / "exec.log", "a", encoding="utf-8") as fh:
                fh.write(entry + "\n")
        except OSError:
            pass  # logging must never fail an execution

    def run_tests(self, ws: Workspace, tests, timeout: float | None = None) -> TestReport:
        """Run each test script in the workspace; nonzero exit means failure."""
        timeout = self.config.timeout_secs if timeout is None else timeout
        tests_dir = ws.path / "tests"
        tests_dir.mkdir(exist_ok=True)
        results = []
        for i, script in enumerate(tests):
            source = Path(script.path)
            if ws.path not in source.parents:
                target = tests_dir / f"{i}-{source.name}"
                shutil.copyfile(source, target)
            else:
                target = source
            cmd = list(self.config.interpreter_cmd) + [str(target.relative_to(ws.path))]
            script_id = f"{script.kind}:{source.stem}"
            try:
                proc = subprocess.run(cmd, cwd=ws.path, capture_output=True, text=True, timeout=timeout)
            except subprocess.TimeoutExpired:
                results.append(TestResult(script_id, False, f"test timed out after {timeout}s"))
                continue
            except FileNotFoundError as exc:
                raise SandboxSpawnFailure(f"interpreter not found: {cmd[0]}") from exc
            if proc.returncode == 0:
                results.append(TestResult(script_id, True))
            else:
                message = _relativize(_last_line(proc.stderr, proc.returncode), ws.path)
                results.append(TestResult(script_id, False, message))
        return TestReport(results=tuple(results))


def _relativize(text: str, ws_path: Path) -> str:
    """Strip the workspace location from captured output.

    Interpreter tracebacks embed the code file's absolute path; keeping the
    captured text workspace-relative makes run records identical across
    replays regardless of where they ran.
    """
    root = str(ws_path)
    return text.replace(root + "/", "").replace(root, ".")


def _expired_text(raw) -> str:
    if raw is None:
        return ""
    if isinstance(raw, bytes):
        return raw.decode("utf-8", errors="replace")
    return raw


def _read_output(path: Path):
    if not path.exists():
        return None
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError):
        return None


def _last_line(stderr: str, returncode: int) -> str:
    lines = [line for line in stderr.splitlines() if line.strip()]
    if lines:
        return lines[-1]
    return f"exit status {returncode}"
