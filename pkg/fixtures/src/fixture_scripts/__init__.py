"""Desk-scale fixture scripts: the corpus's stand-ins for LLM-generated code.

Each corpus instance ships plain-file scripts that the agent pipeline's
sandbox executes: a reference solver that computes the optimum by direct
enumeration or closed form, validity tests following the exit-status protocol
(0 passes, nonzero fails with the reason on stderr), and negative-case
variants (a solver that crashes, a solver that writes a wrong output). This
package is the programmatic surface over those files; it talks to the main
pipeline only through its file contracts: the corpus directory layout and the
workspace convention of data.json in, output.json out.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

ROLES = ("solver", "test", "broken_solver", "bad_output_solver")
CATEGORIES = ("format", "constraints", "consistency")

SANDBOX_TIMEOUT_SECS = 60.0


class FixtureError(Exception):
    pass


@dataclass(frozen=True)
class FixtureScript:
    text: str
    role: str
    instance_id: str
    path: Path

    def __post_init__(self):
        if self.role not in ROLES:
            raise FixtureError(f"unknown fixture role {self.role!r}")
        if self.role in ("solver", "bad_output_solver"):
            # solver-shaped scripts must use the workspace file contract
            if "data.json" not in self.text or "output.json" not in self.text:
                raise FixtureError(
                    f"{self.instance_id}/{self.path.name}: solver scripts must read "
                    "data.json and write output.json"
                )


def list_instances(corpus_root: Path | str) -> list[dict]:
    """Instance entries from the corpus manifest (id, class, optimum, objective key)."""
    manifest_path = Path(corpus_root) / "manifest.json"
    if not manifest_path.exists():
        raise FixtureError(f"no manifest.json under {corpus_root}")
    return json.loads(manifest_path.read_text(encoding="utf-8"))["instances"]


def _instance_dir(corpus_root: Path | str, instance_id: str) -> Path:
    path = Path(corpus_root) / instance_id
    if not path.is_dir():
        raise FixtureError(f"no instance directory {path}")
    return path


def solver_script(corpus_root: Path | str, instance_id: str, role: str = "solver") -> FixtureScript:
    """The instance's reference solver (or one of its negative-case variants)."""
    if role not in ("solver", "broken_solver", "bad_output_solver"):
        raise FixtureError(f"{role!r} is not a solver role")
    path = _instance_dir(corpus_root, instance_id) / "scripts" / f"{role}.py"
    if not path.exists():
        raise FixtureError(f"instance {instance_id!r} has no {role} script")
    return FixtureScript(
        text=path.read_text(encoding="utf-8"), role=role, instance_id=instance_id, path=path
    )


def test_script(corpus_root: Path | str, instance_id: str, category: str) -> FixtureScript:
    """The instance's validity test for one category (format/constraints/consistency)."""
    if category not in CATEGORIES:
        raise FixtureError(f"unknown test category {category!r}")
    tests_dir = _instance_dir(corpus_root, instance_id) / "tests"
    matches = sorted(p for p in tests_dir.glob("*.py") if category in p.stem)
    if not matches:
        raise FixtureError(f"instance {instance_id!r} has no {category} test")
    path = matches[0]
    return FixtureScript(
        text=path.read_text(encoding="utf-8"), role="test", instance_id=instance_id, path=path
    )


def corrupted_output(corpus_root: Path | str, instance_id: str, category: str) -> Path:
    """The seeded output that must fail the category's test."""
    if category not in CATEGORIES:
        raise FixtureError(f"unknown test category {category!r}")
    path = _instance_dir(corpus_root, instance_id) / "corrupted" / f"{category}.json"
    if not path.exists():
        raise FixtureError(f"instance {instance_id!r} has no corrupted {category} output")
    return path


def make_workspace(
    workdir: Path | str,
    data_path: Path | str,
    output_path: Path | str | None = None,
) -> Path:
    """Lay out a workspace per the sandbox contract: data.json, optional output.json."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(data_path, workdir / "data.json")
    if output_path is not None:
        shutil.copyfile(output_path, workdir / "output.json")
    return workdir


def run_script(
    script: FixtureScript, workdir: Path | str, timeout: float = SANDBOX_TIMEOUT_SECS
) -> subprocess.CompletedProcess:
    """Run a fixture script inside a workspace, exactly as the sandbox would."""
    target = Path(workdir) / script.path.name
    target.write_text(script.text, encoding="utf-8")
    return subprocess.run(
        [sys.executable, target.name],
        cwd=workdir,
        capture_output=True,
        text=True,
        timeout=timeout,
    )


def verify(corpus_root: Path | str, scratch: Path | str) -> list[str]:
    """Check the whole fixture contract; returns a list of problems (empty = good)."""
    problems = []
    scratch = Path(scratch)
    for entry in list_instances(corpus_root):
        instance_id = entry["id"]
        instance_dir = _instance_dir(corpus_root, instance_id)
        solver = solver_script(corpus_root, instance_id)
        ws = make_workspace(scratch / instance_id / "solve", instance_dir / "data.json")
        proc = run_script(solver, ws)
        if proc.returncode != 0:
            problems.append(f"{instance_id}: solver exited {proc.returncode}: {proc.stderr.strip()}")
            continue
        output = json.loads((ws / "output.json").read_text(encoding="utf-8"))
        got = output[entry["objective_key"]]
        want = float(entry["optimal_value"])
        if got != want:
            problems.append(f"{instance_id}: solver objective {got} != {want}")
        for category in CATEGORIES:
            check = test_script(corpus_root, instance_id, category)
            good_ws = make_workspace(
                scratch / instance_id / f"good-{category}",
                instance_dir / "data.json",
                instance_dir / "sample_output.json",
            )
            if run_script(check, good_ws).returncode != 0:
                problems.append(f"{instance_id}: {category} test fails on the reference output")
            bad_ws = make_workspace(
                scratch / instance_id / f"bad-{category}",
                instance_dir / "data.json",
                corrupted_output(corpus_root, instance_id, category),
            )
            bad = run_script(check, bad_ws)
            if bad.returncode == 0:
                problems.append(f"{instance_id}: {category} test passes on its corrupted output")
            elif not bad.stderr.strip():
                problems.append(f"{instance_id}: {category} test fails silently")
    return problems
