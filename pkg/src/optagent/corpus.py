"""Problem-instance corpus: each instance carries five views of one problem.

Per-instance layout under the corpus root:

    <id>/snop.txt             structured problem description
    <id>/data.json            input data matching the SNOP's input format
    <id>/sample_output.json   a reference optimal output
    <id>/tests/*.py           validity tests, first line "# kind: <auto|supervised|human>"

plus a root manifest.json naming every instance, its problem class, its
optimal objective value (kept as a decimal string so version control never
sees float drift), and the output key that holds the objective.
"""

from __future__ import annotations

import json
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .sandbox import Sandbox, SandboxConfig, TestScript
from .snop import (
    ConformanceReport,
    Snop,
    ViolationKind,
    check_conformance,
    parse_format,
    parse_snop,
)

PROBLEM_CLASSES = ("LP", "MILP")


class CorpusError(Exception):
    pass


class MissingManifest(CorpusError):
    pass


class DanglingPath(CorpusError):
    def __init__(self, instance_id: str, path: Path):
        super().__init__(f"instance {instance_id!r} references missing path {path}")
        self.instance_id = instance_id
        self.path = path


class UnknownId(CorpusError):
    def __init__(self, instance_id: str):
        super().__init__(f"no instance with id {instance_id!r}")
        self.instance_id = instance_id


class ConformanceFailure(CorpusError):
    def __init__(self, view: str, report: ConformanceReport):
        details = "; ".join(f"{v.path}: {v.message}" for v in report.violations)
        super().__init__(f"{view} does not conform to its format: {details}")
        self.view = view
        self.report = report


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    path: str
    problem_class: str
    optimal_value: str  # decimal string; parsed to float at instance load
    objective_key: str


@dataclass(frozen=True)
class CorpusManifest:
    root: Path
    version: str
    entries: tuple[ManifestEntry, ...]

    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.entries:
            out[e.problem_class] = out.get(e.problem_class, 0) + 1
        return out


@dataclass(frozen=True)
class ProblemInstance:
    id: str
    snop: Snop
    data_path: Path
    validity_tests: tuple[TestScript, ...]
    optimal_value: float | None
    sample_output_path: Path | None
    problem_class: str
    objective_key: str


_INSTANCE_FILES = ("snop.txt", "data.json", "sample_output.json")


def load_corpus(root: Path | str) -> CorpusManifest:
    """Read the manifest and verify every referenced path exists (content is not read)."""
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise MissingManifest(f"no manifest.json under {root}")
    doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    entries = []
    seen = set()
    for item in doc.get("instances", []):
        entry = ManifestEntry(
            id=item["id"],
            path=item.get("path", item["id"]),
            problem_class=item["problem_class"],
            optimal_value=str(item["optimal_value"]),
            objective_key=item.get("objective_key", "objective"),
        )
        if entry.id in seen:
            raise CorpusError(f"duplicate instance id {entry.id!r}")
        seen.add(entry.id)
        if entry.problem_class not in PROBLEM_CLASSES:
            raise CorpusError(f"instance {entry.id!r} has unknown class {entry.problem_class!r}")
        instance_dir = root / entry.path
        if not instance_dir.is_dir():
            raise DanglingPath(entry.id, instance_dir)
        for name in _INSTANCE_FILES:
            if not (instance_dir / name).exists():
                raise DanglingPath(entry.id, instance_dir / name)
        entries.append(entry)
    return CorpusManifest(root=root, version=str(doc.get("version", "0")), entries=tuple(entries))


def load_test_scripts(tests_dir: Path) -> tuple[TestScript, ...]:
    """Discover test scripts in a directory, reading each one-line kind header."""
    scripts = []
    if tests_dir.is_dir():
        for path in sorted(tests_dir.iterdir()):
            if path.name.startswith(".") or not path.is_file():
                continue
            first = path.open(encoding="utf-8").readline()
            kind = "supervised"
            if first.startswith("#") and "kind:" in first:
                kind = first.split("kind:", 1)[1].strip()
            scripts.append(TestScript(path=path, kind=kind))
    return tuple(scripts)


def load_instance(manifest: CorpusManifest, instance_id: str) -> ProblemInstance:
    """Materialize one instance, verifying all its invariants eagerly."""
    entry = next((e for e in manifest.entries if e.id == instance_id), None)
    if entry is None:
        raise UnknownId(instance_id)
    instance_dir = manifest.root / entry.path
    snop = parse_snop((instance_dir / "snop.txt").read_text(encoding="utf-8"))
    data_path = instance_dir / "data.json"
    sample_path = instance_dir / "sample_output.json"

    data = json.loads(data_path.read_text(encoding="utf-8"))
    report = check_conformance(parse_format(snop.input_format), data)
    if not report.ok:
        raise ConformanceFailure("data", report)
    sample = json.loads(sample_path.read_text(encoding="utf-8"))
    report = check_conformance(parse_format(snop.output_format), sample)
    if not report.ok:
        raise ConformanceFailure("sample_output", report)

    tests = load_test_scripts(instance_dir / "tests")
    if not tests:
        raise CorpusError(f"instance {instance_id!r} has no validity tests")
    return ProblemInstance(
        id=entry.id,
        snop=snop,
        data_path=data_path,
        validity_tests=tests,
        optimal_value=float(entry.optimal_value),
        sample_output_path=sample_path,
        problem_class=entry.problem_class,
        objective_key=entry.objective_key,
    )


def integrity_check(instance: ProblemInstance, sandbox_config: SandboxConfig | None = None) -> ConformanceReport:
    """Re-check both conformance views and dry-run every validity test on the sample output."""
    merged = ConformanceReport()
    data = json.loads(instance.data_path.read_text(encoding="utf-8"))
    for v in check_conformance(parse_format(instance.snop.input_format), data).violations:
        merged.add(v.kind, f"data:{v.path}", v.message)
    sample = json.loads(instance.sample_output_path.read_text(encoding="utf-8"))
    for v in check_conformance(parse_format(instance.snop.output_format), sample).violations:
        merged.add(v.kind, f"sample_output:{v.path}", v.message)

    tmp = Path(tempfile.mkdtemp(prefix=f"integrity-{instance.id}-"))
    try:
        sandbox = Sandbox(tmp, sandbox_config or SandboxConfig())
        ws = sandbox.stage("", instance, label="dry-run")
        shutil.copyfile(instance.sample_output_path, ws.path / "output.json")
        report = sandbox.run_tests(ws, instance.validity_tests)
        for result in report.results:
            if not result.passed:
                merged.add(ViolationKind.TEST_FAILURE, f"test:{result.script_id}", result.message)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return merged
