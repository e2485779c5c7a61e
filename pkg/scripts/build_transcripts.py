#!/usr/bin/env python3
"""Record the bundled replay transcripts under transcripts/.

Each instance gets one JSON-lines transcript recorded from a full-mode
pipeline run against a scripted backend. The scripted completions come from
the instance's corpus scripts, so the pipeline consumes them byte-identically
to model output. Scenarios per instance:

    prod-plan-1   correct code on the first try
    knapsack-1    correct code on the first try
    diet-1        first program crashes; one debug round fixes it
    transport-1   program runs but underships; the curated constraint test
                  catches it and one fix round repairs the code
    sched-1       every program version crashes, in every rephrasing
    blend-1       every program version crashes, in every rephrasing

Because replay matches requests by digest, every other mode replays a subset
of the same transcript.
"""

from __future__ import annotations

import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from optagent.agent import PipelineConfig, run_pipeline  # noqa: E402
from optagent.corpus import load_corpus, load_instance  # noqa: E402
from optagent.llm import Completion, RecordingBackend, Transcript  # noqa: E402
from optagent.snop import Snop, serialize_snop  # noqa: E402

CORPUS = REPO / "corpus"
TRANSCRIPTS = REPO / "transcripts"

# Substrings that identify which template produced a prompt.
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


@dataclass
class Scenario:
    instance_id: str
    formulation: str
    initial_parts: tuple[str, str, str]
    debug_responses: list[str] = field(default_factory=list)
    fix_responses: list[str] = field(default_factory=list)
    autotest: str = ""


class ScenarioBackend:
    """Deterministic stand-in for a model, scripted per instance."""

    def __init__(self, scenario: Scenario, rephrasings: list[str]):
        self.scenario = scenario
        self.rephrasings = rephrasings
        self._rephrase_i = 0
        self._debug_i = 0
        self._fix_i = 0

    def complete(self, exchange) -> Completion:
        prompt = exchange.messages[-1].content
        s = self.scenario
        if MARKERS["formulation"] in prompt:
            self._debug_i = 0  # a formulation request starts a new attempt
            self._fix_i = 0
            text = s.formulation
        elif MARKERS["codegen_vars"] in prompt:
            text = s.initial_parts[0]
        elif MARKERS["codegen_constraints"] in prompt:
            text = s.initial_parts[1]
        elif MARKERS["codegen_objective"] in prompt:
            text = s.initial_parts[2]
        elif MARKERS["testgen"] in prompt:
            text = f"```python\n{s.autotest}```\n"
        elif MARKERS["rephrase"] in prompt:
            text = self.rephrasings[self._rephrase_i % len(self.rephrasings)]
            self._rephrase_i += 1
        elif MARKERS["debug"] in prompt:
            text = s.debug_responses[min(self._debug_i, len(s.debug_responses) - 1)]
            self._debug_i += 1
        elif MARKERS["codefix"] in prompt:
            text = s.fix_responses[min(self._fix_i, len(s.fix_responses) - 1)]
            self._fix_i += 1
        else:
            raise ValueError(f"scenario backend got an unrecognized prompt:\n{prompt[:200]}")
        return Completion(
            text=text,
            prompt_token_count=len(prompt) // 4,
            completion_token_count=len(text) // 4,
            backend="live",
        )


def split_sections(code: str) -> tuple[str, str, str]:
    """Split a solver script at its section markers; parts concatenate back exactly."""
    i = code.index("# [constraints]")
    j = code.index("# [objective]")
    return code[:i], code[i:j], code[j:]


def build_rephrasings(snop: Snop, k: int) -> list[str]:
    """Deterministic rewordings that keep every parameter marker intact."""
    docs = []
    for i in range(1, k + 1):
        rephrased = Snop(
            problem_type=snop.problem_type,
            problem_info=tuple(f"Put differently ({i}): {s}" for s in snop.problem_info),
            input_format=snop.input_format,
            output_info=tuple(f"Put differently ({i}): {s}" for s in snop.output_info),
            output_format=snop.output_format,
            objective=f"Put differently ({i}): {snop.objective}",
            solver=snop.solver,
        )
        docs.append(serialize_snop(rephrased))
    return docs


def formulation_for(instance_id: str) -> str:
    return (
        f"## Formulation ({instance_id})\n\n"
        "### Variables\nOne decision variable per quantity named in the output format.\n\n"
        "### Constraints\nEvery requirement stated in the problem description, "
        "with parameters read from data.json.\n\n"
        "### Objective\nThe objective stated in the problem description.\n"
    )


def script(instance_id: str, name: str) -> str:
    return (CORPUS / instance_id / "scripts" / name).read_text(encoding="utf-8")


def build_scenarios() -> list[Scenario]:
    scenarios = []
    for instance_id in ("prod-plan-1", "knapsack-1"):
        scenarios.append(
            Scenario(
                instance_id=instance_id,
                formulation=formulation_for(instance_id),
                initial_parts=split_sections(script(instance_id, "solver.py")),
                autotest=script(instance_id, "autotest.py"),
            )
        )
    scenarios.append(
        Scenario(
            instance_id="diet-1",
            formulation=formulation_for("diet-1"),
            initial_parts=split_sections(script("diet-1", "broken_solver.py")),
            debug_responses=[script("diet-1", "solver.py")],
            autotest=script("diet-1", "autotest.py"),
        )
    )
    scenarios.append(
        Scenario(
            instance_id="transport-1",
            formulation=formulation_for("transport-1"),
            initial_parts=split_sections(script("transport-1", "bad_output_solver.py")),
            fix_responses=[script("transport-1", "solver.py")],
            autotest=script("transport-1", "autotest.py"),
        )
    )
    for instance_id in ("sched-1", "blend-1"):
        scenarios.append(
            Scenario(
                instance_id=instance_id,
                formulation=formulation_for(instance_id),
                initial_parts=split_sections(script(instance_id, "broken_solver.py")),
                debug_responses=[script(instance_id, "broken_solver.py")],
                autotest=script(instance_id, "autotest.py"),
            )
        )
    return scenarios


def main() -> None:
    manifest = load_corpus(CORPUS)
    TRANSCRIPTS.mkdir(exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix="transcript-build-"))
    try:
        for scenario in build_scenarios():
            instance = load_instance(manifest, scenario.instance_id)
            path = TRANSCRIPTS / f"{scenario.instance_id}.jsonl"
            if path.exists():
                path.unlink()
            transcript = Transcript(path=path, corpus_id=manifest.version, run_id=scenario.instance_id)
            backend = RecordingBackend(
                ScenarioBackend(scenario, build_rephrasings(instance.snop, 5)), transcript
            )
            config = PipelineConfig.for_mode(
                "full",
                max_debug_iters=3,
                max_fix_iters=3,
                augmentation_count=5,
                runs_root=scratch / scenario.instance_id,
            )
            record = run_pipeline(instance, config, backend)
            print(
                f"{scenario.instance_id}: status={record.status} "
                f"records={len(transcript.records)} -> {path}"
            )
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


if __name__ == "__main__":
    main()
