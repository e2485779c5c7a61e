"""Prompt templates for every pipeline step, plus per-solver instruction blocks.

Templates use ``{{slot}}`` placeholders (escape a literal ``{{`` as ``{{{{``),
which never collide with the JSON braces that SNOP content is full of. The
registry is closed: only the eight known template names exist, though their
bodies can be overridden from a directory of ``<name>.tmpl`` files.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

TEMPLATE_NAMES = (
    "formulation",
    "codegen_vars",
    "codegen_constraints",
    "codegen_objective",
    "testgen",
    "rephrase",
    "debug",
    "codefix",
)


class PromptError(Exception):
    pass


class TemplateNotFound(PromptError):
    def __init__(self, name: str):
        super().__init__(f"no template named {name!r}")
        self.name = name


class MissingSlot(PromptError):
    def __init__(self, name: str):
        super().__init__(f"no binding for slot {name!r}")
        self.name = name


class UnknownSlot(PromptError):
    def __init__(self, name: str):
        super().__init__(f"binding {name!r} does not match any slot")
        self.name = name


_PLACEHOLDER_RE = re.compile(r"\{\{\{\{|\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")


def _scan_slots(body: str) -> set[str]:
    return {m.group(1) for m in _PLACEHOLDER_RE.finditer(body) if m.group(1)}


@dataclass(frozen=True)
class Template:
    name: str
    body: str
    slots: tuple[str, ...]

    def __post_init__(self):
        scanned = _scan_slots(self.body)
        declared = set(self.slots)
        if scanned != declared:
            raise PromptError(
                f"template {self.name!r}: placeholders {sorted(scanned)} != declared slots {sorted(declared)}"
            )
        stripped = _PLACEHOLDER_RE.sub("", self.body)
        if "{{" in stripped:
            raise PromptError(f"template {self.name!r} contains a stray '{{{{'")


def render(template: Template, bindings: dict[str, str]) -> str:
    """Substitute every placeholder; rejects missing and unknown bindings."""
    for name in bindings:
        if name not in template.slots:
            raise UnknownSlot(name)
    for name in template.slots:
        if name not in bindings:
            raise MissingSlot(name)

    def _sub(m: re.Match) -> str:
        if m.group(0) == "{{{{":
            return "{{"
        return bindings[m.group(1)]

    return _PLACEHOLDER_RE.sub(_sub, template.body)


_BUILTIN_BODIES = {
    "formulation": """\
You are given a structured description of an optimization problem. Write a
mathematical formulation for it in markdown. Define, in order: the decision
variables, the constraints, and the objective function.

Refer to problem parameters exactly as they are written inside \\param{}
markers; do not substitute numeric values, since the data lives in a separate
file.

Problem:
{{snop}}

Reply with the markdown formulation only.
""",
    "codegen_vars": """\
Write the opening section of a program that solves the optimization problem
below with the {{solver}} solver. In this section: import what you need, read
the input data from the file "data.json" in the working directory, and define
the decision variables.

{{solver_instructions}}

Problem:
{{snop}}

Formulation:
{{formulation}}

Reply with code only. Later sections will append the constraints and the
objective, so leave the program open for continuation.
""",
    "codegen_constraints": """\
Continue the {{solver}} program below by appending the section that builds
the constraints from the formulation.

{{solver_instructions}}

Problem:
{{snop}}

Formulation:
{{formulation}}

Program so far:
{{code}}

Reply with the continuation only; it is appended to the program verbatim.
""",
    "codegen_objective": """\
Finish the {{solver}} program below: append the section that sets the
objective, solves the problem, and writes the solution to the file
"output.json" in the working directory, matching the problem's output format.

{{solver_instructions}}

Problem:
{{snop}}

Formulation:
{{formulation}}

Program so far:
{{code}}

Reply with the continuation only; it is appended to the program verbatim.
""",
    "testgen": """\
Write one or more standalone test scripts that check a proposed solution to
the optimization problem below. The proposed solution is a file named
"output.json" in the working directory, and the problem data is in
"data.json" next to it.

Each script must exit with status 0 when its check passes; otherwise it must
print a short reason to stderr and exit with a nonzero status. Cover:
1. the output file contains the right keys and value kinds,
2. the constraints are satisfied,
3. values derived from other values are consistent with them.

Problem:
{{snop}}

Formulation:
{{formulation}}

Put each script in its own fenced code block.
""",
    "rephrase": """\
Rephrase the natural-language parts of the structured optimization problem
below: reword each problem_info statement, each output_info statement, and
the objective while keeping their meaning intact. Copy every \\param{...}
marker verbatim; do not rename, drop, or introduce parameters. Keep
problem_type, input_format, output_format, and solver exactly as they are.

{{snop}}

Reply with the complete rephrased problem document in the same format.
""",
    "debug": """\
The program below raised an error when it was executed. Fix it.

Formulation:
{{formulation}}

Program:
{{code}}

Error:
{{error}}

Reply with the complete corrected program only.
""",
    "codefix": """\
The program below ran, but its output failed validation tests. Revise the
program so that the tests pass.

Problem:
{{snop}}

Program:
{{code}}

Failing tests:
{{failures}}

Reply with the complete corrected program only.
""",
}

_BUILTIN_SLOTS = {
    "formulation": ("snop",),
    "codegen_vars": ("snop", "formulation", "solver", "solver_instructions"),
    "codegen_constraints": ("snop", "formulation", "solver", "solver_instructions", "code"),
    "codegen_objective": ("snop", "formulation", "solver", "solver_instructions", "code"),
    "testgen": ("snop", "formulation"),
    "rephrase": ("snop",),
    "debug": ("formulation", "code", "error"),
    "codefix": ("snop", "code", "failures"),
}


class TemplateRegistry:
    """The closed set of pipeline templates, with optional directory overrides."""

    def __init__(self, overrides_dir: Path | str | None = None):
        self._templates = {
            name: Template(name, _BUILTIN_BODIES[name], _BUILTIN_SLOTS[name])
            for name in TEMPLATE_NAMES
        }
        if overrides_dir is not None:
            for path in sorted(Path(overrides_dir).glob("*.tmpl")):
                name = path.stem
                if name not in self._templates:
                    continue
                body = path.read_text(encoding="utf-8")
                self._templates[name] = Template(name, body, tuple(sorted(_scan_slots(body))))

    def get(self, name: str) -> Template:
        try:
            return self._templates[name]
        except KeyError:
            raise TemplateNotFound(name) from None

    def names(self) -> tuple[str, ...]:
        return TEMPLATE_NAMES


@dataclass(frozen=True)
class SolverInstructionBlock:
    """Solver-specific coding hints injected into the codegen prompts."""

    solver: str
    lines: tuple[str, ...]

    @property
    def text(self) -> str:
        if not self.lines:
            return ""
        return "Solver notes:\n" + "\n".join(f"- {line}" for line in self.lines)


_BUILTIN_INSTRUCTIONS = {
    "cvxpy": (
        "cvxpy.sum takes a list as input, and not a generator",
        "collect constraints in a Python list and pass the list to cvxpy.Problem",
        "read optimal values through the .value attribute after problem.solve()",
    ),
    "gurobi": (
        "prefer built-in helpers such as gurobi.abs_ for absolute values instead of adding auxiliary variables and constraints",
        "call model.optimize() before reading any variable values",
        "read solution values through the .X attribute of variables",
    ),
}


def instruction_block_for(solver: str, overrides_dir: Path | str | None = None) -> SolverInstructionBlock:
    """Look up the instruction block for a solver; unknown solvers get an empty one."""
    key = solver.strip().lower()
    if overrides_dir is not None:
        path = Path(overrides_dir) / f"{key}.txt"
        if path.exists():
            lines = tuple(
                line.strip().lstrip("- ").strip()
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            )
            return SolverInstructionBlock(solver=key, lines=lines)
    return SolverInstructionBlock(solver=key, lines=_BUILTIN_INSTRUCTIONS.get(key, ()))
