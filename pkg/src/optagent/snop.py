"""Structured natural-language optimization problem (SNOP) parsing and checks.

A SNOP separates the problem text from its numeric data: statements name
parameters with ``\\param{NAME}`` markers, and the input/output format strings
describe the shape of the JSON data the eventual solver code reads and writes.

Format string grammar (lenient: prose between structural tokens is skipped,
bare words in value position become scalar references):

    FORMAT  = OBJECT
    OBJECT  = '{' PAIR (',' PAIR)* '}'
    PAIR    = '"' key '"' ':' VALUE
    VALUE   = OBJECT | LIST | SCALARREF
    LIST    = '[' VALUE ('for' IDENT 'in' RANGE)? ']'
    RANGE   = (INT | IDENT) '..' (INT | IDENT)  |  (INT | IDENT) 'to' (INT | IDENT)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Union

ANY = "ANY"

SNOP_FIELDS = (
    "problem_type",
    "problem_info",
    "input_format",
    "output_info",
    "output_format",
    "objective",
    "solver",
)

_REQUIRED_FIELDS = ("problem_info", "input_format", "output_info", "output_format", "objective")

_IDENT_RE = re.compile(r"[A-Za-z0-9_]+\Z")
PARAM_MARKER_RE = re.compile(r"\\param\{([A-Za-z0-9_]+)\}")


class SnopError(Exception):
    """Base class for SNOP document and format-string errors."""


class MalformedDocument(SnopError):
    pass


class MissingField(SnopError):
    def __init__(self, name: str):
        super().__init__(f"missing SNOP field: {name}")
        self.name = name


class MalformedParamMarker(SnopError):
    def __init__(self, span: tuple[int, int], text: str):
        super().__init__(f"malformed \\param marker at {span}: {text!r}")
        self.span = span


class FormatError(SnopError):
    """Base class for format-string parse errors."""


class UnbalancedBracket(FormatError):
    def __init__(self, span: tuple[int, int], detail: str):
        super().__init__(f"unbalanced bracket at {span}: {detail}")
        self.span = span


class DuplicateKey(FormatError):
    def __init__(self, key: str):
        super().__init__(f"duplicate key: {key!r}")
        self.key = key


class DuplicateIndex(FormatError):
    def __init__(self, index: str):
        super().__init__(f"comprehension index {index!r} reused on nested list")
        self.index = index


def _scan_param_markers(text: str) -> list[tuple[str, tuple[int, int]]]:
    """Find every \\param{NAME} marker, raising on unclosed or invalid ones."""
    found = []
    pos = 0
    while True:
        start = text.find("\\param{", pos)
        if start < 0:
            return found
        end = text.find("}", start)
        if end < 0:
            raise MalformedParamMarker((start, len(text)), text[start:])
        name = text[start + len("\\param{") : end]
        if not _IDENT_RE.match(name):
            raise MalformedParamMarker((start, end + 1), text[start : end + 1])
        found.append((name, (start, end + 1)))
        pos = end + 1


@dataclass(frozen=True)
class Snop:
    """One structured problem description (seven fields, formats as strings)."""

    problem_type: str
    problem_info: tuple[str, ...]
    input_format: str
    output_info: tuple[str, ...]
    output_format: str
    objective: str
    solver: str = ANY

    def __post_init__(self):
        if not self.problem_info:
            raise MalformedDocument("problem_info must be non-empty")
        if not self.objective.strip():
            raise MalformedDocument("objective must be non-empty")
        for fname in ("problem_type", "objective", "solver", "input_format", "output_format"):
            _scan_param_markers(getattr(self, fname))
        for fname in ("problem_info", "output_info"):
            for stmt in getattr(self, fname):
                _scan_param_markers(stmt)
        parse_format(self.input_format)
        parse_format(self.output_format)


def parse_snop(raw: str) -> Snop:
    """Parse the canonical SNOP carrier (a JSON key/value document)."""
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not a key/value document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedDocument("top level must be a key/value mapping")
    unknown = sorted(set(doc) - set(SNOP_FIELDS))
    if unknown:
        raise MalformedDocument(f"unknown SNOP keys: {', '.join(unknown)}")
    for name in _REQUIRED_FIELDS:
        if name not in doc:
            raise MissingField(name)

    def _statements(name: str) -> tuple[str, ...]:
        value = doc[name]
        if not isinstance(value, list) or any(not isinstance(s, str) for s in value):
            raise MalformedDocument(f"{name} must be a list of strings")
        return tuple(value)

    def _text(name: str, default: str | None = None) -> str:
        value = doc.get(name, default)
        if not isinstance(value, str):
            raise MalformedDocument(f"{name} must be a string")
        return value

    return Snop(
        problem_type=_text("problem_type", ANY),
        problem_info=_statements("problem_info"),
        input_format=_text("input_format"),
        output_info=_statements("output_info"),
        output_format=_text("output_format"),
        objective=_text("objective"),
        solver=_text("solver", ANY),
    )


def serialize_snop(snop: Snop) -> str:
    """Canonical on-disk serialization; parse_snop(serialize_snop(s)) == s."""
    doc = {
        "problem_type": snop.problem_type,
        "problem_info": list(snop.problem_info),
        "input_format": snop.input_format,
        "output_info": list(snop.output_info),
        "output_format": snop.output_format,
        "objective": snop.objective,
        "solver": snop.solver,
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class ParamLocation:
    field_name: str
    statement_index: int
    span: tuple[int, int]


@dataclass(frozen=True)
class ParamSet:
    """Distinct parameter identifiers with every place they were referenced."""

    names: frozenset[str]
    locations: Mapping[str, tuple[ParamLocation, ...]]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def __len__(self) -> int:
        return len(self.names)


def extract_params(snop: Snop) -> ParamSet:
    """Collect every \\param{} identifier across all SNOP fields."""
    locations: dict[str, list[ParamLocation]] = {}

    def _collect(field_name: str, statement_index: int, text: str) -> None:
        for name, span in _scan_param_markers(text):
            locations.setdefault(name, []).append(ParamLocation(field_name, statement_index, span))

    for fname in ("problem_type", "input_format", "output_format", "objective", "solver"):
        _collect(fname, 0, getattr(snop, fname))
    for fname in ("problem_info", "output_info"):
        for i, stmt in enumerate(getattr(snop, fname)):
            _collect(fname, i, stmt)
    return ParamSet(
        names=frozenset(locations),
        locations={name: tuple(locs) for name, locs in locations.items()},
    )


# --- format string mini-grammar ---------------------------------------------

@dataclass(frozen=True)
class ScalarRef:
    name: str


@dataclass(frozen=True)
class ListNode:
    element: "FormatNode | None"
    index: str | None = None
    lower: str | None = None
    bound: str | None = None


@dataclass(frozen=True)
class ObjectNode:
    entries: tuple[tuple[str, "FormatNode"], ...]

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.entries)


FormatNode = Union[ScalarRef, ListNode, ObjectNode]


@dataclass(frozen=True)
class FormatTree:
    root: ObjectNode
    source: str


_TOKEN_RE = re.compile(
    r"\\param\{([A-Za-z0-9_]+)\}"  # param marker, treated as a scalar ref
    r'|"([^"]*)"'                  # quoted key or name
    r"|([{}\[\]:,])"               # structural punctuation
    r"|(\.\.)"                     # range dots
    r"|([A-Za-z0-9_]+)"            # bare word / number
    r"|(\S)"                       # anything else is noise
)


@dataclass(frozen=True)
class _Token:
    kind: str  # param | string | punct | dots | word | noise
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    for m in _TOKEN_RE.finditer(source):
        param, quoted, punct, dots, word, noise = m.groups()
        if param is not None:
            tokens.append(_Token("param", param, m.start()))
        elif quoted is not None:
            tokens.append(_Token("string", quoted, m.start()))
        elif punct is not None:
            tokens.append(_Token("punct", punct, m.start()))
        elif dots is not None:
            tokens.append(_Token("dots", "..", m.start()))
        elif word is not None:
            tokens.append(_Token("word", word, m.start()))
        else:
            tokens.append(_Token("noise", noise, m.start()))
    return tokens


class _FormatParser:
    def __init__(self, tokens: list[_Token], source: str):
        self.tokens = tokens
        self.source = source
        self.i = 0

    def _peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _next(self) -> _Token | None:
        tok = self._peek()
        if tok is not None:
            self.i += 1
        return tok

    def _is_punct(self, tok: _Token | None, ch: str) -> bool:
        return tok is not None and tok.kind == "punct" and tok.text == ch

    def _unbalanced(self, tok: _Token | None, detail: str) -> UnbalancedBracket:
        pos = tok.pos if tok is not None else len(self.source)
        return UnbalancedBracket((pos, pos + 1), detail)

    def parse_root(self) -> ObjectNode:
        # leading prose before the opening brace is noise
        while True:
            tok = self._peek()
            if tok is None:
                raise self._unbalanced(None, "no object found")
            if self._is_punct(tok, "{"):
                break
            if tok.kind == "punct" and tok.text in "}[]":
                raise self._unbalanced(tok, f"unexpected {tok.text!r} before object")
            self._next()
        root = self._parse_object()
        # trailing prose is fine, trailing structure is not
        while (tok := self._next()) is not None:
            if tok.kind == "punct" and tok.text in "{}[]":
                raise self._unbalanced(tok, f"unexpected {tok.text!r} after object")
        return root

    def _parse_object(self) -> ObjectNode:
        self._next()  # consume '{'
        entries: list[tuple[str, FormatNode]] = []
        seen: set[str] = set()
        while True:
            tok = self._peek()
            if tok is None:
                raise self._unbalanced(None, "unclosed '{'")
            if self._is_punct(tok, "}"):
                self._next()
                return ObjectNode(entries=tuple(entries))
            if tok.kind == "punct" and tok.text in "{[]":
                raise self._unbalanced(tok, f"unexpected {tok.text!r} where a key was expected")
            if tok.kind in ("string", "word") and self._colon_follows():
                key = self._next().text
                self._next()  # ':'
                if key in seen:
                    raise DuplicateKey(key)
                value = self._parse_value()
                if value is not None:
                    seen.add(key)
                    entries.append((key, value))
                continue
            self._next()  # comma or prose noise

    def _colon_follows(self) -> bool:
        nxt = self.tokens[self.i + 1] if self.i + 1 < len(self.tokens) else None
        return self._is_punct(nxt, ":")

    def _parse_value(self) -> FormatNode | None:
        while True:
            tok = self._peek()
            if tok is None:
                raise self._unbalanced(None, "missing value")
            if self._is_punct(tok, "{"):
                return self._parse_object()
            if self._is_punct(tok, "["):
                return self._parse_list()
            if tok.kind in ("param", "string", "word"):
                self._next()
                return ScalarRef(tok.text)
            if tok.kind == "punct" and tok.text in "}],":
                return None  # pair with no value: drop it
            self._next()  # noise

    def _parse_list(self) -> ListNode:
        open_tok = self._next()  # consume '['
        element: FormatNode | None = None
        index = lower = bound = None
        while True:
            tok = self._peek()
            if tok is None:
                raise self._unbalanced(open_tok, "unclosed '['")
            if self._is_punct(tok, "]"):
                self._next()
                return ListNode(element=element, index=index, lower=lower, bound=bound)
            if self._is_punct(tok, "}"):
                raise self._unbalanced(tok, "unexpected '}' inside list")
            if tok.kind == "word" and tok.text == "for" and element is not None:
                self._next()
                index, lower, bound = self._parse_comprehension()
                continue
            if self._is_punct(tok, "{") or self._is_punct(tok, "["):
                node = self._parse_value()
                if element is None:
                    element = node  # extra elements are parsed and discarded
                continue
            if element is None and tok.kind in ("param", "string", "word"):
                element = self._parse_value()
                continue
            self._next()  # comma, repeated scalar, or prose noise

    def _parse_comprehension(self) -> tuple[str | None, str | None, str | None]:
        tok = self._peek()
        if tok is None or tok.kind != "word":
            return None, None, None  # 'for' was prose, not a comprehension
        index = self._next().text
        tok = self._peek()
        if tok is not None and tok.kind == "word" and tok.text == "in":
            self._next()
        first = self._range_token()
        tok = self._peek()
        if tok is not None and tok.kind == "dots":
            self._next()
            return index, first, self._range_token()
        if tok is not None and tok.kind == "word" and tok.text == "to":
            self._next()
            return index, first, self._range_token()
        # bare bound, e.g. "for i in N"
        return index, "1", first

    def _range_token(self) -> str | None:
        tok = self._peek()
        if tok is not None and tok.kind in ("word", "param", "string"):
            return self._next().text
        return None


def _check_index_uniqueness(node: FormatNode, seen: tuple[str, ...]) -> None:
    if isinstance(node, ObjectNode):
        for _, child in node.entries:
            _check_index_uniqueness(child, seen)
    elif isinstance(node, ListNode):
        inner = seen
        if node.index is not None:
            if node.index in seen:
                raise DuplicateIndex(node.index)
            inner = seen + (node.index,)
        if node.element is not None:
            _check_index_uniqueness(node.element, inner)


def parse_format(format_string: str) -> FormatTree:
    """Parse a SNOP input/output format string into a FormatTree."""
    parser = _FormatParser(_tokenize(format_string), format_string)
    root = parser.parse_root()
    _check_index_uniqueness(root, ())
    return FormatTree(root=root, source=format_string)


# --- conformance -------------------------------------------------------------

class ViolationKind(Enum):
    MISSING_KEY = "missing_key"
    KIND_MISMATCH = "kind_mismatch"
    INCONSISTENT_LENGTH = "inconsistent_length"
    TEST_FAILURE = "test_failure"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    path: str
    message: str


@dataclass
class ConformanceReport:
    violations: list[Violation] = field(default_factory=list)
    bindings: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: ViolationKind, path: str, message: str) -> None:
        self.violations.append(Violation(kind, path, message))


_SCALAR_TYPES = (str, int, float, bool, type(None))


def check_conformance(tree: FormatTree, document: Any) -> ConformanceReport:
    """Check a parsed JSON document against a format tree.

    The first list observed for a bound identifier fixes its length; later
    lists bound to the same identifier must match it.
    """
    report = ConformanceReport()
    _check_node(tree.root, document, "$", report)
    return report


def _check_node(node: FormatNode, value: Any, path: str, report: ConformanceReport) -> None:
    if isinstance(node, ObjectNode):
        if not isinstance(value, dict):
            report.add(ViolationKind.KIND_MISMATCH, path, f"expected an object, got {_kind_name(value)}")
            return
        for key, child in node.entries:
            if key not in value:
                report.add(ViolationKind.MISSING_KEY, f"{path}.{key}", f"missing key {key!r}")
                continue
            _check_node(child, value[key], f"{path}.{key}", report)
    elif isinstance(node, ListNode):
        if not isinstance(value, list):
            report.add(ViolationKind.KIND_MISMATCH, path, f"expected a list, got {_kind_name(value)}")
            return
        _check_length(node, len(value), path, report)
        if node.element is not None:
            for i, item in enumerate(value):
                _check_node(node.element, item, f"{path}[{i}]", report)
    else:  # ScalarRef
        if not isinstance(value, _SCALAR_TYPES) or isinstance(value, (dict, list)):
            report.add(ViolationKind.KIND_MISMATCH, path, f"expected a scalar, got {_kind_name(value)}")


def _check_length(node: ListNode, observed: int, path: str, report: ConformanceReport) -> None:
    if node.bound is None:
        return
    if node.bound.isdigit():
        lower = int(node.lower) if node.lower and node.lower.isdigit() else 1
        expected = int(node.bound) - lower + 1
        if observed != expected:
            report.add(
                ViolationKind.INCONSISTENT_LENGTH,
                path,
                f"expected {expected} elements from range, got {observed}",
            )
        return
    if node.lower not in (None, "1"):
        return  # non-unit lower bound with symbolic size: length is unconstrained
    known = report.bindings.get(node.bound)
    if known is None:
        report.bindings[node.bound] = observed
    elif known != observed:
        report.add(
            ViolationKind.INCONSISTENT_LENGTH,
            path,
            f"{node.bound} previously bound to {known}, got {observed}",
        )


def _kind_name(value: Any) -> str:
    if isinstance(value, dict):
        return "object"
    if isinstance(value, list):
        return "list"
    return type(value).__name__
