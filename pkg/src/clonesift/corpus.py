"""Function units: extraction from source trees, filtering, and persistence.

A :class:`FunctionUnit` is the unit of cloning: a contiguous region of one
file, identified by its ``(path, start_line, end_line)`` triple.  Extraction
is a deliberately desk-grade, line-oriented heuristic (signature pattern plus
brace matching); the precision-safe ingestion path is a precomputed manifest.

Manifests are persisted as UTF-8 JSON lines: a header record carrying
``label``/``language``/``minloc_applied`` followed by one record per unit
with keys ``id``, ``path``, ``start``, ``end``, ``text``.  Line counts are
recomputed on load and never trusted.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import DuplicateId, FormatViolation, UnsupportedLanguage

SUPPORTED_LANGUAGES = ("c", "cpp", "java")
MANIFEST_LANGUAGES = SUPPORTED_LANGUAGES + ("other",)


def canonical_id(path: str, start_line: int, end_line: int) -> str:
    """Stable, collision-resistant identifier for a function triple.

    A keyed-free BLAKE2b-128 digest over the triple; deterministic across
    runs and platforms, and injective over the fields in practice.
    """
    payload = f"{path}\n{start_line}\n{end_line}".encode("utf-8")
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


@dataclass(frozen=True)
class FunctionUnit:
    """A contiguous code region; lines are 1-based and inclusive."""

    path: str
    start_line: int
    end_line: int
    text: str

    def __post_init__(self):
        if self.start_line < 1:
            raise ValueError(f"start_line must be >= 1, got {self.start_line}")
        if self.end_line < self.start_line:
            raise ValueError(
                f"end_line {self.end_line} < start_line {self.start_line} ({self.path})"
            )
        if not self.text.strip():
            raise ValueError(f"unit text is empty ({self.path}:{self.start_line})")

    @property
    def id(self) -> str:
        return canonical_id(self.path, self.start_line, self.end_line)

    @property
    def loc(self) -> int:
        return self.end_line - self.start_line + 1

    @property
    def triple(self) -> tuple[str, int, int]:
        return (self.path, self.start_line, self.end_line)


@dataclass(frozen=True)
class CorpusManifest:
    """A validated, immutable set of function units."""

    label: str
    language: str
    units: tuple[FunctionUnit, ...]
    minloc_applied: int = 0

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        if self.language not in MANIFEST_LANGUAGES:
            raise ValueError(f"unknown language {self.language!r}")
        if self.minloc_applied < 0:
            raise ValueError("minloc_applied must be non-negative")
        seen: set[str] = set()
        for unit in self.units:
            if unit.id in seen:
                raise DuplicateId(f"duplicate unit id {unit.id} ({unit.path}:{unit.start_line})")
            seen.add(unit.id)
            if unit.loc < self.minloc_applied:
                raise ValueError(
                    f"unit {unit.path}:{unit.start_line} has loc {unit.loc} < "
                    f"minloc_applied {self.minloc_applied}"
                )

    def __len__(self) -> int:
        return len(self.units)

    def by_id(self) -> dict[str, FunctionUnit]:
        return {u.id: u for u in self.units}


def apply_minloc(units: Iterable[FunctionUnit], minloc: int) -> list[FunctionUnit]:
    """Keep exactly the units with ``loc >= minloc``, order preserved."""
    if minloc < 0:
        raise ValueError("minloc must be non-negative")
    return [u for u in units if u.loc >= minloc]


# --- extraction heuristic ---------------------------------------------------

# Control-flow and declaration keywords that can look like `name(...)` headers.
_NOT_FUNCTION_NAMES = frozenset(
    "if for while switch catch return else do sizeof case new delete throw "
    "defined typedef using namespace static_assert alignof decltype".split()
)

# Header shape: optional qualifiers/return type, a name, a parenthesized
# parameter list (one nesting level allowed for function pointers), optional
# trailing qualifiers. Applied to the masked header text before the brace.
_SIGNATURE_RE = re.compile(
    r"""^[\w\s\*&:<>,~\[\]\.]*?
        \b(~?[A-Za-z_]\w*(?:::~?[A-Za-z_]\w*)*)
        \s*\(((?:[^()]|\([^()]*\))*)\)
        \s*(?:const|noexcept|final|override|throws\s+[\w\s,.<>]+|\w+)?\s*$""",
    re.VERBOSE,
)

_MAX_HEADER_LINES = 8


def _mask_source(text: str) -> str:
    """Blank out comments, string/char literals, and preprocessor lines.

    The result has the same length and the same newline positions as the
    input, so line/column offsets carry over. Literal and comment contents
    (including delimiters) become spaces, which keeps braces inside them
    from confusing the matcher.
    """
    out = list(text)
    n = len(text)
    i = 0
    line_start = True
    while i < n:
        ch = text[i]
        if line_start and text[i:].lstrip(" \t").startswith("#"):
            # Preprocessor line, including backslash continuations.
            while i < n:
                if text[i] == "\n":
                    j = i - 1
                    while j >= 0 and text[j] in " \t\r":
                        j -= 1
                    if j >= 0 and text[j] == "\\":
                        out[i] = "\n"
                        i += 1
                        continue
                    break
                out[i] = " "
                i += 1
            line_start = True
            if i < n:
                i += 1  # keep the newline
            continue
        line_start = ch == "\n"
        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            while i < n and text[i] != "\n":
                out[i] = " "
                i += 1
            continue
        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            out[i] = out[i + 1] = " "
            i += 2
            while i < n and not (text[i] == "*" and i + 1 < n and text[i + 1] == "/"):
                if text[i] != "\n":
                    out[i] = " "
                i += 1
            if i + 1 < n:
                out[i] = out[i + 1] = " "
                i += 2
            continue
        if ch in "\"'":
            quote = ch
            out[i] = " "
            i += 1
            while i < n and text[i] != quote:
                if text[i] == "\\" and i + 1 < n:
                    out[i] = " "
                    if text[i + 1] != "\n":
                        out[i + 1] = " "
                    i += 2
                    continue
                if text[i] == "\n":
                    break  # unterminated literal; stop at end of line
                out[i] = " "
                i += 1
            if i < n and text[i] == quote:
                out[i] = " "
                i += 1
            continue
        i += 1
    return "".join(out)


def _header_candidate(masked_lines: list[str], start: int) -> tuple[str, int, int] | None:
    """Accumulate a possible function header starting at ``start``.

    Returns (header_text, brace_line, brace_col) when an opening brace is
    found before any ';', '}' or '=', within the lookahead window.
    """
    pieces: list[str] = []
    depth = 0
    for offset in range(_MAX_HEADER_LINES):
        idx = start + offset
        if idx >= len(masked_lines):
            return None
        line = masked_lines[idx]
        for col, ch in enumerate(line):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0:
                if ch == "{":
                    header = "".join(pieces) + line[:col]
                    return header, idx, col
                if ch in ";}" or ch == "=":
                    return None
        pieces.append(line + "\n")
    return None


def _looks_like_signature(header: str) -> bool:
    match = _SIGNATURE_RE.match(header.strip())
    if not match:
        return False
    name = match.group(1).split("::")[-1].lstrip("~")
    return name not in _NOT_FUNCTION_NAMES and "(" in header


def _match_braces(masked_lines: list[str], line: int, col: int) -> int | None:
    """Find the line of the brace closing the one at (line, col), else None."""
    depth = 0
    for idx in range(line, len(masked_lines)):
        segment = masked_lines[idx][col:] if idx == line else masked_lines[idx]
        for ch in segment:
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return idx
    return None


def extract_functions(
    file_text: str,
    path: str,
    language: str = "c",
    diagnostics: list[str] | None = None,
) -> list[FunctionUnit]:
    """Extract function-shaped regions from one source file.

    Regions are non-overlapping and sorted by start line. On unbalanced
    braces beyond recovery the units found before the fault are returned and
    a note is appended to ``diagnostics`` (when given).
    """
    if language not in SUPPORTED_LANGUAGES:
        raise UnsupportedLanguage(
            f"language {language!r} not supported (expected one of {SUPPORTED_LANGUAGES})"
        )
    if not file_text.strip():
        return []
    masked_lines = _mask_source(file_text).split("\n")
    orig_lines = file_text.split("\n")
    units: list[FunctionUnit] = []
    i = 0
    n = len(masked_lines)
    while i < n:
        if "(" not in masked_lines[i] and not masked_lines[i].strip():
            i += 1
            continue
        cand = _header_candidate(masked_lines, i)
        if cand is None:
            i += 1
            continue
        header, brace_line, brace_col = cand
        if not _looks_like_signature(header):
            i += 1
            continue
        close = _match_braces(masked_lines, brace_line, brace_col)
        if close is None:
            if diagnostics is not None:
                diagnostics.append(
                    f"{path}:{i + 1}: unbalanced braces after function header; "
                    "extraction stopped (malformed input)"
                )
            break
        text = "\n".join(orig_lines[i : close + 1])
        if text.strip():
            units.append(
                FunctionUnit(path=path, start_line=i + 1, end_line=close + 1, text=text)
            )
        i = close + 1
    return units


# --- manifest persistence ---------------------------------------------------

def store_manifest(manifest: CorpusManifest, path: str | Path) -> None:
    """Write a manifest as JSON lines (header record first)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        header = {
            "label": manifest.label,
            "language": manifest.language,
            "minloc_applied": manifest.minloc_applied,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for unit in manifest.units:
            record = {
                "id": unit.id,
                "path": unit.path,
                "start": unit.start_line,
                "end": unit.end_line,
                "text": unit.text,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


_UNIT_KEYS = ("id", "path", "start", "end", "text")


def load_manifest(path: str | Path) -> CorpusManifest:
    """Load a manifest, recomputing derived fields and validating records."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatViolation("empty manifest file", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatViolation(f"invalid header: {exc}", line=1) from None
    for key in ("label", "language", "minloc_applied"):
        if key not in header:
            raise FormatViolation(f"header missing key {key!r}", line=1)
    units: list[FunctionUnit] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FormatViolation(f"invalid record: {exc}", line=lineno) from None
        missing = [k for k in _UNIT_KEYS if k not in record]
        if missing:
            raise FormatViolation(f"record missing {', '.join(missing)}", line=lineno)
        try:
            unit = FunctionUnit(
                path=record["path"],
                start_line=int(record["start"]),
                end_line=int(record["end"]),
                text=record["text"],
            )
        except (TypeError, ValueError) as exc:
            raise FormatViolation(str(exc), line=lineno) from None
        if unit.id != record["id"]:
            raise FormatViolation(
                f"stored id {record['id']!r} does not match the unit triple", line=lineno
            )
        if unit.id in seen:
            raise DuplicateId(f"duplicate unit id {unit.id} at line {lineno}")
        seen.add(unit.id)
        units.append(unit)
    return CorpusManifest(
        label=header["label"],
        language=header["language"],
        units=tuple(units),
        minloc_applied=int(header["minloc_applied"]),
    )
