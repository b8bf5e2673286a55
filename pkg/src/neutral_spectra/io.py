"""Chain-spec JSON files, matrix and distribution CSVs, and JSON report encoding.

Chain-spec documents carry a ``"type"`` discriminator:

* ``general``: ``{"type": "general", "rows": [[...], ...]}``
* ``birth_death``: ``{"type": "birth_death", "N": 3, "p": [...], "q": [...]}``
* ``moran3``: ``{"type": "moran3", "N": 6}``
* ``a2dmc``: ``{"type": "a2dmc", "N": 2, "entries": [{"from": [1, 1], "to": [1, 0], "prob": 0.15}, ...]}``;
  mass not listed in a row goes to ``(0, 0)``.

Matrices over ``T_N`` are written as CSV with header ``i,j,k,l,value``, one
line per nonzero entry in lexicographic order, values in ``repr`` form so
that reading back reproduces the matrix bit for bit.
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ValidationError
from .kernel_spec import birth_death, from_rows
from .neutral_lift import TriIndex
from .qsd import extract_blocks

__all__ = [
    "ChainSpecFile",
    "parse_chain_spec",
    "load_chain_spec",
    "matrix_csv",
    "write_matrix_csv",
    "read_matrix_csv",
    "distribution_csv",
    "to_jsonable",
    "dump_json",
]

TYPES = ("general", "birth_death", "moran3", "a2dmc")


@dataclass(frozen=True)
class ChainSpecFile:
    """A parsed chain-spec document: ``kind`` plus a KernelSpec, A2dMCSpec or (for moran3) ``N``."""

    kind: str
    value: Any

    @property
    def N(self) -> int:
        return self.value if self.kind == "moran3" else self.value.N


def _element_lines(text: str, key: str) -> list[int]:
    """1-based line numbers where each element of the top-level array ``key`` starts."""
    pos = text.find(f'"{key}"')
    if pos < 0:
        return []
    start = text.find("[", pos)
    if start < 0:
        return []
    lines, depth, i, in_str = [], 0, start, False
    expecting = False
    while i < len(text):
        ch = text[i]
        if in_str:
            if ch == "\\":
                i += 1
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
            if depth == 1 and expecting:
                lines.append(text.count("\n", 0, i) + 1)
                expecting = False
        elif ch in "[{":
            depth += 1
            if depth == 1:
                expecting = True
            elif depth == 2 and expecting:
                lines.append(text.count("\n", 0, i) + 1)
                expecting = False
        elif ch in "]}":
            depth -= 1
            if depth == 0:
                break
        elif ch == "," and depth == 1:
            expecting = True
        elif depth == 1 and expecting and not ch.isspace():
            lines.append(text.count("\n", 0, i) + 1)
            expecting = False
        i += 1
    return lines


def _at(lines: list[int], k: int) -> str:
    return f"line {lines[k]}: " if k < len(lines) else ""


def _int(doc: dict, key: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ValidationError(f'"{key}" must be an integer')
    return v


def parse_chain_spec(text: str) -> ChainSpecFile:
    """Parse a chain-spec JSON document; errors name the offending line when possible."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise ValidationError("line 1: chain spec must be a JSON object")
    kind = doc.get("type")
    if kind not in TYPES:
        raise ValidationError(f'"type" must be one of {", ".join(TYPES)} (got {kind!r})')
    if kind == "general":
        rows = doc.get("rows")
        if not isinstance(rows, list):
            raise ValidationError('"rows" must be a list of lists')
        lines = _element_lines(text, "rows")
        for n, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != len(rows):
                raise ValidationError(f"{_at(lines, n)}row {n} must have {len(rows)} entries")
            if any(not isinstance(x, (int, float)) or isinstance(x, bool) for x in row):
                raise ValidationError(f"{_at(lines, n)}row {n} has non-numeric entries")
        try:
            return ChainSpecFile(kind, from_rows(rows))
        except ValidationError as exc:
            msg = str(exc)
            for n in range(len(rows)):
                if msg.startswith(f"row {n} ") or f"({n}, " in msg:
                    raise ValidationError(f"{_at(lines, n)}{msg}") from None
            raise
    if kind == "birth_death":
        N = _int(doc, "N")
        return ChainSpecFile(kind, birth_death(doc.get("p", []), doc.get("q", []), N))
    if kind == "moran3":
        N = _int(doc, "N")
        if N < 2:
            raise ValidationError('"N" must be at least 2 for the urn')
        return ChainSpecFile(kind, N)
    N = _int(doc, "N")
    if N < 2:
        raise ValidationError('"N" must be at least 2')
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise ValidationError('"entries" must be a list')
    lines = _element_lines(text, "entries")
    index = TriIndex(N)
    pi = np.zeros((index.size, index.size))
    for k, e in enumerate(entries):
        try:
            a = index.index(*e["from"])
            b = index.index(*e["to"])
            p = float(e["prob"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{_at(lines, k)}entry {k} is malformed ({exc!r})") from None
        if not 0 <= p <= 1:
            raise ValidationError(f"{_at(lines, k)}entry {k} has probability {p} outside [0, 1]")
        pi[a, b] += p
    o = index.index(0, 0)
    rest = 1.0 - pi.sum(axis=1)
    if np.any(rest < -1e-12):
        a = int(np.argmin(rest))
        raise ValidationError(f"row {index.state(a)} sums to {pi[a].sum():.12g} > 1")
    pi[:, o] += np.maximum(rest, 0.0)
    pi[o] = 0.0
    pi[o, o] = 1.0
    return ChainSpecFile(kind, extract_blocks(pi, index))


def load_chain_spec(path: str | Path) -> ChainSpecFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return parse_chain_spec(text)


def matrix_csv(M: np.ndarray, index: TriIndex) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "k", "l", "value"])
    rows = []
    for a, b in zip(*np.nonzero(M)):
        rows.append((*index.state(a), *index.state(b), M[a, b]))
    for i, j, k, l, v in sorted(rows):
        w.writerow([i, j, k, l, repr(float(v))])
    return buf.getvalue()


def write_matrix_csv(path: str | Path, M: np.ndarray, index: TriIndex) -> None:
    Path(path).write_text(matrix_csv(M, index))


def read_matrix_csv(path: str | Path, N: int | None = None) -> tuple[np.ndarray, TriIndex]:
    """Read a matrix CSV; ``N`` defaults to the largest total size that appears."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != ["i", "j", "k", "l", "value"]:
            raise ValidationError(f"line 1: expected header i,j,k,l,value, got {header}")
        entries = []
        for lineno, row in enumerate(r, start=2):
            try:
                i, j, k, l = (int(x) for x in row[:4])
                entries.append((i, j, k, l, float(row[4])))
            except (ValueError, IndexError):
                raise ValidationError(f"line {lineno}: malformed row {row}") from None
    if N is None:
        N = max((max(i + j, k + l) for i, j, k, l, _ in entries), default=0)
    index = TriIndex(N)
    M = np.zeros((index.size, index.size))
    for i, j, k, l, v in entries:
        M[index.index(i, j), index.index(k, l)] = v
    return M, index


def distribution_csv(dist: np.ndarray, index: TriIndex) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "value"])
    for a, (i, j) in enumerate(index.states):
        if (i, j) != (0, 0):
            w.writerow([i, j, repr(float(dist[a]))])
    return buf.getvalue()


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, Fraction):
        return str(x)
    return x


def dump_json(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"

