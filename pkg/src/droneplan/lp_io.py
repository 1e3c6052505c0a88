"""LP text format export and (re-)import for cross-checking solutions.

The writer emits plain CPLEX-style LP files with the constant objective
term inline; the reader parses exactly the subset the writer produces so
that exported programs round-trip bit-for-bit on objective evaluation.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ParseError
from .problems import Bilp, LinearRow

_SENSE_TOKEN = {"<=": "<=", ">=": ">=", "==": "="}


def _coef(value: float) -> str:
    return repr(float(value))


def write_lp(bilp: Bilp, path) -> None:
    """Write a binary program in LP text format."""
    with open(path, "w") as fh:
        fh.write("\\ binary linear program, all variables binary\n")
        fh.write("Minimize\n obj:")
        parts = []
        for idx in np.flatnonzero(bilp.cost):
            parts.append(f" + {_coef(bilp.cost[idx])} {bilp.names[idx]}")
        if bilp.offset_j:
            parts.append(f" + {_coef(bilp.offset_j)}")
        if not parts:
            parts.append(" + 0")
        _write_wrapped(fh, parts)
        fh.write("Subject To\n")
        for row in bilp.rows:
            fh.write(f" {row.name}:")
            parts = [f" + {_coef(v)} {bilp.names[c]}" if v >= 0
                     else f" - {_coef(-v)} {bilp.names[c]}"
                     for c, v in zip(row.cols, row.vals)]
            parts.append(f" {_SENSE_TOKEN[row.sense]} {_coef(row.rhs)}")
            _write_wrapped(fh, parts)
        fh.write("Binary\n")
        for name in bilp.names:
            fh.write(f" {name}\n")
        fh.write("End\n")


def _write_wrapped(fh, parts, width: int = 200) -> None:
    line = ""
    for part in parts:
        if len(line) + len(part) > width:
            fh.write(line + "\n ")
            line = ""
        line += part
    fh.write(line + "\n")


def read_lp(path) -> Bilp:
    """Parse an LP file produced by :func:`write_lp`."""
    with open(path) as fh:
        text = fh.read()
    lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("\\")]
    sections = _split_sections(lines)

    names = tuple(tok for ln in sections["binary"] for tok in ln.split())
    index = {name: i for i, name in enumerate(names)}
    if len(index) != len(names):
        raise ParseError("duplicate variable name in Binary section")

    cost = np.zeros(len(names))
    obj_text = " ".join(sections["objective"])
    if ":" in obj_text:
        obj_text = obj_text.split(":", 1)[1]
    offset, terms = _parse_expression(obj_text, index)
    for idx, val in terms.items():
        cost[idx] = val

    rows = []
    for name, body in _join_rows(sections["subject"]):
        sense, lhs, rhs_text = _split_relation(body)
        const, terms = _parse_expression(lhs, index)
        rhs = float(rhs_text) - const
        cols = np.array(sorted(terms), dtype=int)
        vals = np.array([terms[c] for c in cols])
        rows.append(LinearRow(name, cols, vals, sense, rhs))
    return Bilp(cost, offset, tuple(rows), names)


def _split_sections(lines):
    out = {"objective": [], "subject": [], "binary": []}
    section = None
    for ln in lines:
        stripped = ln.strip()
        lowered = stripped.lower()
        if lowered in ("minimize", "minimise"):
            section = "objective"
            continue
        if lowered == "subject to":
            section = "subject"
            continue
        if lowered in ("binary", "binaries"):
            section = "binary"
            continue
        if lowered == "end":
            break
        if section and stripped:
            out[section].append(ln)
    if not out["objective"] or not out["binary"]:
        raise ParseError("LP file lacks an objective or Binary section")
    return out


def _join_rows(lines):
    """Group continuation lines (no 'name:' prefix) onto their row."""
    rows = []
    for ln in lines:
        if ":" in ln.split("<=")[0].split(">=")[0].split("=")[0]:
            name, body = ln.split(":", 1)
            rows.append((name.strip(), body))
        else:
            if not rows:
                raise ParseError(f"constraint continuation before any row: {ln!r}")
            rows[-1] = (rows[-1][0], rows[-1][1] + " " + ln)
    return rows


def _split_relation(body):
    for token, sense in (("<=", "<="), (">=", ">="), ("=", "==")):
        if token in body:
            lhs, rhs = body.split(token, 1)
            return sense, lhs, rhs.strip()
    raise ParseError(f"no relation in constraint body {body!r}")


_TOKEN = re.compile(
    r"(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<sign>[+-])")


def _parse_expression(text, index):
    """Sum of signed '<coef> <var>' or bare '<coef>' terms."""
    tokens = []
    pos = 0
    for match in _TOKEN.finditer(text):
        if text[pos:match.start()].strip():
            raise ParseError(f"unparsable text {text[pos:match.start()]!r}")
        pos = match.end()
        tokens.append(match.group(0))
    if text[pos:].strip():
        raise ParseError(f"unparsable text {text[pos:]!r}")
    const = 0.0
    terms: dict[int, float] = {}
    sign = 1.0
    pending: float | None = None
    for tok in tokens:
        if tok == "+":
            if pending is not None:
                const += sign * pending
                pending = None
            sign = 1.0
            continue
        if tok == "-":
            if pending is not None:
                const += sign * pending
                pending = None
            sign = -1.0
            continue
        if tok in index:
            coef = 1.0 if pending is None else pending
            terms[index[tok]] = terms.get(index[tok], 0.0) + sign * coef
            pending = None
            sign = 1.0
            continue
        try:
            value = float(tok)
        except ValueError as exc:
            raise ParseError(f"unknown token {tok!r} in expression") from exc
        if pending is not None:
            const += sign * pending
        pending = value
    if pending is not None:
        const += sign * pending
    return const, terms
