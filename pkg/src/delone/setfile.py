"""JSON set files: reading, writing and position-annotated validation errors.

A set file looks like::

    {"dimension": 2,
     "gram": [["1", "0"], ["0", "1"]],
     "motif": [["0", "0"], ["1/2", "1/2"]],
     "declared_R_sq": "1/2"}

Rationals are strings "p/q" (plain integers are accepted too); floats are
rejected so that no precision is silently lost.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .core import GramMatrix, InvalidSetError, PeriodicSet


class SetFileError(InvalidSetError):
    """Malformed set file; the message names the offending location."""


def fmt(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _rational(value: Any, path: str) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise SetFileError(f"{path}: expected a rational string like \"p/q\", got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise SetFileError(f"{path}: expected a rational string, got {type(value).__name__}")
    try:
        q = Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise SetFileError(f"{path}: cannot parse {value!r} as a rational") from None
    if "." in value or "e" in value.lower():
        raise SetFileError(f"{path}: decimal notation {value!r} is not allowed, use p/q")
    return q


def _vector(value: Any, d: int, path: str) -> tuple[Fraction, ...]:
    if not isinstance(value, list):
        raise SetFileError(f"{path}: expected an array of length {d}")
    if len(value) != d:
        raise SetFileError(f"{path}: expected length {d}, got {len(value)}")
    return tuple(_rational(x, f"{path}[{k}]") for k, x in enumerate(value))


def parse_document(doc: Any) -> tuple[PeriodicSet, Optional[Fraction]]:
    """Validate a decoded JSON document; returns the set and its declared R^2."""
    if not isinstance(doc, dict):
        raise SetFileError("$: expected a JSON object")
    for key in ("dimension", "gram", "motif"):
        if key not in doc:
            raise SetFileError(f"$: missing required key {key!r}")
    unknown = sorted(set(doc) - {"dimension", "gram", "motif", "declared_R_sq", "name"})
    if unknown:
        raise SetFileError(f"$: unknown key {unknown[0]!r}")
    d = doc["dimension"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise SetFileError(f"$.dimension: expected a positive integer, got {d!r}")
    gram = doc["gram"]
    if not isinstance(gram, list) or len(gram) != d:
        raise SetFileError(f"$.gram: expected {d} rows")
    rows = tuple(_vector(row, d, f"$.gram[{i}]") for i, row in enumerate(gram))
    motif = doc["motif"]
    if not isinstance(motif, list) or not motif:
        raise SetFileError("$.motif: expected a nonempty array of points")
    points = tuple(_vector(p, d, f"$.motif[{i}]") for i, p in enumerate(motif))
    declared = None
    if doc.get("declared_R_sq") is not None:
        declared = _rational(doc["declared_R_sq"], "$.declared_R_sq")
        if declared <= 0:
            raise SetFileError("$.declared_R_sq: must be positive")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise SetFileError("$.name: expected a string")
    try:
        g = GramMatrix(rows)
    except InvalidSetError as e:
        raise SetFileError(f"$.gram: {e}") from None
    try:
        X = PeriodicSet(g, points, name=name)
    except InvalidSetError as e:
        raise SetFileError(f"$.motif: {e}") from None
    return X, declared


def loads(text: str) -> tuple[PeriodicSet, Optional[Fraction]]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SetFileError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    return parse_document(doc)


def load(path) -> tuple[PeriodicSet, Optional[Fraction]]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SetFileError(f"{path}: {e.strerror}") from None
    try:
        return loads(text)
    except SetFileError as e:
        raise SetFileError(f"{path}: {e}") from None


def to_document(X: PeriodicSet, declared_R_sq: Fraction | None = None) -> dict:
    doc = {
        "dimension": X.d,
        "gram": [[fmt(x) for x in row] for row in X.gram.entries],
        "motif": [[fmt(x) for x in p] for p in X.motif],
    }
    if X.name:
        doc["name"] = X.name
    if declared_R_sq is not None:
        doc["declared_R_sq"] = fmt(declared_R_sq)
    return doc


def dumps(X: PeriodicSet, declared_R_sq: Fraction | None = None) -> str:
    return json.dumps(to_document(X, declared_R_sq), indent=2, sort_keys=True) + "\n"
