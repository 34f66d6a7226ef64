"""JSON documents for PFA, languages, bundles and instances.

Rationals are written as canonical ``"p/q"`` strings (``"1/1"``, ``"0/1"``).
A transition matrix is a list of rows, or for sparse storage an object
``{"shape": [n, n], "entries": [[i, j, "p/q"], ...]}`` listing the nonzeros
row by row.  Writing is deterministic, so ``dumps(loads(s)) == s`` for any
document this module produced.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .diophantine import ReductionBundle
from .freeness import FreenessBundle, MmpcpInstance, SubsetSumInstance
from .linalg import QMatrix, QVector
from .pfa import PFA, LanguageSpec

FORMAT_VERSION = 1
INDENT_LIMIT = 64  # documents with more states are written without indentation


class DocumentError(ValueError):
    """A document does not match the expected JSON shape."""


# -- rationals --------------------------------------------------------------


def qstr(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_q(s) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise DocumentError(f"expected a rational string, got {s!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise DocumentError(f"bad rational {s!r}: {e}") from None


# -- matrices and PFA -------------------------------------------------------


def matrix_to_json(M: QMatrix):
    if M.storage == "sparse":
        return {"shape": [M.rows, M.cols], "entries": [[i, j, qstr(x)] for i, j, x in M.items()]}
    return [[qstr(x) for x in row] for row in M.tolist()]


def matrix_from_json(doc) -> QMatrix:
    if isinstance(doc, dict):
        try:
            rows, cols = doc["shape"]
            return QMatrix.from_entries(rows, cols, ((i, j, parse_q(x)) for i, j, x in doc["entries"]), storage="sparse")
        except (KeyError, TypeError, ValueError) as e:
            raise DocumentError(f"bad sparse matrix: {e}") from None
    if not isinstance(doc, list):
        raise DocumentError("a matrix must be a list of rows or a sparse object")
    return QMatrix.from_rows([[parse_q(x) for x in row] for row in doc], storage="dense")


def pfa_to_dict(p: PFA) -> dict:
    return {
        "alphabet": list(p.alphabet),
        "n": p.n,
        "initial": [qstr(x) for x in p.initial],
        "transitions": {a: matrix_to_json(p.transitions[a]) for a in p.alphabet},
        "final": [int(y) for y in p.final],
    }


def pfa_from_dict(doc: dict) -> PFA:
    try:
        alphabet = [str(a) for a in doc["alphabet"]]
        initial = QVector([parse_q(x) for x in doc["initial"]])
        final = doc["final"]
        trans = {a: matrix_from_json(doc["transitions"][a]) for a in alphabet}
    except (KeyError, TypeError) as e:
        raise DocumentError(f"malformed PFA document: missing or bad field {e}") from None
    if any(y not in (0, 1) or isinstance(y, bool) for y in final):
        raise DocumentError("final vector entries must be 0 or 1")
    if "n" in doc and doc["n"] != len(initial):
        raise DocumentError(f"n={doc['n']} but the initial vector has length {len(initial)}")
    extra = set(doc["transitions"]) - set(alphabet)
    if extra:
        raise DocumentError(f"transitions for letters outside the alphabet: {sorted(extra)}")
    try:
        return PFA(tuple(alphabet), initial, trans, QVector(final))
    except ValueError as e:
        raise DocumentError(str(e)) from None


# -- languages --------------------------------------------------------------


def _word_to_json(w):
    return "".join(w) if all(len(a) == 1 for a in w) else list(w)


def _word_from_json(w) -> tuple:
    if isinstance(w, str):
        return tuple(w)
    if isinstance(w, list) and all(isinstance(a, str) for a in w):
        return tuple(w)
    raise DocumentError(f"bad word {w!r}")


def language_to_dict(lang: LanguageSpec) -> dict:
    factors = []
    for f in lang.factors:
        if len(f) == 1:
            factors.append(_word_to_json(f[0]))
        else:
            factors.append({"choice": [_word_to_json(w) for w in f]})
    return {"kind": lang.kind, "factors": factors, "star": list(lang.star)}


def language_from_dict(doc: dict) -> LanguageSpec:
    try:
        factors = []
        for f in doc["factors"]:
            if isinstance(f, dict):
                factors.append(tuple(_word_from_json(w) for w in f["choice"]))
            else:
                factors.append((_word_from_json(f),))
        return LanguageSpec(doc["kind"], tuple(factors), tuple(doc["star"]))
    except (KeyError, TypeError) as e:
        raise DocumentError(f"malformed language: {e}") from None
    except ValueError as e:
        raise DocumentError(str(e)) from None


# -- bundles ----------------------------------------------------------------

_RESERVED = ("bundle", "lambda", "relation", "language", "scale", "notes")


def bundle_to_dict(b) -> dict:
    doc = pfa_to_dict(b.pfa)
    if isinstance(b, ReductionBundle):
        head = {
            "bundle": "diophantine",
            "lambda": qstr(b.cutpoint),
            "relation": b.relation,
            "language": language_to_dict(b.lang),
        }
    elif isinstance(b, FreenessBundle):
        head = {
            "bundle": b.kind,
            "scale": qstr(b.scale),
            "language": language_to_dict(b.lang),
            "notes": list(b.notes),
        }
        doc["instance"] = b.instance
    else:
        raise TypeError(f"not a bundle: {type(b).__name__}")
    clash = set(head) & set(b.meta)
    if clash:
        raise ValueError(f"metadata keys collide with reserved names: {sorted(clash)}")
    doc["meta"] = {**head, **b.meta}
    doc["format"] = FORMAT_VERSION
    return doc


def bundle_from_dict(doc: dict):
    p = pfa_from_dict(doc)
    meta = dict(doc.get("meta") or {})
    kind = meta.get("bundle")
    if kind is None:
        raise DocumentError("document has no bundle metadata")
    try:
        lang = language_from_dict(meta["language"])
        rest = {k: v for k, v in meta.items() if k not in _RESERVED}
        if kind == "diophantine":
            return ReductionBundle(p, parse_q(meta["lambda"]), meta["relation"], lang, rest)
        if kind in ("mmpcp", "subsetsum"):
            return FreenessBundle(kind, p, lang, parse_q(meta["scale"]), doc["instance"], rest, tuple(meta.get("notes", ())))
    except KeyError as e:
        raise DocumentError(f"bundle metadata lacks {e}") from None
    raise DocumentError(f"unknown bundle kind {kind!r}")


def load_any(doc: dict):
    """A bundle when the document carries bundle metadata, else a bare PFA."""
    if not isinstance(doc, dict):
        raise DocumentError("top-level JSON value must be an object")
    if isinstance(doc.get("meta"), dict) and "bundle" in doc["meta"]:
        return bundle_from_dict(doc)
    return pfa_from_dict(doc)


def to_dict(obj) -> dict:
    if isinstance(obj, PFA):
        return pfa_to_dict(obj)
    return bundle_to_dict(obj)


# -- instances --------------------------------------------------------------


def instance_from_dict(doc: dict):
    """Read ``{"n", "h", "g"}`` as MMPCP or ``{"S"}`` as subset sum."""
    try:
        if "S" in doc:
            return SubsetSumInstance.from_dict(doc)
        if {"n", "h", "g"} <= set(doc):
            return MmpcpInstance.from_dict(doc)
    except (TypeError, AttributeError) as e:
        raise DocumentError(f"malformed instance: {e}") from None
    raise DocumentError("instance must have the fields n, h, g (MMPCP) or S (subset sum)")


# -- text and files ---------------------------------------------------------


def dumps(doc: Any) -> str:
    big = isinstance(doc, dict) and isinstance(doc.get("n"), int) and doc["n"] > INDENT_LIMIT
    if big:
        return json.dumps(doc, ensure_ascii=False, separators=(",", ":")) + "\n"
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"invalid JSON: {e}") from None


def dump_obj(obj) -> str:
    return dumps(to_dict(obj))


def load_obj(text: str):
    return load_any(loads(text))


def read_json(path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DocumentError(f"cannot read {path}: {e.strerror}") from None
    return loads(text)


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
