"""Family description files and JSON report encoding.

Explicit family::

    {"kind": "explicit",
     "blocks": [[[[1, 0], [0, 0]], [[0, 0], [2, 0]]], [[[3, 0]]]],
     "measure": "counting"}

Entries are ``[re, im]`` pairs (a bare number is read as real).  Optional
``"flags"`` gives one ``{"normal": ..., "nilpotency_order": ...}`` object per
block.  ``"measure"`` is ``"counting"`` or a list of positive weights.

Generator family (a named fixture)::

    {"kind": "generator", "name": "harmonic_diag", "params": {},
     "tail": {"N0": 1, "upper": "1/n"}}

``tail`` keys (``N0``, ``upper``, ``lower``, ``singular``, ``clearance``,
``dim_bound``) override the fixture's own certificate.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
import sys

import numpy as np

from .envelope import Envelope, EnvelopeSyntaxError
from .family import BlockMatrix, ConstructionError, MeasureSpec, TailCertificate, make_explicit, make_generator
from .fixtures import FixtureSpec, make_fixture

_TAIL_KEYS = {"N0": "start", "upper": "upper", "lower": "lower", "singular": "singular",
              "clearance": "clearance", "dim_bound": "dim_bound"}


class FamilyFileError(ValueError):
    """Unreadable family description; ``position`` locates the fault."""

    def __init__(self, message, position="$"):
        self.position = position
        super().__init__(f"{position}: {message}")


def _number(value, where):
    if isinstance(value, bool):
        raise FamilyFileError("expected a number", where)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise FamilyFileError("expected a number or an [re, im] pair", where)


def _block(raw, where, flags):
    if not isinstance(raw, list) or not raw or not all(isinstance(r, list) for r in raw):
        raise FamilyFileError("block must be a nonempty list of rows", where)
    rows = [[_number(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)] for i, row in enumerate(raw)]
    try:
        return BlockMatrix(rows, **flags)
    except (ConstructionError, ValueError) as exc:
        raise FamilyFileError(str(exc), where) from None


def _measure(raw, where="$.measure"):
    if raw is None or raw == "counting":
        return MeasureSpec()
    try:
        if isinstance(raw, str):
            return MeasureSpec(Envelope(raw))
        if isinstance(raw, list):
            return MeasureSpec(tuple(raw))
    except (ConstructionError, EnvelopeSyntaxError, TypeError, ValueError) as exc:
        raise FamilyFileError(str(exc), where) from None
    raise FamilyFileError("measure must be 'counting', a weight list or an expression", where)


def family_from_dict(doc):
    """Build a :class:`BlockFamily` from a parsed description document."""
    if not isinstance(doc, dict):
        raise FamilyFileError("top level must be an object")
    kind = doc.get("kind")
    if kind == "explicit":
        blocks = doc.get("blocks")
        if not isinstance(blocks, list) or not blocks:
            raise FamilyFileError("explicit family needs a nonempty 'blocks' list", "$.blocks")
        flags = doc.get("flags") or [{}] * len(blocks)
        if not isinstance(flags, list) or len(flags) != len(blocks):
            raise FamilyFileError("'flags' needs one object per block", "$.flags")
        built = []
        for i, (raw, fl) in enumerate(zip(blocks, flags)):
            if not isinstance(fl, dict) or set(fl) - {"normal", "nilpotency_order"}:
                raise FamilyFileError("unknown block flags", f"$.flags[{i}]")
            built.append(_block(raw, f"$.blocks[{i}]", fl))
        measure = _measure(doc.get("measure"))
        try:
            return make_explicit(built, measure, name=doc.get("name", "explicit"))
        except ConstructionError as exc:
            raise FamilyFileError(str(exc), "$") from None
    if kind == "generator":
        params = doc.get("params") or {}
        if not isinstance(params, dict):
            raise FamilyFileError("'params' must be an object", "$.params")
        try:
            family = make_fixture(FixtureSpec(doc.get("name"), **params))
        except TypeError as exc:
            raise FamilyFileError(str(exc), "$.params") from None
        except (ConstructionError, EnvelopeSyntaxError, ValueError) as exc:
            raise FamilyFileError(str(exc), "$.name") from None
        measure = _measure(doc.get("measure"))
        tail = doc.get("tail")
        if tail is None and measure.counting:
            return family
        return with_tail(family, tail or {}, measure)
    raise FamilyFileError("'kind' must be 'explicit' or 'generator'", "$.kind")


def with_tail(family, overrides, measure=None):
    """Copy of a generator family with tail-certificate fields replaced."""
    if not isinstance(overrides, dict) or set(overrides) - set(_TAIL_KEYS):
        raise FamilyFileError(f"tail keys must be among {sorted(_TAIL_KEYS)}", "$.tail")
    base = family.tail or TailCertificate()
    fields = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
    fields.update({_TAIL_KEYS[k]: v for k, v in overrides.items()})
    try:
        tail = TailCertificate(**fields)
    except EnvelopeSyntaxError as exc:
        raise FamilyFileError(str(exc), "$.tail") from None
    except (ConstructionError, ValueError, TypeError) as exc:
        raise FamilyFileError(str(exc), "$.tail") from None
    if family.explicit:
        raise FamilyFileError("tail certificates apply to generator families", "$.tail")
    return make_generator(family.generator, tail, measure or family.measure,
                          name=family.name, description=family.description)


def load_family(source):
    """Read a description from a path (``"-"`` for stdin).  Returns ``(family, sha256 digest)``."""
    if source == "-":
        text = sys.stdin.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FamilyFileError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return family_from_dict(doc), digest


def family_to_dict(family):
    """Description document for an explicit family (inverse of :func:`family_from_dict`)."""
    if not family.explicit:
        doc = {"kind": "generator", "name": family.name,
               "params": {k: v for k, v in family.description.items() if k != "name"}}
        if family.tail is not None:
            doc["tail"] = family.tail.to_json()
        return doc
    blocks = [[[[v.real, v.imag] for v in row] for row in b.data] for b in family.blocks]
    flags = [{k: v for k, v in (("normal", b.normal), ("nilpotency_order", b.nilpotency_order)) if v is not None}
             for b in family.blocks]
    doc = {"kind": "explicit", "blocks": blocks, "measure": family.measure.to_json()}
    if any(flags):
        doc["flags"] = flags
    return doc


def to_jsonable(obj):
    """Plain JSON data from report objects.

    Complex numbers become ``[re, im]``; non-finite floats become the strings
    ``"inf"``, ``"-inf"`` and ``"nan"`` so the output stays strict JSON.
    """
    if isinstance(obj, enum.Enum):
        return obj.value
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_json"):
            return to_jsonable(obj.to_json())
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not f.name.startswith("_") and f.repr}
    if isinstance(obj, Envelope):
        return obj.text
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def dumps(obj):
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False)
