"""Deterministic JSON and text reports.

Exact rationals are written as ``"p/q"`` strings and floating-point values as
``{"approx": x}``, so a report never contains an unlabeled float.
"""
from __future__ import annotations

import dataclasses
import json
import math
from fractions import Fraction

from .exactgeom import ConeRep, ConvexPolyCone, fmt_q

VERSION = "0.1.0"
FLOAT_DIGITS = 12


def _approx(x):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return {"approx": str(x)}
    return {"approx": float(f"{x:.{FLOAT_DIGITS}g}")}


def _key(k):
    if isinstance(k, tuple):
        return ",".join(_key(c) for c in k)
    if isinstance(k, Fraction):
        return fmt_q(k)
    return str(k)


def encode(obj):
    """Convert results to JSON-ready data with exactness markers."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Fraction):
        return fmt_q(obj)
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float) or type(obj).__module__ == "numpy":
        if hasattr(obj, "tolist") and not isinstance(obj, float) and getattr(obj, "ndim", 0):
            return [encode(v) for v in obj.tolist()]
        return _approx(obj)
    if isinstance(obj, ConvexPolyCone):
        return {"rays": encode(obj.rays), "lineality": encode(obj.lineality),
                "ineqs": encode(obj.facets), "eqs": encode(obj.eqs)}
    if isinstance(obj, ConeRep):
        return {"pieces": [encode(p) for p in obj.pieces], "exact": obj.exact}
    if isinstance(obj, dict):
        return {_key(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset, range)):
        items = list(obj)
        if isinstance(obj, (set, frozenset)):
            items = sorted(items, key=repr)
        return [encode(v) for v in items]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {"kind": type(obj).__name__}
        for f in dataclasses.fields(obj):
            if f.name in ("meta", "grid", "homes"):
                continue
            out[f.name] = encode(getattr(obj, f.name))
        return out
    return str(obj)


def _count(node, acc):
    if isinstance(node, dict):
        if "exact" in node and isinstance(node["exact"], bool) and "kind" in node:
            acc["exact" if node["exact"] else "approximate"] += 1
        for v in node.values():
            _count(v, acc)
    elif isinstance(node, list):
        for v in node:
            _count(v, acc)


def make_report(command, instance_name, results, timing=None):
    """``results`` maps request labels to result objects (already ordered)."""
    body = {k: encode(v) for k, v in results.items()}
    acc = {"exact": 0, "approximate": 0}
    _count(body, acc)
    rep = {"tool": "conekit", "version": VERSION, "command": command, "instance": instance_name,
           "results": body, "exactness": acc}
    if timing is not None:
        rep["timing"] = {k: _approx(v) for k, v in timing.items()}
    return rep


def dumps(report):
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _text_value(v):
    if isinstance(v, dict) and set(v) == {"approx"}:
        return f"~{v['approx']}"
    if isinstance(v, list):
        return "[" + ", ".join(_text_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_text_value(x)}" for k, x in v.items()) + "}"
    return str(v)


def to_text(report):
    lines = [f"conekit {report['version']}  {report['command']}  {report['instance']}"]
    for label, res in report["results"].items():
        if isinstance(res, dict) and "kind" in res:
            head = [f"{label}:"]
            for key in ("holds", "status", "condition", "prop", "method"):
                if key in res and res[key] not in (None, ""):
                    head.append(f"{key}={res[key]}")
            if "exact" in res:
                head.append("exact" if res["exact"] else "approximate")
            lines.append(" ".join(head))
            for key in ("witness", "cone", "ystar", "x0", "index_set", "multipliers", "normals",
                        "residual", "scale_sq", "gap", "value", "C_hat", "trend", "failed", "trivial",
                        "verified", "weighted_sum", "normalization", "note"):
                if key in res and res[key] is not None and res[key] not in ("", [], {}):
                    lines.append(f"  {key}: {_text_value(res[key])}")
        else:
            lines.append(f"{label}: {_text_value(res)}")
    ex = report["exactness"]
    lines.append(f"exact results: {ex['exact']}, approximate results: {ex['approximate']}")
    return "\n".join(lines) + "\n"
