"""JSON instance documents: validation and resolution into set expressions."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from functools import cache
from importlib import resources

import jsonschema

from . import setalg as sa
from .exactgeom import ConvexPolyCone, MalformedInput, vec
from .setalg import Atom, ConjugateSpec, IndexedFamily, TruncationPolicy, coef, cvec

SCHEMA_ID = "conekit-instance/1"


class InstanceError(MalformedInput):
    """Malformed or unresolvable instance document."""

    def __init__(self, message, path=(), line=None):
        self.path = tuple(path)
        self.line = line
        where = "/" + "/".join(str(p) for p in self.path) if self.path else ""
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{where}{loc}: {message}" if where or loc else message)


@cache
def schema():
    text = resources.files("conekit").joinpath("schema/conekit-instance-1.json").read_text()
    return json.loads(text)


def _line_of(text, path):
    """Best-effort source line of the last key in ``path``."""
    if text is None:
        return None
    for key in reversed(path):
        if isinstance(key, str):
            pos = text.find(json.dumps(key))
            if pos >= 0:
                return text.count("\n", 0, pos) + 1
    return None


def kmax_override():
    val = os.environ.get("CONEKIT_KMAX")
    if not val:
        return None
    try:
        k = int(val)
    except ValueError:
        raise InstanceError(f"CONEKIT_KMAX must be an integer, got {val!r}") from None
    if k < 1:
        raise InstanceError("CONEKIT_KMAX must be positive")
    return k


@dataclass
class Instance:
    doc: dict
    text: str | None = None
    atoms: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)
    cones: dict = field(default_factory=dict)
    points: dict = field(default_factory=dict)
    problems: dict = field(default_factory=dict)

    @property
    def name(self):
        return self.doc.get("name", "")

    @property
    def dimension(self):
        return self.doc["dimension"]

    def _table(self, kind):
        return getattr(self, "families" if kind == "family" else kind + "s")

    def default(self, kind):
        d = self.doc.get("defaults", {})
        if kind in d:
            return d[kind]
        table = self._table(kind)
        if len(table) == 1:
            return next(iter(table))
        raise InstanceError(f"no default {kind}; pass one explicitly")

    def lookup(self, kind, name):
        table = self._table(kind)
        if name not in table:
            raise InstanceError(f"unknown {kind} {name!r}", (kind, name))
        return table[name]

    def point(self, ref):
        """A named point or a literal ``"a,b,..."`` / list."""
        if isinstance(ref, (list, tuple)):
            return vec(ref)
        if ref in self.points:
            return self.points[ref]
        try:
            return vec(ref.split(","))
        except MalformedInput:
            raise InstanceError(f"unknown point {ref!r}", ("points", ref)) from None


def load(source):
    """Load from a path, a JSON string or an already parsed dict."""
    text = None
    if isinstance(source, dict):
        doc = source
    else:
        if isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError(exc.msg, line=exc.lineno) from None
    return resolve(doc, text)


def resolve(doc, text=None):
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = list(e.absolute_path)
        raise InstanceError(e.message, path, _line_of(text, path))
    inst = Instance(doc, text)
    n = doc["dimension"]
    default_pol = _policy(doc.get("truncation"))

    def fail(msg, path):
        raise InstanceError(msg, path, _line_of(text, path))

    for name, spec in doc.get("atoms", {}).items():
        try:
            inst.atoms[name] = _atom(spec, name)
        except (MalformedInput, ValueError) as exc:
            fail(str(exc), ["atoms", name])

    pending = dict(doc.get("sets", {}))
    visiting = set()

    def get_set(name, path):
        if name in inst.sets:
            return inst.sets[name]
        if name not in pending:
            fail(f"unknown set {name!r}", path)
        if name in visiting:
            fail(f"cyclic set reference {name!r}", path)
        visiting.add(name)
        try:
            S = _set(pending[name], inst, lambda r: get_set(r, ["sets", name]))
        except InstanceError:
            raise
        except (MalformedInput, ValueError, KeyError, IndexError) as exc:
            fail(str(exc), ["sets", name])
        visiting.discard(name)
        inst.sets[name] = S
        return S

    for name in doc.get("sets", {}):
        get_set(name, ["sets", name])

    for name, spec in doc.get("families", {}).items():
        pol = _policy(spec.get("truncation")) if "truncation" in spec else default_pol
        start = spec.get("start", 1)

        def obj(ref, path):
            if ref in inst.atoms:
                return inst.atoms[ref]
            return get_set(ref, path)

        if "members" in spec:
            members = [obj(r, ["families", name, "members"]) for r in spec["members"]]
            if any(sa.is_templated(m) for m in members):
                fail("explicit members must not depend on the index", ["families", name])
            inst.families[name] = IndexedFamily.finite(members, start, name)
        else:
            inst.families[name] = IndexedFamily.from_template(obj(spec["template"], ["families", name, "template"]),
                                                              start, pol, name)

    for name, lst in doc.get("cones", {}).items():
        try:
            inst.cones[name] = [cone_from_spec(c, n) for c in lst]
        except (MalformedInput, ValueError) as exc:
            fail(str(exc), ["cones", name])

    for name, v in doc.get("points", {}).items():
        inst.points[name] = vec(v)

    for name, spec in doc.get("problems", {}).items():
        inst.problems[name] = spec
        for key, table in (("objective", inst.atoms), ("family", inst.families), ("graph", inst.sets),
                           ("constraints", inst.families)):
            if key in spec and spec[key] not in table:
                fail(f"unknown reference {spec[key]!r}", ["problems", name, key])
    for name, S in inst.sets.items():
        if not sa.is_templated(S) and S.dim != n and not _allowed_dim(doc, name):
            fail(f"set dimension {S.dim} differs from instance dimension {n}", ["sets", name])
    return inst


def _allowed_dim(doc, name):
    # graphs of set-valued maps and epigraphs live in a product space
    for spec in doc.get("problems", {}).values():
        if spec.get("graph") == name:
            return True
    return doc["sets"][name]["type"] in ("epigraph",) or "dim" in doc["sets"][name]


def _policy(spec):
    spec = dict(spec or {})
    pol = TruncationPolicy(spec.get("K_init", 8), spec.get("K_max", 512), spec.get("w", 5))
    k = kmax_override()
    if k is not None:
        pol = TruncationPolicy(min(pol.K_init, k), k, pol.w)
    return pol


def _atom(spec, name):
    conj = None
    if "conjugate" in spec:
        c = spec["conjugate"]
        conj = ConjugateSpec(cvec(c["p"]), cvec(c["d"]), coef(c.get("alpha", 0)), coef(c.get("beta", 0)),
                             coef(c.get("gamma", 0)))
    convex = spec.get("convex", True)
    t = spec["type"]
    if t == "affine":
        at = Atom.affine(spec["a"], spec.get("c", 0), name)
        return at if conj is None else Atom(at.dim, at.pieces, True, conj, name)
    if t == "quadratic":
        return Atom.quadratic(spec["Q"], spec["q"], spec.get("c", 0), convex, conj, name)
    pieces = []
    for p in spec["pieces"]:
        k = len(p["q"])
        pieces.append((p.get("A", []), p.get("b", []), p.get("Q", [[0] * k for _ in range(k)]), p["q"],
                       p.get("c", 0)))
    return Atom.piecewise(pieces, convex, conj, name)


def _set(spec, inst, ref):
    t = spec["type"]
    if t == "polyhedral":
        return sa.Polyhedral.make(spec["A"], spec["b"], spec.get("dim"))
    if t == "halfspace":
        return sa.halfspace(spec["a"], spec.get("b", 0))
    if t == "whole":
        return sa.whole(spec.get("dim", inst.dimension))
    if t in ("level", "epigraph"):
        name = spec["atom"]
        if name not in inst.atoms:
            raise InstanceError(f"unknown atom {name!r}")
        return (sa.LevelSet if t == "level" else sa.Epigraph)(inst.atoms[name])
    if t == "complement":
        return sa.Complement.make(spec["A"], spec["b"])
    if t == "preimage":
        return sa.Preimage.make(spec["M"], spec["m"], ref(spec["of"]))
    parts = tuple(ref(r) for r in spec["of"])
    return sa.Union(parts) if t == "union" else sa.Intersection(parts)


def cone_from_spec(spec, n=None):
    dim = spec.get("dim", n)
    if "rays" in spec or "lineality" in spec:
        gens = [vec(r) for r in spec.get("rays", [])]
        for l in spec.get("lineality", []):
            gens.append(vec(l))
            gens.append(tuple(-c for c in vec(l)))
        if gens:
            dim = len(gens[0])
        return ConvexPolyCone.from_generators(gens, dim)
    rows = [vec(r) for r in spec.get("ineqs", [])]
    for e in spec.get("eqs", []):
        rows.append(vec(e))
        rows.append(tuple(-c for c in vec(e)))
    if rows:
        dim = len(rows[0])
    if dim is None:
        raise MalformedInput("cone dimension required")
    return ConvexPolyCone.from_inequalities(rows, dim)
