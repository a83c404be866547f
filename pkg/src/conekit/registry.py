"""Built-in worked instances with stored expected verdicts."""
from __future__ import annotations

from dataclasses import dataclass

from .instance import resolve

ORIGIN2 = {"origin": [0, 0]}


@dataclass(frozen=True)
class Check:
    command: str
    args: dict
    expect: dict  # dotted path into the encoded results -> expected value


@dataclass(frozen=True)
class Entry:
    name: str
    summary: str
    display: str
    doc: dict
    checks: tuple

    def instance(self):
        return resolve(self.doc)


def _doc(name, dimension, **sections):
    doc = {"schema": "conekit-instance/1", "name": name, "dimension": dimension}
    doc.update(sections)
    return doc


_EPI_PHI = {
    "type": "piecewise",
    "pieces": [
        {"A": [[1]], "b": [0], "Q": [["i"]], "q": [0], "c": 0},
        {"A": [[-1]], "b": [0], "Q": [[0]], "q": [0], "c": 0},
    ],
}

_PHI_48 = {
    "type": "piecewise",
    "pieces": [
        {"A": [[1, 0]], "b": [0], "Q": [["i", 0], [0, 0]], "q": [0, -1], "c": 0},
        {"A": [[-1, 0]], "b": [0], "Q": [[0, 0], [0, 0]], "q": [0, -1], "c": 0},
    ],
    "conjugate": {"p": [0, -1], "d": [-1, 0], "alpha": "1/(4*i)", "beta": 0, "gamma": 0},
}

ENTRIES = (
    Entry(
        "ex3.4i",
        "two parabolic regions touching at the origin: tangent cones and CHIP failure",
        "Omega_1 = {x2 >= x1^2}, Omega_2 = {x2 <= -x1^2}, base point (0,0)",
        _doc("ex3.4i", 2,
             atoms={"up": {"type": "quadratic", "Q": [[1, 0], [0, 0]], "q": [0, -1]},
                    "down": {"type": "quadratic", "Q": [[1, 0], [0, 0]], "q": [0, 1]}},
             sets={"O1": {"type": "level", "atom": "up"}, "O2": {"type": "level", "atom": "down"},
                   "O12": {"type": "intersection", "of": ["O1", "O2"]}},
             families={"F": {"members": ["O1", "O2"]}},
             points=ORIGIN2,
             defaults={"set": "O1", "family": "F", "point": "origin"}),
        (
            Check("cone", {"set": "O1", "which": "tangent"},
                  {"cone.cone.pieces.0.lineality": [["1", "0"]], "cone.cone.pieces.0.rays": [["0", "1"]]}),
            Check("cone", {"set": "O2", "which": "tangent"},
                  {"cone.cone.pieces.0.lineality": [["1", "0"]], "cone.cone.pieces.0.rays": [["0", "-1"]]}),
            Check("cone", {"set": "O12", "which": "tangent"},
                  {"cone.cone.pieces.0.rays": [], "cone.cone.pieces.0.lineality": []}),
            Check("cone", {"set": "O1", "which": "frechet"}, {"cone.cone.pieces.0.rays": [["0", "-1"]]}),
            Check("chip", {}, {"chip.holds": "no", "chip.witness": ["1", "0"]}),
        ),
    ),
    Entry(
        "ex3.4ii",
        "epigraphs of i x^2 (x < 0), 0 (x >= 0): countable CHIP failure with nonempty interior",
        "φ_i(x):=i x² if x<0, 0 if x≥0;  Ω_i := epi φ_i;  i = 1, 2, ...",
        _doc("ex3.4ii", 2,
             atoms={"phi": _EPI_PHI},
             sets={"E": {"type": "epigraph", "atom": "phi"}},
             families={"F": {"template": "E", "start": 1}},
             points=ORIGIN2),
        (
            Check("chip", {"truncate": 64}, {"chip.holds": "no", "chip.witness": ["-1", "0"]}),
        ),
    ),
    Entry(
        "cor3.3",
        "halfspaces <(1,i), x> <= 0: CHIP holds, the normal hull is not closed",
        "Omega_i := {x : x1 + i x2 <= 0};  i = 0, 1, 2, ...",
        _doc("cor3.3", 2,
             sets={"H": {"type": "halfspace", "a": [1, "i"], "b": 0}},
             families={"F": {"template": "H", "start": 0}},
             points=ORIGIN2),
        (
            Check("qualify", {"conditions": "chip,asym-chip,nqc,ncc"},
                  {"chip.holds": "yes", "asym-chip.holds": "yes", "nqc.holds": "yes", "ncc.holds": "no",
                   "ncc.witness": ["0", "1"]}),
        ),
    ),
    Entry(
        "ex4.8i-lin",
        "linear constraints <(1,i), x> <= 0: CHIP yes, SCC no",
        "phi_i(x) := x1 + i x2;  i = 0, 1, 2, ...",
        _doc("ex4.8i-lin", 2,
             atoms={"phi": {"type": "affine", "a": [1, "i"], "c": 0}},
             families={"F": {"template": "phi", "start": 0}},
             points=ORIGIN2),
        (
            Check("qualify", {"conditions": "chip,scc"},
                  {"chip.holds": "yes", "scc.holds": "no", "scc.witness": ["0", "1"]}),
        ),
    ),
    Entry(
        "ex4.8i-quad",
        "quadratic constraints i x1^2 - x2 <= 0: CHIP no, SCC yes",
        "phi_i(x) := i x1^2 - x2;  i = 1, 2, ...",
        _doc("ex4.8i-quad", 2,
             atoms={"phi": {"type": "quadratic", "Q": [["i", 0], [0, 0]], "q": [0, -1]}},
             families={"F": {"template": "phi", "start": 1}},
             points=ORIGIN2),
        (
            Check("qualify", {"conditions": "chip,scc"}, {"chip.holds": "no", "scc.holds": "yes"}),
        ),
    ),
    Entry(
        "ex4.8ii",
        "piecewise quadratic constraints with closed-form conjugates: SCC yes, FMCQ and CQC fail",
        "minimise -x2 s.t. phi_i(x) := i x1^2 - x2 if x1 < 0, -x2 if x1 >= 0;  i = 1, 2, ...",
        _doc("ex4.8ii", 2,
             atoms={"phi": _PHI_48, "obj": {"type": "affine", "a": [0, -1], "c": 0}},
             families={"F": {"template": "phi", "start": 1}},
             points=ORIGIN2,
             problems={"sip": {"type": "sip", "objective": "obj", "kind": "inequality", "family": "F",
                               "point": "origin", "mode": "lower"}}),
        (
            # the level sets intersect in the closed positive quadrant, so CHIP fails at the origin
            Check("qualify", {"conditions": "chip,scc,sqc,fmcq,cqc"},
                  {"chip.holds": "no", "scc.holds": "yes", "sqc.holds": "yes", "fmcq.holds": "no",
                   "cqc.holds": "no"}),
            Check("certify", {}, {"sip.status": "hypothesis-violation", "sip.failed": ["CHIP"]}),
            Check("certify", {"assume": "CHIP"}, {"sip.status": "condition-violated", "sip.residual": "1"}),
        ),
    ),
    Entry(
        "antipodal",
        "opposite halfspaces: the normal qualification condition fails",
        "Omega_1 := {x1 <= 0}, Omega_2 := {x1 >= 0}",
        _doc("antipodal", 2,
             sets={"L": {"type": "halfspace", "a": [1, 0]}, "R": {"type": "halfspace", "a": [-1, 0]}},
             families={"F": {"members": ["L", "R"]}},
             points=ORIGIN2),
        (
            Check("qualify", {"conditions": "chip,nqc"},
                  {"chip.holds": "yes", "nqc.holds": "no", "nqc.witness.mu": ["1/2", "1/2"]}),
        ),
    ),
    Entry(
        "lin-sip",
        "linear semi-infinite program: KKT multipliers for -x1 over <(1,i), x> <= 0",
        "minimise -x1 s.t. x1 + i x2 <= 0;  i = 0, 1, 2, ...",
        _doc("lin-sip", 2,
             atoms={"phi": {"type": "affine", "a": [1, "i"], "c": 0},
                    "obj": {"type": "affine", "a": [-1, 0], "c": 0}},
             families={"F": {"template": "phi", "start": 0}},
             points=ORIGIN2,
             problems={"sip": {"type": "sip", "objective": "obj", "kind": "linear", "family": "F",
                               "point": "origin", "mode": "lower"}}),
        (
            Check("certify", {}, {"sip.status": "certified", "sip.index_set": [0], "sip.multipliers": {"0,0": "1"}}),
            Check("certify", {"mode": "upper"}, {"sip.status": "certified", "sip.index_set": [0]}),
        ),
    ),
    Entry(
        "inactive-sip",
        "all constraints inactive and a stationary objective: empty multiplier set",
        "minimise x1^2 + x2^2 s.t. x1 / i - 1 <= 0;  i = 1, 2, ...",
        _doc("inactive-sip", 2,
             atoms={"phi": {"type": "affine", "a": ["1/i", 0], "c": -1},
                    "obj": {"type": "quadratic", "Q": [[1, 0], [0, 1]], "q": [0, 0]}},
             families={"F": {"template": "phi", "start": 1}},
             points=ORIGIN2,
             problems={"sip": {"type": "sip", "objective": "obj", "kind": "inequality", "family": "F",
                               "point": "origin", "mode": "lower"}}),
        (
            Check("certify", {}, {"sip.status": "certified", "sip.index_set": []}),
        ),
    ),
    Entry(
        "quadrants",
        "four coordinate halfplanes meeting only at the origin: extremal principle certificate",
        "Lambda_1 = {x2 >= 0}, Lambda_2 = {x2 <= 0}, Lambda_3 = {x1 >= 0}, Lambda_4 = {x1 <= 0}",
        _doc("quadrants", 2,
             cones={"L": [{"ineqs": [[0, -1]]}, {"ineqs": [[0, 1]]}, {"ineqs": [[-1, 0]]},
                          {"ineqs": [[1, 0]]}]}),
        (
            Check("extremal", {}, {"extremal.verified": True, "extremal.weighted_sum": ["0", "0"],
                                   "extremal.normalization": "1"}),
        ),
    ),
    Entry(
        "pareto-abs",
        "set-valued map F(x) = {y >= |x|} ordered by R+: minimality and coderivative condition",
        "F(x) := {y : y >= |x|},  Theta = R+,  Omega = R,  (xbar, ybar) = (0, 0)",
        _doc("pareto-abs", 1,
             sets={"G": {"type": "polyhedral", "A": [[1, -1], [-1, -1]], "b": [0, 0]}},
             problems={"P": {"type": "pareto", "graph": "G", "n": 1, "theta": {"rays": [[1]]},
                             "point": [0, 0]}}),
        (
            Check("pareto", {}, {"tangential-graphical.holds": True, "fully-localized.holds": True,
                                 "graphical.holds": True, "certificate.ystar": ["1"],
                                 "certificate.residual": "0", "coderivative-at-zero.trivial": True}),
        ),
    ),
    Entry(
        "pareto-halfline",
        "F(x) = {y >= -x} over Omega = {x <= 0}: the constraint normal balances the coderivative",
        "F(x) := {y : y >= -x},  Theta = R+,  Omega = {x <= 0},  (xbar, ybar) = (0, 0)",
        _doc("pareto-halfline", 1,
             sets={"G": {"type": "polyhedral", "A": [[-1, -1]], "b": [0]},
                   "Om": {"type": "halfspace", "a": [1]}},
             families={"C": {"members": ["Om"]}},
             problems={"P": {"type": "pareto", "graph": "G", "n": 1, "theta": {"rays": [[1]]},
                             "constraints": "C", "point": [0, 0]}}),
        (
            Check("pareto", {}, {"certificate.ystar": ["1"], "certificate.x0": ["-1"],
                                 "certificate.residual": "0"}),
        ),
    ),
)

BY_NAME = {e.name: e for e in ENTRIES}


def get(name):
    if name not in BY_NAME:
        raise KeyError(f"no registry entry {name!r}")
    return BY_NAME[name]
