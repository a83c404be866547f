"""Command-line front end.

Exit codes: 0 when every requested verdict is resolved (a "no" counts as
resolved), 2 when an inconclusive verdict is present, 1 on errors.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from fractions import Fraction

from . import certify as ce
from . import exactgeom as eg
from . import families as fam
from . import qualconds as qc
from . import registry
from . import setalg as sa
from . import varcalc as vc
from .instance import InstanceError, cone_from_spec, load
from .report import dumps, encode, make_report, to_text

CONDITIONS = ("chip", "asym-chip", "nqc", "interior", "ncc", "scc", "sqc", "fmcq", "cqc", "rank",
              "regularity", "invex")
INCONCLUSIVE = {"inconclusive-at-K", "not-found"}


class CommandError(Exception):
    pass


def _instance(ref):
    if ref in registry.BY_NAME:
        return registry.get(ref).instance()
    return load(ref)


def _point(inst, args):
    ref = getattr(args, "point", None) or inst.default("point")
    return inst.point(ref)


def _family(inst, args):
    name = getattr(args, "family", None) or inst.default("family")
    return inst.lookup("family", name)


def _is_atom_family(F):
    obj = F.members[0] if F.is_finite else F.template
    return isinstance(obj, sa.Atom)


def _hypothesis(exc):
    return {"kind": "HypothesisFailure", "status": "hypothesis-violation", "failed": list(exc.failed),
            "message": str(exc), "exact": True}


# ---------------------------------------------------------------- commands

def cmd_cone(inst, args):
    name = args.set or inst.default("set")
    S = inst.lookup("set", name)
    x = _point(inst, args)
    which = args.which
    if which == "tangent":
        res = vc.tangent_cone(S, x)
    elif which == "frechet":
        res = vc.frechet_normal_cone(S, x)
    else:
        res = vc.limiting_normal_cone(S, x)
    return {"cone": res}


def cmd_chip(inst, args):
    F = _family(inst, args)
    if _is_atom_family(F):
        F = F.levels()
    return {"chip": fam.chip_check(F, _point(inst, args), args.truncate)}


def _objective_for(inst, args, fname):
    if args.objective:
        return inst.lookup("atom", args.objective)
    for spec in inst.problems.values():
        if spec.get("family") == fname and "objective" in spec:
            return inst.atoms[spec["objective"]]
    raise CommandError("cqc needs an objective atom (--objective)")


def cmd_qualify(inst, args):
    fname = args.family or inst.default("family")
    F = inst.lookup("family", fname)
    x = _point(inst, args)
    K = args.truncate
    conds = [c.strip() for c in (args.conditions or "chip,nqc").split(",") if c.strip()]
    for c in conds:
        if c not in CONDITIONS:
            raise CommandError(f"unknown condition {c!r}; choose from {', '.join(CONDITIONS)}")
    atoms = _is_atom_family(F)
    G = F.levels() if atoms else F
    out = {}
    for c in conds:
        if c in ("scc", "sqc", "fmcq", "cqc") and not atoms:
            raise CommandError(f"{c} needs a family of constraint functions")
        if c == "chip":
            out[c] = fam.chip_check(G, x, K)
        elif c == "asym-chip":
            out[c] = fam.asymptotic_strong_chip_check(G, x, K)
        elif c == "nqc":
            out[c] = qc.nqc_check(G, x, K)
        elif c == "interior":
            out[c] = qc.interior_point_nqc(G, x, K)
        elif c == "ncc":
            out[c] = qc.ncc_check(G, x, K)
        elif c == "scc":
            out[c] = qc.scc_check(F, x, K)
        elif c == "sqc":
            out[c] = qc.sqc_check(F, x, K)
        elif c == "fmcq":
            out[c] = qc.fmcq_check(F, K)
        elif c == "cqc":
            out[c] = qc.cqc_check(_objective_for(inst, args, fname), F, K)
        elif c == "rank":
            out[c] = fam.tangential_rank(G, x, K)
        elif c == "regularity":
            out[c] = fam.linear_regularity_estimate(G, x, K)
        elif c == "invex":
            out[c] = fam.invex_chip_check(G, x, K)
    return out


def _sip_problem(inst, spec):
    return ce.SIPProblem(inst.atoms[spec["objective"]], spec.get("kind", "geometric"), inst.families[spec["family"]],
                         sa.cmat(spec["M"]) if "M" in spec else None, sa.cvec(spec["m"]) if "m" in spec else None,
                         spec.get("normally_regular"))


def cmd_certify(inst, args):
    pname = args.problem or inst.default("problem")
    spec = inst.lookup("problem", pname)
    if spec["type"] != "sip":
        raise CommandError(f"problem {pname!r} is not a semi-infinite program")
    mode = args.mode or spec.get("mode", "lower")
    assume = list(spec.get("assume", []))
    if args.assume:
        assume += [a.strip() for a in args.assume.split(",") if a.strip()]
    x = inst.point(args.point or spec["point"])
    try:
        cert = ce.sip_certify(_sip_problem(inst, spec), x, mode, args.truncate, assume)
    except ce.HypothesisViolation as exc:
        return {pname: _hypothesis(exc)}
    return {pname: cert}


def _extremal_result(cert):
    out = {f: getattr(cert, f) for f in ("normals", "scale_sq", "K_used", "shifts", "shift_bound", "note")}
    out.update(kind="ExtremalCertificate", exact=True, verified=cert.verify(), weighted_sum=cert.weighted_sum(),
               normalization=cert.normalization())
    return out


def cmd_extremal(inst, args):
    if args.cones or inst.cones:
        cones = inst.lookup("cone", args.cones or inst.default("cone"))
    else:
        F = _family(inst, args)
        if _is_atom_family(F):
            F = F.levels()
        K = fam._default_K(F, args.truncate)
        cones = ce.family_tangent_cones(F, _point(inst, args), K)
    bound = args.bound
    try:
        cert = ce.extremal_certificate(cones, bound, require_nonoverlap=not args.allow_overlap)
    except ce.HypothesisViolation as exc:
        return {"extremal": _hypothesis(exc)}
    except ce.NotFound as exc:
        return {"extremal": {"kind": "Search", "status": "not-found", "note": str(exc), "exact": True}}
    return {"extremal": _extremal_result(cert)}


def _pareto_problem(inst, spec):
    theta = cone_from_spec(spec["theta"])
    cons = inst.families[spec["constraints"]] if "constraints" in spec else None
    return ce.ParetoProblem(inst.sets[spec["graph"]], spec["n"], theta, cons, spec.get("normally_regular"))


def cmd_pareto(inst, args):
    pname = args.problem or inst.default("problem")
    spec = inst.lookup("problem", pname)
    if spec["type"] != "pareto":
        raise CommandError(f"problem {pname!r} is not a multiobjective problem")
    P = _pareto_problem(inst, spec)
    z = inst.point(args.point or spec["point"])
    out = {}
    for notion in ce.MINIMIZER_NOTIONS:
        try:
            out[notion] = ce.pareto_check(P, z, notion)
        except ce.HypothesisViolation as exc:
            out[notion] = _hypothesis(exc)
    D0 = vc.coderivative(P.graph, z, (0,) * P.m, P.n)
    out["coderivative-at-zero"] = {"kind": "Coderivative", "trivial": D0.is_zero_only(), "exact": D0.exact}
    try:
        out["certificate"] = ce.pareto_necessary_cond(P, z, args.truncate, spec.get("assume", ()))
    except ce.HypothesisViolation as exc:
        out["certificate"] = _hypothesis(exc)
    except ce.NotFound as exc:
        out["certificate"] = {"kind": "Search", "status": "not-found", "note": str(exc), "exact": True}
    return out


COMMANDS = {"cone": cmd_cone, "chip": cmd_chip, "qualify": cmd_qualify, "certify": cmd_certify,
            "extremal": cmd_extremal, "pareto": cmd_pareto}


# ---------------------------------------------------------------- registry

def _lookup_path(node, path):
    for part in path.split("."):
        if isinstance(node, list):
            node = node[int(part)]
        else:
            node = node[part]
    return node


def _check_args(check):
    ns = argparse.Namespace(set=None, point=None, which="tangent", family=None, truncate=None, conditions=None,
                            objective=None, problem=None, mode=None, assume=None, cones=None, bound=2,
                            allow_overlap=False, tol=None, seed=0)
    for k, v in check.args.items():
        setattr(ns, k, v)
    return ns


def run_entry(entry):
    """Run every stored check; returns a list of ``(label, ok, detail)``."""
    inst = entry.instance()
    rows = []
    for n, check in enumerate(entry.checks):
        label = f"{entry.name}#{n} {check.command}"
        try:
            body = encode(COMMANDS[check.command](inst, _check_args(check)))
        except Exception as exc:  # a crashing check is a mismatch, not a crash of the runner
            rows.append((label, False, f"error: {exc}"))
            continue
        bad = []
        for path, want in check.expect.items():
            try:
                got = _lookup_path(body, path)
            except (KeyError, IndexError, ValueError, TypeError):
                got = "<missing>"
            if got != want:
                bad.append(f"{path}: expected {want!r}, got {got!r}")
        rows.append((label, not bad, "; ".join(bad)))
    return rows


def cmd_registry(args):
    action = args.action
    if action == "list":
        return {e.name: e.summary for e in registry.ENTRIES}, 0
    if action == "show":
        if not args.name:
            raise CommandError("registry show needs an entry name")
        e = registry.get(args.name)
        return {e.name: {"summary": e.summary, "family": e.display, "instance": e.doc,
                         "checks": [{"command": c.command, "args": c.args, "expect": c.expect} for c in e.checks]}}, 0
    entries = sorted(registry.ENTRIES, key=lambda e: e.name)
    rows = []
    try:
        with ProcessPoolExecutor() as pool:
            for part in pool.map(run_entry, entries):
                rows.extend(part)
    except (OSError, BrokenProcessPool):  # no process support in this environment
        rows = [r for e in entries for r in run_entry(e)]
    mismatches = [r for r in rows if not r[1]]
    body = {label: {"ok": ok, "detail": detail} for label, ok, detail in rows}
    body["summary"] = {"checks": len(rows), "mismatches": len(mismatches)}
    return body, (1 if mismatches else 0)


# ---------------------------------------------------------------- entry point

def _status(results):
    code = 0
    for v in encode(results).values():
        if isinstance(v, dict):
            if v.get("holds") in INCONCLUSIVE or v.get("status") in INCONCLUSIVE:
                code = max(code, 2)
            if v.get("status") == "hypothesis-violation":
                code = max(code, 1)
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="conekit", description="Exact tangent/normal cone calculus for countable systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("--instance", required=True, help="instance JSON file or registry entry name")
        sp.add_argument("--truncate", type=int, default=None, metavar="K", help="truncation level")
        sp.add_argument("--tol", type=float, default=None, metavar="T", help="tolerance for sampled checks")
        sp.add_argument("--seed", type=int, default=0, metavar="S", help="seed for sampled oracles")
        fmt = sp.add_mutually_exclusive_group()
        fmt.add_argument("--json", dest="fmt", action="store_const", const="json", default="json")
        fmt.add_argument("--text", dest="fmt", action="store_const", const="text")
        sp.add_argument("--timing", action="store_true", help="include wall-clock timing (not deterministic)")

    sp = sub.add_parser("cone", help="tangent or normal cone of a set at a point")
    common(sp)
    sp.add_argument("--set")
    sp.add_argument("--point")
    sp.add_argument("--which", choices=("tangent", "frechet", "limiting"), default="tangent")

    sp = sub.add_parser("chip", help="conical hull intersection property of a family")
    common(sp)
    sp.add_argument("--family")
    sp.add_argument("--point")

    sp = sub.add_parser("qualify", help="qualification and closedness conditions")
    common(sp)
    sp.add_argument("--family")
    sp.add_argument("--point")
    sp.add_argument("--conditions", help="comma list from: " + ",".join(CONDITIONS))
    sp.add_argument("--objective", help="objective atom for cqc")

    sp = sub.add_parser("certify", help="optimality conditions of a semi-infinite program")
    common(sp)
    sp.add_argument("--problem")
    sp.add_argument("--point")
    sp.add_argument("--mode", choices=("upper", "lower"))
    sp.add_argument("--assume", help="comma list of hypotheses to take as given")

    sp = sub.add_parser("extremal", help="extremal principle certificate for a cone system")
    common(sp)
    sp.add_argument("--cones")
    sp.add_argument("--family")
    sp.add_argument("--point")
    sp.add_argument("--bound", type=Fraction, default=Fraction(2), help="bound on shift norms")
    sp.add_argument("--allow-overlap", action="store_true")

    sp = sub.add_parser("pareto", help="multiobjective minimality and necessary conditions")
    common(sp)
    sp.add_argument("--problem")
    sp.add_argument("--point")

    sp = sub.add_parser("registry", help="built-in worked instances")
    sp.add_argument("action", choices=("list", "show", "run-all"))
    sp.add_argument("name", nargs="?")
    common(sp, instance=False)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.command == "registry":
            results, code = cmd_registry(args)
            inst_name = "registry"
        else:
            inst = _instance(args.instance)
            results = COMMANDS[args.command](inst, args)
            code = _status(results)
            inst_name = inst.name or args.instance
    except (OSError, InstanceError, CommandError, KeyError, sa.Unsupported, vc.DomainError, eg.MalformedInput) as exc:
        print(f"conekit: error: {exc}", file=sys.stderr)
        return 1
    timing = {"seconds": time.perf_counter() - t0} if args.timing else None
    rep = make_report(args.command, inst_name, results, timing)
    sys.stdout.write(dumps(rep) if args.fmt == "json" else to_text(rep))
    return code


if __name__ == "__main__":
    sys.exit(main())
