"""Exact tangent/normal cone calculus for countable systems of sets."""
from .exactgeom import ConeRep, ConvexPolyCone, MalformedInput, Polyhedron
from .families import ChipVerdict, chip_check
from .qualconds import QCVerdict, fmcq_check, ncc_check, nqc_check, scc_check, sqc_check
from .setalg import Atom, IndexedFamily, TruncationPolicy
from .varcalc import frechet_normal_cone, limiting_normal_cone, tangent_cone
from .certify import extremal_certificate, pareto_check, pareto_necessary_cond, sip_certify

__version__ = "0.1.0"

__all__ = [
    "Atom", "ChipVerdict", "ConeRep", "ConvexPolyCone", "IndexedFamily", "MalformedInput", "Polyhedron",
    "QCVerdict", "TruncationPolicy", "chip_check", "extremal_certificate", "fmcq_check", "frechet_normal_cone",
    "limiting_normal_cone", "ncc_check", "nqc_check", "pareto_check", "pareto_necessary_cond", "scc_check",
    "sip_certify", "sqc_check", "tangent_cone",
]
