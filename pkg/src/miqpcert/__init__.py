"""Certified complexity bounds for parameterized mixed-integer QPs.

The library solves mixed-integer quadratic programs by branch and bound
on the binary variables, with a dual active-set method for the node
relaxations, and certifies offline how many solver iterations (or tree
nodes) that online procedure needs anywhere in a polyhedral parameter
set. The certificate is a partition of the set into regions, each
carrying a worst-case counter that the online solver provably never
exceeds.

Typical use:

    >>> from miqpcert import random_mpmiqp, solve_miqp, certify
    >>> family = random_mpmiqp(seed=11, n_c=2, n_b=2, m=4)
    >>> online = solve_miqp(family, [0.3, -0.4])
    >>> partition = certify(family)
    >>> partition.lookup([0.3, -0.4]) >= online.iterations
    True
"""

from .bnb import MiqpOutcome, NodeRecord, bruteforce_miqp, solve_miqp
from .bounds import (BoundCollection, QuadraticFunc, any_dominates,
                     convex_underestimator, dominates)
from .certify import (MEASURES, CertPartition, CertRegion, ValidationReport,
                      certify, load_partition, save_partition,
                      validation_report)
from .errors import (DegeneracyWarning, EmptyRegion, IterationCapExceeded,
                     MiqpcertError, NodeBudgetExceeded, NotCovered,
                     NotPositiveDefinite, NumericalFailure,
                     ParameterOutsideTheta0, ParseError,
                     RankDeficientWorkingSet, UnboundedRegion,
                     UnsupportedDimension)
from .geometry import Polyhedron, grid
from .mpqp import CertLeaf, leaves_containing, qpcert, value_function
from .problem import (AssembledQP, MiqpInstance, MpMIQP, Relaxation,
                      load_problem, random_mpmiqp, save_problem)
from .qp import KktResiduals, QpOutcome, kkt_residuals, solve_qp

__version__ = "1.0.0"

__all__ = [
    "AssembledQP",
    "BoundCollection",
    "CertLeaf",
    "CertPartition",
    "CertRegion",
    "DegeneracyWarning",
    "EmptyRegion",
    "IterationCapExceeded",
    "KktResiduals",
    "MEASURES",
    "MiqpInstance",
    "MiqpOutcome",
    "MiqpcertError",
    "MpMIQP",
    "NodeBudgetExceeded",
    "NodeRecord",
    "NotCovered",
    "NotPositiveDefinite",
    "NumericalFailure",
    "ParameterOutsideTheta0",
    "ParseError",
    "Polyhedron",
    "QpOutcome",
    "QuadraticFunc",
    "RankDeficientWorkingSet",
    "Relaxation",
    "UnboundedRegion",
    "UnsupportedDimension",
    "ValidationReport",
    "any_dominates",
    "bruteforce_miqp",
    "certify",
    "convex_underestimator",
    "dominates",
    "grid",
    "kkt_residuals",
    "leaves_containing",
    "load_partition",
    "load_problem",
    "qpcert",
    "random_mpmiqp",
    "save_partition",
    "save_problem",
    "solve_miqp",
    "solve_qp",
    "validation_report",
    "value_function",
]
