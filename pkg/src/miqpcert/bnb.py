"""Branch-and-bound solver for one parameter value.

Depth-first search over binary fixings. Each node solves its relaxation
with the dual active-set method and its iteration count joins the running
total whether or not the node is cut, so the total measures all QP work
the solve performed.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import UnsupportedDimension
from .problem import Relaxation
from .qp import solve_qp


def node_path(b0, b1):
    """Canonical branch-decision string for a node's fixings.

    Branching always picks the lowest free binary, so decisions happen in
    ascending index order and the fixings determine the path uniquely.
    """
    tags = sorted([(int(i), 0) for i in b0] + [(int(i), 1) for i in b1])
    if not tags:
        return "root"
    return ",".join(f"{i}={v}" for i, v in tags)


@dataclass(frozen=True)
class NodeRecord:
    """One explored node: its fixings and what happened there."""

    fixed_zero: tuple
    fixed_one: tuple
    path: str
    status: str
    objective: float
    iterations: int
    action: str


@dataclass
class MiqpOutcome:
    """Result of a branch-and-bound solve.

    iterations is the total dual active-set iteration count over every
    node; nodes is how many relaxations were solved.
    """

    status: str
    x: np.ndarray | None
    objective: float
    iterations: int
    nodes: int
    records: list


def solve_miqp(problem, theta, dominance_cut=True):
    """Solve the instance at theta by branch and bound.

    Nodes are explored depth first, zero-fixing before one-fixing, always
    branching on the lowest-index free binary so the tree shape does not
    depend on theta. A node is cut when its relaxation is infeasible or
    (with dominance_cut, the default) when its bound is no better than the
    incumbent. Disabling dominance_cut forces every non-infeasible node to
    be expanded; the returned minimizer and objective do not change, only
    the work done.
    """
    theta = np.asarray(theta, dtype=float)
    best_obj = np.inf
    best_x = None
    total = 0
    records = []
    stack = [problem.root_relaxation()]
    while stack:
        rel = stack.pop()
        path = node_path(rel.b0, rel.b1)
        aqp = rel.assemble()
        out = solve_qp(aqp, theta)
        total += out.iterations
        if out.status == "infeasible":
            records.append(NodeRecord(rel.b0, rel.b1, path, out.status,
                                      np.inf, out.iterations, "cut"))
            continue
        obj = float(out.objective)
        if dominance_cut and obj >= best_obj:
            records.append(NodeRecord(rel.b0, rel.b1, path, out.status, obj,
                                      out.iterations, "cut"))
            continue
        if aqp.binaries_resolved(out.active_set):
            if obj < best_obj:
                best_obj = obj
                best_x = out.x.copy()
            records.append(NodeRecord(rel.b0, rel.b1, path, out.status, obj,
                                      out.iterations, "integer"))
            continue
        records.append(NodeRecord(rel.b0, rel.b1, path, out.status, obj,
                                  out.iterations, "branch"))
        k = rel.free_binaries[0]
        stack.append(rel.child(k, 1))
        stack.append(rel.child(k, 0))
    if best_x is None:
        return MiqpOutcome("infeasible", None, np.inf, total, len(records),
                           records)
    return MiqpOutcome("optimal", best_x, best_obj, total, len(records),
                       records)


def bruteforce_miqp(problem, theta, limit=16):
    """Reference solve by enumerating every binary assignment.

    Exponential in the number of binaries, so refused beyond limit. Ties
    between assignments go to the one enumerated first (ascending as a
    binary number, zeros first).
    """
    if problem.n_b > limit:
        raise UnsupportedDimension(
            f"{problem.n_b} binaries exceed the enumeration limit {limit}"
        )
    theta = np.asarray(theta, dtype=float)
    best_obj = np.inf
    best_x = None
    total = 0
    count = 0
    for bits in product((0, 1), repeat=problem.n_b):
        b0 = tuple(i for i, v in zip(problem.binary_indices, bits) if v == 0)
        b1 = tuple(i for i, v in zip(problem.binary_indices, bits) if v == 1)
        rel = Relaxation(problem, b0, b1)
        out = solve_qp(rel.assemble(), theta)
        total += out.iterations
        count += 1
        if out.status == "optimal" and float(out.objective) < best_obj:
            best_obj = float(out.objective)
            best_x = out.x.copy()
    if best_x is None:
        return MiqpOutcome("infeasible", None, np.inf, total, count, [])
    return MiqpOutcome("optimal", best_x, best_obj, total, count, [])
