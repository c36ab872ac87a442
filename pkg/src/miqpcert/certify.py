"""Parametric certification of branch and bound.

Walks every branch-and-bound path the online solver can take anywhere on
the parameter set, splitting the set wherever a relaxation's behavior
changes, and returns a polyhedral partition whose regions carry a
worst-case complexity number valid at every contained parameter.

The engine keeps a work list of tuples, each holding a region, the
complexity accumulated so far on it, its own copy of the remaining search
tree, and its own collection of quadratic upper bounds. Tuples are
independent of each other, so they can be processed in any order or
concurrently; the finished partition is canonically sorted.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bnb import node_path, solve_miqp
from .bounds import BoundCollection, QuadraticFunc, any_dominates
from .errors import NodeBudgetExceeded, NotCovered, ParseError
from .geometry import MEMBERSHIP_TOL, Polyhedron, grid
from .mpqp import AffineMap, qpcert
from .problem import (_fmt, _fmt_matrix, _fmt_vector, _parse_float,
                      _parse_matrix, _parse_vector, _require)

MEASURES = ("iterations", "nodes")


def _check_measure(measure):
    if measure not in MEASURES:
        raise ValueError(f"measure must be one of {MEASURES}, got {measure!r}")


@dataclass(frozen=True)
class IncumbentHit:
    """An integer-feasible solution recorded along a certification path."""

    objective: QuadraticFunc
    x: AffineMap
    node: str


@dataclass(frozen=True)
class CertTuple:
    """One work-list entry: a region with its own remaining tree and
    bound collection, plus both complexity counters accumulated so far."""

    region: Polyhedron
    iterations: int
    nodes: int
    tree: tuple
    bounds: BoundCollection
    hits: tuple
    path_id: str


@dataclass(frozen=True)
class CertRegion:
    """One finished region of the partition.

    Either complexity counter may be None on partitions read back from a
    file, which stores the counter of one measure only.
    """

    region: Polyhedron
    kappa_iterations: int | None
    kappa_nodes: int | None
    path_id: str
    incumbents: tuple = ()

    def kappa_for(self, measure):
        _check_measure(measure)
        value = (self.kappa_iterations if measure == "iterations"
                 else self.kappa_nodes)
        if value is None:
            raise ValueError(f"region carries no {measure} counter")
        return value

    def replay(self, theta):
        """(objective, x) the online solver ends with at theta, rebuilt
        from this region's incumbent sequence. When two incumbents tie at
        theta, which minimizer is returned is decided by arithmetic noise,
        so only the objective is meaningful there."""
        best = np.inf
        x = None
        for hit in self.incumbents:
            val = hit.objective.value(theta)
            if val < best:
                best = val
                x = hit.x.at(theta)
        return best, x


class CertPartition:
    """Polyhedral partition of the parameter set with per-region
    worst-case complexity under a fixed measure."""

    def __init__(self, regions, measure, n_theta, t_cert_seconds=0.0):
        _check_measure(measure)
        self.regions = sorted(regions, key=lambda r: r.path_id)
        self.measure = measure
        self.n_theta = int(n_theta)
        self.t_cert_seconds = float(t_cert_seconds)

    @property
    def region_count(self):
        return len(self.regions)

    @property
    def kappa_max(self):
        return max(r.kappa_for(self.measure) for r in self.regions)

    def as_measure(self, measure):
        """Same partition viewed under the other complexity measure."""
        _check_measure(measure)
        for r in self.regions:
            r.kappa_for(measure)
        return CertPartition(self.regions, measure, self.n_theta,
                             self.t_cert_seconds)

    def lookup(self, theta, tol=MEMBERSHIP_TOL):
        """Certified bound at theta: the max over containing regions, so
        shared boundaries resolve conservatively."""
        theta = np.asarray(theta, dtype=float)
        best = None
        for r in self.regions:
            if r.region.contains(theta, tol=tol):
                k = r.kappa_for(self.measure)
                if best is None or k > best:
                    best = k
        if best is None:
            raise NotCovered(f"no region contains theta={theta.tolist()}")
        return best

    def lookup_many(self, thetas, tol=MEMBERSHIP_TOL):
        thetas = np.asarray(thetas, dtype=float)
        out = np.full(thetas.shape[0], -1, dtype=int)
        for r in self.regions:
            mask = r.region.contains_many(thetas, tol=tol)
            out[mask] = np.maximum(out[mask], r.kappa_for(self.measure))
        missing = np.flatnonzero(out < 0)
        if missing.size:
            raise NotCovered(
                f"no region contains theta={thetas[missing[0]].tolist()}"
            )
        return out


def update_tree(tree, region, active_set, objective, bounds, rel):
    """One certification step for a single leaf of a relaxation.

    Returns (tree', bounds', cut_reason) where cut_reason is "dominated"
    (covers infeasible leaves), "integer", or None when the node branches.
    The inputs are never mutated; each leaf gets fresh copies.
    """
    tree = list(tree)
    bounds = bounds.copy()
    if any_dominates(objective, bounds, region):
        return tuple(tree), bounds, "dominated"
    if rel.assemble().binaries_resolved(active_set):
        bounds.add(objective)
        return tuple(tree), bounds, "integer"
    k = rel.free_binaries[0]
    tree.append(rel.child(k, 1))
    tree.append(rel.child(k, 0))
    return tuple(tree), bounds, None


def _expand(tup, cap, intern, audit):
    """Process one work-list tuple: certify its next relaxation and build
    the child tuple for every leaf."""
    tree = list(tup.tree)
    rel = tree.pop()
    nodes = tup.nodes + 1
    if nodes > cap:
        raise NodeBudgetExceeded(
            f"more than {cap} relaxations on one path (path_id "
            f"{tup.path_id!r}); the search tree cannot be this deep"
        )
    tag = node_path(rel.b0, rel.b1)
    prefix = tup.path_id + "|" if tup.path_id else ""
    children = []
    for leaf in qpcert(rel, tup.region, audit=audit):
        sub_tree, sub_bounds, reason = update_tree(
            tree, leaf.region, leaf.active_set, leaf.objective,
            tup.bounds, rel,
        )
        hits = tup.hits
        if reason == "integer":
            hits = hits + (IncumbentHit(leaf.objective, leaf.x, tag),)
        children.append(CertTuple(
            region=leaf.region,
            iterations=tup.iterations + leaf.kappa,
            nodes=nodes,
            tree=tuple(intern(r) for r in sub_tree),
            bounds=sub_bounds,
            hits=hits,
            path_id=f"{prefix}{tag}:{leaf.path}",
        ))
    return children


def certify(problem, measure="iterations", workers=1, on_iteration=None,
            audit=False):
    """Certify the whole family over its parameter set.

    Returns a CertPartition under the requested measure; both counters are
    computed in the same pass, so as_measure is free afterwards. workers>1
    processes independent tuples in thread waves with identical output.
    on_iteration, when given, is called as on_iteration(i, work, finished)
    before each engine step with the current work list and finished
    regions; their regions jointly cover the parameter set at all times.
    """
    _check_measure(measure)
    start = time.perf_counter()
    cap = 2 ** (problem.n_b + 1) - 1
    interned = {}

    def intern(rel):
        return interned.setdefault((rel.b0, rel.b1), rel)

    root = intern(problem.root_relaxation())
    stack = [CertTuple(problem.theta0, 0, 0, (root,), BoundCollection(),
                       (), "")]
    final = []
    iteration = 0

    def finish(tup):
        final.append(CertRegion(tup.region, tup.iterations, tup.nodes,
                                tup.path_id, tup.hits))

    if workers <= 1:
        while stack:
            iteration += 1
            if on_iteration is not None:
                on_iteration(iteration, tuple(stack), tuple(final))
            tup = stack.pop()
            if not tup.tree:
                finish(tup)
                continue
            stack.extend(_expand(tup, cap, intern, audit))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            while stack:
                iteration += 1
                if on_iteration is not None:
                    on_iteration(iteration, tuple(stack), tuple(final))
                pending = []
                for tup in stack:
                    if tup.tree:
                        pending.append(tup)
                    else:
                        finish(tup)
                stack = []
                for children in pool.map(
                        lambda t: _expand(t, cap, intern, audit), pending):
                    stack.extend(children)
    elapsed = time.perf_counter() - start
    return CertPartition(final, measure, problem.n_theta, elapsed)


def save_partition(partition, path):
    """Write a partition to a JSON file. Doubles are stored as decimal
    strings with 17 significant digits, so loading is bit-exact. Only the
    partition's own measure's counter is stored."""
    doc = {
        "measure": partition.measure,
        "n_theta": partition.n_theta,
        "summary": {
            "kappa_max": partition.kappa_max,
            "region_count": partition.region_count,
            "t_cert_seconds": _fmt(partition.t_cert_seconds),
        },
        "regions": [
            {
                "A": _fmt_matrix(r.region.A),
                "b": _fmt_vector(r.region.b),
                "kappa": int(r.kappa_for(partition.measure)),
                "path_id": r.path_id,
            }
            for r in partition.regions
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_partition(path):
    """Read a partition back; raises ParseError with the offending field."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    measure = _require(doc, "measure")
    if measure not in MEASURES:
        raise ParseError(f"field 'measure' must be one of {MEASURES}")
    n_theta = int(_require(doc, "n_theta"))
    recs = _require(doc, "regions")
    if not isinstance(recs, list) or not recs:
        raise ParseError("field 'regions' must be a non-empty list")
    regions = []
    for i, rec in enumerate(recs):
        if not isinstance(rec, dict):
            raise ParseError(f"region {i} must be an object")
        A = _parse_matrix(_require(rec, "A"), f"regions[{i}].A",
                          None, n_theta)
        b = _parse_vector(_require(rec, "b"), f"regions[{i}].b", A.shape[0])
        kappa = int(_parse_float(_require(rec, "kappa"),
                                 f"regions[{i}].kappa"))
        regions.append(CertRegion(
            region=Polyhedron(A, b),
            kappa_iterations=kappa if measure == "iterations" else None,
            kappa_nodes=kappa if measure == "nodes" else None,
            path_id=str(_require(rec, "path_id")),
        ))
    summary = doc.get("summary", {})
    t_cert = _parse_float(summary.get("t_cert_seconds", 0.0),
                          "summary.t_cert_seconds")
    return CertPartition(regions, measure, n_theta, t_cert)


@dataclass
class ValidationReport:
    """Certified bound vs online work at sampled parameters."""

    measure: str
    thetas: np.ndarray
    kappa_cert: np.ndarray
    kappa_online: np.ndarray

    @property
    def gap(self):
        return self.kappa_cert - self.kappa_online

    @property
    def min_gap(self):
        return int(self.gap.min())

    @property
    def max_gap(self):
        return int(self.gap.max())

    @property
    def equality_rate(self):
        return float(np.mean(self.gap == 0))


def validation_report(problem, partition, points_per_axis=10,
                      tol=MEMBERSHIP_TOL):
    """Compare the certified bound against online solves on a grid of the
    parameter set plus every region's center."""
    pts = grid(problem.theta0, points_per_axis)
    pts = pts[problem.theta0.contains_many(pts)]
    centers = np.array([r.region.chebyshev_center()[0]
                        for r in partition.regions])
    thetas = np.vstack([pts, centers])
    cert = partition.lookup_many(thetas, tol=tol)
    online = np.zeros(len(thetas), dtype=int)
    for i, theta in enumerate(thetas):
        out = solve_miqp(problem, theta)
        online[i] = out.iterations if partition.measure == "iterations" \
            else out.nodes
    return ValidationReport(partition.measure, thetas, cert, online)
