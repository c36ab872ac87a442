"""Polyhedral sets in halfspace form and the operations the certification
engine needs: emptiness, Chebyshev centers, redundancy removal, bounding
boxes, membership and deterministic grids.

Regions are closed; all splits elsewhere in the package use non-strict
inequalities, so neighbouring regions share boundaries of measure zero.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyRegion, NumericalFailure, UnboundedRegion
from .linalg import lp_solve

MEMBERSHIP_TOL = 1e-9
REDUNDANCY_TOL = 1e-9
ZERO_ROW_TOL = 1e-12


class Polyhedron:
    """The set {theta : A theta <= b}. Treated as immutable: operations
    return new instances, which lets emptiness/center/box results be cached.
    """

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError("row count mismatch between A and b")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("polyhedron data must be finite")
        self.A = A
        self.b = b
        self._empty = None
        self._cheb = None
        self._bbox = None
        self._outer = None
        self._witness = None

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def nrows(self):
        return self.A.shape[0]

    def __repr__(self):
        return f"Polyhedron({self.nrows} rows, dim {self.dim})"

    @classmethod
    def box(cls, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        d = lower.shape[0]
        A = np.vstack([np.eye(d), -np.eye(d)])
        b = np.concatenate([upper, -lower])
        out = cls(A, b)
        if np.all(lower <= upper):
            out._bbox = (lower.copy(), upper.copy())
        return out

    @classmethod
    def empty(cls, dim):
        """A canonical empty set with unit rows."""
        a = np.zeros(dim)
        a[0] = 1.0
        return cls(np.vstack([a, -a]), np.array([-1.0, -1.0]))

    def with_rows(self, A_new, b_new):
        """Intersection with additional halfspaces.

        Rows with a (numerically) zero normal are resolved immediately: a
        nonnegative offset is vacuous and dropped, a negative one makes the
        result empty.
        """
        A_new = np.atleast_2d(np.asarray(A_new, dtype=float))
        b_new = np.atleast_1d(np.asarray(b_new, dtype=float))
        keep = []
        for i in range(A_new.shape[0]):
            if np.max(np.abs(A_new[i])) <= ZERO_ROW_TOL:
                if b_new[i] < 0.0:
                    return Polyhedron.empty(self.dim)
                continue
            keep.append(i)
        if not keep:
            return self
        out = Polyhedron(
            np.vstack([self.A, A_new[keep]]),
            np.concatenate([self.b, b_new[keep]]),
        )._inherit_outer(self)
        if self._witness is not None:
            out._witness = np.vstack([
                self._witness, np.full((len(keep), self.dim), np.nan),
            ])
        return out

    def with_halfspace(self, a, beta):
        return self.with_rows(np.asarray(a, dtype=float)[None, :], [beta])

    def normalize(self):
        """Copy with every row scaled to unit Euclidean norm. Vacuous
        zero rows are dropped; an infeasible zero row yields the canonical
        empty set."""
        norms = np.linalg.norm(self.A, axis=1)
        keep = norms > ZERO_ROW_TOL
        if not keep.all():
            if np.any(self.b[~keep] < 0.0):
                return Polyhedron.empty(self.dim)
        A = self.A[keep]
        b = self.b[keep]
        norms = norms[keep]
        if A.shape[0] == 0:
            return Polyhedron(np.zeros((0, self.dim)), np.zeros(0))
        return Polyhedron(A / norms[:, None], b / norms)._inherit_outer(self)

    def is_empty(self):
        """Emptiness decided by a phase-1 LP."""
        if self._empty is None:
            res = lp_solve(np.zeros(self.dim), self.A, self.b)
            self._empty = res.status == "infeasible"
        return self._empty

    def chebyshev_center(self):
        """Center and radius of a largest inscribed ball.

        Raises EmptyRegion when the set is empty and UnboundedRegion when
        the inscribed radius grows without bound.
        """
        if self._cheb is None:
            P = self.normalize()
            if P.nrows == 0:
                raise UnboundedRegion("no constraints: radius unbounded")
            d = self.dim
            A_lp = np.hstack([P.A, np.ones((P.nrows, 1))])
            c = np.zeros(d + 1)
            c[d] = -1.0
            res = lp_solve(c, A_lp, P.b)
            if res.status == "unbounded":
                raise UnboundedRegion("inscribed radius unbounded")
            if res.status != "optimal":
                raise EmptyRegion("chebyshev LP infeasible")
            radius = res.x[d]
            if radius < -MEMBERSHIP_TOL:
                self._empty = True
                raise EmptyRegion(f"negative inscribed radius {radius:.3e}")
            self._empty = False
            self._cheb = (res.x[:d].copy(), max(float(radius), 0.0))
        return self._cheb

    def reduce(self):
        """Copy without redundant rows.

        Exact duplicates (after normalization) keep their tightest offset;
        every surviving row is then LP-tested: the row is re-added with its
        offset relaxed by 1 so the test LP stays bounded, and the row is
        dropped when its maximum over the others stays within
        REDUNDANCY_TOL of the offset.
        """
        if self.is_empty():
            raise EmptyRegion("reduce needs a nonempty polyhedron")
        norms = np.linalg.norm(self.A, axis=1)
        # zero rows on a nonempty set are vacuous and disappear
        keep = np.nonzero(norms > ZERO_ROW_TOL)[0]
        An = self.A[keep] / norms[keep, None]
        bn = self.b[keep] / norms[keep]
        seen = {}
        order = []
        for pos in range(len(keep)):
            key = tuple(np.round(An[pos], 12))
            if key in seen:
                prev = seen[key]
                if bn[pos] < bn[prev[0]]:
                    seen[key] = (pos, keep[pos])
            else:
                seen[key] = (pos, keep[pos])
                order.append(key)
        idx = [seen[key][0] for key in order]
        A = An[idx]
        b = bn[idx]
        rows_orig = [keep[i] for i in idx]
        alive = list(range(A.shape[0]))
        # A maximizer that proved a row irredundant earlier is still a
        # proof while it satisfies every other current row; those rows
        # skip their LP.
        witness = np.full((A.shape[0], self.dim), np.nan)
        if self._witness is not None:
            for i in alive:
                witness[i] = self._witness[rows_orig[i]]
        for i in list(alive):
            others = [j for j in alive if j != i]
            w = witness[i]
            if (np.isfinite(w).all()
                    and float(A[i] @ w) > b[i] + REDUNDANCY_TOL
                    and bool(np.all(A[others] @ w <= b[others] + 1e-12))):
                continue
            A_test = np.vstack([A[others], A[i][None, :]])
            b_test = np.concatenate([b[others], [b[i] + 1.0]])
            try:
                res = lp_solve(-A[i], A_test, b_test)
            except NumericalFailure:
                # Nearly dependent rows can defeat the test LP. Keeping
                # the row never changes the set, so keep it.
                witness[i] = np.nan
                continue
            if res.status == "optimal" and -res.objective <= b[i] + REDUNDANCY_TOL:
                alive.remove(i)
                witness[i] = np.nan
            else:
                witness[i] = res.x if res.status == "optimal" else np.nan
        sel = [rows_orig[i] for i in alive]
        out = Polyhedron(self.A[sel], self.b[sel])._inherit_outer(self)
        out._witness = witness[alive]
        # Same set, so set-level caches carry over as they are.
        out._empty = False
        out._cheb = self._cheb
        if self._bbox is not None:
            out._bbox = self._bbox
        return out

    def bounding_box(self):
        """Componentwise (lower, upper) bounds, each by one LP."""
        if self._bbox is None:
            d = self.dim
            lower = np.zeros(d)
            upper = np.zeros(d)
            for j in range(d):
                c = np.zeros(d)
                c[j] = 1.0
                res = lp_solve(c, self.A, self.b)
                if res.status == "unbounded":
                    raise UnboundedRegion(f"coordinate {j} unbounded below")
                if res.status != "optimal":
                    raise EmptyRegion("bounding box of an empty set")
                lower[j] = res.objective
                res = lp_solve(-c, self.A, self.b)
                if res.status == "unbounded":
                    raise UnboundedRegion(f"coordinate {j} unbounded above")
                if res.status != "optimal":
                    raise EmptyRegion("bounding box of an empty set")
                upper[j] = -res.objective
            self._bbox = (lower, upper)
        return self._bbox

    def outer_box(self):
        """Some box containing the set: the exact bounding box when already
        known, else one inherited from a superset, else computed exactly.
        Cheap enclosure for prefilters that only need validity."""
        if self._bbox is not None:
            return self._bbox
        if self._outer is not None:
            return self._outer
        return self.bounding_box()

    def _inherit_outer(self, parent):
        self._outer = parent._bbox if parent._bbox is not None \
            else parent._outer
        return self

    def contains(self, theta, tol=MEMBERSHIP_TOL):
        theta = np.asarray(theta, dtype=float)
        if self.nrows == 0:
            return True
        return bool(np.all(self.A @ theta <= self.b + tol))

    def contains_many(self, thetas, tol=MEMBERSHIP_TOL):
        """Vectorized membership for an (N, dim) array of points."""
        thetas = np.asarray(thetas, dtype=float)
        if self.nrows == 0:
            return np.ones(thetas.shape[0], dtype=bool)
        return np.all(self.A @ thetas.T <= self.b[:, None] + tol, axis=0)


def grid(P, points_per_axis):
    """Deterministic inclusive grid over the bounding box of P, rows in
    lexicographic order. Degenerate axes collapse to a single value."""
    lower, upper = P.bounding_box()
    axes = [
        np.unique(np.linspace(lower[j], upper[j], points_per_axis))
        for j in range(P.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, P.dim)
