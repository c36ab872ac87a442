"""Quadratic functions of the parameter and dominance tests between them.

Certification keeps, per explored region, a collection of quadratic upper
bounds on the optimal value. A candidate node can be discarded over a region
when its own value function dominates (sits above) one of those bounds
everywhere on the region. That comparison is a nonconvex feasibility
question, so it is answered one-sidedly: True only with a certificate, False
whenever no certificate was found.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (EmptyRegion, IterationCapExceeded, NumericalFailure,
                     RankDeficientWorkingSet)
from .linalg import min_eigenvalue
from .qp import solve_qp_arrays

# A dominance certificate tolerates dips no deeper than this.
DOMINANCE_TOL = 1e-9
# Convexification margin added on top of the needed curvature shift.
ALPHA_MARGIN = 1e-8
# Bisection depth limit for the certificate search.
MAX_BISECT_DEPTH = 10


@dataclass
class QuadraticFunc:
    """value(theta) = 0.5 theta'Q theta + q'theta + c, or +infinity."""

    Q: np.ndarray
    q: np.ndarray
    c: float
    infinite: bool = False

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.Q = 0.5 * (self.Q + self.Q.T)
        self.q = np.asarray(self.q, dtype=float)
        self.c = float(self.c)

    @classmethod
    def constant(cls, value, dim):
        return cls(np.zeros((dim, dim)), np.zeros(dim), value)

    @classmethod
    def infinity(cls, dim):
        return cls(np.zeros((dim, dim)), np.zeros(dim), 0.0, infinite=True)

    @property
    def dim(self):
        return self.q.shape[0]

    def value(self, theta):
        if self.infinite:
            return np.inf
        theta = np.asarray(theta, dtype=float)
        return float(0.5 * (theta @ self.Q @ theta) + self.q @ theta + self.c)

    def value_many(self, thetas):
        if self.infinite:
            return np.full(len(thetas), np.inf)
        thetas = np.asarray(thetas, dtype=float)
        quad = 0.5 * np.einsum("ij,jk,ik->i", thetas, self.Q, thetas)
        return quad + thetas @ self.q + self.c

    def minus(self, other):
        if self.infinite or other.infinite:
            raise ValueError("difference of infinite functions is undefined")
        return QuadraticFunc(self.Q - other.Q, self.q - other.q,
                             self.c - other.c)


class BoundCollection:
    """Insertion-ordered list of finite quadratic upper bounds."""

    def __init__(self, items=()):
        self._items = []
        for f in items:
            self.add(f)

    def add(self, func):
        if func.infinite:
            raise ValueError("bound collections hold finite functions only")
        self._items.append(func)

    def copy(self):
        out = BoundCollection()
        out._items = list(self._items)
        return out

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __getitem__(self, i):
        return self._items[i]


def convex_underestimator(func, lower, upper):
    """Convex quadratic below func on the box [lower, upper].

    Adds alpha * sum_i (theta_i - l_i)(theta_i - u_i), which is nonpositive
    on the box, with alpha just large enough to make the result convex.
    Returns (Q, q, c, alpha) of the shifted quadratic.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    lam = min_eigenvalue(func.Q)
    alpha = max(0.0, -lam) / 2.0 + ALPHA_MARGIN
    Q = func.Q + 2.0 * alpha * np.eye(func.dim)
    q = func.q - alpha * (lower + upper)
    c = func.c + alpha * float(lower @ upper)
    return Q, q, c, alpha


def _pulled_corners(region, center, lower, upper):
    """Box corners moved just inside the region along the ray to center."""
    dim = lower.shape[0]
    if dim > 8:
        return []
    pts = []
    for mask in range(1 << dim):
        v = np.where([(mask >> i) & 1 for i in range(dim)], upper, lower)
        viol = region.A @ v - region.b
        if np.max(viol, initial=-np.inf) <= 0.0:
            pts.append(v)
            continue
        d = center - v
        denom = -region.A @ d
        t = 0.0
        for k in range(region.nrows):
            if viol[k] > 0.0 and denom[k] > 0.0:
                t = max(t, viol[k] / denom[k])
        t = min(t, 1.0)
        pts.append(v + t * d)
    return pts


def _nonnegative_on(func, region, alpha, depth, lower, upper):
    try:
        center, _ = region.chebyshev_center()
    except EmptyRegion:
        return True
    # Cheap disproof: sample the center and the pulled-in box corners.
    points = [center] + _pulled_corners(region, center, lower, upper)
    for pt in points:
        if func.value(pt) < -DOMINANCE_TOL:
            return False
    # Certificate attempt: minimize the convex underestimator exactly. A
    # degenerate region can defeat the active-set method; that only means
    # no certificate at this level, so fall through to bisection.
    Q = func.Q + 2.0 * alpha * np.eye(func.dim)
    q = func.q - alpha * (lower + upper)
    const = func.c + alpha * float(lower @ upper)
    try:
        out = solve_qp_arrays(Q, q, region.A, region.b)
    except (RankDeficientWorkingSet, NumericalFailure, IterationCapExceeded):
        out = None
    if out is not None:
        if out.status == "infeasible":
            return True
        if out.objective + const >= -DOMINANCE_TOL:
            return True
    if depth >= MAX_BISECT_DEPTH:
        return False
    # Bisect the longest box edge; ties go to the lowest axis. The halves'
    # boxes follow from clipping, no new bounding boxes needed.
    widths = upper - lower
    k = int(np.argmax(widths))
    mid = 0.5 * (lower[k] + upper[k])
    e = np.zeros(func.dim)
    e[k] = 1.0
    up_lo = upper.copy()
    up_lo[k] = mid
    lo_hi = lower.copy()
    lo_hi[k] = mid
    return (_nonnegative_on(func, region.with_halfspace(e, mid),
                            alpha, depth + 1, lower, up_lo)
            and _nonnegative_on(func, region.with_halfspace(-e, -mid),
                                alpha, depth + 1, lo_hi, upper))


def dominates(j_node, j_bar, region):
    """True when j_node >= j_bar is certified everywhere on the region.

    One-sided: True comes with a certificate that the difference never dips
    below -DOMINANCE_TOL on the region; False just means no certificate was
    found, not that the inequality fails.
    """
    if j_node.infinite:
        return True
    if j_bar.infinite:
        return False
    gap = j_node.minus(j_bar)
    lam = min_eigenvalue(gap.Q)
    alpha = max(0.0, -lam) / 2.0 + ALPHA_MARGIN
    try:
        lower, upper = region.outer_box()
    except EmptyRegion:
        return True
    return _nonnegative_on(gap, region, alpha, 0, lower, upper)


def any_dominates(j_node, bounds, region):
    """First-match scan of the collection in insertion order."""
    if j_node.infinite:
        return True
    for j_bar in bounds:
        if dominates(j_node, j_bar, region):
            return True
    return False
