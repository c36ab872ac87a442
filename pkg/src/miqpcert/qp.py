"""Dual active-set QP solver with deterministic tie-breaking.

The solve proceeds as a sequence of equality-constrained KKT solves, one per
working-set change, and reports how many it needed. That count is the
quantity the offline certification bounds, so every rule that influences it
(which violated row is tackled, which blocking row leaves, how ties break)
is fixed here and mirrored exactly by the parametric engine.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .errors import IterationCapExceeded
from .linalg import cholesky_factor, kkt_solve

# A point is primal feasible when every slack is above -PRIMAL_FEAS_TOL.
PRIMAL_FEAS_TOL = 1e-9
# Below this max-norm the primal direction counts as zero.
DIRECTION_ZERO_TOL = 1e-10
# A working multiplier only blocks when its decay rate exceeds this.
RATE_TOL = 1e-10
# Hard stop at ITERATION_CAP_FACTOR * (n + rows) KKT solves.
ITERATION_CAP_FACTOR = 10


@dataclass
class QpOutcome:
    """Result of one QP solve, with the audit trail of the run.

    iterations counts equality-constrained KKT solves: the initial one plus
    one per working-set change. Detecting infeasibility costs none. path
    records the event sequence with the same tokens the parametric engine
    uses, and dual_path holds the dual objective at the initial solve and at
    every working-set change, which the method keeps non-decreasing.
    """

    status: str
    x: np.ndarray | None
    lam: np.ndarray | None
    eq_multipliers: np.ndarray | None
    active_set: tuple
    objective: float
    iterations: int
    dual_path: tuple
    path: str
    theta: np.ndarray | None = None


def _objective(H, f, x):
    return float(0.5 * (x @ H @ x) + f @ x)


def solve_qp_arrays(H, f, G, g, Geq=None, geq=None, hfac=None):
    """Minimize 0.5 x'Hx + f'x subject to G x <= g and Geq x = geq.

    H must be positive definite. The equality rows stay in the working set
    for the whole run; the method starts from the KKT solve of those rows
    alone and then, one event at a time, either adds the chosen violated
    inequality or drops the working row whose multiplier would cross zero
    first. Every event triggers a fresh KKT solve of the new working set.
    """
    H = np.asarray(H, dtype=float)
    f = np.asarray(f, dtype=float)
    G = np.asarray(G, dtype=float)
    g = np.asarray(g, dtype=float)
    n = H.shape[0]
    G = G.reshape(-1, n)
    if Geq is None:
        Geq = np.zeros((0, n))
        geq = np.zeros(0)
    Geq = np.asarray(Geq, dtype=float).reshape(-1, n)
    geq = np.asarray(geq, dtype=float)
    if hfac is None:
        hfac = cholesky_factor(H)
    m = G.shape[0]
    n_eq = Geq.shape[0]
    cap = ITERATION_CAP_FACTOR * (n + m + n_eq)

    work = []  # sorted inequality row indices
    pending = None  # violated row being worked toward the set, if any
    tokens = []
    dual_path = []

    def fresh_solve():
        A_ws = np.vstack([Geq, G[work]])
        h = np.concatenate([geq, g[work]])
        x, mult = kkt_solve(H, A_ws, f, h, hfac=hfac)
        return x, mult[:n_eq], mult[n_eq:]

    x, eq_lam, lam_w = fresh_solve()
    kappa = 1
    dual_path.append(_objective(H, f, x))

    while True:
        if pending is None:
            # Most violated row not already in the working set; ties go to
            # the lowest index.
            slack = g - G @ x
            slack[work] = np.inf
            best = int(np.argmin(slack)) if m else -1
            if best < 0 or slack[best] >= -PRIMAL_FEAS_TOL:
                tokens.append("o")
                lam_full = np.zeros(m)
                lam_full[work] = lam_w
                return QpOutcome(
                    status="optimal", x=x, lam=lam_full,
                    eq_multipliers=eq_lam, active_set=tuple(work),
                    objective=_objective(H, f, x), iterations=kappa,
                    dual_path=tuple(dual_path), path=".".join(tokens),
                )
            pending = best
            tokens.append(f"v{pending:03d}")

        # Direction pair: H z + A_ws' r = c, A_ws z = 0, where c is the
        # pending row. Pushing the pending multiplier by t moves the primal
        # point by -t z and the working multipliers by -t r.
        c = G[pending]
        A_ws = np.vstack([Geq, G[work]])
        z, rates = kkt_solve(H, A_ws, -c, np.zeros(n_eq + len(work)),
                             hfac=hfac)
        r = rates[n_eq:]
        z_norm = float(np.max(np.abs(z))) if n else 0.0
        s_p = float(g[pending] - c @ x)
        if z_norm <= DIRECTION_ZERO_TOL and np.all(r <= RATE_TOL):
            # The dual ray is unbounded: no primal point can satisfy the
            # pending row together with the working set.
            tokens.append("f")
            return QpOutcome(
                status="infeasible", x=None, lam=None, eq_multipliers=None,
                active_set=tuple(work), objective=np.inf, iterations=kappa,
                dual_path=tuple(dual_path), path=".".join(tokens),
            )
        t_drop = np.inf
        j_drop = -1
        for pos, j in enumerate(work):
            if r[pos] > RATE_TOL:
                t = lam_w[pos] / r[pos]
                if t < t_drop:
                    t_drop, j_drop = t, j
        if z_norm > DIRECTION_ZERO_TOL:
            d = float(c @ z)
            t_add = -s_p / d if d > 0.0 else np.inf
        else:
            d = 0.0
            t_add = np.inf
        t_star = min(t_drop, t_add)
        dual_path.append(
            _objective(H, f, x) - t_star * s_p - 0.5 * t_star * t_star * d
        )
        if t_drop < t_add:
            work.remove(j_drop)
            tokens.append(f"d{j_drop:03d}")
        else:
            bisect.insort(work, pending)
            tokens.append("a")
            pending = None
        x, eq_lam, lam_w = fresh_solve()
        kappa += 1
        if kappa > cap:
            raise IterationCapExceeded(
                f"{kappa} KKT solves exceed the cap {cap}"
            )


def solve_qp(aqp, theta):
    """Solve one member of an assembled parametric QP."""
    theta = np.asarray(theta, dtype=float)
    out = solve_qp_arrays(
        aqp.H, aqp.f_of(theta), aqp.G, aqp.rhs_of(theta),
        aqp.Geq, aqp.geq, hfac=aqp.hessian_factor(),
    )
    out.theta = theta
    return out


@dataclass
class KktResiduals:
    """Worst-case violations of the optimality system at a reported point."""

    stationarity: float
    primal: float
    dual_min: float
    complementarity: float


def kkt_residuals(aqp, outcome):
    """Residuals of an optimal outcome against its QP's optimality system.

    dual_min is the most negative inequality multiplier, or 0.0 when the
    problem has no inequality rows.
    """
    if outcome.status != "optimal":
        raise ValueError("residuals are defined for optimal outcomes only")
    theta = outcome.theta
    f = aqp.f_of(theta)
    rhs = aqp.rhs_of(theta)
    x = outcome.x
    grad = aqp.H @ x + f + aqp.G.T @ outcome.lam
    if aqp.n_eq:
        grad = grad + aqp.Geq.T @ outcome.eq_multipliers
    slack = rhs - aqp.G @ x
    primal = 0.0
    if slack.size:
        primal = max(primal, float(np.max(-slack)))
    if aqp.n_eq:
        primal = max(primal, float(np.max(np.abs(aqp.Geq @ x - aqp.geq))))
    dual_min = float(np.min(outcome.lam)) if slack.size else 0.0
    comp = float(np.max(np.abs(outcome.lam * slack))) if slack.size else 0.0
    return KktResiduals(
        stationarity=float(np.max(np.abs(grad))),
        primal=primal,
        dual_min=dual_min,
        complementarity=comp,
    )
