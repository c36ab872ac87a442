"""Dense linear algebra and linear programming kernels.

Everything downstream (polyhedral geometry, the active-set QP solver, the
certification engine) reduces to the routines here, so they are written for
determinism first: fixed pivot orders, explicit tolerances, no
environment-dependent branching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NotPositiveDefinite,
    NumericalFailure,
    RankDeficientWorkingSet,
)

CHOLESKY_MIN_PIVOT = 1e-12
KKT_MIN_PIVOT = 1e-10
JACOBI_OFFDIAG_TOL = 1e-12
LP_TOL = 1e-9

# Smallest tableau entry accepted as a ratio-test pivot.
_LP_PIVOT_TOL = 1e-11


def cholesky_factor(M, min_pivot=CHOLESKY_MIN_PIVOT):
    """Lower-triangular Cholesky factor of a symmetric matrix.

    Raises NotPositiveDefinite when a pivot falls to min_pivot or below.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        d = M[j, j] - L[j, :j] @ L[j, :j]
        if d <= min_pivot:
            raise NotPositiveDefinite(
                f"pivot {d:.3e} at column {j} is <= {min_pivot:g}"
            )
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1 :, j] = (M[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def cholesky_solve(L, rhs):
    """Solve (L L^T) x = rhs for a vector or matrix right-hand side."""
    n = L.shape[0]
    y = np.array(rhs, dtype=float)
    for i in range(n):
        if i:
            y[i] -= L[i, :i] @ y[:i]
        y[i] /= L[i, i]
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            y[i] -= L[i + 1 :, i] @ y[i + 1 :]
        y[i] /= L[i, i]
    return y


def solve_symmetric(M, rhs):
    """Solve M x = rhs for symmetric positive definite M."""
    return cholesky_solve(cholesky_factor(M), rhs)


def kkt_solve(H, A_ws, g, h, hfac=None):
    """Solve the equality-constrained stationarity system.

    Returns (x, lam) with H x + g + A_ws^T lam = 0 and A_ws x = h. H must be
    positive definite; A_ws must have full row rank (else
    RankDeficientWorkingSet). g and h may carry extra columns, in which case
    x and lam get the same column count (used for parameter-affine systems).
    An optional precomputed Cholesky factor of H avoids refactoring.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    if hfac is None:
        hfac = cholesky_factor(H)
    A_ws = np.asarray(A_ws, dtype=float)
    k = A_ws.shape[0]
    if k == 0:
        x = -cholesky_solve(hfac, g)
        lam = np.zeros((0,) + g.shape[1:])
        return x, lam
    h = np.asarray(h, dtype=float)
    Y = cholesky_solve(hfac, A_ws.T)
    S = A_ws @ Y
    S = 0.5 * (S + S.T)
    try:
        sfac = cholesky_factor(S, min_pivot=KKT_MIN_PIVOT)
    except NotPositiveDefinite as exc:
        raise RankDeficientWorkingSet(str(exc)) from exc
    v = cholesky_solve(hfac, g)
    lam = cholesky_solve(sfac, -(h + A_ws @ v))
    x = -(v + Y @ lam)
    return x, lam


def min_eigenvalue(M):
    """Smallest eigenvalue of a symmetric matrix via cyclic Jacobi sweeps.

    Sweeps run until the off-diagonal Frobenius norm is at most
    JACOBI_OFFDIAG_TOL; always converges for symmetric input.
    """
    A = np.asarray(M, dtype=float)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0])
    A = A.copy()
    for _ in range(200):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= JACOBI_OFFDIAG_TOL:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= JACOBI_OFFDIAG_TOL / (4.0 * n * n):
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) if tau != 0 else 1.0
                t = t / (abs(tau) + np.sqrt(1.0 + tau * tau))
                cth = 1.0 / np.sqrt(1.0 + t * t)
                sth = t * cth
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = cth * colp - sth * colq
                A[:, q] = sth * colp + cth * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = cth * rowp - sth * rowq
                A[q, :] = sth * rowp + cth * rowq
    return float(np.min(np.diag(A)))


@dataclass
class LpResult:
    """Outcome of lp_solve: status is 'optimal', 'infeasible' or 'unbounded'."""

    status: str
    x: np.ndarray | None = None
    objective: float | None = None


def lp_solve(c, A, b):
    """Minimize c^T y subject to A y <= b over sign-free y.

    Two-phase tableau simplex with Bland's rule (lowest-index entering
    column; minimum-ratio ties broken by lowest basic-variable index), so it
    cannot cycle; a pivot budget of 10*(rows+cols)^2 guards against numerical
    stalls and raises NumericalFailure.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = c.shape[0]
    m = b.shape[0]
    if A.size == 0:
        A = A.reshape(m, n)
    budget = 10 * (m + n) ** 2

    # Equilibrate rows; mixed row magnitudes otherwise poison the pivots.
    # The scale includes the offset so no entry is ever amplified.
    row_scale = np.maximum(np.abs(A).max(axis=1, initial=0.0), np.abs(b))
    row_scale[row_scale <= 0.0] = 1.0
    A_s = A / row_scale[:, None]
    b_s = b / row_scale

    # Standard form: y = u - w with u, w >= 0, slack s >= 0 per row,
    # artificials for rows whose rhs had to be negated.
    n_struct = 2 * n + m
    rows = np.hstack([A_s, -A_s, np.eye(m)])
    rhs = b_s.copy()
    neg = rhs < 0
    rows[neg] *= -1.0
    rhs[neg] *= -1.0
    n_art = int(neg.sum())
    art_cols = np.zeros((m, n_art))
    basis = np.empty(m, dtype=int)
    k = 0
    for i in range(m):
        if neg[i]:
            art_cols[i, k] = 1.0
            basis[i] = n_struct + k
            k += 1
        else:
            basis[i] = 2 * n + i
    ncols = n_struct + n_art
    full0 = np.empty((m, ncols + 1))
    full0[:, :n_struct] = rows
    full0[:, n_struct:ncols] = art_cols
    full0[:, ncols] = rhs
    M0 = full0[:, :ncols]
    rhs0 = rhs.copy()
    row_keep = np.arange(m)
    T = full0.copy()

    pivots = [0]
    refreshed_at = [0]

    def refactor():
        """Rebuild the tableau from original data at the current basis.

        Pivot updates accumulate roundoff multiplicatively; restarting from
        the basis inverse keeps the error at one solve's worth.
        """
        refreshed_at[0] = pivots[0]
        Bm = M0[row_keep][:, basis]
        try:
            sol = np.linalg.solve(Bm, full0[row_keep])
        except np.linalg.LinAlgError:
            return
        if sol[:, -1].min(initial=0.0) < -1e-6:
            raise NumericalFailure("simplex basis lost primal feasibility")
        np.clip(sol[:, -1], 0.0, None, out=sol[:, -1])
        T[:, :] = sol

    def run(cost, allowed_cols):
        # Leaving row: largest pivot among near-minimal ratios, which keeps
        # the updates well conditioned; after a long stall without progress
        # fall back to Bland's rule, which cannot cycle.
        bland = False
        stall = 0
        last_obj = None
        while True:
            z = cost - cost[basis] @ T[:, :-1]
            ent_candidates = np.nonzero(z[:allowed_cols] < -LP_TOL)[0]
            if ent_candidates.size == 0:
                return "optimal"
            ent = int(ent_candidates[0])
            col = T[:, ent]
            pos = np.nonzero(col > _LP_PIVOT_TOL)[0]
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / col[pos]
            rmin = ratios.min()
            if bland:
                ties = pos[ratios <= rmin]
            else:
                # Any row whose ratio keeps every rhs above -LP_TOL is an
                # acceptable exit; among those prefer large pivots.
                t_max = np.min((T[pos, -1] + LP_TOL) / col[pos])
                near = pos[ratios <= t_max]
                ties = near[col[near] >= 0.5 * col[near].max()]
            prow = int(ties[np.argmin(basis[ties])])
            piv = T[prow, ent]
            T[prow] = T[prow] / piv
            colv = T[:, ent].copy()
            colv[prow] = 0.0
            T[:, :] -= np.outer(colv, T[prow])
            basis[prow] = ent
            pivots[0] += 1
            if pivots[0] > budget:
                raise NumericalFailure(
                    f"simplex exceeded pivot budget {budget}"
                )
            if pivots[0] - refreshed_at[0] >= 16:
                refactor()
            obj = float(cost[basis] @ T[:, -1])
            if last_obj is None or obj < last_obj - LP_TOL:
                stall = 0
                bland = False
            else:
                stall += 1
                if stall > 2 * (T.shape[0] + ncols):
                    bland = True
            last_obj = obj

    if n_art:
        cost1 = np.zeros(ncols)
        cost1[n_struct:] = 1.0
        status = run(cost1, ncols)
        if status != "optimal":
            raise NumericalFailure("phase-1 simplex reported unbounded")
        phase1_obj = float(cost1[basis] @ T[:, -1])
        if phase1_obj > LP_TOL:
            return LpResult("infeasible")
        # Drive leftover artificials out of the basis; a row that offers no
        # structural pivot is redundant and is removed.
        drop = []
        moved = 0
        for i in range(m):
            if basis[i] >= n_struct:
                if np.max(np.abs(T[i, :n_struct])) <= 1e-9:
                    drop.append(i)
                    continue
                ent = int(np.argmax(np.abs(T[i, :n_struct])))
                piv = T[i, ent]
                T[i] = T[i] / piv
                colv = T[:, ent].copy()
                colv[i] = 0.0
                T -= np.outer(colv, T[i])
                basis[i] = ent
                moved += 1
        if drop:
            keep = np.setdiff1d(np.arange(T.shape[0]), drop)
            T = T[keep]
            basis = basis[keep]
            row_keep = row_keep[keep]
        if drop or moved or pivots[0] - refreshed_at[0] >= 16:
            refactor()

    cost2 = np.zeros(ncols)
    cost2[:n] = c
    cost2[n : 2 * n] = -c
    status = run(cost2, n_struct)
    if status == "unbounded":
        return LpResult("unbounded")
    full = np.zeros(ncols)
    full[basis] = T[:, -1]
    y = full[:n] - full[n : 2 * n]

    def residual(point):
        if not m:
            return 0.0
        return float(np.max((A @ point - b) / row_scale))

    res_y = residual(y)
    # Re-solve the final basic system from original data when the tableau's
    # values show drift accumulated over the pivot path.
    if basis.size and res_y > LP_TOL:
        try:
            refreshed = np.linalg.solve(M0[row_keep][:, basis],
                                        rhs0[row_keep])
        except np.linalg.LinAlgError:
            refreshed = None
        if refreshed is not None and np.all(refreshed > -1e-6):
            alt = np.zeros(ncols)
            alt[basis] = refreshed
            y_alt = alt[:n] - alt[n : 2 * n]
            res_alt = residual(y_alt)
            if res_alt < res_y:
                y, res_y = y_alt, res_alt
    if res_y > 1e-7:
        raise NumericalFailure("simplex solution violates constraints")
    return LpResult("optimal", y, float(c @ y))
