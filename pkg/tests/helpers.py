"""Shared test oracles, all independent of the package's own solvers."""

from itertools import combinations

import numpy as np


def charpoly_coefficients(M):
    """Characteristic polynomial coefficients by the Faddeev-LeVerrier
    recurrence (trace-based, no eigenvalue routine involved)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    Mk = np.eye(n)
    for k in range(1, n + 1):
        Mk = M @ Mk
        ck = -np.trace(Mk) / k
        coeffs[k] = ck
        Mk = Mk + ck * np.eye(n)
    return coeffs


def min_eigenvalue_oracle(M):
    """Smallest eigenvalue via companion-matrix roots of the characteristic
    polynomial; a route independent of Jacobi sweeps."""
    roots = np.roots(charpoly_coefficients(M))
    return float(np.min(roots.real))


def lp_vertex_oracle(c, A, b, tol=1e-9):
    """Minimum of c^T x over {A x <= b} by enumerating all basic points.

    Only valid for bounded feasible regions with at least one vertex (the
    generators below guarantee that). Returns None when no vertex is
    feasible.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, d = A.shape
    subsets = np.array(list(combinations(range(m), d)))
    mats = A[subsets]
    rhss = b[subsets]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-10
    verts = np.full((len(subsets), d), np.nan)
    if ok.any():
        verts[ok] = np.linalg.solve(mats[ok], rhss[ok][:, :, None])[:, :, 0]
    feas = ok & (A @ verts.T <= b[:, None] + tol).all(axis=0)
    if not feas.any():
        return None
    return float((verts[feas] @ c).min())


def random_bounded_lp(rng):
    """Random feasible bounded LP with <= 8 rows and <= 3 sign-free vars."""
    d = int(rng.integers(1, 4))
    k = int(rng.integers(1, 9 - 2 * d))
    A_extra = rng.standard_normal((k, d))
    x0 = rng.uniform(-0.5, 0.5, d)
    b_extra = A_extra @ x0 + rng.uniform(0.1, 1.0, k)
    A = np.vstack([A_extra, np.eye(d), -np.eye(d)])
    b = np.concatenate([b_extra, np.full(2 * d, 2.0)])
    c = rng.standard_normal(d)
    return c, A, b


def _batch_solve(mats, rhss):
    """Solve a stack of square systems, returning NaN rows for singular
    members instead of failing the whole batch."""
    try:
        return np.linalg.solve(mats, rhss[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        out = np.full(rhss.shape, np.nan)
        for i in range(mats.shape[0]):
            try:
                out[i] = np.linalg.solve(mats[i], rhss[i])
            except np.linalg.LinAlgError:
                pass
        return out


def enumerate_qp_optimum(H, g, G, h, Geq=None, heq=None, feas_tol=1e-7,
                         dual_tol=1e-8):
    """Global optimum of a strictly convex inequality QP by exhausting
    working sets.

    Solves the stationarity system of every subset of inequality rows (plus
    all equality rows) with plain numpy, keeps candidates that genuinely
    solve their system and are primal feasible with nonnegative inequality
    multipliers, and returns (J, x) for the best, or None when no candidate
    exists.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = H.shape[0]
    m = G.shape[0]
    if Geq is None:
        Geq = np.zeros((0, n))
        heq = np.zeros(0)
    ne = Geq.shape[0]
    best = None
    for size in range(0, n - ne + 1):
        subsets = list(combinations(range(m), size))
        if not subsets:
            continue
        k = ne + size
        dim = n + k
        mats = np.zeros((len(subsets), dim, dim))
        rhss = np.zeros((len(subsets), dim))
        for si, sub in enumerate(subsets):
            Aw = np.vstack([Geq, G[list(sub)]]) if k else np.zeros((0, n))
            mats[si, :n, :n] = H
            mats[si, :n, n:] = Aw.T
            mats[si, n:, :n] = Aw
            rhss[si, :n] = -g
            rhss[si, n:] = np.concatenate([heq, h[list(sub)]])
        sols = _batch_solve(mats, rhss)
        ok = np.isfinite(sols).all(axis=1)
        resid = np.einsum(
            "kij,kj->ki", mats, np.where(np.isfinite(sols), sols, 0.0)
        ) - rhss
        ok &= np.abs(resid).max(axis=1) <= 1e-6
        xs = sols[:, :n]
        lams = sols[:, n + ne :]
        feas = ok
        if m:
            feas = feas & (G @ xs.T <= h[:, None] + feas_tol).all(axis=0)
        if ne:
            feas = feas & (
                np.abs(Geq @ xs.T - heq[:, None]) <= feas_tol
            ).all(axis=0)
        if size:
            feas = feas & (lams >= -dual_tol).all(axis=1)
        if not feas.any():
            continue
        vals = 0.5 * np.einsum("ki,ij,kj->k", xs[feas], H, xs[feas]) + xs[feas] @ g
        ibest = int(np.argmin(vals))
        if best is None or vals[ibest] < best[0]:
            best = (float(vals[ibest]), xs[feas][ibest])
    return best
