"""Problem data model: parametric MIQP families, branch-node relaxations with
their assembled QPs, random instance generation, and file round-tripping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NotPositiveDefinite,
    NumericalFailure,
    ParameterOutsideTheta0,
    ParseError,
)
from .geometry import Polyhedron
from .linalg import cholesky_factor, min_eigenvalue

MIN_HESSIAN_EIGENVALUE = 1e-6
SYMMETRY_TOL = 1e-10


@dataclass
class MpMIQP:
    """A family of MIQPs indexed by a parameter vector theta.

    The objective is 0.5 x'Hx + (f + f_theta theta)'x, the constraints are
    A x <= b + W theta, the variables listed in binary_indices are 0/1, and
    theta ranges over the polyhedron theta0. Binaries occupy the last
    positions of x by convention.
    """

    H: np.ndarray
    f: np.ndarray
    f_theta: np.ndarray
    A: np.ndarray
    b: np.ndarray
    W: np.ndarray
    binary_indices: tuple
    theta0: Polyhedron

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        self.f_theta = np.asarray(self.f_theta, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        self.binary_indices = tuple(int(i) for i in self.binary_indices)
        n = self.H.shape[0]
        if self.H.shape != (n, n):
            raise ValueError("H must be square")
        for name, arr, shape in (
            ("f", self.f, (n,)),
            ("f_theta", self.f_theta, (n, self.n_theta)),
            ("A", self.A, (self.m, n)),
            ("b", self.b, (self.m,)),
            ("W", self.W, (self.m, self.n_theta)),
        ):
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, want {shape}")
        for name, arr in (("H", self.H), ("f", self.f), ("f_theta", self.f_theta),
                          ("A", self.A), ("b", self.b), ("W", self.W)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} must be finite")
        if np.max(np.abs(self.H - self.H.T)) > SYMMETRY_TOL:
            raise ValueError("H must be symmetric")
        lam = min_eigenvalue(self.H)
        if lam < MIN_HESSIAN_EIGENVALUE:
            raise NotPositiveDefinite(
                f"smallest Hessian eigenvalue {lam:.3e} is below "
                f"{MIN_HESSIAN_EIGENVALUE:g}"
            )
        if self.binary_indices != tuple(sorted(set(self.binary_indices))):
            raise ValueError("binary_indices must be sorted and unique")
        if self.binary_indices and (
            self.binary_indices[0] < 0 or self.binary_indices[-1] >= n
        ):
            raise ValueError("binary_indices out of range")
        if self.theta0.is_empty():
            raise ValueError("theta0 must be nonempty")
        self.theta0.bounding_box()  # raises UnboundedRegion if unbounded

    @property
    def n(self):
        return self.H.shape[0]

    @property
    def n_b(self):
        return len(self.binary_indices)

    @property
    def n_c(self):
        return self.n - self.n_b

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n_theta(self):
        return self.f_theta.shape[1] if self.f_theta.ndim == 2 else self.theta0.dim

    def root_relaxation(self):
        return Relaxation(self, (), ())

    def instantiate(self, theta):
        """Fix theta, producing a single MIQP instance."""
        theta = np.asarray(theta, dtype=float)
        if not self.theta0.contains(theta):
            raise ParameterOutsideTheta0(f"theta {theta} outside the parameter set")
        return MiqpInstance(
            H=self.H,
            f=self.f + self.f_theta @ theta,
            A=self.A,
            b=self.b + self.W @ theta,
            binary_indices=self.binary_indices,
        )

    def equals(self, other):
        return (
            np.array_equal(self.H, other.H)
            and np.array_equal(self.f, other.f)
            and np.array_equal(self.f_theta, other.f_theta)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.W, other.W)
            and self.binary_indices == other.binary_indices
            and np.array_equal(self.theta0.A, other.theta0.A)
            and np.array_equal(self.theta0.b, other.theta0.b)
        )


@dataclass
class MiqpInstance:
    """One member of the family, with theta substituted in."""

    H: np.ndarray
    f: np.ndarray
    A: np.ndarray
    b: np.ndarray
    binary_indices: tuple


@dataclass
class Relaxation:
    """A branch-and-bound node: binaries in b0 are fixed to 0, binaries in
    b1 to 1, the rest relax to [0, 1]."""

    problem: MpMIQP
    b0: tuple
    b1: tuple

    def __post_init__(self):
        self.b0 = tuple(sorted(int(i) for i in self.b0))
        self.b1 = tuple(sorted(int(i) for i in self.b1))
        binaries = set(self.problem.binary_indices)
        if not (set(self.b0) <= binaries and set(self.b1) <= binaries):
            raise ValueError("fixed indices must be binary variables")
        if set(self.b0) & set(self.b1):
            raise ValueError("a binary cannot be fixed to both 0 and 1")
        self._assembled = None

    @property
    def free_binaries(self):
        fixed = set(self.b0) | set(self.b1)
        return tuple(i for i in self.problem.binary_indices if i not in fixed)

    def child(self, k, value):
        if k not in self.free_binaries:
            raise ValueError(f"variable {k} is not a free binary here")
        if value == 0:
            return Relaxation(self.problem, self.b0 + (k,), self.b1)
        return Relaxation(self.problem, self.b0, self.b1 + (k,))

    def assemble(self):
        """Assembled QP with frozen row order: original rows first, then per
        free binary (ascending) its upper-bound row and lower-bound row;
        equality rows list the 0-fixings then the 1-fixings, each ascending."""
        if self._assembled is None:
            p = self.problem
            n = p.n
            rows = [p.A]
            g_const = [p.b]
            g_lin = [p.W]
            tags = [("orig", i) for i in range(p.m)]
            for i in self.free_binaries:
                e = np.zeros((1, n))
                e[0, i] = 1.0
                rows.append(e)
                g_const.append(np.array([1.0]))
                g_lin.append(np.zeros((1, p.n_theta)))
                tags.append(("ub", i))
                rows.append(-e)
                g_const.append(np.array([0.0]))
                g_lin.append(np.zeros((1, p.n_theta)))
                tags.append(("lb", i))
            eq_rows = []
            eq_rhs = []
            for i in self.b0:
                e = np.zeros(n)
                e[i] = 1.0
                eq_rows.append(e)
                eq_rhs.append(0.0)
            for i in self.b1:
                e = np.zeros(n)
                e[i] = 1.0
                eq_rows.append(e)
                eq_rhs.append(1.0)
            Geq = np.array(eq_rows) if eq_rows else np.zeros((0, n))
            self._assembled = AssembledQP(
                H=p.H,
                f_const=p.f,
                f_lin=p.f_theta,
                G=np.vstack(rows),
                g_const=np.concatenate(g_const),
                g_lin=np.vstack(g_lin),
                Geq=Geq,
                geq=np.array(eq_rhs),
                row_tags=tuple(tags),
                free_binaries=self.free_binaries,
            )
        return self._assembled


@dataclass
class AssembledQP:
    """The parametric QP of one relaxation: minimize
    0.5 x'Hx + (f_const + f_lin theta)'x subject to
    G x <= g_const + g_lin theta and Geq x = geq."""

    H: np.ndarray
    f_const: np.ndarray
    f_lin: np.ndarray
    G: np.ndarray
    g_const: np.ndarray
    g_lin: np.ndarray
    Geq: np.ndarray
    geq: np.ndarray
    row_tags: tuple
    free_binaries: tuple
    _hfac: np.ndarray = field(default=None, repr=False, compare=False)
    _bound_rows: dict = field(default=None, repr=False, compare=False)

    @property
    def n(self):
        return self.H.shape[0]

    @property
    def n_theta(self):
        return self.f_lin.shape[1]

    @property
    def n_ineq(self):
        return self.G.shape[0]

    @property
    def n_eq(self):
        return self.Geq.shape[0]

    def hessian_factor(self):
        if self._hfac is None:
            self._hfac = cholesky_factor(self.H)
        return self._hfac

    def f_of(self, theta):
        return self.f_const + self.f_lin @ theta

    def rhs_of(self, theta):
        return self.g_const + self.g_lin @ theta

    def bound_rows(self, var):
        """Row indices (upper, lower) of a free binary's bound rows."""
        if self._bound_rows is None:
            table = {}
            for row, (kind, i) in enumerate(self.row_tags):
                if kind in ("ub", "lb"):
                    table.setdefault(i, {})[kind] = row
            self._bound_rows = {
                i: (d["ub"], d["lb"]) for i, d in table.items()
            }
        return self._bound_rows[var]

    def binaries_resolved(self, active_set):
        """True when every free binary has one of its bound rows active."""
        active = set(active_set)
        for i in self.free_binaries:
            ub, lb = self.bound_rows(i)
            if ub not in active and lb not in active:
                return False
        return True


def random_mpmiqp(seed, n_c=2, n_b=4, m=6, n_theta=2):
    """Random family drawn with a fixed order so results depend only on the
    seed: Hessian factor (redrawn until the product is safely positive
    definite), then f, f_theta, A, b, W. The parameter set is the unit box
    [-1, 1]^n_theta and the binaries are the last n_b variables."""
    rng = np.random.default_rng(seed)
    n = n_c + n_b
    for _ in range(100):
        Hbar = rng.standard_normal((n, n))
        H = Hbar @ Hbar.T
        if min_eigenvalue(H) >= MIN_HESSIAN_EIGENVALUE:
            break
    else:
        raise NumericalFailure("could not draw a positive definite Hessian")
    f = rng.standard_normal(n)
    f_theta = rng.standard_normal((n, n_theta))
    A = rng.uniform(0.0, 1.0, (m, n))
    b = rng.uniform(1.0, 2.0, m)
    W = rng.uniform(0.0, 2.0, (m, n_theta))
    theta0 = Polyhedron.box(-np.ones(n_theta), np.ones(n_theta))
    return MpMIQP(
        H=H, f=f, f_theta=f_theta, A=A, b=b, W=W,
        binary_indices=tuple(range(n_c, n)), theta0=theta0,
    )


def _fmt(x):
    return f"{float(x):.17g}"


def _fmt_vector(v):
    return [_fmt(x) for x in np.asarray(v, dtype=float)]


def _fmt_matrix(M):
    M = np.asarray(M, dtype=float)
    return [[_fmt(x) for x in row] for row in M]


def _parse_float(s, name):
    try:
        return float(s)
    except (TypeError, ValueError):
        raise ParseError(f"field '{name}' holds a non-numeric entry: {s!r}")


def _parse_vector(data, name, length=None):
    if not isinstance(data, list):
        raise ParseError(f"field '{name}' must be a list")
    v = np.array([_parse_float(x, name) for x in data], dtype=float)
    if length is not None and v.shape[0] != length:
        raise ParseError(f"field '{name}' has length {v.shape[0]}, want {length}")
    return v


def _parse_matrix(data, name, rows=None, cols=None):
    if not isinstance(data, list) or (data and not isinstance(data[0], list)):
        raise ParseError(f"field '{name}' must be a list of rows")
    M = np.array(
        [[_parse_float(x, name) for x in row] for row in data], dtype=float
    )
    if M.size == 0:
        M = M.reshape(rows or 0, cols or 0)
    if rows is not None and M.shape[0] != rows:
        raise ParseError(f"field '{name}' has {M.shape[0]} rows, want {rows}")
    if cols is not None and M.shape[1] != cols:
        raise ParseError(f"field '{name}' has {M.shape[1]} columns, want {cols}")
    return M


def _require(obj, name):
    if name not in obj:
        raise ParseError(f"missing field '{name}'")
    return obj[name]


def save_problem(p, path):
    """Write the family to a JSON file. Doubles are stored as decimal
    strings with 17 significant digits, so loading is bit-exact."""
    doc = {
        "n_c": p.n_c,
        "n_b": p.n_b,
        "m": p.m,
        "n_theta": p.n_theta,
        "H": _fmt_matrix(p.H),
        "f": _fmt_vector(p.f),
        "f_theta": _fmt_matrix(p.f_theta),
        "A": _fmt_matrix(p.A),
        "b": _fmt_vector(p.b),
        "W": _fmt_matrix(p.W),
        "binary_indices": list(p.binary_indices),
        "theta0": {
            "A": _fmt_matrix(p.theta0.A),
            "b": _fmt_vector(p.theta0.b),
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_problem(path):
    """Read a family back; raises ParseError with the offending field."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    n_c = int(_require(doc, "n_c"))
    n_b = int(_require(doc, "n_b"))
    m = int(_require(doc, "m"))
    n_theta = int(_require(doc, "n_theta"))
    n = n_c + n_b
    H = _parse_matrix(_require(doc, "H"), "H", n, n)
    f = _parse_vector(_require(doc, "f"), "f", n)
    f_theta = _parse_matrix(_require(doc, "f_theta"), "f_theta", n, n_theta)
    A = _parse_matrix(_require(doc, "A"), "A", m, n)
    b = _parse_vector(_require(doc, "b"), "b", m)
    W = _parse_matrix(_require(doc, "W"), "W", m, n_theta)
    binary_indices = _require(doc, "binary_indices")
    if not isinstance(binary_indices, list) or len(binary_indices) != n_b:
        raise ParseError(f"field 'binary_indices' must list {n_b} indices")
    theta0_doc = _require(doc, "theta0")
    if not isinstance(theta0_doc, dict):
        raise ParseError("field 'theta0' must be an object with A and b")
    tA = _parse_matrix(_require(theta0_doc, "A"), "theta0.A", None, n_theta)
    tb = _parse_vector(_require(theta0_doc, "b"), "theta0.b", tA.shape[0])
    try:
        p = MpMIQP(
            H=H, f=f, f_theta=f_theta, A=A, b=b, W=W,
            binary_indices=tuple(int(i) for i in binary_indices),
            theta0=Polyhedron(tA, tb),
        )
    except (ValueError, NotPositiveDefinite) as exc:
        raise ParseError(f"inconsistent problem data: {exc}")
    for k, rec in enumerate(doc.get("relaxations", [])):
        b0 = set(rec.get("B0", []))
        b1 = set(rec.get("B1", []))
        if b0 & b1:
            raise ParseError(
                f"relaxation record {k}: B0 and B1 overlap on {sorted(b0 & b1)}"
            )
        if not (b0 <= set(p.binary_indices) and b1 <= set(p.binary_indices)):
            raise ParseError(f"relaxation record {k}: non-binary index fixed")
    return p


def load_relaxation_records(path, problem):
    """Relaxations listed in a problem file, validated against the family."""
    with open(path) as fh:
        doc = json.load(fh)
    out = []
    for rec in doc.get("relaxations", []):
        out.append(Relaxation(problem, tuple(rec.get("B0", [])),
                              tuple(rec.get("B1", []))))
    return out
