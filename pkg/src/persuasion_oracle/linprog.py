"""Small linear-programming layer.

``solve_lp`` maximizes ``c @ x`` subject to row constraints with relations
``<=``, ``=`` or ``>=`` and per-variable bounds.  Two backends sit behind the
same contract:

* ``"highs"`` (default) calls the HiGHS dual simplex shipped with SciPy.  It
  handles the sparse menu-message programs with tens of thousands of rows.
* ``"simplex"`` is a dense two-phase tableau simplex with Bland's rule.  It is
  slow but dependency free and is used to cross-check the default backend.

Whatever the backend, the returned point is re-verified against the original
constraints before being reported as optimal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog as _scipy_linprog

from .errors import InvalidInstance, NumericalFailure

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """maximize c @ x  s.t.  A[i] @ x (rel_i) b[i],  lower <= x <= upper."""

    objective: np.ndarray
    matrix: object
    relations: tuple
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, float)
        n = c.size
        A = self.matrix
        if A is None:
            A = sp.csr_matrix((0, n))
        elif not sp.issparse(A):
            A = np.atleast_2d(np.asarray(A, float)).reshape(-1, n) if np.size(A) else sp.csr_matrix((0, n))
        if A.shape[1] != n:
            raise InvalidInstance("constraint vectors must match the objective dimension")
        rel = tuple(self.relations)
        b = np.asarray(self.rhs, float).reshape(-1)
        if len(rel) != A.shape[0] or b.size != A.shape[0]:
            raise InvalidInstance("one relation and bound per constraint row")
        if any(r not in _RELATIONS for r in rel):
            raise InvalidInstance(f"relations must be one of {_RELATIONS}")
        lo = np.broadcast_to(np.asarray(self.lower, float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, float), (n,)).copy()
        data = A.data if sp.issparse(A) else A
        for arr in (c, data, b):
            if not np.all(np.isfinite(arr)):
                raise InvalidInstance("LP coefficients must be finite")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise InvalidInstance("variable bounds must satisfy lower <= upper")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def from_rows(cls, objective, rows=(), lower=0.0, upper=np.inf):
        """Build from ``(coefficients, relation, bound)`` triples."""
        c = np.asarray(objective, float)
        rows = list(rows)
        if rows:
            A = np.array([np.asarray(r[0], float) for r in rows]).reshape(len(rows), c.size)
        else:
            A = np.zeros((0, c.size))
        return cls(c, A, tuple(r[1] for r in rows), [r[2] for r in rows], lower, upper)

    @property
    def size(self):
        return self.objective.size

    def residuals(self, x) -> float:
        """Largest constraint or bound violation at ``x``."""
        x = np.asarray(x, float)
        Ax = self.matrix @ x
        viol = 0.0
        for rel, sign in ((LE, 1.0), (GE, -1.0)):
            mask = np.array([r == rel for r in self.relations], bool)
            if mask.any():
                viol = max(viol, float(np.max(sign * (Ax[mask] - self.rhs[mask]), initial=0.0)))
        mask = np.array([r == EQ for r in self.relations], bool)
        if mask.any():
            viol = max(viol, float(np.max(np.abs(Ax[mask] - self.rhs[mask]))))
        viol = max(viol, float(np.max(self.lower - x, initial=0.0)), float(np.max(x - self.upper, initial=0.0)))
        return viol


@dataclass(frozen=True, eq=False)
class Optimal:
    x: np.ndarray
    value: float


class _Outcome:
    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


Infeasible = _Outcome("Infeasible")
Unbounded = _Outcome("Unbounded")


def solve_lp(lp: LinearProgram, tol: float = 1e-7, method: str = "highs"):
    """Solve ``lp``; return ``Optimal``, ``Infeasible`` or ``Unbounded``."""
    if method == "highs":
        out = _solve_highs(lp)
    elif method == "simplex":
        out = _solve_dense(lp)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if isinstance(out, Optimal):
        x = np.clip(out.x, lp.lower, lp.upper)
        scale = max(1.0, float(np.max(np.abs(lp.rhs), initial=0.0)))
        if lp.residuals(x) > tol * scale:
            raise NumericalFailure(f"LP solution violates constraints by {lp.residuals(x):.3g}")
        return Optimal(x, float(lp.objective @ x))
    return out


def _solve_highs(lp: LinearProgram):
    A = sp.csr_matrix(lp.matrix)
    rel = np.array(lp.relations)
    ub_rows = np.flatnonzero(rel != EQ)
    eq_rows = np.flatnonzero(rel == EQ)
    sign = np.where(rel[ub_rows] == GE, -1.0, 1.0) if ub_rows.size else np.zeros(0)
    A_ub = sp.diags(sign) @ A[ub_rows] if ub_rows.size else None
    b_ub = sign * lp.rhs[ub_rows] if ub_rows.size else None
    A_eq = A[eq_rows] if eq_rows.size else None
    b_eq = lp.rhs[eq_rows] if eq_rows.size else None
    bounds = np.column_stack([lp.lower, lp.upper])
    bounds = [(None if np.isinf(lo) else lo, None if np.isinf(hi) else hi) for lo, hi in bounds]
    res = _scipy_linprog(
        -lp.objective,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 0:
        return Optimal(np.asarray(res.x, float), float(-res.fun))
    if res.status == 2:
        return Infeasible
    if res.status == 3:
        return Unbounded
    raise NumericalFailure(f"HiGHS could not certify an outcome: {res.message}")


# --- dense two-phase simplex -------------------------------------------------

_EPS = 1e-10


def _pivot(T, basis, r, c):
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = c


def _run(T, basis, ncols, max_iter):
    """Maximize with Bland's rule.  Last row of T holds reduced costs."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        d = T[-1, :ncols]
        entering = np.flatnonzero(d < -_EPS)
        if entering.size == 0:
            return True
        c = int(entering[0])
        col = T[:m, c]
        rows = np.flatnonzero(col > _EPS)
        if rows.size == 0:
            return False
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + _EPS * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, basis, r, c)
    raise NumericalFailure("simplex iteration limit reached")


def _solve_dense(lp: LinearProgram):
    A = lp.matrix.toarray() if sp.issparse(lp.matrix) else np.asarray(lp.matrix, float)
    n = lp.size
    lo, hi = lp.lower, lp.upper
    # x = shift + P @ y with y >= 0; free variables are split in two
    cols, shift = [], np.zeros(n)
    for j in range(n):
        if np.isfinite(lo[j]):
            shift[j] = lo[j]
            cols.append((j, 1.0))
        elif np.isfinite(hi[j]):
            shift[j] = hi[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    P = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        P[j, k] = s
    rows = [(A[i] @ P, lp.relations[i], lp.rhs[i] - A[i] @ shift) for i in range(A.shape[0])]
    for j in range(n):
        if np.isfinite(lo[j]) and np.isfinite(hi[j]):
            rows.append((P[j], LE, hi[j] - lo[j]))
    ny = P.shape[1]
    m = len(rows)
    n_slack = sum(1 for r in rows if r[1] != EQ)
    width = ny + n_slack + m
    T = np.zeros((m + 1, width + 1))
    basis = [0] * m
    s = ny
    for i, (a, rel, b) in enumerate(rows):
        T[i, :ny] = a
        if rel == LE:
            T[i, s] = 1.0
            s += 1
        elif rel == GE:
            T[i, s] = -1.0
            s += 1
        T[i, -1] = b
        if b < 0:
            T[i] *= -1.0
        T[i, ny + n_slack + i] = 1.0
        basis[i] = ny + n_slack + i
    art0 = ny + n_slack
    max_iter = 50 * (width + m + 10)
    # phase one: maximize -sum(artificials)
    T[-1, :] = 0.0
    T[-1, art0:width] = 1.0
    for i in range(m):
        T[-1] -= T[i]
    _run(T, basis, width, max_iter)
    if -T[-1, -1] > 1e-8 * max(1.0, float(np.max(np.abs(T[:m, -1]), initial=0.0))):
        return Infeasible
    keep = []
    for i in range(m):
        if basis[i] >= art0:
            nz = np.flatnonzero(np.abs(T[i, :art0]) > 1e-9)
            if nz.size:
                _pivot(T, basis, i, int(nz[0]))
                keep.append(i)
        else:
            keep.append(i)
    T = np.vstack([T[keep], T[-1:]])
    basis = [basis[i] for i in keep]
    T = np.hstack([T[:, :art0], T[:, -1:]])
    cy = P.T @ lp.objective
    cost = np.zeros(art0)
    cost[:ny] = cy
    T[-1, :] = 0.0
    T[-1, :art0] = -cost
    for i, bi in enumerate(basis):
        T[-1] += cost[bi] * T[i]
    if not _run(T, basis, art0, max_iter):
        return Unbounded
    y = np.zeros(art0)
    for i, bi in enumerate(basis):
        y[bi] = T[i, -1]
    x = shift + P @ y[:ny]
    return Optimal(x, float(lp.objective @ x))
