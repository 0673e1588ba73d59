"""Dense two-phase revised simplex for small minimization LPs.

Problem form:  min c^T x  s.t.  A x <= b,  x >= 0.

Duals follow the Lagrangian sign convention: y >= 0 multiplies (A x - b),
so at an optimum the reduced costs satisfy c + A^T y >= 0 and strong
duality reads c^T x + b^T y = 0. Bland's rule makes the solve both
cycle-free and deterministic: repeated solves of the same instance are
bit-identical, and degenerate optimal faces always resolve to the same
vertex. Rows are equilibrated by their largest absolute entry before
solving; duals are reported in the original scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
_REFRESH_EVERY = 100  # rebuild the basis inverse from scratch this often


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """min c^T x subject to a_ub @ x <= b_ub and x >= 0."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        a = np.asarray(self.a_ub, dtype=float)
        if a.size == 0:
            a = a.reshape(0, c.size)
        b = np.atleast_1d(np.asarray(self.b_ub, dtype=float)) if np.size(self.b_ub) else np.zeros(0)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a_ub", a)
        object.__setattr__(self, "b_ub", b)
        if a.ndim != 2 or a.shape != (b.size, c.size):
            raise ValueError("a_ub must be (len(b_ub), len(c))")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("LP data must be finite")

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return self.b_ub.size


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None
    duals: np.ndarray | None = None
    iterations: int = 0
    # For infeasible problems: y >= 0 with A^T y >= 0 and b^T y < 0.
    infeasibility_certificate: np.ndarray | None = None


@dataclass
class LpVerification:
    """Normalized residual report for an optimal solution."""

    max_primal_residual: float
    max_dual_residual: float
    duality_gap: float
    max_complementarity: float

    @property
    def worst(self) -> float:
        return max(
            self.max_primal_residual,
            self.max_dual_residual,
            self.duality_gap,
            self.max_complementarity,
        )


class _Simplex:
    """Revised simplex over the equality system a_std z = rhs, z >= 0."""

    def __init__(self, a_std, rhs, tol, pivot_tol):
        self.a = a_std
        self.rhs = rhs
        self.tol = tol
        self.pivot_tol = pivot_tol
        self.iterations = 0
        self.max_pivots = 10_000 + 50 * sum(a_std.shape)

    def run(self, cost, basis, b_inv):
        """Minimize ``cost`` starting from a feasible ``basis`` with inverse ``b_inv``.

        Bland's rule: the entering variable is the smallest-index column with
        a negative reduced cost; ratio-test ties break on the smallest basic
        variable index. Returns (status, basis, b_inv).
        """
        enter_tol = self.tol * (1.0 + np.abs(cost))
        in_basis = np.zeros(self.a.shape[1], dtype=bool)
        in_basis[basis] = True
        since_refresh = 0
        while True:
            y = b_inv.T @ cost[basis]
            reduced = cost - self.a.T @ y
            eligible = np.flatnonzero(~in_basis & (reduced < -enter_tol))
            if eligible.size == 0:
                return "optimal", basis, b_inv
            j = int(eligible[0])

            d = b_inv @ self.a[:, j]
            xb = b_inv @ self.rhs
            rows = np.flatnonzero(d > self.pivot_tol)
            if rows.size == 0:
                return "unbounded", basis, b_inv
            ratios = np.maximum(xb[rows], 0.0) / d[rows]
            theta = ratios.min()
            ties = rows[ratios == theta]
            leave = int(ties[np.argmin(basis[ties])])

            in_basis[basis[leave]] = False
            in_basis[j] = True
            basis[leave] = j
            piv_row = b_inv[leave] / d[leave]
            b_inv = b_inv - np.outer(d, piv_row)
            b_inv[leave] = piv_row

            self.iterations += 1
            since_refresh += 1
            if since_refresh >= _REFRESH_EVERY:
                b_inv = np.linalg.inv(self.a[:, basis])
                since_refresh = 0
            if self.iterations > self.max_pivots:
                raise RuntimeError("simplex pivot limit exceeded (numerical cycling?)")


def solve(lp: LinearProgram, *, tol: float = FEAS_TOL, pivot_tol: float = PIVOT_TOL) -> LpSolution:
    """Solve the LP, returning the primal vertex, exact basis duals and status.

    Infeasible problems carry a Farkas-style certificate: a row combination
    y >= 0 with A^T y >= 0 and b^T y < 0. Unbounded problems report the
    status only. The solve is deterministic: identical inputs give
    bit-identical outputs.
    """
    m, n = lp.num_rows, lp.num_vars

    # Row equilibration by the largest |entry|; all-zero rows keep scale 1.
    scale = np.abs(lp.a_ub).max(axis=1, initial=0.0) if m else np.zeros(0)
    scale = np.where(scale == 0.0, 1.0, scale)
    a_s = lp.a_ub / scale[:, None]
    b_s = lp.b_ub / scale

    sign = np.where(b_s < 0.0, -1.0, 1.0)
    a_w = a_s * sign[:, None]
    b_w = b_s * sign
    art_rows = np.flatnonzero(sign < 0.0)
    n_art = art_rows.size

    # Columns: n structural, m slacks (diagonal = sign), artificials last.
    a_std = np.zeros((m, n + m + n_art))
    a_std[:, :n] = a_w
    a_std[np.arange(m), n + np.arange(m)] = sign
    a_std[art_rows, n + m + np.arange(n_art)] = 1.0

    basis = n + np.arange(m)
    basis[art_rows] = n + m + np.arange(n_art)
    b_inv = np.eye(m)
    keep_rows = np.arange(m)
    total_iters = 0

    # Phase 1: drive artificials to zero.
    if n_art:
        cost1 = np.zeros(n + m + n_art)
        cost1[n + m :] = 1.0
        core1 = _Simplex(a_std, b_w, tol, pivot_tol)
        status, basis, b_inv = core1.run(cost1, basis, b_inv)
        total_iters += core1.iterations
        if status != "optimal":
            raise RuntimeError("phase-1 simplex cannot be unbounded")
        xb = b_inv @ b_w
        infeas = float(cost1[basis] @ xb)
        if infeas > tol * (1.0 + float(np.abs(b_w).max(initial=0.0))):
            y1 = b_inv.T @ cost1[basis]
            cert = np.maximum(-(sign * y1) / scale, 0.0)
            return LpSolution(
                status=LpStatus.INFEASIBLE,
                iterations=total_iters,
                infeasibility_certificate=cert,
            )
        a_std, b_w, basis, b_inv, keep_rows = _purge_artificials(
            a_std, b_w, basis, b_inv, n + m, pivot_tol
        )

    # Phase 2 on structural + slack columns only.
    a2 = a_std[:, : n + m]
    cost2 = np.concatenate([lp.c, np.zeros(m)])
    core2 = _Simplex(a2, b_w, tol, pivot_tol)
    status, basis, b_inv = core2.run(cost2, basis, b_inv)
    total_iters += core2.iterations
    if status == "unbounded":
        return LpSolution(status=LpStatus.UNBOUNDED, iterations=total_iters)

    # Fresh factorization plus iterative refinement: binding-row residuals at
    # the reported vertex must sit at machine level, not at cond(B) * eps.
    b_mat = a2[:, basis]
    xb = _refined_solve(b_mat, b_w)
    y_eq = _refined_solve(b_mat.T, cost2[basis])
    x_full = np.zeros(n + m)
    x_full[basis] = np.maximum(xb, 0.0)
    x = x_full[:n]
    duals = np.zeros(m)
    duals[keep_rows] = -(sign[keep_rows] * y_eq) / scale[keep_rows]
    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=x,
        objective=float(lp.c @ x),
        duals=duals,
        iterations=total_iters,
    )


def _refined_solve(mat, rhs, steps=2):
    if rhs.size == 0:
        return np.zeros(0)
    x = np.linalg.solve(mat, rhs)
    for _ in range(steps):
        x = x + np.linalg.solve(mat, rhs - mat @ x)
    return x


def _purge_artificials(a_std, b_w, basis, b_inv, n_real, pivot_tol):
    """Pivot zero-valued artificial variables out of the phase-1 basis.

    If an artificial cannot be exchanged for a real column, its tableau row
    certifies a linearly dependent constraint row, which is deleted; the
    caller assigns dropped rows zero duals.
    """
    row_ids = np.arange(a_std.shape[0])
    pos = 0
    while pos < basis.size:
        if basis[pos] < n_real:
            pos += 1
            continue
        vals = b_inv[pos] @ a_std[:, :n_real]
        in_basis = np.zeros(n_real, dtype=bool)
        in_basis[basis[basis < n_real]] = True
        cand = np.flatnonzero(~in_basis & (np.abs(vals) > pivot_tol))
        if cand.size:
            j = int(cand[0])
            d = b_inv @ a_std[:, j]
            piv_row = b_inv[pos] / d[pos]
            b_inv = b_inv - np.outer(d, piv_row)
            b_inv[pos] = piv_row
            basis[pos] = j
            pos += 1
            continue
        # Redundant constraint: drop the row with the largest weight in the
        # certifying combination, then rebuild the inverse.
        drop_local = int(np.argmax(np.abs(b_inv[pos])))
        keep = np.flatnonzero(np.arange(a_std.shape[0]) != drop_local)
        a_std = a_std[keep]
        b_w = b_w[keep]
        row_ids = row_ids[keep]
        basis = np.delete(basis, pos)
        b_inv = np.linalg.inv(a_std[:, basis]) if basis.size else np.zeros((0, 0))
        pos = 0  # basis layout changed; rescan
    return a_std, b_w, basis, b_inv, row_ids


def verify(lp: LinearProgram, sol: LpSolution) -> LpVerification:
    """Normalized optimality residuals for an Optimal solution.

    Primal violations are scaled by (1 + max|b|), dual violations by
    (1 + max|c|), the duality gap |c^T x + b^T y| and the complementary
    slackness max_j |y_j (b_j - (A x)_j)| by (1 + |c^T x|).
    """
    if sol.status != LpStatus.OPTIMAL:
        raise ValueError("verify requires an Optimal solution")
    x, y = sol.x, sol.duals
    ax = lp.a_ub @ x
    obj = float(lp.c @ x)
    p_scale = 1.0 + float(np.abs(lp.b_ub).max(initial=0.0))
    d_scale = 1.0 + float(np.abs(lp.c).max(initial=0.0))
    o_scale = 1.0 + abs(obj)

    primal = max(
        float(np.maximum(ax - lp.b_ub, 0.0).max(initial=0.0)),
        float(np.maximum(-x, 0.0).max(initial=0.0)),
    )
    dual = max(
        float(np.maximum(-y, 0.0).max(initial=0.0)),
        float(np.maximum(-(lp.c + lp.a_ub.T @ y), 0.0).max(initial=0.0)),
    )
    gap = abs(obj + float(lp.b_ub @ y))
    compl = float(np.abs(y * (lp.b_ub - ax)).max(initial=0.0))
    return LpVerification(
        max_primal_residual=primal / p_scale,
        max_dual_residual=dual / d_scale,
        duality_gap=gap / o_scale,
        max_complementarity=compl / o_scale,
    )


def format_lp(lp: LinearProgram) -> str:
    """Plain-text normalized dump: cost row first, then inequality rows."""
    lines = ["min " + " ".join(repr(float(v)) for v in lp.c)]
    for row, rhs in zip(lp.a_ub, lp.b_ub):
        lines.append(" ".join(repr(float(v)) for v in row) + " <= " + repr(float(rhs)))
    return "\n".join(lines) + "\n"
