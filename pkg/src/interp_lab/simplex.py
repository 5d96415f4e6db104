"""Dense two-phase simplex with Bland's anti-cycling rule.

Small, robust, deterministic; built for the desk-scale programs produced
by the cutting-plane loops.  Minimizes c.x subject to row constraints
(<=, >=, =) and per-variable bounds.

Degenerate pivot sequences fill a long-lived tableau with roundoff noise
where exact zeros belong, and pivoting on such noise is catastrophic, so
the tableau is refactorized from the original data (through the current
basis) every few pivots and before any optimality, unboundedness, or
row-redundancy decision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "LPError",
    "LPInfeasibleError",
    "LPIterationLimitError",
    "LPModel",
    "LPSolution",
    "LPUnboundedError",
    "solve_lp",
]

MAX_ITERATIONS = 1_000_000
FEASIBILITY_TOL = 1e-9
REFRESH_EVERY = 16
PIVOT_SAFE = 1e-7  # smaller pivots force a refresh before committing


class LPError(RuntimeError):
    pass


class LPInfeasibleError(LPError):
    pass


class LPUnboundedError(LPError):
    pass


class LPIterationLimitError(LPError):
    pass


@dataclass(frozen=True, eq=False)
class LPModel:
    """min objective . x  s.t.  rows (coeffs rel rhs),  lower <= x <= upper.

    rel entries are "<=", ">=" or "=".  Bounds may be -inf/+inf.
    """

    objective: np.ndarray
    coeffs: np.ndarray
    rels: tuple[str, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        a = np.asarray(self.coeffs, dtype=float)
        if a.size == 0:
            a = a.reshape(0, c.size)
        b = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        if b.size == 0:
            b = b.reshape(0)
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if a.ndim != 2 or a.shape != (b.size, c.size):
            raise ValueError("inconsistent model dimensions")
        if lo.size != c.size or hi.size != c.size:
            raise ValueError("bounds must have one entry per variable")
        if len(self.rels) != b.size:
            raise ValueError("one relation per row required")
        for r in self.rels:
            if r not in ("<=", ">=", "="):
                raise ValueError(f"unknown relation {r!r}")
        if not np.all(np.isfinite(c)) or not np.all(np.isfinite(a)):
            raise ValueError("objective and coefficients must be finite")
        if not np.all(np.isfinite(b)):
            raise ValueError("right-hand sides must be finite")
        if np.any(lo > hi):
            raise ValueError("empty variable bound interval")
        for name, arr in (("objective", c), ("coeffs", a), ("rhs", b),
                          ("lower", lo), ("upper", hi)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "rels", tuple(self.rels))

    @property
    def nvars(self) -> int:
        return int(self.objective.size)

    @property
    def nrows(self) -> int:
        return int(self.rhs.size)


@dataclass(frozen=True)
class LPSolution:
    value: float
    x: np.ndarray
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0


def _set_objective_row(T: np.ndarray, basis: Sequence[int], costs: np.ndarray) -> None:
    T[-1, :] = 0.0
    T[-1, : costs.size] = costs
    for i, j in enumerate(basis):
        cj = T[-1, j]
        if cj != 0.0:
            T[-1] -= cj * T[i]


class _Tableau:
    """Constraint tableau plus objective row, refreshed from the original
    standard-form data every few pivots to shed accumulated roundoff."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: list[int]):
        self.A = A  # original standard-form rows, immutable
        self.b = b
        self.basis = basis
        m, ncols = A.shape
        self.T = np.zeros((m + 1, ncols + 1))
        self.costs = np.zeros(ncols)
        self.since_refresh = 0
        self._refresh()

    def set_costs(self, costs: np.ndarray) -> None:
        self.costs = costs
        _set_objective_row(self.T, self.basis, costs)

    def _refresh(self) -> None:
        B = self.A[:, self.basis]
        try:
            fresh = np.linalg.solve(B, np.column_stack([self.A, self.b]))
        except np.linalg.LinAlgError as exc:
            raise LPError("basis matrix became singular") from exc
        self.T[:-1, :-1] = fresh[:, :-1]
        self.T[:-1, -1] = fresh[:, -1]
        _set_objective_row(self.T, self.basis, self.costs)
        self.since_refresh = 0

    def drop_rows(self, keep: list[int]) -> None:
        self.A = self.A[keep]
        self.b = self.b[keep]
        self.basis = [self.basis[i] for i in keep]
        self.T = np.vstack([self.T[keep], self.T[-1:]])

    def drop_columns(self, ncols: int) -> None:
        self.A = self.A[:, :ncols]
        self.T = np.hstack([self.T[:, :ncols], self.T[:, -1:]])
        self.costs = self.costs[:ncols]

    def bland(self, ncols_active: int, tol: float, budget: int) -> int:
        """Pivot to optimality (Bland's rule); returns iterations used."""
        it = 0
        while True:
            if self.since_refresh >= REFRESH_EVERY:
                self._refresh()
            T = self.T
            red = T[-1, :ncols_active]
            candidates = np.nonzero(red < -tol)[0]
            if candidates.size == 0:
                if self.since_refresh > 0:
                    self._refresh()  # confirm optimality on fresh numbers
                    if np.any(self.T[-1, :ncols_active] < -tol):
                        continue
                return it
            j = int(candidates[0])  # smallest index: Bland
            col = T[:-1, j]
            rows = np.nonzero(col > tol)[0]
            if rows.size == 0:
                if self.since_refresh > 0:
                    self._refresh()  # confirm unboundedness on fresh numbers
                    if np.any(self.T[:-1, j] > tol):
                        continue
                raise LPUnboundedError("objective unbounded below")
            ratios = T[rows, -1] / col[rows]
            best = float(ratios.min())
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            # leaving: smallest basis index among minimum-ratio rows (Bland)
            leave = int(min(ties, key=lambda i: self.basis[i]))
            if abs(T[leave, j]) < PIVOT_SAFE and self.since_refresh > 0:
                self._refresh()  # the candidate pivot may be stale noise
                continue
            _pivot(T, leave, j)
            self.basis[leave] = j
            self.since_refresh += 1
            it += 1
            if it > budget:
                raise LPIterationLimitError(f"simplex exceeded {budget} pivots")


def solve_lp(
    model: LPModel,
    tol: float = FEASIBILITY_TOL,
    max_iterations: int = MAX_ITERATIONS,
) -> LPSolution:
    """Optimal basic solution, or LPInfeasibleError / LPUnboundedError."""
    n = model.nvars
    # shift finite lower bounds to zero; split free variables
    lo, hi = model.lower, model.upper
    shift = np.where(np.isfinite(lo), lo, 0.0)
    split = ~np.isfinite(lo)  # x = x+ - x- for these
    cols: list[np.ndarray] = []
    costs: list[float] = []
    col_var: list[tuple[int, float]] = []  # (original var, sign)
    A = model.coeffs
    for j in range(n):
        cols.append(A[:, j])
        costs.append(float(model.objective[j]))
        col_var.append((j, 1.0))
        if split[j]:
            cols.append(-A[:, j])
            costs.append(-float(model.objective[j]))
            col_var.append((j, -1.0))
    base_A = np.column_stack(cols) if cols else np.zeros((model.nrows, 0))
    b = model.rhs - A @ shift
    rows = [base_A[i] for i in range(model.nrows)]
    rels = list(model.rels)
    rhs = list(b)
    # finite upper bounds become rows (after the shift)
    for j in range(n):
        if np.isfinite(hi[j]):
            r = np.zeros(base_A.shape[1])
            kpos = [k for k, (v, sgn) in enumerate(col_var) if v == j and sgn > 0][0]
            r[kpos] = 1.0
            if split[j]:
                kneg = [k for k, (v, sgn) in enumerate(col_var)
                        if v == j and sgn < 0][0]
                r[kneg] = -1.0
            rows.append(r)
            rels.append("<=")
            rhs.append(float(hi[j] - shift[j]))

    m = len(rows)
    Araw = np.vstack(rows) if m else np.zeros((0, base_A.shape[1]))
    brow = np.asarray(rhs, dtype=float)
    for i in range(m):
        if brow[i] < 0.0:
            Araw[i] = -Araw[i]
            brow[i] = -brow[i]
            rels[i] = {"<=": ">=", ">=": "<=", "=": "="}[rels[i]]

    nbase = Araw.shape[1]
    slack_cols = []
    art_rows = []
    for i, rel in enumerate(rels):
        if rel == "<=":
            slack_cols.append((i, 1.0))
        elif rel == ">=":
            slack_cols.append((i, -1.0))
            art_rows.append(i)
        else:
            art_rows.append(i)
    nslack = len(slack_cols)
    nart = len(art_rows)
    ncols = nbase + nslack + nart
    Astd = np.zeros((m, ncols))
    Astd[:, :nbase] = Araw
    for k, (i, sgn) in enumerate(slack_cols):
        Astd[i, nbase + k] = sgn
    basis: list[int] = [-1] * m
    for k, (i, sgn) in enumerate(slack_cols):
        if sgn > 0.0:
            basis[i] = nbase + k
    for k, i in enumerate(art_rows):
        Astd[i, nbase + nslack + k] = 1.0
        basis[i] = nbase + nslack + k

    tab = _Tableau(Astd, brow, basis)
    iterations = 0
    if nart:
        phase1 = np.zeros(ncols)
        phase1[nbase + nslack :] = 1.0
        tab.set_costs(phase1)
        iterations += tab.bland(ncols, tol, max_iterations)
        tab._refresh()
        if tab.T[-1, -1] < -tol * (1.0 + float(np.abs(brow).sum())):
            raise LPInfeasibleError("no feasible point (phase-1 optimum positive)")
        # pivot lingering artificials out of the basis where possible
        for i in range(len(tab.basis)):
            if tab.basis[i] >= nbase + nslack:
                pivots = np.nonzero(np.abs(tab.T[i, : nbase + nslack]) > 1e-7)[0]
                if pivots.size:
                    _pivot(tab.T, i, int(pivots[0]))
                    tab.basis[i] = int(pivots[0])
        tab._refresh()
        keep = [i for i in range(len(tab.basis)) if tab.basis[i] < nbase + nslack]
        if len(keep) < len(tab.basis):  # rows stuck on artificials are redundant
            tab.drop_rows(keep)
        tab.drop_columns(nbase + nslack)
        ncols = nbase + nslack
        tab._refresh()

    phase2 = np.zeros(ncols)
    phase2[:nbase] = costs
    tab.set_costs(phase2)
    iterations += tab.bland(ncols, tol, max_iterations - iterations)
    tab._refresh()

    xcols = np.zeros(ncols)
    for i, j in enumerate(tab.basis):
        xcols[j] = tab.T[i, -1]
    x = shift.copy()
    for k, (j, sgn) in enumerate(col_var):
        x[j] += sgn * xcols[k]
    value = float(model.objective @ x)
    return LPSolution(value=value, x=x, iterations=iterations)
