"""Thin wrapper around a persistent HiGHS model.

The sweeps solve tens of thousands of LPs that share a constraint matrix
and differ in a single column and the right-hand side; keeping one model
alive lets HiGHS warm start from the previous basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import highspy
import numpy as np
from scipy import sparse

INF = highspy.kHighsInf


class LPFailure(RuntimeError):
    pass


@dataclass
class LPSolution:
    x: np.ndarray
    objective: float
    status: str
    row_dual: np.ndarray


class EqualityLP:
    """``min c.x`` s.t. ``A x = b``, ``lower <= x <= upper``.

    Column ``var_col`` is the only one whose coefficients change between
    solves (see :meth:`set_column`).
    """

    def __init__(self, a: sparse.spmatrix | np.ndarray, c: np.ndarray,
                 lower: np.ndarray, upper: np.ndarray, var_col: int = 0,
                 tol: float = 1e-9):
        a = sparse.csc_matrix(a, dtype=float)
        self.shape = a.shape
        self.var_col = var_col
        # keep explicit entries in the variable column so changeCoeff never
        # has to grow the sparse structure
        dense_col = a[:, var_col].toarray().ravel()
        dense_col[dense_col == 0.0] = 1.0
        a = a.tolil()
        a[:, var_col] = dense_col[:, None]
        a = sparse.csc_matrix(a)
        rest = a.tolil()
        rest[:, var_col] = 0.0
        self._rest = sparse.csr_matrix(rest)
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("primal_feasibility_tolerance", tol)
        self.h.setOptionValue("dual_feasibility_tolerance", tol)
        lp = highspy.HighsLp()
        lp.num_col_, lp.num_row_ = a.shape[1], a.shape[0]
        lp.col_cost_ = np.asarray(c, dtype=float)
        lp.col_lower_ = np.asarray(lower, dtype=float)
        lp.col_upper_ = np.asarray(upper, dtype=float)
        lp.row_lower_ = np.zeros(a.shape[0])
        lp.row_upper_ = np.zeros(a.shape[0])
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = a.indptr
        lp.a_matrix_.index_ = a.indices
        lp.a_matrix_.value_ = a.data
        self.h.passModel(lp)
        self._rows = np.arange(a.shape[0], dtype=np.int32)
        self._col = dense_col.copy()
        self._b = np.zeros(a.shape[0])

    def set_column(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        for i in np.flatnonzero(values != self._col):
            self.h.changeCoeff(int(i), self.var_col, float(values[i]))
        self._col = values.copy()

    def set_rhs(self, b: np.ndarray) -> None:
        b = np.asarray(b, dtype=float)
        self.h.changeRowsBounds(len(b), self._rows, b, b)
        self._b = b.copy()

    def tighten(self, tol: float) -> None:
        self.h.setOptionValue("primal_feasibility_tolerance", tol)
        self.h.setOptionValue("dual_feasibility_tolerance", tol)

    def residual(self, x: np.ndarray) -> float:
        ax = self._rest @ x + self._col * x[self.var_col]
        return float(np.max(np.abs(ax - self._b)))

    def solve(self) -> LPSolution:
        self.h.run()
        status = self.h.modelStatusToString(self.h.getModelStatus())
        sol = self.h.getSolution()
        x = np.array(sol.col_value)
        obj = self.h.getInfo().objective_function_value
        return LPSolution(x, float(obj), status, np.array(sol.row_dual))

    def clear_basis(self) -> None:
        self.h.clearSolver()
