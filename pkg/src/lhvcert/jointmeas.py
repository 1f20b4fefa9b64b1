"""Joint measurability of POVMs.

For real qubit effects ``(t, r)`` positivity is the second-order cone
``t >= |r|``, so the parent-POVM search is a small conic program.  The
program is posed with a margin variable ``s`` (``t + s >= |r|``) and
minimised over ``s``: ``s* <= 0`` means a parent exists, ``s* > 0`` is a
quantitative certificate that none does.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import cvxpy as cp
import numpy as np

from .blochcore import DomainError, QubitPovm, RealQubitOperator, trine_povm

MAX_SETTINGS = 6
FEASIBLE_TOL = 1e-9
INFEASIBLE_TOL = 1e-7


def _as_matrix(e) -> np.ndarray:
    if isinstance(e, RealQubitOperator):
        return e.matrix()
    return np.asarray(e, dtype=float)


def _min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


@dataclass(frozen=True)
class ParentPovm:
    """Joint POVM labelled by outcome strings; absent labels are zero."""

    elements: Mapping[tuple[int, ...], np.ndarray]
    arities: tuple[int, ...]

    @property
    def dim(self) -> int:
        return next(iter(self.elements.values())).shape[0]

    def marginal(self, x: int, a: int) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for label, m in self.elements.items():
            if label[x] == a:
                out = out + m
        return out

    def marginal_residual(self, children: Sequence[Sequence]) -> float:
        """Max entry deviation between marginals and the child effects."""
        worst = 0.0
        for x, child in enumerate(children):
            for a, eff in enumerate(child):
                worst = max(worst, float(np.max(np.abs(self.marginal(x, a) - _as_matrix(eff)))))
        return worst

    def closure_residual(self) -> float:
        total = sum(self.elements.values())
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def min_eigenvalue(self) -> float:
        return min(_min_eig(m) for m in self.elements.values())

    def is_valid(self, children: Sequence[Sequence] | None = None, tol: float = 1e-9) -> bool:
        ok = self.min_eigenvalue() >= -tol and self.closure_residual() <= tol
        if children is not None:
            ok = ok and self.marginal_residual(children) <= tol
        return ok


@dataclass(frozen=True)
class JMResult:
    status: str  # "feasible", "infeasible" or "unknown"
    margin: float
    parent: ParentPovm | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def jm_feasible(povms: Sequence[QubitPovm], solver: str = "CLARABEL") -> JMResult:
    """Search for a parent POVM of real qubit POVMs.

    ``margin`` is the optimal ``s``; an infeasible verdict is returned only
    when ``s > INFEASIBLE_TOL``.
    """
    n = len(povms)
    if n == 0:
        raise DomainError("need at least one POVM")
    if n > MAX_SETTINGS:
        raise DomainError(f"{n} settings exceeds the limit of {MAX_SETTINGS}")
    arities = tuple(p.n_out for p in povms)
    labels = list(itertools.product(*(range(k) for k in arities)))
    k = len(labels)
    t = cp.Variable(k)
    r = cp.Variable((k, 2))
    s = cp.Variable()
    cons = [cp.SOC(t[i] + s, r[i]) for i in range(k)]
    for x, p in enumerate(povms):
        for a, eff in enumerate(p):
            idx = [i for i, lab in enumerate(labels) if lab[x] == a]
            cons.append(cp.sum(t[idx]) == eff.t)
            cons.append(cp.sum(r[idx, 0]) == eff.r.x1)
            cons.append(cp.sum(r[idx, 1]) == eff.r.x3)
    prob = cp.Problem(cp.Minimize(s), cons)
    try:
        prob.solve(solver=solver)
    except cp.SolverError:
        return JMResult("unknown", math.nan)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return JMResult("unknown", math.nan)
    margin = float(s.value)
    if margin > INFEASIBLE_TOL:
        return JMResult("infeasible", margin)
    if margin > FEASIBLE_TOL:
        return JMResult("unknown", margin)
    elements = {}
    for i, lab in enumerate(labels):
        op = RealQubitOperator.from_coords([t.value[i], r.value[i, 0], r.value[i, 1]])
        elements[lab] = op.matrix()
    parent = ParentPovm(elements, arities)
    if not parent.is_valid(list(povms), tol=1e-7):
        return JMResult("unknown", margin, parent)
    return JMResult("feasible", margin, parent)


@dataclass(frozen=True)
class Threshold:
    eta: float
    lower: float  # certified feasible
    upper: float  # certified (or at least not certified feasible) infeasible


def jm_threshold(family: Callable[[float], Sequence[QubitPovm]], tol: float = 1e-5,
                 lo: float = 0.0, hi: float = 1.0) -> Threshold:
    """Bisect for the largest noise parameter at which ``family`` stays compatible.

    If the family is compatible on the whole interval the upper end is
    returned with ``upper == hi``.
    """
    if not jm_feasible(family(lo)).feasible:
        raise DomainError(f"family not compatible at the lower end {lo}")
    if jm_feasible(family(hi)).feasible:
        return Threshold(hi, hi, hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if jm_feasible(family(mid)).feasible:
            lo = mid
        else:
            hi = mid
    return Threshold(0.5 * (lo + hi), lo, hi)


def trine_pairs(eta: float) -> list[QubitPovm]:
    return trine_povm(eta)[:2]


def trine_triple(eta: float) -> list[QubitPovm]:
    return trine_povm(eta)


@dataclass(frozen=True)
class HollowReport:
    eta: float
    pairs: dict[tuple[int, int], bool]
    triple: bool

    @property
    def is_hollow(self) -> bool:
        return all(self.pairs.values()) and not self.triple


def hollow_triangle_check(eta: float) -> HollowReport:
    trines = trine_povm(eta)
    pairs = {(i, j): jm_feasible([trines[i], trines[j]]).feasible
             for i, j in itertools.combinations(range(3), 2)}
    return HollowReport(eta, pairs, jm_feasible(trines).feasible)


# ------------------------------------------------------------ lossy sets


@dataclass(frozen=True)
class LossyPovmSet:
    """Measurements ``{eta M_x, I - eta M_x}`` built from base effects ``M_x``."""

    base: tuple[np.ndarray, ...] = field(repr=False)
    eta: float

    def povm(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        m = self.eta * self.base[x]
        return m, np.eye(m.shape[0]) - m

    def povms(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [self.povm(x) for x in range(len(self.base))]

    def is_valid(self, tol: float = 1e-10) -> bool:
        return all(_min_eig(e) >= -tol for p in self.povms() for e in p)


def _check_effect(m: np.ndarray, tol: float = 1e-10) -> None:
    if not np.allclose(m, m.T, atol=tol):
        raise DomainError("base effect is not symmetric")
    ev = np.linalg.eigvalsh(m)
    if ev[0] < -tol or ev[-1] > 1 + tol:
        raise DomainError("base effect is not between 0 and I")


def lossy_set(base: Sequence, eta: float) -> LossyPovmSet:
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta={eta!r} outside [0, 1]")
    mats = tuple(_as_matrix(m) for m in base)
    for m in mats:
        _check_effect(m)
    return LossyPovmSet(mats, eta)


def parent_lossy(base: Sequence) -> ParentPovm:
    """Explicit parent of ``lossy_set(base, 1/n)`` for ``n = len(base)``.

    Nonzero only on strings with a single 0 (weight ``M_x / n``) and on the
    all-ones string (``sum_x (I - M_x) / n``).
    """
    mats = [_as_matrix(m) for m in base]
    n = len(mats)
    if n == 0:
        raise DomainError("need at least one base effect")
    for m in mats:
        _check_effect(m)
    d = mats[0].shape[0]
    elements = {}
    for x, m in enumerate(mats):
        label = tuple(0 if k == x else 1 for k in range(n))
        elements[label] = m / n
    elements[(1,) * n] = sum(np.eye(d) - m for m in mats) / n
    return ParentPovm(elements, (2,) * n)
