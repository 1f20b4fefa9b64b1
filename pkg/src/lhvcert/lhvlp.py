"""Largest trine visibility admitting a local model on a finite Bob set.

Bob's continuous POVMs are replaced by the 13 finite ones at the cost of
depolarizing them with ``eta_B`` towards ``zeta_B``.  That noise is pushed
into the state, giving the unit-trace surrogate

    chi = rho / eta_B + (eta_B - 1) / eta_B * rho_A (x) zeta_B,

and the question becomes a single LP in ``(eta, w)``: Alice's three binary
settings are determinized (8 strategies ``lam``) while Bob keeps a free
response table ``w[lam, y, b] >= 0`` with ``sum_b w[lam, y, b]`` independent
of ``y``.  The behaviour is affine in ``eta``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse

from ._lp import INF, EqualityLP, LPFailure
from .blochcore import (
    I2,
    X,
    Z,
    Behavior,
    DomainError,
    PseudoState,
    QubitPovm,
    RealQubitOperator,
    Vec2,
    bob_finite_set,
    partial_trace,
    povm_stack,
    schmidt_state,
    trine_axis,
    zeta,
)
from .steer import BellFunctional

# Published shrink factors rounded down; any eta_B at or below the true shrink factor is sound.
SHRINK = {0.0: 0.9268, 5.0 / 6.0: 0.8900}
ALPHAS = (0.0, 5.0 / 6.0)
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class DeterministicStrategy:
    alice: tuple[int, ...]
    bob: tuple[int, ...] = ()


@dataclass(frozen=True)
class LocalModel:
    """``p(ab|xy) = sum_lam [a == alice[lam][x]] w[lam, y, b]``."""

    alice: tuple[tuple[int, ...], ...]
    tables: np.ndarray = field(repr=False)  # (n_lam, ny, nb)
    n_out_a: int = 2

    @property
    def weights(self) -> np.ndarray:
        return self.tables[:, 0, :].sum(axis=1)

    def table(self) -> np.ndarray:
        n_lam, ny, nb = self.tables.shape
        nx = len(self.alice[0])
        p = np.zeros((nx, ny, self.n_out_a, nb))
        for lam, strat in enumerate(self.alice):
            for x, a in enumerate(strat):
                p[x, :, a, :] += self.tables[lam]
        return p

    def residual(self, beh: Behavior | np.ndarray) -> float:
        p = beh.p if isinstance(beh, Behavior) else np.asarray(beh)
        return float(np.max(np.abs(self.table() - p)))

    def invariant_residual(self) -> float:
        """Largest violation of positivity, normalisation or Bob no-signalling."""
        w = self.tables
        marg = w.sum(axis=2)
        return float(max(
            max(0.0, -w.min()),
            np.max(np.abs(marg - marg[:, :1])),
            abs(self.weights.sum() - 1.0),
        ))


def chi(theta: float, phi: float, eta_b: float, zeta_b: RealQubitOperator) -> PseudoState:
    if not 0.0 < eta_b <= 1.0:
        raise DomainError(f"eta_B={eta_b!r} must be in (0, 1]")
    rho = schmidt_state(theta, phi).m
    rho_a = partial_trace(rho, "A")
    return PseudoState(rho / eta_b + (eta_b - 1.0) / eta_b * np.kron(rho_a, zeta_b.matrix()))


class MaxEtaLP:
    """Reusable LP for ``max eta`` over local models of binary-Alice behaviours.

    Alice's settings are ``(I + (-1)^a eta u_x.sigma)/2`` for planar axes
    ``u_x``; Bob's POVMs are arbitrary (zero padded to a common arity).
    """

    def __init__(self, alice_axes: Sequence[Vec2] | None = None,
                 bob: Sequence[QubitPovm] | None = None):
        self.axes = np.array([[u.x1, u.x3] for u in
                              (alice_axes or [trine_axis(x) for x in range(3)])])
        self.bob = list(bob) if bob is not None else bob_finite_set()
        self.bob_mats = povm_stack(self.bob)
        nx = len(self.axes)
        ny, nb = self.bob_mats.shape[:2]
        self.nx, self.ny, self.nb = nx, ny, nb
        self.strategies = tuple(itertools.product((0, 1), repeat=nx))
        n_lam = len(self.strategies)
        self.n_lam = n_lam
        n_w = n_lam * ny * nb

        def widx(lam, y, b):
            return 1 + (lam * ny + y) * nb + b

        rows, cols, vals = [], [], []
        r = 0
        for x, y, a, b in itertools.product(range(nx), range(ny), range(2), range(nb)):
            for lam, strat in enumerate(self.strategies):
                if strat[x] == a:
                    rows.append(r)
                    cols.append(widx(lam, y, b))
                    vals.append(1.0)
            r += 1
        self.n_beh = r
        for lam in range(n_lam):
            for y in range(1, ny):
                for b in range(nb):
                    rows += [r, r]
                    cols += [widx(lam, y, b), widx(lam, 0, b)]
                    vals += [1.0, -1.0]
                r += 1
        a = sparse.coo_matrix((vals, (rows, cols)), shape=(r, 1 + n_w))
        cost = np.zeros(1 + n_w)
        cost[0] = -1.0
        upper = np.full(1 + n_w, INF)
        upper[0] = 1.0
        self._lp = EqualityLP(a, cost, np.zeros(1 + n_w), upper)
        self._n_rows = r
        # sign pattern of Alice's outcomes
        self._sgn = np.array([1.0, -1.0])

    def coefficients(self, state) -> tuple[np.ndarray, np.ndarray]:
        """Behaviour ``p[x,y,a,b] = c0 + eta * c1`` for ``state``."""
        m = state.m if isinstance(state, PseudoState) else np.asarray(state)
        s = np.array([I2 / 2, X / 2, Z / 2])
        t = np.einsum("ski,yblj,ijkl->syb", s, self.bob_mats, m.reshape(2, 2, 2, 2))
        c0 = np.broadcast_to(t[0][None, :, None, :], (self.nx, self.ny, 2, self.nb))
        dirn = np.einsum("xk,kyb->xyb", self.axes, t[1:])
        c1 = dirn[:, :, None, :] * self._sgn[None, None, :, None]
        return np.array(c0), c1

    def behavior(self, state, eta: float) -> Behavior:
        c0, c1 = self.coefficients(state)
        return Behavior(c0 + eta * c1, (2,) * self.nx, tuple(p.n_out for p in self.bob))

    def solve(self, state) -> tuple[float, LocalModel]:
        c0, c1 = self.coefficients(state)
        col = np.zeros(self._n_rows)
        col[: self.n_beh] = -c1.ravel()
        rhs = np.zeros(self._n_rows)
        rhs[: self.n_beh] = c0.ravel()
        self._lp.set_column(col)
        self._lp.set_rhs(rhs)
        sol = self._lp.solve()
        if not self._accept(sol, c0, c1):
            # retry once from scratch with tightened tolerances
            self._lp.clear_basis()
            self._lp.tighten(1e-10)
            sol = self._lp.solve()
            self._lp.tighten(1e-9)
            if not self._accept(sol, c0, c1):
                raise LPFailure(f"max-eta LP failed: status {sol.status}")
        eta = float(sol.x[0])
        return eta, self._model(sol.x)

    def _model(self, x: np.ndarray) -> LocalModel:
        tables = np.clip(x[1:].reshape(self.n_lam, self.ny, self.nb), 0.0, None)
        return LocalModel(self.strategies, tables)

    def _accept(self, sol, c0, c1) -> bool:
        if sol.status != "Optimal":
            return False
        if self._lp.residual(sol.x) > RESIDUAL_TOL:
            return False
        model = self._model(sol.x)
        return model.residual(c0 + sol.x[0] * c1) <= RESIDUAL_TOL


@lru_cache(maxsize=None)
def _default_lp() -> MaxEtaLP:
    return MaxEtaLP()


def max_eta_lp(state, bob: Sequence[QubitPovm] | None = None) -> tuple[float, LocalModel]:
    """Largest trine visibility for which ``state`` with ``bob`` has a local model."""
    lp = _default_lp() if bob is None else MaxEtaLP(bob=bob)
    return lp.solve(state)


def eta_at(theta: float, phi: float, alpha: float, eta_b: float | None = None,
           lp: MaxEtaLP | None = None) -> float:
    eta_b = SHRINK[alpha] if eta_b is None else eta_b
    lp = lp or _default_lp()
    return lp.solve(chi(theta, phi, eta_b, zeta(alpha)))[0]


@dataclass(frozen=True)
class EtaBar:
    value: float
    alpha: float
    per_alpha: dict[float, float]


def eta_bar(theta: float, phi: float, shrink: dict[float, float] | None = None) -> EtaBar:
    """``max`` over ``alpha in {0, 5/6}`` of the LP visibility."""
    shrink = SHRINK if shrink is None else shrink
    vals = {a: eta_at(theta, phi, a, eta_b) for a, eta_b in shrink.items()}
    best = max(vals, key=lambda a: vals[a])
    return EtaBar(vals[best], best, vals)


# -------------------------------------------------------- generic locality


def local_check(beh: Behavior, tol: float = 1e-9) -> LocalModel | BellFunctional:
    """A local model for ``beh`` or a Bell functional it violates.

    Alice is determinized; Bob keeps response tables.  When infeasible, a
    separating functional ``c`` in ``[-1, 1]`` is found by maximizing
    ``c.p - beta`` subject to ``beta`` upper bounding ``c`` on every local
    point (Bob's best response per setting is linearized with ``u``).
    """
    from scipy.optimize import linprog

    p = beh.p
    nx, ny, na, nb = p.shape
    strategies = list(itertools.product(range(na), repeat=nx))
    n_lam = len(strategies)
    n_w = n_lam * ny * nb
    rows = []
    for x, y, a, b in itertools.product(range(nx), range(ny), range(na), range(nb)):
        row = np.zeros(n_w)
        for lam, s in enumerate(strategies):
            if s[x] == a:
                row[(lam * ny + y) * nb + b] = 1.0
        rows.append(row)
    for lam in range(n_lam):
        for y in range(1, ny):
            row = np.zeros(n_w)
            row[(lam * ny + y) * nb:(lam * ny + y + 1) * nb] = 1.0
            row[(lam * ny) * nb:(lam * ny + 1) * nb] = -1.0
            rows.append(row)
    a_eq = np.array(rows)
    b_eq = np.concatenate([p.ravel(), np.zeros(len(rows) - p.size)])
    res = linprog(np.zeros(n_w), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status == 0:
        model = LocalModel(tuple(strategies), res.x.reshape(n_lam, ny, nb), n_out_a=na)
        if model.residual(p) <= RESIDUAL_TOL:
            return model

    # separation: variables c (nx ny na nb), u (n_lam ny), beta
    n_c = p.size
    n_u = n_lam * ny
    nvar = n_c + n_u + 1
    a_ub, b_ub = [], []
    for lam, s in enumerate(strategies):
        for y in range(ny):
            for b in range(nb):
                row = np.zeros(nvar)
                for x in range(nx):
                    row[np.ravel_multi_index((x, y, s[x], b), p.shape)] = 1.0
                row[n_c + lam * ny + y] = -1.0
                a_ub.append(row)
                b_ub.append(0.0)
        row = np.zeros(nvar)
        row[n_c + lam * ny: n_c + (lam + 1) * ny] = 1.0
        row[-1] = -1.0
        a_ub.append(row)
        b_ub.append(0.0)
    cost = np.concatenate([-p.ravel(), np.zeros(n_u), [1.0]])
    bounds = [(-1, 1)] * n_c + [(None, None)] * (n_u + 1)
    sep = linprog(cost, A_ub=np.array(a_ub), b_ub=b_ub, bounds=bounds, method="highs")
    if sep.status != 0:
        raise LPFailure(f"separation LP failed: {sep.message}")
    if -sep.fun <= tol:
        raise LPFailure("behaviour is neither certified local nor separated")
    f = BellFunctional(sep.x[:n_c].reshape(p.shape))
    return BellFunctional(f.coefficients, known_local_bound=f.local_bound())
