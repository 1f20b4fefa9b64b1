"""Measurement simulability geometry.

Two pieces live here: the square decomposition that simulates noisy trine
measurements with the X and Z Paulis, and the 81-vertex polytope spanned by
Bob's finite measurement set together with the depolarizing shrink factor
``eta_B`` that makes every real three-outcome POVM a mixture of its vertices.

A real three-outcome POVM is represented in R^6 by the Bloch coordinates
``(t0, r0x, r0z, t1, r1x, r1z)`` of its first two effects; the third follows
from closure.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar
from scipy.spatial import ConvexHull

from ._lp import INF, EqualityLP, LPFailure

from .blochcore import (
    E1,
    E3,
    DomainError,
    QubitPovm,
    RealQubitOperator,
    Vec2,
    bob_finite_set,
    trine_axis,
    ZERO,
)

ETA2 = math.sqrt(3.0) - 1.0
IDENT3 = np.array([2.0, 0.0, 0.0])


# ------------------------------------------------------------- the square


@dataclass(frozen=True)
class SimulationStrategy:
    """Per trine setting: probability of each Pauli (X, Z) and response maps.

    ``choice[x][k]`` is the probability of measuring Pauli ``k`` (0 = X,
    1 = Z) when asked for trine setting ``x``; ``response[x][k][c]`` is the
    probability of answering 0 after Pauli outcome ``c``.  The leftover
    weight ``noise[x]`` answers with a fair coin.
    """

    eta: float
    choice: np.ndarray
    response: np.ndarray
    noise: np.ndarray

    def reconstruct(self, x: int) -> RealQubitOperator:
        """Effect for outcome 0 of trine setting ``x`` realised by the strategy."""
        out = RealQubitOperator(0.0)
        paulis = [E1, E3]
        for k in range(2):
            for c in range(2):
                sign = 1 if c == 0 else -1
                proj = RealQubitOperator(1.0, paulis[k] * sign)
                out = out + proj * (self.choice[x, k] * self.response[x, k, c])
        return out + RealQubitOperator(1.0) * self.noise[x]


def decompose_trine(eta: float) -> SimulationStrategy | None:
    """Simulate the noisy trines with sharp X/Z measurements, or ``None``.

    The Bloch vector ``eta * a_x`` is written as ``q_X s_X e1 + q_Z s_Z e3``
    with signs ``s`` and ``q_X + q_Z <= 1`` (the square spanned by the unit
    vectors); the remaining weight becomes coin-flip noise.
    """
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta={eta!r} outside [0, 1]")
    choice = np.zeros((3, 2))
    response = np.zeros((3, 2, 2))
    noise = np.zeros(3)
    for x in range(3):
        a = trine_axis(x) * eta
        w = np.array([abs(a.x1), abs(a.x3)])
        if w.sum() > 1.0 + 1e-12:
            return None
        w = w / max(w.sum(), 1.0)
        choice[x] = w
        signs = [a.x1 >= 0, a.x3 >= 0]
        for k in range(2):
            response[x, k] = [1.0, 0.0] if signs[k] else [0.0, 1.0]
        noise[x] = 1.0 - w.sum()
    return SimulationStrategy(eta, choice, response, noise)


# ----------------------------------------------------------- the polytope


@dataclass(frozen=True)
class PovmVertex:
    coords: np.ndarray
    base: int  # index into bob_finite_set(), or -1 for a degenerate vertex
    perm: tuple[int, ...]

    def povm(self) -> QubitPovm:
        return coords_to_povm(self.coords)


@dataclass(frozen=True)
class Facet:
    normal: np.ndarray
    offset: float


def povm_to_coords(povm: QubitPovm) -> np.ndarray:
    if povm.n_out > 3:
        raise DomainError("only POVMs with at most three outcomes")
    p = povm.padded(3)
    return np.concatenate([p[0].coords(), p[1].coords()])


def coords_to_povm(c: np.ndarray) -> QubitPovm:
    c = np.asarray(c, dtype=float)
    e0 = RealQubitOperator.from_coords(c[:3])
    e1 = RealQubitOperator.from_coords(c[3:])
    e2 = RealQubitOperator.from_coords(IDENT3 - c[:3] - c[3:])
    return QubitPovm((e0, e1, e2))


def vertex_set() -> list[PovmVertex]:
    """81 vertices: 6 relabelings of the 13 base POVMs plus 3 degenerate ones."""
    out = []
    for b in range(3):
        elems = [ZERO] * 3
        elems[b] = RealQubitOperator(2.0)
        out.append(PovmVertex(povm_to_coords(QubitPovm(tuple(elems))), -1, (b,)))
    for y, base in enumerate(bob_finite_set()):
        for perm in itertools.permutations(range(3)):
            out.append(PovmVertex(povm_to_coords(base.permuted(perm)), y, perm))
    return out


def vertex_matrix(vertices: Sequence[PovmVertex]) -> np.ndarray:
    return np.array([v.coords for v in vertices])


def trivial_coords(povm: QubitPovm, zeta_b: RealQubitOperator) -> np.ndarray:
    """Coordinates of ``{Tr(M_b zeta_b) I}``."""
    p = povm.padded(3)
    return np.concatenate([IDENT3 * p[0].expect(zeta_b), IDENT3 * p[1].expect(zeta_b)])


def membership(povm: QubitPovm, vertices: Sequence[PovmVertex]):
    """Convex weights on ``vertices`` reproducing ``povm``, or a separating functional.

    Returns ``(weights, None)`` when feasible.  Otherwise returns
    ``(None, (f, c))`` with ``f . v <= c`` on every vertex and
    ``f . povm > c``.
    """
    v = vertex_matrix(vertices)
    target = povm_to_coords(povm)
    n = len(v)
    res = linprog(np.zeros(n), A_eq=np.vstack([v.T, np.ones(n)]),
                  b_eq=np.append(target, 1.0), bounds=(0, None), method="highs")
    if res.status == 0:
        w = res.x
        if np.max(np.abs(v.T @ w - target)) <= 1e-9:
            return w, None
    # separating hyperplane: maximise f.target - c subject to f.v <= c, |f| <= 1
    cost = -np.append(target, -1.0)
    a_ub = np.hstack([v, -np.ones((n, 1))])
    sep = linprog(cost, A_ub=a_ub, b_ub=np.zeros(n),
                  bounds=[(-1, 1)] * 6 + [(None, None)], method="highs")
    if sep.status != 0 or -sep.fun <= 0:
        raise RuntimeError("membership LP failed to produce weights or a certificate")
    return None, (sep.x[:6], float(sep.x[6]))


class ShrinkLP:
    """Reusable LP for the largest depolarization keeping a POVM in the polytope.

    ``eta`` enters affinely, so one LP in ``(eta, weights)`` suffices:
    ``sum w_v v - eta (m - m0) = m0``, ``sum w_v = 1``, ``0 <= eta <= 1``.
    """

    def __init__(self, vertices: Sequence[PovmVertex], zeta_b: RealQubitOperator):
        self.v = vertex_matrix(vertices)
        self.zeta_b = zeta_b
        n = len(self.v)
        a = np.zeros((7, n + 1))
        a[:6, 1:] = self.v.T
        a[6, 1:] = 1.0
        cost = np.zeros(n + 1)
        cost[0] = -1.0
        self._lp = EqualityLP(a, cost, np.zeros(n + 1), np.r_[1.0, np.full(n, INF)])

    def solve(self, povm: QubitPovm) -> tuple[float, np.ndarray]:
        """Return ``(eta, weights)``."""
        m = povm_to_coords(povm)
        m0 = trivial_coords(povm, self.zeta_b)
        self._lp.set_column(np.append(-(m - m0), 0.0))
        self._lp.set_rhs(np.append(m0, 1.0))
        sol = self._lp.solve()
        if sol.status != "Optimal" or self._lp.residual(sol.x) > 1e-8:
            self._lp.clear_basis()
            sol = self._lp.solve()
            if sol.status != "Optimal" or self._lp.residual(sol.x) > 1e-8:
                raise LPFailure(f"shrink LP failed: {sol.status}")
        return float(sol.x[0]), sol.x[1:]

    def __call__(self, povm: QubitPovm) -> float:
        return self.solve(povm)[0]


def shrink_eta_for(povm: QubitPovm, zeta_b: RealQubitOperator,
                   vertices: Sequence[PovmVertex]) -> float:
    return ShrinkLP(vertices, zeta_b)(povm)


def projective_binary(angle: float) -> QubitPovm:
    u = Vec2.polar(angle)
    return QubitPovm((RealQubitOperator(1.0, u), RealQubitOperator(1.0, -u), ZERO))


def rank_one_ternary(angles: Sequence[float]) -> QubitPovm | None:
    """Rank-one three-outcome POVM with Bloch directions ``angles``.

    Traces solve ``sum t_b = 2`` and ``sum t_b n_b = 0``; returns ``None``
    unless every trace is strictly positive.
    """
    c = np.cos(angles)
    s = np.sin(angles)
    a = np.vstack([np.ones(3), c, s])
    try:
        t = np.linalg.solve(a, [2.0, 0.0, 0.0])
    except np.linalg.LinAlgError:
        return None
    if np.any(t <= 1e-9):
        return None
    return QubitPovm(tuple(RealQubitOperator(t[b], Vec2(t[b] * c[b], t[b] * s[b]))
                           for b in range(3)))


@dataclass(frozen=True)
class ShrinkResult:
    eta_b: float
    worst: QubitPovm
    worst_params: tuple[float, ...]
    kind: str  # "binary" or "ternary"
    n_evaluations: int


def _ternary_grid(step_deg: float) -> list[tuple[float, float, float]]:
    # sorted angles, all gaps < 180 deg (otherwise some trace is <= 0)
    n = int(round(360 / step_deg))
    out = []
    for i, j, k in itertools.combinations(range(n), 3):
        gaps = (j - i, k - j, n - k + i)
        if max(gaps) * step_deg < 180.0:
            out.append(tuple(math.radians(q * step_deg) for q in (i, j, k)))
    return out


def shrink_factor(zeta_b: RealQubitOperator, vertices: Sequence[PovmVertex] | None = None,
                  step_deg: float = 3.0, refine_top: int = 8) -> ShrinkResult:
    """Smallest ``shrink_eta_for`` over all real three-outcome POVMs.

    The per-POVM threshold is quasi-concave (its superlevel sets are convex
    because depolarization is linear in the POVM), so the minimum sits on
    extremal POVMs: projective binaries and rank-one ternaries.  A
    deterministic angle grid is scanned and the best candidates are polished
    with Nelder-Mead.
    """
    vertices = vertex_set() if vertices is None else vertices
    lp = ShrinkLP(vertices, zeta_b)
    n_eval = 0

    best_bin = (math.inf, 0.0)
    n_bin = int(round(180 / step_deg))
    bin_vals = []
    for i in range(n_bin):
        ang = math.radians(i * step_deg)
        val = lp(projective_binary(ang))
        n_eval += 1
        bin_vals.append((val, ang))
    bin_vals.sort()
    for val, ang in bin_vals[:refine_top]:
        r = minimize_scalar(lambda a: lp(projective_binary(a)),
                            bounds=(ang - math.radians(step_deg), ang + math.radians(step_deg)),
                            method="bounded", options={"xatol": 1e-7})
        n_eval += r.nfev
        cand = min((val, ang), (float(r.fun), float(r.x)))
        best_bin = min(best_bin, cand)

    def tern(angles):
        p = rank_one_ternary(angles)
        return 2.0 if p is None else lp(p)

    tern_vals = []
    for angles in _ternary_grid(step_deg):
        p = rank_one_ternary(angles)
        if p is None:
            continue
        tern_vals.append((lp(p), angles))
        n_eval += 1
    tern_vals.sort()
    best_tern = (math.inf, (0.0, 0.0, 0.0))
    for val, angles in tern_vals[:refine_top]:
        r = minimize(tern, np.array(angles), method="Nelder-Mead",
                     options={"xatol": 1e-7, "fatol": 1e-10, "initial_simplex":
                              np.array(angles) + math.radians(step_deg) * np.vstack(
                                  [np.zeros(3), np.eye(3)])})
        n_eval += r.nfev
        cand = min((val, tuple(angles)), (float(r.fun), tuple(float(a) for a in r.x)))
        best_tern = min(best_tern, cand)

    if best_bin[0] <= best_tern[0]:
        return ShrinkResult(best_bin[0], projective_binary(best_bin[1]), (best_bin[1],),
                            "binary", n_eval)
    return ShrinkResult(best_tern[0], rank_one_ternary(best_tern[1]), best_tern[1],
                        "ternary", n_eval)


# ------------------------------------------------------------ facet route


def facets(vertices: Sequence[PovmVertex], tol: float = 1e-9) -> list[Facet]:
    """All facets ``normal . x <= offset`` of the hull of ``vertices`` (Qhull).

    Qhull triangulates non-simplicial facets; the pieces are merged by
    grouping identical normalized hyperplanes.
    """
    v = vertex_matrix(vertices)
    hull = ConvexHull(v, qhull_options="Qt Qx")
    seen: dict[tuple, Facet] = {}
    for eq in hull.equations:
        scale = np.linalg.norm(eq[:-1])
        f = _refit(Facet(eq[:-1] / scale, float(-eq[-1] / scale)), v, tol=1e-7)
        key = tuple(np.round(np.append(f.normal, f.offset), 7))
        seen.setdefault(key, f)
    out = list(seen.values())
    for f in out:
        if np.max(v @ f.normal) - f.offset > tol:
            raise RuntimeError("facet violated by a vertex; hull is inconsistent")
    return out


def _refit(f: Facet, v: np.ndarray, tol: float) -> Facet:
    tight = v[np.abs(f.offset - v @ f.normal) <= tol]
    centered = tight - tight.mean(axis=0)
    _, _, vt = np.linalg.svd(centered)
    normal = vt[-1]
    if normal @ f.normal < 0:
        normal = -normal
    off = float(np.max(v @ normal))
    return Facet(normal, off)


def facet_matrix(fs: Sequence[Facet]) -> tuple[np.ndarray, np.ndarray]:
    return np.array([f.normal for f in fs]), np.array([f.offset for f in fs])


def facet_shrink_eta(povm: QubitPovm, zeta_b: RealQubitOperator, fs) -> float:
    """Largest ``eta <= 1`` keeping the depolarized POVM inside every facet."""
    normals, offsets = fs if isinstance(fs, tuple) else facet_matrix(fs)
    m = povm_to_coords(povm)
    m0 = trivial_coords(povm, zeta_b)
    d = normals @ (m - m0)
    room = offsets - normals @ m0
    pos = d > 1e-15
    if not np.any(pos):
        return 1.0
    return float(min(1.0, np.min(room[pos] / d[pos])))


def facet_shrink_factor(zeta_b: RealQubitOperator, fs, step_deg: float = 3.0,
                        refine_top: int = 8) -> float:
    """Same minimization as :func:`shrink_factor` using the facet inequalities."""
    fm = fs if isinstance(fs, tuple) else facet_matrix(fs)

    def tern(angles):
        p = rank_one_ternary(angles)
        return 2.0 if p is None else facet_shrink_eta(p, zeta_b, fm)

    def binf(a):
        return facet_shrink_eta(projective_binary(a), zeta_b, fm)

    n_bin = int(round(180 / step_deg))
    bins = sorted((binf(math.radians(i * step_deg)), math.radians(i * step_deg))
                  for i in range(n_bin))
    best = math.inf
    for val, ang in bins[:refine_top]:
        r = minimize_scalar(binf, bounds=(ang - math.radians(step_deg),
                                          ang + math.radians(step_deg)),
                            method="bounded", options={"xatol": 1e-7})
        best = min(best, val, float(r.fun))
    terns = sorted((tern(a), a) for a in _ternary_grid(step_deg))
    for val, angles in terns[:refine_top]:
        r = minimize(tern, np.array(angles), method="Nelder-Mead",
                     options={"xatol": 1e-7, "fatol": 1e-10, "initial_simplex":
                              np.array(angles) + math.radians(step_deg) * np.vstack(
                                  [np.zeros(3), np.eye(3)])})
        best = min(best, val, float(r.fun))
    return best


def facet_affine_rank(f: Facet, vertices: Sequence[PovmVertex], tol: float = 1e-9) -> int:
    """Number of affinely independent vertices on the facet (6 for a genuine facet)."""
    v = vertex_matrix(vertices)
    tight = v[np.abs(f.offset - v @ f.normal) <= tol]
    if len(tight) == 0:
        return 0
    return int(np.linalg.matrix_rank(tight - tight[0], tol=1e-8)) + 1


# ------------------------------------------------------------------ export


def export_vertices_csv(vertices: Iterable[PovmVertex], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["base", "perm", "t0", "r0x", "r0z", "t1", "r1x", "r1z"])
        for v in vertices:
            w.writerow([v.base, "".join(map(str, v.perm))] + [repr(float(c)) for c in v.coords])


def export_facets_csv(fs: Iterable[Facet], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f0", "f1", "f2", "f3", "f4", "f5", "offset"])
        for f in fs:
            w.writerow([repr(float(c)) for c in f.normal] + [repr(f.offset)])
