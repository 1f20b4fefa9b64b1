"""N-setting two-outcome Bell functionals and lossy-measurement violations.

Functionals are kept in Collins-Gisin form: coefficients of Alice's
marginals ``p_A(0|x)``, Bob's marginals ``p_B(0|y)`` and the joint
``p(00|xy)``.  Alice is the lossy party: her effects are
``{eta P_x, I - eta P_x}`` for projectors ``P_x``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .blochcore import Behavior, DomainError
from .jointmeas import ParentPovm, lossy_set, parent_lossy

MAX_ENUM_SETTINGS = 6


@dataclass(frozen=True)
class DenseOperator:
    """Real symmetric matrix on a ``dim_a * dim_b`` bipartite space."""

    m: np.ndarray = field(repr=False)
    dims: tuple[int, int]

    def __post_init__(self) -> None:
        m = np.array(self.m, dtype=float)
        da, db = self.dims
        if m.shape != (da * db, da * db):
            raise DomainError(f"operator shape {m.shape} does not match dims {self.dims}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def from_vector(cls, psi: np.ndarray, dims: tuple[int, int]) -> "DenseOperator":
        psi = np.asarray(psi, dtype=float)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi), dims)

    @property
    def trace(self) -> float:
        return float(np.trace(self.m))

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.m - self.m.T)) <= tol)

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.m + self.m.T))

    def is_psd(self, tol: float = 1e-10) -> bool:
        return self.is_symmetric() and self.eigvals()[0] >= -tol

    def is_state(self, tol: float = 1e-10) -> bool:
        return self.is_psd(tol) and abs(self.trace - 1.0) <= tol

    def expect(self, a: np.ndarray, b: np.ndarray) -> float:
        """``Tr(rho A (x) B)``."""
        return float(np.trace(self.m @ np.kron(a, b)))


@dataclass(frozen=True)
class CgFunctional:
    """``sum_x alice[x] p_A(0|x) + sum_y bob[y] p_B(0|y) + sum joint[x,y] p(00|xy)``."""

    alice: np.ndarray
    bob: np.ndarray
    joint: np.ndarray

    def __post_init__(self) -> None:
        a, b, j = (np.array(v, dtype=float) for v in (self.alice, self.bob, self.joint))
        if j.shape != (a.size, b.size):
            raise DomainError(f"joint block {j.shape} vs marginals ({a.size}, {b.size})")
        for v in (a, b, j):
            v.setflags(write=False)
        object.__setattr__(self, "alice", a)
        object.__setattr__(self, "bob", b)
        object.__setattr__(self, "joint", j)

    @property
    def n_settings(self) -> tuple[int, int]:
        return self.joint.shape

    def transpose(self) -> "CgFunctional":
        """Same functional with the parties exchanged."""
        return CgFunctional(self.bob, self.alice, self.joint.T)

    def value_from(self, pa: np.ndarray, pb: np.ndarray, pab: np.ndarray) -> float:
        return float(self.alice @ pa + self.bob @ pb + np.sum(self.joint * pab))

    def value(self, beh: Behavior) -> float:
        """Evaluate on a two-outcome behaviour (outcome 0 is the counted one)."""
        p = beh.p
        if p.shape[:2] != self.joint.shape or p.shape[2:] != (2, 2):
            raise DomainError(f"behaviour shape {p.shape} does not fit the functional")
        pab = p[:, :, 0, 0]
        pa = p[:, 0, 0, :].sum(axis=1)
        pb = p[0, :, :, 0].sum(axis=1)
        return self.value_from(pa, pb, pab)


def inn22(n: int) -> CgFunctional:
    """The Collins-Gisin ``I_NN22`` family, local bound 0.

    With 1-based indices the joint coefficient is +1 for ``x + y <= N + 1``,
    -1 for ``x + y = N + 2`` and 0 otherwise; Alice's marginal weights are
    ``-(N - x)`` and Bob pays ``-1`` on his first setting only.
    """
    if n < 2:
        raise DomainError("need at least two settings")
    joint = np.zeros((n, n))
    for i, j in itertools.product(range(1, n + 1), repeat=2):
        if i + j <= n + 1:
            joint[i - 1, j - 1] = 1.0
        elif i + j == n + 2:
            joint[i - 1, j - 1] = -1.0
    alice = -np.array([n - i for i in range(1, n + 1)], dtype=float)
    bob = np.zeros(n)
    bob[0] = -1.0
    return CgFunctional(alice, bob, joint)


def chsh_cg() -> CgFunctional:
    """CHSH as ``(CHSH - 2) / 4`` in Collins-Gisin form (local bound 0)."""
    return CgFunctional([-1.0, 0.0], [-1.0, 0.0], [[1.0, 1.0], [1.0, -1.0]])


def local_bound(f: CgFunctional) -> float:
    """Exact local maximum over all deterministic strategy pairs."""
    nx, ny = f.n_settings
    if max(nx, ny) > MAX_ENUM_SETTINGS:
        raise DomainError(f"enumeration limited to {MAX_ENUM_SETTINGS} settings per party")
    best = -math.inf
    for sa in itertools.product((0.0, 1.0), repeat=nx):
        a = np.array(sa)
        # Bob's best response is independent per setting
        per_y = f.bob + a @ f.joint
        best = max(best, float(f.alice @ a + np.sum(np.maximum(per_y, 0.0))))
    return best


def _ptrace_a(m: np.ndarray, da: int, db: int) -> np.ndarray:
    return np.einsum("ijik->jk", m.reshape(da, db, da, db))


def _ptrace_b(m: np.ndarray, da: int, db: int) -> np.ndarray:
    return np.einsum("ijkj->ik", m.reshape(da, db, da, db))


def lossy_behavior(rho: DenseOperator, base_a: Sequence[np.ndarray],
                   bob: Sequence[np.ndarray], eta: float) -> Behavior:
    """``p(ab|xy) = Tr(rho M^eta_{a|x} (x) M_{b|y})`` with Alice's lossy effects."""
    da, db = rho.dims
    alice = lossy_set(base_a, eta).povms()
    bob_pairs = []
    for e in bob:
        e = np.asarray(e, dtype=float)
        if e.shape != (db, db):
            raise DomainError("Bob effect has the wrong dimension")
        ev = np.linalg.eigvalsh(e)
        if ev[0] < -1e-10 or ev[-1] > 1 + 1e-10:
            raise DomainError("Bob effect is not between 0 and I")
        bob_pairs.append((e, np.eye(db) - e))
    if alice[0][0].shape != (da, da):
        raise DomainError("Alice effect has the wrong dimension")
    p = np.array([[[[rho.expect(ma, mb) for mb in pb] for ma in pa] for pb in bob_pairs]
                  for pa in alice])
    return Behavior(p, (2,) * len(alice), (2,) * len(bob_pairs))


def _pos_projector(c: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (c + c.T))
    vp = v[:, w > 0]
    return vp @ vp.T


def _random_projector(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(d, d))
    return _pos_projector(0.5 * (g + g.T))


def bell_operator(f: CgFunctional, pa: Sequence[np.ndarray], pb: Sequence[np.ndarray],
                  eta: float) -> np.ndarray:
    da, db = pa[0].shape[0], pb[0].shape[0]
    ia, ib = np.eye(da), np.eye(db)
    out = np.zeros((da * db, da * db))
    for x, p in enumerate(pa):
        out += eta * f.alice[x] * np.kron(p, ib)
        for y, q in enumerate(pb):
            if f.joint[x, y] != 0.0:
                out += eta * f.joint[x, y] * np.kron(p, q)
    for y, q in enumerate(pb):
        out += f.bob[y] * np.kron(ia, q)
    return out


@dataclass(frozen=True)
class SeesawResult:
    n: int
    eta: float
    value: float
    local_bound: float
    state: DenseOperator | None
    alice_base: tuple[np.ndarray, ...]
    bob: tuple[np.ndarray, ...]
    seed: int
    restarts: int
    history: tuple[float, ...] = ()

    @property
    def margin(self) -> float:
        return self.value - self.local_bound

    @property
    def found(self) -> bool:
        return self.margin > 1e-9

    @property
    def verdict(self) -> str:
        return "FOUND" if self.found else "NOT-FOUND"

    def alice_effects(self) -> list[np.ndarray]:
        return [self.eta * p for p in self.alice_base]

    def behavior(self) -> Behavior:
        return lossy_behavior(self.state, self.alice_base, self.bob, self.eta)


def _seesaw_run(f: CgFunctional, eta: float, da: int, db: int, rng: np.random.Generator,
                tol: float, max_iter: int):
    nx, ny = f.n_settings
    pa = [_random_projector(da, rng) for _ in range(nx)]
    pb = [_random_projector(db, rng) for _ in range(ny)]
    psi = None
    prev = -math.inf
    history = []
    for _ in range(max_iter):
        w, v = np.linalg.eigh(bell_operator(f, pa, pb, eta))
        psi = v[:, -1]
        rho = np.outer(psi, psi)
        val_state = w[-1]
        # Alice: coefficient operator of each P_x
        for x in range(nx):
            cb = f.alice[x] * np.eye(db) + sum(f.joint[x, y] * pb[y] for y in range(ny))
            pa[x] = _pos_projector(_ptrace_b(rho @ np.kron(np.eye(da), cb), da, db))
        for y in range(ny):
            ca = f.bob[y] * np.eye(da) + eta * sum(f.joint[x, y] * pa[x] for x in range(nx))
            pb[y] = _pos_projector(_ptrace_a(rho @ np.kron(ca, np.eye(db)), da, db))
        val = float(psi @ bell_operator(f, pa, pb, eta) @ psi)
        if val < prev - 1e-10 or val < val_state - 1e-10:
            raise AssertionError(f"see-saw objective decreased: {prev} -> {val}")
        history.append(val)
        if val - prev <= tol:
            break
        prev = val
    return history[-1], psi, pa, pb, history


def seesaw(n: int, eta: float | None = None, restarts: int = 50, tol: float = 1e-12,
           seed: int = 0, dim: int | None = None, functional: CgFunctional | None = None,
           max_iter: int = 2000) -> SeesawResult:
    """Search for an ``I_NN22`` violation with lossy Alice by alternating optimisation.

    The state step takes the top eigenvector of the Bell operator; each
    measurement step takes the projector onto the positive part of the
    setting's coefficient operator.  The objective never decreases.  A
    non-positive margin after all restarts is reported as NOT-FOUND.
    """
    if n < 3 and functional is None:
        raise DomainError("the lossy construction needs N >= 3")
    eta = 1.0 / (n - 1) if eta is None else eta
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"eta={eta!r} outside (0, 1]")
    f = inn22(n) if functional is None else functional
    d = n if dim is None else dim
    lb = local_bound(f)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        val, psi, pa, pb, hist = _seesaw_run(f, eta, d, d, rng, tol, max_iter)
        if best is None or val > best[0]:
            best = (val, psi, pa, pb, hist)
    val, psi, pa, pb, hist = best
    state = DenseOperator.from_vector(psi, (d, d))
    res = SeesawResult(n, eta, val, lb, state, tuple(pa), tuple(pb), seed, restarts, tuple(hist))
    recheck = f.value(res.behavior())
    if abs(recheck - val) > 1e-9:
        raise AssertionError(f"witness re-evaluation {recheck} differs from {val}")
    return res


# ------------------------------------------------------------ compatibility


@dataclass(frozen=True)
class SubsetCertificate:
    subset: tuple[int, ...]
    parent: ParentPovm
    marginal_residual: float
    closure_residual: float
    min_eigenvalue: float

    def passed(self, tol: float = 1e-12) -> bool:
        return (self.marginal_residual <= tol and self.closure_residual <= tol
                and self.min_eigenvalue >= -tol)


@dataclass(frozen=True)
class CompatReport:
    n: int
    eta: float
    certificates: tuple[SubsetCertificate, ...]

    @property
    def passed(self) -> bool:
        return len(self.certificates) == self.n and all(c.passed() for c in self.certificates)


def compat_certificate(alice_base: Sequence[np.ndarray], n: int | None = None,
                       eta: float | None = None) -> CompatReport:
    """Explicit parents for every ``(N-1)``-subset of Alice's lossy measurements.

    The parent of ``lossy_set(subset, 1/(N-1))`` is built and its marginals
    compared with the lossy effects at ``eta`` (default ``1/(N-1)``).
    """
    base = [np.asarray(m, dtype=float) for m in alice_base]
    n = len(base) if n is None else n
    if len(base) != n or n < 2:
        raise DomainError(f"expected {n} base effects, got {len(base)}")
    eta = 1.0 / (n - 1) if eta is None else eta
    certs = []
    for subset in itertools.combinations(range(n), n - 1):
        sub = [base[x] for x in subset]
        parent = parent_lossy(sub)
        children = lossy_set(sub, eta).povms()
        certs.append(SubsetCertificate(
            subset,
            parent,
            parent.marginal_residual(children),
            parent.closure_residual(),
            parent.min_eigenvalue(),
        ))
    return CompatReport(n, eta, tuple(certs))


# ------------------------------------------------------------------ export


def export_witness_csv(res: SeesawResult, path) -> Path:
    """Flat dump of a see-saw witness.

    One row per number: ``kind, index, row, col, value`` where ``kind`` is
    ``psi`` (``index`` and ``col`` unused, ``row`` = basis index of the
    ``d*d`` vector), ``alice`` (base projector ``P_x`` with ``index = x``)
    or ``bob`` (effect ``M_{0|y}`` with ``index = y``).  A leading ``meta``
    block records ``n, eta, value, local_bound, seed``.
    """
    path = Path(path)
    psi = np.linalg.eigh(res.state.m)[1][:, -1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["kind", "index", "row", "col", "value"])
        for key in ("n", "eta", "value", "local_bound", "seed"):
            w.writerow(["meta", key, "", "", repr(getattr(res, key))])
        for i, v in enumerate(psi):
            w.writerow(["psi", "", i, "", repr(float(v))])
        for kind, mats in (("alice", res.alice_base), ("bob", res.bob)):
            for k, m in enumerate(mats):
                for (r, c), v in np.ndenumerate(m):
                    w.writerow([kind, k, r, c, repr(float(v))])
    return path
