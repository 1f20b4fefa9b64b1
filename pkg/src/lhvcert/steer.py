"""Assemblages, realification, steering functionals and GHJW reconstruction."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blochcore import (
    DomainError,
    QubitPovm,
    RealQubitOperator,
    TwoQubitState,
    povm_stack,
    rotation,
)


@dataclass(frozen=True)
class Assemblage:
    """Sub-normalised conditional states ``members[y, b]`` (2x2, maybe complex)."""

    members: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.members)
        if m.ndim != 4 or m.shape[2:] != (2, 2):
            raise DomainError(f"assemblage must have shape (ny, nb, 2, 2), got {m.shape}")
        object.__setattr__(self, "members", m)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.members) or np.max(np.abs(self.members.imag)) == 0

    def reduced(self, y: int = 0) -> np.ndarray:
        return self.members[y].sum(axis=0)

    def signalling_residual(self) -> float:
        sums = self.members.sum(axis=1)
        return float(np.max(np.abs(sums - sums[:1])))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(s)[0] for row in self.members for s in row))

    def total_trace(self) -> float:
        return float(np.trace(self.reduced()).real)

    def is_valid(self, tol: float = 1e-10) -> bool:
        return (self.signalling_residual() <= tol and self.min_eigenvalue() >= -tol
                and abs(self.total_trace() - 1) <= tol)

    def operators(self) -> list[list[RealQubitOperator]]:
        if not self.is_real:
            raise DomainError("complex assemblage; realify first")
        return [[RealQubitOperator.from_matrix(s.real) for s in row] for row in self.members]


def assemblage(state, bob: Sequence[QubitPovm] | np.ndarray) -> Assemblage:
    """``sigma_{b|y} = Tr_B(rho (I x M_{b|y}))``.

    ``bob`` may be a list of real POVMs or a raw (possibly complex) array of
    shape ``(ny, nb, 2, 2)``.
    """
    rho = state.m if hasattr(state, "m") else np.asarray(state)
    mats = bob if isinstance(bob, np.ndarray) else povm_stack(bob)
    rho4 = rho.reshape(2, 2, 2, 2)
    # sigma[i,k] = sum_{j,l} rho[i j, k l] M[l, j]
    sig = np.einsum("ijkl,yblj->ybik", rho4, mats)
    return Assemblage(sig)


def realify(asm: Assemblage) -> Assemblage:
    """Replace every member by ``(sigma + conj(sigma)) / 2``."""
    return Assemblage(np.real(asm.members).astype(float))


@dataclass(frozen=True)
class BellFunctional:
    """Coefficients ``c[x, y, a, b]`` of ``sum c p(ab|xy)``."""

    coefficients: np.ndarray = field(repr=False)
    known_local_bound: float | None = None

    def value(self, beh) -> float:
        p = beh.p if hasattr(beh, "p") else np.asarray(beh)
        if p.shape != self.coefficients.shape:
            raise DomainError(f"scenario mismatch {p.shape} vs {self.coefficients.shape}")
        return float(np.sum(self.coefficients * p))

    def local_bound(self) -> float:
        """Exact local maximum: enumerate Alice's strategies, Bob answers greedily."""
        c = self.coefficients
        nx, ny, na, nb = c.shape
        best = -np.inf
        for strat in itertools.product(range(na), repeat=nx):
            per_b = sum(c[x, :, strat[x], :] for x in range(nx))  # (ny, nb)
            best = max(best, float(per_b.max(axis=1).sum()))
        return best


def chsh_functional() -> BellFunctional:
    """``E00 + E01 + E10 - E11`` written on probabilities (local bound 2)."""
    c = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        sign = -1.0 if (x, y) == (1, 1) else 1.0
        c[x, y, a, b] = sign * (1.0 if a == b else -1.0)
    return BellFunctional(c, known_local_bound=2.0)


def steering_functional(c: BellFunctional, alice: Sequence[QubitPovm]) -> np.ndarray:
    """``F[y, b] = sum_{a,x} c[x, y, a, b] M_{a|x}``, shape ``(ny, nb, 2, 2)``."""
    a = povm_stack(alice)
    coef = c.coefficients
    if coef.shape[0] != a.shape[0] or coef.shape[2] != a.shape[1]:
        raise DomainError("functional does not match Alice's measurements")
    return np.einsum("xyab,xaij->ybij", coef, a)


def steering_value(f: np.ndarray, asm: Assemblage) -> float:
    """``beta = sum_{b,y} Tr(F_{b|y} sigma_{b|y})``."""
    if f.shape != asm.members.shape:
        raise DomainError(f"functional shape {f.shape} vs assemblage {asm.members.shape}")
    return float(np.real(np.einsum("ybij,ybji->", f, asm.members)))


@dataclass(frozen=True)
class Reconstruction:
    state: TwoQubitState
    bob: list[QubitPovm]
    schmidt: np.ndarray  # descending lambda
    theta: float
    phi: float


def ghjw_reconstruct(asm: Assemblage, tol: float = 1e-12) -> Reconstruction:
    """Realise a real assemblage with a Schmidt-form state and real Bob POVMs.

    ``sigma_A = O(phi) diag(lambda) O(phi)^T`` with ``lambda`` descending and
    ``O`` a proper rotation whose first column has a positive larger entry.
    Bob's effects are ``Lambda^{-1/2} (O^T sigma O)^T Lambda^{-1/2}``.
    """
    if not asm.is_real:
        raise DomainError("GHJW reconstruction needs a real assemblage; realify first")
    sig = asm.members.real
    sig_a = 0.5 * (asm.reduced(0).real + asm.reduced(0).real.T)
    lam, vecs = np.linalg.eigh(sig_a)
    lam, vecs = lam[::-1], vecs[:, ::-1]
    if lam[-1] <= tol:
        raise DomainError("reduced state is rank deficient; no full-rank reconstruction")
    v0 = vecs[:, 0]
    if v0[np.argmax(np.abs(v0))] < 0:
        v0 = -v0
    phi = float(np.arctan2(v0[1], v0[0]))
    o = rotation(phi)
    theta = float(np.arctan2(np.sqrt(lam[1]), np.sqrt(lam[0])))
    psi = np.kron(o, np.eye(2)) @ np.array([np.sqrt(lam[0]), 0, 0, np.sqrt(lam[1])])
    state = TwoQubitState(np.outer(psi, psi))
    inv = 1.0 / np.sqrt(lam)
    bob = []
    for row in sig:
        effects = []
        for s in row:
            sp = o.T @ s @ o
            m = (inv[:, None] * sp * inv[None, :]).T
            effects.append(RealQubitOperator.from_matrix(0.5 * (m + m.T), tol=1e-8))
        bob.append(QubitPovm(tuple(effects)))
    return Reconstruction(state, bob, lam, theta, phi)
