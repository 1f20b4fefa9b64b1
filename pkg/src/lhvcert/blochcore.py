"""Real qubit and two-qubit operator algebra.

Single-qubit operators are kept in Bloch form ``(t, r)`` meaning
``(t*I + r.x1*X + r.x3*Z) / 2``, restricted to the real X-Z plane.  The
computational-basis convention is ``|0><0| = (I + Z)/2``.  Bloch angles are
measured in the ``(e1, e3)`` plane, i.e. angle ``a`` is the direction
``cos(a) e1 + sin(a) e3``.

Two-qubit objects are plain 4x4 real arrays in the ``A (x) B`` ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TOL = 1e-10

I2 = np.eye(2)
X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.array([[1.0, 0.0], [0.0, -1.0]])
# complex Pauli Y, only used by correlation-matrix code
Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


class DomainError(ValueError):
    """A parameter is outside the domain where an operation is defined."""


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise DomainError(f"{name}={value!r} outside [0, 1]")


@dataclass(frozen=True)
class Vec2:
    x1: float
    x3: float

    @classmethod
    def polar(cls, angle: float, length: float = 1.0) -> "Vec2":
        return cls(length * math.cos(angle), length * math.sin(angle))

    def norm(self) -> float:
        return math.hypot(self.x1, self.x3)

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x1 + other.x1, self.x3 + other.x3)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x1 - other.x1, self.x3 - other.x3)

    def __mul__(self, k: float) -> "Vec2":
        return Vec2(k * self.x1, k * self.x3)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x1, -self.x3)

    def dot(self, other: "Vec2") -> float:
        return self.x1 * other.x1 + self.x3 * other.x3


E1 = Vec2(1.0, 0.0)
E3 = Vec2(0.0, 1.0)
ZERO2 = Vec2(0.0, 0.0)


@dataclass(frozen=True)
class RealQubitOperator:
    """``(t*I + r.x1*X + r.x3*Z) / 2``; trace equals ``t``."""

    t: float
    r: Vec2 = ZERO2

    @classmethod
    def from_matrix(cls, m: np.ndarray, tol: float = TOL) -> "RealQubitOperator":
        m = np.asarray(m)
        if np.iscomplexobj(m):
            if np.max(np.abs(m.imag)) > tol:
                raise DomainError("operator has an imaginary part")
            m = m.real
        if abs(m[0, 1] - m[1, 0]) > tol:
            raise DomainError("operator is not symmetric")
        off = 0.5 * (m[0, 1] + m[1, 0])
        return cls(float(m[0, 0] + m[1, 1]), Vec2(float(2 * off), float(m[0, 0] - m[1, 1])))

    @classmethod
    def from_coords(cls, c: Sequence[float]) -> "RealQubitOperator":
        return cls(float(c[0]), Vec2(float(c[1]), float(c[2])))

    @property
    def trace(self) -> float:
        return self.t

    def coords(self) -> np.ndarray:
        return np.array([self.t, self.r.x1, self.r.x3])

    def matrix(self) -> np.ndarray:
        return 0.5 * (self.t * I2 + self.r.x1 * X + self.r.x3 * Z)

    def is_psd(self, tol: float = TOL) -> bool:
        return self.t >= self.r.norm() - tol

    def __add__(self, other: "RealQubitOperator") -> "RealQubitOperator":
        return RealQubitOperator(self.t + other.t, self.r + other.r)

    def __sub__(self, other: "RealQubitOperator") -> "RealQubitOperator":
        return RealQubitOperator(self.t - other.t, self.r - other.r)

    def __mul__(self, k: float) -> "RealQubitOperator":
        return RealQubitOperator(k * self.t, self.r * k)

    __rmul__ = __mul__

    def expect(self, state: "RealQubitOperator") -> float:
        """``Tr(self @ state)`` via the Bloch inner product."""
        return 0.5 * (self.t * state.t + self.r.dot(state.r))


IDENTITY = RealQubitOperator(2.0)
ZERO = RealQubitOperator(0.0)


@dataclass(frozen=True)
class QubitPovm:
    elements: tuple[RealQubitOperator, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def n_out(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, b: int) -> RealQubitOperator:
        return self.elements[b]

    def __iter__(self):
        return iter(self.elements)

    def closure_residual(self) -> float:
        c = sum(e.coords() for e in self.elements) - np.array([2.0, 0.0, 0.0])
        return float(np.max(np.abs(c)))

    def is_valid(self, tol: float = TOL) -> bool:
        return self.closure_residual() <= tol and all(e.is_psd(tol) for e in self.elements)

    def matrices(self) -> np.ndarray:
        return np.array([e.matrix() for e in self.elements])

    def coords(self) -> np.ndarray:
        """Array of shape ``(n_out, 3)``."""
        return np.array([e.coords() for e in self.elements])

    def permuted(self, perm: Sequence[int]) -> "QubitPovm":
        return QubitPovm(tuple(self.elements[p] for p in perm))

    def padded(self, n_out: int) -> "QubitPovm":
        if n_out < self.n_out:
            raise DomainError("cannot pad to fewer outcomes")
        return QubitPovm(self.elements + (ZERO,) * (n_out - self.n_out))


def binary_povm(axis: Vec2, visibility: float = 1.0) -> QubitPovm:
    """``{(I + v u.sigma)/2, (I - v u.sigma)/2}``."""
    return QubitPovm((RealQubitOperator(1.0, axis * visibility),
                      RealQubitOperator(1.0, axis * -visibility)))


def trine_axis(x: int) -> Vec2:
    return Vec2.polar(2 * x * math.pi / 3)


def trine_povm(eta: float) -> list[QubitPovm]:
    """The three noisy trine measurements, settings ``x = 0, 1, 2``."""
    _check_unit("eta", eta)
    return [binary_povm(trine_axis(x), eta) for x in range(3)]


def pauli_pair(v: float) -> list[QubitPovm]:
    """Noisy X and Z measurements (in that order)."""
    _check_unit("v", v)
    return [binary_povm(E1, v), binary_povm(E3, v)]


def bob_finite_set() -> list[QubitPovm]:
    """9 projective binaries (padded to 3 outcomes) and 4 rank-one trines."""
    out = []
    for y in range(9):
        out.append(binary_povm(Vec2.polar(y * math.pi / 9)).padded(3))
    for y in range(9, 13):
        out.append(QubitPovm(tuple(
            RealQubitOperator(2.0 / 3.0, Vec2.polar(y * math.pi / 2 + 2 * b * math.pi / 3) * (2.0 / 3.0))
            for b in range(3))))
    return out


def zeta(alpha: float) -> RealQubitOperator:
    """``alpha |0><0| + (1 - alpha) I/2``."""
    _check_unit("alpha", alpha)
    return RealQubitOperator(1.0, E3 * alpha)


def depolarize(povm: QubitPovm, eta_b: float, zeta_b: RealQubitOperator,
               tol: float = TOL) -> QubitPovm:
    """``M_b -> eta_b M_b + (1 - eta_b) Tr(M_b zeta_b) I``."""
    _check_unit("eta_b", eta_b)
    if abs(zeta_b.t - 1.0) > tol or not zeta_b.is_psd(tol):
        raise DomainError("zeta_b is not a qubit state")
    return QubitPovm(tuple(
        m * eta_b + IDENTITY * ((1 - eta_b) * m.expect(zeta_b)) for m in povm))


# ---------------------------------------------------------------- two qubits

def rotation(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class PseudoState:
    """Unit-trace real symmetric 4x4 operator; positivity not required."""

    m: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.m, dtype=float)
        if m.shape != (4, 4):
            raise DomainError(f"expected a 4x4 operator, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def trace(self) -> float:
        return float(np.trace(self.m))

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.m)

    def is_psd(self, tol: float = TOL) -> bool:
        return bool(self.eigvals()[0] >= -tol)


class TwoQubitState(PseudoState):
    """A two-qubit density operator (PSD, unit trace)."""

    def is_valid(self, tol: float = TOL) -> bool:
        return (abs(self.trace() - 1) <= tol and np.allclose(self.m, self.m.T, atol=tol)
                and self.is_psd(tol))


def schmidt_vector(theta: float, phi: float) -> np.ndarray:
    psi = np.array([math.cos(theta), 0.0, 0.0, math.sin(theta)])
    return np.kron(rotation(phi), I2) @ psi


def schmidt_state(theta: float, phi: float) -> TwoQubitState:
    """``(O(phi) (x) I)(cos(theta)|00> + sin(theta)|11>)`` as a projector."""
    v = schmidt_vector(theta, phi)
    return TwoQubitState(np.outer(v, v))


def _as_matrix(state) -> np.ndarray:
    return state.m if isinstance(state, PseudoState) else np.asarray(state)


def partial_trace(state, party: str) -> np.ndarray:
    """Reduced 2x2 operator of ``party`` ('A' or 'B')."""
    m4 = _as_matrix(state).reshape(2, 2, 2, 2)
    if party.upper() == "A":
        return np.trace(m4, axis1=1, axis2=3)
    if party.upper() == "B":
        return np.trace(m4, axis1=0, axis2=2)
    raise ValueError("party must be 'A' or 'B'")


def reduced_operator(state, party: str) -> RealQubitOperator:
    return RealQubitOperator.from_matrix(partial_trace(state, party))


def partial_transpose(m: np.ndarray, party: str = "B") -> np.ndarray:
    m4 = np.asarray(m).reshape(2, 2, 2, 2)
    if party.upper() == "B":
        return m4.transpose(0, 3, 2, 1).reshape(4, 4)
    return m4.transpose(2, 1, 0, 3).reshape(4, 4)


def povm_stack(povms: Sequence[QubitPovm]) -> np.ndarray:
    """Stack POVM matrices into shape ``(settings, outcomes, 2, 2)`` (zero padded)."""
    n = max(p.n_out for p in povms)
    return np.array([p.padded(n).matrices() for p in povms])


@dataclass(frozen=True)
class Behavior:
    """Table ``p[x, y, a, b] = p(ab|xy)``; absent outcomes are zero padded."""

    p: np.ndarray = field(repr=False)
    outcomes_a: tuple[int, ...]
    outcomes_b: tuple[int, ...]

    @property
    def n_x(self) -> int:
        return self.p.shape[0]

    @property
    def n_y(self) -> int:
        return self.p.shape[1]

    def normalization_residual(self) -> float:
        return float(np.max(np.abs(self.p.sum(axis=(2, 3)) - 1.0)))

    def is_proper(self, tol: float = TOL) -> bool:
        return bool(self.p.min() >= -tol)

    def alice_marginal(self) -> np.ndarray:
        """``p_A[x, y, a]``; no-signalling means independence from ``y``."""
        return self.p.sum(axis=3)

    def bob_marginal(self) -> np.ndarray:
        return self.p.sum(axis=2)

    def signalling_residual(self) -> float:
        pa = self.alice_marginal()
        pb = self.bob_marginal()
        ra = np.max(np.abs(pa - pa[:, :1, :]))
        rb = np.max(np.abs(pb - pb[:1, :, :]))
        return float(max(ra, rb))

    def relabeled(self, alice_settings: Sequence[int] | None = None,
                  alice_outcomes: Sequence[int] | None = None) -> "Behavior":
        """Reorder Alice's settings (``new[x] = old[alice_settings[x]]``) and outcomes."""
        p = self.p
        if alice_settings is not None:
            p = p[list(alice_settings)]
        if alice_outcomes is not None:
            p = p[:, :, list(alice_outcomes)]
        return Behavior(p, self.outcomes_a, self.outcomes_b)


def behavior(state, alice: Sequence[QubitPovm], bob: Sequence[QubitPovm]) -> Behavior:
    """``p(ab|xy) = Tr((M_a|x (x) M_b|y) state)``."""
    m = _as_matrix(state)
    if m.shape != (4, 4):
        raise DomainError(f"state must be 4x4, got {m.shape}")
    a = povm_stack(alice)
    b = povm_stack(bob)
    rho4 = m.reshape(2, 2, 2, 2)
    p = np.einsum("xaki,yblj,ijkl->xyab", a, b, rho4)
    return Behavior(p, tuple(q.n_out for q in alice), tuple(q.n_out for q in bob))
