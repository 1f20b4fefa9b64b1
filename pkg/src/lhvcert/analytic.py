"""Closed-form small-theta branch: CHSH bounds for noisy Pauli simulations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blochcore import I2, X, Y, Z, DomainError, PseudoState

ETA2 = math.sqrt(3.0) - 1.0
ETA_STAR = 0.67
PAULIS = (X, Y, Z)


@dataclass(frozen=True)
class ChshReport:
    value: float
    singular_values: tuple[float, float]


def correlation_matrix(state) -> np.ndarray:
    """``T_ij = Tr(rho sigma_i (x) sigma_j)`` over (X, Y, Z)."""
    m = state.m if isinstance(state, PseudoState) else np.asarray(state)
    return np.array([[np.trace(m @ np.kron(si, sj)).real for sj in PAULIS] for si in PAULIS])


def horodecki_chsh(state) -> ChshReport:
    """Maximal CHSH value ``2 sqrt(s1^2 + s2^2)`` over projective measurements."""
    s = np.linalg.svd(correlation_matrix(state), compute_uv=False)
    return ChshReport(2.0 * math.hypot(s[0], s[1]), (float(s[0]), float(s[1])))


def chsh_seesaw(state, visibility: float = 1.0, restarts: int = 20, iters: int = 500,
                seed: int = 0) -> float:
    """Maximise CHSH by alternating over unit Bloch vectors of both parties.

    Independent of the singular-value formula: each step only uses the
    optimal response ``a = T b / |T b|`` to the other side's settings.
    """
    t = correlation_matrix(state)
    rng = np.random.default_rng(seed)
    best = -np.inf

    def unit(v):
        n = np.linalg.norm(v)
        return v / n if n > 1e-15 else v

    for _ in range(restarts):
        b0, b1 = unit(rng.normal(size=3)), unit(rng.normal(size=3))
        prev = -np.inf
        for _ in range(iters):
            a0 = unit(t @ (b0 + b1))
            a1 = unit(t @ (b0 - b1))
            b0 = unit(t.T @ (a0 + a1))
            b1 = unit(t.T @ (a0 - a1))
            val = a0 @ t @ (b0 + b1) + a1 @ t @ (b0 - b1)
            if val - prev < 1e-15:
                break
            prev = val
        best = max(best, val)
    return float(visibility * best)


def v_star(theta: float) -> float:
    return 1.0 / math.sqrt(1.0 + math.sin(2 * theta) ** 2)


def theta_star(eta_star: float = ETA_STAR) -> float:
    """Solve ``eta_star = (sqrt(3) - 1) / sqrt(1 + sin^2(2 theta))`` for theta."""
    if not 0.0 < eta_star <= ETA2:
        raise DomainError(f"eta*={eta_star!r} outside (0, sqrt(3)-1]")
    arg = (ETA2 / eta_star) ** 2 - 1.0
    if arg > 1.0:
        raise DomainError(f"eta*={eta_star!r} below the reach of the analytic branch")
    return 0.5 * math.asin(math.sqrt(max(arg, 0.0)))


def theta_star_literal() -> float:
    """The same threshold written with the published constants for eta* = 0.67."""
    return 0.5 * math.asin(math.sqrt((100 / 67) ** 2 * (math.sqrt(3) - 1) ** 2 - 1))


def small_theta_bound(theta: float) -> float:
    """Trine visibility certified local by Pauli simulation plus CHSH."""
    if not 0.0 <= theta <= math.pi / 4 + 1e-12:
        raise DomainError(f"theta={theta!r} outside [0, pi/4]")
    return v_star(theta) * ETA2
