"""Continuity bounds that spread a grid-point visibility to nearby states.

Moving from ``(theta_i, phi_j)`` to a neighbour is done by writing the
neighbour's noisy state as a mixture of the grid state and a separable
state.  Along theta the separable part is diagonal; along phi it is a
PPT (hence separable) two-qubit state.  Both constructions are available
as matrices so the closed-form visibilities can be checked directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .blochcore import DomainError, TwoQubitState, partial_trace, partial_transpose, schmidt_state

ETA_TARGET = 0.67
PHI_DOMAIN = 0.5 * math.acos(7.0 / 8.0)


@dataclass(frozen=True)
class GluePoint:
    theta: float
    phi: float
    eta: float
    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"eta={self.eta!r} outside (0, 1]")


def _check_angles(*thetas: float) -> None:
    for t in thetas:
        if not 0.0 < t <= math.pi / 4 + 1e-12:
            raise DomainError(f"theta={t!r} outside (0, pi/4]")


def diag_bounds(theta: float, theta_i: float, eta: float) -> tuple[float, float, float, float]:
    """Upper bounds on ``v`` from the four diagonal entries (00, 01, 10, 11)."""
    _check_angles(theta, theta_i)
    r = math.tan(theta) / math.tan(theta_i)  # tan(theta) cot(theta_i)
    q = 1.0 / r
    return (
        1.0 / (r * (1 + eta) - eta),
        1.0 / (q * (1 - eta) + eta),
        1.0 / (r * (1 - eta) + eta),
        1.0 / (q * (1 + eta) - eta),
    )


def eta_theta_step(theta: float, theta_i: float, eta_i: float) -> float:
    """Visibility certified at ``theta <= theta_i`` from ``eta_i`` at ``theta_i``."""
    _check_angles(theta, theta_i)
    if theta > theta_i + 1e-15:
        raise DomainError("theta must not exceed theta_i")
    den = (math.tan(theta_i) / math.tan(theta)) * (1 + eta_i) - eta_i
    if den <= 0:
        raise ArithmeticError("non-positive denominator in the theta step")
    return eta_i / den


def theta_decomposition(theta: float, theta_i: float, eta: float, v: float | None = None):
    """Matrix form of the theta step.

    Returns ``(p, sigma)`` with
    ``v eta rho(theta) + (1 - v eta) I/2 (x) rho_B(theta)
    = p [eta rho(theta_i) + (1 - eta) I/2 (x) rho_B(theta_i)] + (1 - p) sigma``
    and ``p = v sin(2 theta) / sin(2 theta_i)`` (matching the coherences).
    ``v`` defaults to the fourth diagonal bound.
    """
    if v is None:
        v = diag_bounds(theta, theta_i, eta)[3]

    def noisy(th, e):
        rho = schmidt_state(th, 0.0).m
        return e * rho + (1 - e) * np.kron(np.eye(2) / 2, partial_trace(rho, "B"))

    p = v * math.sin(2 * theta) / math.sin(2 * theta_i)
    lhs = noisy(theta, v * eta)
    rhs = noisy(theta_i, eta)
    sigma = (lhs - p * rhs) / (1 - p)
    return p, sigma


def v_phi_step(dphi: float) -> float:
    """Mixing weight keeping the phi-rotated state local (even in ``dphi``)."""
    if abs(dphi) >= PHI_DOMAIN:
        raise DomainError(f"|dphi|={abs(dphi)!r} outside the domain (< {PHI_DOMAIN})")
    # 1 - cos(2 dphi) and 8 cos(2 dphi) - 7 written via sin^2 to avoid cancellation
    one_minus_c = 2.0 * math.sin(dphi) ** 2
    return (1 - 2 * math.sqrt(2) * math.sqrt(one_minus_c)) / (1 - 8 * one_minus_c)


def eta_phi_step(dphi: float, eta_i: float) -> float:
    return v_phi_step(dphi) * eta_i


@dataclass(frozen=True)
class WitnessReport:
    trace: float
    pt_residual: float
    eigenvalues: np.ndarray
    expected: np.ndarray
    eig_residual: float

    @property
    def separable(self) -> bool:
        return self.pt_residual <= 1e-12 and self.eigenvalues[0] >= -1e-10


def expected_witness_eigenvalues(theta_i: float) -> np.ndarray:
    s = math.sqrt(5 + 4 * math.cos(4 * theta_i))
    return np.sort([0.0, 0.25, (3 + s) / 8, (3 - s) / 8])


def separability_witness(theta_i: float, dphi: float, v: float | None = None):
    """Separable ``sigma`` closing the phi step, and its check report."""
    if v is None:
        v = v_phi_step(dphi)
    if v >= 1.0:
        if dphi != 0.0:
            raise DomainError("v = 1 only for dphi = 0")
        rho = schmidt_state(theta_i, 0.0).m
        sigma = np.kron(np.eye(2) / 2, partial_trace(rho, "B"))
    else:
        r0 = schmidt_state(theta_i, 0.0).m
        # rho(dphi) - rho(0) from D = O(dphi) - I, without subtracting nearby states
        cm1, s = -2.0 * math.sin(dphi / 2) ** 2, math.sin(dphi)
        d = np.kron(np.array([[cm1, -s], [s, cm1]]), np.eye(2))
        diff = d @ r0 + r0 @ d.T + d @ r0 @ d.T
        r1 = r0 + diff
        sigma = v / (1 - v) * diff + np.kron(np.eye(2) / 2, partial_trace(r1, "B"))
    ev = np.linalg.eigvalsh(sigma)
    exp = expected_witness_eigenvalues(theta_i)
    report = WitnessReport(
        trace=float(np.trace(sigma)),
        pt_residual=float(np.max(np.abs(partial_transpose(sigma) - sigma))),
        eigenvalues=ev,
        expected=exp,
        eig_residual=float(np.max(np.abs(ev - exp))),
    )
    return TwoQubitState(sigma), report


def eta_grid_min(grid_values: Sequence[float], dphi: float,
                 half_step: bool = False) -> float:
    """Visibility valid for every phi in the range scanned by a uniform grid.

    By default the full spacing is charged (every phi is within ``dphi`` of a
    grid point); ``half_step`` charges only ``dphi / 2``.
    """
    if len(grid_values) == 0:
        raise DomainError("empty grid")
    step = dphi / 2 if half_step else dphi
    return v_phi_step(step) * float(min(grid_values))


def eta_global(theta: float, theta_i: float, eta_theta_i: float) -> float:
    """Lower bound at ``theta < theta_i`` valid for all phi."""
    return eta_theta_step(theta, theta_i, eta_theta_i)


def solve_theta(theta_i: float, eta_theta_i: float, target: float = ETA_TARGET) -> float:
    """``theta`` at which :func:`eta_global` equals ``target``."""
    t = math.tan(theta_i) * (1 + eta_theta_i) / (eta_theta_i * (1 / target + 1))
    return math.atan(t)
