"""Chain of LP grid points glued together down to the analytic branch."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytic, glue
from .blochcore import zeta
from .lhvlp import SHRINK, MaxEtaLP, chi

log = logging.getLogger(__name__)

DEFAULT_DPHI = math.radians(0.1)
DEFAULT_PHI_MAX = math.pi / 6
DEFAULT_EPS = 1e-4
CHAIN_STARTS = {0.0: math.pi / 4, 5.0 / 6.0: 0.6}


class ChainAbort(RuntimeError):
    """A grid LP value fell to the target: no certificate from this point."""


@dataclass(frozen=True)
class ChainPoint:
    theta: float
    eta: float  # phi-uniform bound eta(theta_i)
    alpha: float
    phi_min: float
    lp_min: float


@dataclass
class Chain:
    alpha: float
    theta0: float
    points: list[ChainPoint]
    theta_low: float  # lowest theta certified by the chain
    stop_reason: str
    eta_b: float

    @property
    def theta_high(self) -> float:
        return self.theta0


def phi_grid(dphi: float, phi_max: float) -> np.ndarray:
    n = int(round(phi_max / dphi))
    return np.arange(n + 1) * dphi


def _grid_block(args) -> list[float]:
    theta, phis, alpha, eta_b = args
    lp = MaxEtaLP()
    zb = zeta(alpha)
    return [lp.solve(chi(theta, phi, eta_b, zb))[0] for phi in phis]


def grid_values(theta: float, alpha: float, eta_b: float, phis: np.ndarray,
                lp: MaxEtaLP | None = None, pool: ProcessPoolExecutor | None = None,
                workers: int = 1) -> np.ndarray:
    if pool is not None and workers > 1:
        blocks = np.array_split(phis, workers)
        out = pool.map(_grid_block, [(theta, b, alpha, eta_b) for b in blocks])
        return np.concatenate([np.asarray(v) for v in out])
    lp = lp or MaxEtaLP()
    zb = zeta(alpha)
    return np.array([lp.solve(chi(theta, phi, eta_b, zb))[0] for phi in phis])


def run_chain(alpha: float, theta0: float, eps: float = DEFAULT_EPS,
              dphi: float = DEFAULT_DPHI, phi_max: float = DEFAULT_PHI_MAX,
              eta_b: float | None = None, target: float = glue.ETA_TARGET,
              resume: Sequence[ChainPoint] = (), workers: int = 1,
              max_points: int = 100_000) -> Chain:
    """Walk down in theta from ``theta0`` while glued visibilities stay at ``target``.

    Each step takes the phi-uniform bound at ``theta_i`` and moves to the
    ``theta`` where the theta-glue formula reaches ``target``.  Stops once a
    step is no longer than ``eps``.  ``resume`` continues an earlier run.
    """
    eta_b = SHRINK[alpha] if eta_b is None else eta_b
    if not 0.0 < theta0 <= math.pi / 4 + 1e-12:
        raise ValueError(f"theta0={theta0!r} outside (0, pi/4]")
    phis = phi_grid(dphi, phi_max)
    points = list(resume)
    theta = theta0
    if points:
        last = points[-1]
        theta = glue.solve_theta(last.theta, last.eta, target)
        if last.theta - theta <= eps:
            return Chain(alpha, theta0, points, min(theta, last.theta), "converged", eta_b)
    lp = MaxEtaLP()
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while len(points) < max_points:
            vals = grid_values(theta, alpha, eta_b, phis, lp=lp, pool=pool, workers=workers)
            j = int(np.argmin(vals))
            if vals[j] <= target:
                raise ChainAbort(
                    f"alpha={alpha}: LP visibility {vals[j]:.6g} <= {target} at "
                    f"theta={theta:.6g}, phi={phis[j]:.6g}")
            eta_i = glue.eta_grid_min(vals, dphi)
            point = ChainPoint(theta, eta_i, alpha, float(phis[j]), float(vals[j]))
            points.append(point)
            log.info("alpha=%.4g theta=%.6f eta=%.6f", alpha, theta, eta_i)
            nxt = glue.solve_theta(theta, eta_i, target)
            if theta - nxt <= eps:
                low = min(theta, nxt) if eta_i >= target else theta
                return Chain(alpha, theta0, points, low, "converged", eta_b)
            theta = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    return Chain(alpha, theta0, points, theta, "max_points", eta_b)


@dataclass
class Certificate:
    target: float
    theta_star: float
    analytic: list[tuple[float, float]]
    chains: dict[float, Chain]
    intervals: list[tuple[str, float, float]]
    gaps: list[tuple[float, float]]
    params: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        ok = (not self.gaps and bool(self.chains)
              and all(c.points for c in self.chains.values())
              and self.lowest_chain_theta <= self.theta_star)
        return "PASS" if ok else "FAIL"

    @property
    def lowest_chain_theta(self) -> float:
        return min(c.theta_low for c in self.chains.values()) if self.chains else math.inf


def coverage_gaps(intervals: Sequence[tuple[float, float]], lo: float,
                  hi: float, tol: float = 1e-12) -> list[tuple[float, float]]:
    gaps = []
    reach = lo
    for a, b in sorted(intervals):
        if a > reach + tol:
            gaps.append((reach, a))
        reach = max(reach, b)
    if reach < hi - tol:
        gaps.append((reach, hi))
    return gaps


def certify_full_range(target: float = glue.ETA_TARGET, eps: float = DEFAULT_EPS,
                       dphi: float = DEFAULT_DPHI, phi_max: float = DEFAULT_PHI_MAX,
                       starts: dict[float, float] | None = None,
                       shrink: dict[float, float] | None = None,
                       analytic_samples: int = 200, workers: int = 1) -> Certificate:
    """Analytic branch on ``[0, theta*]`` plus one LP chain per alpha.

    Phi is scanned over ``[0, phi_max]``; the remaining angles follow from
    the shift-by-pi/3 and reflection symmetries of the trine problem.
    """
    starts = CHAIN_STARTS if starts is None else starts
    shrink = SHRINK if shrink is None else shrink
    try:
        th_star = analytic.theta_star(target)
    except Exception:
        th_star = 0.0
    ths = np.linspace(0.0, th_star, analytic_samples)
    samples = [(float(t), analytic.small_theta_bound(float(t))) for t in ths]
    intervals = [("analytic", 0.0, th_star)] if th_star > 0 else []
    chains = {}
    for alpha, theta0 in starts.items():
        try:
            ch = run_chain(alpha, theta0, eps, dphi, phi_max, shrink[alpha], target,
                           workers=workers)
        except ChainAbort as exc:
            log.warning("%s", exc)
            ch = Chain(alpha, theta0, [], theta0, f"aborted: {exc}", shrink[alpha])
        chains[alpha] = ch
        # a point below the target certifies nothing, not even its own theta
        if ch.points and all(p.eta >= target for p in ch.points):
            intervals.append((f"alpha={alpha:.6g}", ch.theta_low, ch.theta_high))
    gaps = coverage_gaps([(a, b) for _, a, b in intervals], 0.0, math.pi / 4)
    params = dict(target=target, eps=eps, dphi=dphi, phi_max=phi_max,
                  starts={str(k): v for k, v in starts.items()},
                  shrink={str(k): v for k, v in shrink.items()})
    return Certificate(target, th_star, samples, chains, intervals, gaps, params)


# ------------------------------------------------------------------ output


def _fmt(x: float) -> str:
    return repr(float(x))


def fig2_rows(cert: Certificate) -> list[tuple[str, float, float, float | str]]:
    rows: list[tuple[str, float, float, float | str]] = [
        ("analytic", t, e, "") for t, e in cert.analytic]
    for alpha, ch in sorted(cert.chains.items()):
        rows += [("chain", p.theta, p.eta, alpha) for p in ch.points]
    return rows


def write_chain_csv(chain: Chain, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "theta_i", "eta", "phi_min"])
        for i, p in enumerate(chain.points):
            w.writerow([i, _fmt(p.theta), _fmt(p.eta), _fmt(p.phi_min)])


def read_chain_csv(path, alpha: float) -> list[ChainPoint]:
    """Points of a chain CSV (``lp_min`` is recovered from the phi-glue factor)."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            eta = float(row["eta"])
            out.append(ChainPoint(float(row["theta_i"]), eta, alpha, float(row["phi_min"]),
                                  math.nan))
    return out


def emit_fig2(cert: Certificate, path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` (branch, theta, eta, alpha) and ``<path>.svg``."""
    base = Path(path)
    if base.suffix in (".csv", ".svg"):
        base = base.with_suffix("")
    csv_path, svg_path = base.with_suffix(".csv"), base.with_suffix(".svg")
    rows = fig2_rows(cert)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["branch", "theta", "eta", "alpha"])
        for branch, t, e, a in rows:
            w.writerow([branch, _fmt(t), _fmt(e), a if a == "" else _fmt(a)])
    svg_path.write_text(_svg(cert))
    return csv_path, svg_path


def _svg(cert: Certificate, width: int = 640, height: int = 420) -> str:
    left, right, top, bottom = 60, 20, 20, 50
    etas = [e for _, e in cert.analytic] + [p.eta for c in cert.chains.values() for p in c.points]
    ylo = min([cert.target] + etas) - 0.005
    yhi = max([cert.target] + etas) + 0.005

    def sx(t):
        return left + (width - left - right) * t / (math.pi / 4)

    def sy(e):
        return top + (height - top - bottom) * (yhi - e) / (yhi - ylo)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{left}" y1="{sy(ylo):.2f}" x2="{width - right}" y2="{sy(ylo):.2f}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{sy(ylo):.2f}" stroke="black"/>',
           f'<line x1="{left}" y1="{sy(cert.target):.2f}" x2="{width - right}" '
           f'y2="{sy(cert.target):.2f}" stroke="gray" stroke-dasharray="4,3"/>',
           f'<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle">theta [rad]</text>',
           f'<text x="15" y="{height / 2:.0f}" transform="rotate(-90 15 {height / 2:.0f})" '
           f'text-anchor="middle">eta</text>']
    for k in range(5):
        t = k * math.pi / 16
        out.append(f'<text x="{sx(t):.2f}" y="{sy(ylo) + 16:.2f}" text-anchor="middle">{t:.3f}</text>')
    for e in np.linspace(ylo, yhi, 5):
        out.append(f'<text x="{left - 5}" y="{sy(e) + 4:.2f}" text-anchor="end">{e:.3f}</text>')
    if cert.analytic:
        pts = " ".join(f"{sx(t):.2f},{sy(e):.2f}" for t, e in cert.analytic if e <= yhi)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    for alpha, ch in sorted(cert.chains.items()):
        for p in ch.points:
            x, y = sx(p.theta), sy(p.eta)
            if alpha == 0.0:
                out.append(f'<polygon points="{x:.2f},{y - 4:.2f} {x + 4:.2f},{y:.2f} '
                           f'{x:.2f},{y + 4:.2f} {x - 4:.2f},{y:.2f}" fill="black"/>')
            else:
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3.5" fill="none" stroke="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def certificate_json(cert: Certificate) -> dict:
    return {
        "verdict": cert.verdict,
        "target": cert.target,
        "theta_star": cert.theta_star,
        "intervals": [{"branch": b, "theta_low": a, "theta_high": c} for b, a, c in cert.intervals],
        "gaps": [list(g) for g in cert.gaps],
        "chains": {str(a): {"theta0": c.theta0, "theta_low": c.theta_low, "eta_b": c.eta_b,
                            "stop_reason": c.stop_reason,
                            "points": [asdict(p) for p in c.points]}
                   for a, c in cert.chains.items()},
        "params": cert.params,
    }


def write_certificate_json(cert: Certificate, path) -> None:
    Path(path).write_text(json.dumps(certificate_json(cert), indent=2, sort_keys=True) + "\n")
