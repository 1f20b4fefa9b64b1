"""Acceptance suite: one PASS/FAIL line per criterion, then a hard assertion.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed even when output capture is on.
"""

import math
import time

import numpy as np
import pytest

from lhvcert import analytic, glue, jointmeas, lhvlp, steer, sweep
from lhvcert.blochcore import Vec2, binary_povm, schmidt_state, trine_povm
from lhvcert.innn22 import compat_certificate, seesaw

from test_jointmeas import random_effect
from test_lhvlp import full_enumeration_eta, random_state
from test_steer import random_complex_povm, random_real_povm


@pytest.fixture
def announce(capsys):
    def _announce(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return _announce


def test_1_joint_measurability(announce):
    t0 = time.perf_counter()
    pair = jointmeas.jm_threshold(jointmeas.trine_pairs, tol=1e-5)
    triple = jointmeas.jm_threshold(jointmeas.trine_triple, tol=1e-5)
    hollow = jointmeas.hollow_triangle_check(0.67).is_hollow
    dt = time.perf_counter() - t0
    ok = (abs(pair.eta - 0.73205) <= 1e-3 and abs(triple.eta - 0.66667) <= 1e-3
          and hollow and dt < 30)
    announce(1, ok, f"eta2={pair.eta:.6f} eta3={triple.eta:.6f} hollow(0.67)={hollow} "
                    f"time={dt:.1f}s")


def test_2_analytic_branch(announce):
    th = analytic.theta_star(0.67)
    samples = np.linspace(0.0, th, 200)
    worst = min(analytic.small_theta_bound(float(t)) for t in samples)
    rho = schmidt_state(math.pi / 4, 0.0)
    h = analytic.horodecki_chsh(rho).value
    s = analytic.chsh_seesaw(rho)
    ok = (abs(th - 0.22798) <= 1e-4 and worst >= 0.67
          and abs(h - 2 * math.sqrt(2)) <= 1e-9 and abs(h - s) <= 1e-6)
    announce(2, ok, f"theta*={th:.6f} min_bound={worst:.6f} horodecki={h:.12f} "
                    f"seesaw_diff={abs(h - s):.1e}")


def test_3_shrink_factors(announce, shrink_lp_route, shrink_facet_route, timings):
    lp0, lp5 = shrink_lp_route[0.0].eta_b, shrink_lp_route[5 / 6].eta_b
    f0, f5 = shrink_facet_route[0.0], shrink_facet_route[5 / 6]
    dt = sum(timings.get(k, 0.0) for k in
             ("vertices", "facets", "shrink_lp_route", "shrink_facet_route"))
    ok = (abs(lp0 - 0.9268) <= 2e-3 and abs(lp5 - 0.8900) <= 2e-3
          and abs(lp0 - f0) <= 1e-3 and abs(lp5 - f5) <= 1e-3 and dt < 1800)
    announce(3, ok, f"lp: {lp0:.6f}, {lp5:.6f} facet: {f0:.6f}, {f5:.6f} time={dt:.1f}s")


def test_4_lp_spot_value(announce):
    t0 = time.perf_counter()
    res = lhvlp.eta_bar(math.pi / 4, 0.1192)
    dt = time.perf_counter() - t0
    ok = abs(res.value - 0.6808) <= 2e-3 and dt < 10
    announce(4, ok, f"eta_bar={res.value:.6f} alpha={res.alpha:g} time={dt:.2f}s")


def test_5_full_certificate(announce, certificate, timings):
    c = certificate
    p = c.params
    nonempty = all(len(ch.points) > 0 for ch in c.chains.values()) and len(c.chains) == 2
    settings_ok = (p["eps"] == 1e-4 and abs(p["dphi"] - math.radians(0.1)) < 1e-15
                   and abs(p["phi_max"] - math.pi / 6) < 1e-15)
    etas_ok = (all(pt.eta >= 0.67 for ch in c.chains.values() for pt in ch.points)
               and all(e >= 0.67 for _, e in c.analytic))
    dt = timings.get("certificate", 0.0)
    ok = (c.verdict == "PASS" and not c.gaps and nonempty and settings_ok and etas_ok
          and c.lowest_chain_theta <= c.theta_star and dt <= 7200)
    sizes = ", ".join(f"alpha={a:.4g}: {len(ch.points)}" for a, ch in sorted(c.chains.items()))
    announce(5, ok, f"verdict={c.verdict} gaps={len(c.gaps)} points({sizes}) "
                    f"lowest_chain_theta={c.lowest_chain_theta:.6f} <= "
                    f"theta*={c.theta_star:.6f} time={dt:.1f}s")


def test_6_glue_formulas(announce, rng):
    v = glue.v_phi_step(math.radians(0.1))
    worst_eig, worst_pt = 0.0, 0.0
    for _ in range(50):
        th_i = rng.uniform(0.05, math.pi / 4)
        d = rng.uniform(1e-5, 0.25)
        _, rep = glue.separability_witness(th_i, d)
        worst_eig = max(worst_eig, rep.eig_residual)
        worst_pt = max(worst_pt, rep.pt_residual)
    monotone = True
    for _ in range(1000):
        th_i = rng.uniform(0.05, math.pi / 4)
        th = rng.uniform(0.5 * th_i, th_i)
        eta = rng.uniform(0.5, 0.999)
        monotone &= glue.eta_theta_step(th, th_i, eta + 1e-6) > glue.eta_theta_step(th, th_i, eta)
    ok = abs(v - 0.993067) <= 1e-6 and worst_eig <= 1e-10 and worst_pt <= 1e-12 and monotone
    announce(6, ok, f"v(0.1deg)={v:.7f} eig_res={worst_eig:.1e} pt_res={worst_pt:.1e} "
                    f"monotone={monotone}")


def test_7_lp_oracle(announce, rng):
    worst = 0.0
    for _ in range(20):
        axes = [Vec2.polar(a) for a in rng.uniform(0, 2 * math.pi, 2)]
        bob = [binary_povm(Vec2.polar(a), v)
               for a, v in zip(rng.uniform(0, 2 * math.pi, 2), rng.uniform(0.5, 1, 2))]
        lp = lhvlp.MaxEtaLP(alice_axes=axes, bob=bob)
        st = random_state(rng, rank=int(rng.integers(1, 5)))
        eta, _ = lp.solve(st)
        worst = max(worst, abs(eta - full_enumeration_eta(lp, st)))
    announce(7, worst <= 1e-9, f"max |d eta| over 20 states = {worst:.1e}")


def test_8_ghjw_roundtrip(announce, rng):
    worst_rt = 0.0
    for _ in range(100):
        st = schmidt_state(rng.uniform(0.02, math.pi / 4), rng.uniform(0, 2 * math.pi))
        bob = [random_real_povm(rng, n) for n in rng.integers(2, 4, size=3)]
        n = max(len(p) for p in bob)
        stack = np.array([np.concatenate([p, np.zeros((n - len(p), 2, 2))]) for p in bob])
        asm = steer.assemblage(st, stack)
        rec = steer.ghjw_reconstruct(asm)
        back = steer.assemblage(rec.state, rec.bob)
        worst_rt = max(worst_rt, float(np.max(np.abs(back.members - asm.members))))
    alice = trine_povm(0.67)
    worst_beta = 0.0
    for _ in range(50):
        f = steer.steering_functional(steer.BellFunctional(rng.normal(size=(3, 4, 2, 3))), alice)
        bob = np.array([random_complex_povm(rng) for _ in range(4)])
        asm = steer.assemblage(schmidt_state(rng.uniform(0, math.pi / 4), rng.uniform(0, 6)), bob)
        worst_beta = max(worst_beta, abs(steer.steering_value(f, steer.realify(asm))
                                         - steer.steering_value(f, asm)))
    ok = worst_rt <= 1e-10 and worst_beta <= 1e-12
    announce(8, ok, f"roundtrip residual={worst_rt:.1e} realify beta diff={worst_beta:.1e}")


def test_9_lossy_compatibility(announce, rng):
    worst = 0.0
    for n in range(2, 6):
        for d in sorted({2, n}):
            base = [random_effect(rng, d) for _ in range(n)]
            parent = jointmeas.parent_lossy(base)
            worst = max(worst, parent.marginal_residual(jointmeas.lossy_set(base, 1 / n).povms()))
    res = seesaw(3, 0.5, restarts=50, seed=0)
    compat = compat_certificate(res.alice_base, 3)
    ok = worst <= 1e-12 and compat.passed and res.found and res.local_bound == 0.0
    announce(9, ok, f"parent residual={worst:.1e} I3322 value={res.value:.6f} "
                    f"local bound={res.local_bound:g} margin={res.margin:.6f} "
                    f"verdict={res.verdict} compat={compat.passed}")
