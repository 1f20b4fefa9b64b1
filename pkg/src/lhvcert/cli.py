"""Command-line entry point: ``lhvcert <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytic, glue, jointmeas, lhvlp, simpoly, steer, sweep
from . import innn22 as inn
from .blochcore import DomainError, bob_finite_set, schmidt_state, trine_povm, zeta

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.6g}"
    return str(x)


def write_records(path: str | None, records: list[dict]) -> None:
    """Write ``records`` as JSON (``.json`` suffix) or CSV (anything else)."""
    if not path:
        return
    p = Path(path)
    if p.suffix == ".json":
        p.write_text(json.dumps(records, indent=2, sort_keys=False) + "\n")
        return
    with open(p, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(records[0]), lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def report(pairs: Sequence[tuple[str, object]]) -> None:
    for k, v in pairs:
        print(f"{k}: {fmt(v)}")


# ---------------------------------------------------------------- commands


def cmd_jm(args) -> int:
    if args.threshold:
        pair = jointmeas.jm_threshold(jointmeas.trine_pairs, tol=args.tol)
        triple = jointmeas.jm_threshold(jointmeas.trine_triple, tol=args.tol)
        report([("pair_threshold", pair.eta), ("triple_threshold", triple.eta)])
        write_records(args.out, [{"pair_threshold": pair.eta, "triple_threshold": triple.eta}])
        return EXIT_OK
    rep = jointmeas.hollow_triangle_check(args.eta)
    rows = [(f"pair {i}{j} compatible", ok) for (i, j), ok in rep.pairs.items()]
    report([("eta", args.eta), *rows, ("triple compatible", rep.triple),
            ("hollow", rep.is_hollow)])
    write_records(args.out, [{"eta": args.eta,
                              **{f"pair_{i}{j}": ok for (i, j), ok in rep.pairs.items()},
                              "triple": rep.triple, "hollow": rep.is_hollow}])
    return EXIT_OK


def cmd_simulate(args) -> int:
    strat = simpoly.decompose_trine(args.eta)
    if strat is None:
        print(f"eta={fmt(args.eta)}: no X/Z simulation (above sqrt(3)-1)")
        return EXIT_FAIL
    records = []
    for x in range(3):
        rec = {"x": x, "p_X": float(strat.choice[x, 0]), "p_Z": float(strat.choice[x, 1]),
               "noise": float(strat.noise[x])}
        records.append(rec)
        print(" ".join(f"{k}={fmt(v)}" for k, v in rec.items()))
    write_records(args.out, records)
    return EXIT_OK


def cmd_etab(args) -> int:
    zb = zeta(args.alpha)
    if args.route == "facet":
        fs = simpoly.facets(simpoly.vertex_set())
        eta_b = simpoly.facet_shrink_factor(zb, fs, step_deg=args.step)
        report([("alpha", args.alpha), ("eta_B", eta_b), ("facets", len(fs))])
        write_records(args.out, [{"alpha": args.alpha, "eta_B": eta_b, "route": "facet"}])
        return EXIT_OK
    res = simpoly.shrink_factor(zb, step_deg=args.step)
    report([("alpha", args.alpha), ("eta_B", res.eta_b), ("worst_kind", res.kind),
            ("evaluations", res.n_evaluations)])
    write_records(args.out, [{"alpha": args.alpha, "eta_B": res.eta_b, "route": "lp",
                              "worst_kind": res.kind, "worst_params": list(res.worst_params)}])
    return EXIT_OK


def cmd_lp(args) -> int:
    if args.alpha is None:
        res = lhvlp.eta_bar(args.theta, args.phi)
        report([("theta", args.theta), ("phi", args.phi), ("eta_bar", res.value),
                ("alpha", res.alpha)] + [(f"eta[alpha={fmt(a)}]", v)
                                         for a, v in res.per_alpha.items()])
        write_records(args.out, [{"theta": args.theta, "phi": args.phi, "eta": res.value,
                                  "alpha": res.alpha}])
    else:
        eta = lhvlp.eta_at(args.theta, args.phi, args.alpha, args.eta_b)
        report([("theta", args.theta), ("phi", args.phi), ("alpha", args.alpha), ("eta", eta)])
        write_records(args.out, [{"theta": args.theta, "phi": args.phi, "eta": eta,
                                  "alpha": args.alpha}])
    return EXIT_OK


def _sweep_params(args) -> dict:
    return dict(eps=args.eps, dphi=math.radians(args.dphi_deg),
                phi_max=math.radians(args.phi_max_deg))


def cmd_chain(args) -> int:
    theta0 = args.theta0
    if theta0 is None:
        theta0 = sweep.CHAIN_STARTS.get(args.alpha, math.pi / 4)
    resume = sweep.read_chain_csv(args.resume, args.alpha) if args.resume else ()
    try:
        ch = sweep.run_chain(args.alpha, theta0, target=args.target, resume=resume,
                             workers=args.workers, **_sweep_params(args))
    except sweep.ChainAbort as exc:
        print(f"FAIL: {exc}")
        return EXIT_FAIL
    for i, p in enumerate(ch.points):
        print(f"{i} theta={fmt(p.theta)} eta={fmt(p.eta)} phi_min={fmt(p.phi_min)}")
    report([("points", len(ch.points)), ("theta_low", ch.theta_low), ("stop", ch.stop_reason)])
    if args.out:
        if Path(args.out).suffix == ".json":
            write_records(args.out, [{"i": i, "theta_i": p.theta, "eta": p.eta,
                                      "phi_min": p.phi_min} for i, p in enumerate(ch.points)])
        else:
            sweep.write_chain_csv(ch, args.out)
    return EXIT_OK


def _certify(args) -> sweep.Certificate:
    return sweep.certify_full_range(target=args.target, workers=args.workers,
                                    **_sweep_params(args))


def _print_certificate(cert: sweep.Certificate) -> None:
    for name, lo, hi in cert.intervals:
        print(f"{name}: [{fmt(lo)}, {fmt(hi)}]")
    for alpha, ch in sorted(cert.chains.items()):
        print(f"chain alpha={fmt(alpha)}: {len(ch.points)} points, {ch.stop_reason}")
    for lo, hi in cert.gaps:
        print(f"uncovered: [{fmt(lo)}, {fmt(hi)}]")
    print(cert.verdict)


def cmd_certify(args) -> int:
    cert = _certify(args)
    _print_certificate(cert)
    if args.out:
        sweep.write_certificate_json(cert, args.out)
    return EXIT_OK if cert.verdict == "PASS" else EXIT_FAIL


def cmd_fig2(args) -> int:
    cert = _certify(args)
    _print_certificate(cert)
    csv_path, svg_path = sweep.emit_fig2(cert, args.out)
    print(f"wrote {csv_path} and {svg_path}")
    return EXIT_OK if cert.verdict == "PASS" else EXIT_FAIL


def cmd_chsh(args) -> int:
    st = schmidt_state(args.theta, args.phi)
    rep = analytic.horodecki_chsh(st)
    see = analytic.chsh_seesaw(st, seed=args.seed)
    report([("theta", args.theta), ("chsh_horodecki", rep.value), ("chsh_seesaw", see),
            ("v_star", analytic.v_star(args.theta)),
            ("small_theta_bound", analytic.small_theta_bound(args.theta))])
    write_records(args.out, [{"theta": args.theta, "phi": args.phi, "horodecki": rep.value,
                              "seesaw": see}])
    return EXIT_OK


def cmd_steer_roundtrip(args) -> int:
    rng = np.random.default_rng(args.seed)
    records = []
    worst = 0.0
    for k in range(args.samples):
        if args.theta is not None and k == 0:
            theta, phi = args.theta, args.phi
        else:
            theta, phi = rng.uniform(0.05, math.pi / 4 - 0.01), rng.uniform(0, 2 * math.pi)
        st = schmidt_state(theta, phi)
        bob = bob_finite_set()
        asm = steer.assemblage(st, bob)
        rec = steer.ghjw_reconstruct(asm)
        asm2 = steer.assemblage(rec.state, rec.bob)
        res = float(np.max(np.abs(asm2.members - asm.members)))
        worst = max(worst, res)
        records.append({"theta": theta, "phi": phi, "residual": res})
    report([("samples", args.samples), ("max_residual", worst)])
    write_records(args.out, records)
    return EXIT_OK if worst <= 1e-10 else EXIT_FAIL


def cmd_innn22(args) -> int:
    n = args.n
    eta = args.eta if args.eta is not None else 1.0 / (n - 1)
    f = inn.inn22(n) if not args.transpose else inn.inn22(n).transpose()
    res = inn.seesaw(n, eta, restarts=args.restarts, seed=args.seed, dim=args.dim, functional=f)
    report([("N", n), ("eta", eta), ("value", res.value), ("local_bound", res.local_bound),
            ("margin", res.margin), ("seed", res.seed)])
    if res.found:
        cert = inn.compat_certificate(res.alice_base)
        worst = max(c.marginal_residual for c in cert.certificates)
        report([(f"{n - 1}-wise parents", len(cert.certificates)),
                ("max_marginal_residual", worst), ("compatible", cert.passed)])
    if args.out:
        inn.export_witness_csv(res, args.out)
    print(res.verdict)
    return EXIT_OK if res.found else EXIT_FAIL


# ------------------------------------------------------------------ parser


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", type=float, default=glue.ETA_TARGET, help="certified visibility")
    p.add_argument("--eps", type=float, default=sweep.DEFAULT_EPS, help="chain stopping step")
    p.add_argument("--dphi-deg", type=float, default=0.1, help="phi grid spacing in degrees")
    p.add_argument("--phi-max-deg", type=float, default=30.0, help="phi grid end in degrees")
    p.add_argument("--workers", type=int, default=1, help="processes for the phi grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhvcert", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("jm", help="joint measurability of the noisy trines")
    p.add_argument("--trine", action="store_true", help="use the trine family (default)")
    p.add_argument("--eta", type=float, default=glue.ETA_TARGET)
    p.add_argument("--threshold", action="store_true", help="bisect pair/triple thresholds")
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(func=cmd_jm)

    p = sub.add_parser("simulate", help="noisy trines from sharp X/Z measurements")
    p.add_argument("--eta", type=float, default=glue.ETA_TARGET)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("etab", help="shrink factor eta_B of the finite Bob set")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--route", choices=("lp", "facet"), default="lp")
    p.add_argument("--step", type=float, default=3.0, help="angle grid in degrees")
    p.set_defaults(func=cmd_etab)

    p = sub.add_parser("lp", help="largest local trine visibility at (theta, phi)")
    p.add_argument("--theta", type=float, default=math.pi / 4)
    p.add_argument("--phi", type=float, default=0.1192)
    p.add_argument("--alpha", type=float, default=None, help="fix alpha (default: best of both)")
    p.add_argument("--eta-b", type=float, default=None)
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("chain", help="one LP chain walking down in theta")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--theta0", type=float, default=None)
    p.add_argument("--resume", default=None, help="chain CSV to continue from")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("certify", help="full-range certificate")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("fig2", help="certificate plus CSV/SVG figure data")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("chsh", help="CHSH value of the Schmidt state")
    p.add_argument("--theta", type=float, default=math.pi / 4)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("steer-roundtrip", help="assemblage -> state + Bob POVMs -> assemblage")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_steer_roundtrip)

    p = sub.add_parser("innn22", help="see-saw violation with lossy (N-1)-wise compatible Alice")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--transpose", action="store_true", help="swap the parties' roles")
    p.set_defaults(func=cmd_innn22)

    for sp in sub.choices.values():
        sp.add_argument("--out", default=None, help="CSV or JSON output path")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "steer-roundtrip" and args.theta is None and args.samples == 1:
        args.theta = math.pi / 8
    if args.command == "fig2" and not args.out:
        parser.print_usage(sys.stderr)
        print("fig2 needs --out", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
