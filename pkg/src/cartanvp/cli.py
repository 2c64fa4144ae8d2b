"""Command-line surface.

Commands: analyze | el | annihilator | frobenius | integrate | verify |
liouville | example.  Input is the problem-spec JSON; output is JSON
(default), a text rendering of the same content, or CSV for patches.
All randomness is seeded from the spec (default 0xC4A7), overridable by
the CARTAN_VP_SEED environment variable and the --seed flag (flag wins);
the effective seed is echoed in every report, and identical runs are
byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import fixtures as fx
from . import flows
from . import ideals as ids
from . import liouville as lv
from . import specio
from . import varprin as vp
from .errors import CartanVPError, ParseError
from .symexpr import DEFAULT_SEED

__all__ = ["main", "build_parser", "run"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cartanvp",
        description="variational Cartan ideals: analyze action forms, list "
        "critical-section equations, and integrate characteristic fields",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_spec=True):
        if needs_spec:
            p.add_argument("--spec", required=True, help="problem spec JSON path")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=["json", "text", "csv"], default="json")
        p.add_argument("--seed", type=int, help="override the spec / env seed")
        p.add_argument("--box", help="sampling box as 'lo,hi'")
        p.add_argument("--step", type=float, help="integration step")
        p.add_argument("--tol", type=float, help="residual tolerance")
        p.add_argument("--instance", help="numeric instantiation block name")

    common(sub.add_parser("analyze", help="classification, annihilator, Frobenius verdict"))
    common(sub.add_parser("el", help="critical-section equations"))
    common(sub.add_parser("annihilator", help="annihilator basis of the two-step differential"))
    common(sub.add_parser("frobenius", help="integrability verdict for the annihilator"))
    p = sub.add_parser("verify", help="residuals of a candidate section")
    common(p)
    p.add_argument("--section", required=True, help="section JSON path")
    p = sub.add_parser("integrate", help="sweep a critical section patch (CSV)")
    common(p)
    p.add_argument("--section", required=True, help="seed-section JSON path")
    p = sub.add_parser("liouville", help="assemble the action form of a volume-preserving field")
    common(p)
    p = sub.add_parser("example", help="run a stored worked example against its goldens")
    p.add_argument("name", choices=list(fx.FIXTURE_NAMES))
    common(p, needs_spec=False)
    return ap


def _effective_seed(args, spec_options) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("CARTAN_VP_SEED")
    if env:
        return int(env)
    return spec_options.get("seed", DEFAULT_SEED)


def _parse_box(text: Optional[str]):
    if not text:
        return None
    lo, hi = (float(v) for v in text.split(","))
    return (lo, hi)


def _load_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def _problem(args):
    spec = _load_json(args.spec)
    options = specio.options_from_spec(spec)
    seed = _effective_seed(args, options)
    box = _parse_box(args.box) or options["box"]
    instance = None
    if args.instance:
        instance = spec.get("instances", {}).get(args.instance)
        if instance is None:
            raise ParseError(f"spec has no instance {args.instance!r}")
    p = specio.problem_from_spec(spec, box=box, seed=seed, instance=instance)
    options["seed"] = seed
    options["box"] = box
    if args.step is not None:
        options["step"] = args.step
    if args.tol is not None:
        options["tolerance"] = args.tol
    return p, spec, options


def _field_json(Y) -> dict:
    return {
        name: str(c)
        for name, c in zip(Y.chart.coords, Y.components)
        if not c.is_const_zero()
    }


def cmd_analyze(args):
    p, spec, options = _problem(args)
    cls = p.classification
    fr = ids.frobenius_check(p.annihilator, box=options["box"], seed=options["seed"])
    verdict, witnesses = vp.check_proper(p)
    report = {
        "seed": options["seed"],
        "classification": {
            "n": cls.n,
            "k": cls.k,
            "degree_case": cls.degree_case,
            "proper": cls.proper,
            "q": cls.q,
            "r": cls.r,
            "h": cls.h,
            "vertical_dim": cls.vertical_dim,
        },
        "annihilator_basis": [_field_json(Y) for Y in p.annihilator.basis],
        "vertical_witnesses": [_field_json(Y) for Y in witnesses],
        "frobenius": {"verdict": fr.verdict, "detail": fr.detail},
        "rank_certificate": p.annihilator.certificate.to_record(),
    }
    lines = [
        f"case: {cls.degree_case}   proper: {cls.proper}",
        f"n = {cls.n}, k = {cls.k}, q = {cls.q}, r = {cls.r}"
        + (f", h = {cls.h}" if cls.h is not None else ""),
        "annihilator basis:",
    ]
    for Y in p.annihilator.basis:
        lines.append("  " + Y.display())
    if witnesses:
        lines.append("vertical annihilator witnesses:")
        for Y in witnesses:
            lines.append("  " + Y.display())
    lines.append(f"frobenius: {fr.verdict}")
    return report, "\n".join(lines), 0


def cmd_el(args):
    p, spec, options = _problem(args)
    system = vp.critical_equations(p)
    report = {
        "seed": options["seed"],
        "route": system.route,
        "jet_names": list(system.jet_names),
        "equations": [str(d) for d in system.deltas],
        "minor_vs_pullback_constant": str(system.ratio),
    }
    if system.P is not None:
        report["P"] = [[str(e) for e in row] for row in system.P]
    lines = [f"critical-section equations ({system.route} route):"]
    for a, d in enumerate(system.deltas, start=1):
        lines.append(f"  Delta_{a} = {d} = 0")
    return report, "\n".join(lines), 0


def cmd_annihilator(args):
    p, spec, options = _problem(args)
    report = {
        "seed": options["seed"],
        "rank": p.annihilator.rank,
        "basis": [_field_json(Y) for Y in p.annihilator.basis],
        "certificate": p.annihilator.certificate.to_record(),
    }
    lines = [f"annihilator rank {p.annihilator.rank}:"]
    for Y in p.annihilator.basis:
        lines.append("  " + Y.display())
    return report, "\n".join(lines), 0


def cmd_frobenius(args):
    p, spec, options = _problem(args)
    fr = ids.frobenius_check(p.annihilator, box=options["box"], seed=options["seed"])
    report = {
        "seed": options["seed"],
        "verdict": fr.verdict,
        "detail": fr.detail,
        "witness_pair": fr.witness_pair,
        "witness_point": fr.witness_point,
    }
    code = 0 if fr.verdict == "integrable" else 1
    return report, f"frobenius: {fr.verdict} {fr.detail}".rstrip(), code


def cmd_verify(args):
    p, spec, options = _problem(args)
    section_spec = _load_json(args.section)
    phi = specio.section_from_spec(p.chart, section_spec)
    result = vp.verify_critical(p, phi)
    report = {
        "seed": options["seed"],
        "critical": result.ok,
        "cross_checked": result.cross_checked,
        "residuals": [str(r) for r in result.residuals],
    }
    lines = [f"critical: {result.ok}"]
    for a, r in enumerate(result.residuals, start=1):
        lines.append(f"  residual_{a} = {r}")
    return report, "\n".join(lines), 0 if result.ok else 1


def cmd_integrate(args):
    p, spec, options = _problem(args)
    section_spec = _load_json(args.section)
    grid = {
        name: tuple(v) for name, v in section_spec["grid"].items()
    }
    seed_axes = section_spec.get("seed_axes", [])
    comps = {
        name: specio.parse_coefficient(text, {})
        for name, text in section_spec["components"].items()
    }
    D = p.annihilator
    patch = flows.sweep_section(
        p,
        D,
        comps,
        grid,
        seed_axes=seed_axes,
        step=options["step"],
        tolerance=options["tolerance"],
        axis_order=section_spec.get("axis_order"),
    )
    report = {
        "seed": options["seed"],
        "nodes": int(patch.points.size // p.chart.dim),
        "max_residual": patch.max_residual,
        "provenance": patch.provenance,
    }
    text = f"swept {report['nodes']} nodes, max residual {patch.max_residual:.3e}"
    return report, text, 0, patch.to_csv()


def cmd_liouville(args):
    spec = _load_json(args.spec)
    options = specio.options_from_spec(spec)
    seed = _effective_seed(args, options)
    phase = list(spec["phase"])
    from .forms import Chart

    chart = Chart(tuple(phase))
    omega = specio.form_from_records(chart, spec["omega"], {})
    X = specio.field_from_spec(chart, spec["field"])
    liou = lv.is_liouville(X, omega)
    report = {"seed": seed, "is_liouville": liou}
    if not liou:
        return report, "is_liouville: false", 1
    sigma = (
        specio.form_from_records(chart, spec["sigma"], {}) if "sigma" in spec else None
    )
    setup = lv.build_setup(chart, omega, X, sigma=sigma)
    problem = lv.build_theta(setup, box=_parse_box(args.box), seed=seed)
    hodge_ok, hodge_sign = lv.verify_hodge_identity(setup)
    W = vp.characteristic_field_maximal_degree(problem)
    report.update(
        {
            "sign_s": setup.sign_s,
            "theta": [
                {"coeff": str(c), "index": [setup.extended.coords[i] for i in idx]}
                for idx, c in sorted(setup.theta.terms.items())
            ],
            "Z_annihilates_eta": True,
            "hodge_identity": hodge_ok,
            "hodge_sign": hodge_sign,
            "characteristic_field": _field_json(W),
        }
    )
    lines = [
        "is_liouville: true",
        f"sign s = {setup.sign_s}",
        f"theta = {setup.theta.display()}",
        f"hodge identity: {hodge_ok} (sign {hodge_sign})",
        f"characteristic field: {W.display()}",
    ]
    return report, "\n".join(lines), 0 if hodge_ok else 1


def cmd_example(args):
    rep = fx.run_fixture(args.name, seed=args.seed)
    report = rep.to_dict()
    report["seed"] = args.seed if args.seed is not None else specio.options_from_spec(fx.load(args.name))["seed"]
    lines = [f"fixture {rep.name}: {'PASS' if rep.passed else 'FAIL'} ({rep.elapsed:.2f}s)"]
    for item in rep.items:
        lines.append(f"  [{item.status:^11}] {item.name}")
        if item.status == "discrepancy":
            lines.append(f"      printed:  {item.detail.get('printed', '')}")
            lines.append(f"      computed: {item.detail.get('computed', '')[:160]}")
    return report, "\n".join(lines), 0 if rep.passed else 1


COMMANDS = {
    "analyze": cmd_analyze,
    "el": cmd_el,
    "annihilator": cmd_annihilator,
    "frobenius": cmd_frobenius,
    "verify": cmd_verify,
    "integrate": cmd_integrate,
    "liouville": cmd_liouville,
    "example": cmd_example,
}


def run(argv=None) -> tuple[int, str]:
    """Parse, execute, and render; returns (exit code, rendered output)."""
    args = build_parser().parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except ParseError as exc:
        payload = json.dumps({"error": str(exc), "position": exc.position}, sort_keys=True)
        return 2, payload
    except CartanVPError as exc:
        payload = json.dumps(
            {"error": str(exc), "kind": type(exc).__name__}, sort_keys=True
        )
        return 1, payload
    except (ValueError, KeyError) as exc:
        payload = json.dumps(
            {"error": str(exc), "kind": type(exc).__name__}, sort_keys=True
        )
        return 2, payload
    if len(result) == 4:
        report, text, code, csv_payload = result
    else:
        report, text, code = result
        csv_payload = None
    if args.format == "json":
        out = json.dumps(report, sort_keys=True, indent=2) + "\n"
    elif args.format == "text":
        out = text + "\n"
    else:
        if csv_payload is None:
            raise SystemExit("csv format is only available for integrate")
        out = csv_payload
    if args.out:
        with open(args.out, "w") as f:
            f.write(out)
        return code, ""
    return code, out


def main(argv=None) -> int:
    code, out = run(argv)
    if out:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
