"""Command-line interface.

    yamabe compute <spec.toml> --target sigma,B,v --order K --format json|csv|pretty
    yamabe verify <suite> --seed S --count C [--n N] [--jobs J]
    yamabe models --list

Exit codes: 0 success, 1 verification failure, 2 spec/usage error,
3 insufficient-order error.
"""

from __future__ import annotations

import argparse
import sys

from .jets import JetError
from .scalars import LambdaRational, Q
from .specparse import (
    GeometrySpec,
    InsufficientOrderError,
    SpecError,
    ambient_parser,
    boundary_parser,
    build_geometry,
    parse_spec,
    validate_order,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_SPEC_ERROR = 2
EXIT_ORDER_ERROR = 3


def main(argv=None):
    parser = argparse.ArgumentParser(prog="yamabe", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command")

    p_compute = sub.add_parser("compute", help="evaluate quantities from a geometry spec")
    p_compute.add_argument("spec", help="path to a TOML or JSON geometry spec")
    p_compute.add_argument("--target", default="sigma",
                           help="comma-separated subset of sigma,rho,B,v,u,w,"
                                "L-apply,P,Q,Dres,holographic")
    p_compute.add_argument("--order", type=int, default=None, help="override truncation order")
    p_compute.add_argument("--format", default="pretty", choices=("json", "csv", "pretty"))
    p_compute.add_argument("--output", default=None, help="write the report to a file")

    p_verify = sub.add_parser("verify", help="run randomized identity suites")
    p_verify.add_argument("suite", help="conformal|conjugation|commutators|normal-forms|"
                                        "yamabe|mt1|holographic|volume-numeric|all")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--count", type=int, default=3)
    p_verify.add_argument("--n", type=int, default=2, help="boundary dimension for the suites")
    p_verify.add_argument("--jobs", type=int, default=1)
    p_verify.add_argument("--format", default="pretty", choices=("json", "csv", "pretty"))
    p_verify.add_argument("--output", default=None)

    p_models = sub.add_parser("models", help="list built-in model geometries")
    p_models.add_argument("--list", action="store_true", default=True)

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_SPEC_ERROR
    try:
        if args.command == "compute":
            return _cmd_compute(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "models":
            return _cmd_models(args)
    except InsufficientOrderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORDER_ERROR
    except (SpecError, JetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC_ERROR
    return EXIT_SPEC_ERROR


def _emit(report, fmt, output):
    text = report.render(fmt)
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_models(args):
    from .models import MODEL_BUILDERS

    for name in sorted(MODEL_BUILDERS):
        print(name)
    return EXIT_OK


def _cmd_verify(args):
    from .report import Report
    from .verify import run_suite

    try:
        cases = run_suite(args.suite, seed=args.seed, count=args.count, n=args.n,
                          jobs=args.jobs)
    except ValueError as exc:
        raise SpecError(str(exc))
    report = Report(f"verify:{args.suite}:seed={args.seed}:count={args.count}:n={args.n}",
                    [args.suite], {})
    for c in cases:
        report.add_verdict(c["id"], c["identity"], c["passed"], c.get("defect"))
    _emit(report, args.format, args.output)
    return EXIT_OK if report.all_passed else EXIT_VERIFY_FAILED


def _cmd_compute(args):
    with open(args.spec) as fh:
        text = fh.read()
    fmt_hint = "json" if args.spec.endswith(".json") else None
    spec = parse_spec(text, fmt=fmt_hint)
    if args.order is not None:
        spec.order = args.order
    targets = [t.strip() for t in args.target.split(",") if t.strip()]
    validate_order(spec, targets)
    report = compute_targets(spec, targets)
    _emit(report, args.format, args.output)
    return EXIT_OK if report.all_passed else EXIT_VERIFY_FAILED


def compute_targets(spec: GeometrySpec, targets):
    """Evaluate the requested quantities; deterministic for identical specs."""
    from .report import Report
    from .robin import AdaptedRobin, extrinsic_laplacian, q_curvature
    from .scy import YamabeData
    from .series import SlicedChart

    n = spec.dimension
    metric, sigma, emb, model = build_geometry(spec)
    orders = {"spec": spec.order, "n": n}
    report = Report(spec.digest(), targets, orders)
    yd = YamabeData(metric, emb, geo_order=spec.order,
                    tangential_order=min(2, max(0, spec.order - n - 4)) or 1)
    needs_scy = {"sigma", "rho", "B", "v", "u", "w", "P", "Q", "Dres", "holographic"}
    robin = None

    def get_robin():
        nonlocal robin
        if robin is None:
            if spec.defining_function[0] == "explicit" and sigma is not None:
                from .charts import adapted_normal_form

                ad = adapted_normal_form(metric, sigma, emb, spec.order - 2)
                robin = AdaptedRobin(SlicedChart(ad))
            else:
                robin = AdaptedRobin(SlicedChart(yd.adapted))
        return robin

    for target in targets:
        base = target.split(":")[0]
        if base == "sigma":
            sig = yd.sigma()
            for k, c in sorted(sig.coefficients.items()):
                report.add_table(f"sigma_({k})", c)
        elif base == "rho":
            data = yd.rho_data()
            for k, c in enumerate(data.taylor):
                report.add_table(f"rho_taylor_{k}", c)
        elif base == "B":
            b1 = yd.obstruction("direct")
            b2 = yd.obstruction("adapted")
            report.add_table(f"B_{n}", b1.B)
            report.add_verdict("B-two-routes", "obstruction direct vs adapted routes",
                               b1.B == b2.B, b1.B - b2.B)
        elif base in ("v", "u", "w"):
            from .expansions import volume_coeffs

            vc = volume_coeffs(yd)
            fam = getattr(vc, base)
            for k, c in enumerate(fam):
                report.add_table(f"{base}_{k}", c)
        elif base == "L-apply":
            lam = Q(target.split(":")[1]) if ":" in target else Q(0)
            from .robin import robin_apply

            d = n + 1
            u = ambient_parser(n).parse(spec.params.get("u", "1")) if isinstance(
                spec.params.get("u", "1"), str) else None
            from .jets import Jet

            if u is None:
                u = Jet.constant(1, d, spec.order, None, 0)
            sig_jet = sigma if sigma is not None else yd.sigma().sigma_jet
            chart_metric = yd.geo.metric if sigma is None else metric
            val = robin_apply(
                MetricJet_safe(chart_metric, spec.order), sig_jet, lam,
                u.truncate(spec.order), n=n,
            )
            report.add_table(f"L({lam})(u)", val)
        elif base == "P":
            N = int(target.split(":")[1]) if ":" in target else min(2, n)
            f = boundary_parser(n).parse(str(spec.params.get("f", "x1")))
            val = extrinsic_laplacian(get_robin(), N, f.truncate(spec.order))
            report.add_table(f"P_{N}(f)", val, note="f = " + str(spec.params.get("f", "x1")))
        elif base == "Q":
            N = int(target.split(":")[1]) if ":" in target else n
            rec = q_curvature(get_robin(), N)
            report.add_table(f"Q_{N}", rec.value,
                             note="critical" if rec.critical else "subcritical")
        elif base == "Dres":
            parts = target.split(":")
            N = int(parts[1]) if len(parts) > 1 else 1
            lam = Q(parts[2]) if len(parts) > 2 else Q(0)
            from .expansions import residue_family_direct
            from .jets import Jet

            psi_text = spec.params.get("psi")
            psi = (ambient_parser(n).parse(str(psi_text)) if psi_text
                   else Jet.constant(1, n + 1, spec.order, None, 0))
            val = residue_family_direct(get_robin(), N, lam, psi.truncate(spec.order)).value
            report.add_table(f"Dres_{N}({lam})(psi)", val)
        elif base == "holographic":
            from .expansions import holographic_q_critical

            if n % 2:
                report.add_verdict("holographic", "holographic critical formula needs even n",
                                   False, "odd boundary dimension")
            else:
                holo = holographic_q_critical(get_robin())
                qn = q_curvature(get_robin(), n).value
                report.add_table(f"Q_{n}_holographic", holo)
                report.add_verdict("holographic-vs-composition",
                                   f"holographic formula equals composed Q_{n}",
                                   holo == qn, holo - qn)
        else:
            raise SpecError(f"unknown target {target!r}")
    return report


def MetricJet_safe(metric, order):
    from .geometry import MetricJet

    return MetricJet(metric.g.map(lambda e: e.truncate(order)), check=False)


if __name__ == "__main__":
    sys.exit(main())
