"""Batch front door: load Fedosov data, run constructions, run verification
suites, emit machine-readable reports.

Exit codes: 0 success, 1 check failure, 2 input or validation error.
Output is byte-identical across runs with the same (input, seed, order).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io as fio
from . import verify
from .quantize import (FedosovData, GaugeOperator, StarProduct, apply_gauge,
                       curvature_residual, fedosov_class, solve_r, tau)
from .weyl import ChartValidationError


class CliError(Exception):
    pass


def _load_data(path, order=None) -> FedosovData:
    data = fio.load_fedosov_data(path)
    if order is not None:
        data.order = order
    try:
        data.validate()
    except (ChartValidationError, ValueError) as exc:
        raise CliError(f"invalid Fedosov data: {exc}") from exc
    return data


def _parse_input(text, dim, order):
    try:
        return fio.parse_poly(text, dim, order)
    except fio.ParseError as exc:
        raise CliError(f"cannot parse polynomial {text!r}: {exc}") from exc


def _emit(args, payload_json, payload_text):
    if args.json:
        print(fio.dumps_canonical(payload_json))
    else:
        print(payload_text)


def cmd_star(args):
    data = _load_data(args.data, args.order)
    sp = StarProduct(data)
    a = _parse_input(args.a, data.chart.dim, data.order)
    b = _parse_input(args.b, data.chart.dim, data.order)
    result = sp(a, b)
    _emit(args, {"star": fio.weyl_to_json(result)}, fio.weyl_text(result))
    return 0


def cmd_tau(args):
    data = _load_data(args.data, args.order)
    r = solve_r(data, validate=False)
    a = _parse_input(args.a, data.chart.dim, data.order)
    result = tau(a, data, r).truncate(data.order)
    _emit(args, {"tau": fio.weyl_to_json(result)}, fio.weyl_text(result))
    return 0


def cmd_solve_r(args):
    data = _load_data(args.data, args.order)
    r = solve_r(data, validate=False)
    residual = curvature_residual(data, r)
    r_report = r.truncate(data.order)
    payload = {"r": fio.form_to_json(r_report),
               "residual": fio.form_to_json(residual),
               "residual_zero": residual.is_zero()}
    text = (f"r = {fio.form_text(r_report)}\n"
            f"residual (curvature class - Omega) = {fio.form_text(residual)}")
    _emit(args, payload, text)
    return 0 if residual.is_zero() else 1


def cmd_fedosov_class(args):
    data = _load_data(args.data, args.order)
    cls = fedosov_class(data)
    payload = {"fedosov_class": [
        {"hbar_power": k,
         "form": [{"indices": list(ij), "poly": fio.xpoly_to_json(p)}
                  for ij, p in sorted(form.items())]}
        for k, form in sorted(cls.items())]}
    lines = []
    for k, form in sorted(cls.items()):
        for (i, j), p in sorted(form.items()):
            lines.append(f"hbar^{k} ({p}) dx{i}dx{j}")
    _emit(args, payload, "\n".join(lines) or "0")
    return 0


def cmd_gauge(args):
    data = _load_data(args.data, args.order)
    with open(args.gauge, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"invalid gauge JSON: {exc}") from exc
    try:
        terms = {}
        for item in doc["terms"]:
            k = int(item["hbar_power"])
            ops = terms.setdefault(k, {})
            mu = tuple(int(v) for v in item["dx_multi_index"])
            ops[mu] = fio.xpoly_from_json(item["poly"], data.chart.dim)
        gauge = GaugeOperator(data.chart.dim, terms)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed gauge operator: {exc}") from exc
    sp = StarProduct(data)
    gauged = apply_gauge(sp, gauge)
    a = _parse_input(args.a, data.chart.dim, data.order)
    b = _parse_input(args.b, data.chart.dim, data.order)
    result = gauged(a, b)
    _emit(args, {"gauged_star": fio.weyl_to_json(result)}, fio.weyl_text(result))
    return 0


def cmd_verify(args):
    data = None
    if args.data is not None:
        data = _load_data(args.data, args.order)
    try:
        caps = verify.parse_caps(args.caps)
        checks = verify.run_suite(args.suite, data, args.dim, args.order,
                                  args.seed, caps)
    except KeyError as exc:
        raise CliError(str(exc)) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    report = {
        "suite": args.suite,
        "checks": [c.as_dict() for c in checks],
        "config": {"order": args.order, "seed": args.seed, "dim": args.dim,
                   "caps": args.caps, "data": args.data},
    }
    failed = [c for c in checks if not c.ok]
    if args.json:
        print(fio.dumps_canonical(report))
    else:
        for c in checks:
            status = "pass" if c.ok else "FAIL"
            line = f"[{status}] {args.suite}/{c.id}"
            if not c.ok and c.witness:
                line += f"  witness: {c.witness}"
            print(line)
        print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fedosov",
        description="Exact Fedosov quantization and Weyl-algebra Hochschild "
                    "cohomology toolkit.")
    parser.add_argument("--order", type=int, default=6,
                        help="filtration truncation order (default 6)")
    parser.add_argument("--seed", type=int, default=0,
                        help="PRNG seed for randomized checks (default 0)")
    parser.add_argument("--caps", default=None,
                        help="slot caps, e.g. y:6 (default: order)")
    parser.add_argument("--json", action="store_true",
                        help="emit canonical JSON instead of text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("star", help="evaluate a * b for polynomials a, b")
    p.add_argument("data", help="Fedosov data JSON file")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(fn=cmd_star)

    p = sub.add_parser("tau", help="horizontal lift of a polynomial")
    p.add_argument("data")
    p.add_argument("a")
    p.set_defaults(fn=cmd_tau)

    p = sub.add_parser("solve-r", help="solve the connection recursion; "
                                       "print r and the curvature residual")
    p.add_argument("data")
    p.set_defaults(fn=cmd_solve_r)

    p = sub.add_parser("fedosov-class", help="print the 2-form series "
                                             "(1/hbar)(-omega + Omega)")
    p.add_argument("data")
    p.set_defaults(fn=cmd_fedosov_class)

    p = sub.add_parser("gauge", help="evaluate the gauge-transformed product")
    p.add_argument("data")
    p.add_argument("gauge", help="gauge operator JSON file")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(fn=cmd_gauge)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=sorted(verify.SUITES) + ["all"])
    p.add_argument("--data", default=None, help="Fedosov data JSON file")
    p.add_argument("--dim", type=int, default=2)
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, fio.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
