"""Command-line interface: ``ordvar <subcommand> ...``.

Exit status is 0 on success, 1 when a computation is rejected for domain or
numerical reasons, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .analysis import bundled_series, estimator_table, ks_normal_test, load_series, summarize
from .bz_bayes import BoundaryFunctionSpec, boundary_values, check_ierd_conditions
from .constants import stein_constants
from .errors import OrdvarError
from .estimators import Target, TwoSampleSummary, Variant, estimate
from .losses import parse_loss
from .simulation import load_configs, regime_notes, run_grid, write_csv

FMT = "%.15g"


def _loss_arg(text):
    try:
        return parse_loss(text)
    except OrdvarError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _losses_arg(text):
    return [_loss_arg(part) for part in text.split(",") if part.strip()]


def _variant_arg(text):
    try:
        return Variant.parse(text)
    except OrdvarError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _variants_arg(text):
    return [_variant_arg(part) for part in text.split(",") if part.strip()]


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return conv


def _add_model(p, with_component=False):
    p.add_argument("--loss", type=_loss_arg, required=True,
                   help="quadratic, entropy, symmetric or linex:a=<real>")
    p.add_argument("--p1", type=int, required=True)
    p.add_argument("--p2", type=int, required=True)
    p.add_argument("--k", type=_positive(float), required=True)
    if with_component:
        p.add_argument("--component", type=int, choices=(1, 2), required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ordvar",
        description="Improved estimators of ordered normal variances sigma1 <= sigma2.")
    ap.add_argument("--version", action="version", version=f"ordvar {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="<command>")

    p = sub.add_parser("constants", help="BAEE and Stein truncation constants")
    _add_model(p)
    p.add_argument("--method", choices=("auto", "closed", "numeric"), default="auto")

    p = sub.add_parser("estimate", help="point estimate from summary statistics")
    p.add_argument("--input", "--summary", dest="summary",
                   help="JSON file with p1, p2, mean1, mean2, ss1, ss2")
    for name, kind in (("p1", int), ("p2", int), ("mean1", float), ("mean2", float),
                       ("ss1", float), ("ss2", float)):
        p.add_argument(f"--{name}", type=kind)
    p.add_argument("--target", choices=("sigma1", "sigma2"), default="sigma1")
    p.add_argument("--k", type=_positive(float), required=True)
    p.add_argument("--loss", type=_loss_arg, required=True)
    p.add_argument("--variant", type=_variant_arg, default=Variant.BAEE,
                   help=", ".join(v.value for v in Variant))

    p = sub.add_parser("boundary", help="boundary function phi* (component 1) or psi* (component 2)")
    _add_model(p, with_component=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--arg", type=_positive(float), help="u = S2/S1 or w = S1/S2")
    g.add_argument("--table", help="write a CSV of (arg, value) over a log grid")
    p.add_argument("--grid-min", type=_positive(float), default=1e-3)
    p.add_argument("--grid-max", type=_positive(float), default=1e3)
    p.add_argument("--grid-n", type=int, default=61)
    p.add_argument("--method", choices=("auto", "closed", "nested"), default="auto")

    p = sub.add_parser("simulate", help="Monte Carlo risks and RRI curves")
    p.add_argument("--config", required=True, help="JSON config object or list of objects")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("analyze", help="summaries, KS tests and estimator tables for two series")
    p.add_argument("--data1", required=True, help="file path, or bundled:bengaluru")
    p.add_argument("--data2", required=True, help="file path, or bundled:hyderabad")
    p.add_argument("--k", type=_positive(float), required=True)
    p.add_argument("--losses", type=_losses_arg, required=True, help="comma-separated losses")
    p.add_argument("--variants", type=_variants_arg, default=list(Variant),
                   help="comma-separated variants (default: all)")
    p.add_argument("--out", required=True, help="output CSV of estimates for both components")
    p.add_argument("--summary-out", help="write the two-sample summary as JSON")

    p = sub.add_parser("verify-ierd", help="check a candidate boundary against the improvement conditions")
    _add_model(p, with_component=True)
    p.add_argument("--candidate", default="boundary",
                   help="boundary, baee, stein, or scaled:<factor> (times the boundary)")
    p.add_argument("--grid-min", type=_positive(float), default=1e-6)
    p.add_argument("--grid-max", type=_positive(float), default=1e6)
    p.add_argument("--grid-n", type=int, default=61)
    return ap


def _cmd_constants(a, out):
    b = stein_constants(a.loss, a.p1, a.p2, a.k, a.method)
    d = b.to_dict()
    for key, val in d.items():
        print(f"{key}={FMT % val}", file=out)
    print(json.dumps(d), file=out)


def _cmd_estimate(a, out):
    if a.summary:
        s = TwoSampleSummary.load(a.summary)
    else:
        fields = ("p1", "p2", "mean1", "mean2", "ss1", "ss2")
        missing = [f for f in fields if getattr(a, f) is None]
        if missing:
            raise _Usage("estimate needs --input or all of " + ", ".join("--" + f for f in fields))
        s = TwoSampleSummary(*(getattr(a, f) for f in fields))
    print(FMT % estimate(s, Target.parse(a.target, a.k), a.loss, a.variant), file=out)


def _grid(a):
    if a.grid_n < 1 or a.grid_min > a.grid_max:
        raise _Usage("grid needs --grid-n >= 1 and --grid-min <= --grid-max")
    return np.geomspace(a.grid_min, a.grid_max, a.grid_n)


def _cmd_boundary(a, out):
    spec = BoundaryFunctionSpec(a.component, a.loss, a.p1, a.p2, a.k)
    if a.arg is not None:
        print(FMT % boundary_values(spec, a.arg, a.method), file=out)
        return
    grid = _grid(a)
    vals = boundary_values(spec, grid, a.method)
    name = "u" if a.component == 1 else "w"
    with open(a.table, "w") as fh:
        fh.write(f"# ordvar {__version__} component={a.component} loss={a.loss.name} "
                 f"p1={a.p1} p2={a.p2} k={a.k:g}\n")
        fh.write(f"{name},value\n")
        for z, v in zip(grid, vals):
            fh.write(f"{FMT % z},{FMT % v}\n")


def _cmd_simulate(a, out):
    if a.jobs < 1:
        raise _Usage("--jobs must be >= 1")
    configs = load_configs(a.config)
    for i, c in enumerate(configs):
        for note in regime_notes(c):
            print(f"config {i}: {note}", file=sys.stderr)
    results = run_grid(configs, a.jobs)
    write_csv(results, a.out)
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"config {r.config_id} failed: {r.error}", file=sys.stderr)
    return 1 if failed else 0


def _series(spec):
    if spec.startswith("bundled:"):
        return bundled_series(spec.split(":", 1)[1])
    return load_series(spec)


def _cmd_analyze(a, out):
    s1, s2 = _series(a.data1), _series(a.data2)
    s = summarize(s1, s2)
    for label, ser in (("data1", s1), ("data2", s2)):
        ks = ks_normal_test(ser)
        print(f"{label}: n={ks.n} ks_statistic={FMT % ks.statistic} ks_p_value={FMT % ks.p_value}",
              file=out)
    print(f"note: {ks.note}", file=out)
    for key, val in s.to_dict().items():
        print(f"{key}={FMT % val}", file=out)
    if a.summary_out:
        with open(a.summary_out, "w") as fh:
            json.dump(s.to_dict(), fh, indent=2)
            fh.write("\n")
    tables = [estimator_table(s, a.k, a.losses, a.variants, component=c) for c in (1, 2)]
    with open(a.out, "w") as fh:
        fh.write(f"# ordvar {__version__} k={a.k:g}\n")
        fh.write("component,k,loss,variant,value,note\n")
        for t in tables:
            for c in t.cells:
                val = "" if c.value is None else FMT % c.value
                note = c.note.replace('"', "'")
                fh.write(f'{t.component},{a.k:g},{c.loss},{c.variant},{val},"{note}"\n')


def _candidate(text, spec):
    if text == "boundary":
        return lambda z: boundary_values(spec, z)
    if text == "baee":
        return lambda z: spec.c0
    if text == "stein":
        c0, a1, h = spec.c0, spec.alpha1, spec.k / 2.0
        if spec.component == 1:
            return lambda z: min(c0, a1 * (1.0 + z) ** h)
        return lambda z: max(c0, a1 * (1.0 + z) ** h)
    if text.startswith("scaled:"):
        try:
            f = float(text.split(":", 1)[1])
        except ValueError:
            raise _Usage(f"bad scale factor in {text!r}") from None
        return lambda z: f * boundary_values(spec, z)
    raise _Usage(f"unknown candidate {text!r}")


def _cmd_verify(a, out):
    spec = BoundaryFunctionSpec(a.component, a.loss, a.p1, a.p2, a.k)
    report = check_ierd_conditions(_candidate(a.candidate, spec), spec, _grid(a))
    print(json.dumps(report.to_dict(), indent=2), file=out)


class _Usage(Exception):
    pass


COMMANDS = {
    "constants": _cmd_constants,
    "estimate": _cmd_estimate,
    "boundary": _cmd_boundary,
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "verify-ierd": _cmd_verify,
}


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out) or 0
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"ordvar: error: {exc}", file=sys.stderr)
        return 2
    except (OrdvarError, ValueError, OSError, ArithmeticError) as exc:
        print(f"ordvar: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
