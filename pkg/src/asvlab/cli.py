"""Command-line entry point: ``asvlab {table,check,mc,grothendieck}``.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage error.
Reports go to stdout (CSV or JSON); diagnostics go to stderr.
"""
import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import asv_core as core
from .errors import AsvError, BoundViolation
from .grothendieck import GrothendieckInstance, generate_instance, guarantee_experiment, solve_sdp
from .monte_carlo import DEFAULT_SEED, Field, McConfig, Statistic, estimate

IDENTITY_TOL = 1e-9
ROUTE_TOL = 1e-8
PROP1_TOL = 1e-9
GRID_POINTS = 100


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return now.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunReport:
    command: str
    parameters: dict
    records: list
    passed: bool
    timestamp: str = field(default_factory=_timestamp)

    def to_json(self) -> str:
        return json.dumps(
            {
                "command": self.command,
                "parameters": self.parameters,
                "records": self.records,
                "pass": self.passed,
                "timestamp": self.timestamp,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        obj = json.loads(text)
        return cls(obj["command"], obj["parameters"], obj["records"], obj["pass"], obj["timestamp"])

    def to_csv(self) -> str:
        columns: list = []
        for rec in self.records:
            columns.extend(k for k in rec if k not in columns)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for rec in self.records:
            writer.writerow([_csv_cell(rec.get(c)) for c in columns])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json() + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".15g")
    return str(v)


# ---------------------------------------------------------------- table


def cmd_table(d_max: int, route: str = "quadrature") -> RunReport:
    params = {"dmax": d_max, "route": route}
    try:
        records = [r.as_dict() for r in core.asv_table(d_max, core.Route(route))]
        return RunReport("table", params, records, True)
    except BoundViolation as exc:
        print(f"check failed at d={exc.d}: {exc}", file=sys.stderr)
        return RunReport("table", params, [{"error": str(exc), "d": exc.d}], False)


# ---------------------------------------------------------------- check


def _record(check, d, value, tol, passed, **extra):
    rec = {"check": check, "d": d, "value": value, "tolerance": tol, "passed": bool(passed)}
    rec.update(extra)
    return rec


def _worst(check, d, x, res, tol):
    i = int(np.argmax(res))
    return _record(check, d, float(res[i]), tol, res[i] <= tol, x=float(x[i]))


def identity_records(d_max: int = 50) -> list:
    recs = []
    for d in range(1, d_max + 1):
        x = np.linspace(0.0, 4.0 * d, GRID_POINTS)
        recs.append(_worst("christoffel_darboux_confluent", d, x, core.derivative_residual(d, x, relative=True), IDENTITY_TOL))
        if d >= 2:
            recs.append(_worst("turan", d, x, core.turan_identity_residual(d, x, relative=True), IDENTITY_TOL))
        recs.append(_worst("l1l2", d, x, core.l1l2_residual(d, x, relative=True), IDENTITY_TOL))
        recs.append(_worst("recurrence", d, x, core.recurrence_residual(d, x, relative=True), IDENTITY_TOL))
        # off-diagonal kernel: pair each grid point with its mirror image
        y = x[::-1]
        keep = np.abs(x - y) >= 1e-3
        cd = core.christoffel_darboux_residual(d, x[keep], y[keep], relative=True)
        recs.append(_worst("christoffel_darboux", d, x[keep], cd, IDENTITY_TOL))
    for d in range(1, 41):
        q1, c1 = core.i1(d, "quadrature"), core.i1(d, "closed_form")
        q2, c2 = core.i2(d, "quadrature"), core.i2(d, "closed_form")
        recs.append(_record("i1_routes", d, abs(q1 - c1) / abs(c1), ROUTE_TOL, abs(q1 - c1) <= ROUTE_TOL * abs(c1)))
        recs.append(_record("i2_routes", d, abs(q2 - c2) / abs(c2), ROUTE_TOL, abs(q2 - c2) <= ROUTE_TOL * abs(c2)))
        gap = abs(core.alpha_difference(d, cross_check=False) - (core.alpha_complex(d + 1) - core.alpha_complex(d)))
        recs.append(_record("recurrence_integrated", d, gap, PROP1_TOL, gap <= PROP1_TOL))
    witness = next((d for d in range(1, 11) if core.increment_sign_change(d)), None)
    recs.append(_record("increment_sign_change", witness, None, None, witness is not None))
    return recs


def bound_records(d_max: int = 50, chain_max: int = 100) -> list:
    recs = []
    alphas = [core.alpha_complex(d) for d in range(1, core.D_MAX + 1)]
    for d, a in enumerate(alphas, start=1):
        ok = core.LIMIT < a <= core.ALPHA_ONE + 1e-12
        recs.append(_record("sandwich", d, a, 1e-12, ok))
        if d < core.D_MAX:
            diff = alphas[d] - a
            recs.append(_record("monotone", d, diff, 1e-12, diff <= 1e-12))
    for d in range(2, d_max + 1):
        s = core.lemma1_bound_check(d)
        recs.append(_record("i2_upper_bound", d, s, 0.0, s >= 0))
        s = core.i1_lower_bound_check(d)
        recs.append(_record("i1_lower_bound", d, s, 0.0, s >= 0))
    for d in range(2, chain_max + 1):
        c = core.chained_inequality(d)
        names = ("chain_link1", "chain_link2", "chain_link3")
        values = (c.lhs - c.bound_step, c.bound_step - c.gap_step, c.gap_step)
        for name, v, ok in zip(names, values, c.links):
            recs.append(_record(name, d, v, 0.0, ok))
    return recs


def cmd_check(suite: str = "all") -> RunReport:
    records = []
    if suite in ("identities", "all"):
        records += identity_records()
    if suite in ("bounds", "all"):
        records += bound_records()
    passed = all(r["passed"] for r in records)
    for r in records:
        if not r["passed"]:
            where = f" x={r['x']}" if "x" in r else ""
            print(f"FAIL {r['check']} d={r['d']}{where} value={r['value']!r}", file=sys.stderr)
    return RunReport("check", {"suite": suite}, records, passed)


# ---------------------------------------------------------------- mc

_STAT_ALIASES = {"avg": "avg_sv", "min": "min_sv", "max": "max_sv"}


def cmd_mc(d: int, trials: int, seed: int, field_: str, statistic: str) -> RunReport:
    stat = Statistic(_STAT_ALIASES.get(statistic, statistic))
    cfg = McConfig(d=d, trials=trials, seed=seed, field=Field(field_))
    est = estimate(cfg, stat)
    rec = est.as_dict()
    rec["field"] = cfg.field.value
    rec["d"] = d
    if cfg.field is Field.COMPLEX and stat is Statistic.AVG_SV:
        exact = core.alpha_complex(d)
        rec["exact"] = exact
        rec["z"] = est.z_score(exact)
        passed = abs(rec["z"]) <= 4
    elif cfg.field is Field.COMPLEX and stat is Statistic.MIN_SV:
        rec["bound"] = core.ALPHA_ONE
        passed = est.mean <= core.ALPHA_ONE
    elif cfg.field is Field.COMPLEX:
        rec["bound"] = core.LIMIT
        passed = est.mean > core.LIMIT
    elif stat is Statistic.AVG_SV and d >= 2:
        rec["bound"] = core.LIMIT - core.REAL_GAP / d
        passed = est.mean >= rec["bound"] - 3 * est.std_error
    else:
        passed = True
    if not passed:
        print(f"statistical check failed; reproduce with --seed {seed}", file=sys.stderr)
    params = {"d": d, "trials": trials, "seed": seed, "field": cfg.field.value, "statistic": stat.value}
    return RunReport("mc", params, [rec], passed)


# ---------------------------------------------------------------- grothendieck


def cmd_grothendieck(
    d: int,
    n: int,
    seed: int,
    roundings: int,
    instance_path: Optional[str] = None,
    save_path: Optional[str] = None,
) -> RunReport:
    if instance_path:
        with open(instance_path) as fh:
            inst = GrothendieckInstance.from_json(fh.read())
    else:
        inst = generate_instance(d, n, seed)
    if save_path:
        with open(save_path, "w") as fh:
            fh.write(inst.to_json())
    sol = solve_sdp(inst, seed=seed)
    params = {"d": inst.d, "n": inst.n, "seed": seed, "roundings": roundings}
    if not sol.converged:
        print(f"relaxation did not converge in {sol.sweeps} sweeps (d={inst.d} n={inst.n} seed={seed})", file=sys.stderr)
        return RunReport("grothendieck", params, [{"sdp_objective": sol.objective, "sweeps": sol.sweeps}], False)
    res = guarantee_experiment(inst, roundings, seed=seed, solution=sol)
    rec = res.as_dict()
    rec["sweeps"] = sol.sweeps
    if not res.passed:
        print(f"guarantee check failed; reproduce with --d {inst.d} --n {inst.n} --seed {seed} --roundings {roundings}", file=sys.stderr)
    return RunReport("grothendieck", params, [rec], res.passed)


# ---------------------------------------------------------------- argparse


def _int_range(lo, hi):
    def parse(text):
        try:
            v = int(text, 0)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        if not lo <= v <= hi:
            raise argparse.ArgumentTypeError(f"must lie in [{lo}, {hi}]")
        return v

    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asvlab", description="Average singular value laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp, default="json"):
        sp.add_argument("--format", choices=("csv", "json"), default=default)
        sp.add_argument("--output", help="write the report here instead of stdout")

    t = sub.add_parser("table", help="alpha_C(d) table with bounds")
    t.add_argument("--dmax", type=_int_range(1, core.D_MAX), required=True)
    t.add_argument("--route", choices=("quadrature", "closed_form"), default="quadrature")
    fmt(t, "csv")

    c = sub.add_parser("check", help="identity and bound suites")
    c.add_argument("suite", choices=("identities", "bounds", "all"), nargs="?", default="all")
    fmt(c)

    m = sub.add_parser("mc", help="Monte Carlo estimate")
    m.add_argument("--d", type=_int_range(1, 256), required=True)
    m.add_argument("--trials", type=_int_range(100, 10**8), default=100_000)
    m.add_argument("--seed", type=_int_range(0, 2**64 - 1), default=DEFAULT_SEED)
    m.add_argument("--field", choices=("complex", "real"), default="complex")
    m.add_argument("--stat", choices=("avg", "min", "max", "avg_sv", "min_sv", "max_sv"), default="avg")
    fmt(m)

    g = sub.add_parser("grothendieck", help="relax-and-round experiment over U(d)")
    g.add_argument("--d", type=_int_range(1, 8), default=2)
    g.add_argument("--n", type=_int_range(1, 12), default=4)
    g.add_argument("--seed", type=_int_range(0, 2**64 - 1), default=DEFAULT_SEED)
    g.add_argument("--roundings", type=_int_range(1000, 10**7), default=1000)
    g.add_argument("--instance", help="load the instance from this JSON file")
    g.add_argument("--save-instance", help="write the instance to this JSON file")
    fmt(g)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "table":
            report = cmd_table(args.dmax, args.route)
        elif args.command == "check":
            report = cmd_check(args.suite)
        elif args.command == "mc":
            report = cmd_mc(args.d, args.trials, args.seed, args.field, args.stat)
        else:
            report = cmd_grothendieck(args.d, args.n, args.seed, args.roundings, args.instance, args.save_instance)
    except AsvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = report.render(args.format)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
