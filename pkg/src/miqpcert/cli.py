"""Command-line surface: generate problem families, solve instances,
certify iteration bounds, validate them against online runs, and export
partition data for external plotting.

Exit codes: 0 success, 2 validation failure (a certified bound misses a
point, a parameter outside the set, an unsupported dimension, a negative
gap), 3 parse error, 4 numerical failure, 1 I/O trouble.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields

import numpy as np

from .bnb import solve_miqp
from .certify import (MEASURES, certify, load_partition, save_partition,
                      validation_report)
from .errors import (MiqpcertError, NotCovered, ParameterOutsideTheta0,
                     ParseError, UnsupportedDimension)
from .geometry import MEMBERSHIP_TOL
from .linalg import min_eigenvalue
from .problem import _fmt, load_problem, random_mpmiqp, save_problem

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_PARSE = 3
EXIT_NUMERICAL = 4


@dataclass(frozen=True)
class RunConfig:
    """Settings for problem generation and validation runs. Built from
    flags or a JSON mapping; unknown keys and out-of-range values are
    rejected."""

    seed: int = 1
    count: int = 1
    n_c: int = 2
    n_b: int = 4
    m: int = 6
    n_theta: int = 2
    measure: str = "iterations"
    grid: int = 10
    out_dir: str = "."
    membership_tol: float = MEMBERSHIP_TOL

    def __post_init__(self):
        checks = [
            ("seed", self.seed >= 0),
            ("count", self.count >= 1),
            ("n_c", self.n_c >= 0),
            ("n_b", self.n_b >= 0),
            ("n_c+n_b", self.n_c + self.n_b >= 1),
            ("m", self.m >= 1),
            ("n_theta", self.n_theta >= 1),
            ("measure", self.measure in MEASURES),
            ("grid", self.grid >= 2),
            ("membership_tol", self.membership_tol > 0.0),
        ]
        for name, ok in checks:
            if not ok:
                raise ParseError(f"config field {name!r} out of range")

    @classmethod
    def from_mapping(cls, data):
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ParseError(f"unknown config keys: {', '.join(unknown)}")
        clean = {}
        for name, value in data.items():
            kind = known[name].type
            try:
                if kind == "str":
                    clean[name] = str(value)
                elif kind == "float":
                    clean[name] = float(value)
                else:
                    clean[name] = int(value)
            except (TypeError, ValueError):
                raise ParseError(
                    f"config field {name!r} has invalid value {value!r}"
                )
        return cls(**clean)


def _load_config(args, keys):
    """RunConfig from an optional JSON file overlaid with given flags."""
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(
                f"invalid JSON in config at line {exc.lineno}: {exc.msg}"
            )
        if not isinstance(doc, dict):
            raise ParseError("config file must hold a JSON object")
        data.update(doc)
    for key in keys:
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return RunConfig.from_mapping(data)


def _parse_theta(text, n_theta):
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != n_theta:
        raise ParseError(
            f"theta needs {n_theta} comma-separated values, got {len(parts)}"
        )
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise ParseError(f"theta value is not a number in {text!r}")


def cmd_gen(args):
    cfg = _load_config(
        args, ("seed", "count", "n_c", "n_b", "m", "n_theta", "out_dir"),
    )
    for k in range(cfg.count):
        seed = cfg.seed + k
        problem = random_mpmiqp(seed, cfg.n_c, cfg.n_b, cfg.m, cfg.n_theta)
        path = f"{cfg.out_dir}/problem_seed{seed:04d}.json"
        save_problem(problem, path)
        print(
            f"wrote {path}  n={problem.n} ({cfg.n_c} continuous, "
            f"{cfg.n_b} binary)  m={cfg.m}  n_theta={cfg.n_theta}  "
            f"lambda_min(H)={min_eigenvalue(problem.H):.6e}"
        )
    return EXIT_OK


def cmd_solve(args):
    problem = load_problem(args.problem)
    theta = _parse_theta(args.theta, problem.n_theta)
    if not problem.theta0.contains(theta):
        raise ParameterOutsideTheta0(
            f"theta {theta.tolist()} outside the parameter set"
        )
    out = solve_miqp(problem, theta)
    obj = "inf" if np.isinf(out.objective) else f"{out.objective:.9g}"
    print(f"status = {out.status}")
    print(f"J_best = {obj}")
    print(f"kappa_total = {out.iterations}")
    print(f"nodes = {out.nodes}")
    if out.x is not None:
        print("x_best = [" + ", ".join(f"{v:.9g}" for v in out.x) + "]")
    width = max(len(r.path) for r in out.records)
    print(f"{'node':<{width}}  {'status':<10}  {'action':<7}  "
          f"{'J':>14}  kappa")
    for r in out.records:
        value = "inf" if np.isinf(r.objective) else f"{r.objective:.6g}"
        print(f"{r.path:<{width}}  {r.status:<10}  {r.action:<7}  "
              f"{value:>14}  {r.iterations}")
    return EXIT_OK


def cmd_certify(args):
    problem = load_problem(args.problem)
    partition = certify(problem, measure=args.measure, workers=args.workers)
    save_partition(partition, args.out)
    print(f"measure = {partition.measure}")
    print(f"kappa_max = {partition.kappa_max}")
    print(f"regions = {partition.region_count}")
    print(f"t_cert = {partition.t_cert_seconds:.3f} s")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_validate(args):
    problem = load_problem(args.problem)
    partition = load_partition(args.partition)
    report = validation_report(problem, partition,
                               points_per_axis=args.grid,
                               tol=args.membership_tol)
    header = [f"theta_{i}" for i in range(problem.n_theta)]
    header += ["kappa_cert", "kappa_online", "gap"]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for theta, kc, ko in zip(report.thetas, report.kappa_cert,
                                 report.kappa_online):
            writer.writerow([_fmt(v) for v in theta]
                            + [int(kc), int(ko), int(kc) - int(ko)])
    print(f"points = {len(report.thetas)}")
    print(f"min_gap = {report.min_gap}")
    print(f"max_gap = {report.max_gap}")
    print(f"equality_rate = {report.equality_rate:.4f}")
    print(f"wrote {args.out}")
    if report.min_gap < 0:
        print("certified bound violated by an online run", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_export_plot(args):
    partition = load_partition(args.partition)
    if partition.n_theta != 2:
        raise UnsupportedDimension(
            f"plot export needs a two-dimensional parameter set, "
            f"got n_theta={partition.n_theta}"
        )
    records = []
    for region in partition.regions:
        P = region.region.normalize()
        records.append({
            "path_id": region.path_id,
            "kappa": region.kappa_for(partition.measure),
            "facets": [
                [_fmt(a[0]), _fmt(a[1]), _fmt(offset)]
                for a, offset in zip(P.A, P.b)
            ],
        })
    doc = {
        "measure": partition.measure,
        "n_theta": partition.n_theta,
        "kappa_max": partition.kappa_max,
        "regions": records,
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    print(f"regions = {len(records)}")
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="miqpcert",
        description=(
            "Solve parameterized mixed-integer QPs by branch and bound "
            "and certify parameter-dependent worst-case iteration bounds."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random problem families")
    p.add_argument("--config", help="JSON file with generation settings")
    p.add_argument("--seed", type=int, default=None,
                   help="seed of the first problem (default 1)")
    p.add_argument("--count", type=int, default=None,
                   help="number of problems, seeds counting up (default 1)")
    p.add_argument("--nc", dest="n_c", type=int, default=None,
                   help="continuous variables (default 2)")
    p.add_argument("--nb", dest="n_b", type=int, default=None,
                   help="binary variables (default 4)")
    p.add_argument("--m", dest="m", type=int, default=None,
                   help="constraint rows (default 6)")
    p.add_argument("--ntheta", dest="n_theta", type=int, default=None,
                   help="parameter dimension (default 2)")
    p.add_argument("--out-dir", dest="out_dir", default=None,
                   help="directory for problem files (default .)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one instance at a parameter")
    p.add_argument("problem", help="problem file from gen")
    p.add_argument("--theta", required=True,
                   help="parameter vector, comma separated")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify",
                       help="certify a worst-case complexity partition")
    p.add_argument("problem", help="problem file from gen")
    p.add_argument("--measure", choices=MEASURES, default="iterations",
                   help="complexity measure (default iterations)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel work-list processing (default 1)")
    p.add_argument("--out", default="partition.json",
                   help="partition file to write")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("validate",
                       help="compare the certified bound with online runs")
    p.add_argument("problem", help="problem file from gen")
    p.add_argument("partition", help="partition file from certify")
    p.add_argument("--grid", type=int, default=10,
                   help="grid points per parameter axis (default 10)")
    p.add_argument("--membership-tol", dest="membership_tol", type=float,
                   default=MEMBERSHIP_TOL,
                   help="region membership tolerance for lookups")
    p.add_argument("--out", default="validation.csv",
                   help="CSV file to write")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export-plot",
                       help="emit per-region facet data for plotting")
    p.add_argument("partition", help="partition file from certify")
    p.add_argument("--out", default="plot_data.json",
                   help="JSON file to write")
    p.set_defaults(func=cmd_export_plot)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NotCovered, ParameterOutsideTheta0, UnsupportedDimension) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MiqpcertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def console_entry():
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
