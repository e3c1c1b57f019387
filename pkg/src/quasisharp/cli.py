"""Command-line harness: build the extremal configurations and run verifications.

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage error.
Reports are JSON (``schema: 1``) or CSV tables; everything except the
``timing`` block is deterministic for fixed arguments.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import config
from .constructions import (
    PROFILES,
    ConstructionParams,
    covering_count_diagnostic,
    theorem1_fields,
    theorem2_surface,
)
from .mesh import (
    MeshError,
    ScalarField,
    build_marked_icosphere,
    load_field_csv,
    load_mesh_json,
    mesh_from_dict,
    mesh_to_dict,
    random_smooth_field,
)
from .poisson import poisson_l1
from .quasimeasure import QuasiMeasureError
from .quasistate import (
    MedianNotFound,
    median_direct,
    median_state,
    nonlinearity_defect,
    quasi_integral,
    three_point_state,
)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class Check:
    """One numeric result with the tolerance it was checked against."""

    def __init__(self, name, value, target=None, tol=None, lo=None, hi=None, passed=None):
        self.name, self.value = name, float(value)
        self.target, self.tol, self.lo, self.hi = target, tol, lo, hi
        if passed is None:
            passed = True
            if target is not None:
                passed = abs(self.value - target) <= (tol or 0.0)
            if lo is not None:
                passed = passed and self.value >= lo
            if hi is not None:
                passed = passed and self.value <= hi
        self.passed = bool(passed)

    def as_dict(self):
        d = {"name": self.name, "value": self.value, "passed": self.passed}
        for key in ("target", "tol", "lo", "hi"):
            v = getattr(self, key)
            if v is not None:
                d[key] = float(v)
        return d


# ---------------------------------------------------------------------------
# argument types

def level_spec(text: str) -> list:
    """``5``, ``3..6`` or ``3,4,5`` -> list of non-negative levels."""
    try:
        if ".." in text:
            a, b = text.split("..")
            levels = list(range(int(a), int(b) + 1))
        else:
            levels = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level spec {text!r}") from None
    if not levels or min(levels) < 0:
        raise argparse.ArgumentTypeError("levels must be non-negative")
    return levels


def epsilon_spec(text: str) -> list:
    try:
        eps = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon {text!r}") from None
    bad = [e for e in eps if not 0.0 < e < 0.25]
    if bad:
        raise argparse.ArgumentTypeError(f"epsilon must lie in (0, 1/4), got {bad[0]}")
    return eps


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


# ---------------------------------------------------------------------------
# commands

def run_theorem1(levels, profile="exp", samples=10_000, seed=0) -> dict:
    rows, checks = [], []
    for level in levels:
        params = ConstructionParams(level=level, profile=profile)
        mesh, F, G = theorem1_fields(params)
        z = three_point_state(mesh)
        zf, zg, zfg = quasi_integral(z, F), quasi_integral(z, G), quasi_integral(z, F + G)
        pi = abs(zfg - zf - zg)
        l1 = poisson_l1(F, G).l1_norm
        ratio = pi * pi / l1 if l1 > 0 else math.inf
        cover = covering_count_diagnostic(F, G, samples=samples, seed=seed)
        rows.append({
            "level": level,
            "n_vertices": mesh.n_vertices,
            "n_triangles": mesh.n_triangles,
            "h": mesh.max_edge_length,
            "zeta_F": zf,
            "zeta_G": zg,
            "zeta_FG": zfg,
            "Pi": pi,
            "l1_norm": l1,
            "ratio": ratio,
            "covering": cover,
        })
        tag = f"[level {level}]"
        checks += [
            Check(f"euler {tag}", mesh.euler_characteristic, 2, 0),
            Check(f"zeta_F {tag}", zf, 0.0, 0.0),
            Check(f"zeta_G {tag}", zg, 0.0, 0.0),
            Check(f"zeta_FG {tag}", zfg, 1.0, 0.0),
            Check(f"Pi {tag}", pi, 1.0, 0.0),
            Check(f"l1_norm {tag}", l1, 1.0, config.THEOREM1_L1_TOL),
            Check(f"ratio {tag}", ratio, 1.0, config.THEOREM1_RATIO_TOL),
            Check(f"covering {tag}", cover, 2.0, config.COVERING_TOL),
        ]
    if len(rows) > 1:
        err = [abs(r["ratio"] - 1.0) for r in rows]
        mono = all(
            b < a or max(a, b) <= config.ROUNDOFF_FLOOR for a, b in zip(err[:-1], err[1:])
        )
        checks.append(Check("ratio error non-increasing in level", max(err), passed=mono,
                            tol=config.ROUNDOFF_FLOOR))
    return {
        "command": "theorem1",
        "params": {"levels": list(levels), "profile": profile, "samples": samples, "seed": seed},
        "provenance": {"markers": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "mesh": "icosphere",
                       "profile": profile, "seed": seed},
        "rows": rows,
        "checks": [c.as_dict() for c in checks],
    }


def run_theorem2(epsilons, level=5) -> dict:
    rows, checks = [], []
    provenance = []
    for eps in epsilons:
        mesh, F, G = theorem2_surface(ConstructionParams(level=level, epsilon=eps))
        z = median_state(mesh)
        zf, zg, zfg = quasi_integral(z, F), quasi_integral(z, G), quasi_integral(z, F + G)
        pi = abs(zfg - zf - zg)
        l1 = poisson_l1(F, G).l1_norm
        ratio = pi * pi / l1
        area_u = mesh.metadata["area_U"]
        bound = (1.0 - 3.0 * eps) ** 2
        rows.append({
            "epsilon": eps,
            "n_triangles": mesh.n_triangles,
            "zeta_F": zf,
            "zeta_G": zg,
            "zeta_FG": zfg,
            "Pi": pi,
            "l1_norm": l1,
            "two_area_U": 2.0 * area_u,
            "ratio": ratio,
            "ratio_bound": bound,
        })
        provenance.append({"epsilon": eps, "smoothing_radius": mesh.metadata["smoothing_radius"],
                           "spacing": mesh.metadata["spacing"]})
        tag = f"[eps {eps}]"
        tz = config.THEOREM2_ZETA_TOL
        checks += [
            Check(f"euler {tag}", mesh.euler_characteristic, 2, 0),
            Check(f"triangles {tag}", mesh.n_triangles, lo=5000),
            Check(f"zeta_F {tag}", zf, eps, tz),
            Check(f"zeta_G {tag}", zg, eps, tz),
            Check(f"zeta_FG {tag}", zfg, 1.0 - eps, tz),
            Check(f"l1 = 2 Area(U) {tag}", l1, 2.0 * area_u, 1e-12),
            Check(f"area sandwich {tag}", l1, passed=bound < l1 < 1.0, lo=bound, hi=1.0),
            Check(f"ratio {tag}", ratio, lo=bound - config.THEOREM2_RATIO_TOL),
        ]
    if len(rows) > 1:
        ordered = sorted(rows, key=lambda r: -r["epsilon"])
        inc = all(a["ratio"] < b["ratio"] for a, b in zip(ordered[:-1], ordered[1:]))
        checks.append(Check("ratio increases as epsilon decreases", ordered[-1]["ratio"], passed=inc))
    return {
        "command": "theorem2",
        "params": {"epsilons": list(epsilons), "level": level},
        "provenance": {"corners": "circular arcs of radius epsilon/4", "sheets": provenance},
        "rows": rows,
        "checks": [c.as_dict() for c in checks],
    }


def _state(mesh, name):
    return three_point_state(mesh) if name == "three-point" else median_state(mesh)


def check_pair(mesh, state: str, F: ScalarField, G: ScalarField, rng) -> tuple:
    """Run the per-pair suite; returns ``(row, checks)``."""
    z = _state(mesh, state)
    h = mesh.max_edge_length
    zf, zg = quasi_integral(z, F), quasi_integral(z, G)
    pi = nonlinearity_defect(z, F, G)
    l1 = poisson_l1(F, G).l1_norm
    delta = config.slack(h)
    a, c = float(rng.uniform(0.1, 3.0)), float(rng.normal())
    affine = quasi_integral(z, F * a + ScalarField(mesh, np.full(mesh.n_vertices, c)))
    bump = ScalarField(mesh, np.abs(random_smooth_field(mesh, rng).values))
    upper = quasi_integral(z, F + bump)
    const = float(rng.normal())
    zc = quasi_integral(z, ScalarField(mesh, np.full(mesh.n_vertices, const)))
    row = {"zeta_F": zf, "zeta_G": zg, "Pi": pi, "l1_norm": l1, "delta": delta}
    checks = [
        Check("zapolsky Pi^2 <= l1 + delta", pi * pi, hi=l1 + delta),
        Check("range zeta_F", zf, lo=F.values.min(), hi=F.values.max()),
        Check("monotone zeta(F) <= zeta(F + |H|)", upper, lo=zf),
        Check("affine zeta(aF+c)", affine, a * zf + c, config.AFFINE_TOL),
        Check("constant", zc, const, 0.0),
    ]
    if state == "median":
        tol = config.oracle_tolerance(h)
        try:
            med = median_direct(mesh, F)
            row["median_direct"] = med
            checks.append(Check("median oracle", med, zf, tol))
        except MedianNotFound:
            checks.append(Check("median oracle", math.nan, zf, tol, passed=False))
    return row, checks


def _verify_mesh(args):
    if args.mesh:
        return load_mesh_json(args.mesh), {"mesh_file": str(args.mesh)}
    return build_marked_icosphere(args.level), {"level": args.level}


def run_verify(mesh, state, trials, seed, fields=(), source=None, dump_trial=None) -> tuple:
    rows, checks, failures, dumped = [], [], [], None
    pairs = []
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            pairs.append((f"file {i},{j}", fields[i], fields[j], np.random.default_rng([seed, 10**6 + i * 1000 + j])))
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        F, G = random_smooth_field(mesh, rng), random_smooth_field(mesh, rng)
        pairs.append((f"trial {t}", F, G, rng))
    for label, F, G, rng in pairs:
        state_before = rng.bit_generator.state
        row, cs = check_pair(mesh, state, F, G, rng)
        row = {"case": label, **row}
        rows.append(row)
        for c in cs:
            c.name = f"{c.name} [{label}]"
        checks += cs
        case = {"schema": SCHEMA, "state": state, "case": label, "source": source,
                "F": F.values.tolist(), "G": G.values.tolist(), "rng_state": state_before}
        if source is not None and "mesh_file" in source:
            case["mesh"] = mesh_to_dict(mesh)
        if not all(c.passed for c in cs):
            failures.append(case)
        if dump_trial is not None and label == f"trial {dump_trial}":
            dumped = case
    report = {
        "command": "verify",
        "params": {"state": state, "trials": trials, "seed": seed, "n_field_files": len(fields)},
        "provenance": {"source": source, "h": mesh.max_edge_length,
                       "slack_constant": config.SLACK_CONSTANT},
        "rows": rows,
        "checks": [c.as_dict() for c in checks],
    }
    return report, failures, dumped


def _replay_case(case) -> tuple:
    source = case.get("source") or {}
    if "mesh" in case:
        mesh = mesh_from_dict(case["mesh"])
    elif "level" in source:
        mesh = build_marked_icosphere(int(source["level"]))
    else:
        mesh = load_mesh_json(source["mesh_file"])
    F = ScalarField(mesh, np.array(case["F"], dtype=float))
    G = ScalarField(mesh, np.array(case["G"], dtype=float))
    rng = np.random.default_rng()
    rng.bit_generator.state = case["rng_state"]
    row, cs = check_pair(mesh, case["state"], F, G, rng)
    for c in cs:
        c.name = f"{c.name} [{case['case']}]"
    return {"case": case["case"], **row}, cs


def run_replay(path) -> dict:
    """Re-run one saved case, or a list of them, from a case file."""
    data = json.loads(Path(path).read_text())
    cases = data if isinstance(data, list) else [data]
    rows, checks = [], []
    for case in cases:
        row, cs = _replay_case(case)
        rows.append(row)
        checks += cs
    return {
        "command": "replay",
        "params": {"cases": [c["case"] for c in cases], "state": cases[0]["state"]},
        "provenance": {"source": cases[0].get("source")},
        "rows": rows,
        "checks": [c.as_dict() for c in checks],
    }


# ---------------------------------------------------------------------------
# output

def render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        rows = report["rows"]
        keys = []
        for r in rows:
            keys += [k for k in r if k not in keys]
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _finish(report, args, started) -> int:
    report["schema"] = SCHEMA
    report["passed"] = all(c["passed"] for c in report["checks"])
    if args.format == "json" and not args.no_timing:
        report["timing"] = {"seconds": round(time.perf_counter() - started, 3)}
    text = render(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    for name in failed:
        print(f"FAIL {name}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasisharp", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--no-timing", action="store_true", help="omit the timing block")
    sub = p.add_subparsers(dest="command", required=True)

    t1 = sub.add_parser("theorem1", parents=[common], help="three-point sharp configuration on the sphere")
    t1.add_argument("--level", type=level_spec, default=[5], help="level, range a..b, or list")
    t1.add_argument("--profile", choices=sorted(PROFILES), default="exp")
    t1.add_argument("--samples", type=positive_int, default=10_000, help="covering-count samples")

    t2 = sub.add_parser("theorem2", parents=[common], help="median configuration on the doubled triangle")
    t2.add_argument("--epsilon", type=epsilon_spec, default=[0.2, 0.1, 0.05], help="value or comma list in (0, 1/4)")
    t2.add_argument("--level", type=level_spec, default=[5])

    v = sub.add_parser("verify", parents=[common], help="axiom, monotonicity, inequality and oracle checks")
    v.add_argument("--state", choices=("three-point", "median"), default="three-point")
    v.add_argument("--level", type=int, default=4, help="icosphere level when no mesh file is given")
    v.add_argument("--mesh", type=Path, default=None, help="mesh JSON file")
    v.add_argument("--fields", type=Path, nargs="*", default=[], help="field CSV files on the mesh")
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--replay", type=Path, default=None, help="re-run a saved case file")
    v.add_argument("--dump-trial", type=int, default=None, help="save this trial as a case file")
    v.add_argument("--cases-out", type=Path, default=Path("quasisharp-cases.json"),
                   help="where failing or dumped cases are written")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        if args.command == "theorem1":
            report = run_theorem1(args.level, args.profile, args.samples, args.seed)
        elif args.command == "theorem2":
            if len(args.level) != 1:
                parser.error("theorem2 takes a single --level")
            report = run_theorem2(args.epsilon, args.level[0])
        else:
            if args.replay is not None:
                report = run_replay(args.replay)
            else:
                if args.trials < 0 or (args.mesh is None and args.level < 0):
                    parser.error("trials and level must be non-negative")
                if args.fields and args.mesh is None:
                    parser.error("--fields requires --mesh")
                mesh, source = _verify_mesh(args)
                if args.state == "three-point" and len(mesh.markers) != 3:
                    parser.error("three-point state needs a mesh with three markers")
                fields = [load_field_csv(mesh, f) for f in args.fields]
                report, failures, dumped = run_verify(
                    mesh, args.state, args.trials, args.seed, fields, source, args.dump_trial)
                cases = failures if failures else ([dumped] if dumped is not None else [])
                if cases:
                    payload = cases[0] if len(cases) == 1 else cases
                    args.cases_out.write_text(json.dumps(payload, sort_keys=True))
                    report["cases_file"] = str(args.cases_out)
    except (MeshError, QuasiMeasureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return _finish(report, args, started)


if __name__ == "__main__":
    sys.exit(main())
