"""Command-line interface: ``coexist {check,solve,miranda,harnack}``.

Exit codes: 0 pass or found, 1 usage/config/runtime error, 2 certificate
or face-condition failure, 3 solver nonconvergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import expr
from .certificate import SCHEMA_VERSION
from .cones import ConeBox, PhiSection, Regime
from .hammerstein import (
    HammersteinProblem,
    KernelSpec,
    check_existence,
    check_multiplicity,
    find_solutions,
)
from .miranda import (
    MirandaPreconditionError,
    NotFound,
    Rectangle,
    check_faces,
    find_zero,
)
from .nonlinearity import Nonlinearity
from .plaplacian import (
    NoConvergence,
    PParams,
    RadialProblem,
    SectionEscape,
    check_conditions,
    harnack_check,
    solve_radial,
)

log = logging.getLogger("coexist")

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_NOCONV = 0, 1, 2, 3
DEFAULT_OUT = "coexist-out"


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# Config schema

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_FUNC_1D = {"oneOf": [{"type": "null"}, {"type": "string"}, {"type": "array", "items": {"type": "number"}}]}
_NONLINEARITY = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["expr"],
            "properties": {
                "expr": {"type": "string"},
                "monotone": {"type": "array", "items": {"type": "boolean"}, "minItems": 2, "maxItems": 2},
            },
        },
    ]
}
_LEVEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["alpha", "beta"],
    "properties": {"alpha": _PAIR, "beta": _PAIR},
}
_OUTPUT = {"type": "object", "additionalProperties": False, "properties": {"dir": {"type": "string"}}}
_COMMON = {
    "schema": {"const": SCHEMA_VERSION},
    "problem": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    "output": _OUTPUT,
    "description": {"type": "string"},
}

SCHEMAS = {
    "hammerstein": {
        "type": "object",
        "additionalProperties": False,
        "required": ["schema", "problem", "kernels", "nonlinearities", "levels"],
        "properties": {
            **_COMMON,
            "kernels": {
                "type": "array",
                "minItems": 1,
                "maxItems": 2,
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["green_dirichlet", "tabulated", "expression"]},
                        "kernel": {"oneOf": [
                            {"type": "string"},
                            {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                        ]},
                        "weight": _FUNC_1D,
                        "bound": _FUNC_1D,
                        "window": _PAIR,
                        "c": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    },
                },
            },
            "nonlinearities": {"type": "array", "items": _NONLINEARITY, "minItems": 2, "maxItems": 2},
            "levels": {"type": "array", "items": _LEVEL, "minItems": 1, "maxItems": 3},
            "solver": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "N": {"type": "integer", "minimum": 3},
                    "quad_n": {"type": "integer", "minimum": 9},
                    "grid_n": {"type": "integer", "minimum": 2},
                    "tol": {"type": "number", "exclusiveMinimum": 0},
                    "max_iter": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
    "plaplacian": {
        "type": "object",
        "additionalProperties": False,
        "required": ["schema", "problem", "params", "nonlinearities", "levels"],
        "properties": {
            **_COMMON,
            "params": {
                "type": "object",
                "additionalProperties": False,
                "required": ["p", "n"],
                "properties": {"p": _PAIR, "n": {"type": "integer", "minimum": 2}, "window": _PAIR},
            },
            "nonlinearities": {"type": "array", "items": _NONLINEARITY, "minItems": 2, "maxItems": 2},
            "levels": {"type": "array", "items": _LEVEL, "minItems": 1, "maxItems": 1},
            "regime": {"enum": ["CC", "CE", "EC", "EE"]},
            "solver": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "N": {"type": "integer", "minimum": 3},
                    "tol": {"type": "number", "exclusiveMinimum": 0},
                    "max_iter": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
    "miranda": {
        "type": "object",
        "additionalProperties": False,
        "required": ["schema", "problem", "field", "rectangle"],
        "properties": {
            **_COMMON,
            "field": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "rectangle": {
                "type": "object",
                "additionalProperties": False,
                "required": ["lower", "upper"],
                "properties": {
                    "lower": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    "upper": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                },
            },
            "solver": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "tol": {"type": "number", "exclusiveMinimum": 0},
                    "max_depth": {"type": "integer", "minimum": 1},
                    "polish": {"type": "boolean"},
                    "samples_per_face": {"type": "integer", "minimum": 2},
                },
            },
        },
    },
}

_HEADER_SCHEMA = {
    "type": "object",
    "required": ["schema", "problem"],
    "properties": {"schema": {"const": SCHEMA_VERSION}, "problem": {"enum": sorted(SCHEMAS)}},
}


def bundled_configs() -> list:
    return sorted(p.name for p in resources.files("coexist").joinpath("data").iterdir()
                  if p.name.endswith(".json"))


def _read_config_text(path: str) -> tuple:
    """Return ``(label, text)`` for a config path or the name of a bundled config."""
    p = Path(path)
    if p.exists():
        return str(p), p.read_text()
    if p.name == path and path in bundled_configs():
        log.info("using bundled config %s", path)
        return path, resources.files("coexist").joinpath("data").joinpath(path).read_text()
    raise ConfigError(f"config file not found: {path}")


def load_config(path: str) -> dict:
    """Read and validate a JSON config; bundled names such as ``example_paper.json`` also work."""
    label, text = _read_config_text(path)
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{label}: invalid JSON ({exc})") from None
    validate_config(config)
    return config


def validate_config(config: dict) -> None:
    try:
        jsonschema.validate(config, _HEADER_SCHEMA)
        jsonschema.validate(config, SCHEMAS[config["problem"]])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    if config["problem"] == "miranda":
        rect = config["rectangle"]
        if not len(rect["lower"]) == len(rect["upper"]) == len(config["field"]):
            raise ConfigError("field, rectangle.lower and rectangle.upper must have the same length")


# --------------------------------------------------------------------------
# Builders


def _nonlinearity(spec) -> Nonlinearity:
    if isinstance(spec, str):
        return Nonlinearity.from_expr(spec)
    return Nonlinearity.from_expr(spec["expr"], tuple(spec.get("monotone", (False, False))))


def _levels(config) -> list:
    return [(tuple(lv["alpha"]), tuple(lv["beta"])) for lv in config["levels"]]


def build_hammerstein(config: dict, grid: int | None = None) -> HammersteinProblem:
    kernels = []
    for spec in config["kernels"]:
        kernels.append(KernelSpec(
            kind=spec.get("kind", "green_dirichlet"),
            kernel=spec.get("kernel"),
            weight=spec.get("weight"),
            bound=spec.get("bound"),
            window=tuple(spec.get("window", (0.25, 0.75))),
            c=spec.get("c", 0.25),
        ))
    if len(kernels) == 1:
        kernels = kernels * 2
    solver = config.get("solver", {})
    return HammersteinProblem(
        tuple(kernels),
        tuple(_nonlinearity(s) for s in config["nonlinearities"]),
        N=grid or solver.get("N", 257),
        quad_n=solver.get("quad_n", 1025),
        grid_n=solver.get("grid_n", 129),
    )


def build_radial(config: dict, grid: int | None = None) -> RadialProblem:
    params = config["params"]
    solver = config.get("solver", {})
    return RadialProblem(
        PParams(params["p"][0], params["p"][1], params["n"], tuple(params.get("window", (0.25, 0.75)))),
        tuple(_nonlinearity(s) for s in config["nonlinearities"]),
        N=grid or solver.get("N", 513),
    )


def build_field(config: dict):
    n = len(config["field"])
    names = tuple(f"x{i + 1}" for i in range(n))
    funcs = [expr.as_function(expr.parse(src, names), names, nonnegative=False) for src in config["field"]]

    def g(x):
        x = np.asarray(x, dtype=float)
        return np.stack([f(*x) for f in funcs])

    rect = Rectangle(tuple(config["rectangle"]["lower"]), tuple(config["rectangle"]["upper"]))
    return g, rect


# --------------------------------------------------------------------------
# Output


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _out_dir(args, config) -> Path:
    return Path(args.out or config.get("output", {}).get("dir", DEFAULT_OUT))


def _print_certificate(cert) -> None:
    for level_no, level in enumerate(cert.levels, 1):
        print(f"level {level_no}: regime {level.regime}, expected index {level.expected_index}")
        for rec in level.inequalities + level.structural:
            status = "PASS" if rec.passed else "FAIL"
            print(f"  {status}  {rec.name}: lhs={rec.lhs:.10g} rhs={rec.rhs:.10g} margin={rec.margin:.6g}")
    for rec in cert.structural:
        print(f"  {'PASS' if rec.passed else 'FAIL'}  {rec.name}")
    print(f"certificate: {'PASS' if cert.passed else 'FAIL'}")


def _certificate(config, problem):
    if config["problem"] == "hammerstein":
        levels = _levels(config)
        if len(levels) == 3:
            return check_multiplicity(problem, levels)
        if len(levels) == 2:
            raise ConfigError("give one level (existence) or three levels (multiplicity)")
        return check_existence(problem, *levels[0])
    alpha, beta = _levels(config)[0]
    return check_conditions(problem, alpha, beta, config.get("regime", "CC"))


def _build(config, grid):
    if config["problem"] == "hammerstein":
        return build_hammerstein(config, grid)
    return build_radial(config, grid)


# --------------------------------------------------------------------------
# Commands


def cmd_check(args, config) -> int:
    out = _out_dir(args, config)
    if config["problem"] == "miranda":
        g, rect = build_field(config)
        faces = check_faces(g, rect, config.get("solver", {}).get("samples_per_face", 33))
        _print_faces(faces)
        write_atomic(out / "faces.json", _dump(faces.to_dict()))
        return EXIT_OK if faces.ok else EXIT_FAIL
    problem = _build(config, args.grid)
    cert = _certificate(config, problem)
    _print_certificate(cert)
    write_atomic(out / "certificate.json", cert.to_json() + "\n")
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_solve(args, config) -> int:
    if config["problem"] == "miranda":
        return cmd_miranda(args, config)
    out = _out_dir(args, config)
    problem = _build(config, args.grid)
    cert = None
    if not args.skip_check:
        cert = _certificate(config, problem)
        write_atomic(out / "certificate.json", cert.to_json() + "\n")
        if not cert.passed:
            _print_certificate(cert)
            print("certificate failed; rerun with --skip-check to solve anyway", file=sys.stderr)
            return EXIT_FAIL
    solver = config.get("solver", {})
    tol = solver.get("tol", 1e-10)
    max_iter = solver.get("max_iter", 500)
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    if config["problem"] == "hammerstein":
        levels = _levels(config)
        report = find_solutions(problem, levels, tol=tol, max_iter=max_iter, seed=seed)
        boxes = [ConeBox.from_alpha_beta(a, b) for a, b in levels]
        entries = []
        for k, rec in enumerate(report.solutions, 1):
            name = f"solution_{k}.csv"
            write_atomic(out / name, rec.to_csv(("t", "u1", "u2")))
            entries.append({**rec.summary(), "file": name})
            print(f"solution {k}: level {rec.level}, norms ({rec.norms[0]:.10g}, {rec.norms[1]:.10g}), "
                  f"residual {rec.residual:.3g}, {rec.method}")
        for note in report.notes:
            print(f"note: {note}", file=sys.stderr)
        summary = {
            "schema": SCHEMA_VERSION,
            "problem": "hammerstein",
            "count": len(report.solutions),
            "boxes": [{"level": j + 1, "inner": list(b.inner), "outer": list(b.outer)} for j, b in enumerate(boxes)],
            "solutions": entries,
            "notes": report.notes,
            "certificate_pass": None if cert is None else cert.passed,
            "grid_meta": problem.grid_meta(),
            "seed": seed,
        }
        write_atomic(out / "solutions.json", _dump(summary))
        return EXIT_OK if report.solutions else EXIT_NOCONV
    # radial: start from the constant alpha, which lies in the closed section for every regime
    alpha, beta = _levels(config)[0]
    regime = Regime.parse(config.get("regime", "CC"))
    inner = tuple(b if t.value == "C" else a for a, b, t in zip(alpha, beta, regime.tags))
    outer = tuple(a if t.value == "C" else b for a, b, t in zip(alpha, beta, regime.tags))
    section = PhiSection(inner, outer, problem.params.window)
    init = np.stack([np.full(problem.N, a) for a in alpha])
    try:
        rec = solve_radial(problem, section, init, tol=tol, max_iter=max_iter, regime=regime)
    except (NoConvergence, SectionEscape) as exc:
        print(f"radial solver failed: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    write_atomic(out / "radial_solution.csv", rec.to_csv(("r", "u1", "u2")))
    sidecar = {
        "schema": SCHEMA_VERSION,
        "problem": "plaplacian",
        "count": 1,
        "solution": {**rec.summary(), "file": "radial_solution.csv"},
        "section": {"inner": list(section.inner), "outer": list(section.outer), "regime": str(regime)},
        "certificate": None if cert is None else cert.to_dict(),
    }
    write_atomic(out / "radial_solution.json", _dump(sidecar))
    print(f"solution: norms ({rec.norms[0]:.10g}, {rec.norms[1]:.10g}), "
          f"phi ({rec.phi_values[0]:.10g}, {rec.phi_values[1]:.10g}), "
          f"residual {rec.residual:.3g}, {rec.iterations} iterations")
    return EXIT_OK


def _print_faces(faces) -> None:
    print("coordinate  condition  g_i on x_i=a_i          g_i on x_i=b_i")
    for i, (cond, lo, hi) in enumerate(zip(faces.conditions, faces.lower_face_range, faces.upper_face_range)):
        print(f"{i + 1:>10}  {cond.value:>9}  [{lo[0]:.4g}, {lo[1]:.4g}]  [{hi[0]:.4g}, {hi[1]:.4g}]")


def cmd_miranda(args, config) -> int:
    if config["problem"] != "miranda":
        raise ConfigError("the miranda command needs a config with problem = miranda")
    out = _out_dir(args, config)
    g, rect = build_field(config)
    solver = config.get("solver", {})
    samples = solver.get("samples_per_face", 33)
    faces = check_faces(g, rect, samples)
    _print_faces(faces)
    report = {"schema": SCHEMA_VERSION, "problem": "miranda", "faces": faces.to_dict(), "zero": None}
    code = EXIT_OK
    try:
        result = find_zero(g, rect, tol=solver.get("tol", 1e-10), max_depth=solver.get("max_depth", 80),
                           polish=solver.get("polish", True), samples_per_face=samples)
        report["zero"] = result.to_dict()
        print("zero: " + ", ".join(f"{v:.12g}" for v in result.x) + f"  (residual {result.residual:.3g})")
    except MirandaPreconditionError as exc:
        print(f"face conditions fail: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    except NotFound as exc:
        print(f"no zero found: {exc}", file=sys.stderr)
        report["error"] = str(exc)
        code = EXIT_NOCONV
    write_atomic(out / "zero.json", _dump(report))
    return code


def _read_solution_csv(path: Path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise ConfigError(f"{path}: need a header and at least two rows")
    header = rows[0]
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    return header, data


def cmd_harnack(args) -> int:
    header, data = _read_solution_csv(Path(args.solution))
    if data.shape[1] < 2:
        raise ConfigError("solution CSV needs a grid column and at least one component")
    if args.config:
        config = load_config(args.config)
        if config["problem"] != "plaplacian":
            raise ConfigError("harnack needs a plaplacian config for p and n")
        ps = list(config["params"]["p"])
        n = config["params"]["n"]
    else:
        if args.p is None or args.n is None:
            raise ConfigError("give --config or both --p and --n")
        ps, n = list(args.p), args.n
    comps = data.shape[1] - 1
    if len(ps) == 1:
        ps = ps * comps
    if len(ps) != comps:
        raise ConfigError(f"{comps} components but {len(ps)} exponents")
    nodes = data[:, 0]
    reports = {}
    ok = True
    for j in range(comps):
        rep = harnack_check(data[:, j + 1], ps[j], n, tol=args.tol, nodes=nodes)
        reports[header[j + 1]] = {**rep.to_dict(), "p": ps[j], "n": n}
        ok &= rep.passed
        print(f"{header[j + 1]}: {'PASS' if rep.passed else 'FAIL'} monotone={rep.monotone} "
              f"worst_margin={rep.worst_margin:.6g} at r={nodes[rep.worst_node]:.6g}")
    if args.out:
        write_atomic(Path(args.out) / "harnack.json", _dump({"schema": SCHEMA_VERSION, "components": reports}))
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# Entry point


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 3:
        raise argparse.ArgumentTypeError("grid size must be at least 3")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coexist", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="JSON config file, or the name of a bundled one")
        p.add_argument("--out", help=f"output directory (default: config output.dir or {DEFAULT_OUT})")
        p.add_argument("--seed", type=_u64, help="multistart seed (default: config seed or 0)")
        p.add_argument("--grid", type=_positive_int, help="override the solver grid size N")

    p = sub.add_parser("check", help="evaluate every hypothesis and write certificate.json")
    common(p)
    p = sub.add_parser("solve", help="compute localized solutions")
    common(p)
    p.add_argument("--skip-check", action="store_true", help="solve even if the certificate fails")
    p = sub.add_parser("miranda", help="face conditions and a zero of a finite-dimensional field")
    common(p)
    p = sub.add_parser("harnack", help="check a radial solution CSV against the Harnack bound")
    p.add_argument("solution", help="CSV with columns r, u1[, u2]")
    p.add_argument("--config", help="plaplacian config supplying p and n")
    p.add_argument("--p", type=float, nargs="+", help="exponent(s) p, one per component or shared")
    p.add_argument("--n", type=int, help="space dimension n")
    p.add_argument("--tol", type=float, default=1e-9, help="monotonicity and bound tolerance")
    p.add_argument("--out", help="directory for harnack.json")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "harnack":
            return cmd_harnack(args)
        config = load_config(args.config)
        if args.command == "check":
            return cmd_check(args, config)
        if args.command == "solve":
            return cmd_solve(args, config)
        return cmd_miranda(args, config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
