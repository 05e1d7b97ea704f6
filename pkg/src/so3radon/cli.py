"""Command-line interface: ``so3radon <command> [flags]``.

Exit codes: 0 success, 2 validation error (bad flags, malformed or empty
files, invalid parameters), 3 numerical failure (solver breakdown, failed
certification, tolerance violation).  Failures print a single JSON line
``{"error": ..., "code": ..., "message": ...}`` on standard error.
Structured results go to JSON files, grids and tables to CSV.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import lattice as lat_mod
from .method1 import DEFAULT_ORDER, MeasurementSet, invert_method1, measurement_residual
from .method2 import (
    convergence_study, interpolate_on_product, project_to_range, rate_fit, sample_radon,
    tau_from_schedule, write_study_csv,
)
from .radon import (
    CONVENTIONS, DEFAULT_CONVENTION, NotInRangeError, darboux_residual, isometry_constant,
    pole_figure_grid, radon_exact, radon_inverse, range_isometry_ratio, write_pole_figure_csv,
)
from .so3_core import (
    QuadratureError, WignerExpansion, haar_quadrature, l2_norm_so3, max_abs_diff,
    quadrature_l2_norm,
)
from .spline import SplineSolverError
from .synth import OdfModel, make_measurements, make_odf, random_nodes

THREADS_ENV = "SO3RADON_THREADS"


class ValidationError(ValueError):
    """Bad user input; maps to exit code 2."""


class NumericalError(RuntimeError):
    """Numerical failure or violated tolerance; maps to exit code 3."""


NUMERICAL = (NumericalError, SplineSolverError, QuadratureError, lat_mod.LatticeError,
             NotInRangeError, np.linalg.LinAlgError, FloatingPointError)


@dataclass
class RunConfig:
    """Parameters shared by all commands, after flag/config/environment merging."""

    command: str
    t: float = DEFAULT_ORDER
    tau: float | None = None
    K: int = 16
    rho: float | None = None
    seed: int = 0
    sigma: float = 0.0
    tol: float = 1e-8
    convention: str = DEFAULT_CONVENTION
    threads: int | None = None
    paths: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.convention not in CONVENTIONS:
            raise ValidationError(f"convention must be one of {CONVENTIONS}")
        if not self.tol > 0:
            raise ValidationError("tolerance must be positive")
        if self.K < 0:
            raise ValidationError("bandwidth must be non-negative")
        if self.sigma < 0:
            raise ValidationError("sigma must be non-negative")
        if self.threads is not None and self.threads < 1:
            raise ValidationError("thread count must be at least 1")
        if self.rho is not None and not 0 < self.rho < 1:
            raise ValidationError("rho must lie in (0, 1)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default values and a 'model' block")
    p.add_argument("--order", "-t", type=float, dest="t")
    p.add_argument("--tau", type=float)
    p.add_argument("--schedule-m", type=int, dest="m", help="use tau = 2^(m+2) + t")
    p.add_argument("--bandwidth", "-K", type=int, dest="K")
    p.add_argument("--rho", type=float)
    p.add_argument("--nodes-file")
    p.add_argument("--odf", help="WignerExpansion JSON")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--convention", choices=CONVENTIONS)
    p.add_argument("--threads", type=int)
    p.add_argument("--tol", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="so3radon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize an ODF and its great-circle measurements")
    _common(p)
    p.add_argument("--n-nodes", type=int, default=100)
    p.add_argument("--odf-out", help="where to write the synthesized expansion")

    p = sub.add_parser("forward", help="Radon transform to a pole-figure CSV or to measurements")
    _common(p)
    p.add_argument("--eta", type=float, nargs=3, default=[0.0, 0.0, 1.0])
    p.add_argument("--n-theta", type=int, default=19)
    p.add_argument("--n-phi", type=int, default=36)

    for name, text in (("invert1", "spline inversion from great-circle integrals"),
                       ("invert2", "spline inversion through S^2 x S^2 on a product lattice")):
        p = sub.add_parser(name, help=text)
        _common(p)
        p.add_argument("--report", help="JSON file for the solver report (alpha, condition, residuals)")

    p = sub.add_parser("verify", help="Parseval, isometry, Darboux and round-trip checks")
    _common(p)

    p = sub.add_parser("lattice", help="build and certify a rho-lattice on S^2")
    _common(p)

    p = sub.add_parser("converge", help="Method 2 convergence table over halving rho")
    _common(p)
    p.add_argument("--halvings", type=int, default=2)
    return parser


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc


def make_config(ns: argparse.Namespace) -> RunConfig:
    defaults = _load_json(ns.config) if getattr(ns, "config", None) else {}
    model = defaults.pop("model", {})
    cfg = RunConfig(command=ns.command, model=model)
    for name in ("t", "tau", "K", "rho", "seed", "sigma", "tol", "convention", "threads"):
        if name in defaults:
            setattr(cfg, name, defaults[name])
        value = getattr(ns, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if cfg.threads is None and os.environ.get(THREADS_ENV):
        try:
            cfg.threads = int(os.environ[THREADS_ENV])
        except ValueError as exc:
            raise ValidationError(f"{THREADS_ENV} must be an integer") from exc
    if getattr(ns, "m", None) is not None:
        cfg.tau = tau_from_schedule(ns.m, cfg.t)
    keys = ("nodes_file", "odf", "out", "odf_out", "report")
    cfg.paths = {k: getattr(ns, k) for k in keys if getattr(ns, k, None)}
    cfg.extra = {k: v for k, v in vars(ns).items() if k in ("n_nodes", "eta", "n_theta", "n_phi", "halvings")}
    cfg.validate()
    return cfg


def _emit(result: dict) -> None:
    print(json.dumps(result))


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _need(cfg: RunConfig, key: str, flag: str) -> str:
    if key not in cfg.paths:
        raise ValidationError(f"{cfg.command} needs {flag}")
    return cfg.paths[key]


def _load_odf(cfg: RunConfig) -> WignerExpansion:
    if "odf" in cfg.paths:
        try:
            return WignerExpansion.from_dict(_load_json(cfg.paths["odf"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed expansion file: {exc}") from exc
    model = dict(cfg.model)
    model.setdefault("seed", cfg.seed)
    return make_odf(OdfModel.from_dict(model))


def _load_measurements(path: str) -> MeasurementSet:
    try:
        return MeasurementSet.from_dict(_load_json(path))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed measurement file: {exc}") from exc


def cmd_synth(cfg: RunConfig) -> dict:
    F = _load_odf(cfg)
    n = cfg.extra.get("n_nodes", 100)
    if n < 1:
        raise ValidationError("need at least one node")
    if "nodes_file" in cfg.paths:
        m = _load_measurements(cfg.paths["nodes_file"])
        x, y = m.x, m.y
    else:
        x, y = random_nodes(n, cfg.seed)
    m = make_measurements(F, x, y, cfg.sigma, cfg.seed)
    m.meta["model"] = cfg.model
    m.save(_need(cfg, "out", "--out"))
    if "odf_out" in cfg.paths:
        _write_json(cfg.paths["odf_out"], F.to_dict())
    return {"nodes": len(m), "bandwidth": F.bandwidth}


def cmd_forward(cfg: RunConfig) -> dict:
    F = _load_odf(cfg)
    out = _need(cfg, "out", "--out")
    P = radon_exact(F)
    if "nodes_file" in cfg.paths:
        m = _load_measurements(cfg.paths["nodes_file"])
        residual = measurement_residual(F, m)
        MeasurementSet(m.x, m.y, P(m.x, m.y), {"source": "forward"}).save(out)
        if residual > cfg.tol:
            raise NumericalError(f"residual {residual:.3e} against {cfg.paths['nodes_file']} exceeds {cfg.tol:.1e}")
        return {"nodes": len(m), "residual": residual}
    rows = pole_figure_grid(P, cfg.extra["eta"], cfg.extra["n_theta"], cfg.extra["n_phi"])
    write_pole_figure_csv(out, rows)
    return {"rows": len(rows)}


def _solution_summary(sol) -> dict:
    return {"residual": sol.residual, "condition": sol.condition, "ridge": sol.ridge, "notes": sol.notes}


def cmd_invert1(cfg: RunConfig) -> dict:
    m = _load_measurements(_need(cfg, "nodes_file", "--nodes-file"))
    try:
        F, sol = invert_method1(m, cfg.t, cfg.K)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    _write_json(_need(cfg, "out", "--out"), F.to_dict())
    result = _solution_summary(sol)
    result["data_residual"] = measurement_residual(F, m)
    if "report" in cfg.paths:
        _write_json(cfg.paths["report"], {**sol.report(), **result})
    if sol.residual > cfg.tol:
        raise NumericalError(f"interpolation residual {sol.residual:.3e} exceeds {cfg.tol:.1e}")
    return result


def cmd_invert2(cfg: RunConfig) -> dict:
    tau = cfg.tau if cfg.tau is not None else tau_from_schedule(0, cfg.t)
    if "nodes_file" in cfg.paths:
        m = _load_measurements(cfg.paths["nodes_file"])
        where, samples = (m.x, m.y), m.values
    else:
        if cfg.rho is None:
            raise ValidationError("invert2 needs --nodes-file or --rho with an ODF source")
        where = lat_mod.product_lattice(cfg.rho)
        samples = sample_radon(_load_odf(cfg), where)
    try:
        P, sol = interpolate_on_product(samples, where, tau, cfg.K)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    proj, discarded = project_to_range(P)
    S = radon_inverse(proj)
    _write_json(_need(cfg, "out", "--out"), S.to_dict())
    result = {"pairs": int(np.size(samples)), "tau": tau, "bandwidth": S.bandwidth,
              "offdiag_frac": discarded, **_solution_summary(sol)}
    if "report" in cfg.paths:
        _write_json(cfg.paths["report"], {**sol.report(), **result})
    if sol.residual > cfg.tol:
        raise NumericalError(f"interpolation residual {sol.residual:.3e} exceeds {cfg.tol:.1e}")
    return result


def verify_report(F: WignerExpansion, convention: str, tol: float) -> dict:
    """Run the identity checks on F; each entry carries its value and pass/fail."""
    checks = []

    def add(name, value, limit):
        checks.append({"name": name, "value": value, "tol": limit,
                       "status": "pass" if value <= limit else "fail"})

    quad = haar_quadrature(2 * F.bandwidth)
    q = quadrature_l2_norm(F, quad)
    c = l2_norm_so3(F)
    add("parseval", abs(q - c) / max(c, 1e-300), tol)
    ratio = range_isometry_ratio(F, convention) if c > 0 else isometry_constant(convention)
    add("range_isometry", abs(ratio - isometry_constant(convention)) / isometry_constant(convention), tol)
    P = radon_exact(F)
    add("darboux", darboux_residual(P, convention), tol)
    add("round_trip", max_abs_diff(radon_inverse(P), F), tol)
    ok = all(ch["status"] == "pass" for ch in checks)
    return {"convention": convention, "bandwidth": F.bandwidth, "checks": checks,
            "status": "pass" if ok else "fail"}


def cmd_verify(cfg: RunConfig) -> dict:
    report = verify_report(_load_odf(cfg), cfg.convention, cfg.tol)
    if "out" in cfg.paths:
        _write_json(cfg.paths["out"], report)
    if report["status"] != "pass":
        bad = [ch["name"] for ch in report["checks"] if ch["status"] != "pass"]
        raise NumericalError(f"checks failed: {','.join(bad)}")
    return report


def cmd_lattice(cfg: RunConfig) -> dict:
    if cfg.rho is None:
        raise ValidationError("lattice needs --rho")
    L = lat_mod.build_lattice(cfg.rho)
    if "out" in cfg.paths:
        L.save(cfg.paths["out"])
    return {"points": len(L), **asdict(L.certificate)}


def cmd_converge(cfg: RunConfig) -> dict:
    rho = 0.99 if cfg.rho is None else cfg.rho
    halvings = cfg.extra.get("halvings", 2)
    if halvings < 0:
        raise ValidationError("halvings must be non-negative")
    tau = cfg.tau if cfg.tau is not None else tau_from_schedule(0, 0.5)
    rows = convergence_study(_load_odf(cfg), [rho / 2**h for h in range(halvings + 1)], tau, cfg.K)
    if "out" in cfg.paths:
        write_study_csv(cfg.paths["out"], rows)
    return {"rows": [asdict(r) for r in rows], "rate": rate_fit(rows)}


COMMANDS = {
    "synth": cmd_synth, "forward": cmd_forward, "invert1": cmd_invert1, "invert2": cmd_invert2,
    "verify": cmd_verify, "lattice": cmd_lattice, "converge": cmd_converge,
}


def _fail(kind: str, code: int, message: str) -> int:
    line = " ".join(str(message).split())
    print(json.dumps({"error": kind, "code": code, "message": line}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = make_config(ns)
        with threadpool_limits(limits=cfg.threads):
            result = COMMANDS[cfg.command](cfg)
    except NUMERICAL as exc:
        return _fail("numerical", 3, exc)
    except (ValidationError, ValueError, OSError) as exc:
        return _fail("validation", 2, exc)
    _emit(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
