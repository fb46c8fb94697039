"""Command-line driver: ``stabcoll solve`` and ``stabcoll sweep``.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure
(Newton nonconvergence or a singular system).
"""
from __future__ import annotations

import argparse
import logging
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .benchmarks import (boundary_layer_1d, kovasznay, lid_cavity, sine_ms, skew_advection,
                         stokes_vortex_ms)
from .config import RunConfig, config_from_mapping, load_config
from .exceptions import ConfigError, NonConvergenceError, SingularSystemError
from .flow import FlowOptions
from .navier_stokes import NewtonSettings, newton_solve, solve_with_continuation
from .output import write_csv, write_manifest, write_vtk_structured_points
from .spline import (SplineSpace1D, TensorSplineSpace2D, open_uniform_knots,
                     stretched_knots)
from .stokes import pressure_error, solve_stokes, velocity_error
from .transport import scalar_error, solve_ad
from .verify import (centerline_profiles, compare_reference, convergence_rate, divergence_max,
                     overshoot_metric, read_reference, sample_axes)

__all__ = ["OUTPUT_ROOT_ENV", "build_space", "run", "sweep", "main"]

OUTPUT_ROOT_ENV = "STABCOLL_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
ERROR_HEADER = ["k", "n_elem", "h", "field", "norm", "error"]
DEFAULT_LADDER = (100.0, 400.0, 1000.0)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# problem setup
# ---------------------------------------------------------------------------
def build_space(config: RunConfig, n_elem: int, domain=None):
    k = config.degree
    if config.dim == 1:
        kv = open_uniform_knots(k, n_elem) if config.knots == "uniform" else stretched_knots(k, n_elem)
        return SplineSpace1D(kv, (0.0, 1.0) if domain is None else domain[0])
    kw = {} if domain is None else {"domain": domain}
    return TensorSplineSpace2D.uniform(k, n_elem, knots=config.knots, **kw)


def _scalar_problem(config: RunConfig):
    return {
        "bl1d": lambda: boundary_layer_1d(config.pe),
        "sine1d": lambda: sine_ms(1, config.pe),
        "sine2d": lambda: sine_ms(2, config.pe),
        "skew": lambda: skew_advection(config.pe),
    }[config.problem]()


def _flow_problem(config: RunConfig):
    eq = config.equations
    return {
        "stokes_vortex": lambda: stokes_vortex_ms(config.mu, eq),
        "stokes_cavity": lambda: lid_cavity(None, eq, config.mu),
        "ns_vortex": lambda: stokes_vortex_ms(1.0 / config.re, eq),
        "kovasznay": lambda: kovasznay(config.re, eq),
        "ns_cavity": lambda: lid_cavity(config.re, eq),
    }[config.problem]()


def flow_options(config: RunConfig) -> FlowOptions:
    c, s = config.constants, config.stabilization
    return FlowOptions(C=c.C, C2=c.C2, C3=c.C3, s_rot=c.s_rot,
                       supg=s.supg, pspg=s.pspg, graddiv=s.graddiv)


def newton_settings(config: RunConfig) -> NewtonSettings:
    s = config.solver
    return NewtonSettings(rtol=s.rtol, max_iter=s.max_iter, line_search=s.line_search,
                          tau_jacobian=s.tau_jacobian)


def mesh_size(space) -> float:
    """Largest knot span (physical units) over all directions."""
    spaces = [space] if isinstance(space, SplineSpace1D) else [space.space_x, space.space_y]
    return float(max(np.max(np.diff(sp.breakpoints)) for sp in spaces))


# ---------------------------------------------------------------------------
# single mesh
# ---------------------------------------------------------------------------
def _solve_scalar(config, n):
    prob = _scalar_problem(config)
    space = build_space(config, n)
    stab = "supg" if config.stabilization.supg else "none"
    sol = solve_ad(prob, space, stab, config.constants.C1)
    info = {"metrics": {}, "errors": [], "newton": []}
    if prob.exact is not None:
        l2, h1 = scalar_error(sol)
        info["errors"] = [("phi", "l2", l2), ("phi", "h1", h1)]
    if config.problem in ("bl1d", "skew"):
        over, under = overshoot_metric(sol.phi, 0.0, 1.0)
        info["metrics"].update(overshoot=over, undershoot=under)
    return sol, space, info


def _solve_flow(config, n):
    prob = _flow_problem(config)
    space = build_space(config, n, prob.domain)
    opts = flow_options(config)
    info = {"metrics": {}, "errors": [], "newton": []}
    if config.problem == "ns_cavity":
        ladder = config.solver.continuation or DEFAULT_LADDER
        sols = solve_with_continuation(config.re, space, config.equations, opts, ladder,
                                       newton_settings(config))
        sol = sols[-1]
        info["newton"] = [{"Re": s.problem.reynolds, "residuals": s.history} for s in sols]
    elif prob.nonlinear:
        sol = newton_solve(prob, space, opts, "stokes", settings=newton_settings(config))
        info["newton"] = [{"Re": prob.reynolds, "residuals": sol.history}]
    else:
        sol = solve_stokes(prob, space, opts)
    if prob.u is not None:
        ul2, uh1 = velocity_error(sol)
        pl2, ph1 = pressure_error(sol)
        info["errors"] = [("u", "l2", ul2), ("u", "h1", uh1), ("p", "l2", pl2), ("p", "h1", ph1)]
    info["metrics"]["divergence_max"] = divergence_max(sol.u)
    info["metrics"]["pressure_gauge_shift"] = sol.gauge_shift
    return sol, space, info


def _field_rows(config, sol, space):
    axes = sample_axes(space, config.output.samples_per_span)
    if not config.is_flow:
        if config.dim == 1:
            x = axes[0]
            return ["x", "phi"], np.column_stack([x, sol.phi.grid(x)[0]])
        x, y = axes
        X, Y = np.meshgrid(x, y, indexing="ij")
        return ["x", "y", "phi"], np.column_stack([X.ravel(), Y.ravel(), sol.phi.grid(x, y)[0].ravel()])
    x, y = axes
    X, Y = np.meshgrid(x, y, indexing="ij")
    u = sol.u.grid(x, y).reshape(2, -1)
    p = sol.kinematic_pressure(x, y)[0][0]
    cols = [X.ravel(), Y.ravel(), u[0], u[1], p]
    header = ["x", "y", "u_x", "u_y", "p"]
    if sol.omega is not None:
        cols.append(sol.omega.grid(x, y)[0].ravel())
        header.append("omega")
    return header, np.column_stack(cols)


def _write_vtk(path, config, sol, space):
    """Uniform resampling (structured points need constant spacing)."""
    per = config.output.samples_per_span
    if config.dim == 1:
        a, b = space.domain
        n = space.knot_vector.n_elem * per + 1
        x = np.linspace(a, b, n)
        return write_vtk_structured_points(path, "stabcoll %s" % config.problem, [n], [a],
                                           [(b - a) / (n - 1)], scalars={"phi": sol.phi.grid(x)[0]})
    (x0, x1), (y0, y1) = space.domain
    nx = space.space_x.knot_vector.n_elem * per + 1
    ny = space.space_y.knot_vector.n_elem * per + 1
    x, y = np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)
    title = "stabcoll %s" % config.problem
    dims, origin = [nx, ny], [x0, y0]
    spacing = [(x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1)]
    if not config.is_flow:
        # grid() is indexed [ix, iy]; VTK wants x fastest
        return write_vtk_structured_points(path, title, dims, origin, spacing,
                                           scalars={"phi": sol.phi.grid(x, y)[0].T})
    u = sol.u.grid(x, y)
    vec = np.stack([u[0].T, u[1].T], axis=-1)
    p = sol.kinematic_pressure(x, y)[0][0].reshape(nx, ny).T
    scalars = {"p": p}
    if sol.omega is not None:
        scalars["omega"] = sol.omega.grid(x, y)[0].T
    return write_vtk_structured_points(path, title, dims, origin, spacing, scalars, {"velocity": vec})


def _centerlines(config, sol, out: Path, suffix: str, info):
    prof = centerline_profiles(sol.u)
    files = [write_csv(out / ("centerline_u%s.csv" % suffix), ["y", "u_x"], np.column_stack(prof["u"])),
             write_csv(out / ("centerline_v%s.csv" % suffix), ["x", "u_y"], np.column_stack(prof["v"]))]
    for key, path in (config.reference or {}).items():
        ref = read_reference(path)
        mx, rms = compare_reference(sol.u, ref, key)
        info["metrics"]["reference_%s_max" % key] = mx
        info["metrics"]["reference_%s_rms" % key] = rms
    return files


# ---------------------------------------------------------------------------
# public drivers
# ---------------------------------------------------------------------------
def resolve_output_dir(config: RunConfig, output_dir=None) -> Path:
    if output_dir is not None:
        return Path(output_dir)
    d = Path(config.output.directory)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not d.is_absolute():
        return Path(root) / d
    return d


def run(config: RunConfig, output_dir=None) -> dict:
    """Solve every mesh of ``config`` and write artifacts; returns the manifest.

    Artifacts (in the output directory): ``errors.csv`` (when an exact
    solution exists), ``fields[_n<N>].csv``, ``rates.csv`` for mesh
    sequences, centerline CSVs for cavities, optional ``.vtk`` and matrix
    market files, and ``manifest.json``.
    """
    config.validate()
    out = resolve_output_dir(config, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    meshes = config.meshes
    manifest = {
        "config": config.to_dict(),
        "version": __version__,
        "environment": {"python": platform.python_version(), "numpy": np.__version__,
                        "scipy": scipy.__version__},
        "runs": [],
        "outputs": [],
    }
    error_rows = []
    t_all = time.perf_counter()
    for n in meshes:
        t0 = time.perf_counter()
        solver = _solve_flow if config.is_flow else _solve_scalar
        sol, space, info = solver(config, n)
        h = mesh_size(space)
        suffix = "" if len(meshes) == 1 else "_n%d" % n
        for fld, norm, err in info["errors"]:
            error_rows.append((config.degree, n, h, fld, norm, err))
        header, rows = _field_rows(config, sol, space)
        files = [write_csv(out / ("fields%s.csv" % suffix), header, rows)]
        if config.problem in ("ns_cavity", "stokes_cavity"):
            files += _centerlines(config, sol, out, suffix, info)
        if config.output.vtk:
            files.append(_write_vtk(out / ("fields%s.vtk" % suffix), config, sol, space))
        if config.output.matrix_market:
            path = out / ("system%s.mtx" % suffix)
            if config.is_flow and sol.system is None:
                # Newton solves: Jacobian at the converged state
                from .linsys import LinearSystem
                J = sol.scheme.jacobian(sol.x)
                LinearSystem(J, -sol.scheme.residual(sol.x)).export_matrix_market(path)
            else:
                sol.system.export_matrix_market(path)
            files.append(path)
        manifest["outputs"] += [str(f.relative_to(out)) for f in files]
        manifest["runs"].append({
            "n_elem": n, "h": h,
            "dofs": int(sol.x.size if config.is_flow else sol.phi.coefficients.size),
            "seconds": time.perf_counter() - t0,
            "errors": [{"field": f, "norm": m, "error": e} for f, m, e in info["errors"]],
            "newton": info["newton"], "metrics": info["metrics"],
        })
        log.info("%s k=%d n=%d done in %.2fs", config.problem, config.degree, n,
                 time.perf_counter() - t0)
    if error_rows:
        write_csv(out / "errors.csv", ERROR_HEADER, error_rows)
        manifest["outputs"].append("errors.csv")
        if len(meshes) > 1:
            rates = _rates(error_rows)
            write_csv(out / "rates.csv", ["k", "field", "norm", "rate"], rates)
            manifest["outputs"].append("rates.csv")
            manifest["rates"] = [{"k": k, "field": f, "norm": m, "rate": r} for k, f, m, r in rates]
    manifest["seconds"] = time.perf_counter() - t_all
    write_manifest(out / "manifest.json", manifest)
    return manifest


def _rates(error_rows):
    """Fitted rate per (k, field, norm), in first-seen order."""
    groups = {}
    for k, n, h, f, m, e in error_rows:
        groups.setdefault((k, f, m), []).append((h, e))
    return [(k, f, m, convergence_rate(*zip(*v))) for (k, f, m), v in groups.items() if len(v) > 1]


def _run_child(args):
    config, out = args
    return run(config, out)


def sweep(config: RunConfig, axis: str, values, output_dir=None, jobs: int = 1) -> dict:
    """Run ``config`` once per value of ``axis``; one aggregated CSV.

    Each run writes into ``<output>/<axis>_<value>/``.  The aggregated
    ``sweep_<axis>.csv`` lists every error row in value order; with
    ``axis="n_elem"`` (or mesh lists in the config) fitted rates go to
    ``sweep_<axis>_rates.csv``.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    configs = [config.with_value(axis, v) for v in values]
    out = resolve_output_dir(config, output_dir)
    tags = ["%s_%s" % (axis, _tag(v)) for v in values]
    tasks = [(c, out / t) for c, t in zip(configs, tags)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            manifests = list(pool.map(_run_child, tasks))
    else:
        manifests = [_run_child(t) for t in tasks]
    rows, rate_rows = [], []
    for v, c, m in zip(values, configs, manifests):
        errs = [(c.degree, r["n_elem"], r["h"], e["field"], e["norm"], e["error"])
                for r in m["runs"] for e in r["errors"]]
        rows += [(axis, _tag(v)) + e for e in errs]
        rate_rows += [(axis, _tag(v)) + r for r in _rates(errs)]
    if axis == "n_elem":
        by_value = [r[2:] for r in rows]
        rate_rows = [(axis, "all") + r for r in _rates(by_value)]
    summary = {"axis": axis, "values": [_tag(v) for v in values], "runs": tags, "outputs": []}
    write_csv(out / ("sweep_%s.csv" % axis), ["axis", "value"] + ERROR_HEADER, rows)
    summary["outputs"].append("sweep_%s.csv" % axis)
    if rate_rows:
        write_csv(out / ("sweep_%s_rates.csv" % axis), ["axis", "value", "k", "field", "norm", "rate"],
                  rate_rows)
        summary["outputs"].append("sweep_%s_rates.csv" % axis)
        summary["rates"] = [list(r) for r in rate_rows]
    write_manifest(out / ("sweep_%s_manifest.json" % axis), {"config": config.to_dict(), **summary})
    return summary


def _tag(v) -> str:
    f = float(v)
    return str(int(f)) if f == int(f) else repr(f)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def _load(path) -> RunConfig:
    """YAML config, or a run manifest (its ``config`` entry) for reruns."""
    import yaml

    path = Path(path)
    cfg = load_config(path) if path.suffix != ".json" else None
    if cfg is None:
        try:
            data = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError("cannot read %s: %s" % (path, exc)) from None
        cfg = config_from_mapping(data.get("config", data) if isinstance(data, dict) else data)
    if cfg.reference:
        # relative reference paths are taken from the config file's folder
        for key, p in list(cfg.reference.items()):
            q = Path(p)
            if not q.is_absolute() and not q.exists() and (path.parent / q).exists():
                cfg.reference[key] = str(path.parent / q)
    return cfg


def _parse_values(text: str) -> list:
    vals = [v for v in text.replace(",", " ").split() if v]
    if not vals:
        raise ConfigError("--values is empty")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stabcoll", description="Stabilized spline collocation solver")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run one configuration")
    s.add_argument("--config", required=True, help="YAML config or a previous manifest.json")
    s.add_argument("--output", help="output directory (overrides the config)")
    w = sub.add_parser("sweep", help="run a configuration over one parameter axis")
    w.add_argument("--config", required=True)
    w.add_argument("--axis", required=True, choices=["n_elem", "k", "C", "Pe", "Re"])
    w.add_argument("--values", required=True, help="comma or space separated list")
    w.add_argument("--output")
    w.add_argument("--jobs", type=int, default=1, help="parallel runs")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args.config)
        if args.command == "solve":
            m = run(cfg, args.output)
            out = resolve_output_dir(cfg, args.output)
            print("wrote %d files to %s (%.2fs)" % (len(m["outputs"]) + 1, out, m["seconds"]))
        else:
            summary = sweep(cfg, args.axis, _parse_values(args.values), args.output, args.jobs)
            for r in summary.get("rates", []):
                print("k=%s %s %s rate %.3f (%s=%s)" % (r[2], r[3], r[4], r[5], r[0], r[1]))
            print("sweep over %s: %d runs" % (args.axis, len(summary["runs"])))
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (NonConvergenceError, SingularSystemError) as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
