"""Command-line front end.

Subcommands: spectrum, converge, solve, equivalence, mesh.  Exit codes are
0 for success (stable / equivalent), 2 for a negative verdict, 1 for errors.
All output files are written atomically; every CSV starts with a comment
line recording version, configuration, and seed.  An optional key=value
config file supplies defaults; explicit flags win.  FUSE_THREADS caps the
worker count for sweeps (0 or 1 runs serially).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .benchsuite import (
    run_advection_1d,
    run_advection_2d,
    run_euler_1d,
    run_poisson_1d,
    run_poisson_circle,
    run_taylor_green,
    sweep_advection_1d,
    sweep_advection_2d,
    sweep_euler_1d,
    sweep_poisson_1d,
    sweep_poisson_circle,
    sweep_taylor_green,
    write_report_csv,
)
from .benchsuite.cases2d import DEFAULT_SEED
from .fuseops import (
    VelocityField,
    assemble_first_derivative_1d,
    petrov_galerkin_operator_1d,
    sd_operator_1d,
)
from .meshkit import (
    build_circle_mesh,
    build_perturbed_quad_mesh,
    build_structured_quad_mesh,
    refine_uniform,
    save_mesh,
)
from .refelem import NodeKind, ReferenceElement, build_node_set
from .vnstab import scan_stability
from .meshkit.mesh1d import build_mesh_1d

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2

KIND_NAMES = {
    "uniform": NodeKind.UNIFORM,
    "gauss-lobatto": NodeKind.GAUSS_LOBATTO,
    "gl-endpoints": NodeKind.GAUSS_LEGENDRE_ENDPOINTS,
}

CONVERGE_CASES = (
    "advection1d",
    "poisson1d",
    "euler1d",
    "advection2d",
    "poisson-circle",
    "taylor-green",
)


def _atomic_write(path: str, text: str):
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _worker_count() -> int:
    raw = os.environ.get("FUSE_THREADS", "0")
    try:
        return max(int(raw), 0)
    except ValueError:
        return 0


def cmd_spectrum(args) -> int:
    if args.p < 1:
        print("error: --p must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    kind = KIND_NAMES[args.kind]
    scan, verdict = scan_stability(kind, args.p, args.op, n_samples=args.samples)
    if args.out:
        p = args.p
        header = ["xi"]
        header += [f"re_lambda_{i+1}" for i in range(p)]
        header += [f"im_lambda_{i+1}" for i in range(p)]
        lines = [
            f"# fusesem {__version__} spectrum kind={args.kind} p={p} "
            f"op={args.op} samples={args.samples}",
            ",".join(header),
        ]
        for xi, eigs in zip(scan.xi, scan.eigenvalues):
            row = [format(xi, ".17g")]
            row += [format(v, ".17g") for v in eigs.real]
            row += [format(v, ".17g") for v in eigs.imag]
            lines.append(",".join(row))
        _atomic_write(args.out, "\n".join(lines) + "\n")
    word = "stable" if verdict.stable else "unstable"
    print(
        f"{args.kind} p={args.p} {args.op}: {word} "
        f"(min Re = {verdict.min_real_part:.6e} at xi = {verdict.worst_xi:.6f})"
    )
    return EXIT_OK if verdict.stable else EXIT_NEGATIVE


def _run_converge_case(args):
    workers = _worker_count()
    if args.case == "advection1d":
        return sweep_advection_1d(args.p, args.levels, dt=args.dt)
    if args.case == "poisson1d":
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(
                    lambda lvl: run_poisson_1d(args.p, 8 * 2**lvl), range(args.levels)
                ))
            from .benchsuite import ConvergenceReport

            report = ConvergenceReport(case="poisson1d", p=args.p)
            for row in rows:
                report.add(row)
            return report
        return sweep_poisson_1d(args.p, args.levels)
    if args.case == "euler1d":
        return sweep_euler_1d(args.p, args.levels, dt=args.dt)
    if args.case == "advection2d":
        return sweep_advection_2d(
            args.p, args.levels, mesh_kind=args.mesh_kind, dt=args.dt, seed=args.seed
        )
    if args.case == "poisson-circle":
        return sweep_poisson_circle(args.p, args.levels, seed=args.seed)
    if args.case == "taylor-green":
        return sweep_taylor_green(
            args.p, args.levels, dt=args.dt if args.dt else 1e-3, seed=args.seed
        )
    raise ValueError(args.case)


def cmd_converge(args) -> int:
    if args.case not in CONVERGE_CASES:
        print(
            f"error: unknown case {args.case!r}; valid cases: "
            + ", ".join(CONVERGE_CASES),
            file=sys.stderr,
        )
        return EXIT_ERROR
    try:
        report = _run_converge_case(args)
    except Exception as exc:  # noqa: BLE001 - report the failing level cleanly
        print(f"error: converge run failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        write_report_csv(report, args.out)
    for fld in report.error_fields():
        errs = report.errors_of(fld)
        orders = ["  -  "] + [f"{o:.3f}" for o in report.observed_orders(fld)]
        print(f"{report.case} p={report.p} field={fld}")
        for row, order in zip(report.rows, orders):
            print(
                f"  level {row.level}: dofs={row.dofs:>7d} "
                f"error={row.errors[fld]:.6e} order={order}"
            )
    return EXIT_OK


def cmd_solve(args) -> int:
    if args.case not in CONVERGE_CASES:
        print(
            f"error: unknown case {args.case!r}; valid cases: "
            + ", ".join(CONVERGE_CASES),
            file=sys.stderr,
        )
        return EXIT_ERROR
    try:
        if args.case == "advection1d":
            row = run_advection_1d(args.p, 8 * 2**args.level,
                                   dt=args.dt if args.dt else 1e-3)
        elif args.case == "poisson1d":
            row = run_poisson_1d(args.p, 8 * 2**args.level)
        elif args.case == "euler1d":
            row = run_euler_1d(args.p, 8 * 2**args.level,
                               dt=args.dt if args.dt else 1e-3)
        elif args.case == "advection2d":
            row = run_advection_2d(args.p, args.level, args.mesh_kind,
                                   dt=args.dt if args.dt else 2e-3, seed=args.seed)
        elif args.case == "poisson-circle":
            row = run_poisson_circle(args.p, args.level, seed=args.seed)
        else:
            row = run_taylor_green(args.p, args.level,
                                   dt=args.dt if args.dt else 1e-3, seed=args.seed)
    except Exception as exc:  # noqa: BLE001
        print(f"error: solve failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    errs = " ".join(f"{k}={v:.6e}" for k, v in row.errors.items())
    print(f"{row.case} p={row.p} level={row.level} dofs={row.dofs} {errs}")
    if args.out:
        from .benchsuite import ConvergenceReport

        report = ConvergenceReport(case=row.case, p=row.p)
        report.add(row)
        write_report_csv(report, args.out)
    return EXIT_OK


def cmd_equivalence(args) -> int:
    if not (2 <= args.p <= 5):
        print("error: --p must lie in [2, 5]", file=sys.stderr)
        return EXIT_ERROR
    if not (2 <= args.n <= 8):
        print("error: --n must lie in [2, 8]", file=sys.stderr)
        return EXIT_ERROR
    mesh = build_mesh_1d(args.n, (0.0, float(args.n)), periodic=True)
    ref = ReferenceElement.build(NodeKind.GAUSS_LEGENDRE_ENDPOINTS, args.p)
    fuse = assemble_first_derivative_1d(mesh, ref, VelocityField.constant(1.0))
    if args.which == "sd":
        other = sd_operator_1d(args.p, args.n, 1.0)
    else:
        other = petrov_galerkin_operator_1d(mesh, ref, VelocityField.constant(1.0))
    diff = float(np.max(np.abs(fuse.toarray() - other.toarray())))
    print(f"{args.which} vs upwind assembly: max entrywise difference = {diff:.3e}")
    return EXIT_OK if diff <= 1e-12 else EXIT_NEGATIVE


def cmd_mesh(args) -> int:
    try:
        if args.recipe == "structured":
            mesh = build_structured_quad_mesh(
                args.nx, args.ny, tuple(args.domain), p_geo=args.p_geo
            )
        elif args.recipe == "perturbed":
            mesh = build_perturbed_quad_mesh(
                args.nx, args.ny, tuple(args.domain), seed=args.seed, p_geo=args.p_geo
            )
        elif args.recipe == "circle":
            mesh = build_circle_mesh(args.p_geo)
        else:
            print(f"error: unknown recipe {args.recipe!r}", file=sys.stderr)
            return EXIT_ERROR
        for _ in range(args.level):
            mesh = refine_uniform(mesh)
        save_mesh(mesh, args.out)
    except OSError as exc:
        print(f"error: mesh write failed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"wrote {mesh.n_elements} elements, {mesh.n_vertices} vertices to {args.out}")
    return EXIT_OK


def _apply_config_file(parser: argparse.ArgumentParser, subparsers: dict, argv):
    """Merge key=value defaults from --config into the subcommand; flags win."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config needs a file path")
    path = argv[idx + 1]
    argv = argv[:idx] + argv[idx + 2 :]
    if not argv or argv[0] not in subparsers:
        parser.error("--config requires a subcommand")
    pairs = {}
    try:
        with open(path) as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    parser.error(f"{path}:{ln}: expected key=value")
                key, val = line.split("=", 1)
                pairs[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    sub = subparsers[argv[0]]
    actions = {a.dest: a for a in sub._actions}
    typed = {}
    for key, raw in pairs.items():
        if key not in actions:
            parser.error(f"unknown config key {key!r} for {argv[0]}")
        action = actions[key]
        typed[key] = action.type(raw) if action.type else raw
    sub.set_defaults(**typed)
    return argv


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="fuse",
        description="Face-upwinded spectral element solvers and diagnostics",
    )
    parser.add_argument("--version", action="version", version=f"fusesem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="von Neumann stability scan")
    sp.add_argument("--kind", choices=sorted(KIND_NAMES), default="gl-endpoints")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--op", choices=("first", "laplacian"), default="first")
    sp.add_argument("--samples", type=int, default=1024)
    sp.add_argument("--out", default=None, help="CSV output path")
    sp.set_defaults(func=cmd_spectrum)

    cv = sub.add_parser("converge", help="convergence sweep of a benchmark case")
    cv.add_argument("--case", required=True)
    cv.add_argument("--p", type=int, default=3)
    cv.add_argument("--levels", type=int, default=4)
    cv.add_argument("--dt", type=float, default=None)
    cv.add_argument("--mesh-kind", choices=("structured", "perturbed"),
                    default="structured")
    cv.add_argument("--seed", type=int, default=DEFAULT_SEED)
    cv.add_argument("--out", default=None)
    cv.set_defaults(func=cmd_converge)

    sv = sub.add_parser("solve", help="run one benchmark case at one level")
    sv.add_argument("--case", required=True)
    sv.add_argument("--p", type=int, default=3)
    sv.add_argument("--level", type=int, default=0)
    sv.add_argument("--dt", type=float, default=None)
    sv.add_argument("--mesh-kind", choices=("structured", "perturbed"),
                    default="structured")
    sv.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sv.add_argument("--out", default=None)
    sv.set_defaults(func=cmd_solve)

    eq = sub.add_parser("equivalence", help="check the SD / Petrov-Galerkin identities")
    eq.add_argument("--which", choices=("sd", "petrov"), required=True)
    eq.add_argument("--p", type=int, required=True)
    eq.add_argument("--n", type=int, default=4)
    eq.set_defaults(func=cmd_equivalence)

    ms = sub.add_parser("mesh", help="generate and save a mesh")
    ms.add_argument("--recipe", choices=("structured", "perturbed", "circle"),
                    required=True)
    ms.add_argument("--level", type=int, default=0)
    ms.add_argument("--nx", type=int, default=4)
    ms.add_argument("--ny", type=int, default=4)
    ms.add_argument("--domain", type=float, nargs=4, default=[0.0, 1.0, 0.0, 1.0],
                    metavar=("X0", "X1", "Y0", "Y1"))
    ms.add_argument("--p-geo", type=int, default=3)
    ms.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ms.add_argument("--out", required=True)
    ms.set_defaults(func=cmd_mesh)
    return parser, {"spectrum": sp, "converge": cv, "solve": sv,
                    "equivalence": eq, "mesh": ms}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        argv = _apply_config_file(parser, subparsers, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; keep 2 for negative verdicts only
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
