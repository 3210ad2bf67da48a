"""Command-line front end.

Exit status: 0 on success, 1 on usage errors, 2 when ``--check`` is given and
an acceptance threshold is violated.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import harness
from .assembly import StabConfig, build_dofmap
from .mesh import MeshError, generate_structured, read_mesh, write_mesh
from .solver import SolverError
from .vtk import write_vtk

EXIT_USAGE = 1
EXIT_CHECK = 2

H1_WINDOW = (0.85, 1.15)
L2U_WINDOW = (1.8, 2.2)
L2P_MIN = 0.85
BR_RATIO_MIN = 1e3
ROBUST_TOL = 1e-8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _solve_flags(p, levels=False):
    if levels:
        p.add_argument("--levels", default="8,16,32,64",
                       help="comma-separated mesh levels (default 8,16,32,64)")
    else:
        p.add_argument("--n", type=int, default=16, help="structured mesh level")
        p.add_argument("--mesh", metavar="FILE", help="read the mesh from FILE instead")
    p.add_argument("--nu", type=float, default=1e-6, help="viscosity (default 1e-6)")
    p.add_argument("--stab", choices=["j0", "jd"], default=None,
                   help="stabilization (default jd; not allowed with --scheme br)")
    p.add_argument("--alpha", type=float, default=1.0, help="stabilization parameter")
    p.add_argument("--scheme", choices=["full", "condensed", "br"], default="full")
    p.add_argument("--csv", metavar="OUT", help="write the error table as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hdivstokes",
                     description="Divergence-free P1c+RT0-P0 Stokes solver and experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the manufactured vortex flow on one mesh")
    _solve_flags(p)
    p.add_argument("--vtk", metavar="OUT", help="write the solution as legacy VTK")

    p = sub.add_parser("convergence", help="convergence study on structured meshes")
    _solve_flags(p, levels=True)
    p.add_argument("--check", action="store_true", help="exit 2 if observed orders miss the windows")

    p = sub.add_parser("robustness", help="gradient-forcing invariance test")
    _solve_flags(p)
    p.add_argument("--psi", choices=["x", "cubic"], default="x")
    p.add_argument("--check", action="store_true")

    p = sub.add_parser("compare-br", help="compare with the Bernardi-Raugel element")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--nu", type=float, default=1e-6)
    p.add_argument("--check", action="store_true", help="exit 2 if the error ratio is below 1e3")

    p = sub.add_parser("mesh", help="write a structured mesh file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    return parser


def _stab(args):
    if args.scheme == "br":
        if args.stab is not None:
            raise UsageError("the Bernardi-Raugel scheme takes no stabilization (--stab)")
        return None
    return StabConfig(kind=(args.stab or "jd").upper(), alpha=args.alpha)


def _mesh(args):
    if getattr(args, "mesh", None):
        return read_mesh(args.mesh), None
    if args.n < 1:
        raise UsageError(f"--n must be a positive integer, got {args.n}")
    return generate_structured(args.n), args.n


def _fmt(v):
    return np.array2string(np.asarray(v, dtype=float) + 0.0, precision=6, separator=", ")


def cmd_solve(args) -> int:
    stab = _stab(args)
    mesh, n = _mesh(args)
    case = harness.example51(args.nu)
    case.verify_forcing()
    dofmap = build_dofmap(mesh)
    dofmap, sol = harness.solve_on_mesh(mesh, case.f, args.nu, stab, args.scheme, dofmap)
    rep = harness.compute_errors(mesh, dofmap, sol, case, n=n)
    print(f"scheme={sol.scheme} n1={dofmap.n1} nR={dofmap.nR} nP={dofmap.nP} "
          f"residual={sol.residual:.3e}")
    if dofmap.nR <= 12:
        print(f"U_R = {_fmt(sol.U_R)}")
        print(f"U_L = {_fmt(sol.U_L)}")
        print(f"P = {_fmt(sol.P)}")
    print(f"h={rep.h:.6e} h1_u={rep.h1_u:.6e} l2_u={rep.l2_u:.6e} l2_p={rep.l2_p:.6e} "
          f"max_div={rep.max_div:.3e}")
    if args.csv:
        harness.write_csv([rep], args.csv)
    if args.vtk:
        write_vtk(args.vtk, mesh, dofmap, sol)
    return 0


def _parse_levels(text):
    try:
        levels = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad --levels {text!r}") from None
    if not levels or min(levels) < 1:
        raise UsageError(f"bad --levels {text!r}")
    return levels


def order_violations(reports) -> list[str]:
    out = []
    for r in reports[1:]:
        if not H1_WINDOW[0] <= (r.eoc_h1 or 0) <= H1_WINDOW[1]:
            out.append(f"n={r.n}: H1 order {r.eoc_h1} outside {H1_WINDOW}")
        if not L2U_WINDOW[0] <= (r.eoc_l2u or 0) <= L2U_WINDOW[1]:
            out.append(f"n={r.n}: L2 velocity order {r.eoc_l2u} outside {L2U_WINDOW}")
        if not (r.eoc_l2p or 0) >= L2P_MIN:
            out.append(f"n={r.n}: L2 pressure order {r.eoc_l2p} below {L2P_MIN}")
    return out


def cmd_convergence(args) -> int:
    stab = _stab(args)
    levels = _parse_levels(args.levels)
    try:
        reports = harness.convergence_study(levels, args.nu, stab, args.scheme)
    except harness.StudyAborted as exc:
        print(harness.format_csv(exc.partial), end="")
        print(f"aborted: {exc}", file=sys.stderr)
        return 1
    text = harness.format_csv(reports)
    print(text, end="")
    if args.csv:
        harness.write_csv(reports, args.csv)
    if args.check:
        bad = order_violations(reports)
        for line in bad:
            print(f"check failed: {line}", file=sys.stderr)
        if bad:
            return EXIT_CHECK
    return 0


def cmd_robustness(args) -> int:
    stab = _stab(args)
    mesh, _ = _mesh(args)
    rep = harness.robustness_test(mesh, args.nu, stab, args.psi, args.scheme)
    print(f"psi={args.psi} velocity_change={rep.velocity_change:.3e} "
          f"dU_L={rep.du_L:.3e} dU_R={rep.du_R:.3e} pressure_error={rep.pressure_error:.3e}")
    if args.check and not (rep.velocity_change <= ROBUST_TOL and rep.pressure_error <= ROBUST_TOL):
        print("check failed: gradient forcing changed the velocity", file=sys.stderr)
        return EXIT_CHECK
    return 0


def cmd_compare_br(args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be a positive integer, got {args.n}")
    cmp = harness.compare_br(args.n, args.nu)
    for name, rep in (("compact", cmp.compact), ("bernardi-raugel", cmp.bernardi_raugel)):
        print(f"{name}: h1_u={rep.h1_u:.6e} l2_u={rep.l2_u:.6e} l2_p={rep.l2_p:.6e} "
              f"max_div={rep.max_div:.3e} max_mean_div={rep.max_mean_div:.3e}")
    print(f"ratio h1={cmp.ratio_h1:.3e} l2={cmp.ratio_l2:.3e}")
    if args.check and cmp.ratio_h1 < BR_RATIO_MIN:
        print(f"check failed: H1 ratio {cmp.ratio_h1:.3e} < {BR_RATIO_MIN:g}", file=sys.stderr)
        return EXIT_CHECK
    return 0


def cmd_mesh(args) -> int:
    if args.n < 1:
        raise UsageError(f"--n must be a positive integer, got {args.n}")
    write_mesh(generate_structured(args.n), args.out)
    return 0


COMMANDS = {"solve": cmd_solve, "convergence": cmd_convergence, "robustness": cmd_robustness,
            "compare-br": cmd_compare_br, "mesh": cmd_mesh}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, MeshError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"hdivstokes: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"hdivstokes: solver failure: {exc}", file=sys.stderr)
        return EXIT_USAGE


run_cli = main

if __name__ == "__main__":
    sys.exit(main())
