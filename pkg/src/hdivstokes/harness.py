"""Manufactured-solution experiments: error norms, convergence, mass conservation,
pressure robustness and the comparison with the Bernardi-Raugel element.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assembly import DofMap, StabConfig, assemble_system, build_dofmap
from .condensation import solve_condensed
from .fe_spaces import evaluate_velocity
from .interp import project_p0
from .mesh import Mesh, generate_structured
from .quadrature import physical_points, quadrature
from .solver import Solution, SolverError, solve_system

log = logging.getLogger(__name__)

THREADS_ENV = "HDIVSTOKES_THREADS"
SCHEME_ALIASES = {"br": "bernardi-raugel", "full": "full", "condensed": "condensed",
                  "perturbed": "perturbed", "bernardi-raugel": "bernardi-raugel"}
CSV_HEADER = ["n", "h", "h1_u", "l2_u", "l2_p", "max_div", "eoc_h1", "eoc_l2u", "eoc_l2p"]


# -- manufactured vortex flow --------------------------------------------------------

def _g(t):
    return t**2 * (1 - t) ** 2


def _g1(t):
    return 2 * t * (1 - t) * (1 - 2 * t)


def _g2(t):
    return 2 - 12 * t + 12 * t**2


def _g3(t):
    return 24 * t - 12


@dataclass(frozen=True)
class ManufacturedCase:
    """Vortex flow u = curl(100 x^2 (1-x)^2 y^2 (1-y)^2) with a cubic pressure.

    ``f = -nu Lap u + grad p`` is written out in closed form and checked
    against finite differences by :meth:`verify_forcing`.
    """

    nu: float

    @staticmethod
    def u(x, y):
        return 100 * _g(x) * _g1(y), -100 * _g1(x) * _g(y)

    @staticmethod
    def grad_u(x, y) -> np.ndarray:
        """[..., a, c] = d u_a / d x_c."""
        return np.stack([
            np.stack([100 * _g1(x) * _g1(y), 100 * _g(x) * _g2(y)], axis=-1),
            np.stack([-100 * _g2(x) * _g(y), -100 * _g1(x) * _g1(y)], axis=-1),
        ], axis=-2)

    @staticmethod
    def laplace_u(x, y):
        return (100 * (_g2(x) * _g1(y) + _g(x) * _g3(y)),
                -100 * (_g3(x) * _g(y) + _g1(x) * _g2(y)))

    @staticmethod
    def p(x, y):
        return 10 * ((x - 0.5) ** 3 * y**2 + (1 - x) ** 3 * (y - 0.5) ** 3)

    @staticmethod
    def grad_p(x, y):
        return (10 * (3 * (x - 0.5) ** 2 * y**2 - 3 * (1 - x) ** 2 * (y - 0.5) ** 3),
                10 * (2 * (x - 0.5) ** 3 * y + 3 * (1 - x) ** 3 * (y - 0.5) ** 2))

    def f(self, x, y):
        lx, ly = self.laplace_u(x, y)
        px, py = self.grad_p(x, y)
        return -self.nu * lx + px, -self.nu * ly + py

    def verify_forcing(self, npoints: int = 100, seed: int = 0, step: float = 1e-4) -> float:
        """Compare f with centered differences of -nu Lap u + grad p at random points.

        The viscous and pressure parts are checked separately so that the
        check stays meaningful for tiny viscosities.  Returns the largest
        relative discrepancy and raises if it exceeds 1e-6.
        """
        rng = np.random.default_rng(seed)
        x, y = rng.uniform(0.05, 0.95, size=(2, npoints))
        e = step
        ux = [np.array(c) for c in self.u(x, y)]
        lap_fd = [(a1 + a2 + a3 + a4 - 4 * a0) / e**2 for a0, a1, a2, a3, a4 in zip(
            ux, self.u(x + e, y), self.u(x - e, y), self.u(x, y + e), self.u(x, y - e))]
        gp_fd = [(self.p(x + e, y) - self.p(x - e, y)) / (2 * e),
                 (self.p(x, y + e) - self.p(x, y - e)) / (2 * e)]
        worst = 0.0
        for fd, exact in ((lap_fd, self.laplace_u(x, y)), (gp_fd, self.grad_p(x, y))):
            fd, exact = np.stack(fd), np.stack(exact)
            worst = max(worst, np.linalg.norm(fd - exact) / np.linalg.norm(exact))
        f_fd = -self.nu * np.stack(lap_fd) + np.stack(gp_fd)
        f_ex = np.stack(self.f(x, y))
        worst = max(worst, np.linalg.norm(f_fd - f_ex) / np.linalg.norm(f_ex))
        if worst > 1e-6:
            raise AssertionError(f"forcing disagrees with finite differences: {worst:.2e}")
        return float(worst)


def example51(nu: float) -> ManufacturedCase:
    if not nu > 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    return ManufacturedCase(float(nu))


# gradient perturbations for the robustness experiment: (psi, grad psi)
PSI = {
    "x": (lambda x, y: x + 0 * y, lambda x, y: (np.ones_like(x), np.zeros_like(y))),
    "cubic": (lambda x, y: x**3 + y**3, lambda x, y: (3 * x**2, 3 * y**2)),
    "zero": (lambda x, y: 0 * x, lambda x, y: (np.zeros_like(x), np.zeros_like(y))),
}


# -- solving ---------------------------------------------------------------------

def solve_on_mesh(mesh: Mesh, f, nu: float, stab: Optional[StabConfig] = None,
                  scheme: str = "full", dofmap: Optional[DofMap] = None):
    """Assemble and solve one scheme; returns (dofmap, solution)."""
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    dofmap = dofmap or build_dofmap(mesh)
    if scheme == "bernardi-raugel":
        system = assemble_system(mesh, dofmap, None, nu, f, scheme)
        return dofmap, solve_system(system)
    stab = stab or StabConfig()
    if scheme == "condensed":
        system = assemble_system(mesh, dofmap, stab, nu, f, "perturbed")
        return dofmap, solve_condensed(system)
    system = assemble_system(mesh, dofmap, stab, nu, f, scheme)
    return dofmap, solve_system(system)


def _enrichment(solution: Solution) -> str:
    return "bubble" if solution.scheme == "bernardi-raugel" else "rt0"


def _velocity_at_rule(mesh, dofmap, solution, rule):
    return evaluate_velocity(mesh.coords(), mesh.tri_signs, mesh.normals[mesh.tri_edges],
                             dofmap.local_velocity(solution.U_L),
                             dofmap.local_edges(solution.U_R),
                             rule.points, _enrichment(solution))


# -- error measurement ------------------------------------------------------------

@dataclass
class ErrorReport:
    n: Optional[int]
    h: float
    h1_u: float
    l2_u: float
    l2_p: float
    max_div: float       # pointwise, at quadrature points
    max_mean_div: float  # elementwise mean
    max_u: float
    eoc_h1: Optional[float] = None
    eoc_l2u: Optional[float] = None
    eoc_l2p: Optional[float] = None
    scheme: str = ""

    def row(self) -> list:
        return [getattr(self, k) for k in CSV_HEADER]


def compute_errors(mesh: Mesh, dofmap: DofMap, solution: Solution, case: ManufacturedCase,
                   n: Optional[int] = None, rule=None) -> ErrorReport:
    rule = rule or quadrature()
    x = physical_points(mesh.coords(), rule)
    X, Y = x[..., 0], x[..., 1]
    w = 2 * mesh.areas[:, None] * rule.weights[None, :]
    vals, grads = _velocity_at_rule(mesh, dofmap, solution, rule)

    du = np.stack(case.u(X, Y), axis=-1) - vals
    dg = case.grad_u(X, Y) - grads
    p = case.p(X, Y)
    p_mean = np.sum(w * p) / np.sum(w)
    dp = p - p_mean - solution.P[:, None]

    div = np.abs(np.trace(grads, axis1=-2, axis2=-1))
    mean_div = np.abs(np.sum(w * np.trace(grads, axis1=-2, axis2=-1), axis=1)) / mesh.areas
    return ErrorReport(
        n=n, h=mesh.h,
        h1_u=float(np.sqrt(np.sum(w * np.sum(dg**2, axis=(-2, -1))))),
        l2_u=float(np.sqrt(np.sum(w * np.sum(du**2, axis=-1)))),
        l2_p=float(np.sqrt(np.sum(w * dp**2))),
        max_div=float(div.max()), max_mean_div=float(mean_div.max()),
        max_u=float(np.abs(vals).max()), scheme=solution.scheme)


@dataclass(frozen=True)
class DivergenceReport:
    max_mean: float
    max_pointwise: float


def divergence_check(mesh: Mesh, dofmap: DofMap, solution: Solution, rule=None) -> DivergenceReport:
    rule = rule or quadrature()
    _, grads = _velocity_at_rule(mesh, dofmap, solution, rule)
    div = np.trace(grads, axis1=-2, axis2=-1)
    mean = (div @ rule.weights) / rule.weights.sum()
    return DivergenceReport(float(np.abs(mean).max()), float(np.abs(div).max()))


def _eoc(coarse: float, fine: float, ratio: float) -> Optional[float]:
    if coarse <= 0 or fine <= 0:
        return None
    return float(np.log(coarse / fine) / np.log(ratio))


def add_orders(reports: Sequence[ErrorReport]) -> None:
    for prev, cur in zip(reports, reports[1:]):
        ratio = prev.h / cur.h
        cur.eoc_h1 = _eoc(prev.h1_u, cur.h1_u, ratio)
        cur.eoc_l2u = _eoc(prev.l2_u, cur.l2_u, ratio)
        cur.eoc_l2p = _eoc(prev.l2_p, cur.l2_p, ratio)


class StudyAborted(RuntimeError):
    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def convergence_study(levels: Sequence[int], nu: float, stab: Optional[StabConfig] = None,
                      scheme: str = "full") -> list[ErrorReport]:
    """Solve the vortex flow on structured n x n meshes and tabulate errors and orders."""
    case = example51(nu)
    case.verify_forcing()

    def run(n):
        mesh = generate_structured(n)
        dofmap, sol = solve_on_mesh(mesh, case.f, nu, stab, scheme)
        rep = compute_errors(mesh, dofmap, sol, case, n=n)
        log.info("n=%d h1=%.3e l2u=%.3e l2p=%.3e", n, rep.h1_u, rep.l2_u, rep.l2_p)
        return rep

    reports: list[ErrorReport] = []
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        futures = [pool.submit(run, n) for n in levels]
        for n, fut in zip(levels, futures):
            try:
                reports.append(fut.result())
            except SolverError as exc:
                add_orders(reports)
                raise StudyAborted(f"solver failed at n={n}: {exc}", reports) from exc
    add_orders(reports)
    return reports


def format_csv(reports: Sequence[ErrorReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        writer.writerow(["" if v is None else (v if isinstance(v, int) else f"{v:.10e}")
                         for v in rep.row()])
    return buf.getvalue()


def write_csv(reports: Sequence[ErrorReport], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(reports))


# -- pressure robustness ------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessReport:
    velocity_change: float   # relative change of (U_L, U_R)
    du_L: float
    du_R: float
    pressure_error: float    # max |dP - (P_h psi - mean)|
    base: Solution = field(repr=False)
    shifted: Solution = field(repr=False)


def robustness_test(mesh: Mesh, nu: float, stab: Optional[StabConfig] = None,
                    psi="x", scheme: str = "full",
                    base_force: Optional[Callable] = "example51") -> RobustnessReport:
    """Solve with f and with f + grad psi and compare the two solutions.

    ``base_force`` defaults to the vortex-flow forcing; pass None for a zero
    base force.
    """
    psi_fn, grad_psi = PSI[psi] if isinstance(psi, str) else psi
    if base_force == "example51":
        base_force = example51(nu).f
    if base_force is None:
        def base_force(x, y):
            return np.zeros_like(x), np.zeros_like(y)

    def shifted(x, y):
        fx, fy = base_force(x, y)
        gx, gy = grad_psi(x, y)
        return fx + gx, fy + gy

    dofmap = build_dofmap(mesh)
    _, s0 = solve_on_mesh(mesh, base_force, nu, stab, scheme, dofmap)
    _, s1 = solve_on_mesh(mesh, shifted, nu, stab, scheme, dofmap)
    dL = np.linalg.norm(s1.U_L - s0.U_L)
    dR = np.linalg.norm(s1.U_R - s0.U_R)
    scale = np.linalg.norm(s0.velocity)
    rel = np.hypot(dL, dR) / scale if scale > 0 else np.hypot(dL, dR)
    ph = project_p0(mesh, psi_fn)
    ph = ph - mesh.areas @ ph / mesh.areas.sum()
    return RobustnessReport(float(rel), float(dL), float(dR),
                            float(np.abs(s1.P - s0.P - ph).max()), s0, s1)


# -- comparison with Bernardi-Raugel --------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    compact: ErrorReport
    bernardi_raugel: ErrorReport

    @property
    def ratio_h1(self) -> float:
        return self.bernardi_raugel.h1_u / self.compact.h1_u

    @property
    def ratio_l2(self) -> float:
        return self.bernardi_raugel.l2_u / self.compact.l2_u


def compare_br(n: int, nu: float, stab: Optional[StabConfig] = None,
               scheme: str = "full") -> Comparison:
    case = example51(nu)
    mesh = generate_structured(n)
    d, s = solve_on_mesh(mesh, case.f, nu, stab, scheme)
    compact = compute_errors(mesh, d, s, case, n=n)
    d, s = solve_on_mesh(mesh, case.f, nu, None, "bernardi-raugel")
    return Comparison(compact, compute_errors(mesh, d, s, case, n=n))
