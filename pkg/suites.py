"""
Named verification suites. A suite expands into independent checks that run
concurrently in a thread pool; reports come back sorted by check_id.
"""
import asyncio
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from analysis import (
    UNBOUNDED,
    VerificationReport,
    action_identity,
    continuity_check,
    dual_agreement,
    eigen_residual,
    format_z,
    h4_check,
    hamiltonian_check,
    inverse_pair_check,
    ladder_check,
    make_report,
    mandel_report,
    manko_contrast,
    moment_check,
    poisson_check,
    route_agreement,
    stability_grid,
    su11_check,
)
from config import get_settings
from deformation import radius_of_convergence
from errors import NLCSError, UsageError
from families import RhoFamily, dual_of
from states import cs_series

log = logging.getLogger("nlcs.suites")

SUITES = ("eigen", "routes", "dual", "algebra", "gk", "moments", "stats", "all")

PLANE_GRID: Tuple[complex, ...] = (0.25, 0.5 + 0.5j, 1.0, 2.0)
DISK_GRID: Tuple[complex, ...] = (0.1, 0.3j, 0.5, 0.8)
POISSON_LABELS = (0.5, 1.0, 2.0)
ALGEBRA_DIM = 50


@dataclass(frozen=True)
class Check:
    check_id: str
    family: RhoFamily
    run: Callable[[], VerificationReport]
    tolerance: float
    inputs: dict


def label_grid(family: RhoFamily) -> Tuple[complex, ...]:
    """Whole-plane grid, or the disk grid scaled to the convergence radius."""
    estimate = radius_of_convergence(family)
    if not estimate.is_finite:
        return PLANE_GRID
    if estimate.value == 0:
        return ()
    scale = math.sqrt(estimate.value)
    return tuple(complex(z) * scale for z in DISK_GRID)


def _no_states(check_id: str, family: RhoFamily) -> Check:
    def run():
        return make_report(check_id, family, {}, UNBOUNDED, 0.0,
                           f"{family.label} has zero convergence radius", inconclusive=True)
    return Check(check_id, family, run, 0.0, {})


def _eigen(family: RhoFamily) -> List[Check]:
    tol = get_settings().eigen_tol
    grid = label_grid(family)
    if not grid:
        return [_no_states("eigen.residual", family)]
    return [
        Check(f"eigen.residual[z={format_z(z)}]", family,
              lambda z=z: eigen_residual(cs_series(family, z)), tol, {"z": [z.real, z.imag]})
        for z in map(complex, grid)
    ]


def _routes(family: RhoFamily) -> List[Check]:
    settings = get_settings()
    grid = label_grid(family)
    if not grid:
        return [_no_states("routes.domain", family)]
    checks = []
    for z in map(complex, grid):
        inputs = {"z": [z.real, z.imag]}
        checks.append(Check(f"routes.displacement[z={format_z(z)}]", family,
                            lambda z=z: route_agreement(family, z, "displacement"),
                            settings.displacement_tol, inputs))
        checks.append(Check(f"routes.t-operator[z={format_z(z)}]", family,
                            lambda z=z: route_agreement(family, z, "t-operator"),
                            settings.t_route_tol, inputs))
        checks.append(Check(f"routes.continuity[z={format_z(z)}]", family,
                            lambda z=z: continuity_check(family, z),
                            settings.continuity_bound, inputs))
    return checks


def _dual(family: RhoFamily) -> List[Check]:
    settings = get_settings()
    dual = dual_of(family)
    checks = [Check("dual.inverse_pair", family, lambda: inverse_pair_check(family),
                    settings.algebra_tol, {"dim": ALGEBRA_DIM})]
    grid = label_grid(dual)
    if not grid:
        return checks + [_no_states("dual.domain", dual)]
    for z in map(complex, grid):
        inputs = {"z": [z.real, z.imag]}
        checks.append(Check(f"dual.displacement[z={format_z(z)}]", dual,
                            lambda z=z: dual_agreement(family, z, "displacement"),
                            settings.displacement_tol, inputs))
        checks.append(Check(f"dual.t-inverse[z={format_z(z)}]", dual,
                            lambda z=z: dual_agreement(family, z, "t-inverse"),
                            settings.t_route_tol, inputs))
    return checks


def _algebra(family: RhoFamily) -> List[Check]:
    tol = get_settings().algebra_tol
    inputs = {"dim": ALGEBRA_DIM}
    checks = [
        Check("algebra.h4", family, lambda: h4_check(family, ALGEBRA_DIM), tol, inputs),
        Check("algebra.ladder", family, lambda: ladder_check(family, ALGEBRA_DIM), tol, inputs),
        Check("algebra.hamiltonian", family, lambda: hamiltonian_check(family, ALGEBRA_DIM), tol, inputs),
    ]
    if family.id in ("bg", "gp") and not family.dual:
        kappa = family.param("kappa")
        checks.append(Check("algebra.su11", family, lambda: su11_check(kappa, ALGEBRA_DIM), tol,
                            {"kappa": kappa, "dim": ALGEBRA_DIM}))
    return checks


def _gk(family: RhoFamily) -> List[Check]:
    settings = get_settings()
    estimate = radius_of_convergence(family)
    if estimate.is_finite and estimate.value == 0:
        return [_no_states("gk.domain", family)]
    j_top = 1.0 if not estimate.is_finite else 0.5 * estimate.value
    checks = [Check("gk.temporal_grid", family, lambda: stability_grid(family), settings.gk_tol,
                    {"triples": settings.grid_size, "seed": settings.seed})]
    for J in (0.25 * j_top, 0.5 * j_top, j_top):
        checks.append(Check(f"gk.action[normal,J={J:g}]", family,
                            lambda J=J: action_identity(family, J), settings.action_tol, {"J": J}))
    if not estimate.is_finite:
        checks.append(Check("gk.manko_contrast[J=0.5]", family, lambda: manko_contrast(family, 0.5),
                            settings.action_tol, {"J": 0.5}))
    return checks


def _moments(family: RhoFamily) -> List[Check]:
    return [Check("moments.weight", family, lambda: moment_check(family), get_settings().quad_tol, {})]


def _stats(family: RhoFamily) -> List[Check]:
    tol = get_settings().mandel_tol
    grid = label_grid(family)
    if not grid:
        return [_no_states("stats.domain", family)]
    checks = [
        Check(f"stats.mandel[z={format_z(z)}]", family,
              lambda z=z: mandel_report(cs_series(family, z)), tol, {"z": [z.real, z.imag]})
        for z in map(complex, grid)
    ]
    if family.id == "canonical":
        checks += [
            Check(f"stats.poisson[z={format_z(z)}]", family, lambda z=z: poisson_check(z), tol, {"z": [z, 0.0]})
            for z in POISSON_LABELS
        ]
    return checks


_BUILDERS = {
    "eigen": _eigen,
    "routes": _routes,
    "dual": _dual,
    "algebra": _algebra,
    "gk": _gk,
    "moments": _moments,
    "stats": _stats,
}


def build_checks(suite: str, family: RhoFamily) -> List[Check]:
    if suite not in SUITES:
        raise UsageError(f"Unknown suite '{suite}'; choose from {', '.join(SUITES)}")
    names = list(_BUILDERS) if suite == "all" else [suite]
    checks = []
    for name in names:
        checks.extend(_BUILDERS[name](family))
    return checks


def _guarded(check: Check) -> VerificationReport:
    try:
        return check.run()
    except NLCSError as e:
        log.warning(f"{check.check_id} on {check.family.label} failed: {e}")
        return make_report(check.check_id, check.family, check.inputs, UNBOUNDED, check.tolerance,
                           f"{type(e).__name__}: {e}")


async def run_checks(checks: List[Check], max_workers: Optional[int] = None) -> List[VerificationReport]:
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        reports = await asyncio.gather(*(loop.run_in_executor(pool, _guarded, check) for check in checks))
    return sorted(reports, key=lambda r: r.check_id)


def run_suite(suite: str, family: RhoFamily, max_workers: Optional[int] = None) -> List[VerificationReport]:
    checks = build_checks(suite, family)
    log.info(f"Running suite {suite} on {family.label}: {len(checks)} checks")
    reports = asyncio.run(run_checks(checks, max_workers))
    failed = [r.check_id for r in reports if not r.passed and not r.inconclusive]
    log.info(f"Suite {suite} complete: {len(reports) - len(failed)}/{len(reports)} passed or inconclusive")
    return reports


def suite_passed(reports: List[VerificationReport]) -> bool:
    """Inconclusive reports do not count as failures."""
    return all(r.passed or r.inconclusive for r in reports)
