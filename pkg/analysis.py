"""
Verification checks. Each check returns an immutable VerificationReport with
the measured residual, the tolerance it was held to and free-text notes.
Library errors propagate; the suite runner turns them into failed reports.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import get_settings
from deformation import (
    build_A,
    build_B,
    e_values,
    f_values,
    hamiltonian,
    manko_hamiltonian,
    radius_of_convergence,
    su11_generators,
)
from errors import DegenerateStatisticsError, DomainError, UnsupportedLabelError
from families import RhoFamily, dual_of, make_family
from fock import (
    FockOperator,
    commutator,
    inner_product,
    make_number,
    norm,
    trust_band,
)
from moments import WeightSpec, builtin_weight, moment_errors
from states import (
    UNBOUNDED,
    CoherentState,
    TOperator,
    canonical_state,
    cs_displacement,
    cs_dual_displacement,
    cs_series,
    evolve,
    gk_state,
    route_fidelity,
    t_apply,
)

log = logging.getLogger("nlcs.analysis")


@dataclass(frozen=True)
class VerificationReport:
    check_id: str
    family: str
    params: dict
    inputs: dict
    residual: float
    tolerance: float
    passed: bool
    notes: str = ""
    inconclusive: bool = False

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "family": self.family,
            "params": self.params,
            "inputs": self.inputs,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "notes": self.notes,
            "inconclusive": self.inconclusive,
        }


def make_report(check_id: str, family: RhoFamily, inputs: dict, residual: float, tolerance: float,
                notes: str = "", inconclusive: bool = False) -> VerificationReport:
    residual = float(residual)
    if not math.isfinite(residual):
        notes = f"{notes}; residual {residual}" if notes else f"residual {residual}"
        residual = UNBOUNDED
    residual = abs(residual)
    description = family.to_dict()
    return VerificationReport(
        check_id=check_id,
        family=description["family"],
        params=description["params"],
        inputs=inputs,
        residual=residual,
        tolerance=float(tolerance),
        passed=residual <= tolerance,
        notes=notes,
        inconclusive=inconclusive,
    )


def _label_inputs(state: CoherentState) -> dict:
    if state.is_gk:
        return {"J": state.label[0], "gamma": state.label[1], "dim": state.dim}
    return {"z": [state.label.real, state.label.imag], "dim": state.dim}


def _mixed_error(actual, expected) -> float:
    actual, expected = np.asarray(actual), np.asarray(expected)
    if actual.size == 0:
        return 0.0
    return float(np.max(np.abs(actual - expected) / np.maximum(1.0, np.abs(expected))))


def _commutator_residual(X: FockOperator, Y: FockOperator, expected: FockOperator, band: int) -> float:
    """max |[X,Y] − E| on the band, entrywise relative to |X||Y| + |Y||X|."""
    diff = np.abs(commutator(X, Y).entries - expected.entries)[:band, :band]
    ax, ay = np.abs(X.entries), np.abs(Y.entries)
    scale = (ax @ ay + ay @ ax)[:band, :band]
    relative = np.divide(diff, scale, out=diff.copy(), where=scale > 0)
    return float(relative.max()) if relative.size else 0.0


def _identity_residual(X: FockOperator, Y: FockOperator, band: int) -> float:
    """max |[X,Y] − I| on the band; entries of order one, so the error is absolute."""
    diff = np.abs(commutator(X, Y).entries - np.eye(X.dim))[:band, :band]
    return float(diff.max()) if diff.size else 0.0


def expectation(state, op: FockOperator) -> complex:
    """⟨ψ|op|ψ⟩ for a CoherentState or FockVector."""
    vector = state.vector if isinstance(state, CoherentState) else state
    return inner_product(vector, op @ vector)


def eigen_residual(state: CoherentState, tolerance: Optional[float] = None) -> VerificationReport:
    """‖A|z⟩ − z|z⟩‖ with A of the state's own family."""
    if state.is_gk:
        raise UnsupportedLabelError("eigen_residual needs a z-labelled state, got a GK state")
    if not state.has_eigen_label:
        raise UnsupportedLabelError(
            f"State of {state.family.label} evolved for t={state.elapsed:g} is no longer an eigenstate of A")
    tolerance = get_settings().eigen_tol if tolerance is None else tolerance
    A = build_A(state.family, state.dim)
    residual = norm(A @ state.vector - state.z * state.vector)
    return make_report(f"eigen.residual[z={format_z(state.z)}]", state.family, _label_inputs(state),
                       residual, tolerance, f"tail {state.tail_mass:.3g}")


def h4_check(family: RhoFamily, dim: int = 50, tolerance: Optional[float] = None) -> VerificationReport:
    """Both Heisenberg-Weyl sets {A, B†, B†A, I} and {B, A†, A†B, I} plus B†A = n̂ = A†B."""
    tolerance = get_settings().algebra_tol if tolerance is None else tolerance
    band = trust_band(dim)
    A, B = build_A(family, dim), build_B(family, dim)
    A_dag, B_dag = A.dag, B.dag
    N_ab = B_dag @ A
    N_ba = A_dag @ B

    residuals = {
        "[A,B+]=I": _identity_residual(A, B_dag, band),
        "[A,B+A]=A": _commutator_residual(A, N_ab, A, band),
        "[B+,B+A]=-B+": _commutator_residual(B_dag, N_ab, -B_dag, band),
        "[B,A+]=I": _identity_residual(B, A_dag, band),
        "[B,A+B]=B": _commutator_residual(B, N_ba, B, band),
        "[A+,A+B]=-A+": _commutator_residual(A_dag, N_ba, -A_dag, band),
    }
    levels = np.arange(dim - 1)
    residuals["B+A=n"] = _mixed_error(N_ab.diagonal[: dim - 1].real, levels)
    residuals["A+B=n"] = _mixed_error(N_ba.diagonal[: dim - 1].real, levels)
    off_diagonal = max(np.abs(N_ab.entries - np.diag(N_ab.diagonal)).max(),
                       np.abs(N_ba.entries - np.diag(N_ba.diagonal)).max())
    residuals["offdiag"] = float(off_diagonal)

    worst = max(residuals, key=residuals.get)
    return make_report("algebra.h4", family, {"dim": dim, "band": band},
                       residuals[worst], tolerance, f"worst relation {worst}")


def ladder_check(family: RhoFamily, dim: int = 50, tolerance: Optional[float] = None) -> VerificationReport:
    """[A, n̂] = A, [A†, n̂] = −A†, A|n⟩ = √e_n|n−1⟩ and A†|n⟩ = √e_{n+1}|n+1⟩."""
    tolerance = get_settings().algebra_tol if tolerance is None else tolerance
    band = trust_band(dim)
    A = build_A(family, dim)
    N = make_number(dim)
    root_e = np.sqrt(e_values(family, dim))
    residuals = {
        "[A,n]=A": _commutator_residual(A, N, A, band),
        "[A+,n]=-A+": _commutator_residual(A.dag, N, -A.dag, band),
        "A|n>": _mixed_error(np.diag(A.entries, 1).real, root_e[1:]),
        "A+|n>": _mixed_error(np.diag(A.dag.entries, -1).real, root_e[1:]),
    }
    worst = max(residuals, key=residuals.get)
    return make_report("algebra.ladder", family, {"dim": dim, "band": band},
                       residuals[worst], tolerance, f"worst relation {worst}")


def hamiltonian_check(family: RhoFamily, dim: int = 50, tolerance: Optional[float] = None) -> VerificationReport:
    """Ĥ = A†A on levels 0..N−1, [A, A†] = e_{n+1} − e_n on the band, Ĥ_dual = n²/e_n."""
    tolerance = get_settings().algebra_tol if tolerance is None else tolerance
    band = trust_band(dim)
    A = build_A(family, dim)
    H = hamiltonian(family, dim)
    e = e_values(family, dim)
    expected_gap = np.diag(np.append(np.diff(e), 0.0))

    levels = np.arange(1, dim)
    dual_diag = hamiltonian(dual_of(family), dim).diagonal.real
    residuals = {
        "H=A+A": _mixed_error(H.diagonal[: dim - 1].real, (A.dag @ A).diagonal[: dim - 1].real),
        "[A,A+]": _commutator_residual(A, A.dag, FockOperator(dim, expected_gap), band),
        "H_dual": _mixed_error(dual_diag[1:], levels.astype(float) ** 2 / e[1:]),
    }
    worst = max(residuals, key=residuals.get)
    return make_report("algebra.hamiltonian", family, {"dim": dim, "band": band},
                       residuals[worst], tolerance, f"worst relation {worst}")


def su11_check(kappa: float, dim: int = 50, tolerance: Optional[float] = None) -> VerificationReport:
    """Barut-Girardello and Gilmore-Perelomov ladder actions and su(1,1) commutators."""
    tolerance = get_settings().algebra_tol if tolerance is None else tolerance
    band = trust_band(dim)
    bg = make_family("bg", kappa=kappa)
    gp = make_family("gp", kappa=kappa)
    A, B = build_A(bg, dim), build_B(bg, dim)
    A_gp = build_A(gp, dim)
    n = np.arange(dim, dtype=float)
    k2 = 2 * kappa

    gp_gap = (k2 - 1) / ((n + k2) * (n + k2 - 1))
    generators = su11_generators(kappa, dim)
    residuals = {
        "A|n>": _mixed_error(np.diag(A.entries, 1).real, np.sqrt(n[1:] * (n[1:] + k2 - 1))),
        "A+|n>": _mixed_error(np.diag(A.dag.entries, -1).real, np.sqrt((n[:-1] + k2) * (n[:-1] + 1))),
        "[A,A+]=2(n+k)": _commutator_residual(A, A.dag, FockOperator(dim, np.diag(2 * (n + kappa))), band),
        "B|n>": _mixed_error(np.diag(B.entries, 1).real, np.sqrt(n[1:] / (n[1:] + k2 - 1))),
        "B+|n>": _mixed_error(np.diag(B.dag.entries, -1).real, np.sqrt((n[:-1] + 1) / (n[:-1] + k2))),
        "[B,B+]": _commutator_residual(B, B.dag, FockOperator(dim, np.diag(gp_gap)), band),
        "A_gp=B_bg": _mixed_error(A_gp.entries, B.entries),
        "[L-,L+]=L12": _commutator_residual(generators["L_minus"], generators["L_plus"], generators["L_12"], band),
        "[A,B+]=I": _identity_residual(A, B.dag, band),
        "[B,A+]=I": _identity_residual(B, A.dag, band),
    }
    worst = max(residuals, key=residuals.get)
    notes = (f"worst relation {worst}; [A,A+] diagonal asserted as 2(n+kappa), "
             f"the value (n+kappa) is short by a factor 2")
    return make_report("algebra.su11", bg, {"kappa": kappa, "dim": dim, "band": band},
                       residuals[worst], tolerance, notes)


def _energy(state: CoherentState, which: str) -> float:
    if which == "normal":
        H = hamiltonian(state.family, state.dim)
    elif which == "manko":
        H = manko_hamiltonian(state.family, state.dim)
    else:
        raise ValueError(f"hamiltonian must be 'normal' or 'manko', got {which!r}")
    return expectation(state, H).real


def action_identity(family: RhoFamily, J: float, gamma: float = 0.0, dim: Optional[int] = None,
                    which: str = "normal", tolerance: Optional[float] = None) -> VerificationReport:
    """|⟨J,γ|Ĥ|J,γ⟩ − J| with the normal-ordered (default) or Man'ko Hamiltonian."""
    tolerance = get_settings().action_tol if tolerance is None else tolerance
    state = gk_state(family, J, gamma, dim)
    energy = _energy(state, which)
    return make_report(f"gk.action[{which},J={J:g}]", family, _label_inputs(state),
                       energy - J, tolerance, f"<H>={energy:.12g}")


def manko_contrast(family: RhoFamily, J: float = 0.5, gamma: float = 0.0, dim: Optional[int] = None,
                   tolerance: Optional[float] = None) -> VerificationReport:
    """The normal-ordered Ĥ satisfies the action identity while the Man'ko Ĥ misses it by at least the gap."""
    settings = get_settings()
    tolerance = settings.action_tol if tolerance is None else tolerance
    if radius_of_convergence(family).is_finite:
        raise DomainError(f"Contrast check needs a whole-plane family, got {family.label}")
    state = gk_state(family, J, gamma, dim)
    normal = abs(_energy(state, "normal") - J)
    manko = abs(_energy(state, "manko") - J)
    residual = max(normal, max(0.0, settings.manko_gap - manko))
    return make_report(f"gk.manko_contrast[J={J:g}]", family, _label_inputs(state), residual, tolerance,
                       f"normal-ordered {normal:.3g}, Manko {manko:.3g} (gap {settings.manko_gap:g})")


def temporal_stability(family: RhoFamily, J: float, gamma: float, t: float, dim: Optional[int] = None,
                       tolerance: Optional[float] = None) -> VerificationReport:
    """‖exp(−iĤt)|J,γ⟩ − |J,γ+t⟩‖."""
    tolerance = get_settings().gk_tol if tolerance is None else tolerance
    residual = _stability_residual(family, J, gamma, t, dim)
    return make_report(f"gk.temporal[J={J:g},gamma={gamma:g},t={t:g}]", family,
                       {"J": J, "gamma": gamma, "t": t}, residual, tolerance)


def _stability_residual(family, J, gamma, t, dim) -> float:
    start = gk_state(family, J, gamma, dim)
    target = gk_state(family, J, gamma + t, start.dim, force=True)
    return norm(evolve(start, t).vector - target.vector)


def stability_grid(family: RhoFamily, size: Optional[int] = None, seed: Optional[int] = None,
                   j_max: Optional[float] = None, tolerance: Optional[float] = None) -> VerificationReport:
    """Worst temporal-stability residual over seeded random (J, γ, t) triples."""
    settings = get_settings()
    size = settings.grid_size if size is None else size
    seed = settings.seed if seed is None else seed
    tolerance = settings.gk_tol if tolerance is None else tolerance
    if j_max is None:
        j_max = _default_j_max(family)

    rng = np.random.default_rng(seed)
    worst, worst_triple = 0.0, None
    for J, gamma, t in zip(rng.uniform(0, j_max, size), rng.uniform(-np.pi, np.pi, size),
                           rng.uniform(-np.pi, np.pi, size)):
        residual = _stability_residual(family, float(J), float(gamma), float(t), None)
        if residual >= worst:
            worst, worst_triple = residual, (float(J), float(gamma), float(t))
    notes = f"worst at (J, gamma, t) = {worst_triple}" if worst_triple else ""
    return make_report("gk.temporal_grid", family, {"triples": size, "seed": seed, "J_max": j_max},
                       worst, tolerance, notes)


@dataclass(frozen=True)
class PhotonStatistics:
    mean: float
    variance: float
    q: float
    note: str = ""


def photon_statistics(state) -> PhotonStatistics:
    """Mean, two-pass variance and Mandel Q from the level probabilities."""
    vector = state.vector if isinstance(state, CoherentState) else state
    probs = vector.probabilities / vector.probabilities.sum()
    n = np.arange(vector.dim, dtype=float)
    mean = float(np.dot(n, probs))
    if mean == 0.0:
        return PhotonStatistics(0.0, 0.0, 0.0, "vacuum: Q is 0/0, reported as 0")
    variance = float(np.dot((n - mean) ** 2, probs))
    if mean < np.finfo(float).tiny:
        raise DegenerateStatisticsError(f"Mean occupation {mean:.3g} underflows; Q is not resolvable")
    return PhotonStatistics(mean, variance, variance / mean - 1.0)


def mandel_q(state) -> float:
    return photon_statistics(state).q


def mandel_report(state: CoherentState, tolerance: Optional[float] = None) -> VerificationReport:
    """Q by direct summation against Q from ⟨n̂⟩ and ⟨n̂²⟩ operator expectations."""
    tolerance = get_settings().mandel_tol if tolerance is None else tolerance
    stats = photon_statistics(state)
    N = make_number(state.dim)
    mean = expectation(state, N).real
    if mean == 0.0:
        q_op = 0.0
    else:
        q_op = (expectation(state, N @ N).real - mean ** 2) / mean - 1.0
    residual = abs(stats.q - q_op) / max(1.0, abs(stats.q))
    notes = f"Q={stats.q:.12g}, <n>={stats.mean:.12g}"
    if stats.note:
        notes += f"; {stats.note}"
    return make_report(f"stats.mandel[{_state_key(state)}]", state.family, _label_inputs(state),
                       residual, tolerance, notes)


def poisson_check(z: complex, tolerance: Optional[float] = None) -> VerificationReport:
    """Canonical coherent states are Poissonian: Q = 0."""
    tolerance = get_settings().mandel_tol if tolerance is None else tolerance
    state = canonical_state(z)
    stats = photon_statistics(state)
    return make_report(f"stats.poisson[z={format_z(state.z)}]", state.family, _label_inputs(state),
                       stats.q, tolerance, f"<n>={stats.mean:.12g}")


def moment_check(family: RhoFamily, weight: Optional[WeightSpec] = None, n_max: int = 15,
                 quad_tol: Optional[float] = None) -> VerificationReport:
    """max_n |∫ xⁿ W̃(x) dx − ρ(n)| / ρ(n) for n = 0..n_max."""
    quad_tol = get_settings().quad_tol if quad_tol is None else quad_tol
    weight = weight or builtin_weight(family)
    inputs = {"n_max": n_max}
    if weight is None:
        return make_report("moments.weight", family, inputs, UNBOUNDED, quad_tol,
                           "no weight function known for this family", inconclusive=True)
    inputs["weight"] = weight.description
    bad = weight.negative_at()
    if bad is not None:
        return make_report("moments.weight", family, inputs, UNBOUNDED, quad_tol,
                           f"weight is negative at x={bad:g}")

    results = moment_errors(family, weight, n_max, quad_tol)
    worst = max(results, key=lambda r: r.relative_error)
    unconverged = [r.n for r in results if not r.converged]
    notes = f"worst at n={worst.n}: {worst.value:.15g} vs {worst.expected:.15g}"
    if unconverged:
        notes += f"; quadrature did not converge for n={unconverged}"
    return make_report("moments.weight", family, inputs, worst.relative_error, quad_tol, notes,
                       inconclusive=bool(unconverged))


def continuity_check(family: RhoFamily, z: complex, delta: float = 1e-3,
                     bound: Optional[float] = None) -> VerificationReport:
    """Lipschitz estimate ‖|z⟩ − |z+δ⟩‖ / δ, bounded by the configured constant."""
    bound = get_settings().continuity_bound if bound is None else bound
    state = cs_series(family, z)
    nearby = cs_series(family, complex(z) + delta, state.dim, force=True)
    constant = norm(state.vector - nearby.vector) / delta
    return make_report(f"routes.continuity[z={format_z(state.z)}]", family, _label_inputs(state),
                       constant, bound, f"delta={delta:g}")


def route_agreement(family: RhoFamily, z: complex, route: str,
                    tolerance: Optional[float] = None) -> VerificationReport:
    """1 − fidelity between the series state and the displacement or T-operator route."""
    settings = get_settings()
    series = cs_series(family, z)
    if route == "displacement":
        tolerance = settings.displacement_tol if tolerance is None else tolerance
        other = cs_displacement(family, z)
    elif route == "t-operator":
        tolerance = settings.t_route_tol if tolerance is None else tolerance
        other = t_apply(family, series.dim, "forward", canonical_state(z, series.dim, force=True))
    else:
        raise ValueError(f"route must be 'displacement' or 't-operator', got {route!r}")
    fid = route_fidelity(series, other)
    return make_report(f"routes.{route}[z={format_z(series.z)}]", family,
                       {**_label_inputs(series), "route_dim": other.dim}, 1.0 - fid, tolerance,
                       f"fidelity {fid:.15f}")


def dual_agreement(family: RhoFamily, z: complex, route: str = "displacement",
                   tolerance: Optional[float] = None) -> VerificationReport:
    """Dual states by D′(z)|0⟩ or T⁻¹|z⟩_CCS against the series of the dual family."""
    settings = get_settings()
    dual = dual_of(family)
    series = cs_series(dual, z)
    if route == "displacement":
        tolerance = settings.displacement_tol if tolerance is None else tolerance
        other = cs_dual_displacement(family, z)
    elif route == "t-inverse":
        tolerance = settings.t_route_tol if tolerance is None else tolerance
        other = t_apply(family, series.dim, "inverse", canonical_state(z, series.dim, force=True))
    else:
        raise ValueError(f"route must be 'displacement' or 't-inverse', got {route!r}")
    fid = route_fidelity(series, other)
    return make_report(f"dual.{route}[z={format_z(series.z)}]", dual,
                       {**_label_inputs(series), "route_dim": other.dim}, 1.0 - fid, tolerance,
                       f"fidelity {fid:.15f}")


def inverse_pair_check(family: RhoFamily, dim: int = 50, tolerance: Optional[float] = None) -> VerificationReport:
    """f·f_dual = 1 and T(F)·T(dual F) = I, level by level."""
    tolerance = get_settings().algebra_tol if tolerance is None else tolerance
    product_f = f_values(family, dim)[1:] * f_values(dual_of(family), dim)[1:]
    T = TOperator.build(family, dim)
    T_dual = TOperator.build(dual_of(family), dim)
    t, t_dual = T.diagonal, T_dual.diagonal
    # entries outside the normal double range have no representable partner
    tiny = np.finfo(float).tiny
    usable = (t >= tiny) & (t_dual >= tiny) & np.isfinite(t) & np.isfinite(t_dual)
    product_t = t[usable] * t_dual[usable]
    residual = max(_mixed_error(product_f, 1.0), _mixed_error(product_t, 1.0))
    notes = f"{dim - int(usable.sum())} levels outside double range" if not usable.all() else ""
    return make_report("dual.inverse_pair", family, {"dim": dim, "levels": int(usable.sum())}, residual, tolerance,
                       notes)


def format_z(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:g}"
    return f"{z.real:g}{z.imag:+g}i"


def _state_key(state: CoherentState) -> str:
    if state.is_gk:
        return f"J={state.label[0]:g},gamma={state.label[1]:g}"
    return f"z={format_z(state.z)}"


def _default_j_max(family: RhoFamily) -> float:
    """Half the convergence radius for disk-like families, 1 on the whole plane."""
    estimate = radius_of_convergence(family)
    if not estimate.is_finite:
        return 1.0
    if estimate.value == 0:
        raise DomainError(f"{family.label} has zero convergence radius; no GK states exist")
    return 0.5 * estimate.value
