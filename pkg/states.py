"""
Coherent-state construction by three independent routes (series expansion,
generalized displacement exponential, T operator on the canonical state) and
two-parameter Gazeau-Klauder states, all on a truncated Fock space.

Route outputs are renormalised: D(z)|0⟩ and T|z⟩_CCS carry the norm
e^{-|z|²/2} N(|z|²)^{1/2} because the representation is not unitary.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import gammaln, logsumexp

from config import get_settings
from deformation import (
    build_A,
    build_A_dag,
    build_B,
    build_B_dag,
    e_values,
    radius_of_convergence,
)
from errors import (
    DimensionMismatchError,
    DomainError,
    InvalidDimensionError,
    NonInvertibleError,
    TruncationError,
)
from families import RhoFamily, base_log_rho, dual_of, make_family, max_level, rho_log
from fock import FockOperator, FockVector, exponential_action, fidelity

log = logging.getLogger("nlcs.states")

METHODS = ("series", "displacement", "t-operator")
# JSON has no infinity; unbounded quantities are reported as the largest double
UNBOUNDED = float(np.finfo(float).max)

Label = Union[complex, Tuple[float, float]]


@dataclass(frozen=True, eq=False)
class CoherentState:
    family: RhoFamily
    label: Label
    vector: FockVector
    tail_mass: float
    method: str
    log_normalization: float = math.nan
    elapsed: float = 0.0

    @property
    def dim(self) -> int:
        return self.vector.dim

    @property
    def amplitudes(self) -> np.ndarray:
        return self.vector.amps

    @property
    def is_gk(self) -> bool:
        return isinstance(self.label, tuple)

    @property
    def has_eigen_label(self) -> bool:
        """Whether the complex label is still an eigenvalue of A after time evolution."""
        if self.is_gk:
            return False
        return self.elapsed == 0 or _linear_spectrum(self.family, self.dim)

    @property
    def z(self) -> complex:
        if self.is_gk:
            raise AttributeError("GK-labelled state has no complex label")
        return self.label

    def to_dict(self) -> dict:
        out = self.family.to_dict()
        if self.is_gk:
            label = {"J": self.label[0], "gamma": self.label[1]}
        else:
            label = [self.label.real, self.label.imag]
        out.update({
            "label": label,
            "dim": self.dim,
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
            "tail_mass": self.tail_mass if math.isfinite(self.tail_mass) else UNBOUNDED,
            "method": self.method,
        })
        if self.elapsed:
            out["elapsed"] = self.elapsed
        return out


def _linear_spectrum(family: RhoFamily, dim: int) -> bool:
    e = e_values(family, dim)
    return bool(np.all(np.abs(e - np.arange(dim)) <= 1e-10 * np.arange(dim)))


def estimate_tail(probs: np.ndarray) -> float:
    """Probability beyond level N by geometric extrapolation of the last two nonzero levels."""
    nonzero = np.flatnonzero(probs > 0)
    if nonzero.size < 2 or nonzero[-1] != probs.shape[0] - 1:
        return 0.0
    last, prev = probs[nonzero[-1]], probs[nonzero[-2]]
    ratio = last / prev
    if ratio >= 1.0:
        return math.inf
    return float(last * ratio / (1.0 - ratio))


def _accepts(probs: np.ndarray, tolerance: float) -> bool:
    peak = probs.max()
    return (probs[-1] <= 1e-18 * peak
            and probs[-3:].sum() < 1e-16
            and estimate_tail(probs) <= tolerance)


def _dim_cap(family: RhoFamily) -> int:
    cap = get_settings().max_dim
    top = max_level(family)
    return min(cap, top + 1) if top is not None else cap


def _check_fixed_dim(family: RhoFamily, dim: int):
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidDimensionError(f"dim must be an integer >= 2, got {dim!r}")
    top = max_level(family)
    if top is not None and dim > top + 1:
        raise InvalidDimensionError(f"Table family only supports dim <= {top + 1}")


def _check_domain(family: RhoFamily, modulus_sq: float, force: bool, what: str):
    estimate = radius_of_convergence(family)
    if not estimate.admits(modulus_sq):
        message = f"{what} outside the convergence domain of {family.label} (lim e_n = {estimate.value:.6g})"
        if not force:
            raise DomainError(message)
        log.warning(message + " - forced")
        return
    limit = get_settings().disk_limit
    if estimate.is_finite and estimate.value > 0 and modulus_sq > limit ** 2 * estimate.value:
        message = f"{what} beyond {limit} of the disk radius for {family.label}"
        if not force:
            raise DomainError(message)
        log.warning(message + " - forced")


def _series_amplitudes(family: RhoFamily, log_r: float, phases, dim: int):
    """Normalised amplitudes r^n e^{iφ_n}/√ρ(n) and ln N = ln Σ r^{2n}/ρ(n)."""
    levels = np.arange(dim, dtype=float)
    log_mag = levels * log_r - 0.5 * rho_log(family, levels)
    log_norm = float(logsumexp(2 * log_mag))
    amps = np.exp(log_mag - 0.5 * log_norm) * phases(dim)
    return amps, log_norm


def _vacuum(family: RhoFamily, label: Label, dim: Optional[int], method: str) -> CoherentState:
    d = dim if dim is not None else min(get_settings().start_dim, _dim_cap(family))
    return CoherentState(family, label, FockVector.basis(0, d), 0.0, method, 0.0)


def _expand(family: RhoFamily, label: Label, log_r: float, phases, dim: Optional[int], force: bool) -> CoherentState:
    tolerance = get_settings().tail_tolerance
    if dim is not None:
        _check_fixed_dim(family, dim)
        amps, log_norm = _series_amplitudes(family, log_r, phases, dim)
        tail = estimate_tail(np.abs(amps) ** 2)
        if tail > tolerance and not force:
            raise TruncationError(
                f"Tail mass {tail:.3g} beyond level {dim - 1} exceeds {tolerance:.1g} for {family.label}; "
                f"use a larger dim",
                tail_mass=tail, dim=dim,
            )
        return CoherentState(family, label, FockVector(dim, amps), tail, "series", log_norm)

    cap = _dim_cap(family)
    d = min(get_settings().start_dim, cap)
    while True:
        amps, log_norm = _series_amplitudes(family, log_r, phases, d)
        probs = np.abs(amps) ** 2
        if _accepts(probs, tolerance):
            break
        if d >= cap:
            tail = estimate_tail(probs)
            if force:
                log.warning(f"Auto dim hit cap {cap} for {family.label} (tail {tail:.3g}) - forced")
                break
            raise TruncationError(
                f"No dim <= {cap} captures the state of {family.label} (tail {tail:.3g})",
                tail_mass=tail, dim=d,
            )
        d = min(2 * d, cap)
    log.debug(f"Auto dim {d} for {family.label}")
    return CoherentState(family, label, FockVector(d, amps), estimate_tail(np.abs(amps) ** 2), "series", log_norm)


def cs_series(family: RhoFamily, z: complex, dim: Optional[int] = None, force: bool = False) -> CoherentState:
    """|z⟩ ∝ Σ zⁿ/√ρ(n) |n⟩, normalised by direct summation."""
    z = complex(z)
    if z == 0:
        return _vacuum(family, z, dim, "series")
    _check_domain(family, abs(z) ** 2, force, f"|z|={abs(z):.6g}")
    theta = np.angle(z)
    return _expand(family, z, math.log(abs(z)), lambda d: np.exp(1j * theta * np.arange(d)), dim, force)


def _displace(raising: FockOperator, lowering: FockOperator, z: complex) -> np.ndarray:
    generator = raising * z - lowering * z.conjugate()
    return exponential_action(generator, FockVector.basis(0, generator.dim)).amps


def _displacement_route(family: RhoFamily, operators, z: complex, dim: Optional[int], force: bool) -> CoherentState:
    z = complex(z)
    reference = cs_series(family, z, dim, force)
    if z == 0:
        return replace(reference, method="displacement")

    tolerance = get_settings().tail_tolerance
    cap = _dim_cap(family)
    d = reference.dim
    while True:
        raising, lowering = operators(d)
        column = _displace(raising, lowering, z)
        column = column / np.linalg.norm(column)
        # boundary leakage: weight reflected into the top levels by the truncated exponential
        tail = FockVector(d, column).tail_mass()
        if tail <= tolerance or dim is not None or d >= cap:
            break
        d = min(2 * d, cap)

    if tail > tolerance:
        message = f"Displacement leakage {tail:.3g} at dim {d} exceeds {tolerance:.1g} for {family.label}"
        if not force:
            raise TruncationError(message, tail_mass=tail, dim=d)
        log.warning(message + " - forced")

    log_norm = reference.log_normalization
    if d != reference.dim:
        log_norm = _series_amplitudes(family, math.log(abs(z)), lambda k: np.ones(k), d)[1]
    return CoherentState(family, z, FockVector(d, column), tail, "displacement", log_norm)


def cs_displacement(family: RhoFamily, z: complex, dim: Optional[int] = None, force: bool = False) -> CoherentState:
    """D(z)|0⟩ with D(z) = exp(zB† − z*A), renormalised."""
    return _displacement_route(family, lambda d: (build_B_dag(family, d), build_A(family, d)), z, dim, force)


def cs_dual_displacement(family: RhoFamily, z: complex, dim: Optional[int] = None, force: bool = False) -> CoherentState:
    """D′(z)|0⟩ with D′(z) = exp(zA† − z*B); a state of the dual family."""
    return _displacement_route(
        dual_of(family), lambda d: (build_A_dag(family, d), build_B(family, d)), z, dim, force,
    )


@dataclass(frozen=True, eq=False)
class TOperator:
    """Diagonal T = Σ √(n!/ρ(n)) |n⟩⟨n|, held as logarithms of its entries."""

    family: RhoFamily
    dim: int
    log_diagonal: np.ndarray

    @classmethod
    def build(cls, family: RhoFamily, dim: int) -> "TOperator":
        levels = np.arange(dim, dtype=float)
        logs = 0.5 * (gammaln(levels + 1) - base_log_rho(family, levels))
        if family.dual:
            logs = -logs
        logs = np.array(logs, dtype=float)
        logs.setflags(write=False)
        return cls(family, dim, logs)

    @property
    def diagonal(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_diagonal)

    def operator(self) -> FockOperator:
        return FockOperator(self.dim, np.diag(self.diagonal), "diagonal")

    def inverse(self) -> "TOperator":
        bad = np.flatnonzero(~np.isfinite(self.log_diagonal))
        if bad.size:
            raise NonInvertibleError(f"T has a zero diagonal entry at level {int(bad[0])} for {self.family.label}")
        return TOperator(dual_of(self.family), self.dim, -self.log_diagonal)


def t_apply(family: RhoFamily, dim: int, direction: str, state: CoherentState) -> CoherentState:
    """Apply T (forward) or T⁻¹ (inverse) to a state and renormalise.

    On the canonical state, forward gives the family state and inverse its dual.
    """
    if state.dim != dim:
        raise DimensionMismatchError(f"State has dim {state.dim}, T built for {dim}")
    T = TOperator.build(family, dim)
    if direction == "inverse":
        T = T.inverse()
    elif direction != "forward":
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")

    amps = state.amplitudes
    magnitude = np.abs(amps)
    with np.errstate(divide="ignore"):
        log_mag = np.where(magnitude > 0, np.log(np.where(magnitude > 0, magnitude, 1.0)) + T.log_diagonal, -np.inf)
    peak = log_mag.max()
    scaled = np.where(np.isfinite(log_mag), np.exp(log_mag - peak), 0.0)
    phases = np.where(magnitude > 0, amps / np.where(magnitude > 0, magnitude, 1.0), 0.0)
    vector = scaled * phases
    vector = vector / np.linalg.norm(vector)
    return CoherentState(T.family, state.label, FockVector(dim, vector),
                         estimate_tail(np.abs(vector) ** 2), "t-operator", state.log_normalization)


def canonical_state(z: complex, dim: Optional[int] = None, force: bool = False) -> CoherentState:
    return cs_series(make_family("canonical"), z, dim, force)


def gk_phases(family: RhoFamily, gamma: float, dim: int) -> np.ndarray:
    """e^{-i e_n γ}; levels whose e_n overflows carry negligible weight and get phase 1."""
    if gamma == 0:
        return np.ones(dim, dtype=complex)
    e = e_values(family, dim)
    finite = np.isfinite(e)
    return np.where(finite, np.exp(-1j * np.where(finite, e, 0.0) * gamma), 1.0)


def gk_state(family: RhoFamily, J: float, gamma: float, dim: Optional[int] = None, force: bool = False) -> CoherentState:
    """|J, γ⟩ ∝ Σ J^{n/2} e^{-i e_n γ}/√ρ(n) |n⟩ with N(J) = Σ Jⁿ/ρ(n)."""
    J, gamma = float(J), float(gamma)
    if not J >= 0:
        raise DomainError(f"J must be nonnegative, got {J}")
    label = (J, gamma)
    if J == 0:
        return _vacuum(family, label, dim, "series")
    _check_domain(family, J, force, f"J={J:.6g}")
    # log √J rather than ½ log J so that γ = 0 reproduces cs_series(√J) bit for bit
    return _expand(family, label, math.log(math.sqrt(J)), lambda d: gk_phases(family, gamma, d), dim, force)


def evolve(state: CoherentState, t: float) -> CoherentState:
    """exp(−iĤt) with the normal-ordered Ĥ (ħ = ω = 1): amplitude n picks up e^{−i e_n t}."""
    t = float(t)
    if t == 0:
        return state
    amps = state.amplitudes * gk_phases(state.family, t, state.dim)
    label = state.label
    if state.is_gk:
        label = (label[0], label[1] + t)
    elif _linear_spectrum(state.family, state.dim):
        # e_n = n: the evolved state is the coherent state at z e^{-it}
        label = label * complex(math.cos(t), -math.sin(t))
    return replace(state, label=label, vector=FockVector(state.dim, amps), elapsed=state.elapsed + t)


def route_fidelity(state: CoherentState, other: CoherentState) -> float:
    if state.dim != other.dim:
        d = max(state.dim, other.dim)
        return fidelity(_pad(state.vector, d), _pad(other.vector, d))
    return fidelity(state.vector, other.vector)


def _pad(vector: FockVector, dim: int) -> FockVector:
    amps = np.zeros(dim, dtype=complex)
    amps[: vector.dim] = vector.amps
    return FockVector(dim, amps)
