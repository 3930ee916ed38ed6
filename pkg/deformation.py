"""
Nonlinearity engine: f(n), e_n, deformed ladder operators A = a f(n̂),
auxiliary operators B = a / f(n̂), Hamiltonians and the convergence radius,
all derived from ln ρ(n).
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict

import numpy as np

from config import get_settings
from errors import ConstructionError, DomainError, InvalidDimensionError, ParameterError
from families import RhoFamily, base_log_rho, make_family, max_level
from fock import (
    FockOperator,
    commutator,
    diagonal_from_values,
    make_annihilator,
)

log = logging.getLogger("nlcs.deformation")

_EPS = np.finfo(float).eps


def _base_log_e(family: RhoFamily, levels: np.ndarray) -> np.ndarray:
    """ln e_n = ln ρ(n) − ln ρ(n−1) for levels n ≥ 1, dual flag ignored."""
    return base_log_rho(family, levels) - base_log_rho(family, levels - 1)


def _check_level(n, minimum: int):
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise DomainError(f"Level must be an integer >= {minimum}, got {n!r}")
    return int(n)


def f_eval(family: RhoFamily, n: int) -> float:
    """f(n) = √(ρ(n)/(n ρ(n−1))); the reciprocal for a dual family."""
    n = _check_level(n, 1)
    log_e = float(_base_log_e(family, np.asarray(float(n))))
    base = math.exp(0.5 * (log_e - math.log(n)))
    return 1.0 / base if family.dual else base


def e_eval(family: RhoFamily, n: int) -> float:
    """e_n = ρ(n)/ρ(n−1) with e_0 = 0."""
    n = _check_level(n, 0)
    if n == 0:
        return 0.0
    log_e = float(_base_log_e(family, np.asarray(float(n))))
    if family.dual:
        log_e = 2 * math.log(n) - log_e
    return math.exp(log_e)


def f_values(family: RhoFamily, dim: int) -> np.ndarray:
    """f(0..N) with the operator convention f(0) = 1."""
    levels = np.arange(1, dim, dtype=float)
    base = np.exp(0.5 * (_base_log_e(family, levels) - np.log(levels)))
    values = np.concatenate(([1.0], 1.0 / base if family.dual else base))
    return values


def e_values(family: RhoFamily, dim: int) -> np.ndarray:
    levels = np.arange(1, dim, dtype=float)
    log_e = _base_log_e(family, levels)
    if family.dual:
        log_e = 2 * np.log(levels) - log_e
    with np.errstate(over="ignore"):
        return np.concatenate(([0.0], np.exp(log_e)))


@dataclass(frozen=True)
class NonlinearityFn:
    family: RhoFamily

    def __call__(self, n: int) -> float:
        return f_eval(self.family, n)

    def values(self, dim: int) -> np.ndarray:
        return f_values(self.family, dim)


@dataclass(frozen=True)
class SpectrumView:
    family: RhoFamily

    def __call__(self, n: int) -> float:
        return e_eval(self.family, n)

    def values(self, dim: int) -> np.ndarray:
        return e_values(self.family, dim)


def _need_dim(dim: int, minimum: int, family: RhoFamily = None):
    if not isinstance(dim, (int, np.integer)) or dim < minimum:
        raise InvalidDimensionError(f"dim must be an integer >= {minimum}, got {dim!r}")
    top = max_level(family) if family is not None else None
    if top is not None and dim > top + 1:
        raise InvalidDimensionError(f"Table family only supports dim <= {top + 1}")


def _finite_positive(values: np.ndarray, what: str):
    bad = np.flatnonzero(~np.isfinite(values) | (values <= 0))
    if bad.size:
        level = int(bad[0])
        raise ConstructionError(f"{what} is zero or not finite at level {level}: {values[level]}", level=level)


def build_A(family: RhoFamily, dim: int) -> FockOperator:
    """A = a f(n̂); A|n⟩ = √e_n |n−1⟩."""
    _need_dim(dim, 2, family)
    f = f_values(family, dim)
    _finite_positive(f, f"f for {family.label}")
    a = make_annihilator(dim)
    A = a @ diagonal_from_values(f)
    # second factorization f(n̂+1) a; the top row of a is zero so the pad value is irrelevant
    shifted = diagonal_from_values(np.append(f[1:], 1.0)) @ a
    if not np.allclose(A.entries, shifted.entries, rtol=4 * _EPS, atol=0):
        raise ConstructionError(f"a f(n) and f(n+1) a disagree for {family.label}")
    return FockOperator(dim, A.entries, "lowering")


def build_A_dag(family: RhoFamily, dim: int) -> FockOperator:
    return build_A(family, dim).dag


def build_B(family: RhoFamily, dim: int) -> FockOperator:
    """B = a / f(n̂), the partner with [A, B†] = I."""
    _need_dim(dim, 2, family)
    f = f_values(family, dim)
    _finite_positive(f, f"f for {family.label}")
    inverse = 1.0 / f
    _finite_positive(inverse, f"1/f for {family.label}")
    B = make_annihilator(dim) @ diagonal_from_values(inverse)
    return FockOperator(dim, B.entries, "lowering")


def build_B_dag(family: RhoFamily, dim: int) -> FockOperator:
    return build_B(family, dim).dag


def hamiltonian(family: RhoFamily, dim: int) -> FockOperator:
    """Normal-ordered Ĥ = n̂ f²(n̂) = A†A, diagonal with entries e_n."""
    _need_dim(dim, 1, family)
    e = e_values(family, dim)
    if not np.all(np.isfinite(e)):
        level = int(np.flatnonzero(~np.isfinite(e))[0])
        raise ConstructionError(f"e_n overflows at level {level} for {family.label}", level=level)
    return FockOperator(dim, np.diag(e), "diagonal")


def manko_hamiltonian(family: RhoFamily, dim: int) -> FockOperator:
    """½(AA† + A†A); the top level carries the truncation artifact."""
    _need_dim(dim, 2, family)
    A = build_A(family, dim)
    H = 0.5 * (A @ A.dag + A.dag @ A)
    return FockOperator(dim, H.entries, "diagonal")


def su11_generators(kappa: float, dim: int) -> Dict[str, FockOperator]:
    """L− = A/√2, L+ = A†/√2, L₁₂ = ½[A, A†] for the Barut-Girardello family."""
    A = build_A(make_family("bg", kappa=kappa), dim)
    return {
        "L_minus": A * (1 / math.sqrt(2)),
        "L_plus": A.dag * (1 / math.sqrt(2)),
        "L_12": commutator(A, A.dag) * 0.5,
    }


@dataclass(frozen=True)
class RadiusEstimate:
    value: float
    status: str  # converged | divergent | indeterminate

    @property
    def is_finite(self) -> bool:
        return self.status == "converged"

    def admits(self, modulus_squared: float) -> bool:
        """Whether |z|² (or J) lies strictly inside the convergence domain."""
        if self.status == "divergent":
            return True
        if self.status == "indeterminate":
            return True
        return modulus_squared < self.value


def radius_of_convergence(family: RhoFamily, divergence_threshold: float = None) -> RadiusEstimate:
    """Estimate lim n f(n)² = lim e_n from e at n = 2^4..2^17 with Richardson extrapolation."""
    threshold = get_settings().divergence_threshold if divergence_threshold is None else divergence_threshold
    if not threshold > 0:
        raise ParameterError(f"divergence_threshold must be positive, got {threshold!r}")
    return _radius(family, float(threshold))


@lru_cache(maxsize=256)
def _radius(family: RhoFamily, threshold: float) -> RadiusEstimate:
    if family.table is not None:
        # a finite table always sums; nothing to extrapolate
        return RadiusEstimate(math.inf, "divergent")

    levels = 2.0 ** np.arange(4, 18)
    log_e = _base_log_e(family, levels)
    if family.dual:
        log_e = 2 * np.log(levels) - log_e

    if log_e[-1] > math.log(threshold):
        return RadiusEstimate(math.inf, "divergent")

    e = np.exp(log_e)
    extrapolated = 2 * e[1:] - e[:-1]
    tail = extrapolated[-3:]
    scale = max(1.0, abs(float(extrapolated[-1])))
    if float(tail.max() - tail.min()) <= 1e-6 * scale:
        return RadiusEstimate(max(float(extrapolated[-1]), 0.0), "converged")

    growth = (log_e[-1] - log_e[-2]) / math.log(2)
    if np.all(np.diff(e[-4:]) > 0) and growth > 0.05:
        return RadiusEstimate(math.inf, "divergent")

    log.warning(f"Radius of convergence for {family.label} is indeterminate (last e_n={e[-1]:.6g})")
    return RadiusEstimate(math.nan, "indeterminate")
