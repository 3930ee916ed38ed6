"""
Weight functions W̃(x) on [0, R] and adaptive quadrature of their moments
∫ xⁿ W̃(x) dx, compared against ρ(n) of the family.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.integrate import quad

from errors import ParameterError
from families import RhoFamily, rho_log

log = logging.getLogger("nlcs.moments")

DECAY_CLASSES = ("exponential", "compact")
MAX_MOMENT = 20


@dataclass(frozen=True)
class WeightSpec:
    description: str
    support: float  # R, may be math.inf
    evaluator: Callable[[float], float]
    decay: str = "compact"

    def __post_init__(self):
        if self.decay not in DECAY_CLASSES:
            raise ParameterError(f"Unknown decay class '{self.decay}'")
        if not self.support > 0:
            raise ParameterError(f"Weight support must be positive, got {self.support}")
        if self.decay == "compact" and not math.isfinite(self.support):
            raise ParameterError("A compact weight needs a finite support")

    def __call__(self, x: float) -> float:
        return self.evaluator(x)

    def negative_at(self, samples: int = 257) -> Optional[float]:
        """First sample point where W̃ < 0, or None."""
        top = self.support if math.isfinite(self.support) else 60.0
        for x in np.linspace(0.0, top, samples):
            if self.evaluator(float(x)) < 0:
                return float(x)
        return None


@dataclass(frozen=True)
class MomentResult:
    n: int
    value: float
    expected: float
    relative_error: float
    converged: bool
    message: str = ""


BUILTIN_WEIGHTS = {
    "canonical": WeightSpec("exp(-x) on [0, inf)", math.inf, lambda x: math.exp(-x), "exponential"),
    "kps-da": WeightSpec("2x on [0, 1]", 1.0, lambda x: 2.0 * x, "compact"),
    "kps-db": WeightSpec("6x(1-x) on [0, 1]", 1.0, lambda x: 6.0 * x * (1.0 - x), "compact"),
}


def builtin_weight(family: RhoFamily) -> Optional[WeightSpec]:
    if family.dual or family.table is not None:
        return None
    return BUILTIN_WEIGHTS.get(family.id)


def _integrate(integrand, lower: float, upper: float, epsrel: float, points=None, epsabs: float = 0.0):
    kwargs = {"epsabs": epsabs, "epsrel": epsrel, "limit": 200, "full_output": 1}
    if points:
        kwargs["points"] = points
    out = quad(integrand, lower, upper, **kwargs)
    # a fourth element is scipy's warning message
    message = out[3] if len(out) > 3 else ""
    return out[0], message


def integrate_moment(weight: WeightSpec, n: int, quad_tol: float) -> tuple:
    """(∫ xⁿ W̃ dx, warning message or "")."""
    epsrel = quad_tol / 10

    def integrand(x):
        return x ** n * weight(x)

    if weight.decay == "compact":
        return _integrate(integrand, 0.0, weight.support, epsrel)

    # exponential decay: peak of xⁿe^{-x} sits at x = n, so split the range well past it
    split = min(4.0 * (n + 1) + 40.0, weight.support)
    head, message = _integrate(integrand, 0.0, split, epsrel, [float(n)] if 0 < n < split else None)
    if split >= weight.support:
        return head, message
    # the tail only has to be accurate relative to the whole integral
    tail, tail_message = _integrate(integrand, split, weight.support, epsrel, epsabs=abs(head) * epsrel * 1e-3)
    return head + tail, message or tail_message


def moment_errors(family: RhoFamily, weight: WeightSpec, n_max: int, quad_tol: float) -> List[MomentResult]:
    if not 0 <= n_max <= MAX_MOMENT:
        raise ParameterError(f"n_max must lie in 0..{MAX_MOMENT}, got {n_max}")
    results = []
    for n in range(n_max + 1):
        value, message = integrate_moment(weight, n, quad_tol)
        expected = math.exp(rho_log(family, n))
        error = abs(value - expected) / expected
        if message:
            log.warning(f"Quadrature for moment {n} of {family.label} did not converge: {message}")
        results.append(MomentResult(n, value, expected, error, not message, message))
    return results
