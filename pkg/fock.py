"""
Truncated Fock space: basis ladder operators, diagonal operator functions,
matrix exponential and inner products on levels 0..N (dim = N + 1).

Values are immutable; every function returns new arrays.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm, matrix_balance
from scipy.sparse.linalg import expm_multiply

from errors import (
    DimensionMismatchError,
    EvaluationError,
    ExponentialOverflowError,
    InvalidDimensionError,
)

log = logging.getLogger("nlcs.fock")

NORMALIZED_TOL = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FockVector:
    dim: int
    amps: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amps)
        if amps.ndim != 1 or amps.shape[0] != self.dim:
            raise InvalidDimensionError(f"FockVector of dim {self.dim} got {amps.shape[0]} amplitudes")
        if not np.all(np.isfinite(amps)):
            raise EvaluationError("FockVector amplitudes must be finite")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, n: int, dim: int) -> "FockVector":
        _check_dim(dim)
        if not 0 <= n < dim:
            raise InvalidDimensionError(f"Level {n} outside 0..{dim - 1}")
        amps = np.zeros(dim, dtype=complex)
        amps[n] = 1.0
        return cls(dim, amps)

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    @property
    def is_normalized(self) -> bool:
        return abs(norm(self) - 1.0) <= NORMALIZED_TOL

    def normalized(self) -> "FockVector":
        length = norm(self)
        if length == 0.0:
            raise EvaluationError("Cannot normalise the zero vector")
        return FockVector(self.dim, self.amps / length)

    def tail_mass(self, levels: int = 3) -> float:
        """Probability weight carried by the top `levels` levels, relative to the norm."""
        probs = self.probabilities
        total = probs.sum()
        return float(probs[-levels:].sum() / total) if total > 0 else 0.0

    def __sub__(self, other: "FockVector") -> "FockVector":
        _match(self.dim, other.dim)
        return FockVector(self.dim, self.amps - other.amps)

    def __mul__(self, scalar) -> "FockVector":
        return FockVector(self.dim, self.amps * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class FockOperator:
    dim: int
    entries: np.ndarray
    tag: str = "general"

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.shape != (self.dim, self.dim):
            raise InvalidDimensionError(f"FockOperator of dim {self.dim} got shape {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def dag(self) -> "FockOperator":
        tag = _ADJOINT_TAGS.get(self.tag, self.tag)
        return FockOperator(self.dim, self.entries.conj().T, tag)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            _match(self.dim, other.dim)
            return FockVector(self.dim, self.entries @ other.amps)
        _match(self.dim, other.dim)
        tag = "diagonal" if self.tag in _DIAGONAL_TAGS and other.tag in _DIAGONAL_TAGS else "general"
        return FockOperator(self.dim, self.entries @ other.entries, tag)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        _match(self.dim, other.dim)
        return FockOperator(self.dim, self.entries + other.entries)

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        _match(self.dim, other.dim)
        return FockOperator(self.dim, self.entries - other.entries)

    def __mul__(self, scalar) -> "FockOperator":
        return FockOperator(self.dim, self.entries * scalar, self.tag)

    __rmul__ = __mul__

    def __neg__(self) -> "FockOperator":
        return FockOperator(self.dim, -self.entries, self.tag)


_DIAGONAL_TAGS = {"number", "diagonal", "identity"}
_ADJOINT_TAGS = {
    "annihilator": "creator",
    "creator": "annihilator",
    "lowering": "raising",
    "raising": "lowering",
}


def _check_dim(dim: int):
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise InvalidDimensionError(f"dim must be a positive integer, got {dim!r}")


def _match(left: int, right: int):
    if left != right:
        raise DimensionMismatchError(f"Dimension mismatch: {left} vs {right}")


def make_annihilator(dim: int) -> FockOperator:
    _check_dim(dim)
    return FockOperator(dim, np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1), "annihilator")


def make_creator(dim: int) -> FockOperator:
    return make_annihilator(dim).dag


def make_number(dim: int) -> FockOperator:
    _check_dim(dim)
    return FockOperator(dim, np.diag(np.arange(dim, dtype=float)), "number")


def identity(dim: int) -> FockOperator:
    _check_dim(dim)
    return FockOperator(dim, np.eye(dim), "identity")


def diagonal_function(g: Callable[[int], complex], dim: int) -> FockOperator:
    """Operator g(n̂) with entries g(0)..g(N)."""
    _check_dim(dim)
    values = np.empty(dim, dtype=complex)
    for n in range(dim):
        try:
            value = complex(g(n))
        except Exception as e:
            raise EvaluationError(f"g is undefined at level {n}: {e}", level=n)
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise EvaluationError(f"g is not finite at level {n}: {value}", level=n)
        values[n] = value
    return FockOperator(dim, np.diag(values), "diagonal")


def diagonal_from_values(values) -> FockOperator:
    values = np.asarray(values, dtype=complex)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise EvaluationError(f"Diagonal entry is not finite at level {bad[0]}", level=int(bad[0]))
    return FockOperator(values.shape[0], np.diag(values), "diagonal")


def matrix_exponential(X: FockOperator) -> FockOperator:
    """exp(X) by scaling and squaring with Padé approximation (scipy.linalg.expm)."""
    if not np.all(np.isfinite(X.entries)):
        raise EvaluationError("matrix_exponential requires finite entries")
    if X.tag in _DIAGONAL_TAGS:
        with np.errstate(over="ignore"):
            values = np.exp(X.diagonal)
        result = np.diag(values)
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            result = expm(X.entries)
    if not np.all(np.isfinite(result)):
        norm_1 = float(np.abs(X.entries).sum(axis=0).max())
        raise ExponentialOverflowError(f"exp(X) overflowed; ||X||_1 = {norm_1:.6g}", norm=norm_1)
    return FockOperator(X.dim, result, "diagonal" if X.tag in _DIAGONAL_TAGS else "general")


ACTION_NORM_LIMIT = 1e3


def exponential_action(X: FockOperator, v: FockVector) -> FockVector:
    """exp(X)|v⟩ without forming exp(X) when the norm allows it.

    Moderate norms go through the truncated Taylor action, whose arithmetic
    commutes with diagonal rescaling, so graded amplitudes keep their relative
    accuracy. Larger norms use scaling and squaring on the balanced matrix.
    """
    _match(X.dim, v.dim)
    if not np.all(np.isfinite(X.entries)):
        raise EvaluationError("exponential_action requires finite entries")
    norm_1 = float(np.abs(X.entries).sum(axis=0).max())
    with np.errstate(over="ignore", invalid="ignore"):
        if norm_1 <= ACTION_NORM_LIMIT:
            result = expm_multiply(X.entries, v.amps, traceA=complex(np.trace(X.entries)))
        else:
            balanced, (scale, _) = matrix_balance(X.entries, permute=False, separate=True)
            log.debug(f"Balanced exponential for ||X||_1 = {norm_1:.3g}")
            result = scale * (expm(balanced) @ (v.amps / scale))
    if not np.all(np.isfinite(result)):
        raise ExponentialOverflowError(f"exp(X)|v> overflowed; ||X||_1 = {norm_1:.6g}", norm=norm_1)
    return FockVector(X.dim, result)


def commutator(X: FockOperator, Y: FockOperator) -> FockOperator:
    _match(X.dim, Y.dim)
    return FockOperator(X.dim, X.entries @ Y.entries - Y.entries @ X.entries)


def inner_product(u: FockVector, v: FockVector) -> complex:
    """⟨u|v⟩, antilinear in the first argument."""
    _match(u.dim, v.dim)
    return complex(np.vdot(u.amps, v.amps))


def norm(v: FockVector) -> float:
    return float(np.linalg.norm(v.amps))


def fidelity(u: FockVector, v: FockVector) -> float:
    """|⟨u|v⟩|² / (‖u‖²‖v‖²), clipped to [0, 1]."""
    _match(u.dim, v.dim)
    nu, nv = norm(u), norm(v)
    if nu == 0.0 or nv == 0.0:
        raise EvaluationError("Fidelity is undefined for the zero vector")
    overlap = abs(np.vdot(u.amps / nu, v.amps / nv)) ** 2
    return float(min(1.0, max(0.0, overlap)))


def trust_band(dim: int, margin: int = 2) -> int:
    """Number of levels (from 0) on which truncated algebraic identities are exact."""
    return max(dim - margin, 0)


def max_entry(X, band: Optional[int] = None) -> float:
    entries = X.entries if isinstance(X, FockOperator) else np.asarray(X)
    if band is not None:
        entries = entries[:band, :band]
    return float(np.abs(entries).max()) if entries.size else 0.0
