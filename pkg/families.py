"""
Moment-sequence catalog. A family is identified by a string id plus named
real parameters; everything else in the toolkit is derived from ln ρ(n).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from errors import ParameterError

log = logging.getLogger("nlcs.families")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    default: float
    domain: str
    integer: bool = False
    check: Callable[[float], bool] = field(default=lambda v: True, repr=False, compare=False)


@dataclass(frozen=True)
class FamilyEntry:
    id: str
    title: str
    region: str  # "plane" or "disk"
    params: Tuple[ParamSpec, ...]
    log_rho: Callable[[np.ndarray, Dict[str, float]], np.ndarray] = field(repr=False, compare=False)
    f_text: str = ""
    h_text: str = ""
    rho_text: str = ""


@dataclass(frozen=True)
class RhoFamily:
    id: str
    params: Tuple[Tuple[str, float], ...] = ()
    dual: bool = False
    table: Optional[Tuple[float, ...]] = None

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise ParameterError(f"Family {self.id} has no parameter '{name}'")

    @property
    def param_dict(self) -> Dict[str, float]:
        return dict(self.params)

    @property
    def base_offset(self) -> int:
        if self.id in ("ll-paper", "ll-action"):
            return int(self.param("m"))
        return 0

    @property
    def label(self) -> str:
        args = ",".join(f"{k}={_fmt(v)}" for k, v in self.params)
        text = f"{self.id}({args})" if args else self.id
        return text + "~dual" if self.dual else text

    def to_dict(self) -> dict:
        out = {"family": self.id, "params": {k: v for k, v in self.params}}
        if self.dual:
            out["params"]["dual"] = True
        if self.base_offset:
            out["params"]["base_offset"] = self.base_offset
        return out


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def _nonneg_int(v):
    return v >= 0 and float(v).is_integer()


# ln ρ(n) for every catalog entry, n is a float array of levels.

def _canonical(n, p):
    return gammaln(n + 1)


def _kps_a(n, p):
    return gammaln(n + p["p"] + 1) - gammaln(p["p"] + 1)


def _ml(n, p):
    return gammaln(p["alpha"] * n + p["beta"]) - gammaln(p["beta"])


def _kps_c(n, p):
    return gammaln(n + 1) - np.log1p(n)


def _kps_d(n, p):
    a = p["alpha"]
    return gammaln(n + 1 + a) - gammaln(1 + a) - np.log1p(n)


def _kps_e(n, p):
    return 2 * gammaln(n + 1)


def _kps_f(n, p):
    return 3 * gammaln(n + 1)


def _kps_g(n, p):
    return gammaln(n + 1) + gammaln(n + 4 / 3) - gammaln(4 / 3)


def _kps_h(n, p):
    return 3 * gammaln(n + 1) + gammaln(1.5) - gammaln(n + 1.5)


def _ps(n, p):
    return gammaln(n + 1) - n * (n - 1) * math.log(p["q"])


def _bg(n, p):
    k2 = 2 * p["kappa"]
    return gammaln(n + 1) + gammaln(n + k2) - gammaln(k2)


def _gp(n, p):
    k2 = 2 * p["kappa"]
    return gammaln(n + 1) + gammaln(k2) - gammaln(n + k2)


def _ll_action(n, p):
    shift = p["alpha"] + p["m"]
    return gammaln(n + 1) + gammaln(n + shift + 1) - gammaln(shift + 1)


def _ll_paper(n, p):
    return 2 * _ll_action(n, p)


def _kps_da(n, p):
    return math.log(2) - np.log(n + 2)


def _kps_db(n, p):
    return math.log(6) - np.log(n + 2) - np.log(n + 3)


def _kps_dc(n, p):
    return math.log(math.pi / 4) + 2 * gammaln(n + 1) - 2 * gammaln(n + 1.5)


def _kps_dd(n, p):
    return (math.log(3 * math.pi / 8) + gammaln(n + 1) + gammaln(n + 2)
            - gammaln(n + 1.5) - gammaln(n + 2.5))


def _kps_de(n, p):
    return gammaln(n + 1.5) - gammaln(1.5) - gammaln(n + 2) - np.log1p(n)


def _kps_df(n, p):
    return (math.log(3) + gammaln(2.5) + gammaln(n + 2)
            - np.log(n + 3) - gammaln(n + 2.5))


_P = ParamSpec("p", 1, "nonnegative integer", integer=True, check=_nonneg_int)
_ML_ALPHA = ParamSpec("alpha", 1.0, "alpha > 0", check=lambda v: v > 0)
_ML_BETA = ParamSpec("beta", 1.0, "beta > 0", check=lambda v: v > 0)
_D_ALPHA = ParamSpec("alpha", 1.0, "alpha > -1", check=lambda v: v > -1)
_Q = ParamSpec("q", 0.5, "0 < q <= 1", check=lambda v: 0 < v <= 1)
_KAPPA = ParamSpec("kappa", 1.0, "kappa >= 1/2 (ladder 1, 3/2, 2, ...)", check=lambda v: v >= 0.5)
_LL_ALPHA = ParamSpec("alpha", 0.0, "alpha > -1", check=lambda v: v > -1)
_M = ParamSpec("m", 0, "nonnegative integer", integer=True, check=_nonneg_int)

_ENTRIES = [
    FamilyEntry("canonical", "canonical coherent states", "plane", (), _canonical,
                "1", "n", "n!"),
    FamilyEntry("kps-a", "shifted factorial", "plane", (_P,), _kps_a,
                "sqrt((n+p)/n)", "n+p", "(n+p)!/p!"),
    FamilyEntry("kps-b", "Mittag-Leffler", "plane", (_ML_ALPHA, _ML_BETA), _ml,
                "sqrt(Gamma(alpha*n+beta)/(n*Gamma(alpha*(n-1)+beta)))",
                "Gamma(alpha*n+beta)/Gamma(alpha*(n-1)+beta)", "Gamma(alpha*n+beta)/Gamma(beta)"),
    FamilyEntry("ml", "Mittag-Leffler", "plane", (_ML_ALPHA, _ML_BETA), _ml,
                "sqrt(Gamma(alpha*n+beta)/(n*Gamma(alpha*(n-1)+beta)))",
                "Gamma(alpha*n+beta)/Gamma(alpha*(n-1)+beta)", "Gamma(alpha*n+beta)/Gamma(beta)"),
    FamilyEntry("kps-c", "factorial over n+1", "plane", (), _kps_c,
                "sqrt(n/(n+1))", "n^2/(n+1)", "n!/(n+1)"),
    FamilyEntry("kps-d", "gamma over n+1", "plane", (_D_ALPHA,), _kps_d,
                "sqrt((n+alpha)/(n+1))", "n(n+alpha)/(n+1)", "Gamma(n+1+alpha)/(Gamma(1+alpha)(n+1))"),
    FamilyEntry("kps-e", "squared factorial", "plane", (), _kps_e,
                "sqrt(n)", "n^2", "(n!)^2"),
    FamilyEntry("kps-f", "cubed factorial", "plane", (), _kps_f,
                "n", "n^3", "(n!)^3"),
    FamilyEntry("kps-g", "factorial times gamma", "plane", (), _kps_g,
                "sqrt(n+1/3)", "n(n+1/3)", "n! Gamma(n+4/3)/Gamma(4/3)"),
    FamilyEntry("kps-h", "factorial cubed over gamma", "plane", (), _kps_h,
                "n/sqrt(n+1/2)", "n^3/(n+1/2)", "(n!)^3 Gamma(3/2)/Gamma(n+3/2)"),
    FamilyEntry("ps", "Penson-Solomon", "plane", (_Q,), _ps,
                "q^(1-n)", "n q^(2(1-n))", "n! q^(-n(n-1))"),
    FamilyEntry("bg", "Barut-Girardello su(1,1)", "plane", (_KAPPA,), _bg,
                "sqrt(n+2kappa-1)", "n(n+2kappa-1)", "n! Gamma(n+2kappa)/Gamma(2kappa)"),
    FamilyEntry("gp", "Gilmore-Perelomov su(1,1)", "disk", (_KAPPA,), _gp,
                "1/sqrt(n+2kappa-1)", "n/(n+2kappa-1)", "n! Gamma(2kappa)/Gamma(n+2kappa)"),
    FamilyEntry("ll-paper", "Landau levels, printed nonlinearity", "plane", (_LL_ALPHA, _M), _ll_paper,
                "sqrt(k)(k+alpha+m)", "k^2(k+alpha+m)^2",
                "(k!)^2 (Gamma(k+alpha+m+1)/Gamma(alpha+m+1))^2"),
    FamilyEntry("ll-action", "Landau levels, lowering action", "plane", (_LL_ALPHA, _M), _ll_action,
                "sqrt(k+alpha+m)", "k(k+alpha+m)", "k! Gamma(k+alpha+m+1)/Gamma(alpha+m+1)"),
    FamilyEntry("kps-da", "unit disk a'", "disk", (), _kps_da,
                "sqrt((n+1)/(n(n+2)))", "(n+1)/(n+2)", "2/(n+2)"),
    FamilyEntry("kps-db", "unit disk b'", "disk", (), _kps_db,
                "sqrt((n+1)/(n(n+3)))", "(n+1)/(n+3)", "6/((n+2)(n+3))"),
    FamilyEntry("kps-dc", "unit disk c'", "disk", (), _kps_dc,
                "2sqrt(n)/(2n+1)", "4n^2/(2n+1)^2", "(pi/4)(n!)^2/Gamma(n+3/2)^2"),
    FamilyEntry("kps-dd", "unit disk d'", "disk", (), _kps_dd,
                "2sqrt((n+1)/((2n+1)(2n+3)))", "4n(n+1)/((2n+1)(2n+3))",
                "(3pi/8) n!(n+1)!/(Gamma(n+3/2)Gamma(n+5/2))"),
    FamilyEntry("kps-de", "unit disk e' (hypergeometric, a=b=1/2, c=3/2)", "disk", (), _kps_de,
                "sqrt(n+1/2)/(n+1)", "n(n+1/2)/(n+1)^2", "Gamma(n+3/2)/(Gamma(3/2)(n+1)!(n+1))"),
    FamilyEntry("kps-df", "unit disk f'", "disk", (), _kps_df,
                "sqrt((n^2+3n+2)/(n(n+3)(n+3/2)))", "(n^2+3n+2)/((n+3)(n+3/2))",
                "3 Gamma(5/2)(n+1)!/((n+3)Gamma(n+5/2))"),
]

CATALOG: Dict[str, FamilyEntry] = {entry.id: entry for entry in _ENTRIES}
TABLE_ID = "table"


def family_ids():
    return list(CATALOG)


def get_entry(family_id: str) -> FamilyEntry:
    try:
        return CATALOG[family_id]
    except KeyError:
        raise ParameterError(f"Unknown family id '{family_id}'")


def make_family(family_id: str, dual: bool = False, **params) -> RhoFamily:
    """Validate parameters against the catalog entry and fill in defaults."""
    entry = get_entry(family_id)
    known = {spec.name for spec in entry.params}
    extra = sorted(set(params) - known)
    if extra:
        raise ParameterError(f"Family {family_id} does not take parameter(s) {', '.join(extra)}")

    values = []
    for spec in entry.params:
        value = params.get(spec.name)
        value = spec.default if value is None else value
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ParameterError(f"Parameter {spec.name} of {family_id} must be a number, got {value!r}")
        if not math.isfinite(value) or not spec.check(value):
            raise ParameterError(f"Parameter {spec.name}={value} outside domain ({spec.domain}) for {family_id}")
        if spec.integer:
            value = int(value)
        values.append((spec.name, value))

    if "kappa" in known:
        kappa = dict(values)["kappa"]
        if not (2 * kappa).is_integer() or kappa < 1:
            log.warning(f"kappa={kappa} is off the discrete ladder 1, 3/2, 2, ...; formulas are continued")
    return RhoFamily(family_id, tuple(values), dual)


def table_family(values, dual: bool = False) -> RhoFamily:
    """User family from an explicit table ρ(0..N); ρ(0) must be 1 and every entry positive."""
    table = tuple(float(v) for v in values)
    if len(table) < 2:
        raise ParameterError("A table family needs at least rho(0) and rho(1)")
    if abs(table[0] - 1.0) > 1e-12:
        raise ParameterError(f"Table family must have rho(0)=1, got {table[0]}")
    for n, v in enumerate(table):
        if not (math.isfinite(v) and v > 0):
            raise ParameterError(f"Table rho({n})={v} must be positive and finite")
    return RhoFamily(TABLE_ID, (), dual, table)


def dual_of(family: RhoFamily) -> RhoFamily:
    return replace(family, dual=not family.dual)


def region(family: RhoFamily) -> str:
    if family.table is not None:
        return "table"
    return get_entry(family.id).region


def max_level(family: RhoFamily) -> Optional[int]:
    return len(family.table) - 1 if family.table is not None else None


def base_log_rho(family: RhoFamily, n) -> np.ndarray:
    """ln ρ(n) of the family ignoring its dual flag; n may be an int or an array."""
    levels = np.asarray(n, dtype=float)
    if np.any(levels < 0):
        raise ParameterError("Levels must be nonnegative")
    if family.table is not None:
        top = len(family.table) - 1
        if np.any(levels > top):
            raise ParameterError(f"Table family is only defined up to level {top}")
        return np.log(np.asarray(family.table))[levels.astype(int)]
    entry = get_entry(family.id)
    return entry.log_rho(levels, family.param_dict)


def rho_log(family: RhoFamily, n):
    """ln ρ(n), log-gamma based. For a dual family ρ_dual(n) = (n!)²/ρ(n)."""
    if np.ndim(n) == 0 and (int(n) != n or n < 0):
        raise ParameterError(f"Level must be a nonnegative integer, got {n!r}")
    values = base_log_rho(family, n)
    if family.dual:
        values = 2 * gammaln(np.asarray(n, dtype=float) + 1) - values
    return float(values) if np.ndim(values) == 0 else values
