import math

import numpy as np
import pytest

import deformation
from deformation import (
    NonlinearityFn,
    SpectrumView,
    build_A,
    build_A_dag,
    build_B,
    build_B_dag,
    e_eval,
    e_values,
    f_eval,
    f_values,
    hamiltonian,
    manko_hamiltonian,
    radius_of_convergence,
    su11_generators,
)
from errors import DomainError, InvalidDimensionError, ParameterError
from families import CATALOG, dual_of, make_family, rho_log, table_family
from fock import FockVector, commutator, identity, make_annihilator, trust_band
from states import cs_displacement

EPS = np.finfo(float).eps


def _ket(n, dim):
    return FockVector.basis(n, dim)


def test_f_examples():
    assert f_eval(make_family("canonical"), 17) == pytest.approx(1.0, rel=1e-14)
    assert f_eval(make_family("ps", q=0.5), 2) == pytest.approx(2.0, rel=1e-14)
    assert f_eval(make_family("bg", kappa=1.5), 1) == pytest.approx(math.sqrt(3), rel=1e-14)
    assert f_eval(make_family("kps-e"), 7) == pytest.approx(math.sqrt(7), rel=1e-14)


def test_e_examples():
    assert e_eval(make_family("bg", kappa=1.5), 2) == pytest.approx(8.0, rel=1e-14)
    assert e_eval(make_family("kps-a", p=3), 5) == pytest.approx(8.0, rel=1e-14)
    assert e_eval(make_family("canonical"), 9) == pytest.approx(9.0, rel=1e-14)
    assert e_eval(make_family("kps-f"), 0) == 0.0


def test_f_rejects_level_zero():
    with pytest.raises(DomainError):
        f_eval(make_family("canonical"), 0)
    with pytest.raises(DomainError):
        e_eval(make_family("canonical"), -1)


def test_callable_views():
    family = make_family("kps-g")
    assert NonlinearityFn(family)(4) == f_eval(family, 4)
    assert SpectrumView(family)(4) == e_eval(family, 4)
    np.testing.assert_array_equal(NonlinearityFn(family).values(6), f_values(family, 6))
    np.testing.assert_array_equal(SpectrumView(family).values(6), e_values(family, 6))


@pytest.mark.parametrize("family_id", list(CATALOG))
def test_f_squared_matches_rho_ratio(family_id):
    family = make_family(family_id)
    for n in range(1, 51):
        ratio = math.exp(2 * math.log(f_eval(family, n)) + math.log(n) + rho_log(family, n - 1) - rho_log(family, n))
        assert ratio == pytest.approx(1.0, rel=1e-12)
        assert e_eval(family, n) == pytest.approx(n * f_eval(family, n) ** 2, rel=1e-12)


@pytest.mark.parametrize("family_id", list(CATALOG))
def test_dual_f_is_reciprocal(family_id):
    family = make_family(family_id)
    dual = dual_of(family)
    for n in range(1, 51):
        assert abs(f_eval(family, n) * f_eval(dual, n) - 1.0) <= 4 * EPS


def _shifted(p):
    return lambda n: math.sqrt((n + p) / n), lambda n: n + p


def _gamma_over_n1(a):
    return lambda n: math.sqrt((n + a) / (n + 1)), lambda n: n * (n + a) / (n + 1)


def _penson_solomon(q):
    return lambda n: q ** (1 - n), lambda n: n * q ** (2 * (1 - n))


def _barut_girardello(kappa):
    return lambda n: math.sqrt(n + 2 * kappa - 1), lambda n: n * (n + 2 * kappa - 1)


def _gilmore_perelomov(kappa):
    return lambda n: 1 / math.sqrt(n + 2 * kappa - 1), lambda n: n / (n + 2 * kappa - 1)


def _mittag_leffler_alpha_one(beta):
    return lambda n: math.sqrt((n + beta - 1) / n), lambda n: n + beta - 1


CLOSED_FORMS = [
    (make_family("kps-a", p=1), *_shifted(1)),
    (make_family("kps-a", p=2), *_shifted(2)),
    (make_family("kps-a", p=3), *_shifted(3)),
    (make_family("kps-c"), lambda n: math.sqrt(n / (n + 1)), lambda n: n * n / (n + 1)),
    (make_family("kps-d", alpha=0), *_gamma_over_n1(0)),
    (make_family("kps-d", alpha=2), *_gamma_over_n1(2)),
    (make_family("kps-d", alpha=3), *_gamma_over_n1(3)),
    (make_family("kps-d", alpha=0.5), *_gamma_over_n1(0.5)),
    (make_family("kps-e"), lambda n: math.sqrt(n), lambda n: n ** 2),
    (make_family("kps-f"), lambda n: n, lambda n: n ** 3),
    (make_family("kps-g"), lambda n: math.sqrt(n + 1 / 3), lambda n: n * (n + 1 / 3)),
    (make_family("kps-h"), lambda n: n / math.sqrt(n + 0.5), lambda n: n ** 3 / (n + 0.5)),
    (make_family("kps-da"), lambda n: math.sqrt((n + 1) / (n * (n + 2))), lambda n: (n + 1) / (n + 2)),
    (make_family("kps-db"), lambda n: math.sqrt((n + 1) / (n * (n + 3))), lambda n: (n + 1) / (n + 3)),
    (make_family("kps-dc"), lambda n: 2 * math.sqrt(n) / (2 * n + 1), lambda n: 4 * n * n / (2 * n + 1) ** 2),
    (make_family("kps-dd"), lambda n: 2 * math.sqrt((n + 1) / ((2 * n + 1) * (2 * n + 3))),
     lambda n: 4 * n * (n + 1) / ((2 * n + 1) * (2 * n + 3))),
    (make_family("kps-de"), lambda n: math.sqrt(n + 0.5) / (n + 1), lambda n: n * (n + 0.5) / (n + 1) ** 2),
    (make_family("kps-df"), lambda n: math.sqrt((n * n + 3 * n + 2) / (n * (n + 3) * (n + 1.5))),
     lambda n: (n * n + 3 * n + 2) / ((n + 3) * (n + 1.5))),
    (make_family("ps", q=0.8), *_penson_solomon(0.8)),
    (make_family("ps", q=0.95), *_penson_solomon(0.95)),
    (make_family("bg", kappa=1), *_barut_girardello(1)),
    (make_family("bg", kappa=2.5), *_barut_girardello(2.5)),
    (make_family("gp", kappa=1), *_gilmore_perelomov(1)),
    (make_family("gp", kappa=2.5), *_gilmore_perelomov(2.5)),
    (make_family("ml", alpha=1, beta=1), *_mittag_leffler_alpha_one(1)),
    (make_family("ml", alpha=1, beta=2.5), *_mittag_leffler_alpha_one(2.5)),
    (make_family("ml", alpha=1, beta=3), *_mittag_leffler_alpha_one(3)),
]


@pytest.mark.parametrize("family, f_form, e_form", CLOSED_FORMS, ids=lambda v: v.label if hasattr(v, "label") else None)
def test_closed_forms(family, f_form, e_form):
    for n in range(1, 51):
        assert f_eval(family, n) == pytest.approx(f_form(n), rel=1e-12)
        assert e_eval(family, n) == pytest.approx(e_form(n), rel=1e-12)


@pytest.mark.parametrize(
    "family",
    [make_family("kps-a", p=3), make_family("ml", alpha=1, beta=3), make_family("kps-c"), make_family("kps-d", alpha=3)],
)
def test_whole_plane_families_tend_to_canonical(family):
    for n in (100, 1000, 10_000):
        assert abs(f_eval(family, n) - 1.0) <= 10 / n


@pytest.mark.parametrize("family_id", ["kps-da", "kps-db", "kps-dc", "kps-dd", "kps-de", "kps-df"])
def test_disk_families_limits(family_id):
    family = make_family(family_id)
    assert f_eval(family, 10_000) <= 0.05
    assert abs(e_eval(family, 10_000) - 1.0) <= 0.01


def test_build_A_examples():
    np.testing.assert_allclose(build_A(make_family("canonical"), 6).entries, make_annihilator(6).entries,
                               rtol=1e-14)
    A = build_A(make_family("bg", kappa=1.5), 5)
    np.testing.assert_allclose((A @ _ket(2, 5)).amps, math.sqrt(8) * _ket(1, 5).amps, rtol=1e-14)
    A = build_A(make_family("ps", q=0.9), 6)
    np.testing.assert_allclose((A @ _ket(3, 6)).amps, math.sqrt(3) * 0.9 ** -2 * _ket(2, 6).amps, rtol=1e-13)


def test_build_A_dag_is_adjoint():
    family = make_family("kps-g")
    np.testing.assert_array_equal(build_A_dag(family, 7).entries, build_A(family, 7).entries.conj().T)
    np.testing.assert_array_equal(build_B_dag(family, 7).entries, build_B(family, 7).entries.conj().T)
    assert build_A_dag(family, 7).tag == "raising"


def test_build_B_examples():
    np.testing.assert_allclose(build_B(make_family("canonical"), 6).entries, make_annihilator(6).entries,
                               rtol=1e-14)
    # B of Barut-Girardello is the lowering operator of Gilmore-Perelomov
    B = build_B(make_family("bg", kappa=1.5), 5)
    np.testing.assert_allclose((B @ _ket(2, 5)).amps, math.sqrt(2 / 4) * _ket(1, 5).amps, rtol=1e-14)
    np.testing.assert_allclose(build_A(make_family("gp", kappa=1.5), 5).entries, B.entries, rtol=1e-14)


@pytest.mark.parametrize("family_id", ["canonical", "kps-e", "bg", "ps", "kps-dd", "ll-action"])
def test_A_B_dagger_is_identity_on_trust_band(family_id):
    family = make_family(family_id)
    dim = 30
    band = trust_band(dim)
    c = commutator(build_A(family, dim), build_B_dag(family, dim)).entries
    np.testing.assert_allclose(c[:band, :band], identity(dim).entries[:band, :band], atol=1e-12 * dim)


def test_builders_need_two_levels():
    with pytest.raises(InvalidDimensionError):
        build_A(make_family("canonical"), 1)
    with pytest.raises(InvalidDimensionError):
        build_B(table_family([1, 2, 6]), 4)


def test_hamiltonian_examples():
    n = np.arange(8, dtype=float)
    np.testing.assert_allclose(hamiltonian(make_family("kps-f"), 8).diagonal, n ** 3, rtol=1e-13)
    np.testing.assert_allclose(hamiltonian(make_family("kps-dc"), 8).diagonal, 4 * n ** 2 / (2 * n + 1) ** 2,
                               rtol=1e-13)
    family = make_family("kps-g")
    e = e_values(family, 8)
    np.testing.assert_allclose(hamiltonian(dual_of(family), 8).diagonal[1:], n[1:] ** 2 / e[1:], rtol=1e-13)
    assert hamiltonian(dual_of(family), 8).diagonal[0] == 0


@pytest.mark.parametrize("family_id", ["canonical", "kps-a", "kps-h", "ps", "gp", "kps-df", "ll-paper"])
def test_hamiltonian_is_A_dag_A(family_id):
    family = make_family(family_id)
    dim = 40
    A = build_A(family, dim)
    np.testing.assert_allclose(hamiltonian(family, dim).diagonal[: dim - 1],
                               (A.dag @ A).diagonal[: dim - 1], rtol=1e-13)


@pytest.mark.parametrize("family_id", ["canonical", "kps-e", "bg", "kps-db"])
def test_commutator_A_A_dag_is_energy_gap(family_id):
    family = make_family(family_id)
    dim = 30
    band = trust_band(dim)
    A = build_A(family, dim)
    e = e_values(family, dim + 1)
    gap = commutator(A, A.dag).diagonal.real[:band]
    np.testing.assert_allclose(gap, np.diff(e)[:band], rtol=1e-12, atol=1e-12)


def test_manko_hamiltonian():
    dim = 10
    n = np.arange(dim - 1, dtype=float)
    canonical = manko_hamiltonian(make_family("canonical"), dim).diagonal.real
    np.testing.assert_allclose(canonical[:-1], n + 0.5, rtol=1e-14)

    bg = manko_hamiltonian(make_family("bg", kappa=1), dim).diagonal.real
    np.testing.assert_allclose(bg[:-1], 0.5 * (n * (n + 1) + (n + 1) * (n + 2)), rtol=1e-13)

    family = make_family("kps-f")
    e = e_values(family, dim + 1)
    difference = manko_hamiltonian(family, dim).diagonal.real - hamiltonian(family, dim).diagonal.real
    np.testing.assert_allclose(difference[:-1], 0.5 * np.diff(e)[: dim - 1], rtol=1e-13)


def test_su11_generators():
    generators = su11_generators(1.5, 20)
    c = commutator(generators["L_minus"], generators["L_plus"])
    np.testing.assert_allclose(c.entries, generators["L_12"].entries, atol=1e-12)
    n = np.arange(20)
    np.testing.assert_allclose(generators["L_12"].diagonal.real[:18], n[:18] + 1.5, rtol=1e-12, atol=1e-12)


def test_radius_examples():
    assert not radius_of_convergence(make_family("canonical")).is_finite
    assert radius_of_convergence(make_family("canonical")).admits(1e6)
    for family_id in ("kps-da", "kps-db"):
        estimate = radius_of_convergence(make_family(family_id))
        assert estimate.status == "converged"
        assert estimate.value == pytest.approx(1.0, abs=1e-3)
        assert estimate.admits(0.5) and not estimate.admits(1.5)


def test_radius_of_dual_families():
    # harmonious states live on the unit disk
    assert radius_of_convergence(dual_of(make_family("kps-e"))).value == pytest.approx(1.0, abs=1e-3)
    assert radius_of_convergence(dual_of(make_family("gp", kappa=2))).status == "divergent"
    ps_dual = radius_of_convergence(dual_of(make_family("ps", q=0.8)))
    assert ps_dual.is_finite and ps_dual.value == 0.0


def test_f_at_level_zero_never_reaches_an_observable(monkeypatch):
    family = make_family("kps-g")

    def outputs():
        return [
            build_A(family, 20).entries,
            build_B(family, 20).entries,
            hamiltonian(family, 20).entries,
            manko_hamiltonian(family, 20).entries,
            cs_displacement(family, 0.7).amplitudes,
        ]

    before = outputs()
    unpatched = deformation.f_values

    def shifted_f0(fam, dim):
        values = unpatched(fam, dim).copy()
        values[0] = 7.3
        return values

    monkeypatch.setattr(deformation, "f_values", shifted_f0)
    assert deformation.f_values(family, 5)[0] == 7.3
    for old, new in zip(before, outputs()):
        np.testing.assert_array_equal(old, new)


def test_radius_honours_explicit_threshold():
    # lim e_n = 1 for kps-da, which already exceeds a threshold of 1/2
    assert radius_of_convergence(make_family("kps-da"), divergence_threshold=0.5).status == "divergent"
    assert radius_of_convergence(make_family("kps-da")).status == "converged"
    with pytest.raises(ParameterError):
        radius_of_convergence(make_family("kps-da"), divergence_threshold=0)
