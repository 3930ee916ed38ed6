import cmath
import math

import numpy as np
import pytest
from scipy.special import gammaln

from config import get_settings, use_settings
from errors import DimensionMismatchError, DomainError, InvalidDimensionError, NonInvertibleError, TruncationError
from families import dual_of, make_family
from fock import norm
from states import (
    UNBOUNDED,
    TOperator,
    canonical_state,
    cs_displacement,
    cs_dual_displacement,
    cs_series,
    estimate_tail,
    evolve,
    gk_state,
    route_fidelity,
    t_apply,
)


def _factorials(dim):
    return np.exp(gammaln(np.arange(dim) + 1.0))


@pytest.mark.parametrize("family_id", ["canonical", "kps-e", "kps-da", "gp"])
def test_zero_label_is_vacuum(family_id):
    state = cs_series(make_family(family_id), 0)
    assert state.amplitudes[0] == 1
    assert np.all(state.amplitudes[1:] == 0)
    assert state.tail_mass == 0.0


def test_canonical_series_amplitudes():
    state = cs_series(make_family("canonical"), 1, dim=40)
    expected = np.exp(-0.5) / np.sqrt(_factorials(40))
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-14)
    assert state.dim == 40
    assert state.method == "series"


def test_kps_e_series_amplitudes():
    state = cs_series(make_family("kps-e"), 2, dim=30)
    raw = 2.0 ** np.arange(30) / _factorials(30)
    np.testing.assert_allclose(state.amplitudes, raw / np.linalg.norm(raw), rtol=1e-12)
    assert state.log_normalization == pytest.approx(math.log(np.sum(raw ** 2)), rel=1e-13)


def test_complex_label_phases():
    z = 0.5 + 0.5j
    state = cs_series(make_family("canonical"), z, dim=30)
    n = np.arange(30)
    expected = np.exp(-abs(z) ** 2 / 2) * z ** n / np.sqrt(_factorials(30))
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-14)


def test_auto_dim_grows_for_larger_labels():
    small = cs_series(make_family("canonical"), 0.25)
    large = cs_series(make_family("canonical"), 2)
    assert small.dim == get_settings().start_dim
    assert large.dim > small.dim
    assert large.tail_mass <= get_settings().tail_tolerance


@pytest.mark.parametrize(
    "family_id, z",
    [("canonical", 2), ("kps-e", 1 + 1j), ("bg", 1.5), ("kps-da", 0.8), ("gp", 0.5j), ("ps", 1.2), ("kps-f", 3)],
)
def test_states_are_normalized(family_id, z):
    state = cs_series(make_family(family_id), z)
    assert norm(state.vector) == pytest.approx(1.0, abs=1e-12)


def test_fixed_dim_too_small_is_a_truncation_error():
    with pytest.raises(TruncationError) as err:
        cs_series(make_family("canonical"), 2, dim=8)
    assert err.value.dim == 8
    assert err.value.tail_mass > get_settings().tail_tolerance
    forced = cs_series(make_family("canonical"), 2, dim=8, force=True)
    assert forced.dim == 8


def test_dim_cap_is_a_truncation_error():
    use_settings(get_settings().with_overrides({"max_dim": 32}))
    with pytest.raises(TruncationError):
        cs_series(make_family("canonical"), 4)


def test_invalid_fixed_dim():
    with pytest.raises(InvalidDimensionError):
        cs_series(make_family("canonical"), 0.5, dim=1)


@pytest.mark.parametrize("z", [1.2, 0.97, 0.6 + 0.8j])
def test_disk_domain_is_enforced(z):
    with pytest.raises(DomainError):
        cs_series(make_family("kps-da"), z)


def test_estimate_tail():
    assert estimate_tail(np.array([1.0, 0.0, 0.0])) == 0.0
    assert estimate_tail(np.array([0.5, 0.5])) == math.inf
    assert estimate_tail(np.array([1.0, 0.1, 0.01])) == pytest.approx(0.01 * 0.1 / 0.9)


def test_displacement_matches_series_for_canonical():
    family = make_family("canonical")
    displaced = cs_displacement(family, 0.5)
    assert route_fidelity(cs_series(family, 0.5), displaced) >= 1 - 1e-10
    assert displaced.method == "displacement"


@pytest.mark.parametrize(
    "family, z, dim",
    [
        (make_family("kps-e"), 0.5, 30),
        (make_family("bg", kappa=1.5), 1, 60),
        (make_family("kps-a", p=2), 0.5 + 0.5j, None),
        (make_family("kps-db"), 0.5, None),
        (make_family("ps", q=0.5), 0.3, None),
    ],
)
def test_displacement_matches_series(family, z, dim):
    series = cs_series(family, z, dim)
    displaced = cs_displacement(family, z, dim)
    assert route_fidelity(series, displaced) >= 1 - 1e-8
    assert norm(displaced.vector) == pytest.approx(1.0, abs=1e-12)


def test_displacement_of_zero_is_vacuum():
    state = cs_displacement(make_family("kps-e"), 0)
    assert state.amplitudes[0] == 1
    assert state.method == "displacement"


def test_dual_displacement_is_self_dual_for_canonical():
    family = make_family("canonical")
    assert route_fidelity(cs_dual_displacement(family, 0.7), cs_series(family, 0.7)) >= 1 - 1e-10


@pytest.mark.parametrize("family, z", [(make_family("kps-e"), 0.5), (make_family("kps-a", p=1), 1.0),
                                       (make_family("bg", kappa=2), 0.4)])
def test_dual_displacement_matches_dual_series(family, z):
    dual = cs_dual_displacement(family, z)
    assert dual.family == dual_of(family)
    assert route_fidelity(dual, cs_series(dual_of(family), z)) >= 1 - 1e-8


def test_harmonious_states_have_equal_coefficients():
    # dual of kps-e has rho = 1, so every amplitude is z^n up to normalization
    state = cs_series(dual_of(make_family("kps-e")), 0.9)
    raw = 0.9 ** np.arange(state.dim)
    np.testing.assert_allclose(state.amplitudes, raw / np.linalg.norm(raw), rtol=1e-12, atol=1e-300)


def test_penson_solomon_has_no_dual_states():
    with pytest.raises(DomainError):
        cs_dual_displacement(make_family("ps", q=0.8), 0.3)


def test_t_operator_diagonals():
    np.testing.assert_array_equal(TOperator.build(make_family("canonical"), 10).diagonal, np.ones(10))
    q = 0.6
    n = np.arange(12)
    T = TOperator.build(make_family("ps", q=q), 12)
    np.testing.assert_allclose(T.diagonal, q ** (n * (n - 1) / 2), rtol=1e-13)
    assert T.diagonal[0] == 1.0


def test_t_operator_inverse_is_dual():
    family = make_family("kps-g")
    T = TOperator.build(family, 20)
    inverse = T.inverse()
    assert inverse.family == dual_of(family)
    np.testing.assert_allclose(inverse.log_diagonal, TOperator.build(dual_of(family), 20).log_diagonal, atol=1e-12)
    product = T.operator() @ TOperator.build(dual_of(family), 20).operator()
    np.testing.assert_allclose(product.entries, np.eye(20), rtol=1e-14)


def test_t_operator_with_zero_entry_is_not_invertible():
    T = TOperator(make_family("canonical"), 3, np.array([0.0, -np.inf, 0.0]))
    with pytest.raises(NonInvertibleError):
        T.inverse()


def test_t_forward_on_canonical_gives_family_state():
    family = make_family("kps-a", p=1)
    series = cs_series(family, 0.7)
    forward = t_apply(family, series.dim, "forward", canonical_state(0.7, series.dim, force=True))
    assert forward.family == family
    assert route_fidelity(series, forward) >= 1 - 1e-10


def test_t_inverse_on_canonical_gives_dual_state():
    family = make_family("kps-e")
    series = cs_series(dual_of(family), 0.5)
    inverse = t_apply(family, series.dim, "inverse", canonical_state(0.5, series.dim, force=True))
    assert inverse.family == dual_of(family)
    assert route_fidelity(series, inverse) >= 1 - 1e-10


def test_t_apply_checks_dims_and_direction():
    state = canonical_state(0.5, 20)
    with pytest.raises(DimensionMismatchError):
        t_apply(make_family("kps-e"), 30, "forward", state)
    with pytest.raises(ValueError):
        t_apply(make_family("kps-e"), 20, "sideways", state)


def test_gk_vacuum_and_negative_action():
    state = gk_state(make_family("kps-f"), 0.0, 1.3)
    assert state.amplitudes[0] == 1
    assert state.label == (0.0, 1.3)
    with pytest.raises(DomainError):
        gk_state(make_family("kps-f"), -0.1, 0.0)


@pytest.mark.parametrize("family_id, J", [("canonical", 1.0), ("kps-f", 0.5), ("bg", 2.0), ("kps-dd", 0.3)])
def test_gk_without_phase_is_the_series_state(family_id, J):
    family = make_family(family_id)
    gk = gk_state(family, J, 0.0)
    series = cs_series(family, math.sqrt(J))
    np.testing.assert_array_equal(gk.amplitudes, series.amplitudes)


def test_canonical_gk_phases():
    state = gk_state(make_family("canonical"), 1.0, 2.0)
    n = np.arange(state.dim)
    expected = np.exp(-0.5) * np.exp(-2j * n) / np.sqrt(_factorials(state.dim))
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-12)
    assert state.is_gk
    with pytest.raises(AttributeError):
        state.z


def test_evolve_zero_time_is_identity():
    state = gk_state(make_family("bg", kappa=2), 0.8, 1.3)
    assert evolve(state, 0) is state


@pytest.mark.parametrize("family_id, J, gamma, t", [("bg", 0.8, 1.3, 2.7), ("kps-e", 1.5, -0.4, 0.9),
                                                    ("kps-de", 0.2, 2.0, -3.0)])
def test_evolve_shifts_gk_phase(family_id, J, gamma, t):
    family = make_family(family_id)
    evolved = evolve(gk_state(family, J, gamma), t)
    target = gk_state(family, J, gamma + t, evolved.dim, force=True)
    assert evolved.label == pytest.approx((J, gamma + t))
    assert evolved.elapsed == t
    assert np.max(np.abs(evolved.amplitudes - target.amplitudes)) <= 1e-12


def test_evolve_rotates_canonical_label():
    family = make_family("canonical")
    z, t = 0.8 + 0.2j, 0.6
    evolved = evolve(cs_series(family, z, dim=40), t)
    rotated = cs_series(family, z * cmath.exp(-1j * t), dim=40)
    assert route_fidelity(evolved, rotated) == pytest.approx(1.0, abs=1e-14)
    assert evolved.label == pytest.approx(z * cmath.exp(-1j * t), abs=1e-15)
    assert evolved.has_eigen_label
    assert evolved.to_dict()["elapsed"] == t


def test_evolve_keeps_initial_label_for_nonlinear_spectrum():
    state = cs_series(make_family("kps-e"), 0.5 + 0.2j)
    evolved = evolve(state, 0.7)
    assert evolved.label == state.label
    assert evolved.elapsed == 0.7
    assert not evolved.has_eigen_label
    assert state.has_eigen_label


def test_state_serialization():
    state = cs_series(make_family("bg", kappa=1.5), 0.5 - 0.25j, dim=12)
    payload = state.to_dict()
    assert list(payload) == ["family", "params", "label", "dim", "amplitudes", "tail_mass", "method"]
    assert payload["family"] == "bg"
    assert payload["params"] == {"kappa": 1.5}
    assert payload["label"] == [0.5, -0.25]
    assert len(payload["amplitudes"]) == 12
    gk = gk_state(make_family("canonical"), 0.5, 0.1).to_dict()
    assert gk["label"] == {"J": 0.5, "gamma": 0.1}


def test_unbounded_tail_serializes_as_finite_number():
    # probabilities still grow at the last level, so the geometric tail estimate is infinite
    state = cs_series(make_family("kps-da"), 0.99, dim=8, force=True)
    assert state.tail_mass == math.inf
    assert state.to_dict()["tail_mass"] == UNBOUNDED
