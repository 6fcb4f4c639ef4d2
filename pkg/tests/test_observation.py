import numpy as np
import pytest

from common.errors import ConfigError, InputError
from dynamics.integrator import SamplingSpec, StateTrajectory, integrate
from dynamics.systems import SystemKind, SystemSpec
from observation.functions import (
    MONOMIALS,
    ObservationKind,
    ObservationSeries,
    ObservationSpec,
    StateBounds,
    add_noise,
    observe,
    observe_all,
)


def _traj(states, index=0):
    states = np.asarray(states, dtype=float)
    return StateTrajectory(states=states, times=np.arange(len(states), dtype=float), chart=states, system="lorenz", index=index)


def test_monomials_cover_degree_three():
    assert len(MONOMIALS) == 20
    assert MONOMIALS[0] == (0, 0, 0)
    assert all(sum(m) <= 3 for m in MONOMIALS)


def test_identity_returns_states():
    states = np.arange(12.0).reshape(4, 3)
    out = observe(_traj(states), ObservationSpec(ObservationKind.IDENTITY))
    np.testing.assert_array_equal(out.values, states)
    assert out.dim == 3


def test_linear_with_forced_coefficients():
    states = np.array([[1.0, 2.0, 3.0], [0.0, -1.0, 4.0]])
    spec = ObservationSpec("random_linear", coefficients=(1.0, 0.5, 0.0))
    out = observe(_traj(states), spec)
    np.testing.assert_allclose(out.values[:, 0], [2.0, -0.5])
    assert spec.output_dim == 1


def test_poly_constant_term_only():
    coeffs = [2.5] + [0.0] * 19
    out = observe(_traj(np.random.default_rng(0).normal(size=(6, 3))), ObservationSpec("random_poly3", coefficients=coeffs))
    np.testing.assert_allclose(out.values[:, 0], 2.5)


def test_coefficients_are_seeded():
    a = ObservationSpec("random_poly3", seed=3).resolved_coefficients()
    b = ObservationSpec("random_poly3", seed=3).resolved_coefficients()
    np.testing.assert_array_equal(a, b)
    assert a.shape == (20,)


def test_wrong_coefficient_count_is_config_error():
    with pytest.raises(ConfigError):
        ObservationSpec("random_linear", coefficients=(1.0, 2.0))


def test_observation_needs_ambient_states():
    chart_only = StateTrajectory(states=np.zeros((5, 2)), times=np.zeros(5), chart=np.zeros((5, 2)), system="sphere")
    with pytest.raises(ConfigError):
        observe(chart_only, ObservationSpec("random_linear"))


def test_bounds_standardize_into_unit_box():
    trajs = [_traj(np.random.default_rng(k).normal(scale=10.0, size=(30, 3)), index=k) for k in range(4)]
    bounds = StateBounds.from_trajectories(trajs)
    scaled = np.concatenate([bounds.standardize(t.states) for t in trajs])
    assert scaled.min() >= -1.0 - 1e-12 and scaled.max() <= 1.0 + 1e-12


def test_observe_all_poly_uses_experiment_wide_bounds():
    trajs = [_traj([[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]]), _traj([[4.0, 4.0, 4.0], [2.0, 2.0, 2.0]], index=1)]
    # Coefficient on x only (monomial order: constant, x, y, z, ...).
    coeffs = [0.0] * 20
    coeffs[MONOMIALS.index((1, 0, 0))] = 1.0
    out = observe_all(trajs, ObservationSpec("random_poly3", coefficients=coeffs))
    np.testing.assert_allclose(out[0].values[:, 0], [-1.0, 0.0])
    np.testing.assert_allclose(out[1].values[:, 0], [1.0, 0.0])


def test_series_validation():
    with pytest.raises(InputError):
        ObservationSeries(values=np.array([[np.nan]]))
    with pytest.raises(InputError):
        ObservationSeries(values=np.zeros((4, 1)), sampling=SamplingSpec(n=5, T=1.0))


def test_noise_is_seeded_and_optional():
    traj = integrate(SystemSpec(SystemKind.SPHERE_HEIGHT_GRADIENT), np.array([1.0, 0.0]), SamplingSpec(n=7, T=1.0))
    series = observe(traj, ObservationSpec())
    assert add_noise(series, 0.0, 1) is series
    a, b = add_noise(series, 0.1, 1), add_noise(series, 0.1, 1)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, series.values)
    with pytest.raises(ConfigError):
        add_noise(series, -1.0, 1)
