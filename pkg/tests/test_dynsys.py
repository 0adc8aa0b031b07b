"""Integrator and system-definition tests with hand-derived oracles."""

import math

import numpy as np
import pytest

from hopftda.dynsys import (
    BzParams,
    HopfParams,
    IntegrationDiverged,
    LorenzParams,
    NoiseSpec,
    SystemId,
    TimeSeries,
    TrajectoryConfig,
    add_noise,
    integrate,
    rk4_step,
    rk4_step_field,
    state_dim,
    vector_field,
)

# One RK4 step of x' = x from x=1 with dt=0.1, expanded by hand:
# k1=1, k2=1.05, k3=1.0525, k4=1.10525 -> 1 + 0.1*6.31025/6
RK4_EXP_ONE_STEP = 1.1051708333333333
EXP_01 = 1.1051709180756477


def test_vector_field_hopf_origin_equilibrium():
    out = vector_field(HopfParams(mu=0.0, omega=1.0), (0.0, 0.0))
    assert np.array_equal(out, np.zeros(2))


def test_vector_field_lorenz_substitution():
    out = vector_field(LorenzParams(10.0, 28.0, 8.0 / 3.0), (1.0, 1.0, 1.0))
    assert np.array_equal(out, np.array([0.0, 26.0, 1.0 - 8.0 / 3.0]))


def test_vector_field_bz_substitution():
    out = vector_field(BzParams(a=10.0, b=3.0), (1.0, 1.0))
    assert np.array_equal(out, np.array([7.0, 1.5]))


def test_vector_field_rejects_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        vector_field(HopfParams(mu=0.0), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError, match="dimension"):
        vector_field(LorenzParams(), (1.0, 1.0))


def test_state_dims():
    assert state_dim(SystemId.HOPF_NORMAL_FORM) == 2
    assert state_dim(SystemId.LORENZ) == 3
    assert state_dim(SystemId.BZ_REDUCED) == 2


def test_param_validation():
    with pytest.raises(ValueError):
        HopfParams(mu=0.0, omega=0.0)
    with pytest.raises(ValueError):
        LorenzParams(sigma=-1.0)
    with pytest.raises(ValueError):
        LorenzParams(rho=-0.1)
    with pytest.raises(ValueError):
        BzParams(a=0.0)


def test_rk4_scalar_exponential_one_step():
    (y1,) = rk4_step_field(lambda s: (s[0],), (1.0,), 0.1)
    assert y1 == pytest.approx(RK4_EXP_ONE_STEP, abs=1e-15)
    assert abs(y1 - EXP_01) < 1e-7


def test_rk4_fixed_point_invariance():
    out = rk4_step(HopfParams(mu=0.5), (0.0, 0.0), 0.05)
    assert np.array_equal(out, np.zeros(2))


def test_rk4_step_halving_oracle_lorenz():
    params = LorenzParams(10.0, 28.0, 8.0 / 3.0)
    full = rk4_step(params, (1.0, 1.0, 1.0), 0.01)
    half = rk4_step(params, rk4_step(params, (1.0, 1.0, 1.0), 0.005), 0.005)
    # local truncation mismatch ~ C*dt^5 with C ~ 1e4 for these derivatives
    assert np.max(np.abs(full - half)) < 1e-5


def test_rk4_global_order_ratio():
    # global error on x' = x over [0,1] should shrink ~16x per halving
    def run(dt):
        y = (1.0,)
        for _ in range(round(1.0 / dt)):
            y = rk4_step_field(lambda s: (s[0],), y, dt)
        return abs(y[0] - math.e)

    ratio = run(0.1) / run(0.05)
    assert 12.0 <= ratio <= 20.0


def test_integrate_decay_to_origin():
    series = integrate(
        HopfParams(mu=-1.0),
        TrajectoryConfig(dt=0.01, n_steps=2_000, transient_steps=0),
    )
    assert abs(series.values[-1]) < 1e-3


def test_integrate_length_contract():
    series = integrate(
        HopfParams(mu=0.5),
        TrajectoryConfig(dt=0.01, n_steps=1_000, transient_steps=400),
    )
    assert len(series) == 600
    assert series.t0 == pytest.approx(4.0)


@pytest.mark.parametrize("mu", [0.25, 0.5, 1.0])
def test_hopf_limit_cycle_amplitude(mu):
    series = integrate(HopfParams(mu=mu), TrajectoryConfig())
    amplitude = float(np.max(np.abs(series.values)))
    assert amplitude == pytest.approx(math.sqrt(mu), rel=0.02)


def test_integrate_equilibrium_constant_series():
    # Lorenz origin is a fixed point for any parameters
    series = integrate(
        LorenzParams(10.0, 28.0, 8.0 / 3.0),
        TrajectoryConfig(dt=0.01, n_steps=500, transient_steps=0,
                         initial_state=(0.0, 0.0, 0.0)),
    )
    assert np.max(np.abs(series.values)) < 1e-9


def test_integrate_divergence_reports_step():
    with pytest.raises(IntegrationDiverged) as err:
        integrate(
            LorenzParams(10.0, 28.0, 8.0 / 3.0),
            TrajectoryConfig(dt=1.0, n_steps=100, transient_steps=0),
        )
    assert "step" in str(err.value)
    assert 0 <= err.value.step < 100


def test_trajectory_config_validation():
    with pytest.raises(ValueError):
        TrajectoryConfig(dt=0.0)
    with pytest.raises(ValueError):
        TrajectoryConfig(n_steps=100, transient_steps=100)
    with pytest.raises(ValueError):
        TrajectoryConfig(n_steps=100, transient_steps=99)  # recorded length 1


def test_time_series_validation():
    with pytest.raises(ValueError):
        TimeSeries(t0=0.0, dt=0.01, values=np.array([]))
    with pytest.raises(ValueError):
        TimeSeries(t0=0.0, dt=0.01, values=np.array([1.0, np.nan]))


def test_add_noise_zero_is_identity():
    series = integrate(HopfParams(mu=0.5), TrajectoryConfig(n_steps=200, transient_steps=0))
    assert add_noise(series, NoiseSpec(sigma_rel=0.0, seed=7)) is series


def test_add_noise_deterministic():
    series = integrate(HopfParams(mu=0.5), TrajectoryConfig(n_steps=500, transient_steps=0))
    a = add_noise(series, NoiseSpec(sigma_rel=0.05, seed=42))
    b = add_noise(series, NoiseSpec(sigma_rel=0.05, seed=42))
    assert np.array_equal(a.values, b.values)
    c = add_noise(series, NoiseSpec(sigma_rel=0.05, seed=43))
    assert not np.array_equal(a.values, c.values)


def test_add_noise_empirical_std():
    series = integrate(HopfParams(mu=1.0), TrajectoryConfig())
    noisy = add_noise(series, NoiseSpec(sigma_rel=0.05, seed=3))
    target = 0.05 * float(np.std(series.values))
    measured = float(np.std(noisy.values - series.values))
    assert abs(measured - target) <= 0.1 * target
