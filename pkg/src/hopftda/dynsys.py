"""Benchmark dynamical systems and fixed-step RK4 integration.

Three planar/3-D flows that undergo a Hopf-type transition as one control
parameter sweeps: the supercritical Hopf normal form, the Lorenz system, and
a reduced two-variable Belousov-Zhabotinsky (chlorite-iodide) model. A scalar
observable is recorded after a transient is discarded; observational Gaussian
noise can be added to the recorded series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

_BIG = 1e15  # state magnitude treated as divergence


class IntegrationDiverged(RuntimeError):
    """Raised when the integrated state leaves the finite range.

    The step index reached is kept in ``step``.
    """

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class SystemId(Enum):
    """Closed enumeration of the supported systems."""

    HOPF_NORMAL_FORM = "hopf"
    LORENZ = "lorenz"
    BZ_REDUCED = "bz"


_STATE_DIM = {
    SystemId.HOPF_NORMAL_FORM: 2,
    SystemId.LORENZ: 3,
    SystemId.BZ_REDUCED: 2,
}

DEFAULT_INITIAL_STATE = {
    SystemId.HOPF_NORMAL_FORM: (0.5, 0.0),
    SystemId.LORENZ: (1.0, 1.0, 1.0),
    SystemId.BZ_REDUCED: (1.0, 1.0),
}


@dataclass(frozen=True)
class HopfParams:
    """Supercritical Hopf normal form.

    dx/dt = mu*x - omega*y - x*(x^2 + y^2)
    dy/dt = omega*x + mu*y - y*(x^2 + y^2)

    The origin is stable for mu < 0; for mu > 0 a limit cycle of radius
    sqrt(mu) attracts. Critical value mu_c = 0.
    """

    mu: float
    omega: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")

    @property
    def system(self) -> SystemId:
        return SystemId.HOPF_NORMAL_FORM


@dataclass(frozen=True)
class LorenzParams:
    """Lorenz system.

    dx/dt = sigma*(y - x)
    dy/dt = x*(rho - z) - y
    dz/dt = x*y - beta*z

    With sigma=10, beta=8/3 the fixed points C+- lose stability at
    rho_c = sigma*(sigma + beta + 3)/(sigma - beta - 1) = 470/19 ~ 24.74.
    """

    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0

    def __post_init__(self):
        if not (self.sigma > 0 and self.beta > 0):
            raise ValueError("sigma and beta must be > 0")
        if self.rho < 0:
            raise ValueError(f"rho must be >= 0, got {self.rho}")

    @property
    def system(self) -> SystemId:
        return SystemId.LORENZ

    @property
    def rho_critical(self) -> float:
        """Linear-stability threshold of the C+- fixed points."""
        return self.sigma * (self.sigma + self.beta + 3.0) / (self.sigma - self.beta - 1.0)


@dataclass(frozen=True)
class BzParams:
    """Reduced two-variable Belousov-Zhabotinsky oscillator.

    dx/dt = a - x - 4*x*y / (1 + x^2)
    dy/dt = b*x * (1 - y / (1 + x^2))

    The equilibrium (a/5, 1 + a^2/25) changes stability at
    b_c = 3a/5 - 25/a (oscillatory below, stable above).
    """

    a: float = 10.0
    b: float = 3.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be > 0")

    @property
    def system(self) -> SystemId:
        return SystemId.BZ_REDUCED

    @property
    def b_critical(self) -> float:
        """Trace-zero (Hopf) condition of the linearization at the equilibrium."""
        return 3.0 * self.a / 5.0 - 25.0 / self.a


SystemParams = Union[HopfParams, LorenzParams, BzParams]


def state_dim(system: SystemId) -> int:
    return _STATE_DIM[system]


def _rhs(params: SystemParams) -> Callable[[tuple], tuple]:
    """Right-hand side as a float-tuple closure (fast path for tight loops)."""
    if isinstance(params, HopfParams):
        mu, omega = params.mu, params.omega

        def f(state):
            x, y = state
            r2 = x * x + y * y
            return (mu * x - omega * y - x * r2, omega * x + mu * y - y * r2)

        return f
    if isinstance(params, LorenzParams):
        sigma, rho, beta = params.sigma, params.rho, params.beta

        def f(state):
            x, y, z = state
            return (sigma * (y - x), x * (rho - z) - y, x * y - beta * z)

        return f
    if isinstance(params, BzParams):
        a, b = params.a, params.b

        def f(state):
            x, y = state
            q = 1.0 + x * x
            return (a - x - 4.0 * x * y / q, b * x * (1.0 - y / q))

        return f
    raise TypeError(f"unsupported params type: {type(params).__name__}")


def vector_field(params: SystemParams, state: Sequence[float]) -> np.ndarray:
    """Evaluate the system right-hand side at ``state``.

    Parameters
    ----------
    params : SystemParams
        Parameter record identifying the system.
    state : sequence of float
        State vector; length must match the system dimension.

    Returns
    -------
    numpy.ndarray
        Time derivative of the state.
    """
    expected = state_dim(params.system)
    state = tuple(float(s) for s in state)
    if len(state) != expected:
        raise ValueError(
            f"{params.system.value} expects state dimension {expected}, got {len(state)}"
        )
    return np.array(_rhs(params)(state), dtype=float)


def rk4_step_field(field: Callable[[tuple], tuple], state: tuple, dt: float) -> tuple:
    """One classical RK4 step of an arbitrary autonomous field on float tuples."""
    k1 = field(state)
    half = 0.5 * dt
    k2 = field(tuple(s + half * k for s, k in zip(state, k1)))
    k3 = field(tuple(s + half * k for s, k in zip(state, k2)))
    k4 = field(tuple(s + dt * k for s, k in zip(state, k3)))
    sixth = dt / 6.0
    return tuple(
        s + sixth * (a + 2.0 * (b + c) + d)
        for s, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def rk4_step(params: SystemParams, state: Sequence[float], dt: float) -> np.ndarray:
    """One classical RK4 step of the given system (local error O(dt^5))."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    expected = state_dim(params.system)
    state = tuple(float(s) for s in state)
    if len(state) != expected:
        raise ValueError(
            f"{params.system.value} expects state dimension {expected}, got {len(state)}"
        )
    out = rk4_step_field(_rhs(params), state, dt)
    if not all(-_BIG < s < _BIG for s in out):
        raise IntegrationDiverged("state became non-finite within one step", step=0)
    return np.array(out, dtype=float)


@dataclass(frozen=True)
class TrajectoryConfig:
    """Fixed-step integration run description.

    ``n_steps`` RK4 steps of size ``dt`` are taken; the states at steps
    ``transient_steps .. n_steps-1`` are recorded (pre-step states, so the
    initial state is included when ``transient_steps`` is 0), and the
    ``observe_index`` coordinate becomes the scalar series.
    """

    dt: float = 0.01
    n_steps: int = 20_000
    transient_steps: int = 10_000
    initial_state: Optional[Tuple[float, ...]] = None
    observe_index: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if not 0 <= self.transient_steps < self.n_steps:
            raise ValueError(
                f"transient_steps must be in [0, n_steps), got {self.transient_steps}"
            )
        if self.n_steps - self.transient_steps < 2:
            raise ValueError("recorded length n_steps - transient_steps must be >= 2")
        if self.observe_index < 0:
            raise ValueError("observe_index must be >= 0")


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar series."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a nonempty 1-D array")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must all be finite")

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)


@dataclass(frozen=True)
class NoiseSpec:
    """Observational Gaussian noise, scaled relative to the clean series."""

    sigma_rel: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma_rel < 0:
            raise ValueError(f"sigma_rel must be >= 0, got {self.sigma_rel}")


def integrate(params: SystemParams, config: TrajectoryConfig) -> TimeSeries:
    """Integrate the system and record a scalar observable.

    Parameters
    ----------
    params : SystemParams
        System and parameter values.
    config : TrajectoryConfig
        Step size, lengths, initial state and observed coordinate. A ``None``
        initial state selects the per-system default.

    Returns
    -------
    TimeSeries
        Post-transient samples of the observed coordinate,
        length ``n_steps - transient_steps``.

    Raises
    ------
    IntegrationDiverged
        If the state leaves the finite range; the exception names the step
        index reached.
    """
    dim = state_dim(params.system)
    init = config.initial_state
    if init is None:
        init = DEFAULT_INITIAL_STATE[params.system]
    init = tuple(float(s) for s in init)
    if len(init) != dim:
        raise ValueError(f"initial_state must have dimension {dim}, got {len(init)}")
    if not all(math.isfinite(s) for s in init):
        raise ValueError("initial_state must be finite")
    if config.observe_index >= dim:
        raise ValueError(
            f"observe_index {config.observe_index} out of range for dimension {dim}"
        )

    f = _rhs(params)
    dt = config.dt
    obs = config.observe_index
    n_record = config.n_steps - config.transient_steps
    out = np.empty(n_record, dtype=float)
    state = init
    j = 0
    for k in range(config.n_steps):
        if k >= config.transient_steps:
            out[j] = state[obs]
            j += 1
        state = rk4_step_field(f, state, dt)
        if not all(-_BIG < s < _BIG for s in state):
            raise IntegrationDiverged("state became non-finite", step=k)
    return TimeSeries(t0=config.transient_steps * dt, dt=dt, values=out)


def add_noise(series: TimeSeries, spec: NoiseSpec) -> TimeSeries:
    """Add i.i.d. Gaussian noise with std = sigma_rel * std(series).

    ``sigma_rel = 0`` returns the input unchanged. Fixed (seed, sigma_rel,
    series) triples produce identical outputs.
    """
    if spec.sigma_rel == 0:
        return series
    sigma = spec.sigma_rel * float(np.std(series.values))
    rng = np.random.default_rng(spec.seed)
    noisy = series.values + rng.normal(0.0, sigma, size=series.values.size)
    return TimeSeries(t0=series.t0, dt=series.dt, values=noisy)
