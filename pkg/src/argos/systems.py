"""Benchmark dynamical systems: definitions, integration, sampling, noise.

Each system carries both an executable right-hand side and a declarative
``true_support`` (exponent vector -> coefficient per equation).  The two are
redundant on purpose: the test suite checks that they agree, so the ground
truth used to judge identification success cannot drift from the dynamics
that generated the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._rng import seed_seq
from .errors import DivergenceError

# per-equation map: exponent vector (len m) -> coefficient
EquationSupport = dict[tuple[int, ...], float]


@dataclass(frozen=True)
class SystemDescriptor:
    """A benchmark ODE with its ground-truth monomial structure."""

    name: str
    dim: int
    params: dict
    true_support: tuple[EquationSupport, ...]
    ic_ranges: tuple[tuple[float, float], ...]
    default_dt: float
    rhs: Callable = field(repr=False, compare=False)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian corruption calibrated to a per-column SNR (dB)."""

    snr_db: float
    seed: int = 0

    def __post_init__(self):
        if not (self.snr_db >= 0):  # also rejects nan
            raise ValueError(f"snr_db must be >= 0 or inf, got {self.snr_db}")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    descriptor: SystemDescriptor
    seed: int = 0

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _linear2d(p, x):
    return np.array([-p["damping"] * x[0] + p["rotation"] * x[1],
                     -p["rotation"] * x[0] - p["damping"] * x[1]])


def _linear3d(p, x):
    return np.array([-p["damping"] * x[0] + p["rotation"] * x[1],
                     -p["rotation"] * x[0] - p["damping"] * x[1],
                     -p["decay"] * x[2]])


def _cubic2d(p, x):
    return np.array([-p["damping"] * x[0] ** 3 + p["rotation"] * x[1] ** 3,
                     -p["rotation"] * x[0] ** 3 - p["damping"] * x[1] ** 3])


def _lotka_volterra(p, x):
    return np.array([p["alpha"] * x[0] - p["zeta"] * x[0] * x[1],
                     p["delta"] * x[0] * x[1] - p["gamma"] * x[1]])


def _rossler(p, x):
    return np.array([-x[1] - x[2],
                     x[0] + p["a"] * x[1],
                     p["b"] + x[2] * (x[0] - p["c"])])


def _lorenz(p, x):
    return np.array([p["sigma"] * (x[1] - x[0]),
                     x[0] * (p["rho"] - x[2]) - x[1],
                     x[0] * x[1] - p["zeta"] * x[2]])


def _vanderpol(p, x):
    return np.array([x[1],
                     p["mu"] * (1.0 - x[0] ** 2) * x[1] - x[0]])


def _duffing(p, x):
    return np.array([x[1],
                     -p["gamma"] * x[1] - p["kappa"] * x[0] - p["epsilon"] * x[0] ** 3])


def _build_linear2d(p):
    return SystemDescriptor(
        name="linear2d", dim=2, params=p,
        true_support=(
            {(1, 0): -p["damping"], (0, 1): p["rotation"]},
            {(1, 0): -p["rotation"], (0, 1): -p["damping"]},
        ),
        ic_ranges=((1e-1, 1e3), (1e-1, 1e3)),
        default_dt=0.01,
        rhs=_linear2d,
    )


def _build_linear3d(p):
    return SystemDescriptor(
        name="linear3d", dim=3, params=p,
        true_support=(
            {(1, 0, 0): -p["damping"], (0, 1, 0): p["rotation"]},
            {(1, 0, 0): -p["rotation"], (0, 1, 0): -p["damping"]},
            {(0, 0, 1): -p["decay"]},
        ),
        ic_ranges=((1e-1, 1e3), (1e-1, 1e3), (1e-1, 1e3)),
        default_dt=0.01,
        rhs=_linear3d,
    )


def _build_cubic2d(p):
    return SystemDescriptor(
        name="cubic2d", dim=2, params=p,
        true_support=(
            {(3, 0): -p["damping"], (0, 3): p["rotation"]},
            {(3, 0): -p["rotation"], (0, 3): -p["damping"]},
        ),
        ic_ranges=((-2.0, 2.0), (-2.0, 2.0)),
        default_dt=0.01,
        rhs=_cubic2d,
    )


def _build_lotka_volterra(p):
    return SystemDescriptor(
        name="lotka_volterra", dim=2, params=p,
        true_support=(
            {(1, 0): p["alpha"], (1, 1): -p["zeta"]},
            {(1, 1): p["delta"], (0, 1): -p["gamma"]},
        ),
        ic_ranges=((1.0, 10.0), (1.0, 10.0)),
        default_dt=0.01,
        rhs=_lotka_volterra,
    )


def _build_rossler(p):
    return SystemDescriptor(
        name="rossler", dim=3, params=p,
        true_support=(
            {(0, 1, 0): -1.0, (0, 0, 1): -1.0},
            {(1, 0, 0): 1.0, (0, 1, 0): p["a"]},
            {(0, 0, 0): p["b"], (0, 0, 1): -p["c"], (1, 0, 1): 1.0},
        ),
        ic_ranges=((-10.0, 10.0), (-10.0, 10.0), (0.0, 20.0)),
        default_dt=0.01,
        rhs=_rossler,
    )


def _build_lorenz(p):
    return SystemDescriptor(
        name="lorenz", dim=3, params=p,
        true_support=(
            {(1, 0, 0): -p["sigma"], (0, 1, 0): p["sigma"]},
            {(1, 0, 0): p["rho"], (0, 1, 0): -1.0, (1, 0, 1): -1.0},
            {(1, 1, 0): 1.0, (0, 0, 1): -p["zeta"]},
        ),
        ic_ranges=((-15.0, 15.0), (-15.0, 15.0), (10.0, 40.0)),
        default_dt=0.001,
        rhs=_lorenz,
    )


def _build_vanderpol(p):
    return SystemDescriptor(
        name="vanderpol", dim=2, params=p,
        true_support=(
            {(0, 1): 1.0},
            {(1, 0): -1.0, (0, 1): p["mu"], (2, 1): -p["mu"]},
        ),
        ic_ranges=((-4.0, 4.0), (-4.0, 4.0)),
        default_dt=0.01,
        rhs=_vanderpol,
    )


def _build_duffing(p):
    return SystemDescriptor(
        name="duffing", dim=2, params=p,
        true_support=(
            {(0, 1): 1.0},
            {(1, 0): -p["kappa"], (0, 1): -p["gamma"], (3, 0): -p["epsilon"]},
        ),
        ic_ranges=((-2.0, 2.0), (-6.0, 6.0)),
        default_dt=0.01,
        rhs=_duffing,
    )


_REGISTRY = {
    "linear2d": (_build_linear2d, {"damping": 0.1, "rotation": 2.0}),
    "linear3d": (_build_linear3d, {"damping": 0.1, "rotation": 2.0, "decay": 0.3}),
    "cubic2d": (_build_cubic2d, {"damping": 0.1, "rotation": 2.0}),
    # Classic bounded predator-prey form; all four rates positive by default.
    "lotka_volterra": (_build_lotka_volterra,
                       {"alpha": 1.0, "zeta": 1.0, "delta": 1.0, "gamma": 1.0}),
    "rossler": (_build_rossler, {"a": 0.2, "b": 0.2, "c": 5.7}),
    "lorenz": (_build_lorenz, {"sigma": 10.0, "rho": 28.0, "zeta": 8.0 / 3.0}),
    "vanderpol": (_build_vanderpol, {"mu": 1.2}),
    "duffing": (_build_duffing, {"gamma": 1.0, "kappa": 1.0, "epsilon": 5.0}),
}

SYSTEM_NAMES = tuple(_REGISTRY)


def get_system(name: str, params: dict | None = None) -> SystemDescriptor:
    """Look up a benchmark system, optionally overriding its parameters."""
    if name not in _REGISTRY:
        raise ValueError(f"unknown system {name!r}; expected one of {SYSTEM_NAMES}")
    build, defaults = _REGISTRY[name]
    merged = dict(defaults)
    if params:
        unknown = set(params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
        merged.update(params)
    return build(merged)


def rhs_eval(descriptor: SystemDescriptor, state) -> np.ndarray:
    """Evaluate the system's right-hand side f(x) at one state."""
    state = np.asarray(state, dtype=float)
    if state.shape != (descriptor.dim,):
        raise ValueError(
            f"state must have shape ({descriptor.dim},), got {state.shape}"
        )
    if not np.all(np.isfinite(state)):
        raise ValueError("state must be finite")
    return descriptor.rhs(descriptor.params, state)


def integrate(descriptor: SystemDescriptor, x0, n: int, dt: float) -> Trajectory:
    """Fixed-step classical Runge-Kutta (4th order) from t = 0.

    Produces exactly ``n`` rows at t = 0, dt, ..., (n-1)*dt with row 0 equal
    to ``x0``.  Raises :class:`DivergenceError` if the state leaves the
    finite range (naming the offending step).
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (descriptor.dim,):
        raise ValueError(f"x0 must have shape ({descriptor.dim},), got {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")

    f = descriptor.rhs
    p = descriptor.params
    states = np.empty((n, descriptor.dim))
    states[0] = x0
    x = x0
    for i in range(1, n):
        k1 = f(p, x)
        k2 = f(p, x + 0.5 * dt * k1)
        k3 = f(p, x + 0.5 * dt * k2)
        k4 = f(p, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(i)
        states[i] = x
    times = np.arange(n) * dt
    return Trajectory(times=times, states=states, descriptor=descriptor)


def sample_initial_conditions(descriptor: SystemDescriptor, count: int,
                              seed: int) -> np.ndarray:
    """Draw ``count`` initial conditions, each coordinate uniform on its range.

    Returns an array of shape (count, m); rows are the draws.  Deterministic
    given the seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed_seq(seed))
    cols = [rng.uniform(lo, hi, size=count) for lo, hi in descriptor.ic_ranges]
    return np.column_stack(cols)


def noise_scales(states: np.ndarray, snr_db: float) -> np.ndarray:
    """Per-column noise standard deviation sigma_x * 10^(-SNR/20).

    sigma_x is the (n-1)-denominator sample standard deviation.  Constant
    columns get scale 0 (noise column of zeros, by contract).
    """
    sigma_x = np.std(states, axis=0, ddof=1)
    if math.isinf(snr_db):
        return np.zeros_like(sigma_x)
    return sigma_x * 10.0 ** (-snr_db / 20.0)


def add_noise(states: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Corrupt each column with zero-mean Gaussian noise at the requested SNR.

    SNR = inf returns an unmodified copy.  Each column draws from its own
    child stream of ``spec.seed``, so columns are independent and the result
    is bit-reproducible.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim != 2:
        raise ValueError("states must be a 2-d array")
    if not np.all(np.isfinite(states)):
        raise ValueError("states must be finite")
    if math.isinf(spec.snr_db):
        return states.copy()
    scales = noise_scales(states, spec.snr_db)
    n, m = states.shape
    out = states.copy()
    streams = seed_seq(spec.seed).spawn(m)
    for j in range(m):
        rng = np.random.default_rng(streams[j])
        out[:, j] += rng.normal(0.0, scales[j], size=n)
    return out
