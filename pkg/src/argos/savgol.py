"""Savitzky-Golay smoothing and differentiation with automatic window choice.

The filter fits a degree-4 polynomial to a sliding window by least squares
and reads off either the fitted value (v=0) or its first derivative (v=1)
at each sample.  The window length is chosen per column by scanning an odd
grid and minimizing the squared distance between the smoothed series and
the raw input itself.

Two behaviors worth knowing about:

* Boundary samples are filled by evaluating the polynomial fitted to the
  nearest full window at the off-center offsets, so the output always has
  the input's length.
* The window objective compares against the *noisy* input, which favors the
  least-smoothing window; on pure-noise input the selection degenerates to
  the smallest window.  This matches the selection rule used to produce the
  benchmark results and is kept verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError

MIN_WINDOW = 13
MAX_WINDOW = 101

# near-ties in the window objective (pure float jitter on exactly-representable
# signals) resolve to the smallest window
_TIE_RTOL = 1e-10


@dataclass(frozen=True)
class FilterConfig:
    """Polynomial order, window length, derivative order, sample spacing."""

    order: int = 4
    window: int = MIN_WINDOW
    deriv: int = 0
    dt: float = 1.0

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if self.window % 2 == 0 or self.window < self.order + 2:
            raise ValueError(
                f"window must be odd and >= order + 2, got {self.window}"
            )
        if self.deriv not in (0, 1):
            raise ValueError(f"deriv must be 0 or 1, got {self.deriv}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class SmoothedSignal:
    """Smoothed series, derivative series, and the window-selection trace."""

    x_smooth: np.ndarray
    x_dot: np.ndarray
    chosen_window: int
    mse_curve: dict[int, float]


def window_grid(n: int) -> tuple[int, ...]:
    """Odd window lengths 13, 15, ... up to min(n rounded odd, 101)."""
    if n < MIN_WINDOW:
        raise InsufficientDataError(
            f"need at least {MIN_WINDOW} samples for the smallest window, got {n}"
        )
    l_max = max(MIN_WINDOW, min(n - (n - 1) % 2, MAX_WINDOW))
    return tuple(range(MIN_WINDOW, l_max + 1, 2))


def _coefficient_extractor(window: int, order: int) -> tuple[np.ndarray, float]:
    """Least-squares map from window samples to polynomial coefficients.

    Offsets are rescaled to [-1, 1] before building the Vandermonde matrix so
    the normal equations stay well conditioned up to window 101.  Returns the
    (order+1, window) extractor and the rescaling half-width.
    """
    half = (window - 1) / 2.0
    z = (np.arange(window) - half) / half
    vand = z[:, None] ** np.arange(order + 1)[None, :]
    return np.linalg.pinv(vand), half


def _eval_weights(window: int, order: int, deriv: int, dt: float,
                  positions: np.ndarray) -> np.ndarray:
    """Rows of weights giving the fit (or its derivative) at given offsets.

    ``positions`` are sample offsets relative to the window center, e.g. 0
    for the centered filter or -half .. -1 for leading boundary samples.
    """
    extract, half = _coefficient_extractor(window, order)
    zeta = np.asarray(positions, dtype=float) / half
    powers = np.arange(order + 1)
    if deriv == 0:
        eval_rows = zeta[:, None] ** powers[None, :]
        return eval_rows @ extract
    # d/dt of sum c_j (z/half)^j with z in sample units, then per-second via dt
    dpowers = np.zeros((zeta.size, order + 1))
    dpowers[:, 1:] = powers[1:] * zeta[:, None] ** (powers[1:] - 1)[None, :]
    return (dpowers @ extract) / (half * dt)


def sg_weights(config: FilterConfig) -> np.ndarray:
    """Convolution weights of the centered filter.

    For deriv=0 the weights sum to 1 (constants are reproduced); for deriv=1
    they sum to 0 and are scaled by 1/dt so the output is per second.
    """
    return _eval_weights(config.window, config.order, config.deriv, config.dt,
                         np.array([0.0]))[0]


def sg_apply(x: np.ndarray, config: FilterConfig) -> np.ndarray:
    """Filter a series, keeping the output length equal to the input length."""
    x = np.asarray(x, dtype=float)
    n = x.size
    l = config.window
    if n < l:
        raise InsufficientDataError(f"series of length {n} shorter than window {l}")
    half = (l - 1) // 2

    center = sg_weights(config)
    out = np.empty(n)
    # np.convolve flips its kernel; pre-flip so out[i] = sum_j w[j] x[i+j]
    out[half:n - half] = np.convolve(x, center[::-1], mode="valid")

    head_pos = np.arange(-half, 0)
    head_w = _eval_weights(l, config.order, config.deriv, config.dt, head_pos)
    out[:half] = head_w @ x[:l]
    tail_pos = np.arange(1, half + 1)
    tail_w = _eval_weights(l, config.order, config.deriv, config.dt, tail_pos)
    out[n - half:] = tail_w @ x[n - l:]
    return out


def auto_smooth(x_noisy: np.ndarray, dt: float, order: int = 4) -> SmoothedSignal:
    """Pick the window minimizing mean squared distance to the raw series.

    Scans :func:`window_grid`, smooths with each window, and keeps the
    window with the smallest MSE against ``x_noisy`` itself (near-ties go to
    the smallest window).  Returns both the smoothed series and the
    derivative series at the chosen window.
    """
    x_noisy = np.asarray(x_noisy, dtype=float)
    grid = window_grid(x_noisy.size)
    mse_curve: dict[int, float] = {}
    smoothed: dict[int, np.ndarray] = {}
    for l in grid:
        s = sg_apply(x_noisy, FilterConfig(order=order, window=l, deriv=0, dt=dt))
        mse_curve[l] = float(np.mean((s - x_noisy) ** 2))
        smoothed[l] = s
    floor = min(mse_curve.values()) + _TIE_RTOL * float(np.mean(x_noisy ** 2) + 1e-300)
    best = next(l for l in grid if mse_curve[l] <= floor)
    x_dot = sg_apply(x_noisy, FilterConfig(order=order, window=best, deriv=1, dt=dt))
    return SmoothedSignal(
        x_smooth=smoothed[best], x_dot=x_dot,
        chosen_window=best, mse_curve=mse_curve,
    )


def smooth_columns(states: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray, tuple[int, ...]]:
    """Column-wise auto_smooth; returns (X, X_dot, chosen windows)."""
    states = np.asarray(states, dtype=float)
    cols = [auto_smooth(states[:, j], dt) for j in range(states.shape[1])]
    x = np.column_stack([c.x_smooth for c in cols])
    x_dot = np.column_stack([c.x_dot for c in cols])
    return x, x_dot, tuple(c.chosen_window for c in cols)
