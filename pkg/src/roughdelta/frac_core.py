"""Core fractional machinery.

Scalar special-function constants, the fractional Brownian motion (fBm)
covariance and its Volterra kernel, Riemann-Liouville fractional integral and
derivative operators on grids, and an iterated-integral (shuffle) identity
checker.

All operations are pure functions of their inputs and safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

__all__ = [
    "HurstParam",
    "SampledFunction",
    "FracOrder",
    "cov_rh",
    "c_h",
    "big_c_h",
    "kernel_kh",
    "frac_int_left",
    "frac_int_left_matrix",
    "frac_deriv_left",
    "kh_inverse_ac",
    "shuffle_check",
]


@dataclass(frozen=True)
class HurstParam:
    """Hurst exponent restricted to the rough regime (0, 1/2).

    Parameters
    ----------
    h : float
        Roughness exponent. h = 1/2 would recover the Wiener process and is
        excluded; the kernel and constants below all assume h < 1/2.
    """

    h: float

    def __post_init__(self) -> None:
        if not 0.0 < self.h < 0.5:
            raise ValueError(f"Hurst parameter must lie in (0, 1/2), got {self.h}")

    def strong_solution_valid(self, d: int) -> bool:
        """Whether h is below the strong-solution threshold 1/(2(d+2))."""
        return self.h < 1.0 / (2 * (d + 2))

    def continuous_version_valid(self, d: int) -> bool:
        """Whether h is below the continuous-version threshold 1/(2(d+3))."""
        return self.h < 1.0 / (2 * (d + 3))


@dataclass(frozen=True)
class SampledFunction:
    """A real function sampled on a strictly increasing time grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a non-empty 1-d array")
        if values.shape != grid.shape:
            raise ValueError("values and grid must have the same length")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, f: Callable[[np.ndarray], np.ndarray], grid: np.ndarray) -> "SampledFunction":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(f(grid), dtype=float))


@dataclass(frozen=True)
class FracOrder:
    """Order of a fractional integral/derivative, in (0, 1]."""

    alpha: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"fractional order must lie in (0, 1], got {self.alpha}")


def cov_rh(h: HurstParam, t, s):
    """fBm covariance R_H(t, s) = (s^2H + t^2H - |t-s|^2H) / 2.

    Accepts scalars or broadcastable arrays; symmetric in (t, s).
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0) or np.any(s < 0):
        raise ValueError("times must be non-negative")
    hh = 2.0 * h.h
    out = 0.5 * (s**hh + t**hh - np.abs(t - s) ** hh)
    return float(out) if out.ndim == 0 else out


def c_h(h: HurstParam) -> float:
    """Kernel normalization sqrt(2H / ((1-2H) B(1-2H, H+1/2)))."""
    hv = h.h
    beta = math.gamma(1 - 2 * hv) * math.gamma(hv + 0.5) / math.gamma(1.5 - hv)
    return math.sqrt(2 * hv / ((1 - 2 * hv) * beta))


def big_c_h(h: HurstParam) -> float:
    """Sensitivity-representation constant 1 / (c_H Gamma(1/2+H) Gamma(1/2-H))."""
    hv = h.h
    return 1.0 / (c_h(h) * math.gamma(0.5 + hv) * math.gamma(0.5 - hv))


def _beta_tail(h: float, x):
    """B(1-2H, H+1/2) * (1 - I_x(1-2H, H+1/2)), I the regularized incomplete beta.

    Equals the inner kernel integral int_s^t u^{H-3/2} (u-s)^{H-1/2} du after
    the substitution u = s/z, with x = s/t; exact up to special-function
    rounding, which is why no quadrature is involved here.
    """
    bfull = math.gamma(1 - 2 * h) * math.gamma(h + 0.5) / math.gamma(1.5 - h)
    return bfull * (1.0 - special.betainc(1 - 2 * h, h + 0.5, x))


def _kernel_vec(h: float, t, s):
    """Volterra kernel K_H(t, s), vectorized, no argument validation."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    ch = c_h(HurstParam(h))
    return ch * (
        (t / s) ** (h - 0.5) * (t - s) ** (h - 0.5)
        + (0.5 - h) * s ** (h - 0.5) * _beta_tail(h, s / t)
    )


def kernel_kh(h: HurstParam, t: float, s: float) -> float:
    """Volterra kernel K_H(t, s) of the fBm representation, for 0 < s < t.

    Diverges like (t-s)^{H-1/2} as s -> t and like s^{H-1/2} as s -> 0; both
    exponents are integrable, and the function is finite for every s strictly
    inside (0, t).
    """
    if s <= 0 or s >= t:
        raise ValueError(f"kernel requires 0 < s < t, got s={s}, t={t}")
    return float(_kernel_vec(h.h, t, s))


def _cell_coeffs_int(alpha: float, x: np.ndarray):
    """Product-integration coefficient matrices for the left fractional integral.

    For piecewise-linear data on grid x, the integral over cell [x_j, x_{j+1}]
    against the kernel (x_i - y)^{alpha-1} is exact.  Returns (W0, W1) such
    that I^alpha f(x_i) = sum_j W0[i,j] f_j + W1[i,j] f_{j+1}.
    """
    X = x[:, None]
    Y0 = x[None, :-1]
    Y1 = x[None, 1:]
    H = Y1 - Y0
    mask = X >= Y1  # cells [x_j, x_{j+1}] entirely left of the evaluation point
    A = np.where(mask, X - Y1, 1.0)
    B = np.where(mask, X - Y0, 1.0)
    P1 = (B**alpha - A**alpha) / alpha
    P2 = (B ** (alpha + 1) - A ** (alpha + 1)) / (alpha + 1)
    g = 1.0 / math.gamma(alpha)
    W0 = np.where(mask, g * (P2 - A * P1) / H, 0.0)
    W1 = np.where(mask, g * (B * P1 - P2) / H, 0.0)
    return W0, W1


def frac_int_left_matrix(alpha: FracOrder, grid: np.ndarray, a: float) -> np.ndarray:
    """Linear operator L with (I^alpha_{a+} f)(grid) = L @ f(grid).

    Exposed separately so that per-path transforms (which reuse one grid for
    many integrands) cost a single matrix-vector product.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    if grid[0] != a:
        raise ValueError(f"lower endpoint a={a} must equal grid start {grid[0]}")
    n = grid.size
    L = np.zeros((n, n))
    if n > 1:
        W0, W1 = _cell_coeffs_int(alpha.alpha, grid)
        L[:, :-1] += W0
        L[:, 1:] += W1
    return L


def frac_int_left(alpha: FracOrder, f: SampledFunction, a: float) -> SampledFunction:
    """Left-sided Riemann-Liouville fractional integral I^alpha_{a+} f on f's grid.

    The sampled data is treated as piecewise linear and the power kernel is
    integrated exactly on each cell (product integration), so the result is
    exact for affine f and second-order accurate for smooth f.
    """
    L = frac_int_left_matrix(alpha, f.grid, a)
    return SampledFunction(f.grid, L @ f.values)


def frac_deriv_left(alpha: FracOrder, f: SampledFunction, a: float) -> SampledFunction:
    """Left-sided Riemann-Liouville fractional derivative D^alpha_{a+} f.

    Uses the Marchaud-style representation

        D^alpha f(x) = [ f(x)/(x-a)^alpha
                         + alpha * int_a^x (f(x)-f(y)) (x-y)^{-alpha-1} dy ]
                       / Gamma(1-alpha)

    with the increment integral product-integrated against piecewise-linear
    data.  At x = a the formula value is 0 when f(a) = 0 (the one-sided limit)
    and +/-inf otherwise.  alpha = 1 degrades to the ordinary derivative.
    """
    grid = f.grid
    vals = f.values
    if grid.size == 0:
        raise ValueError("empty grid")
    if grid[0] != a:
        raise ValueError(f"lower endpoint a={a} must equal grid start {grid[0]}")
    al = alpha.alpha
    if al == 1.0:
        return SampledFunction(grid, np.gradient(vals, grid))
    n = grid.size
    out = np.zeros(n)
    ginv = 1.0 / math.gamma(1 - al)
    X = grid[:, None]
    Y0 = grid[None, :-1]
    Y1 = grid[None, 1:]
    H = Y1 - Y0
    strict = X > Y1  # cells strictly left of x_i
    A = np.where(strict, X - Y1, 1.0)
    B = np.where(strict, X - Y0, 1.0)
    Q1 = (A ** (-al) - B ** (-al)) / al
    Qm = (B ** (1 - al) - A ** (1 - al)) / (1 - al)
    # integral of (f(x)-f(y)) u^{-alpha-1} over interior cells
    contrib = (
        vals[:, None] * Q1
        - (vals[None, :-1] * (Qm - A * Q1) + vals[None, 1:] * (B * Q1 - Qm)) / H
    )
    inner = np.sum(np.where(strict, contrib, 0.0), axis=1)
    # cell adjacent to x_i: A = 0, the f(x)-f(y) ~ slope * u cancellation is exact
    i = np.arange(1, n)
    hlast = grid[i] - grid[i - 1]
    inner[1:] += (vals[i] - vals[i - 1]) * hlast**-al / (1 - al)
    out[1:] = ginv * (vals[1:] * (grid[1:] - a) ** -al + al * inner[1:])
    out[0] = 0.0 if vals[0] == 0.0 else math.copysign(math.inf, vals[0])
    if np.any(np.isnan(out)):
        raise FloatingPointError("NaN in fractional derivative output")
    return SampledFunction(grid, out)


def _kh_inverse_norm(h: HurstParam) -> float:
    """Prefactor 1 / (c_H Gamma(H + 1/2)) of the inverse kernel transform.

    With this normalization the composition with the kernel is the identity:
    integrating K_H(t, .) against the transform of phi recovers phi(t)
    (verified for power functions, where both sides are closed-form).
    """
    return 1.0 / (c_h(h) * math.gamma(h.h + 0.5))


def kh_inverse_ac(h: HurstParam, phi_prime: SampledFunction) -> SampledFunction:
    """Inverse kernel transform for absolutely continuous inputs.

    Computes s -> s^{H-1/2} (I^{1/2-H}_{0+} g)(s) / (c_H Gamma(H + 1/2)) with
    g(s) = s^{1/2-H} phi'(s), where phi' is the sampled derivative of the
    transformed function.  The value at s = 0 is set to 0, the limiting value
    for bounded phi'.
    """
    grid = phi_prime.grid
    if grid[0] != 0.0:
        raise ValueError("grid must start at 0")
    hv = h.h
    g = np.zeros_like(phi_prime.values)
    g[1:] = grid[1:] ** (0.5 - hv) * phi_prime.values[1:]
    inner = frac_int_left(FracOrder(0.5 - hv), SampledFunction(grid, g), 0.0)
    out = np.zeros_like(g)
    out[1:] = grid[1:] ** (hv - 0.5) * inner.values[1:]
    return SampledFunction(grid, _kh_inverse_norm(h) * out)


def kh_inverse_matrix(h: HurstParam, grid: np.ndarray) -> np.ndarray:
    """Matrix form of :func:`kh_inverse_ac` on a fixed grid (row 0 is zero)."""
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0:
        raise ValueError("grid must start at 0")
    hv = h.h
    L = frac_int_left_matrix(FracOrder(0.5 - hv), grid, 0.0)
    left = np.zeros_like(grid)
    left[1:] = grid[1:] ** (hv - 0.5)
    right = np.zeros_like(grid)
    right[1:] = grid[1:] ** (0.5 - hv)
    return _kh_inverse_norm(h) * left[:, None] * L * right[None, :]


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def _iterated(outer: np.ndarray, inner: np.ndarray, x: np.ndarray) -> float:
    """int f_outer(s) F_inner(s) ds over [x0, xN], exact for piecewise-linear data.

    F_inner is the running integral of the piecewise-linear inner function
    (piecewise quadratic), so the outer integrand is piecewise cubic and
    Simpson's rule on each cell with the exact midpoint value is exact.
    """
    F = _cumtrapz(inner, x)
    hseg = np.diff(x)
    fmid = 0.5 * (outer[1:] + outer[:-1])
    imid = 0.5 * (inner[1:] + inner[:-1])
    Fmid = F[:-1] + 0.25 * (inner[:-1] + imid) * hseg
    cells = hseg / 6.0 * (outer[:-1] * F[:-1] + 4.0 * fmid * Fmid + outer[1:] * F[1:])
    return float(np.sum(cells))


def shuffle_check(
    f1: SampledFunction, f2: SampledFunction, theta: float, t: float
) -> tuple[float, float]:
    """Both sides of the two-factor shuffle identity over [theta, t].

    lhs is the product of the two single integrals; rhs is the sum of the two
    iterated integrals over the ordered simplex (the two shuffles of one-letter
    words).  Both sides are evaluated exactly for the piecewise-linear
    interpolants of the sampled data, so for a common grid the identity holds
    to rounding accuracy; against smooth ground truth both sides carry the
    same O(h^2) interpolation error.
    """
    if not np.array_equal(f1.grid, f2.grid):
        raise ValueError("f1 and f2 must share a grid")
    grid = f1.grid
    i0 = int(np.searchsorted(grid, theta))
    i1 = int(np.searchsorted(grid, t))
    if not (math.isclose(grid[i0], theta, abs_tol=1e-12) and math.isclose(grid[i1], t, abs_tol=1e-12)):
        raise ValueError("theta and t must be grid points")
    if i0 >= i1:
        raise ValueError("theta must precede t on the grid")
    x = grid[i0 : i1 + 1]
    v1 = f1.values[i0 : i1 + 1]
    v2 = f2.values[i0 : i1 + 1]
    int1 = float(np.trapezoid(v1, x))
    int2 = float(np.trapezoid(v2, x))
    lhs = int1 * int2
    rhs = _iterated(v1, v2, x) + _iterated(v2, v1, x)
    return lhs, rhs
