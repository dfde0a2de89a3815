"""Fractional calculus on sampled functions: Riemann-Liouville integrals,
Weyl-form derivatives, and the Young (Riemann-Stieltjes) integral through the
fractional integration-by-parts identity.

All operators integrate the piecewise-linear interpolant of the samples
exactly against the singular power kernels, cell by cell.  On a uniform grid
the cell weights depend only on the node offset, so each operator is a pair of
discrete convolutions (O(n^2) work in C, no Python-level loops).

Right-sided operators are defined without the complex unit-modulus phase of
the classical definition; the two phases in the integration-by-parts product
multiply to -1, which `young_integral` applies explicitly, so every result is
real.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma

import numpy as np
from scipy.special import beta as _beta

from mvfbm.fbm import TimeGrid


class RegularityError(ValueError):
    """A Hölder-exponent precondition of the Young integral failed."""


@dataclass(frozen=True)
class SampledFunction:
    """Real function sampled on a uniform grid."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(
                f"values shape {v.shape} does not match grid with n={self.grid.n}"
            )
        # Weyl derivatives mark their singular boundary node as NaN; interior
        # values must always be finite.
        if not np.all(np.isfinite(v[1:-1])) or np.any(np.isinf(v[[0, -1]])):
            raise ValueError("sampled values must be finite")


@dataclass(frozen=True)
class FractionalOrder:
    """Order of a fractional integral ((0,1]) or derivative ((0,1))."""

    alpha: float

    def require_integral(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"integral order must be in (0,1], got {self.alpha}")

    def require_derivative(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"derivative order must be in (0,1), got {self.alpha}")


def _as_order(alpha) -> FractionalOrder:
    return alpha if isinstance(alpha, FractionalOrder) else FractionalOrder(float(alpha))


def rl_integral_left(f: SampledFunction, alpha) -> SampledFunction:
    """Left Riemann-Liouville integral I^a_{a+}f at the grid nodes."""
    order = _as_order(alpha)
    order.require_integral()
    a = order.alpha
    n, h = f.grid.n, f.grid.dt
    v = f.values
    df = np.diff(v)

    g = np.arange(1, n + 1, dtype=float)
    ga = g**a
    gam = np.concatenate([[0.0], ga[:-1]])  # (g-1)^alpha
    # Exact cell integrals of the linear interpolant against (x-y)^{alpha-1}:
    # constant part and slope part, indexed by node offset g = k - j.
    p_w = h**a * (ga - gam) / a
    r_w = h**a * (
        g * (ga - gam) / a - (g ** (a + 1) - gam * np.concatenate([[0.0], g[:-1]])) / (a + 1)
    )

    out = np.zeros(n + 1)
    out[1:] = (np.convolve(v[:n], p_w)[:n] + np.convolve(df, r_w)[:n]) / gamma(a)
    return SampledFunction(grid=f.grid, values=out)


def rl_integral_right(f: SampledFunction, alpha) -> SampledFunction:
    """Right Riemann-Liouville integral (phase dropped), by reflection."""
    flipped = SampledFunction(grid=f.grid, values=f.values[::-1])
    return SampledFunction(
        grid=f.grid, values=rl_integral_left(flipped, alpha).values[::-1]
    )


def weyl_derivative_left(f: SampledFunction, alpha) -> SampledFunction:
    """Weyl-form left derivative at nodes 1..n; node 0 is NaN (singular)."""
    order = _as_order(alpha)
    order.require_derivative()
    a = order.alpha
    n, h = f.grid.n, f.grid.dt
    v = f.values
    df = np.diff(v)

    g = np.arange(1, n + 1, dtype=float)
    gm = np.concatenate([[1.0], g[:-1]])  # g-1, placeholder 1 at g=1
    # T(g): exact integral of w^{-alpha-1} over the cell at offset g.  The g=1
    # cell pairs with a coefficient that is identically zero (the interpolant
    # of f(x)-f(y) vanishes at y=x), so T(1) := 0 avoids the 0*inf product.
    t_w = h ** (-a) * (gm ** (-a) - g ** (-a)) / a
    t_w[0] = 0.0
    gm[0] = 0.0
    u_w = h ** (-a) * (g ** (1 - a) - gm ** (1 - a)) / (1 - a)

    conv_f = np.convolve(v[:n], t_w)[:n]
    conv_gdf = np.convolve(df, g * t_w)[:n]
    conv_udf = np.convolve(df, u_w)[:n]
    ct = np.cumsum(t_w)

    k = np.arange(1, n + 1, dtype=float)
    s = v[1:] * ct - conv_f - conv_gdf + conv_udf
    out = np.empty(n + 1)
    out[0] = np.nan
    out[1:] = (v[1:] * (k * h) ** (-a) + a * s) / gamma(1 - a)
    return SampledFunction(grid=f.grid, values=out)


def weyl_derivative_right(f: SampledFunction, alpha) -> SampledFunction:
    """Weyl-form right derivative (phase dropped) at nodes 0..n-1; node n NaN."""
    flipped = SampledFunction(grid=f.grid, values=f.values[::-1])
    return SampledFunction(
        grid=f.grid, values=weyl_derivative_left(flipped, alpha).values[::-1]
    )


def estimate_holder_exponent(f: SampledFunction, max_lags: int = 12) -> float:
    """Discrete Hölder exponent from a log-log fit of dyadic-lag increments.

    Returns 1.0 for (numerically) constant functions.
    """
    v = f.values
    n = f.grid.n
    scale = np.max(np.abs(v)) or 1.0
    lags, sups = [], []
    lag = 1
    while lag <= max(1, n // 4) and len(lags) < max_lags:
        sup = np.max(np.abs(v[lag:] - v[:-lag]))
        if sup > 1e-14 * scale:
            lags.append(lag * f.grid.dt)
            sups.append(sup)
        lag *= 2
    if len(lags) < 2:
        return 1.0
    slope = np.polyfit(np.log(lags), np.log(sups), 1)[0]
    return float(min(max(slope, 1e-6), 1.0))


def default_young_alpha(lam: float, mu: float, eps: float = 1e-3) -> float:
    """Center the order in the admissible window (1-mu, lam)."""
    if lam + mu <= 1.0:
        raise RegularityError(
            f"exponent sum {lam + mu:.4f} <= 1: no admissible order exists"
        )
    return float(np.clip(0.5 * (1.0 + lam - mu), 1.0 - mu + eps, lam - eps))


def young_integral(
    f: SampledFunction,
    g: SampledFunction,
    alpha=None,
    regularity_margin: float = 0.1,
) -> float:
    """Riemann-Stieltjes integral of f against g via fractional derivatives.

    Both inputs are read as their piecewise-linear interpolants.  The left
    Weyl derivative of such an interpolant is exactly

        f(a) (x-a)^{-alpha} / Gamma(1-alpha)
        + sum_j  dm_j (x - u_j)_+^{1-alpha} / Gamma(2-alpha),

    one shifted power per slope jump dm_j (and mirrored for the right
    derivative of g - g(b), whose boundary term vanishes).  Every term in the
    resulting product integral is a Beta integral in closed form, so the
    product formula is evaluated exactly for the interpolants: no quadrature
    error, only interpolation error.  The assembly collapses to a single
    convolution of the two slope-jump sequences.
    """
    if f.grid != g.grid:
        raise ValueError("f and g must share a grid")
    n, h = f.grid.n, f.grid.dt
    if n < 2:
        raise ValueError(f"need at least 2 steps, got n={n}")

    lam = estimate_holder_exponent(f)
    mu = estimate_holder_exponent(g)
    if alpha is None:
        a = default_young_alpha(lam, mu)
    else:
        a = _as_order(alpha).alpha
        _as_order(a).require_derivative()
    if lam <= a - regularity_margin:
        raise RegularityError(
            f"integrand exponent lambda~{lam:.3f} below order alpha={a:.3f}"
        )
    if mu <= (1.0 - a) - regularity_margin:
        raise RegularityError(
            f"integrator exponent mu~{mu:.3f} below 1-alpha={1.0 - a:.3f}"
        )

    # Slope jumps of f at u_i = a + i*h (i=0 carries the initial slope) and of
    # the reflected g - g(b) at v_k = b - k*h.
    mf = np.diff(f.values) / h
    cf = np.concatenate([[mf[0]], np.diff(mf)])
    mg = np.diff((g.values - g.values[-1])[::-1]) / h
    cg = np.concatenate([[mg[0]], np.diff(mg)])

    # Pair (i, k) overlaps on [u_i, v_k] iff i + k < n, with
    # v_k - u_i = (n - i - k) h; group by m = i + k via one convolution.
    b_ramp = _beta(2.0 - a, 1.0 + a)
    b_sing = _beta(1.0 - a, 1.0 + a)
    e = np.convolve(cf, cg)[:n]
    span = (n - np.arange(n, dtype=float)) * h
    total = b_ramp / (gamma(2.0 - a) * gamma(1.0 + a)) * np.sum(e * span**2)
    total += (
        f.values[0]
        * b_sing
        / (gamma(1.0 - a) * gamma(1.0 + a))
        * np.sum(cg * span)
    )

    # The dropped phases of the two one-sided operators multiply to -1.
    return float(-total)
