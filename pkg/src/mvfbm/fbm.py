"""Exact sampling of fractional Brownian motion on uniform time grids.

The sampler factors the increment covariance matrix (Toeplitz, well
conditioned) and maps i.i.d. standard normals through it, so the finite
dimensional law is exact up to floating point.  Multi-resolution coupling is
done by restriction of one finest path, never by re-sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import beta as _beta

# Lower edge of the Hurst range covered by the strong-rate theory.
PAPER_REGIME_THRESHOLD = (np.sqrt(5.0) - 1.0) / 2.0

DEFAULT_FACTOR_CAP = 8192


class UnsupportedRegimeError(ValueError):
    """Raised when an operation needs H > 1/2 and got something else."""


class FactorizationError(RuntimeError):
    """Increment covariance was numerically non-positive-definite."""

    def __init__(self, pivot: int):
        self.pivot = pivot
        super().__init__(
            f"increment covariance factorization failed at pivot {pivot}"
        )


@dataclass(frozen=True)
class HurstParameter:
    """Hurst index of the driving fractional Brownian motion."""

    h: float

    def __post_init__(self):
        if not 0.0 < self.h < 1.0:
            raise ValueError(f"Hurst parameter must lie in (0,1), got {self.h}")

    @property
    def in_paper_regime(self) -> bool:
        """True when the strong-rate theory applies (h above (sqrt(5)-1)/2)."""
        return self.h > PAPER_REGIME_THRESHOLD


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [start, end] with n steps (n+1 nodes)."""

    start: float
    end: float
    n: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"need start < end, got [{self.start}, {self.end}]")
        if self.n < 1:
            raise ValueError(f"need n >= 1, got {self.n}")

    @property
    def dt(self) -> float:
        return (self.end - self.start) / self.n

    def nodes(self) -> np.ndarray:
        return self.start + self.dt * np.arange(self.n + 1)

    def coarsened(self, factor: int) -> "TimeGrid":
        if factor < 1 or self.n % factor != 0:
            raise ValueError(
                f"coarsening factor {factor} does not divide n={self.n}"
            )
        return TimeGrid(self.start, self.end, self.n // factor)

    def refined(self, factor: int) -> "TimeGrid":
        if factor < 1:
            raise ValueError(f"refinement factor must be >= 1, got {factor}")
        return TimeGrid(self.start, self.end, self.n * factor)


@dataclass(frozen=True)
class FbmPath:
    """Values of one fBm path on a uniform grid, anchored at zero."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(
                f"values length {v.shape} does not match grid with n={self.grid.n}"
            )
        if v[0] != 0.0:
            raise ValueError("path must be anchored at zero at the grid start")


@dataclass(frozen=True)
class IncrementFactor:
    """Lower-triangular factor of the fBm increment covariance on a grid."""

    grid: TimeGrid
    h: HurstParameter
    lower_triangular: np.ndarray


def covariance(t: float, s: float, h: HurstParameter) -> float:
    """Covariance R_H(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2 of fBm."""
    if t < 0 or s < 0:
        raise ValueError(f"times must be nonnegative, got t={t}, s={s}")
    twoh = 2.0 * h.h
    return 0.5 * (t**twoh + s**twoh - abs(t - s) ** twoh)


def kernel_normalizer(h: HurstParameter) -> float:
    """Constant C_H = sqrt(H(2H-1) / B(2-2H, H-1/2)) of the Volterra kernel."""
    if h.h <= 0.5:
        raise UnsupportedRegimeError(f"kernel requires h > 1/2, got {h.h}")
    hh = h.h
    return float(np.sqrt(hh * (2 * hh - 1) / _beta(2 - 2 * hh, hh - 0.5)))


def kernel_kh(t: float, s: float, h: HurstParameter, quad_nodes: int = 64) -> float:
    """Volterra kernel K_H(t,s) via singularity-regularized quadrature.

    K_H(t,s) = C_H s^{1/2-H} int_s^t (u-s)^{H-3/2} u^{H-1/2} du for t > s,
    zero for t <= s.  The substitution u = s + v^{1/(H-1/2)} absorbs the
    endpoint singularity exactly, leaving a smooth integrand for
    Gauss-Legendre.
    """
    if h.h <= 0.5:
        raise UnsupportedRegimeError(f"kernel requires h > 1/2, got {h.h}")
    if quad_nodes < 16:
        raise ValueError(f"need quad_nodes >= 16, got {quad_nodes}")
    if t <= s:
        return 0.0
    if s <= 0:
        raise ValueError(f"kernel evaluation needs s > 0, got s={s}")
    p = h.h - 0.5
    v_max = (t - s) ** p
    x, w = leggauss(quad_nodes)
    v = 0.5 * v_max * (x + 1.0)
    u = s + v ** (1.0 / p)
    integral = 0.5 * v_max * np.sum(w * u ** (h.h - 0.5)) / p
    return kernel_normalizer(h) * s ** (0.5 - h.h) * integral


def increment_covariance(grid: TimeGrid, h: HurstParameter) -> np.ndarray:
    """n x n covariance matrix of the fBm increments on the grid."""
    nodes = grid.nodes()
    twoh = 2.0 * h.h
    # Level covariance via R_H, then second differences.
    tt, ss = np.meshgrid(nodes, nodes, indexing="ij")
    level = 0.5 * (tt**twoh + ss**twoh - np.abs(tt - ss) ** twoh)
    return level[1:, 1:] - level[1:, :-1] - level[:-1, 1:] + level[:-1, :-1]


def build_increment_factor(
    grid: TimeGrid, h: HurstParameter, cap: int = DEFAULT_FACTOR_CAP
) -> IncrementFactor:
    """Cholesky factor of the increment covariance; deterministic."""
    if grid.n > cap:
        raise ValueError(
            f"grid has n={grid.n} steps, above the O(n^3) factorization cap {cap}"
        )
    sigma = increment_covariance(grid, h)
    try:
        lower = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise FactorizationError(_failing_pivot(sigma)) from None
    return IncrementFactor(grid=grid, h=h, lower_triangular=lower)


def _failing_pivot(sigma: np.ndarray) -> int:
    """Smallest leading-minor size whose Cholesky fails (for error reporting)."""
    lo, hi = 1, sigma.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        try:
            np.linalg.cholesky(sigma[:mid, :mid])
            lo = mid + 1
        except np.linalg.LinAlgError:
            hi = mid
    return lo


def sample_fbm(factor: IncrementFactor, standard_normals: np.ndarray) -> FbmPath:
    """Map i.i.d. standard normals through the factor into one exact fBm path."""
    z = np.asarray(standard_normals, dtype=float)
    n = factor.grid.n
    if z.shape != (n,):
        raise ValueError(f"expected {n} normal draws, got shape {z.shape}")
    increments = factor.lower_triangular @ z
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(increments, out=values[1:])
    return FbmPath(grid=factor.grid, values=values)


def sample_fbm_ensemble(
    factor: IncrementFactor, standard_normals: np.ndarray
) -> np.ndarray:
    """Vectorized sampler: normals of shape (N, n) -> path values (N, n+1)."""
    z = np.asarray(standard_normals, dtype=float)
    n = factor.grid.n
    if z.ndim != 2 or z.shape[1] != n:
        raise ValueError(f"expected shape (N, {n}), got {z.shape}")
    increments = z @ factor.lower_triangular.T
    values = np.zeros((z.shape[0], n + 1))
    np.cumsum(increments, axis=1, out=values[:, 1:])
    return values


def coarsen(path: FbmPath, factor: int) -> FbmPath:
    """Restrict a path to every `factor`-th node (pure copying, no arithmetic)."""
    coarse_grid = path.grid.coarsened(factor)
    return FbmPath(grid=coarse_grid, values=path.values[::factor].copy())
