"""Empirical measures, Wasserstein-2 distances, Hölder path seminorms, and the
diagonal-coupling measure-path distance used by all convergence reports."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from mvfbm.fbm import TimeGrid

DEFAULT_SCAN_CAP = 4000
EXHAUSTIVE_CAP = 10
ASSIGNMENT_CAP = 512


@dataclass(frozen=True)
class EmpiricalMeasure:
    """N equally weighted point masses in R^d; points has shape (N, d)."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        object.__setattr__(self, "points", p)
        if p.ndim != 2 or p.shape[0] < 1:
            raise ValueError(f"points must have shape (N, d) with N >= 1, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("points must be finite")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class PathEnsemble:
    """N particle paths on a common grid; data has shape (N, n+1, d)."""

    grid: TimeGrid
    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=float)
        if a.ndim == 2:
            a = a[:, :, None]
        object.__setattr__(self, "data", a)
        if a.ndim != 3 or a.shape[1] != self.grid.n + 1:
            raise ValueError(
                f"data shape {a.shape} inconsistent with grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(a)):
            raise ValueError("ensemble data must be finite")

    @property
    def n_particles(self) -> int:
        return self.data.shape[0]

    def measure_at(self, node: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(points=self.data[:, node, :])


@dataclass(frozen=True)
class HolderSeminormValue:
    """Discrete Hölder seminorm with the maximizing node pair and scan stride."""

    value: float
    attained_pair: tuple[int, int]
    stride: int = 1


def moment(mu: EmpiricalMeasure, power: int, coordinate: int = 0) -> float:
    """(1/N) sum of points[i][coordinate]**power."""
    if not 0 <= coordinate < mu.d:
        raise IndexError(f"coordinate {coordinate} out of range for d={mu.d}")
    return float(np.mean(mu.points[:, coordinate] ** power))


def w2_1d(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact W2 between equal-size 1-d empirical measures (sorted pairing)."""
    if mu.d != 1 or nu.d != 1:
        raise ValueError(
            "w2_1d needs d=1 on both sides; use w2_assignment for general d"
        )
    if mu.n != nu.n:
        raise ValueError(
            "w2_1d needs equal sample sizes; use w2_assignment for the general oracle"
        )
    x = np.sort(mu.points[:, 0])
    y = np.sort(nu.points[:, 0])
    return float(np.sqrt(np.mean((x - y) ** 2)))


def _cost_matrix(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> np.ndarray:
    diff = mu.points[:, None, :] - nu.points[None, :, :]
    return np.sum(diff**2, axis=2)


def w2_assignment(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact W2 between equal-size empirical measures via optimal assignment."""
    if mu.n != nu.n:
        raise ValueError("w2_assignment needs equal sample sizes")
    if mu.n > ASSIGNMENT_CAP:
        raise ValueError(f"N={mu.n} above the assignment cap {ASSIGNMENT_CAP}")
    cost = _cost_matrix(mu, nu)
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


def w2_exhaustive(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Brute-force W2 over all pairings; the oracle for the assignment route."""
    if mu.n != nu.n:
        raise ValueError("w2_exhaustive needs equal sample sizes")
    if mu.n > EXHAUSTIVE_CAP:
        raise ValueError(f"N={mu.n} above the exhaustive cap {EXHAUSTIVE_CAP}")
    cost = _cost_matrix(mu, nu)
    n = mu.n
    best = min(sum(cost[i, p[i]] for i in range(n)) for p in permutations(range(n)))
    return float(np.sqrt(best / n))


def holder_seminorm(
    values: np.ndarray,
    grid: TimeGrid,
    beta: float,
    a_idx: int = 0,
    b_idx: int | None = None,
    cap: int = DEFAULT_SCAN_CAP,
) -> HolderSeminormValue:
    """Discrete sup of |phi(t)-phi(s)| / (t-s)^beta over node pairs in a window.

    Windows larger than `cap` nodes are stride-subsampled; the stride is
    recorded in the result.  Ties break to the lowest (s, t) index pair.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0,1), got {beta}")
    v = np.asarray(values, dtype=float)
    if b_idx is None:
        b_idx = grid.n
    if not 0 <= a_idx < b_idx <= grid.n:
        raise ValueError(f"bad window [{a_idx}, {b_idx}] for grid n={grid.n}")

    window = b_idx - a_idx
    stride = 1
    while window // stride + 1 > cap:
        stride *= 2
    idx = np.arange(a_idx, b_idx + 1, stride)
    if idx[-1] != b_idx:
        idx = np.append(idx, b_idx)
    sub = v[idx]
    times = grid.nodes()[idx]
    if sub.ndim == 1:
        sub = sub[:, None]

    diff = np.linalg.norm(sub[None, :, :] - sub[:, None, :], axis=2)
    dt = times[None, :] - times[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dt > 0, diff / np.where(dt > 0, dt, 1.0) ** beta, -np.inf)
    flat = int(np.argmax(ratio))  # row-major: lowest (s, t) wins ties
    i, j = divmod(flat, ratio.shape[1])
    return HolderSeminormValue(
        value=float(ratio[i, j]),
        attained_pair=(int(idx[i]), int(idx[j])),
        stride=stride,
    )


def sup_norm_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Sup over nodes of the Euclidean distance between two sampled paths."""
    xa, ya = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if xa.shape != ya.shape:
        raise ValueError(f"shape mismatch: {xa.shape} vs {ya.shape}")
    if xa.ndim == 1:
        return float(np.max(np.abs(xa - ya)))
    return float(np.max(np.linalg.norm(xa - ya, axis=-1)))


def _pairwise_holder(values: np.ndarray, grid: TimeGrid, beta: float, cap: int) -> float:
    return holder_seminorm(values, grid, beta, cap=cap).value


def diagonal_path_distance(
    x_ens: PathEnsemble,
    y_ens: PathEnsemble,
    beta: float,
    cap: int = DEFAULT_SCAN_CAP,
) -> float:
    """Diagonal-coupling upper bound on the measure-path distance:

    sqrt((1/N) sum_i ||X_i - Y_i||^2_inf) + sqrt((1/N) sum_i ||X_i - Y_i||^2_beta)
    with particles paired by index.
    """
    if x_ens.grid != y_ens.grid or x_ens.data.shape != y_ens.data.shape:
        raise ValueError("ensembles must share grid and shape")
    diff = x_ens.data - y_ens.data
    sup_sq = np.max(np.linalg.norm(diff, axis=2), axis=1) ** 2
    hol_sq = np.array(
        [_pairwise_holder(diff[i], x_ens.grid, beta, cap) ** 2
         for i in range(diff.shape[0])]
    )
    return float(np.sqrt(np.mean(sup_sq)) + np.sqrt(np.mean(hol_sq)))


def path_measure_norm(
    ens: PathEnsemble, beta: float, cap: int = DEFAULT_SCAN_CAP
) -> float:
    """Empirical path-measure norm: sqrt(mean sup^2) plus the Hölder-scaled sup
    over node pairs of the RMS increment."""
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0,1), got {beta}")
    data = ens.data
    first = float(np.sqrt(np.mean(np.max(np.linalg.norm(data, axis=2), axis=1) ** 2)))

    m = ens.grid.n
    stride = 1
    while m // stride + 1 > cap:
        stride *= 2
    idx = np.arange(0, m + 1, stride)
    if idx[-1] != m:
        idx = np.append(idx, m)
    sub = data[:, idx, :]
    times = ens.grid.nodes()[idx]
    # mean over particles of |X_t - X_s|^2, for all node pairs
    diff = sub[:, None, :, :] - sub[:, :, None, :]
    msq = np.mean(np.sum(diff**2, axis=3), axis=0)
    dt = times[None, :] - times[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dt > 0, np.sqrt(msq) / np.where(dt > 0, dt, 1.0) ** beta, 0.0)
    return first + float(np.max(ratio))
