"""Monte Carlo convergence studies: temporal strong rate, particle-number
(chaos) rate, rate regression, and CSV/sidecar reporting.

Replication kernels are pure functions of the replication index (all
randomness flows through the seed scheme), so results are bitwise identical
regardless of worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache, partial
from pathlib import Path

import numpy as np

from mvfbm.fbm import (
    HurstParameter,
    IncrementFactor,
    TimeGrid,
    build_increment_factor,
    sample_fbm_ensemble,
)
from mvfbm.measures import holder_seminorm
from mvfbm.simulate import SimConfig, SimulationDiverged, simulate_em

FAILURE_THRESHOLD = 0.8


class ExperimentError(RuntimeError):
    """Too many replications failed to produce a trustworthy report."""


@dataclass(frozen=True)
class RateTheory:
    """Theoretical rates for the configured (H, beta) and moment parameter q."""

    hurst: float
    beta: float
    q: float = 8.0

    def __post_init__(self):
        if not 0.5 < self.beta < self.hurst:
            raise ValueError(
                f"requires 1/2 < beta < H, got beta={self.beta}, H={self.hurst}"
            )
        if self.q <= 2 or self.q == 4:
            raise ValueError(f"requires q > 2 and q != 4, got q={self.q}")

    @property
    def temporal_rate(self) -> float:
        return min(self.hurst - self.beta, self.beta - self.beta**2)

    @property
    def chaos_eps_exponent(self) -> float:
        # d=1, p=2, q != 2p case of the empirical-measure rate.
        return min(0.5, (self.q - 2.0) / self.q)

    @property
    def chaos_rms_slope(self) -> float:
        """Predicted slope of log RMS error against log N."""
        return -self.chaos_eps_exponent / 2.0


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    defined: bool = True


@dataclass
class ConvergenceReport:
    """Per-parameter error rows plus fitted log-log slopes."""

    rows: list  # (param, err_sup_mean, err_sup_se, err_holder_mean, err_holder_se, reps, failures)
    fitted_slope_sup: RateFit
    fitted_slope_holder: RateFit
    theory: RateTheory
    seed: int
    kind: str  # "dt" or "n"
    extras: dict = field(default_factory=dict)


def fit_rate(points) -> RateFit:
    """Ordinary least squares of log(error) on log(parameter), closed form."""
    pts = [(float(p), float(e)) for p, e in points]
    if len(pts) < 2:
        return RateFit(slope=math.nan, intercept=math.nan, r_squared=math.nan, defined=False)
    if any(p <= 0 or e <= 0 for p, e in pts):
        raise ValueError("fit_rate needs strictly positive parameters and errors")
    lx = np.log([p for p, _ in pts])
    ly = np.log([e for _, e in pts])
    lx_c = lx - lx.mean()
    slope = float(np.dot(lx_c, ly - ly.mean()) / np.dot(lx_c, lx_c))
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return RateFit(slope=slope, intercept=intercept, r_squared=r2)


def monte_carlo(replications: int, kernel, workers: int = 1):
    """Run `kernel(r)` for r in 0..replications-1; results ordered by index.

    Returns (results, failures): results[r] is the kernel output or None;
    failures is a list of (replication, message).
    """
    results = [None] * replications
    failures = []
    if replications == 0:
        return results, failures
    if workers <= 1:
        for r in range(replications):
            try:
                results[r] = kernel(r)
            except SimulationDiverged as exc:
                failures.append((r, str(exc)))
        return results, failures
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {r: pool.submit(kernel, r) for r in range(replications)}
        for r in range(replications):
            try:
                results[r] = futures[r].result()
            except SimulationDiverged as exc:
                failures.append((r, str(exc)))
    return results, failures


@lru_cache(maxsize=8)
def _cached_factor(start: float, end: float, n: int, h: float) -> IncrementFactor:
    return build_increment_factor(TimeGrid(start, end, n), HurstParameter(h))


def _holder_errors(diff: np.ndarray, grid: TimeGrid, beta: float) -> np.ndarray:
    return np.array(
        [holder_seminorm(diff[i], grid, beta).value for i in range(diff.shape[0])]
    )


def _dt_replication(rep: int, config: SimConfig, steps_list, refine_ref: int, beta: float):
    """One coupled replication of the temporal study.

    Returns per-dt arrays of (mean over particles of squared sup error,
    squared Hölder error) plus the scheme-moment diagnostics.
    """
    n_fine = max(steps_list) * refine_ref
    fine_grid = TimeGrid(config.grid.start, config.grid.end, n_fine)
    factor = _cached_factor(fine_grid.start, fine_grid.end, n_fine, config.hurst.h)

    scheme = config.seeds
    z = scheme.normals(rep, config.n_particles, n_fine, "fbm")
    noise = sample_fbm_ensemble(factor, z)
    init = config.initial_law.draw(scheme, rep, config.n_particles)

    reference = simulate_em(config.with_grid(fine_grid), noise, initial_states=init)
    ref_vals = reference.data[:, :, 0]

    out = []
    for steps in steps_list:
        stride = n_fine // steps
        coarse_grid = TimeGrid(config.grid.start, config.grid.end, steps)
        ens = simulate_em(
            config.with_grid(coarse_grid), noise[:, ::stride], initial_states=init
        )
        diff = ref_vals[:, ::stride] - ens.data[:, :, 0]
        sup_sq = np.max(np.abs(diff), axis=1) ** 2
        hol_sq = _holder_errors(diff, coarse_grid, beta) ** 2
        z_vals = ens.data[:, :, 0]
        mom_sup = float(np.mean(np.max(np.abs(z_vals), axis=1) ** 2))
        mom_hol = float(np.mean(_holder_errors(z_vals, coarse_grid, beta) ** 2))
        out.append((float(np.mean(sup_sq)), float(np.mean(hol_sq)), mom_sup, mom_hol))
    return out


def _aggregate(param_values, per_rep_rows, n_failures):
    """Turn per-replication mean-squared errors into report rows."""
    rows = []
    for i, p in enumerate(param_values):
        sup_sq = np.array([r[i][0] for r in per_rep_rows])
        hol_sq = np.array([r[i][1] for r in per_rep_rows])
        m = len(sup_sq)
        err_sup = math.sqrt(sup_sq.mean())
        err_hol = math.sqrt(hol_sq.mean())
        # Delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
        se_sup_sq = sup_sq.std(ddof=1) / math.sqrt(m) if m > 1 else 0.0
        se_hol_sq = hol_sq.std(ddof=1) / math.sqrt(m) if m > 1 else 0.0
        se_sup = se_sup_sq / (2 * err_sup) if err_sup > 0 else 0.0
        se_hol = se_hol_sq / (2 * err_hol) if err_hol > 0 else 0.0
        rows.append((p, err_sup, se_sup, err_hol, se_hol, m, n_failures))
    rows.sort(key=lambda r: r[0])
    return rows


def _fit_or_flag(rows):
    pts = [(r[0], r[1]) for r in rows if r[1] > 0]
    pts_h = [(r[0], r[3]) for r in rows if r[3] > 0]
    sup = fit_rate(pts) if len(pts) >= 2 else RateFit(math.nan, math.nan, math.nan, False)
    hol = fit_rate(pts_h) if len(pts_h) >= 2 else RateFit(math.nan, math.nan, math.nan, False)
    return sup, hol


def run_dt_convergence(
    config: SimConfig,
    dts,
    refine_ref: int,
    replications: int,
    beta: float,
    workers: int = 1,
) -> ConvergenceReport:
    """Temporal strong-convergence study against a coupled fine-grid surrogate."""
    horizon = config.grid.end - config.grid.start
    theory = RateTheory(hurst=config.hurst.h, beta=beta)
    if refine_ref < 8:
        raise ValueError(f"need refine_ref >= 8, got {refine_ref}")
    steps_list = []
    for dt in dts:
        steps = horizon / dt
        if abs(steps - round(steps)) > 1e-9:
            raise ValueError(f"dt={dt} does not divide the horizon {horizon}")
        steps_list.append(int(round(steps)))

    kernel = partial(
        _dt_replication,
        config=config,
        steps_list=tuple(steps_list),
        refine_ref=refine_ref,
        beta=beta,
    )
    results, failures = monte_carlo(replications, kernel, workers)
    ok = [r for r in results if r is not None]
    if len(ok) < FAILURE_THRESHOLD * replications:
        raise ExperimentError(
            f"only {len(ok)}/{replications} replications succeeded; "
            f"failing seeds: {[f[0] for f in failures]}"
        )

    dts_f = [horizon / s for s in steps_list]
    rows = _aggregate(dts_f, ok, len(failures))
    slope_sup, slope_hol = _fit_or_flag(rows)

    moments = {}
    for i, dt in enumerate(dts_f):
        moments[dt] = (
            float(np.mean([r[i][2] for r in ok])),
            float(np.mean([r[i][3] for r in ok])),
        )
    return ConvergenceReport(
        rows=rows,
        fitted_slope_sup=slope_sup,
        fitted_slope_holder=slope_hol,
        theory=theory,
        seed=config.base_seed,
        kind="dt",
        extras={"moments": moments, "failed_replications": [f[0] for f in failures]},
    )


def _n_replication(rep: int, config: SimConfig, n_values, n_ref: int, beta: float):
    """One coupled replication of the particle-number study."""
    factor = _cached_factor(
        config.grid.start, config.grid.end, config.grid.n, config.hurst.h
    )
    scheme = config.seeds
    z = scheme.normals(rep, n_ref, config.grid.n, "fbm")
    noise = sample_fbm_ensemble(factor, z)
    init = config.initial_law.draw(scheme, rep, n_ref)

    big = simulate_em(config.with_particles(n_ref), noise, initial_states=init)
    big_vals = big.data[:, :, 0]

    n_probe = min(n_values)
    out = []
    for n in n_values:
        small = simulate_em(
            config.with_particles(n), noise[:n], initial_states=init[:n]
        )
        diff = big_vals[:n_probe] - small.data[:n_probe, :, 0]
        sup_sq = np.max(np.abs(diff), axis=1) ** 2
        hol_sq = _holder_errors(diff, config.grid, beta) ** 2
        out.append((float(np.mean(sup_sq)), float(np.mean(hol_sq)), 0.0, 0.0))
    return out


def run_n_convergence(
    config: SimConfig,
    n_values,
    n_ref: int,
    replications: int,
    beta: float,
    q: float = 8.0,
    workers: int = 1,
) -> ConvergenceReport:
    """Propagation-of-chaos study: coupled N vs N_ref systems."""
    theory = RateTheory(hurst=config.hurst.h, beta=beta, q=q)
    identical = list(n_values) == [n_ref]
    if not identical:
        for n in n_values:
            if n > n_ref / 4:
                raise ValueError(f"need every N <= n_ref/4, got N={n}, n_ref={n_ref}")

    kernel = partial(
        _n_replication,
        config=config,
        n_values=tuple(n_values),
        n_ref=n_ref,
        beta=beta,
    )
    results, failures = monte_carlo(replications, kernel, workers)
    ok = [r for r in results if r is not None]
    if len(ok) < FAILURE_THRESHOLD * replications:
        raise ExperimentError(
            f"only {len(ok)}/{replications} replications succeeded; "
            f"failing seeds: {[f[0] for f in failures]}"
        )
    rows = _aggregate(list(n_values), ok, len(failures))
    slope_sup, slope_hol = _fit_or_flag(rows)
    return ConvergenceReport(
        rows=rows,
        fitted_slope_sup=slope_sup,
        fitted_slope_holder=slope_hol,
        theory=theory,
        seed=config.base_seed,
        kind="n",
        extras={"failed_replications": [f[0] for f in failures]},
    )


def _gap_replication(rep: int, config: SimConfig, steps_list, refine: int, beta: float):
    """Continuous-vs-piecewise extension gap, per coarse step size."""
    from mvfbm.simulate import simulate_em_continuous

    n_fine = max(steps_list) * refine
    fine_grid = TimeGrid(config.grid.start, config.grid.end, n_fine)
    factor = _cached_factor(fine_grid.start, fine_grid.end, n_fine, config.hurst.h)
    scheme = config.seeds
    z = scheme.normals(rep, config.n_particles, n_fine, "fbm")
    noise = sample_fbm_ensemble(factor, z)
    init = config.initial_law.draw(scheme, rep, config.n_particles)

    out = []
    for steps in steps_list:
        stride = n_fine // steps
        coarse_grid = TimeGrid(config.grid.start, config.grid.end, steps)
        cont = simulate_em_continuous(
            config.with_grid(coarse_grid),
            noise[:, :: stride // refine] if stride > refine else noise,
            refine,
            initial_states=init,
        )
        vals = cont.data[:, :, 0]
        # Piecewise-constant extension: hold the left coarse iterate in-cell.
        n_part = vals.shape[0]
        gaps = np.empty((n_part, steps))
        for k in range(steps):
            cell = vals[:, k * refine : (k + 1) * refine + 1]
            gaps[:, k] = np.max(np.abs(cell - cell[:, :1]), axis=1)
        # sup_k of the particle-mean squared per-cell gap
        out.append(float(np.max(np.mean(gaps**2, axis=0))))
    return out


def run_gap_study(
    config: SimConfig,
    dts,
    refine: int,
    replications: int,
    beta: float,
    workers: int = 1,
) -> ConvergenceReport:
    """Empirical rate of the continuous-vs-piecewise extension gap."""
    horizon = config.grid.end - config.grid.start
    theory = RateTheory(hurst=config.hurst.h, beta=beta)
    steps_list = [int(round(horizon / dt)) for dt in dts]
    kernel = partial(
        _gap_replication,
        config=config,
        steps_list=tuple(steps_list),
        refine=refine,
        beta=beta,
    )
    results, failures = monte_carlo(replications, kernel, workers)
    ok = [r for r in results if r is not None]
    if len(ok) < FAILURE_THRESHOLD * replications:
        raise ExperimentError("too many gap replications failed")
    dts_f = [horizon / s for s in steps_list]
    rows = []
    for i, dt in enumerate(dts_f):
        gap_sq = np.array([r[i] for r in ok])
        m = len(gap_sq)
        mean = gap_sq.mean()
        se = gap_sq.std(ddof=1) / math.sqrt(m) if m > 1 else 0.0
        rows.append((dt, mean, se, mean, se, m, len(failures)))
    rows.sort(key=lambda r: r[0])
    slope_sup, slope_hol = _fit_or_flag(rows)
    return ConvergenceReport(
        rows=rows,
        fitted_slope_sup=slope_sup,
        fitted_slope_holder=slope_hol,
        theory=theory,
        seed=config.base_seed,
        kind="gap",
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_report(report: ConvergenceReport, csv_path, sidecar_path=None) -> None:
    """Write the report CSV and its key-value sidecar (17 significant digits)."""
    csv_path = Path(csv_path)
    if sidecar_path is None:
        sidecar_path = csv_path.with_name(csv_path.stem + "_sidecar.txt")
    sidecar_path = Path(sidecar_path)

    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "param",
                    "err_sup_mean",
                    "err_sup_se",
                    "err_holder_mean",
                    "err_holder_se",
                    "reps",
                    "failures",
                ]
            )
            for p, es, ses, eh, seh, reps, fails in report.rows:
                writer.writerow(
                    [_fmt(p), _fmt(es), _fmt(ses), _fmt(eh), _fmt(seh), reps, fails]
                )

        lines = {
            "slope_sup": _fmt(report.fitted_slope_sup.slope),
            "intercept_sup": _fmt(report.fitted_slope_sup.intercept),
            "slope_holder": _fmt(report.fitted_slope_holder.slope),
            "r_squared": _fmt(report.fitted_slope_sup.r_squared),
            "hurst": _fmt(report.theory.hurst),
            "beta": _fmt(report.theory.beta),
            "seed": str(report.seed),
        }
        if report.kind == "n":
            lines["theory_chaos_exponent"] = _fmt(report.theory.chaos_eps_exponent)
            lines["theory_rms_slope"] = _fmt(report.theory.chaos_rms_slope)
        else:
            lines["theory_temporal_rate"] = _fmt(report.theory.temporal_rate)
        if not report.rows:
            lines["error"] = "empty-report"
        if not report.fitted_slope_sup.defined:
            lines["slope_undefined"] = "true"
        if "moments" in report.extras:
            for dt, (ms, mh) in report.extras["moments"].items():
                lines[f"moment_sup_{_fmt(dt)}"] = _fmt(ms)
                lines[f"moment_holder_{_fmt(dt)}"] = _fmt(mh)
        with open(sidecar_path, "w") as fh:
            for k, v in lines.items():
                fh.write(f"{k} = {v}\n")
    except OSError as exc:
        raise OSError(f"failed writing report to {csv_path}: {exc}") from exc


def read_report(csv_path):
    """Parse a report CSV back into its rows (bit-faithful floats)."""
    rows = []
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for rec in reader:
            rows.append(
                (
                    float(rec[0]),
                    float(rec[1]),
                    float(rec[2]),
                    float(rec[3]),
                    float(rec[4]),
                    int(rec[5]),
                    int(rec[6]),
                )
            )
    return header, rows


def read_sidecar(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
