"""Embedded oracle suite behind the `selftest` CLI subcommand.

Each check is a named function returning (passed, detail).  The hidden
`perturb` switch injects a small error into every check's computed value so CI
can confirm the checks actually discriminate.
"""

from __future__ import annotations

import numpy as np

from mvfbm.fbm import HurstParameter, TimeGrid, covariance
from mvfbm.fracalc import (
    SampledFunction,
    rl_integral_left,
    weyl_derivative_left,
    young_integral,
)
from mvfbm.measures import EmpiricalMeasure, w2_1d, w2_exhaustive


def _grid(n: int) -> TimeGrid:
    return TimeGrid(0.0, 1.0, n)


def _check_young_polynomial(perturb: bool):
    g = _grid(2000)
    t = g.nodes()
    f = SampledFunction(g, t)
    gg = SampledFunction(g, t**2)
    val = young_integral(f, gg, alpha=0.4)
    if perturb:
        val += 1e-4
    err = abs(val - 2.0 / 3.0)
    return err <= 1e-6, f"|integral - 2/3| = {err:.3e}"


def _check_semigroup(perturb: bool):
    g = _grid(2000)
    f = SampledFunction(g, g.nodes() ** 2)
    two = rl_integral_left(rl_integral_left(f, 0.3), 0.4).values
    one = rl_integral_left(f, 0.7).values
    if perturb:
        two = two + 1e-3
    err = float(np.max(np.abs(two - one)) / np.max(np.abs(one)))
    return err <= 1e-4, f"semigroup rel err = {err:.3e}"


def _check_inversion(perturb: bool):
    g = _grid(2000)
    f = SampledFunction(g, g.nodes() ** 2)
    back = weyl_derivative_left(rl_integral_left(f, 0.5), 0.5).values
    if perturb:
        back = back + 1e-3
    err = float(np.nanmax(np.abs(back - f.values)) / np.max(np.abs(f.values)))
    return err <= 1e-4, f"inversion rel err = {err:.3e}"


def _check_wasserstein(perturb: bool):
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        mu = EmpiricalMeasure(rng.standard_normal(n))
        nu = EmpiricalMeasure(rng.standard_normal(n))
        fast = w2_1d(mu, nu)
        if perturb:
            fast += 1e-9
        worst = max(worst, abs(fast - w2_exhaustive(mu, nu)))
    return worst <= 1e-12, f"max |sorted - exhaustive| = {worst:.3e}"


def _check_covariance(perturb: bool):
    # Self-covariance at equal times must equal t^{2H}.
    worst = 0.0
    for h in (0.55, 0.7, 0.9):
        for t in (0.25, 1.0, 2.0):
            v = covariance(t, t, HurstParameter(h))
            if perturb:
                v += 1e-9
            worst = max(worst, abs(v - t ** (2 * h)))
    return worst <= 1e-14, f"max |R(t,t) - t^2H| = {worst:.3e}"


CHECKS = {
    "young-integral polynomial": _check_young_polynomial,
    "fracalc semigroup": _check_semigroup,
    "fracalc inversion": _check_inversion,
    "measures wasserstein oracle": _check_wasserstein,
    "fbm covariance diagonal": _check_covariance,
}


def run_selftest(name_filter: str = "", perturb: bool = False, out=print) -> int:
    """Run the (filtered) checks, print one line each, return the exit code."""
    selected = {k: v for k, v in CHECKS.items() if name_filter in k}
    if not selected:
        out(f"no checks match filter {name_filter!r}")
        return 1
    failed = []
    for name, fn in selected.items():
        ok, detail = fn(perturb)
        out(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})")
        if not ok:
            failed.append(name)
    if failed:
        out(f"failed checks: {', '.join(failed)}")
        return 1
    return 0
