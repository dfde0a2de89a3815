"""Command-line entry point: path generation, particle simulation, the two
convergence studies, and the embedded selftest suite.

All floating output is written with 17 significant digits so files re-parse
bit-faithfully; identical flags and seed always produce byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from mvfbm.fbm import (
    PAPER_REGIME_THRESHOLD,
    HurstParameter,
    TimeGrid,
    build_increment_factor,
    sample_fbm,
    sample_fbm_ensemble,
)
from mvfbm.model import MODELS
from mvfbm.simulate import InitialLaw, SimConfig
from mvfbm.experiments import (
    run_dt_convergence,
    run_n_convergence,
    write_report,
)
from mvfbm.selftest import run_selftest


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_floats(text: str) -> list:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_ints(text: str) -> list:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _load_config_file(path: str) -> dict:
    """Read `key = value` lines; keys match the long flag names without `--`."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (expected key = value): {line!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvfbm",
        description=(
            "Interacting-particle Euler-Maruyama simulation driven by "
            "fractional Brownian motion, with convergence-rate studies."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, beta=False, particles=False, reps=False):
        p.add_argument("--hurst", type=float, required=True)
        p.add_argument("--t-end", type=float, default=1.0)
        p.add_argument("--n-steps", "--n", type=int, default=256)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default=".")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--strict-regime", action="store_true")
        p.add_argument("--config", default=None, help="key = value file; flags win")
        if beta:
            p.add_argument("--beta", type=float, required=True)
        if particles:
            p.add_argument("--particles", type=int, default=200)
        if reps:
            p.add_argument("--reps", type=int, default=16)

    p = sub.add_parser("fbm-gen", help="sample one fBm path to fbm.csv")
    common(p)

    p = sub.add_parser("simulate", help="run the particle scheme to paths.csv")
    common(p, particles=True)
    p.add_argument("--model", required=True, choices=sorted(MODELS))
    p.add_argument("--x0", type=float, default=None,
                   help="point initial condition (default: standard normal)")

    p = sub.add_parser("converge-dt", help="temporal strong-convergence study")
    common(p, beta=True, particles=True, reps=True)
    p.add_argument("--model", default="example-sine", choices=sorted(MODELS))
    p.add_argument("--dts", default="0.0625,0.03125,0.015625,0.0078125,"
                   "0.00390625,0.001953125")
    p.add_argument("--refine-ref", type=int, default=8)

    p = sub.add_parser("converge-n", help="particle-number (chaos) study")
    common(p, beta=True, reps=True)
    p.add_argument("--model", default="example-sine", choices=sorted(MODELS))
    p.add_argument("--n-values", default="8,16,32,64,128,256")
    p.add_argument("--n-ref", type=int, default=2048)
    p.add_argument("--q", type=float, default=8.0)

    p = sub.add_parser("selftest", help="run the embedded oracle checks")
    p.add_argument("--filter", default="", help="run only checks containing this substring")
    p.add_argument("--inject-perturbation", action="store_true",
                   help=argparse.SUPPRESS)
    return parser


def _apply_config_file(args, parser, argv):
    if getattr(args, "config", None) is None:
        return
    try:
        values = _load_config_file(args.config)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    explicit = {a.lstrip("-").replace("-", "_").split("=")[0] for a in argv
                if a.startswith("--")}
    casts = {"hurst": float, "beta": float, "t_end": float, "x0": float,
             "q": float, "n_steps": int, "seed": int, "particles": int,
             "reps": int, "workers": int, "n_ref": int, "refine_ref": int,
             "strict_regime": lambda v: v.lower() in ("1", "true", "yes")}
    for key, raw in values.items():
        if not hasattr(args, key) or key in explicit:
            continue
        setattr(args, key, casts.get(key, str)(raw))


def _validate(args, parser):
    h = getattr(args, "hurst", None)
    if h is not None:
        if not 0.0 < h < 1.0:
            parser.error(f"--hurst requires H in (0,1), got {h}")
        if args.strict_regime and h <= PAPER_REGIME_THRESHOLD:
            parser.error(
                f"--strict-regime requires H > (sqrt(5)-1)/2 ~ "
                f"{PAPER_REGIME_THRESHOLD:.6f}, got {h}"
            )
    beta = getattr(args, "beta", None)
    if beta is not None and not 0.5 < beta < h:
        parser.error(f"requires 1/2 < beta < H, got beta={beta}, H={h}")
    t_end = getattr(args, "t_end", None)
    if t_end is not None and t_end <= 0:
        parser.error(f"--t-end must be positive, got {t_end}")
    n = getattr(args, "n_steps", None)
    if n is not None and n < 1:
        parser.error(f"--n-steps must be >= 1, got {n}")


def _workers(args) -> int:
    if getattr(args, "workers", None) is not None:
        return max(1, args.workers)
    env = os.environ.get("MVFBM_WORKERS")
    return max(1, int(env)) if env else 1


def _out_path(args, name: str) -> Path:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def cmd_fbm_gen(args) -> int:
    grid = TimeGrid(0.0, args.t_end, args.n_steps)
    factor = build_increment_factor(grid, HurstParameter(args.hurst))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(args.seed)))
    path = sample_fbm(factor, rng.standard_normal(grid.n))
    dest = _out_path(args, "fbm.csv")
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for t, v in zip(grid.nodes(), path.values):
            writer.writerow([_fmt(t), _fmt(v)])
    print(f"wrote {dest} ({grid.n + 1} rows)")
    return 0


def _sim_config(args) -> SimConfig:
    if getattr(args, "x0", None) is not None:
        law = InitialLaw("point", args.x0)
    else:
        law = InitialLaw("normal")
    return SimConfig(
        model=MODELS[args.model],
        n_particles=args.particles,
        grid=TimeGrid(0.0, args.t_end, args.n_steps),
        hurst=HurstParameter(args.hurst),
        initial_law=law,
        base_seed=args.seed,
    )


def cmd_simulate(args) -> int:
    from mvfbm.simulate import simulate_em

    config = _sim_config(args)
    grid = config.grid
    factor = build_increment_factor(grid, config.hurst)
    z = config.seeds.normals(0, config.n_particles, grid.n, "fbm")
    noise = sample_fbm_ensemble(factor, z)
    init = config.initial_law.draw(config.seeds, 0, config.n_particles)
    ens = simulate_em(config, noise, initial_states=init)

    dest = _out_path(args, "paths.csv")
    nodes = grid.nodes()
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["particle", "t", "value"])
        for i in range(config.n_particles):
            for k in range(grid.n + 1):
                writer.writerow([i, _fmt(nodes[k]), _fmt(ens.data[i, k, 0])])
    print(f"wrote {dest} ({config.n_particles * (grid.n + 1)} data rows)")
    return 0


def cmd_converge_dt(args, parser) -> int:
    dts = _parse_floats(args.dts)
    config = _sim_config(args)
    try:
        report = run_dt_convergence(
            config, dts, args.refine_ref, args.reps, args.beta,
            workers=_workers(args),
        )
    except ValueError as exc:
        parser.error(str(exc))
    csv_path = _out_path(args, "converge_dt.csv")
    write_report(report, csv_path)
    print(f"wrote {csv_path} and sidecar; "
          f"slope_sup={_fmt(report.fitted_slope_sup.slope)}")
    return 0


def cmd_converge_n(args, parser) -> int:
    n_values = _parse_ints(args.n_values)
    args.particles = max(n_values)
    config = _sim_config(args)
    try:
        report = run_n_convergence(
            config, n_values, args.n_ref, args.reps, args.beta, q=args.q,
            workers=_workers(args),
        )
    except ValueError as exc:
        parser.error(str(exc))
    csv_path = _out_path(args, "converge_n.csv")
    write_report(report, csv_path)
    print(f"wrote {csv_path} and sidecar; "
          f"slope_sup={_fmt(report.fitted_slope_sup.slope)}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    _apply_config_file(args, parser, argv)
    if args.command != "selftest":
        _validate(args, parser)
    try:
        if args.command == "fbm-gen":
            return cmd_fbm_gen(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "converge-dt":
            return cmd_converge_dt(args, parser)
        if args.command == "converge-n":
            return cmd_converge_n(args, parser)
        if args.command == "selftest":
            return run_selftest(args.filter, args.inject_perturbation)
    except Exception as exc:  # runtime failures map to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
