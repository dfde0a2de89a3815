"""Figure rendering for sample paths and convergence reports.

Slopes and every other displayed number are passed through verbatim from the
CSV/sidecar inputs; nothing is re-fitted here.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from plotkit.io import SchemaError, read_bundle, read_paths_csv, read_sidecar


def _deterministic_rc():
    # Fixed salts/metadata so identical inputs give identical image bytes.
    return {"svg.hashsalt": "plotkit", "svg.fonttype": "none"}


def _save(fig, out_image, deterministic):
    out_image = Path(out_image)
    kwargs = {"dpi": 100}
    if deterministic and out_image.suffix == ".svg":
        kwargs["metadata"] = {"Date": None}
    fig.savefig(out_image, **kwargs)
    plt.close(fig)


def plot_paths(paths_csv, out_image, sidecar_path=None, deterministic=False) -> dict:
    """One line per particle from a `particle,t,value` CSV.

    Returns a summary dict (particle count, annotation).  Raises SchemaError
    before creating any file if the input is malformed or empty.
    """
    rows = read_paths_csv(paths_csv)
    by_particle = {}
    for particle, t, value in rows:
        by_particle.setdefault(particle, ([], []))
        by_particle[particle][0].append(t)
        by_particle[particle][1].append(value)

    annotation = ""
    if sidecar_path is not None:
        side = read_sidecar(sidecar_path)
        pieces = [f"{k}={side[k]}" for k in ("hurst", "beta") if k in side]
        annotation = ", ".join(pieces)

    with matplotlib.rc_context(_deterministic_rc() if deterministic else {}):
        fig, ax = plt.subplots(figsize=(8, 5))
        for particle in sorted(by_particle):
            ts, vs = by_particle[particle]
            ax.plot(ts, vs, lw=0.9)
        ax.set_xlabel("t")
        ax.set_ylabel("state")
        title = f"sample paths (N={len(by_particle)})"
        if annotation:
            title += f"  [{annotation}]"
        ax.set_title(title)
        _save(fig, out_image, deterministic)
    return {"particles": len(by_particle), "annotation": annotation}


def plot_convergence(report_csv, sidecar_path, out_image, deterministic=False) -> dict:
    """Log-log error plot with +-2 SE bars and the sidecar's fitted line.

    The annotated slope is the sidecar's `slope_sup` string verbatim.
    Returns a dict with the annotation text.
    """
    bundle = read_bundle(report_csv, sidecar_path)
    if len(bundle.rows) < 2:
        raise SchemaError(
            f"{report_csv}: a convergence plot needs at least 2 rows "
            f"(a slope is undefined on {len(bundle.rows)})"
        )
    if "slope_sup" not in bundle.sidecar:
        raise SchemaError(f"{sidecar_path}: missing required key slope_sup")

    params = [float(r["param"]) for r in bundle.rows]
    errs = [float(r["err_sup_mean"]) for r in bundle.rows]
    ses = [float(r["err_sup_se"]) for r in bundle.rows]

    slope_text = bundle.sidecar["slope_sup"]
    theory_key = next(
        (k for k in ("theory_temporal_rate", "theory_rms_slope") if k in bundle.sidecar),
        None,
    )
    annotation = f"slope={slope_text}"
    if theory_key is not None:
        annotation += f"\ntheory={bundle.sidecar[theory_key]}"

    with matplotlib.rc_context(_deterministic_rc() if deterministic else {}):
        fig, ax = plt.subplots(figsize=(7, 5))
        ax.errorbar(
            params, errs, yerr=[2 * s for s in ses],
            fmt="o", capsize=3, label="measured error (+-2 SE)",
        )
        slope = float(slope_text)
        if "intercept_sup" in bundle.sidecar:
            intercept = float(bundle.sidecar["intercept_sup"])
        else:
            # Anchor the line through the data's log-log centroid.
            intercept = (
                sum(math.log(e) for e in errs) / len(errs)
                - slope * sum(math.log(p) for p in params) / len(params)
            )
        line = [math.exp(intercept + slope * math.log(p)) for p in params]
        ax.plot(params, line, "--", label="fitted line")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("step size / particle count")
        ax.set_ylabel("RMS error")
        ax.annotate(
            annotation, xy=(0.05, 0.05), xycoords="axes fraction",
            fontsize=10, family="monospace",
        )
        ax.legend()
        _save(fig, out_image, deterministic)
    return {"annotation": annotation, "slope_text": slope_text}
