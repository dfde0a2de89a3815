"""plotkit: figures from the simulation harness's CSV/sidecar artifacts."""

from plotkit.io import ReportBundle, SchemaError, read_bundle
from plotkit.plots import plot_convergence, plot_paths

__all__ = [
    "ReportBundle",
    "SchemaError",
    "read_bundle",
    "plot_convergence",
    "plot_paths",
]
