"""Render experiment artifacts into figures.

This package never computes statistics of its own beyond axis
transforms: every fitted value shown on a figure is read verbatim from
the experiment's JSON summary, which stays the single source of truth.
Rendering is deterministic -- fixed styles, no timestamps -- so a given
CSV/JSON pair always produces byte-stable figure content.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SUPPORTED_CSV_MAGIC = "# antnet-csv v1"
SUPPORTED_SCHEMA_VERSION = 1

KINDS = ("convergence", "loglog-decay", "histogram")

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "svg.hashsalt": "plots",
}


class SchemaError(ValueError):
    """Input artifact does not carry a supported schema version."""


@dataclass
class PlotJob:
    kind: str
    csv_path: str
    out_path: str
    summary_path: Optional[str] = None
    column: Optional[str] = None
    title: Optional[str] = None
    options: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {KINDS}")


def read_table(path: str) -> Dict[str, np.ndarray]:
    """Versioned CSV -> dict of float columns (labels pass through)."""
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().rstrip("\n")
        if magic != SUPPORTED_CSV_MAGIC:
            raise SchemaError(
                f"{path}: unsupported CSV schema {magic!r}; this tool "
                f"supports {SUPPORTED_CSV_MAGIC!r}")
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols: Dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in raw])
        except ValueError:
            cols[name] = np.array(raw, dtype=object)
    return cols


def read_summary(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("schema_version")
    if version != SUPPORTED_SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: summary schema_version {version!r}; this tool "
            f"supports {SUPPORTED_SCHEMA_VERSION}")
    return payload


def config_hash(summary: Optional[dict]) -> str:
    """Stable short hash of the experiment config echo, for filenames."""
    config = (summary or {}).get("config", {})
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def _weight_columns(table: Dict[str, np.ndarray]) -> List[str]:
    return sorted((c for c in table if c.startswith("W")
                   and np.issubdtype(table[c].dtype, np.floating)),
                  key=lambda c: int(c[1:]))


def _replica_series(table, column):
    """Yield (replica, n array, column array) per replica, n-sorted."""
    reps = table["replica"].astype(int)
    for r in np.unique(reps):
        sel = reps == r
        order = np.argsort(table["n"][sel], kind="stable")
        yield int(r), table["n"][sel][order], table[column][sel][order]


def _terminal_values(table, column):
    """Last recorded normalized value of ``column`` per replica."""
    out = []
    for _, ns, vs in _replica_series(table, column):
        out.append(vs[-1] / (ns[-1] + 2.0))
    return np.array(out)


def _save(fig, out_path: str) -> List[str]:
    """Write the figure as both raster (png) and vector (svg)."""
    stem, ext = os.path.splitext(out_path)
    targets = {".png", ".svg"}
    if ext in targets:
        paths = [out_path, stem + (".svg" if ext == ".png" else ".png")]
    else:
        paths = [stem + ".png", stem + ".svg"]
    for p in paths:
        fig.savefig(p, metadata={"Date": None} if p.endswith(".svg")
                    else None)
    plt.close(fig)
    return paths


# ---------------------------------------------------------------------------
# figure kinds
# ---------------------------------------------------------------------------

def _render_convergence(job, table, summary):
    fig, ax = plt.subplots()
    for col in _weight_columns(table):
        for r, ns, vs in _replica_series(table, col):
            ax.plot(ns, vs / ns, lw=0.9,
                    label=col if r == 0 else None,
                    alpha=0.8 if r == 0 else 0.35)
    if "C" in table:
        for r, ns, vs in _replica_series(table, "C"):
            ax.plot(ns, vs / ns, lw=1.4, color="black",
                    label="C/n" if r == 0 else None)
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("normalized value")
    ax.set_title(job.title or "convergence of normalized weights")
    ax.legend(loc="best", fontsize=8)
    return fig, ""


def _render_loglog(job, table, summary):
    column = job.column
    if column is None:
        wcols = _weight_columns(table)
        # default: the edge with the smallest terminal weight
        column = min(wcols, key=lambda c: _terminal_values(table, c).sum())
    fig, ax = plt.subplots()
    for r, ns, vs in _replica_series(table, column):
        pos = vs > 0
        ax.plot(ns[pos], vs[pos], lw=0.9, alpha=0.6)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(column)
    annotation = ""
    fit = (summary or {}).get("min_edge_loglog_slope")
    if fit is not None:
        annotation = f"fitted slope: {fit['slope']}"
        ax.text(0.05, 0.95, annotation, transform=ax.transAxes,
                va="top", ha="left",
                bbox={"boxstyle": "round", "fc": "white", "alpha": 0.8})
        slope = float(fit["slope"])
        ns = table["n"]
        x = np.array([ns.min(), ns.max()])
        vs = table[column]
        anchor = vs[np.argmax(ns)]
        ax.plot(x, anchor * (x / ns.max()) ** slope, "k--", lw=1.0)
    ax.set_title(job.title or f"log-log decay of {column}")
    return fig, annotation


def _render_histogram(job, table, summary):
    column = job.column or "W0"
    values = _terminal_values(table, column)
    fig, ax = plt.subplots()
    ax.hist(values, bins=40, range=(0.0, 1.0), color="#4878a8",
            edgecolor="white")
    # the non-degeneracy check is about mass escaping to the extremes
    ax.axvline(0.0, color="red", lw=1.2, ls="--")
    ax.axvline(1.0, color="red", lw=1.2, ls="--")
    ax.set_xlabel(f"terminal {column}/(n+2)")
    ax.set_ylabel("replicas")
    ax.set_title(job.title
                 or f"terminal fractions across {values.size} replicas")
    return fig, ""


_RENDERERS = {
    "convergence": _render_convergence,
    "loglog-decay": _render_loglog,
    "histogram": _render_histogram,
}


def render(job: PlotJob) -> dict:
    """Render one figure; returns output paths and the slope annotation."""
    table = read_table(job.csv_path)
    summary = read_summary(job.summary_path) if job.summary_path else None
    with plt.rc_context(_STYLE):
        fig, annotation = _RENDERERS[job.kind](job, table, summary)
        paths = _save(fig, job.out_path)
    return {"outputs": paths, "annotation": annotation,
            "config_hash": config_hash(summary)}
