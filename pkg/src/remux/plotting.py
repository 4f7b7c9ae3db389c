"""Deterministic SVG plots.

Fonts are emitted as text, ids use a fixed hash salt and the date metadata
is dropped, so the same data always gives byte-identical files.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .exceptions import PlotError  # noqa: E402

KINDS = ("trace", "histogram", "heatmap")

_RC = {
    "svg.hashsalt": "remux",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "figure.dpi": 100,
    "path.simplify": False,
}


def _save(fig, path):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_table(path, label_column=None):
    """Header plus numeric rows of a CSV file.

    The first column holds labels when ``label_column`` is True; ``None``
    detects it from the data.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise PlotError(f"cannot read {path}: {exc.strerror}") from None
    except csv.Error as exc:
        raise PlotError(str(exc)) from None
    rows = [(i + 1, r) for i, r in enumerate(rows) if r and any(c.strip() for c in r)]
    if not rows:
        raise PlotError("empty data: nothing to plot")
    (_, header), body = rows[0], rows[1:]
    if not body:
        raise PlotError("empty data: nothing to plot", line=2)
    labels, values = [], []
    label_col = _is_label_column(body) if label_column is None else label_column
    for line, row in body:
        if len(row) != len(header):
            raise PlotError(f"expected {len(header)} fields, got {len(row)}", line=line)
        cells = row[1:] if label_col else row
        try:
            values.append([float(c) if c.strip() else np.nan for c in cells])
        except ValueError:
            raise PlotError(f"non-numeric value in {row!r}", line=line) from None
        if label_col:
            labels.append(row[0])
    return header, labels, np.array(values)


def _is_label_column(body):
    for _, row in body:
        try:
            float(row[0])
        except ValueError:
            return True
    return False


def trace_svg(x, ys, names=None, path=None, xlabel="x", ylabel="y", title=None, markers=()):
    """Polyline plot; ``markers`` draws dashed vertical lines."""
    x = np.asarray(x, dtype=float)
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if x.size == 0 or ys.size == 0:
        raise PlotError("empty data: nothing to plot")
    names = names or [f"y{k + 1}" for k in range(len(ys))]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for y, name in zip(ys, names):
            ax.plot(x, y, lw=1.0, label=name)
        for m in markers:
            ax.axvline(m, color="0.5", ls="--", lw=0.6)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(ys) > 1:
            ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def histogram_svg(panels, path=None, bins=80):
    """One panel per qubit.

    Each panel is a dict with ``title``, ``data`` (name -> samples) and
    optional ``fits`` (name -> (x, density)) drawn as solid lines and
    ``means`` drawn as dotted vertical lines.
    """
    if not panels or all(np.size(v) == 0 for p in panels for v in p["data"].values()):
        raise PlotError("empty data: nothing to plot")
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(panels), figsize=(3 * len(panels), 3), squeeze=False)
        for ax, panel in zip(axes[0], panels):
            samples = [np.asarray(v, dtype=float) for v in panel["data"].values()]
            finite = np.concatenate([s[np.isfinite(s)] for s in samples])
            if finite.size == 0:
                raise PlotError(f"empty data in panel {panel.get('title', '')!r}")
            edges = np.linspace(finite.min(), finite.max(), bins + 1)
            for name, s in panel["data"].items():
                s = np.asarray(s, dtype=float)
                ax.hist(s[np.isfinite(s)], bins=edges, density=True, histtype="stepfilled", alpha=0.45, label=name)
            for name, (xf, yf) in panel.get("fits", {}).items():
                ax.plot(xf, yf, lw=1.0, color="k")
            for m in panel.get("means", ()):
                ax.axvline(m, color="k", ls=":", lw=0.8)
            ax.set_title(panel.get("title", ""))
            ax.set_xlabel("s")
        axes[0][0].set_ylabel("density")
        axes[0][0].legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def heatmap_svg(matrix, row_labels, col_labels, path=None, title=None, xlabel="measured", ylabel="prepared"):
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        raise PlotError("empty data: nothing to plot")
    if m.shape != (len(row_labels), len(col_labels)):
        raise PlotError(f"matrix shape {m.shape} does not match labels")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.5, 5.5))
        im = ax.imshow(m, cmap="viridis", interpolation="nearest")
        ax.set_xticks(range(len(col_labels)), col_labels, rotation=90)
        ax.set_yticks(range(len(row_labels)), row_labels)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        fig.colorbar(im, ax=ax, fraction=0.046)
        fig.tight_layout()
        return _save(fig, path)


def plot_csv(path, kind, out=None):
    """Render a CSV file as an SVG of the given kind.

    trace: first column x, remaining columns y series. histogram: each
    column is one sample set. heatmap: first column row labels, header row
    column labels; state-string labels (0/1, g/e, 0/π) are read with Q1
    as the first character.
    """
    if kind not in KINDS:
        raise PlotError(f"unknown plot kind {kind!r}; expected one of {KINDS}")
    header, labels, values = read_table(path, label_column=True if kind == "heatmap" else None)
    if kind == "trace":
        if labels:
            raise PlotError("trace data must be numeric", line=2)
        if values.shape[1] < 2:
            raise PlotError("trace needs an x column and at least one y column", line=1)
        return trace_svg(values[:, 0], values[:, 1:].T, header[1:], out, xlabel=header[0])
    if kind == "histogram":
        if labels:
            raise PlotError("histogram data must be numeric", line=2)
        return histogram_svg([{"title": "", "data": dict(zip(header, values.T))}], out)
    if not labels:
        raise PlotError("heatmap needs row labels in the first column", line=2)
    cols = header[1:]
    xlabel, ylabel = "measured", "prepared"
    if cols and all(set(c) <= set("01geπ") for c in cols + labels):
        order = " ".join(f"Q{k + 1}" for k in range(len(cols[0])))
        xlabel, ylabel = f"measured ({order})", f"prepared ({order})"
    return heatmap_svg(values, labels, cols, out, xlabel=xlabel, ylabel=ylabel)
