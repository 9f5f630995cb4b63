"""Diagnostics for fitted graphs: ROC, score histograms, response surfaces,
and loss segmented by a feature.

Every public function returns plain data (lists and floats) wrapped in a
PlotData envelope, so display layers never recompute statistics; they only
scale axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .data import Dataset
from .fitting import predict
from .graph import CATEGORICAL, CLASSIFIER, NUMERICAL, Graph

__all__ = [
    "PlotData",
    "RocCurve",
    "roc_auc",
    "probability_scores",
    "partial2d",
    "segmented_loss",
    "plot_data",
    "PLOT_KINDS",
]

PLOT_KINDS = ("roc", "probability_scores", "partial2d", "segmented_loss")


@dataclass
class PlotData:
    """Envelope for one rendered-statistics payload."""

    kind: str
    payload: dict
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "payload": self.payload, "meta": self.meta}


@dataclass
class RocCurve:
    thresholds: list  # descending; None stands in for "above every score"
    fpr: list
    tpr: list
    auc: float

    def to_payload(self) -> dict:
        return {
            "thresholds": [None if t is None or not math.isfinite(t) else float(t) for t in self.thresholds],
            "fpr": list(self.fpr),
            "tpr": list(self.tpr),
            "auc": self.auc,
        }


def _check_binary(y: np.ndarray) -> None:
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("ROC needs both classes present")


def roc_auc(y_true, scores) -> RocCurve:
    """ROC curve plus trapezoid area.

    Ties share one threshold step, which makes the trapezoid area equal to
    the pairwise ranking probability P(s+ > s-) + 0.5 P(s+ = s-).
    """
    y = np.asarray(y_true, dtype=float)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape or y.ndim != 1 or len(y) == 0:
        raise ValueError("labels and scores must be equal-length nonempty vectors")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    _check_binary(y)

    npos = float(np.sum(y == 1))
    nneg = float(len(y) - npos)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]

    thresholds: list = [None]
    fpr = [0.0]
    tpr = [0.0]
    tp = fp = 0.0
    i = 0
    n = len(y)
    while i < n:
        j = i
        while j < n and s_sorted[j] == s_sorted[i]:
            tp += y_sorted[j]
            fp += 1.0 - y_sorted[j]
            j += 1
        thresholds.append(float(s_sorted[i]))
        fpr.append(fp / nneg)
        tpr.append(tp / npos)
        i = j

    auc = 0.0
    for k in range(1, len(fpr)):
        auc += (fpr[k] - fpr[k - 1]) * (tpr[k] + tpr[k - 1]) / 2.0
    return RocCurve(thresholds, fpr, tpr, float(auc))


def probability_scores(y_true, scores, bins: int = 20) -> PlotData:
    """Per-class histograms of classifier scores over shared [0, 1] bins."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    y = np.asarray(y_true, dtype=float)
    s = np.asarray(scores, dtype=float)
    if y.shape != s.shape or y.ndim != 1 or len(y) == 0:
        raise ValueError("labels and scores must be equal-length nonempty vectors")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if np.any(s < 0) or np.any(s > 1):
        raise ValueError("scores must lie inside [0, 1]")
    edges = np.linspace(0.0, 1.0, bins + 1)
    c0, _ = np.histogram(s[y == 0], bins=edges)
    c1, _ = np.histogram(s[y == 1], bins=edges)
    return PlotData(
        "probability_scores",
        {
            "edges": [float(e) for e in edges],
            "counts0": [int(c) for c in c0],
            "counts1": [int(c) for c in c1],
        },
    )


def _fixed_value(data: Dataset, name: str, stype: str):
    col = data.column(name)
    if stype == NUMERICAL:
        vals = np.asarray(col, dtype=float)
        vals = vals[np.isfinite(vals)]
        if len(vals) == 0:
            raise ValueError(f"column {name!r} has no observed values")
        return float(np.median(vals))
    counts: dict[str, int] = {}
    for v in col:
        if v is None:
            continue
        counts[v] = counts.get(v, 0) + 1
    if not counts:
        raise ValueError(f"column {name!r} has no observed values")
    # modal category; ties break toward the lexicographically first
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]


def partial2d(
    graph: Graph,
    data: Dataset,
    fx: str,
    fy: str,
    resolution: int = 50,
    fixed: Mapping[str, Any] | None = None,
) -> PlotData:
    """Response surface over two numerical features, plus the data scatter.

    The grid spans each feature's observed range padded by 5 percent; all
    other graph features are pinned to `fixed` or to their median / modal
    value in `data`.  Scatter points carry the true target as the label.
    """
    if fx == fy:
        raise ValueError("partial2d needs two different features")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    feats = dict(graph.features())
    for f in (fx, fy):
        if f not in feats:
            raise ValueError(f"graph does not use feature {f!r}")
        if feats[f] != NUMERICAL:
            raise ValueError(f"partial2d needs numerical features; {f!r} is categorical")

    fixed = dict(fixed or {})
    for name, stype in feats.items():
        if name in (fx, fy) or name in fixed:
            continue
        fixed[name] = _fixed_value(data, name, stype)

    def padded_range(name: str) -> tuple[float, float]:
        vals = np.asarray(data.column(name), dtype=float)
        vals = vals[np.isfinite(vals)]
        if len(vals) == 0:
            raise ValueError(f"column {name!r} has no observed values")
        lo, hi = float(vals.min()), float(vals.max())
        pad = (hi - lo) * 0.05
        if pad == 0.0:
            pad = abs(lo) * 0.05 or 0.5
        return lo - pad, hi + pad

    x_lo, x_hi = padded_range(fx)
    y_lo, y_hi = padded_range(fy)
    x_edges = np.linspace(x_lo, x_hi, resolution)
    y_edges = np.linspace(y_lo, y_hi, resolution)
    gx, gy = np.meshgrid(x_edges, y_edges)

    cols: dict[str, np.ndarray] = {}
    total = resolution * resolution
    for name, stype in feats.items():
        if name == fx:
            cols[name] = gx.ravel()
        elif name == fy:
            cols[name] = gy.ravel()
        elif feats[name] == NUMERICAL:
            cols[name] = np.full(total, float(fixed[name]))
        else:
            cols[name] = np.asarray([fixed[name]] * total, dtype=object)

    from .graph import forward

    values = forward(graph, cols)
    grid = values[graph.output_register.id].reshape(resolution, resolution)

    target = graph.output_register.feature
    scatter = []
    if target in data.names:
        tcol = np.asarray(data.column(target), dtype=float)
    else:
        tcol = np.full(data.n, math.nan)
    xcol = np.asarray(data.column(fx), dtype=float)
    ycol = np.asarray(data.column(fy), dtype=float)
    for i in range(data.n):
        if not (math.isfinite(xcol[i]) and math.isfinite(ycol[i])):
            continue
        label = float(tcol[i]) if math.isfinite(tcol[i]) else None
        scatter.append({"x": float(xcol[i]), "y": float(ycol[i]), "label": label})

    return PlotData(
        "partial2d",
        {
            "x_edges": [float(v) for v in x_edges],
            "y_edges": [float(v) for v in y_edges],
            "grid": [[float(v) for v in row] for row in grid],
            "scatter": scatter,
        },
        {"fx": fx, "fy": fy, "fixed": {k: v for k, v in fixed.items()}},
    )


def segmented_loss(graph: Graph, data: Dataset, by: str, bins: int = 25) -> PlotData:
    """Mean pointwise task loss segmented by one feature.

    Numerical features use equal-width bins over the observed range;
    categorical features use one bin per category.  Counts always sum to
    the number of scored rows; empty bins carry count 0 and a null loss.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    feats = dict(graph.features())
    if by not in data.names:
        raise KeyError(f"dataset has no column {by!r}")
    target = graph.output_register.feature
    y = np.asarray(data.column(target), dtype=float)
    preds = predict(graph, data)
    if graph.task == CLASSIFIER:
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("classifier targets must be 0 or 1")
        pointwise = -(y * np.log(preds) + (1.0 - y) * np.log(1.0 - preds))
    else:
        pointwise = (preds - y) ** 2

    stype = data.stype(by)
    if stype == NUMERICAL:
        col = np.asarray(data.column(by), dtype=float)
        keep = np.isfinite(col)
        col = col[keep]
        pw = pointwise[keep]
        if len(col) == 0:
            raise ValueError(f"column {by!r} has no observed values")
        lo, hi = float(col.min()), float(col.max())
        edges = np.linspace(lo, hi, bins + 1)
        if hi > lo:
            idx = np.minimum(((col - lo) / (hi - lo) * bins).astype(int), bins - 1)
        else:
            idx = np.zeros(len(col), dtype=int)
        counts = np.bincount(idx, minlength=bins)
        sums = np.bincount(idx, weights=pw, minlength=bins)
        mean_loss = [
            float(sums[i] / counts[i]) if counts[i] else None for i in range(bins)
        ]
        payload = {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
            "mean_loss": mean_loss,
        }
    else:
        col = data.column(by)
        keep = [v is not None for v in col]
        cats = sorted({v for v, k in zip(col, keep) if k})
        index = {c: i for i, c in enumerate(cats)}
        counts = np.zeros(len(cats), dtype=int)
        sums = np.zeros(len(cats), dtype=float)
        for v, k, lw in zip(col, keep, pointwise):
            if not k:
                continue
            counts[index[v]] += 1
            sums[index[v]] += lw
        mean_loss = [
            float(sums[i] / counts[i]) if counts[i] else None for i in range(len(cats))
        ]
        payload = {
            "categories": list(cats),
            "counts": [int(c) for c in counts],
            "mean_loss": mean_loss,
        }
    return PlotData("segmented_loss", payload, {"by": by, "task": graph.task})


def plot_data(graph: Graph, data: Dataset, kind: str, **params) -> PlotData:
    """Dispatch one named diagnostic for a fitted graph on a dataset."""
    if kind == "roc":
        if graph.task != CLASSIFIER:
            raise ValueError("roc applies to classifier graphs only")
        y = np.asarray(data.column(graph.output_register.feature), dtype=float)
        curve = roc_auc(y, predict(graph, data))
        return PlotData("roc", curve.to_payload())
    if kind == "probability_scores":
        if graph.task != CLASSIFIER:
            raise ValueError("probability_scores applies to classifier graphs only")
        y = np.asarray(data.column(graph.output_register.feature), dtype=float)
        return probability_scores(y, predict(graph, data), bins=params.get("bins", 20))
    if kind == "partial2d":
        return partial2d(
            graph,
            data,
            fx=params["fx"],
            fy=params["fy"],
            resolution=params.get("resolution", 50),
            fixed=params.get("fixed"),
        )
    if kind == "segmented_loss":
        return segmented_loss(graph, data, by=params["by"], bins=params.get("bins", 25))
    raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
