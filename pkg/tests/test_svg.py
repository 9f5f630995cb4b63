"""SVG rendering of plot payloads: well-formed XML with the expected marks."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from symlattice import Dataset, plot_data
from symlattice.graph import NUMERICAL
from symlattice.svg import plot_svg

from _builders import multiply_graph, two_feature_linear_classifier

NS = {"s": "http://www.w3.org/2000/svg"}


def parse(svg: str) -> ET.Element:
    return ET.fromstring(svg)


def els(root, tag):
    return root.findall(f".//s:{tag}", NS)


def texts(root) -> list[str]:
    return [t.text or "" for t in els(root, "text")]


ROC = {
    "kind": "roc",
    "payload": {
        "fpr": [0.0, 0.5, 1.0],
        "tpr": [0.0, 0.75, 1.0],
        "thresholds": [None, 0.8, 0.1],
        "auc": 0.625,
    },
    "meta": {},
}

HIST = {
    "kind": "probability_scores",
    "payload": {
        "edges": [0.0, 0.25, 0.5, 0.75, 1.0],
        "counts0": [5, 3, 0, 1],
        "counts1": [0, 2, 4, 6],
    },
    "meta": {},
}

SURFACE = {
    "kind": "partial2d",
    "payload": {
        # sample points, one per grid column/row
        "x_edges": [0.0, 1.0],
        "y_edges": [0.0, 1.0],
        "grid": [[0.0, 1.0], [0.5, 0.25]],
        "scatter": [
            {"x": 0.5, "y": 0.5, "label": 1},
            {"x": 1.5, "y": 0.2, "label": 0},
            {"x": 1.0, "y": 0.8, "label": None},
        ],
    },
    "meta": {"fx": "x0", "fy": "x1"},
}

SEGMENTS = {
    "kind": "segmented_loss",
    "payload": {"edges": [0.0, 1.0, 2.0, 3.0], "counts": [4, 0, 6], "mean_loss": [0.5, None, 1.0]},
    "meta": {"feature": "x0"},
}


class TestRoc:
    def test_canvas_and_title(self):
        root = parse(plot_svg(ROC))
        assert root.get("width") == "640"
        assert root.get("height") == "440"
        assert root.get("viewBox") == "0 0 640 440"
        assert "ROC curve (AUC = 0.6250)" in texts(root)

    def test_reference_diagonal_is_dashed(self):
        root = parse(plot_svg(ROC))
        lines = els(root, "polyline")
        dashed = [p for p in lines if p.get("stroke-dasharray")]
        solid = [p for p in lines if not p.get("stroke-dasharray")]
        assert len(dashed) == 1
        assert len(solid) == 1
        assert len(solid[0].get("points").split()) == 3  # one point per curve vertex

    def test_axis_labels(self):
        root = parse(plot_svg(ROC))
        t = texts(root)
        assert "false positive rate" in t
        assert "true positive rate" in t


class TestProbabilityScores:
    def test_bars_skip_empty_bins(self):
        root = parse(plot_svg(HIST))
        bars = [
            r
            for r in els(root, "rect")
            if r.get("fill-opacity") == "0.55" and r.get("width") != "12"
        ]
        assert len(bars) == 6  # 3 nonzero bins per class

    def test_legend(self):
        root = parse(plot_svg(HIST))
        t = texts(root)
        assert "class 0" in t
        assert "class 1" in t
        swatches = [r for r in els(root, "rect") if r.get("width") == "12"]
        assert len(swatches) == 2
        assert {s.get("fill") for s in swatches} == {"#4878b0", "#d65f2c"}


class TestSurface:
    def test_heat_cells_use_ramp_endpoints(self):
        root = parse(plot_svg(SURFACE))
        fills = {r.get("fill") for r in els(root, "rect")}
        assert "rgb(26,35,126)" in fills  # value at the low end
        assert "rgb(249,231,76)" in fills  # value at the high end

    def test_scatter_colors_by_label(self):
        root = parse(plot_svg(SURFACE))
        dots = els(root, "circle")
        assert len(dots) == 3
        fills = sorted(d.get("fill") for d in dots)
        assert fills == sorted(["#d62728", "#2a6fb0", "#888888"])

    def test_title_names_both_features(self):
        root = parse(plot_svg(SURFACE))
        assert "Prediction surface: x0 vs x1" in texts(root)


class TestSegmentedLoss:
    def test_bars_and_loss_line(self):
        root = parse(plot_svg(SEGMENTS))
        bars = [r for r in els(root, "rect") if r.get("fill") == "#b8c4cf"]
        assert len(bars) == 2  # empty middle bin drawn as nothing
        line = [p for p in els(root, "polyline") if p.get("stroke") == "#c0392b"]
        assert len(line) == 1
        assert len(line[0].get("points").split()) == 2  # None segment skipped
        dots = [c for c in els(root, "circle") if c.get("fill") == "#c0392b"]
        assert len(dots) == 2

    def test_peak_annotation_and_title(self):
        root = parse(plot_svg(SEGMENTS))
        t = texts(root)
        assert "Loss by x0 segment" in t
        assert "mean loss (peak 1)" in t

    def test_categorical_axis_uses_category_names(self):
        plot = {
            "kind": "segmented_loss",
            "payload": {"categories": ["east", "west"], "counts": [3, 5], "mean_loss": [0.2, 0.1]},
            "meta": {"feature": "region"},
        }
        root = parse(plot_svg(plot))
        t = texts(root)
        assert "east" in t
        assert "west" in t
        assert "Loss by region segment" in t

    def test_feature_names_are_escaped(self):
        plot = {
            "kind": "segmented_loss",
            "payload": {"edges": [0.0, 1.0], "counts": [2], "mean_loss": [0.3]},
            "meta": {"feature": "a<b"},
        }
        svg = plot_svg(plot)
        assert "a&lt;b" in svg
        assert "Loss by a<b segment" in texts(parse(svg))


class TestDispatch:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown plot kind"):
            plot_svg({"kind": "pie", "payload": {}, "meta": {}})

    def test_real_payloads_render_for_all_kinds(self):
        rng = np.random.default_rng(3)
        n = 60
        x0 = rng.uniform(-1.5, 1.5, n)
        x1 = rng.uniform(-2.5, 2.5, n)
        clf = two_feature_linear_classifier()
        scores = np.asarray([clf.eval({"x0": a, "x1": b}) for a, b in zip(x0, x1)])
        cdata = Dataset(
            (("x0", NUMERICAL), ("x1", NUMERICAL), ("target", NUMERICAL)),
            {"x0": x0, "x1": x1, "target": (scores > 0.5).astype(float)},
        )
        rdata = Dataset(
            (("x0", NUMERICAL), ("x1", NUMERICAL), ("y", NUMERICAL)),
            {"x0": x0, "x1": x1, "y": x0 * x1},
        )
        reg = multiply_graph()
        plots = [
            plot_data(clf, cdata, "roc"),
            plot_data(clf, cdata, "probability_scores"),
            plot_data(reg, rdata, "partial2d", fx="x0", fy="x1"),
            plot_data(reg, rdata, "segmented_loss", by="x0"),
        ]
        for plot in plots:
            root = parse(plot_svg(plot.to_json()))
            assert root.tag.endswith("svg")
            assert els(root, "text")  # every plot is labelled
