"""Static SVG rendering of plot payloads.

One self-contained <svg> string per plot kind, built from the same JSON
payloads the HTTP API serves.  No styling dependencies; everything is
inline attributes so the files open anywhere.
"""

from __future__ import annotations

from typing import Any, Mapping
from xml.sax.saxutils import escape

__all__ = ["plot_svg"]

W, H = 640, 440
ML, MR, MT, MB = 64, 24, 40, 52  # margins around the plot area

C_AXIS = "#444444"
C_GRID = "#dddddd"
C_LINE = "#0b6e99"
C_REF = "#999999"
C_BAR0 = "#4878b0"
C_BAR1 = "#d65f2c"
C_LOSS = "#c0392b"
C_DOT0 = "#2a6fb0"
C_DOT1 = "#d62728"
C_DOTNA = "#888888"


def _fmt(v: float) -> str:
    s = f"{v:.4g}"
    return "0" if s == "-0" else s


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


class _Canvas:
    """Pixel mapping plus a growing list of SVG elements."""

    def __init__(self, x0, x1, y0, y1, title: str):
        self.x0, self.x1 = float(x0), float(x1)
        self.y0, self.y1 = float(y0), float(y1)
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts: list[str] = [
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="{MT - 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15" fill="#222">{escape(title)}</text>',
        ]

    def px(self, x: float) -> float:
        return ML + (x - self.x0) / (self.x1 - self.x0) * (W - ML - MR)

    def py(self, y: float) -> float:
        return H - MB - (y - self.y0) / (self.y1 - self.y0) * (H - MT - MB)

    def axes(self, xlabel: str, ylabel: str, x_ticks=None, y_ticks=None):
        for t in x_ticks if x_ticks is not None else _ticks(self.x0, self.x1):
            x = self.px(t)
            self.parts.append(
                f'<line x1="{x:.1f}" y1="{MT}" x2="{x:.1f}" y2="{H - MB}" '
                f'stroke="{C_GRID}" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{x:.1f}" y="{H - MB + 18}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11" fill="{C_AXIS}">{_fmt(t)}</text>'
            )
        for t in y_ticks if y_ticks is not None else _ticks(self.y0, self.y1):
            y = self.py(t)
            self.parts.append(
                f'<line x1="{ML}" y1="{y:.1f}" x2="{W - MR}" y2="{y:.1f}" '
                f'stroke="{C_GRID}" stroke-width="1"/>'
            )
            self.parts.append(
                f'<text x="{ML - 8}" y="{y + 4:.1f}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11" fill="{C_AXIS}">{_fmt(t)}</text>'
            )
        self.parts.append(
            f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" height="{H - MT - MB}" '
            f'fill="none" stroke="{C_AXIS}" stroke-width="1"/>'
        )
        self.parts.append(
            f'<text x="{(ML + W - MR) / 2}" y="{H - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" fill="#222">{escape(xlabel)}</text>'
        )
        self.parts.append(
            f'<text x="16" y="{(MT + H - MB) / 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" fill="#222" '
            f'transform="rotate(-90 16 {(MT + H - MB) / 2})">{escape(ylabel)}</text>'
        )

    def polyline(self, xs, ys, color: str, width: float = 2.0, dash: str | None = None):
        pts = " ".join(f"{self.px(x):.1f},{self.py(y):.1f}" for x, y in zip(xs, ys))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{d}/>'
        )

    def svg(self) -> str:
        body = "\n".join(self.parts)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">\n{body}\n</svg>\n'
        )


def _heat_color(t: float) -> str:
    # dark blue -> teal -> yellow ramp
    t = min(max(t, 0.0), 1.0)
    stops = [(26, 35, 126), (0, 131, 143), (249, 231, 76)]
    seg = t * (len(stops) - 1)
    i = min(int(seg), len(stops) - 2)
    f = seg - i
    r, g, b = (
        round(stops[i][c] + (stops[i + 1][c] - stops[i][c]) * f) for c in range(3)
    )
    return f"rgb({r},{g},{b})"


def _roc_svg(payload: Mapping) -> str:
    auc = payload["auc"]
    cv = _Canvas(0.0, 1.0, 0.0, 1.0, f"ROC curve (AUC = {auc:.4f})")
    cv.axes("false positive rate", "true positive rate")
    cv.polyline([0, 1], [0, 1], C_REF, 1.0, dash="5,4")
    cv.polyline(payload["fpr"], payload["tpr"], C_LINE, 2.0)
    return cv.svg()


def _hist_svg(payload: Mapping) -> str:
    edges = payload["edges"]
    c0, c1 = payload["counts0"], payload["counts1"]
    top = max(max(c0, default=0), max(c1, default=0), 1)
    cv = _Canvas(edges[0], edges[-1], 0.0, top * 1.05, "Probability scores by true class")
    cv.axes("predicted probability", "count")
    for counts, color in ((c0, C_BAR0), (c1, C_BAR1)):
        for i, c in enumerate(counts):
            if c == 0:
                continue
            x, x2 = cv.px(edges[i]), cv.px(edges[i + 1])
            y = cv.py(c)
            cv.parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{x2 - x:.1f}" '
                f'height="{cv.py(0) - y:.1f}" fill="{color}" fill-opacity="0.55"/>'
            )
    cv.parts.append(
        f'<rect x="{W - MR - 150}" y="{MT + 8}" width="12" height="12" fill="{C_BAR0}" fill-opacity="0.55"/>'
        f'<text x="{W - MR - 132}" y="{MT + 18}" font-family="sans-serif" font-size="11">class 0</text>'
        f'<rect x="{W - MR - 150}" y="{MT + 26}" width="12" height="12" fill="{C_BAR1}" fill-opacity="0.55"/>'
        f'<text x="{W - MR - 132}" y="{MT + 36}" font-family="sans-serif" font-size="11">class 1</text>'
    )
    return cv.svg()


def _cell_bounds(centers) -> list[float]:
    # grid coordinates are sample points; cells extend halfway to neighbors
    if len(centers) == 1:
        c = float(centers[0])
        return [c - 0.5, c + 0.5]
    mids = [(a + b) / 2.0 for a, b in zip(centers, centers[1:])]
    return [2.0 * centers[0] - mids[0], *mids, 2.0 * centers[-1] - mids[-1]]


def _partial2d_svg(payload: Mapping, meta: Mapping) -> str:
    xb = _cell_bounds(payload["x_edges"])
    yb = _cell_bounds(payload["y_edges"])
    grid = payload["grid"]
    flat = [v for row in grid for v in row]
    lo, hi = min(flat), max(flat)
    span = (hi - lo) or 1.0
    fx = meta.get("fx", "x")
    fy = meta.get("fy", "y")
    cv = _Canvas(xb[0], xb[-1], yb[0], yb[-1], f"Prediction surface: {fx} vs {fy}")
    for iy, row in enumerate(grid):
        for ix, v in enumerate(row):
            x, x2 = cv.px(xb[ix]), cv.px(xb[ix + 1])
            y, y2 = cv.py(yb[iy + 1]), cv.py(yb[iy])
            cv.parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{x2 - x + 0.5:.1f}" '
                f'height="{y2 - y + 0.5:.1f}" fill="{_heat_color((v - lo) / span)}"/>'
            )
    for row in payload.get("scatter", []):
        label = row.get("label")
        color = C_DOTNA if label is None else (C_DOT1 if label else C_DOT0)
        cv.parts.append(
            f'<circle cx="{cv.px(row["x"]):.1f}" cy="{cv.py(row["y"]):.1f}" r="2.6" '
            f'fill="{color}" stroke="white" stroke-width="0.6"/>'
        )
    cv.axes(fx, fy)
    return cv.svg()


def _segmented_svg(payload: Mapping, meta: Mapping) -> str:
    counts = payload["counts"]
    losses = payload["mean_loss"]
    feature = meta.get("feature", meta.get("by", ""))
    categorical = "categories" in payload
    if categorical:
        edges = list(range(len(counts) + 1))
        centers = [i + 0.5 for i in range(len(counts))]
    else:
        edges = payload["edges"]
        centers = [(edges[i] + edges[i + 1]) / 2 for i in range(len(counts))]
    top = max(max(counts, default=0), 1)
    cv = _Canvas(edges[0], edges[-1], 0.0, top * 1.05, f"Loss by {feature} segment")
    if categorical:
        cv.axes(feature or "category", "count", x_ticks=[])
        for i, name in enumerate(payload["categories"]):
            cv.parts.append(
                f'<text x="{cv.px(i + 0.5):.1f}" y="{H - MB + 18}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10" fill="{C_AXIS}">{escape(str(name))}</text>'
            )
    else:
        cv.axes(feature, "count")
    for i, c in enumerate(counts):
        if c == 0:
            continue
        x, x2 = cv.px(edges[i]), cv.px(edges[i + 1])
        y = cv.py(c)
        cv.parts.append(
            f'<rect x="{x + 0.5:.1f}" y="{y:.1f}" width="{max(x2 - x - 1.0, 0.5):.1f}" '
            f'height="{cv.py(0) - y:.1f}" fill="#b8c4cf"/>'
        )
    known = [(cx, ls) for cx, ls in zip(centers, losses) if ls is not None]
    if known:
        l_hi = max(ls for _, ls in known) or 1.0
        pts = [(cx, ls / l_hi * cv.y1 * 0.9) for cx, ls in known]
        cv.polyline([p[0] for p in pts], [p[1] for p in pts], C_LOSS, 2.0)
        for cx, y in pts:
            cv.parts.append(
                f'<circle cx="{cv.px(cx):.1f}" cy="{cv.py(y):.1f}" r="3" fill="{C_LOSS}"/>'
            )
        cv.parts.append(
            f'<text x="{W - MR - 4}" y="{MT + 14}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{C_LOSS}">'
            f"mean loss (peak {_fmt(l_hi)})</text>"
        )
    return cv.svg()


def plot_svg(plot: Mapping[str, Any]) -> str:
    """Render one plot payload (as produced by the analysis layer) to SVG."""
    kind = plot.get("kind")
    payload = plot.get("payload", {})
    meta = plot.get("meta", {}) or {}
    if kind == "roc":
        return _roc_svg(payload)
    if kind == "probability_scores":
        return _hist_svg(payload)
    if kind == "partial2d":
        return _partial2d_svg(payload, meta)
    if kind == "segmented_loss":
        return _segmented_svg(payload, meta)
    raise ValueError(f"unknown plot kind {kind!r}")
