"""Minimal layered SVG writer (y axis points up in model space)."""
from __future__ import annotations

from xml.sax.saxutils import quoteattr


def _f(v: float) -> str:
    return format(float(v), ".6g")


class SvgCanvas:
    def __init__(self, bbox, width: float = 800.0):
        x0, y0, x1, y1 = bbox
        self.bbox = (x0, y0, x1, y1)
        span = max(x1 - x0, y1 - y0, 1e-12)
        self.k = width / span
        self.width = (x1 - x0) * self.k
        self.height = (y1 - y0) * self.k
        self.layers: dict[str, list[str]] = {}
        self.stroke_width = 1.0

    def _xy(self, x, y):
        return (x - self.bbox[0]) * self.k, (self.bbox[3] - y) * self.k

    def _layer(self, name: str) -> list[str]:
        return self.layers.setdefault(name, [])

    def circle(self, layer, x, y, r, stroke="none", fill="none"):
        px, py = self._xy(x, y)
        self._layer(layer).append(
            f'<circle cx="{_f(px)}" cy="{_f(py)}" r="{_f(max(r * self.k, 0.5))}" '
            f'stroke="{stroke}" fill="{fill}" stroke-width="{_f(self.stroke_width)}"/>'
        )

    def ellipse(self, layer, x, y, a, b, stroke="black", fill="none"):
        px, py = self._xy(x, y)
        self._layer(layer).append(
            f'<ellipse cx="{_f(px)}" cy="{_f(py)}" rx="{_f(a * self.k)}" ry="{_f(b * self.k)}" '
            f'stroke="{stroke}" fill="{fill}" stroke-width="{_f(self.stroke_width)}"/>'
        )

    def polyline(self, layer, pts, stroke="black", closed=False, fill="none"):
        coords = " ".join("{},{}".format(*map(_f, self._xy(p[0], p[1]))) for p in pts)
        tag = "polygon" if closed else "polyline"
        self._layer(layer).append(
            f'<{tag} points="{coords}" stroke="{stroke}" fill="{fill}" stroke-width="{_f(self.stroke_width)}"/>'
        )

    def render(self) -> str:
        out = [
            '<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{_f(self.width)}" height="{_f(self.height)}" '
            f'viewBox="0 0 {_f(self.width)} {_f(self.height)}">'
        ]
        for name, items in self.layers.items():
            out.append(f"<g id={quoteattr(name)}>")
            out.extend(items)
            out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"
