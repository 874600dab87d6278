"""Reproducible test shapes: random smooth polygons and the bunny outline."""
from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from .polygon import Polygon


def blob_polygon(n: int, seed: int = 0, jitter: float = 0.05, radius: float = 100.0) -> Polygon:
    """Star-shaped simple polygon with ``n`` edges: a random low-frequency radius plus per-vertex jitter."""
    if n < 3:
        raise ValueError("a polygon needs at least 3 edges")
    rng = np.random.default_rng(seed)
    ang = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
    k = np.arange(1, 7)
    amp = rng.normal(0.0, 0.15, 6) / k
    ph = rng.uniform(0.0, 2.0 * math.pi, 6)
    r = 1.0 + (amp[None, :] * np.cos(k[None, :] * ang[:, None] + ph[None, :])).sum(1)
    r = np.maximum(r + rng.uniform(-jitter, jitter, n), 0.2) * radius
    return Polygon(np.column_stack([r * np.cos(ang), r * np.sin(ang)]))


def bunny_outline() -> Polygon:
    """Silhouette of a sitting rabbit, about 170 x 186 mm with 325 edges."""
    text = resources.files("hollowforge").joinpath("data/bunny_outline.json").read_text(encoding="utf-8")
    data = json.loads(text)
    return Polygon(data["outer"], data.get("holes", []))
