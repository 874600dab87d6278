"""Printability law for elliptic voids in fused-deposition printing."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import BelowMinimum, ConfigError, ProbeTooSmall
from .geom import Ellipse


@dataclass(frozen=True)
class FabricationParams:
    """Printer and packing parameters (lengths in mm, ``theta0`` in degrees)."""

    sigma0: float = 0.2
    delta0: float = 5.0
    theta0: float = 60.0
    delta_wall: float = 25.0
    rho: float = 0.7
    a_min: float = 1.0
    eps0: float | None = None

    def __post_init__(self):
        for name in ("sigma0", "delta0", "delta_wall", "a_min"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if not 0.0 < self.theta0 < 90.0:
            raise ConfigError(f"theta0 must lie in (0, 90) degrees, got {self.theta0!r}")
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"rho must lie in (0, 1), got {self.rho!r}")
        if self.eps0 is not None and not (math.isfinite(self.eps0) and self.eps0 > 0):
            raise ConfigError(f"eps0 must be positive, got {self.eps0!r}")

    @property
    def error_bound(self) -> float:
        """In-disk approximation error; half the layer thickness unless set."""
        return self.sigma0 / 2.0 if self.eps0 is None else self.eps0

    @property
    def threshold(self) -> float:
        """Horizontal semi-axis where the overhang branch takes over."""
        return self.delta0 / (2.0 * math.cos(math.radians(self.theta0)))

    def to_dict(self) -> dict:
        return asdict(self)


def branch_bound(a: float, delta0: float, theta0: float) -> float:
    """Smallest admissible ``b`` on the overhang branch."""
    return a * math.sqrt(4.0 * a * a - delta0 * delta0) / (delta0 * math.tan(math.radians(theta0)))


def is_support_free(a: float, b: float, p: FabricationParams) -> bool:
    """Exact evaluation of the support-free condition, no tolerance."""
    thr = p.delta0 / (2.0 * math.cos(math.radians(p.theta0)))
    if p.a_min <= a <= thr and b >= a:
        return True
    if a >= thr and b >= branch_bound(a, p.delta0, p.theta0):
        return True
    return False


def _max_a(gamma: float, p: FabricationParams) -> float:
    if gamma <= p.threshold:
        return gamma
    d2 = p.delta0 * p.delta0
    t = math.tan(math.radians(p.theta0))
    a = math.sqrt((d2 + math.sqrt(d2 * d2 + 16.0 * gamma * gamma * d2 * t * t)) / 8.0)
    a = min(a, gamma)
    # the closed form may land one ulp past the admissible side
    while a > 0 and not is_support_free(a, gamma, p) and a >= p.threshold:
        a = math.nextafter(a, 0.0)
    return a


def max_support_free_ellipse(gamma: float, p: FabricationParams, center=(0.0, 0.0)) -> Ellipse:
    """Widest support-free ellipse of height ``2*gamma``; raises ProbeTooSmall below ``a_min``."""
    if not gamma > 0:
        raise ProbeTooSmall(f"probe radius {gamma!r} is not positive")
    a = _max_a(float(gamma), p)
    if a < p.a_min:
        raise ProbeTooSmall(f"semi-axis {a:.6g} below a_min={p.a_min:g}")
    return Ellipse(float(center[0]), float(center[1]), a, float(gamma))


def shrink(e: Ellipse, factor: float, p: FabricationParams) -> Ellipse:
    """Uniformly scaled copy; raises BelowMinimum when ``a`` drops under ``a_min``."""
    if not 0.0 < factor <= 1.0:
        raise ValueError(f"shrink factor must lie in (0, 1], got {factor!r}")
    if factor == 1.0:
        return e
    out = e.scaled(factor)
    if out.a < p.a_min:
        raise BelowMinimum(f"shrunk semi-axis {out.a:.6g} below a_min={p.a_min:g}")
    return out
