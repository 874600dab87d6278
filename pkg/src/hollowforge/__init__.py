"""Support-free elliptic voids for FDM parts: 2D packing, 3D hollowing and balance."""
from __future__ import annotations

__version__ = "0.1.0"

from .balance import BalanceProblem, BalanceResult, VoidTerm, center_of_mass, optimize
from .config import Config, load_config
from .ellipse_vd import DualVD, build_dual
from .errors import (
    ConfigError,
    HollowForgeError,
    InvalidPolygon,
    NonManifold,
    OpenMesh,
    SelfIntersectingVoid,
)
from .estimators import EllipsePacker, Hollower
from .extrude import SliceStack, check_stack, emit_hollowed, hollow, propagate, slice_mesh
from .geom import Ellipse
from .mesh import TriMesh, choose_section_direction, read_mesh, write_stl
from .packer import PackingResult, pack
from .polygon import Polygon
from .supportfree import FabricationParams, is_support_free, max_support_free_ellipse

__all__ = [
    "BalanceProblem",
    "BalanceResult",
    "Config",
    "ConfigError",
    "DualVD",
    "Ellipse",
    "EllipsePacker",
    "FabricationParams",
    "HollowForgeError",
    "Hollower",
    "InvalidPolygon",
    "NonManifold",
    "OpenMesh",
    "PackingResult",
    "Polygon",
    "SelfIntersectingVoid",
    "SliceStack",
    "TriMesh",
    "VoidTerm",
    "build_dual",
    "center_of_mass",
    "check_stack",
    "choose_section_direction",
    "emit_hollowed",
    "hollow",
    "is_support_free",
    "load_config",
    "max_support_free_ellipse",
    "optimize",
    "pack",
    "propagate",
    "read_mesh",
    "slice_mesh",
    "write_stl",
]
