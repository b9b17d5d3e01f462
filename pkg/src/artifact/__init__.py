"""Spatial discretizations of torus and circle maps.

Grids, map expressions, functional-graph analysis of discretized maps,
grid measures, rotation sets, discretized linear maps on Z^n, and transfer
operators of expanding circle maps.
"""
from .grid import Grid, round_half_down
from .maps import (CircleExpanding, CircleHomeo, Compose, Displace, Linear2,
                   MapExpr, ShearX, ShearY, Translation, from_json, identity)
from .presets import preset, presets
from .trig import TrigPoly

__version__ = "0.1.0"

__all__ = [
    "Grid", "round_half_down", "TrigPoly", "MapExpr", "ShearX", "ShearY",
    "Displace", "Linear2", "Translation", "Compose", "CircleExpanding",
    "CircleHomeo", "from_json", "identity", "preset", "presets",
]
