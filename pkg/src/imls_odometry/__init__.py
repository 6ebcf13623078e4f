"""LiDAR odometry by scan-to-model matching against an IMLS surface."""

from .geometry import DegenerateSystem, RigidTransform, SmallMotion, compose, interpolate, solve_point_to_plane
from .imls import ModelMap, NoSupport
from .registration import MatchResult, Odometer, match_scan
from .scan_io import RunConfig, Sweep

__version__ = "0.1.0"

__all__ = [
    "DegenerateSystem",
    "MatchResult",
    "ModelMap",
    "NoSupport",
    "Odometer",
    "RigidTransform",
    "RunConfig",
    "SmallMotion",
    "Sweep",
    "compose",
    "interpolate",
    "match_scan",
    "solve_point_to_plane",
]
