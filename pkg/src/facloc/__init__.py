"""Random facility location in the unit square: radii, solvers, and scaling experiments."""

from .geometry import Point, PointSet, ball_query, build_index, dist, grid_points, uniform_sample
from .radii import RadiusProfile, all_radii, radius_after_insert, radius_bisect_oracle, radius_of
from .solvers import (
    FacilitySolution,
    exact_cost,
    grid_cost,
    mp_greedy,
    restricted_exact,
    weiszfeld,
)

__all__ = [
    "FacilitySolution",
    "Point",
    "PointSet",
    "RadiusProfile",
    "all_radii",
    "ball_query",
    "build_index",
    "dist",
    "exact_cost",
    "grid_cost",
    "grid_points",
    "mp_greedy",
    "radius_after_insert",
    "radius_bisect_oracle",
    "radius_of",
    "restricted_exact",
    "uniform_sample",
    "weiszfeld",
]
