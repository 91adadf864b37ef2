"""Isoperimetric profiles of convex bodies: geometry primitives, bounds, grid oracle and audits."""

__version__ = "0.1.0"

from .convex import (  # noqa: E402
    ConvexBody,
    MetricBall,
    hausdorff_distance,
    make_ball,
    make_polytope,
    metric_ball_volume,
    polar_body,
    radial_function,
    regular_polygon,
    support_function,
    volume,
)
from .cones import Cone, cone_profile, geodesic_ball_in_cone, min_solid_angle_vertex, solid_angle, tangent_cone  # noqa: E402
from .transport import TransportMap, analytic_lip_bound, build_map, empirical_lip  # noqa: E402
from .grid import GridRegion, make_grid  # noqa: E402
from .oracle import AnnealSchedule, grid_oracle  # noqa: E402
from .profile import ProfileCurve, ProfileSample, profile_curve, upper_bound  # noqa: E402
from .density import c2_constant, dichotomy_check, epsilon_threshold, h_value  # noqa: E402

__all__ = [
    "AnnealSchedule",
    "Cone",
    "ConvexBody",
    "GridRegion",
    "MetricBall",
    "ProfileCurve",
    "ProfileSample",
    "TransportMap",
    "analytic_lip_bound",
    "build_map",
    "c2_constant",
    "cone_profile",
    "dichotomy_check",
    "empirical_lip",
    "epsilon_threshold",
    "geodesic_ball_in_cone",
    "grid_oracle",
    "h_value",
    "hausdorff_distance",
    "make_ball",
    "make_grid",
    "make_polytope",
    "metric_ball_volume",
    "min_solid_angle_vertex",
    "polar_body",
    "profile_curve",
    "radial_function",
    "regular_polygon",
    "solid_angle",
    "support_function",
    "tangent_cone",
    "upper_bound",
    "volume",
]
