"""Integral geometry of horizontal lines in the 3D Heisenberg group.

The package models the rigid-motion group of the Heisenberg group H1 and
its invariant measures on horizontal lines and segments, computes exact
chords of convex bodies, evaluates Lebesgue volume and the
sub-Riemannian perimeter (p-Area), and estimates the kinematic
identities tying them together by Monte Carlo and grid integration.
"""

from .core import (
    TWO_PI,
    FramePose,
    HorizontalLine,
    Point,
    PshMotion,
    contact_form_at,
    frame_from_line,
    levi_length,
    levi_length_fixed_plane,
    line_chart_image,
    line_direction,
    line_from_frame,
    line_point_at,
    line_through,
    motion_affine,
    normalize_angle,
    psh_apply_line,
    psh_apply_point,
    psh_compose,
    psh_inverse,
)
from .bodies import (
    Ball,
    BoundingData,
    Box,
    CapabilityError,
    ChordInterval,
    ConvexBody,
    Ellipsoid,
    Polytope,
    transform_body,
)
from .measures import (
    EllipsoidPatch,
    MeasureResult,
    QuadratureError,
    RectanglePatch,
    SurfacePatch,
    TrianglePatch,
    horizontal_normal_norm,
    p_area,
    p_area_triangulation_oracle,
    volume,
    volume_voxel_oracle,
)
from .estimators import (
    BLOCK,
    DEFAULT_SEED,
    ContainmentError,
    EstimateResult,
    InvarianceReport,
    InvarianceRow,
    LineWindow,
    Segment,
    containment_probability,
    estimate_chord_integral,
    estimate_line_measure,
    estimate_mean_chord,
    estimate_segment_containment_measure,
    estimate_segment_hit_measure,
    invariance_check,
    line_window,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "TWO_PI",
    "Point",
    "PshMotion",
    "HorizontalLine",
    "FramePose",
    "normalize_angle",
    "psh_apply_point",
    "psh_compose",
    "psh_inverse",
    "motion_affine",
    "line_point_at",
    "line_direction",
    "line_through",
    "line_chart_image",
    "psh_apply_line",
    "contact_form_at",
    "line_from_frame",
    "frame_from_line",
    "levi_length",
    "levi_length_fixed_plane",
    "CapabilityError",
    "ChordInterval",
    "BoundingData",
    "ConvexBody",
    "Ball",
    "Ellipsoid",
    "Box",
    "Polytope",
    "transform_body",
    "SurfacePatch",
    "RectanglePatch",
    "TrianglePatch",
    "EllipsoidPatch",
    "MeasureResult",
    "QuadratureError",
    "horizontal_normal_norm",
    "volume",
    "p_area",
    "volume_voxel_oracle",
    "p_area_triangulation_oracle",
    "DEFAULT_SEED",
    "BLOCK",
    "ContainmentError",
    "LineWindow",
    "Segment",
    "EstimateResult",
    "InvarianceRow",
    "InvarianceReport",
    "line_window",
    "estimate_line_measure",
    "estimate_chord_integral",
    "estimate_segment_hit_measure",
    "estimate_segment_containment_measure",
    "estimate_mean_chord",
    "containment_probability",
    "invariance_check",
]
