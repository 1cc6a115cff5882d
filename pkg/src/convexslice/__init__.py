"""Slicing families of well-separated convex bodies by halfspaces and spheres."""

from .errors import (
    ConvexSliceError,
    DegenerateBody,
    DegenerateFlat,
    DimensionMismatch,
    EmptySection,
    GenerationFailed,
    NoConvergence,
    NoIntersection,
    NotWellSeparated,
    SchemaError,
    ToleranceUnreachable,
    UnsupportedDimension,
    VerticalSolution,
)
from .geometry import (
    Body,
    Halfspace,
    Section,
    build_body,
    centroid,
    clip,
    clipped_volume,
    section,
    steiner_point_estimate,
    support_interval,
    volume,
)
from .halfspace import (
    SolveOptions,
    SolveReport,
    TupleState,
    UniquenessReport,
    selection_map_step,
    selection_points,
    solve,
    solve_tangent_partition,
    uniqueness_probe,
)
from .instances import (
    Instance,
    Result,
    generate_instance,
    parse_instance,
    parse_result,
    run_instance,
    serialize_instance,
    serialize_result,
    verify_result,
)
from .measures import (
    LiftedMeasure,
    Measure,
    UniformMeasure,
    niceness_probe,
    quantile_continuity_probe,
    uniform_measures,
)
from .oracle import oracle_angle_sweep
from .render import render_svg
from .separation import (
    Family,
    WellSeparationReport,
    check_well_separated,
    ensure_well_separated,
    orientation_det,
    orientation_invariance_probe,
    orientation_normal,
)
from .sphere import (
    LiftedInstance,
    Sphere,
    build_lifted_instance,
    halfspace_to_sphere,
    lift_point,
    solve_sphere,
    sphere_to_halfspace,
)

__version__ = "0.1.0"
