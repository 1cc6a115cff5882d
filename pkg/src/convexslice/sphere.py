"""Transversal sphere cutting prescribed fractions, via graph lifting.

The graph map ``x -> (x, |x|^2)`` turns spheres in R^d into non-vertical
hyperplane sections of the graph in R^{d+1}: points inside the sphere lift
to points below the plane.  Cutting prescribed fractions from d+1 bodies
with a sphere therefore reduces to the halfspace problem one dimension up,
with each body replaced by the shadow-volume measure of its lifted hull
(:class:`convexslice.measures.LiftedMeasure`, whose mass arithmetic stays
exact in the base space).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .errors import NoConvergence, NoIntersection, UnsupportedDimension, VerticalSolution
from .geometry import Body, Halfspace, build_body
from .halfspace import SolveOptions, SolveReport, as_fraction_vector, solve
from .measures import LiftedMeasure
from .separation import Family, WellSeparationReport, ensure_well_separated

VERTICAL_NORMAL_TOL = 1e-9
GRID_PER_FACET = 64


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        object.__setattr__(self, "center", c)
        if not (np.isfinite(c).all() and math.isfinite(self.radius)):
            raise ValueError("sphere center and radius must be finite")
        if self.radius <= 0.0:
            raise ValueError("sphere radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return ((pts - self.center) ** 2).sum(axis=1) <= self.radius**2


def lift_point(x) -> np.ndarray:
    """Append the squared norm: (x_1, ..., x_d) -> (x, |x|^2)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.append(x, x @ x)
    return np.hstack([x, (x * x).sum(axis=1, keepdims=True)])


def _facet_grid(body: Body, per_facet: int) -> np.ndarray:
    """Deterministic sample of the body's boundary, ~per_facet points each."""
    d = body.dim
    if d == 1:
        a, b = body.vertices[:, 0].min(), body.vertices[:, 0].max()
        return np.linspace(a, b, per_facet)[:, None]
    pieces = [body.vertices]
    if d == 2:
        w = np.linspace(0.0, 1.0, per_facet)[1:-1, None]
        for i, j in body.edges:
            p, q = body.vertices[i], body.vertices[j]
            pieces.append(p + w * (q - p))
    else:
        for ring_idx in body.facet_rings:
            ring = body.vertices[ring_idx]
            n_tri = max(len(ring) - 2, 1)
            levels = max(2, int(round(math.sqrt(2.0 * per_facet / n_tri))))
            bary = [(i, j) for i in range(levels + 1)
                    for j in range(levels + 1 - i)]
            uv = np.array(bary, dtype=float) / levels
            for k in range(1, len(ring) - 1):
                a, b, c = ring[0], ring[k], ring[k + 1]
                pieces.append(a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a))
    return np.vstack(pieces)


@dataclass(frozen=True)
class LiftedInstance:
    """A base family plus its lifted halfspace problem one dimension up."""

    base_family: Family
    family: Family
    measures: tuple[LiftedMeasure, ...]
    base_report: WellSeparationReport
    lifted_report: WellSeparationReport


def build_lifted_instance(family: Family, per_facet: int = GRID_PER_FACET,
                          seed: int = 0) -> LiftedInstance:
    """Lift every body's boundary sample and wrap the shadow measures.

    The hulls are inner approximations of the true lifted supports (the
    graph of the squared norm is curved); they are used only for separation
    checks and selection points.  All mass queries go through the exact
    (or, in base dimension 3, quadrature-bounded) lifted measures.
    """
    base_report = ensure_well_separated(family)
    if family.dim > 3:
        raise UnsupportedDimension(
            f"sphere solving supports base dimension <= 3, got {family.dim}")
    hulls = []
    measures = []
    for i, body in enumerate(family.bodies):
        pts = _facet_grid(body, per_facet)
        hulls.append(build_body(lift_point(pts)))
        measures.append(LiftedMeasure(body, seed=seed + i))
    lifted = Family(tuple(hulls))
    lifted_report = ensure_well_separated(lifted)
    return LiftedInstance(base_family=family, family=lifted,
                          measures=tuple(measures), base_report=base_report,
                          lifted_report=lifted_report)


def halfspace_to_sphere(w, c: float):
    """Sphere whose lifted-graph section plane is ``{w . (x, z) = c}``.

    Returns the base :class:`Halfspace` instead when the plane is vertical
    (|last component of w| below tolerance): an infinite-radius limit.
    """
    w = np.asarray(w, dtype=float)
    nrm = np.linalg.norm(w)
    if nrm == 0.0:
        raise ValueError("zero normal")
    w, c = w / nrm, c / nrm
    k = w[-1]
    if abs(k) <= VERTICAL_NORMAL_TOL:
        return Halfspace(w[:-1], c)
    u = -w[:-1] / (2.0 * k)
    r2 = c / k + u @ u
    if r2 <= 0.0:
        raise NoIntersection(f"plane misses the lifted graph (r^2 = {r2:.3e})")
    return Sphere(u, math.sqrt(r2))


def sphere_to_halfspace(sphere: Sphere) -> tuple[np.ndarray, float]:
    """Unit normal and offset of the lifted plane carving this sphere.

    The last normal component is positive, so points inside the sphere lift
    below the plane.
    """
    raw = np.append(-2.0 * sphere.center, 1.0)
    c = sphere.radius**2 - sphere.center @ sphere.center
    nrm = np.linalg.norm(raw)
    return raw / nrm, float(c / nrm)


def solve_sphere(family: Family, alpha, opts: SolveOptions | None = None,
                 per_facet: int = GRID_PER_FACET,
                 seed: int = 0) -> tuple[Sphere, SolveReport]:
    """Find the sphere cutting volume fraction ``alpha_i`` from each body.

    ``family`` holds d+1 well-separated bodies in R^d.  Solves the lifted
    halfspace problem; a solution plane tilted the other way (negative last
    normal component) maps below-plane mass to the ball's complement, so the
    complementary fractions are solved instead and re-interpreted.  Raises
    :class:`VerticalSolution` when the lifted plane is numerically vertical
    and :class:`NoConvergence` when the achieved ball fractions fail to
    verify against ``alpha``.
    """
    alpha = as_fraction_vector(alpha, len(family))
    if len(family) != family.dim + 1:
        raise ValueError(
            f"need {family.dim + 1} bodies in dimension {family.dim}, "
            f"got {len(family)}")
    inst = build_lifted_instance(family, per_facet=per_facet, seed=seed)

    rep = solve(inst.family, inst.measures, alpha, opts)
    k = rep.halfspace.normal[-1]
    if k < -VERTICAL_NORMAL_TOL:
        # below-plane maps to the ball's outside here; the sphere with ball
        # fractions alpha comes from the complementary-fraction plane
        rep = solve(inst.family, inst.measures, 1.0 - alpha, opts)
        k = rep.halfspace.normal[-1]
        if k > VERTICAL_NORMAL_TOL:
            raise NoConvergence(
                "lifted solves for both fraction vectors tilt the same way",
                report=rep)
    if abs(k) <= VERTICAL_NORMAL_TOL:
        base = halfspace_to_sphere(rep.halfspace.normal, rep.halfspace.offset)
        raise VerticalSolution(
            "lifted solution plane is vertical: the cut is a halfspace, "
            "not a sphere", halfspace=base)

    sphere = halfspace_to_sphere(rep.halfspace.normal, rep.halfspace.offset)
    # verify in the base space: achieved ball fractions against alpha
    bound = max(mu.mass_error_bound() / mu.total_mass for mu in inst.measures)
    tol = max(1e-8, 10.0 * bound)
    achieved = np.array([
        mu.ball_mass(sphere.center, sphere.radius) / mu.total_mass
        for mu in inst.measures])
    err = float(np.abs(achieved - alpha).max())
    if err > tol:
        raise NoConvergence(
            f"ball fractions off by {err:.3e} (tolerance {tol:.3e})",
            report=rep)
    return sphere, rep
