"""Convex polytope kernel: hulls, clipping, sections, exact sliced volumes.

Bodies are full-dimensional convex polytopes in R^d (1 <= d <= 5) stored as a
vertex array plus facet inequalities ``normal . x <= offset`` and a cached fan
triangulation that makes sliced-volume queries exact and cheap.  Points are
plain 1-D float arrays throughout; ``None`` stands for an empty intersection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull
from scipy.spatial import HalfspaceIntersection
from scipy.spatial import QhullError

from .errors import (
    DegenerateBody,
    DimensionMismatch,
    UnsupportedDimension,
)

MAX_DIM = 5

# Absolute tolerances are stated at unit scale and multiplied by the body's
# coordinate scale where they are used.
FACET_TOL = 1e-12        # vertex-facet inequality slack
ON_PLANE_TOL = 1e-10     # membership of a point in a hyperplane
VOLUME_RTOL = 1e-10      # relative agreement between volume computations
COINCIDENT_TOL = 1e-9    # merging near-duplicate candidate vertices


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


def as_unit_vector(v, dim: int) -> np.ndarray:
    """Validate and renormalize a direction vector of the given dimension."""
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise DimensionMismatch(f"expected a direction of shape ({dim},), got {v.shape}")
    n = float(np.linalg.norm(v))
    if not np.isfinite(n) or n <= 0.0:
        raise ValueError("direction must be a nonzero finite vector")
    return v / n


class Body:
    """Full-dimensional convex polytope.

    ``vertices`` are the hull's extreme points (counterclockwise ring when
    d == 2).  ``facet_normals``/``facet_offsets`` give the irredundant
    inequality description normal . x <= offset with unit outward normals.
    ``simplex_points``/``simplex_volumes`` hold the fan triangulation from the
    vertex mean, used by the exact sliced-volume kernel.
    """

    def __init__(self, vertices, facet_normals, facet_offsets,
                 simplex_points, simplex_volumes, volume,
                 boundary_simplices):
        self.vertices = _readonly(vertices)
        self.facet_normals = _readonly(facet_normals)
        self.facet_offsets = _readonly(facet_offsets)
        self.simplex_points = _readonly(simplex_points)
        self.simplex_volumes = _readonly(simplex_volumes)
        self.volume = float(volume)
        self._boundary_simplices = np.ascontiguousarray(boundary_simplices, dtype=np.intp)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __repr__(self) -> str:  # pragma: no cover
        return f"Body(d={self.dim}, vertices={len(self.vertices)}, volume={self.volume:.6g})"

    @cached_property
    def scale(self) -> float:
        return float(max(1.0, np.abs(self.vertices).max()))

    @cached_property
    def diameter(self) -> float:
        v = self.vertices
        d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(-1)
        return float(np.sqrt(d2.max()))

    @cached_property
    def centroid(self) -> np.ndarray:
        # volume-weighted mean of fan-simplex centroids
        c = self.simplex_points.mean(axis=1)
        return _readonly(self.simplex_volumes @ c / self.volume)

    def contains(self, points, tol: float = ON_PLANE_TOL):
        """Membership test, broadcasting over leading axes of ``points``."""
        pts = np.asarray(points, dtype=float)
        slack = pts @ self.facet_normals.T - self.facet_offsets
        ok = (slack <= tol * self.scale).all(axis=-1)
        return bool(ok) if pts.ndim == 1 else ok

    @cached_property
    def edges(self):
        """Vertex index pairs of the polytope's 1-faces (d <= 3)."""
        d = self.dim
        n = len(self.vertices)
        if d == 1:
            return ((0, 1),)
        if d == 2:
            return tuple((i, (i + 1) % n) for i in range(n))
        if d == 3:
            onf = np.abs(self.vertices @ self.facet_normals.T - self.facet_offsets)
            onf = onf <= 1e-9 * self.scale
            pairs = []
            for i in range(n):
                both = onf[i] & onf[i + 1:]
                for j in np.flatnonzero(both.sum(axis=1) >= 2):
                    pairs.append((i, i + 1 + int(j)))
            return tuple(pairs)
        raise UnsupportedDimension("edge enumeration is implemented for d <= 3")

    @cached_property
    def facet_rings(self):
        """Ordered vertex-index cycles of the 2-dimensional facets (d == 3)."""
        if self.dim != 3:
            raise UnsupportedDimension("facet rings are only defined for d == 3")
        onf = np.abs(self.vertices @ self.facet_normals.T - self.facet_offsets)
        onf = onf <= 1e-9 * self.scale
        rings = []
        for f in range(len(self.facet_normals)):
            ids = np.flatnonzero(onf[:, f])
            pts = self.vertices[ids]
            center = pts.mean(axis=0)
            nrm = self.facet_normals[f]
            b1 = _any_orthonormal(nrm)
            b2 = np.cross(nrm, b1)
            ang = np.arctan2((pts - center) @ b2, (pts - center) @ b1)
            rings.append(ids[np.argsort(ang)])
        return tuple(rings)

    @cached_property
    def chord_pairs(self):
        """Vertex pairs whose chords can carry section vertices."""
        if self.dim <= 3:
            return np.asarray(self.edges, dtype=np.intp).reshape(-1, 2)
        bs = self._boundary_simplices
        k = bs.shape[1]
        pairs = []
        for i in range(k):
            for j in range(i + 1, k):
                pairs.append(bs[:, [i, j]])
        pairs = np.sort(np.concatenate(pairs), axis=1)
        return np.unique(pairs, axis=0)


def _any_orthonormal(n: np.ndarray) -> np.ndarray:
    """Some unit vector orthogonal to the unit vector ``n`` (d == 3)."""
    a = np.zeros(3)
    a[np.argmin(np.abs(n))] = 1.0
    b = np.cross(n, a)
    return b / np.linalg.norm(b)


def build_body(points) -> Body:
    """Convex hull of a point set as a full-dimensional :class:`Body`.

    Interior points are discarded.  Raises :class:`DegenerateBody` when the
    points do not span the ambient dimension and :class:`UnsupportedDimension`
    outside 1 <= d <= 5.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise DegenerateBody("expected a non-empty (n, d) array of points")
    if not np.isfinite(pts).all():
        raise DegenerateBody("points contain non-finite coordinates")
    n, d = pts.shape
    if not 1 <= d <= MAX_DIM:
        raise UnsupportedDimension(f"ambient dimension {d} is outside 1..{MAX_DIM}")

    if d == 1:
        lo, hi = float(pts.min()), float(pts.max())
        if hi - lo <= 1e-12 * max(1.0, abs(lo), abs(hi)):
            raise DegenerateBody("interval body has zero length")
        verts = np.array([[lo], [hi]])
        return Body(
            vertices=verts,
            facet_normals=np.array([[1.0], [-1.0]]),
            facet_offsets=np.array([hi, -lo]),
            simplex_points=verts[None, :, :],
            simplex_volumes=np.array([hi - lo]),
            volume=hi - lo,
            boundary_simplices=np.array([[0, 1]]),
        )

    if n < d + 1:
        raise DegenerateBody(f"need at least {d + 1} points to span R^{d}")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateBody(f"points do not span R^{d}: {exc}") from exc

    verts = pts[hull.vertices]  # counterclockwise for d == 2

    # qhull emits one equation per boundary simplex; coplanar copies collapse
    # to a single facet inequality.
    eqs = hull.equations
    _, keep = np.unique(np.round(eqs, 9), axis=0, return_index=True)
    eqs = eqs[np.sort(keep)]
    norms = np.linalg.norm(eqs[:, :-1], axis=1)
    facet_normals = eqs[:, :-1] / norms[:, None]
    facet_offsets = -eqs[:, -1] / norms

    remap = np.full(n, -1, dtype=np.intp)
    remap[hull.vertices] = np.arange(len(hull.vertices))
    boundary = remap[hull.simplices]

    c = verts.mean(axis=0)
    corners = pts[hull.simplices]  # (m, d, d)
    simplex_points = np.concatenate(
        [np.broadcast_to(c, (len(corners), 1, d)), corners], axis=1
    )
    vols = np.abs(np.linalg.det(corners - c)) / math.factorial(d)
    mask = vols > 1e-15 * vols.max()
    return Body(
        vertices=verts,
        facet_normals=facet_normals,
        facet_offsets=facet_offsets,
        simplex_points=simplex_points[mask],
        simplex_volumes=vols[mask],
        volume=vols[mask].sum(),
        boundary_simplices=boundary[mask],
    )


def volume(body: Body) -> float:
    """Euclidean volume of the body (sum of its fan-simplex volumes)."""
    return body.volume


@dataclass(frozen=True)
class Halfspace:
    """Closed halfspace ``normal . x <= offset``; the normal is unit length."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        v = np.asarray(self.normal, dtype=float)
        if v.ndim != 1:
            raise DimensionMismatch("halfspace normal must be a 1-D vector")
        n = float(np.linalg.norm(v))
        if not np.isfinite(n) or n <= 0.0:
            raise ValueError("halfspace normal must be nonzero and finite")
        object.__setattr__(self, "normal", _readonly(v / n))
        object.__setattr__(self, "offset", float(self.offset) / n)

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def complement(self) -> "Halfspace":
        return Halfspace(-self.normal, -self.offset)

    def signed_excess(self, points):
        """``normal . x - offset``; <= 0 inside the halfspace."""
        return np.asarray(points, dtype=float) @ self.normal - self.offset


# ---------------------------------------------------------------------------
# Exact sliced volumes
# ---------------------------------------------------------------------------

def simplex_fraction_nonneg(values) -> np.ndarray:
    """Volume fraction of simplices on the nonnegative side of an affine cut.

    ``values`` has shape (..., k): the values of an affine function at the k
    vertices of each k-1 simplex.  Returns, per simplex, the exact fraction of
    its volume where the interpolated function is >= 0.  Vertices with value
    exactly zero count toward the negative group, which does not change the
    (measure-theoretic) answer.
    """
    g = np.asarray(values, dtype=float)
    lead = g.shape[:-1]
    k = g.shape[-1]
    g = g.reshape(-1, k)
    gs = -np.sort(-g, axis=1)  # descending: positives first
    p = (gs > 0.0).sum(axis=1)
    out = np.zeros(len(g))
    out[p == k] = 1.0
    for p0 in range(1, k):
        rows = np.flatnonzero(p == p0)
        if rows.size == 0:
            continue
        a = gs[rows, :p0]          # positive values
        b = -gs[rows, p0:]         # abs of the rest, >= 0
        q0 = k - p0
        prev = np.zeros((q0 + 1, rows.size))
        prev[0] = 1.0
        cur = np.empty_like(prev)
        for i in range(1, p0 + 1):
            ai = a[:, i - 1]
            cur[0] = 1.0
            for j in range(1, q0 + 1):
                bj = b[:, j - 1]
                cur[j] = (ai * cur[j - 1] + bj * prev[j]) / (ai + bj)
            prev, cur = cur, prev
        out[rows] = prev[q0]
    return out.reshape(lead)


def clipped_volume(body: Body, v, t: float) -> float:
    """Volume of ``body ∩ {x : v . x <= t}`` without constructing the clip.

    Exact (up to roundoff): applies the affine-cut fraction kernel to each
    cached fan simplex.  Equals ``volume(clip(body, Halfspace(v, t)))``.
    """
    v = as_unit_vector(v, body.dim)
    gamma = t - body.simplex_points @ v
    frac = simplex_fraction_nonneg(gamma)
    return float(frac @ body.simplex_volumes)


# ---------------------------------------------------------------------------
# Clipping
# ---------------------------------------------------------------------------

def _chebyshev_center(A: np.ndarray, b: np.ndarray):
    """Center and radius of the largest ball in {A x <= b} (unit rows)."""
    d = A.shape[1]
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A_ub = np.column_stack([A, np.ones(len(A))])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * (d + 1),
                  method="highs")
    if not res.success:
        return None, 0.0
    return res.x[:d], float(res.x[d])


def clip(body: Body, halfspace: Halfspace):
    """Intersection of a body with a halfspace; ``None`` if volume is zero."""
    if halfspace.dim != body.dim:
        raise DimensionMismatch("halfspace dimension does not match the body")
    v, t = halfspace.normal, halfspace.offset
    h = body.vertices @ v
    eps = 1e-12 * body.scale
    if h.max() <= t + eps:
        return body
    if h.min() >= t - eps:
        return None

    if body.dim == 1:
        lo, hi = body.vertices[0, 0], body.vertices[-1, 0]
        if v[0] > 0:
            hi = min(hi, t / v[0])
        else:
            lo = max(lo, t / v[0])
        if hi - lo <= eps:
            return None
        return build_body([[lo], [hi]])

    A = np.vstack([body.facet_normals, v[None, :]])
    b = np.concatenate([body.facet_offsets, [t]])
    center, radius = _chebyshev_center(A, b)
    if center is None or radius <= 1e-12 * body.scale:
        return None
    try:
        inter = HalfspaceIntersection(np.column_stack([A, -b]), center)
    except QhullError:
        if radius < 1e-9 * body.scale:
            return None
        raise
    return build_body(inter.intersections)


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Section:
    """Body ∩ hyperplane ``normal . x = offset`` with an orthonormal chart.

    ``vertices`` are ambient extreme points (a counterclockwise ring when the
    section is 2-dimensional); ``coords`` are their chart coordinates
    ``(x - origin) @ basis.T``.
    """

    normal: np.ndarray
    offset: float
    vertices: np.ndarray
    intrinsic_dim: int
    origin: np.ndarray
    basis: np.ndarray
    coords: np.ndarray

    def to_ambient(self, local) -> np.ndarray:
        return self.origin + np.asarray(local, dtype=float) @ self.basis


def section(body: Body, v, t: float):
    """Section of a body by a hyperplane; ``None`` when empty.

    Section vertices are on-plane body vertices plus chord crossings along the
    body's 1-faces, deduplicated and reduced to extreme points.
    """
    v = as_unit_vector(v, body.dim)
    verts = body.vertices
    h = verts @ v
    atol = 1e-12 * body.scale
    parts = [verts[np.abs(h - t) <= atol]]

    pairs = body.chord_pairs
    if len(pairs):
        hi, hj = h[pairs[:, 0]], h[pairs[:, 1]]
        lo_hi = (hi < t - atol) & (hj > t + atol)
        hi_lo = (hj < t - atol) & (hi > t + atol)
        sel = pairs[lo_hi | hi_lo]
        if len(sel):
            P, Q = verts[sel[:, 0]], verts[sel[:, 1]]
            w = (t - h[sel[:, 0]]) / (h[sel[:, 1]] - h[sel[:, 0]])
            parts.append(P + w[:, None] * (Q - P))
    cand = np.concatenate(parts, axis=0)
    if len(cand) == 0:
        return None

    key = np.round(cand / (COINCIDENT_TOL * body.scale))
    _, keep = np.unique(key, axis=0, return_index=True)
    cand = cand[np.sort(keep)]

    origin = cand.mean(axis=0)
    return _section_from_points(v, t, cand, origin, body.dim)


def _section_from_points(v, t, cand, origin, d):
    M = cand - origin
    if len(cand) == 1:
        return Section(_readonly(v), float(t), _readonly(cand), 0,
                       _readonly(cand[0]), _readonly(np.zeros((0, d))),
                       _readonly(np.zeros((1, 0))))
    _, S, Vt = np.linalg.svd(M, full_matrices=False)
    sig_tol = max(1e-9 * S[0], 1e-12)
    m = min(int((S > sig_tol).sum()), d - 1)
    if m == 0:
        pt = cand[:1]
        return Section(_readonly(v), float(t), _readonly(pt), 0,
                       _readonly(pt[0]), _readonly(np.zeros((0, d))),
                       _readonly(np.zeros((1, 0))))
    basis = Vt[:m]
    coords = M @ basis.T
    if m == 1:
        order = [int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))]
        return Section(_readonly(v), float(t), _readonly(cand[order]), 1,
                       _readonly(origin), _readonly(basis),
                       _readonly(coords[order]))
    try:
        hull = ConvexHull(coords)
    except QhullError:
        # rank-tolerance edge case: treat as a segment along the major axis
        return _segment_fallback(v, t, cand, origin, basis, coords)
    idx = hull.vertices  # counterclockwise when m == 2
    return Section(_readonly(v), float(t), _readonly(cand[idx]), m,
                   _readonly(origin), _readonly(basis), _readonly(coords[idx]))


def _segment_fallback(v, t, cand, origin, basis, coords):
    order = [int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))]
    return Section(_readonly(v), float(t), _readonly(cand[order]), 1,
                   _readonly(origin), _readonly(basis[:1]),
                   _readonly(coords[order][:, :1]))


def centroid(sec: Section) -> np.ndarray:
    """Barycenter of a section (with respect to its intrinsic dimension)."""
    m = sec.intrinsic_dim
    if m == 0:
        return sec.vertices[0].copy()
    if m == 1:
        return 0.5 * (sec.vertices[0] + sec.vertices[-1])
    if m == 2:
        c2 = _polygon_centroid(sec.coords)
        return sec.to_ambient(c2)
    hull = ConvexHull(sec.coords)
    center = sec.coords.mean(axis=0)
    corners = sec.coords[hull.simplices]
    vols = np.abs(np.linalg.det(corners - center))
    cents = (corners.sum(axis=1) + center) / (m + 1)
    if vols.sum() <= 0.0:
        return sec.to_ambient(center)
    return sec.to_ambient(vols @ cents / vols.sum())


def _polygon_centroid(ring: np.ndarray) -> np.ndarray:
    x, y = ring[:, 0], ring[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    if abs(area) < 1e-30:
        return ring.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def polygon_area(ring: np.ndarray) -> float:
    """Shoelace area of a counterclockwise 2-D ring."""
    x, y = ring[:, 0], ring[:, 1]
    return float((x * np.roll(y, -1) - np.roll(x, -1) * y).sum() / 2.0)


def _steiner_estimate(sec: Section, samples: int, rng: np.random.Generator):
    """Monte Carlo Steiner point of a section, with per-axis standard errors."""
    m = sec.intrinsic_dim
    if m == 0:
        return sec.vertices[0].copy(), np.zeros(0)
    u = rng.standard_normal((samples, m))
    nrm = np.linalg.norm(u, axis=1)
    good = nrm > 1e-12
    u = u[good] / nrm[good, None]
    h = (sec.coords @ u.T).max(axis=0)  # support values of the section
    y = m * h[:, None] * u              # per-sample estimator terms
    est = y.mean(axis=0)
    sigma = y.std(axis=0, ddof=1) / math.sqrt(len(y))
    return sec.to_ambient(est), sigma


def steiner_point_estimate(sec: Section, samples: int = 20000,
                           seed: int = 0) -> np.ndarray:
    """Monte Carlo estimate of the section's Steiner (curvature) point.

    Averages support-function samples over uniformly random chart directions;
    the estimator is unbiased with O(1/sqrt(samples)) error.
    """
    point, _ = _steiner_estimate(sec, samples, np.random.default_rng(seed))
    return point


def support_interval(body: Body, v) -> tuple[float, float]:
    """Min and max of ``v . x`` over the body (attained at vertices)."""
    v = as_unit_vector(v, body.dim)
    h = body.vertices @ v
    return float(h.min()), float(h.max())


def distance_to_body(body: Body, x) -> float:
    """Euclidean distance from a point to a body (exact; d <= 3)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (body.dim,):
        raise DimensionMismatch("point dimension does not match the body")
    if body.contains(x, tol=1e-12):
        return 0.0
    if body.dim == 1:
        lo, hi = body.vertices[0, 0], body.vertices[-1, 0]
        return float(max(lo - x[0], x[0] - hi, 0.0))
    if body.dim > 3:
        raise UnsupportedDimension("exact point distance is implemented for d <= 3")
    best = float(np.sqrt(((body.vertices - x) ** 2).sum(axis=1)).min())
    E = np.asarray(body.edges, dtype=np.intp)
    P, Q = body.vertices[E[:, 0]], body.vertices[E[:, 1]]
    D = Q - P
    tau = np.clip(((x - P) * D).sum(axis=1) / (D * D).sum(axis=1), 0.0, 1.0)
    proj = P + tau[:, None] * D
    best = min(best, float(np.sqrt(((proj - x) ** 2).sum(axis=1)).min()))
    if body.dim == 3:
        slack = body.facet_normals @ x - body.facet_offsets
        foot = x - slack[:, None] * body.facet_normals
        ok = body.contains(foot, tol=1e-9)
        if ok.any():
            best = min(best, float(np.abs(slack[ok]).min()))
    return best


def max_distance_to_body(body: Body, x) -> float:
    """Largest distance from a point to the body (attained at a vertex)."""
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(((body.vertices - x) ** 2).sum(axis=1)).max())
