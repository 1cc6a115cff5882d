"""Nice measures on convex bodies: uniform volume and lifted (projected) volume.

Both measure variants have, along every unit direction, a finite support
interval, zero mass on hyperplanes, and positive mass on sub-slabs; the
quantile map t = g(v) with mass_below(v, g(v)) = alpha * total is therefore
well defined and continuous, and is computed by bisection.

The lifted variant lives one dimension up: for a base body K in R^d it is the
image of the uniform measure on K under x -> (x, |x|^2).  Its mass below an
ambient hyperplane {w . y = c} is the base volume of
{x in K : w' . x + w_{d+1} |x|^2 <= c} — a halfspace, ball, or ball-complement
slice.  d = 2 uses exact circular-segment geometry; d = 3 uses seeded
quasi-Monte Carlo with a reported error bound.  All formulas work on the
quadratic form directly (never on the huge center/radius of a nearly vertical
plane), which keeps near-linear cuts numerically stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from .errors import DimensionMismatch, ToleranceUnreachable, UnsupportedDimension
from .geometry import (
    Body,
    as_unit_vector,
    clipped_volume,
    simplex_fraction_nonneg,
    support_interval as body_support_interval,
)

QUANTILE_MAX_ITER = 60
QUANTILE_WIDTH_FRAC = 1e-13      # bisection stops when the bracket is this thin
HYPERPLANE_MASS_FRAC = 1e-9      # niceness condition (ii) threshold
VERTICAL_EPS = 1e-13             # |w_{d+1}| below which a lifted cut is linear
QMC_POINTS = 2 ** 17             # per replicate; 8 replicates ~ 10^6 points
QMC_REPLICATES = 8


class SupportInterval(NamedTuple):
    t0: float
    t1: float


class Measure:
    """Common quantile/bisection machinery; subclasses provide mass_below."""

    dimension: int
    total_mass: float

    def mass_below(self, v, t: float) -> float:
        raise NotImplementedError

    def support_interval(self, v) -> SupportInterval:
        raise NotImplementedError

    def mass_error_bound(self) -> float:
        """Bound on the absolute error of a single mass_below evaluation."""
        return 0.0

    @property
    def support_diameter(self) -> float:
        raise NotImplementedError

    def slab_mass(self, v, s0: float, s1: float) -> float:
        if s1 < s0:
            raise ValueError("slab bounds must satisfy s0 <= s1")
        return self.mass_below(v, s1) - self.mass_below(v, s0)

    def quantile(self, v, alpha: float, tol: float = 1e-12) -> float:
        """The unique t with mass_below(v, t) = alpha * total_mass.

        Bisection on the support interval; returns the exact endpoints for
        alpha in {0, 1}.  Raises ToleranceUnreachable when the requested tol
        is below the evaluation error bound.
        """
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        if tol <= 0.0:
            raise ValueError("tol must be positive")
        v = as_unit_vector(v, self.dimension)
        t0, t1 = self.support_interval(v)
        if alpha == 0.0:
            return t0
        if alpha == 1.0:
            return t1
        if self.mass_error_bound() > tol * self.total_mass:
            raise ToleranceUnreachable(
                f"mass error bound {self.mass_error_bound():.3g} exceeds "
                f"tol * total = {tol * self.total_mass:.3g}")
        target = alpha * self.total_mass
        lo, hi = t0, t1
        best, best_err = 0.5 * (t0 + t1), math.inf
        for _ in range(QUANTILE_MAX_ITER):
            mid = 0.5 * (lo + hi)
            m = self.mass_below(v, mid)
            err = abs(m - target)
            if err < best_err:
                best, best_err = mid, err
            if err <= tol * self.total_mass:
                return mid
            if m > target:
                hi = mid
            else:
                lo = mid
            if hi - lo < QUANTILE_WIDTH_FRAC * (t1 - t0):
                break
        if best_err > tol * self.total_mass:
            raise ToleranceUnreachable(
                f"bisection stalled with mass error {best_err / self.total_mass:.3g} "
                f"of total (requested {tol:.3g})")
        return best

    def quantile_many(self, directions, alpha, tol: float = 1e-12) -> np.ndarray:
        """Vectorizable batch quantile; the base class just loops."""
        directions = np.asarray(directions, dtype=float)
        alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (len(directions),))
        return np.array([self.quantile(v, a, tol) for v, a in zip(directions, alphas)])


class UniformMeasure(Measure):
    """Lebesgue volume restricted to a convex body (normalized by nothing)."""

    def __init__(self, body: Body):
        self.body = body
        self.dimension = body.dim
        self.total_mass = body.volume

    def __repr__(self):  # pragma: no cover
        return f"UniformMeasure({self.body!r})"

    def mass_below(self, v, t: float) -> float:
        return clipped_volume(self.body, v, t)

    def support_interval(self, v) -> SupportInterval:
        return SupportInterval(*body_support_interval(self.body, v))

    @property
    def support_diameter(self) -> float:
        return self.body.diameter

    def quantile_many(self, directions, alpha, tol: float = 1e-12) -> np.ndarray:
        """Batched bisection over many directions (used by sweeps and probes)."""
        V = np.asarray(directions, dtype=float)
        if V.ndim != 2 or V.shape[1] != self.dimension:
            raise DimensionMismatch("directions must be (n, d)")
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        alphas = np.broadcast_to(np.asarray(alpha, dtype=float), (len(V),)).copy()
        if ((alphas < 0) | (alphas > 1)).any():
            raise ValueError("alpha entries must lie in [0, 1]")

        H = V @ self.body.vertices.T
        t_lo, t_hi = H.min(axis=1), H.max(axis=1)
        dots = np.einsum("nd,mkd->nmk", V, self.body.simplex_points)
        vols = self.body.simplex_volumes
        target = alphas * self.total_mass

        lo, hi = t_lo.copy(), t_hi.copy()
        out = 0.5 * (t_lo + t_hi)
        edge0, edge1 = alphas == 0.0, alphas == 1.0
        active = ~(edge0 | edge1)
        width_stop = QUANTILE_WIDTH_FRAC * (t_hi - t_lo)
        for _ in range(QUANTILE_MAX_ITER):
            if not active.any():
                break
            mid = 0.5 * (lo + hi)
            gamma = mid[active, None, None] - dots[active]
            mass = simplex_fraction_nonneg(gamma) @ vols
            err_ok = np.abs(mass - target[active]) <= tol * self.total_mass
            go_hi = mass > target[active]
            idx = np.flatnonzero(active)
            # record the evaluated midpoint, not the post-update bracket
            # center: an exact mass hit must return the point it was hit at
            out[idx] = mid[idx]
            hi[idx[go_hi]] = mid[idx[go_hi]]
            lo[idx[~go_hi]] = mid[idx[~go_hi]]
            done = err_ok | ((hi[idx] - lo[idx]) < width_stop[idx])
            active[idx[done]] = False
        out[edge0] = t_lo[edge0]
        out[edge1] = t_hi[edge1]
        return out


def _stable_quadratic_roots(a: float, b: float, c: float):
    """Sorted real roots of a x^2 + b x + c (a > 0); None if no two roots."""
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return None
    sq = math.sqrt(disc)
    q = -(b + sq) / 2.0 if b >= 0.0 else -(b - sq) / 2.0
    r1 = q / a
    r2 = c / q if q != 0.0 else r1
    return (r1, r2) if r1 <= r2 else (r2, r1)


def _segment_bulge(r2: float, r: float, chord: float, long_arc: bool) -> float:
    """Area between a chord and its circular arc, stable for tiny arcs."""
    if chord <= 0.0:
        return 0.0
    phi = 2.0 * math.asin(min(1.0, chord / (2.0 * r)))
    if long_arc:
        phi = 2.0 * math.pi - phi
    if phi < 0.05:
        # series for phi - sin(phi): avoids catastrophic cancellation when the
        # circle is huge (nearly vertical lifted cuts)
        p2 = phi * phi
        f = phi * p2 / 6.0 * (1.0 - p2 / 20.0 + p2 * p2 / 840.0 - p2 * p2 * p2 / 60480.0)
    else:
        f = phi - math.sin(phi)
    return 0.5 * r2 * f


def _disk_region_area(base: Body, wp: np.ndarray, k: float, c: float) -> float:
    """Area of {x in base (2-D) : wp . x + k |x|^2 <= c} for k > 0.

    Walks the counterclockwise ring, classifying vertices and edge crossings
    by the sign of the quadratic form, and accumulates shoelace terms plus
    circular-segment bulges between each exit/entry crossing pair.
    """
    ring = base.vertices
    n = len(ring)
    u = -wp / (2.0 * k)
    r2 = c / k + float(u @ u)
    if r2 <= 0.0:
        return 0.0
    g = ring @ wp + k * (ring * ring).sum(axis=1) - c
    items: list[tuple[np.ndarray, int]] = []  # (point, kind): 0 vertex, 1 entry, 2 exit
    for i in range(n):
        a_pt = ring[i]
        b_pt = ring[(i + 1) % n]
        ga = float(g[i])
        if ga <= 0.0:
            items.append((a_pt, 0))
        dvec = b_pt - a_pt
        aa = k * float(dvec @ dvec)
        if aa <= 0.0:
            continue
        bb = float(wp @ dvec) + 2.0 * k * float(a_pt @ dvec)
        roots = _stable_quadratic_roots(aa, bb, ga)
        if roots is None:
            continue
        lo, hi = max(roots[0], 0.0), min(roots[1], 1.0)
        if hi <= lo:
            continue
        if lo > 0.0:
            items.append((a_pt + lo * dvec, 1))
        if hi < 1.0:
            items.append((a_pt + hi * dvec, 2))

    if not items:
        # no vertex inside and no crossing: the disk misses the polygon or
        # sits entirely inside it
        if base.contains(u):
            return float(min(math.pi * r2, base.volume))
        return 0.0

    pts = np.array([p for p, _ in items])
    x, y = pts[:, 0], pts[:, 1]
    area = 0.5 * float(x @ np.roll(y, -1) - np.roll(x, -1) @ y)
    r = math.sqrt(r2)
    m = len(items)
    for i in range(m):
        if items[i][1] != 2:
            continue
        p_out = pts[i]
        p_in = pts[(i + 1) % m]
        a1 = math.atan2(p_out[1] - u[1], p_out[0] - u[0])
        a2 = math.atan2(p_in[1] - u[1], p_in[0] - u[0])
        ccw = (a2 - a1) % (2.0 * math.pi)
        chord = math.hypot(p_in[0] - p_out[0], p_in[1] - p_out[1])
        area += _segment_bulge(r2, r, chord, long_arc=ccw > math.pi)
    return float(min(max(area, 0.0), base.volume))


def _interval_region_length(base: Body, w: float, k: float, c: float) -> float:
    """Length of {x in [a,b] : w x + k x^2 <= c} for k != 0."""
    a, b = float(base.vertices[0, 0]), float(base.vertices[-1, 0])
    if k > 0.0:
        roots = _stable_quadratic_roots(k, w, -c)
        if roots is None:
            return 0.0
        return max(0.0, min(roots[1], b) - max(roots[0], a))
    roots = _stable_quadratic_roots(-k, -w, c)
    if roots is None:
        return b - a
    left = max(0.0, min(roots[0], b) - a)
    right = max(0.0, b - max(roots[1], a))
    return left + right


class LiftedMeasure(Measure):
    """Projected volume of the lifted body {(x, |x|^2) : x in base}."""

    def __init__(self, base: Body, seed: int = 0,
                 qmc_points: int = QMC_POINTS, qmc_replicates: int = QMC_REPLICATES):
        if base.dim > 3:
            raise UnsupportedDimension("lifted measures support base dimension <= 3")
        self.base = base
        self.dimension = base.dim + 1
        self.total_mass = base.volume
        self.seed = seed
        self.qmc_points = qmc_points
        self.qmc_replicates = qmc_replicates

    def __repr__(self):  # pragma: no cover
        return f"LiftedMeasure(base={self.base!r})"

    # -- mass ---------------------------------------------------------------

    def mass_below(self, w, c: float) -> float:
        w = as_unit_vector(w, self.dimension)
        return self.region_volume(w[:-1], float(w[-1]), float(c))

    def region_volume(self, wp, k: float, c: float) -> float:
        """Base volume of {x in base : wp . x + k |x|^2 <= c} (any scaling)."""
        wp = np.asarray(wp, dtype=float)
        d = self.base.dim
        scale = max(1.0, float(np.linalg.norm(wp)))
        if abs(k) <= VERTICAL_EPS * scale:
            nw = float(np.linalg.norm(wp))
            if nw <= 0.0:
                return self.total_mass if c >= 0.0 else 0.0
            return clipped_volume(self.base, wp / nw, c / nw)
        if d == 1:
            return _interval_region_length(self.base, float(wp[0]), k, c)
        if d == 2:
            if k > 0.0:
                return _disk_region_area(self.base, wp, k, c)
            return self.total_mass - _disk_region_area(self.base, -wp, -k, -c)
        return self._qmc_region_volume(wp, k, c)[0]

    def ball_mass(self, center, radius: float) -> float:
        """Base volume inside the ball B(center, radius)."""
        u = np.asarray(center, dtype=float)
        return self.region_volume(-2.0 * u, 1.0, radius * radius - float(u @ u))

    # -- quasi-Monte Carlo (d == 3) ------------------------------------------

    @cached_property
    def _clouds(self):
        lo = self.base.vertices.min(axis=0)
        hi = self.base.vertices.max(axis=0)
        box_vol = float(np.prod(hi - lo))
        seeds = np.random.SeedSequence(self.seed).spawn(self.qmc_replicates)
        clouds = []
        for s in seeds:
            eng = qmc.Sobol(d=self.base.dim, scramble=True,
                            seed=np.random.default_rng(s))
            pts = lo + eng.random(self.qmc_points) * (hi - lo)
            clouds.append((pts, self.base.contains(pts, tol=0.0)))
        return clouds, box_vol

    def _qmc_region_volume(self, wp, k, c) -> tuple[float, float]:
        clouds, box_vol = self._clouds
        ests = np.empty(len(clouds))
        for i, (pts, inside) in enumerate(clouds):
            q = pts @ wp + k * (pts * pts).sum(axis=1)
            ests[i] = box_vol * np.count_nonzero(inside & (q <= c)) / len(pts)
        bound = 3.0 * ests.std(ddof=1) / math.sqrt(len(ests))
        self._worst_bound = max(getattr(self, "_worst_bound", 0.0), bound)
        return float(ests.mean()), float(bound)

    def mass_error_bound(self) -> float:
        if self.base.dim <= 2:
            return 0.0
        if not hasattr(self, "_calibrated_bound"):
            u = np.asarray(self.base.centroid)
            bounds = []
            for frac in (0.25, 0.5, 0.75):
                r = frac * self.base.diameter
                _, b = self._qmc_region_volume(-2.0 * u, 1.0, r * r - float(u @ u))
                bounds.append(b)
            self._calibrated_bound = max(max(bounds), 1e-12 * self.total_mass)
        return max(self._calibrated_bound, getattr(self, "_worst_bound", 0.0))

    # -- support ---------------------------------------------------------------

    def support_interval(self, w) -> SupportInterval:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.dimension,):
            raise DimensionMismatch(
                f"expected a direction of shape ({self.dimension},), got {w.shape}")
        w = w / np.linalg.norm(w)
        wp, k = w[:-1], float(w[-1])
        lo, hi = _quadratic_range(self.base, wp, k)
        return SupportInterval(lo, hi)

    @cached_property
    def support_diameter(self) -> float:
        verts = self.base.vertices
        lifted = np.column_stack([verts, (verts * verts).sum(axis=1)])
        d2 = ((lifted[:, None, :] - lifted[None, :, :]) ** 2).sum(-1)
        return float(np.sqrt(d2.max()))


def _quadratic_range(base: Body, wp: np.ndarray, k: float) -> tuple[float, float]:
    """Exact min/max of q(x) = wp . x + k |x|^2 over a polytope via its faces.

    Stationary candidates on each face are solved in face-local coordinates, so
    nothing blows up when k is tiny (the stationary point simply lands far
    outside the face and is discarded).
    """
    verts = base.vertices
    qv = verts @ wp + k * (verts * verts).sum(axis=1)
    cands = [float(qv.min()), float(qv.max())]
    if abs(k) <= 0.0:
        return min(cands), max(cands)
    d = base.dim

    def q_of(x: np.ndarray) -> float:
        return float(wp @ x + k * (x @ x))

    # interior stationary point
    if d >= 1:
        x_star = -wp / (2.0 * k)
        if base.contains(x_star, tol=1e-12):
            cands.append(q_of(x_star))
    # edge stationary points
    if d >= 2:
        E = np.asarray(base.edges, dtype=np.intp)
        P, Q = verts[E[:, 0]], verts[E[:, 1]]
        D = Q - P
        a2 = 2.0 * k * (D * D).sum(axis=1)
        b1 = D @ wp + 2.0 * k * (P * D).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = -b1 / a2
        good = np.isfinite(tau) & (tau > 0.0) & (tau < 1.0)
        for i in np.flatnonzero(good):
            cands.append(q_of(P[i] + tau[i] * D[i]))
    # facet stationary points (2-D faces)
    if d == 3:
        from .geometry import _any_orthonormal
        for f, ring_ids in enumerate(base.facet_rings):
            nrm = base.facet_normals[f]
            ring = verts[ring_ids]
            o = ring.mean(axis=0)
            b1v = _any_orthonormal(nrm)
            b2v = np.cross(nrm, b1v)
            # q(o + y1 b1 + y2 b2) is quadratic with Hessian 2k I in (y1, y2)
            g1 = float(wp @ b1v + 2.0 * k * (o @ b1v))
            g2 = float(wp @ b2v + 2.0 * k * (o @ b2v))
            y = np.array([-g1 / (2.0 * k), -g2 / (2.0 * k)])
            if np.abs(y).max() > 1e8:
                continue
            pt = o + y[0] * b1v + y[1] * b2v
            loc = (ring - o) @ np.stack([b1v, b2v], axis=1)
            if _point_in_ring(loc, y):
                cands.append(q_of(pt))
    return min(cands), max(cands)


def _point_in_ring(ring2d: np.ndarray, y: np.ndarray) -> bool:
    """Point-in-convex-polygon test (counterclockwise ring, closed)."""
    a = ring2d
    b = np.roll(ring2d, -1, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (y[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (y[0] - a[:, 0])
    return bool((cross >= -1e-12).all())


def uniform_measures(bodies) -> list[UniformMeasure]:
    return [UniformMeasure(b) for b in bodies]


# ---------------------------------------------------------------------------
# Probes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NicenessReport:
    directions: int
    support_ok: bool
    hyperplane_ok: bool
    slab_ok: bool
    max_hyperplane_mass_frac: float
    min_subslab_mass: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.support_ok and self.hyperplane_ok and self.slab_ok


def niceness_probe(mu: Measure, directions: int = 32, seed: int = 0) -> NicenessReport:
    """Spot-check the three defining conditions of a nice measure.

    (i) finite nondegenerate support interval in every sampled direction,
    (ii) hyperplanes carry (numerically) no mass, (iii) interior sub-slabs
    carry strictly positive mass.
    """
    if directions < 10:
        raise ValueError("need at least 10 probe directions")
    rng = np.random.default_rng(seed)
    violations: list[str] = []
    max_plane_frac = 0.0
    min_slab = math.inf
    support_ok = hyperplane_ok = slab_ok = True
    err = mu.mass_error_bound()
    for j in range(directions):
        v = rng.standard_normal(mu.dimension)
        v /= np.linalg.norm(v)
        t0, t1 = mu.support_interval(v)
        if not (math.isfinite(t0) and math.isfinite(t1) and t0 < t1):
            support_ok = False
            violations.append(f"direction {j}: degenerate support ({t0}, {t1})")
            continue
        span = t1 - t0
        t = t0 + rng.uniform(0.1, 0.9) * span
        plane = mu.slab_mass(v, t - 5e-13 * span, t + 5e-13 * span)
        max_plane_frac = max(max_plane_frac, plane / mu.total_mass)
        if plane > HYPERPLANE_MASS_FRAC * mu.total_mass:
            hyperplane_ok = False
            violations.append(
                f"direction {j}: hyperplane mass fraction {plane / mu.total_mass:.3g}")
        s0 = t0 + rng.uniform(0.0, 0.999) * span
        width = max(1e-3 * span, rng.uniform(0.0, 0.2) * span)
        s1 = min(s0 + width, t1)
        s0 = s1 - width if s1 - width > t0 else s0
        slab = mu.slab_mass(v, s0, s1)
        min_slab = min(min_slab, slab)
        if slab <= max(err, 1e-15 * mu.total_mass):
            slab_ok = False
            violations.append(
                f"direction {j}: sub-slab [{s0:.6g}, {s1:.6g}] carries no mass")
    return NicenessReport(directions, support_ok, hyperplane_ok, slab_ok,
                          max_plane_frac, min_slab, tuple(violations))


@dataclass(frozen=True)
class ContinuityReport:
    trials: int
    eps: float
    max_jump: float
    bound: float
    ok: bool


def quantile_continuity_probe(mu: Measure, alpha: float = 0.5, trials: int = 1000,
                              eps: float = 1e-4, seed: int = 0) -> ContinuityReport:
    """No-jump check of the quantile map under small direction perturbations.

    For random unit v and |v' - v| ~ eps, asserts
    |g(v) - g(v')| <= 10 * support_diameter * |v' - v| + 1e-9 * support_diameter.
    """
    rng = np.random.default_rng(seed)
    d = mu.dimension
    V = rng.standard_normal((trials, d))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    W = V + eps * rng.standard_normal((trials, d))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    g1 = mu.quantile_many(V, alpha)
    g2 = mu.quantile_many(W, alpha)
    step = np.linalg.norm(W - V, axis=1)
    diam = mu.support_diameter
    jumps = np.abs(g2 - g1)
    allowed = 10.0 * diam * step + 1e-9 * diam
    worst = int((jumps / allowed).argmax())
    ok = bool(jumps[worst] <= allowed[worst])
    return ContinuityReport(trials, eps, float(jumps[worst]),
                            float(allowed[worst]), ok)


# Thin functional aliases mirroring the operation names used elsewhere.

def mass_below(mu: Measure, v, t: float) -> float:
    return mu.mass_below(v, t)


def support_interval_of(mu: Measure, v) -> SupportInterval:
    return mu.support_interval(v)


def slab_mass(mu: Measure, v, s0: float, s1: float) -> float:
    return mu.slab_mass(v, s0, s1)


def quantile(mu: Measure, v, alpha: float, tol: float = 1e-12) -> float:
    return mu.quantile(v, alpha, tol)
