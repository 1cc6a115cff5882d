"""Solve for the halfspace cutting prescribed mass fractions from n bodies.

Given n measures in R^n with well-separated supports and a fraction vector
alpha, there is exactly one halfspace ``{x : v . x <= t}`` whose bounding
hyperplane meets every support, cuts mass fraction ``alpha_i`` from measure
``i``, and carries the positively oriented normal (see
:func:`convexslice.separation.orientation_det`).  This module finds it.

The driver is a damped fixed-point iteration on one point per body: map the
current tuple to its oriented normal ``v``, slice each body at its own
``alpha_i``-quantile offset along ``v``, and replace each point with a
selection point of its slice.  A fixed point is a common hyperplane.  A
Newton corrector on the offset mismatches finishes to tight tolerance;
boundary fractions (0 or 1, tangent configurations) are reached through a
continuation schedule on alpha.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial._qhull import QhullError

from .errors import EmptySection, NoConvergence
from .geometry import Body, Halfspace, _polygon_centroid, as_unit_vector, centroid, section
from .measures import LiftedMeasure, Measure, uniform_measures
from .separation import Family, ensure_well_separated, orientation_det, orientation_normal

ENGINES = ("fixpoint", "newton", "hybrid")
SELECTIONS = ("centroid", "steiner")
DEFAULT_SCHEDULE = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)


def as_fraction_vector(alpha, n: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    if a.ndim != 1 or len(a) != n:
        raise ValueError(f"expected {n} fractions, got shape {a.shape}")
    if not np.isfinite(a).all() or (a < 0.0).any() or (a > 1.0).any():
        raise ValueError("fractions must lie in [0, 1]")
    return a


@dataclass(frozen=True)
class SolveOptions:
    """Tuning knobs for :func:`solve`.

    engine: "fixpoint" (damped selection-map iteration), "newton"
    (tangent-chart Newton on the offset mismatches), or "hybrid" (fixpoint
    until coarse, then Newton — the default).
    """

    engine: str = "hybrid"
    damping: float = 0.5
    max_iterations: int = 200
    residual_tol: float = 1e-9
    continuation_schedule: Sequence[int] = DEFAULT_SCHEDULE
    multistart_count: int = 4
    seed: int = 42
    selection: str = "centroid"
    steiner_samples: int = 20000
    newton_step: float = 1e-6
    switch_residual: float = 1e-3

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.selection not in SELECTIONS:
            raise ValueError(f"selection must be one of {SELECTIONS}")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")
        if self.max_iterations < 1 or self.multistart_count < 1:
            raise ValueError("iteration and start counts must be >= 1")
        sched = tuple(int(s) for s in self.continuation_schedule)
        if any(s < 2 for s in sched):
            raise ValueError("continuation schedule entries must be >= 2")
        object.__setattr__(self, "continuation_schedule", sched)


@dataclass(frozen=True)
class TupleState:
    """One point per body, the state moved by the selection map."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("TupleState expects an (n, dim) point array")
        object.__setattr__(self, "points", pts)


@dataclass
class SolveReport:
    halfspace: Halfspace | None
    per_body_fraction: np.ndarray
    t_values: np.ndarray
    orientation_det: float
    iterations: int
    residual_history: list[float]
    engine_used: str
    converged: bool
    residual: float
    alpha: np.ndarray
    restarts: int = 0


# ---------------------------------------------------------------------------
# Selection points
# ---------------------------------------------------------------------------

def _volume_centroid_3d(points: np.ndarray) -> np.ndarray:
    try:
        hull = ConvexHull(points)
    except QhullError:
        return points.mean(axis=0)
    ref = points[hull.vertices].mean(axis=0)
    corners = points[hull.simplices]
    vols = np.abs(np.linalg.det(corners - ref))
    if vols.sum() <= 0.0:
        return ref
    cents = (corners.sum(axis=1) + ref) / 4.0
    return vols @ cents / vols.sum()


def _face_band_point(body: Body, v: np.ndarray, t: float) -> np.ndarray:
    """Mean of the vertices supporting the nearest face when the cutting
    plane falls (numerically) outside the body."""
    h = body.vertices @ v
    band = max(1e-9 * body.scale, 1e-12)
    near = np.abs(h - t) <= band
    if not near.any():
        lo, hi = h.min(), h.max()
        if t < lo:
            near = np.abs(h - lo) <= band
        elif t > hi:
            near = np.abs(h - hi) <= band
        else:
            raise EmptySection(
                f"offset {t} crosses the body but yielded no section")
    return body.vertices[near].mean(axis=0)


def _section_point(body: Body, mu: Measure, v: np.ndarray, t: float,
                   selection: str, steiner_samples: int, seed: int) -> np.ndarray:
    sec = section(body, v, t)
    if sec is None:
        point = _face_band_point(body, v, t)
        base = point[:-1] if isinstance(mu, LiftedMeasure) else None
    elif selection == "steiner" and sec.intrinsic_dim > 0:
        from .geometry import steiner_point_estimate
        point = steiner_point_estimate(sec, steiner_samples, seed)
        base = point[:-1] if isinstance(mu, LiftedMeasure) else None
    else:
        point = centroid(sec)
        base = None
        if isinstance(mu, LiftedMeasure):
            base = _projected_centroid(sec)
    if isinstance(mu, LiftedMeasure) and abs(v[-1]) > 1e-9 and base is not None:
        # re-anchor on the cutting plane above the base-space centroid: the
        # hull's extra height coordinate carries the inner-approximation
        # error, the base coordinates do not
        z = (t - base @ v[:-1]) / v[-1]
        return np.append(base, z)
    return point


def _projected_centroid(sec) -> np.ndarray | None:
    """Centroid of the section's shadow in the first dim-1 coordinates."""
    pts = sec.vertices[:, :-1]
    m = sec.intrinsic_dim
    if m == 0:
        return pts[0]
    if m == 1:
        return 0.5 * (pts[0] + pts[-1])
    if pts.shape[1] == 2:
        return _polygon_centroid(pts)  # ring order survives the projection
    if pts.shape[1] == 3:
        return _volume_centroid_3d(pts)
    return None


def selection_points(family: Family, measures: Sequence[Measure], alpha,
                     v, *, selection: str = "centroid",
                     steiner_samples: int = 20000, seed: int = 0) -> np.ndarray:
    """One point per body on its own ``alpha_i``-quantile hyperplane.

    For each body, ``t_i`` is the offset along ``v`` below which measure
    ``i`` has mass fraction ``alpha_i``; the returned point is a selection
    point (centroid by default) of ``body_i ∩ {v . x = t_i}``.
    """
    v = as_unit_vector(v, family.dim)
    alpha = as_fraction_vector(alpha, len(family))
    ts = [mu.quantile(v, a, tol=_quantile_tol(mu))
          for mu, a in zip(measures, alpha)]
    return np.array([
        _section_point(body, mu, v, t, selection, steiner_samples, seed + i)
        for i, (body, mu, t) in enumerate(zip(family.bodies, measures, ts))])


def selection_map_step(family: Family, measures: Sequence[Measure], alpha,
                       x: TupleState, *, selection: str = "centroid",
                       steiner_samples: int = 20000, seed: int = 0) -> TupleState:
    """One application of the map driving the fixed-point engine.

    Reads the oriented normal off the current tuple, then replaces each
    point with the selection point of its body's quantile slice.  Fixed
    points are exactly the solutions.
    """
    v = orientation_normal(x.points)
    pts = selection_points(family, measures, alpha, v, selection=selection,
                           steiner_samples=steiner_samples, seed=seed)
    return TupleState(pts)


def _quantile_tol(mu: Measure) -> float:
    bound = mu.mass_error_bound()
    if bound <= 0.0:
        return 1e-12
    return max(1e-12, 1.5 * bound / mu.total_mass)


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------

class _Problem:
    """One solve's shared state: measures, fraction targets, tolerances."""

    def __init__(self, family: Family, measures: Sequence[Measure],
                 alpha: np.ndarray, opts: SolveOptions):
        self.family = family
        self.measures = list(measures)
        self.alpha = alpha
        self.opts = opts
        self.n = len(family)
        self.totals = np.array([mu.total_mass for mu in self.measures])
        bounds = np.array([mu.mass_error_bound() for mu in self.measures])
        self.frac_bound = float((bounds / self.totals).max())
        # sampled masses cannot certify below their quadrature error
        self.tol = max(opts.residual_tol, 10.0 * self.frac_bound)
        self.newton_h = max(opts.newton_step, 10.0 * self.frac_bound)
        self._qtols = [_quantile_tol(mu) for mu in self.measures]

    def quantiles(self, v: np.ndarray, alpha=None) -> np.ndarray:
        a = self.alpha if alpha is None else alpha
        return np.array([mu.quantile(v, ai, tol=qt)
                         for mu, ai, qt in zip(self.measures, a, self._qtols)])

    def fractions(self, v: np.ndarray, t: float) -> np.ndarray:
        return np.array([mu.mass_below(v, t)
                         for mu in self.measures]) / self.totals

    def residual(self, v: np.ndarray, ts: np.ndarray, alpha=None):
        a = self.alpha if alpha is None else alpha
        t = float(ts.mean())
        fr = self.fractions(v, t)
        return float(np.abs(fr - a).max()), t, fr

    def select(self, v: np.ndarray, ts: np.ndarray) -> np.ndarray:
        opts = self.opts
        return np.array([
            _section_point(body, mu, v, t, opts.selection,
                           opts.steiner_samples, opts.seed + i)
            for i, (body, mu, t) in enumerate(
                zip(self.family.bodies, self.measures, ts))])


@dataclass
class _Iterate:
    v: np.ndarray
    ts: np.ndarray
    t: float
    fractions: np.ndarray
    residual: float


def _evaluate(pb: _Problem, v: np.ndarray, alpha=None) -> _Iterate:
    ts = pb.quantiles(v, alpha)
    res, t, fr = pb.residual(v, ts, alpha)
    return _Iterate(v, ts, t, fr, res)


def _run_fixpoint(pb: _Problem, v0: np.ndarray, alpha: np.ndarray,
                  max_iter: int, target: float, history: list[float]):
    """Damped selection-map iteration.  Returns the best iterate seen."""
    lam = pb.opts.damping
    cur = _evaluate(pb, v0, alpha)
    history.append(cur.residual)
    best = cur
    x = pb.select(v0, cur.ts)
    for _ in range(max_iter):
        if best.residual <= target:
            break
        v = orientation_normal(x)
        nxt = _evaluate(pb, v, alpha)
        history.append(nxt.residual)
        if nxt.residual < best.residual:
            best = nxt
        if nxt.residual > cur.residual:
            lam = max(0.5 * lam, 0.05)
        cur = nxt
        fx = pb.select(v, nxt.ts)
        x = (1.0 - lam) * x + lam * fx
    return best


def _tangent_basis(v: np.ndarray) -> np.ndarray:
    """Orthonormal (n, n-1) basis of the hyperplane orthogonal to v."""
    _, _, vt = np.linalg.svd(v[None, :])
    return vt[1:].T


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _run_newton(pb: _Problem, v0: np.ndarray, alpha: np.ndarray,
                max_iter: int, target: float, history: list[float]):
    """Newton on F(v) = (t_1 - t_n, ..., t_{n-1} - t_n) over a tangent chart."""
    v = _unit(np.asarray(v0, dtype=float))
    cur = _evaluate(pb, v, alpha)
    history.append(cur.residual)
    best = cur
    h = pb.newton_h
    for _ in range(max_iter):
        if best.residual <= target:
            break
        F = cur.ts[:-1] - cur.ts[-1]
        B = _tangent_basis(cur.v)
        J = np.empty((pb.n - 1, pb.n - 1))
        for k in range(pb.n - 1):
            vk = _unit(cur.v + h * B[:, k])
            Fk = pb.quantiles(vk, alpha)
            J[:, k] = ((Fk[:-1] - Fk[-1]) - F) / h
        try:
            dz = np.linalg.lstsq(J, -F, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        norm_F = np.linalg.norm(F)
        step = 1.0
        nxt = None
        for _ in range(25):
            vn = _unit(cur.v + B @ (step * dz))
            cand = _evaluate(pb, vn, alpha)
            if np.linalg.norm(cand.ts[:-1] - cand.ts[-1]) <= (1 - 1e-4 * step) * norm_F:
                nxt = cand
                break
            step *= 0.5
        if nxt is None:
            break  # no descent direction left: stalled
        history.append(nxt.residual)
        cur = nxt
        if cur.residual < best.residual:
            best = cur
    return best


def _run_engine(pb: _Problem, engine: str, v0: np.ndarray, alpha: np.ndarray,
                target: float, history: list[float]):
    max_iter = pb.opts.max_iterations
    if engine == "fixpoint":
        return _run_fixpoint(pb, v0, alpha, max_iter, target, history)
    if engine == "newton":
        return _run_newton(pb, v0, alpha, max_iter, target, history)
    coarse = max(pb.opts.switch_residual, target)
    warm = _run_fixpoint(pb, v0, alpha, min(60, max_iter), coarse, history)
    if warm.residual <= target:
        return warm
    fine = _run_newton(pb, warm.v, alpha, max_iter, target, history)
    return fine if fine.residual <= warm.residual else warm


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def _initial_directions(pb: _Problem, rng: np.random.Generator, count: int):
    cents = np.array([b.centroid for b in pb.family.bodies])
    if pb.n == 1:
        yield np.ones(1)
        return
    yield orientation_normal(cents)
    for _ in range(count - 1):
        pts = []
        for body in pb.family.bodies:
            w = rng.dirichlet(np.ones(len(body.vertices)))
            pts.append(w @ body.vertices)
        yield orientation_normal(np.array(pts))


def _certify(pb: _Problem, it: _Iterate) -> float:
    pts = pb.select(it.v, it.ts)
    return orientation_det(it.v, pts)


def _solve_stage(pb: _Problem, alpha: np.ndarray, target: float,
                 v_init: np.ndarray | None):
    """Multistart engine runs; returns (iterate, det, history, restarts)."""
    opts = pb.opts
    rng = np.random.default_rng(opts.seed)
    starts: list[np.ndarray] = []
    if v_init is not None:
        starts.append(np.asarray(v_init, dtype=float))
    starts.extend(_initial_directions(pb, rng, opts.multistart_count))

    best = None  # (iterate, det, history)
    for idx, v0 in enumerate(starts):
        history: list[float] = []
        try:
            it = _run_engine(pb, opts.engine, v0, alpha, target, history)
        except EmptySection:
            continue
        det = _certify(pb, it)
        if it.residual <= target and det <= 0.0 and opts.engine != "fixpoint":
            # antipodal twin (certificate negative): retry from the opposite
            # pole, where the positively oriented solution is the attractor
            it2 = _run_newton(pb, -it.v, alpha, opts.max_iterations, target,
                              history)
            det2 = _certify(pb, it2)
            if it2.residual <= target and det2 > 0.0:
                it, det = it2, det2
        if it.residual <= target and det > 0.0:
            return it, det, history, idx
        if best is None or it.residual < best[0].residual:
            best = (it, det, history, idx)
    if best is None:
        raise NoConvergence("every start failed before producing an iterate",
                            report=None)
    return best


def _report(pb: _Problem, it: _Iterate, det: float, history: list[float],
            engine: str, restarts: int, converged: bool) -> SolveReport:
    hs = Halfspace(it.v, it.t)
    return SolveReport(halfspace=hs, per_body_fraction=it.fractions,
                       t_values=it.ts, orientation_det=det,
                       iterations=len(history), residual_history=history,
                       engine_used=engine, converged=converged,
                       residual=it.residual, alpha=pb.alpha.copy(),
                       restarts=restarts)


def solve(family: Family, measures: Sequence[Measure] | None, alpha,
          opts: SolveOptions | None = None) -> SolveReport:
    """Find the positively oriented halfspace cutting fractions ``alpha``.

    ``measures`` defaults to the uniform (volume) measures of the family
    bodies.  Raises :class:`NotWellSeparated` if the family fails the
    separation check, :class:`NoConvergence` if no engine start reaches the
    residual tolerance (the best iterate rides along in the exception).
    """
    opts = opts or SolveOptions()
    if measures is None:
        measures = uniform_measures(family.bodies)
    n = len(family)
    if n != family.dim:
        raise ValueError(f"need {family.dim} bodies in dimension {family.dim}, got {n}")
    if len(measures) != n:
        raise ValueError("one measure per body required")
    alpha = as_fraction_vector(alpha, n)
    ensure_well_separated(family)
    pb = _Problem(family, measures, alpha, opts)

    if n == 1:
        v = np.ones(1)
        it = _evaluate(pb, v)
        det = _certify(pb, it)
        return _report(pb, it, det, [it.residual], "direct", 0,
                       it.residual <= pb.tol)

    v_warm = None
    lo = alpha <= 0.0
    hi = alpha >= 1.0
    if lo.any() or hi.any():
        # tangent targets: walk the fractions to the boundary in stages,
        # warm-starting each solve with the previous direction
        for s in opts.continuation_schedule:
            stage = alpha.copy()
            stage[lo] = 1.0 / s
            stage[hi] = 1.0 - 1.0 / s
            stage_tol = max(pb.tol, 1e-10)
            try:
                it, det, _, _ = _solve_stage(pb, stage, stage_tol, v_warm)
            except NoConvergence:
                continue
            if it.residual <= stage_tol and det > 0.0:
                v_warm = it.v

    it, det, history, restarts = _solve_stage(pb, alpha, pb.tol, v_warm)
    converged = it.residual <= pb.tol and det > 0.0
    rep = _report(pb, it, det, history, opts.engine, restarts, converged)
    if not converged:
        raise NoConvergence(
            f"residual {it.residual:.3e} above tolerance {pb.tol:.3e} "
            f"(orientation det {det:.3e})", report=rep)
    return rep


def solve_tangent_partition(family: Family, inside: Sequence[int],
                            opts: SolveOptions | None = None
                            ) -> tuple[Halfspace, Halfspace]:
    """The two halfspaces fully containing ``inside`` bodies, excluding the rest.

    ``inside`` indexes the bodies that must lie in the returned halfspace;
    the complementary partition is solved as well (fractions all flipped),
    giving the second tangent halfspace.  Both bounding hyperplanes touch
    every body.
    """
    n = len(family)
    inside = sorted(set(int(i) for i in inside))
    if any(i < 0 or i >= n for i in inside) or not 0 < len(inside) < n:
        raise ValueError("partition must split the bodies into two nonempty groups")
    alpha = np.zeros(n)
    alpha[inside] = 1.0
    first = solve(family, None, alpha, opts)
    second = solve(family, None, 1.0 - alpha, opts)
    return first.halfspace, second.halfspace


@dataclass(frozen=True)
class UniquenessReport:
    attempts: int
    successes: int
    failures: int
    normals: np.ndarray
    offsets: np.ndarray
    max_angle_dev: float
    max_offset_dev: float
    angle_tol: float
    offset_tol: float

    @property
    def ok(self) -> bool:
        return (self.successes > 0
                and self.max_angle_dev <= self.angle_tol
                and self.max_offset_dev <= self.offset_tol)


def uniqueness_probe(family: Family, measures: Sequence[Measure] | None,
                     alpha, starts: int = 32, seed: int = 0,
                     opts: SolveOptions | None = None,
                     angle_tol: float = 1e-7,
                     offset_tol: float = 1e-7) -> UniquenessReport:
    """Re-solve from many random starts and measure the solution spread.

    A spread above tolerance would exhibit two distinct positively oriented
    solutions — the impossible event the uniqueness theory rules out.
    """
    base = opts or SolveOptions()
    normals, offsets = [], []
    failures = 0
    for j in range(starts):
        opts_j = replace(base, seed=seed + 7919 * j, multistart_count=2)
        try:
            rep = solve(family, measures, alpha, opts_j)
        except NoConvergence:
            failures += 1
            continue
        normals.append(rep.halfspace.normal)
        offsets.append(rep.halfspace.offset)
    normals = np.array(normals) if normals else np.zeros((0, family.dim))
    offsets = np.array(offsets)
    if len(normals) >= 2:
        gram = np.clip(normals @ normals.T, -1.0, 1.0)
        max_angle = float(np.arccos(gram.min()))
        max_off = float(offsets.max() - offsets.min())
    else:
        max_angle = 0.0
        max_off = 0.0
    return UniquenessReport(attempts=starts, successes=len(normals),
                            failures=failures, normals=normals,
                            offsets=offsets, max_angle_dev=max_angle,
                            max_offset_dev=max_off, angle_tol=angle_tol,
                            offset_tol=offset_tol)
