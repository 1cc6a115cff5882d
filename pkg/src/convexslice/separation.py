"""Well-separation certificates and positively oriented transversal normals.

A family of convex bodies is well separated when, for every disjoint pair of
index sets I, J with |I| + |J| <= d + 1, the bodies {K_i : i in I} can be
strictly separated from {K_j : j in J} by a hyperplane.  For polytopes each
such check is a small linear program over the vertex sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateFlat, DimensionMismatch, NotWellSeparated
from .geometry import Body, section

SEPARATION_TOL = 1e-9       # default margin tolerance
NORMAL_INVARIANCE_TOL = 1e-9  # re-picking points in a section keeps v within this
ANTIPODAL_GAP = 1e-12       # v(a) . v(b) must stay above -1 + this


@dataclass
class Family:
    """Ordered family of convex bodies sharing one ambient dimension."""

    bodies: tuple[Body, ...]
    certificate: "WellSeparationReport | None" = None

    def __post_init__(self):
        self.bodies = tuple(self.bodies)
        if not self.bodies:
            raise DimensionMismatch("a family needs at least one body")
        dims = {b.dim for b in self.bodies}
        if len(dims) != 1:
            raise DimensionMismatch(f"bodies live in different dimensions: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.bodies[0].dim

    def __len__(self) -> int:
        return len(self.bodies)


@dataclass(frozen=True)
class SeparationWitness:
    """Failing (or worst) index pair with a near-common point of the two hulls."""

    group_a: tuple[int, ...]
    group_b: tuple[int, ...]
    point: np.ndarray


@dataclass(frozen=True)
class WellSeparationReport:
    ok: bool
    margin: float
    witness: SeparationWitness | None
    tolerance: float
    pairs_checked: int


def _index_pairs(n: int, d: int):
    """Disjoint nonempty (I, J) with |I|+|J| <= d+1, one orientation per set pair."""
    idx = range(n)
    for total in range(2, min(d + 1, n) + 1):
        for ka in range(1, total):
            for group_a in combinations(idx, ka):
                rest = [j for j in idx if j not in group_a]
                for group_b in combinations(rest, total - ka):
                    if min(group_a) < min(group_b):
                        yield group_a, group_b


def _pair_margin(va: np.ndarray, vb: np.ndarray, d: int) -> float:
    """Best strict-separation slack between two vertex clouds, Euclidean-rescaled.

    LP over (w, c, delta): maximize delta subject to w.x <= c - delta on `va`,
    w.y >= c + delta on `vb`, |w|_inf <= 1.  The optimum is rescaled by |w|_2
    so the margin is the worst vertex-to-hyperplane distance.
    """
    rows_a = np.column_stack([va, -np.ones(len(va)), np.ones(len(va))])
    rows_b = np.column_stack([-vb, np.ones(len(vb)), np.ones(len(vb))])
    A_ub = np.vstack([rows_a, rows_b])
    b_ub = np.zeros(len(A_ub))
    cost = np.zeros(d + 2)
    cost[-1] = -1.0
    bounds = [(-1.0, 1.0)] * d + [(None, None), (None, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:  # pragma: no cover - the zero solution is always feasible
        return 0.0
    w = res.x[:d]
    delta = res.x[-1]
    wn = float(np.linalg.norm(w))
    if wn <= 1e-12:
        return 0.0
    return float(delta / wn)


def _near_common_point(va: np.ndarray, vb: np.ndarray, d: int) -> np.ndarray:
    """Point minimizing the L-inf gap between convex combinations of two clouds."""
    na, nb = len(va), len(vb)
    # variables: (lam, mu, z, s); minimize s with |va^T lam - vb^T mu - z| = 0,
    # |z| <= s, sum lam = sum mu = 1
    n_var = na + nb + d + 1
    cost = np.zeros(n_var)
    cost[-1] = 1.0
    A_eq = np.zeros((d + 2, n_var))
    A_eq[:d, :na] = va.T
    A_eq[:d, na:na + nb] = -vb.T
    A_eq[:d, na + nb:na + nb + d] = -np.eye(d)
    A_eq[d, :na] = 1.0
    A_eq[d + 1, na:na + nb] = 1.0
    b_eq = np.concatenate([np.zeros(d), [1.0, 1.0]])
    A_ub = np.zeros((2 * d, n_var))
    A_ub[:d, na + nb:na + nb + d] = np.eye(d)
    A_ub[d:, na + nb:na + nb + d] = -np.eye(d)
    A_ub[:, -1] = -1.0
    bounds = [(0.0, None)] * (na + nb) + [(None, None)] * d + [(0.0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=np.zeros(2 * d), A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success:  # pragma: no cover
        return 0.5 * (va.mean(axis=0) + vb.mean(axis=0))
    lam = res.x[:na]
    mu = res.x[na:na + nb]
    return 0.5 * (lam @ va + mu @ vb)


def check_well_separated(family: Family | list[Body],
                         tol: float = SEPARATION_TOL) -> WellSeparationReport:
    """Certify well-separation of a family by exhaustive pairwise separation LPs."""
    bodies = family.bodies if isinstance(family, Family) else tuple(family)
    if not bodies:
        raise DimensionMismatch("empty family")
    d = bodies[0].dim
    if any(b.dim != d for b in bodies):
        raise DimensionMismatch("bodies live in different dimensions")
    verts = [b.vertices for b in bodies]

    worst = math.inf
    worst_pair = None
    checked = 0
    for group_a, group_b in _index_pairs(len(bodies), d):
        va = np.concatenate([verts[i] for i in group_a])
        vb = np.concatenate([verts[j] for j in group_b])
        m = _pair_margin(va, vb, d)
        checked += 1
        if m < worst:
            worst, worst_pair = m, (group_a, group_b)
    if checked == 0:
        return WellSeparationReport(True, math.inf, None, tol, 0)

    ok = worst > tol
    witness = None
    if not ok:
        group_a, group_b = worst_pair
        va = np.concatenate([verts[i] for i in group_a])
        vb = np.concatenate([verts[j] for j in group_b])
        witness = SeparationWitness(group_a, group_b, _near_common_point(va, vb, d))
    return WellSeparationReport(ok, max(worst, 0.0), witness, tol, checked)


def ensure_well_separated(family: Family, tol: float = SEPARATION_TOL) -> WellSeparationReport:
    """Check (with caching on the family) and raise NotWellSeparated on failure."""
    report = family.certificate
    if report is None or report.tolerance != tol:
        report = check_well_separated(family, tol)
        family.certificate = report
    if not report.ok:
        pair = report.witness
        raise NotWellSeparated(
            f"family is not well separated: margin {report.margin:.3g} <= {tol:.3g}"
            + (f" on index pair {pair.group_a} vs {pair.group_b}" if pair else ""),
            report=report,
        )
    return report


def orientation_normal(points) -> np.ndarray:
    """Unit normal of the hyperplane through d points, positively oriented.

    The sign is fixed by requiring the (d+1) x (d+1) determinant with columns
    (v, 0), (a_1, 1), ..., (a_d, 1) to be positive; for d = 1 the convention
    degenerates to v = +1.
    """
    a = np.asarray(points, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected d points in R^d, got shape {a.shape}")
    d = a.shape[0]
    if d == 1:
        return np.array([1.0])
    diffs = a[1:] - a[0]
    svals = np.linalg.svd(diffs, compute_uv=False)
    scale = max(1.0, float(np.abs(a).max()))
    if svals[-1] <= 1e-9 * scale:
        raise DegenerateFlat("points do not span a (d-1)-dimensional affine flat")
    _, _, vt = np.linalg.svd(diffs)
    v = vt[-1]
    m = np.zeros((d + 1, d + 1))
    m[:d, 0] = v
    m[:d, 1:] = a.T
    m[d, 1:] = 1.0
    det = np.linalg.det(m)
    if det < 0:
        v = -v
    elif det == 0.0:  # pragma: no cover - excluded by the rank check
        raise DegenerateFlat("orientation determinant vanishes")
    return v


def orientation_det(v: np.ndarray, points) -> float:
    """The orientation determinant of a normal against d hyperplane points."""
    a = np.asarray(points, dtype=float)
    d = a.shape[0]
    if d == 1:
        return float(v[0])
    m = np.zeros((d + 1, d + 1))
    m[:d, 0] = np.asarray(v, dtype=float)
    m[:d, 1:] = a.T
    m[d, 1:] = 1.0
    return float(np.linalg.det(m))


@dataclass(frozen=True)
class OrientationProbeReport:
    trials: int
    max_normal_deviation: float   # worst change of v under re-picking section points
    min_pair_dot: float           # worst v(a) . v(b) over sampled tuple pairs
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def orientation_invariance_probe(family: Family, trials: int = 200,
                                 seed: int = 0) -> OrientationProbeReport:
    """Sample point tuples and stress two facts about the normal map v(a).

    First, v depends only on the hyperplane: re-picking each point anywhere in
    its body's section leaves the normal unchanged (within tolerance).  Second,
    normals of different tuples are never antipodal.
    """
    ensure_well_separated(family)
    d = family.dim
    if len(family.bodies) < d:
        raise DimensionMismatch(f"need at least {d} bodies to form tuples in R^{d}")
    bodies = family.bodies[:d]
    rng = np.random.default_rng(seed)
    normals = np.empty((trials, d))
    max_dev = 0.0
    violations: list[str] = []
    for k in range(trials):
        pts = np.stack([
            rng.dirichlet(np.ones(len(b.vertices))) @ b.vertices for b in bodies
        ])
        try:
            v = orientation_normal(pts)
        except DegenerateFlat:
            violations.append(f"trial {k}: sampled tuple is affinely flat")
            normals[k] = normals[k - 1] if k else 1.0 / math.sqrt(d)
            continue
        normals[k] = v
        t = float(np.mean(pts @ v))
        repicked = np.empty_like(pts)
        failed = False
        for i, b in enumerate(bodies):
            sec = section(b, v, t)
            if sec is None:
                violations.append(f"trial {k}: empty section of body {i}")
                failed = True
                break
            w = rng.dirichlet(np.ones(len(sec.vertices)))
            repicked[i] = w @ sec.vertices
        if failed:
            continue
        v2 = orientation_normal(repicked)
        dev = float(np.linalg.norm(v2 - v))
        max_dev = max(max_dev, dev)
        if dev > NORMAL_INVARIANCE_TOL:
            violations.append(f"trial {k}: normal moved by {dev:.3g} under re-picking")

    dots = normals @ normals.T
    off = dots[~np.eye(trials, dtype=bool)]
    min_dot = float(off.min()) if off.size else 1.0
    if off.size and min_dot <= -1.0 + ANTIPODAL_GAP:
        violations.append(f"antipodal normals: min pair dot {min_dot:.12f}")
    return OrientationProbeReport(trials, max_dev, min_dot, tuple(violations))
