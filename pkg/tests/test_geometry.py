import math

import numpy as np
import pytest

from convexslice.errors import DegenerateBody, DimensionMismatch, UnsupportedDimension
from convexslice.geometry import (
    Halfspace,
    build_body,
    centroid,
    clip,
    clipped_volume,
    distance_to_body,
    max_distance_to_body,
    polygon_area,
    section,
    simplex_fraction_nonneg,
    steiner_point_estimate,
    support_interval,
    volume,
    _steiner_estimate,
)
from helpers import mc_volume, random_polytope, random_unit_vector, regular_ngon, unit_square


def test_build_body_square():
    b = unit_square()
    assert b.dim == 2
    assert len(b.vertices) == 4
    assert len(b.facet_normals) == 4
    assert volume(b) == pytest.approx(1.0, abs=1e-14)
    # every vertex satisfies every facet inequality
    slack = b.vertices @ b.facet_normals.T - b.facet_offsets
    assert slack.max() <= 1e-12


def test_build_body_drops_interior_points():
    b = build_body([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.25, 0.75]])
    assert len(b.vertices) == 4


def test_build_body_degenerate():
    with pytest.raises(DegenerateBody):
        build_body([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(DegenerateBody):
        build_body([[1.0], [1.0]])
    with pytest.raises(UnsupportedDimension):
        build_body(np.zeros((8, 6)))


def test_interval_body():
    b = build_body([[2.0], [5.0], [3.0]])
    assert b.dim == 1
    assert volume(b) == pytest.approx(3.0)
    assert b.contains(np.array([2.5]))
    assert not b.contains(np.array([5.5]))
    assert support_interval(b, [1.0]) == (2.0, 5.0)


def test_simplex_volume_3d():
    b = build_body([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert volume(b) == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_volume_against_monte_carlo():
    rng = np.random.default_rng(7)
    body = regular_ngon(12, radius=1.3, center=(0.4, -0.2))
    est, sigma = mc_volume(body, 1_000_000, rng)
    assert abs(volume(body) - est) <= 3 * sigma
    # closed form for a regular 12-gon
    assert volume(body) == pytest.approx(0.5 * 12 * 1.3**2 * math.sin(2 * math.pi / 12), rel=1e-12)


def test_volume_permutation_and_rigid_invariance():
    rng = np.random.default_rng(11)
    for d in (2, 3):
        body = random_polytope(rng, d, n=14)
        perm = rng.permutation(len(body.vertices))
        assert volume(build_body(body.vertices[perm])) == pytest.approx(volume(body), rel=1e-10)
        # random rotation + translation
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        moved = build_body(body.vertices @ q.T + rng.uniform(-5, 5, d))
        assert volume(moved) == pytest.approx(volume(body), rel=1e-9)


def test_clip_square():
    b = unit_square()
    cut = clip(b, Halfspace([1.0, 0.0], 0.25))
    assert cut is not None
    assert volume(cut) == pytest.approx(0.25, rel=1e-12)
    want = {(0.0, 0.0), (0.25, 0.0), (0.25, 1.0), (0.0, 1.0)}
    got = {(round(x, 9), round(y, 9)) for x, y in cut.vertices}
    assert got == want


def test_clip_no_cut_and_empty():
    b = unit_square()
    assert clip(b, Halfspace([1.0, 0.0], 2.0)) is b
    assert clip(b, Halfspace([1.0, 0.0], -1.0)) is None
    # touching along a face has zero volume
    assert clip(b, Halfspace([1.0, 0.0], 0.0)) is None


def test_clip_additivity_seeded():
    rng = np.random.default_rng(23)
    for k in range(100):
        d = 2 + k % 3  # d in {2, 3, 4}
        body = random_polytope(rng, d, n=6 + d * 3)
        v = random_unit_vector(rng, d)
        t0, t1 = support_interval(body, v)
        t = t0 + rng.uniform(0.1, 0.9) * (t1 - t0)
        h = Halfspace(v, t)
        lo = clip(body, h)
        hi = clip(body, h.complement())
        vol_lo = volume(lo) if lo is not None else 0.0
        vol_hi = volume(hi) if hi is not None else 0.0
        assert vol_lo + vol_hi == pytest.approx(volume(body), rel=1e-10)
        # the fast kernel agrees with the constructed clip
        assert clipped_volume(body, v, t) == pytest.approx(vol_lo, rel=1e-9, abs=1e-12)


def test_clipped_volume_monotone():
    rng = np.random.default_rng(5)
    body = random_polytope(rng, 3, n=20)
    v = random_unit_vector(rng, 3)
    t0, t1 = support_interval(body, v)
    ts = np.linspace(t0, t1, 50)
    vals = [clipped_volume(body, v, t) for t in ts]
    assert vals[0] == pytest.approx(0.0, abs=1e-12)
    assert vals[-1] == pytest.approx(volume(body), rel=1e-12)
    assert all(b - a > -1e-12 for a, b in zip(vals, vals[1:]))


def test_simplex_fraction_basics():
    # 1-D segment with values (a, -b): fraction a / (a + b)
    assert simplex_fraction_nonneg([2.0, -6.0]) == pytest.approx(0.25)
    assert simplex_fraction_nonneg([[1.0, 1.0, 1.0]]) == pytest.approx([1.0])
    assert simplex_fraction_nonneg([[-1.0, -2.0, -0.5]]) == pytest.approx([0.0])
    # complement identity and permutation symmetry
    rng = np.random.default_rng(3)
    g = rng.standard_normal((200, 4))
    f = simplex_fraction_nonneg(g)
    assert np.all((0 <= f) & (f <= 1))
    assert f + simplex_fraction_nonneg(-g) == pytest.approx(np.ones(200), abs=1e-12)
    assert simplex_fraction_nonneg(g[:, [2, 0, 3, 1]]) == pytest.approx(f, abs=1e-12)


def test_section_of_square():
    b = unit_square()
    s = section(b, [0.0, 1.0], 0.5)
    assert s is not None
    assert s.intrinsic_dim == 1
    got = sorted(map(tuple, np.round(s.vertices, 9)))
    assert got == [(0.0, 0.5), (1.0, 0.5)]
    # face section: the whole right edge
    s = section(b, [1.0, 0.0], 1.0)
    assert s.intrinsic_dim == 1
    got = sorted(map(tuple, np.round(s.vertices, 9)))
    assert got == [(1.0, 0.0), (1.0, 1.0)]
    # single-vertex section
    s = section(b, np.array([1.0, 1.0]) / np.sqrt(2), np.sqrt(2))
    assert s.intrinsic_dim == 0
    assert np.allclose(s.vertices[0], [1.0, 1.0])
    # empty
    assert section(b, [0.0, 1.0], 2.0) is None


def test_section_hexagon_of_cube():
    cube = build_body([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)])
    v = np.ones(3) / np.sqrt(3)
    s = section(cube, v, 1.5 / np.sqrt(3))
    assert s is not None and s.intrinsic_dim == 2
    want = {(1.0, 0.5, 0.0), (0.5, 1.0, 0.0), (0.0, 1.0, 0.5),
            (0.0, 0.5, 1.0), (0.5, 0.0, 1.0), (1.0, 0.0, 0.5)}
    got = {tuple(p) for p in np.round(s.vertices, 9)}
    assert got == want
    assert np.allclose(centroid(s), [0.5, 0.5, 0.5], atol=1e-12)


def test_section_consistency_seeded():
    rng = np.random.default_rng(41)
    for k in range(100):
        d = 2 + k % 3
        body = random_polytope(rng, d, n=8 + 2 * d)
        v = random_unit_vector(rng, d)
        t0, t1 = support_interval(body, v)
        t = t0 + rng.uniform(0.05, 0.95) * (t1 - t0)
        s = section(body, v, t)
        assert s is not None
        assert np.abs(s.vertices @ v - t).max() <= 1e-10 * body.scale
        assert body.contains(s.vertices, tol=1e-10).all()
        assert s.intrinsic_dim <= d - 1


def test_centroid_segment_and_triangle():
    b = unit_square()
    s = section(b, [0.0, 1.0], 0.25)
    assert np.allclose(centroid(s), [0.5, 0.25], atol=1e-12)
    tri = build_body([[0, 0], [2, 0], [0, 2]])
    s = section(tri, [1.0, 0.0], 0.5)  # segment x=0.5, y in [0, 1.5]
    assert np.allclose(centroid(s), [0.5, 0.75], atol=1e-12)


def _steiner_oracle_2d(sec, grid=2**20):
    """Dense numeric integral of the support function over the circle."""
    th = np.linspace(0.0, 2 * np.pi, grid, endpoint=False)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    h = (sec.coords @ u.T).max(axis=0)
    est = 2 * (h[:, None] * u).mean(axis=0)
    return sec.to_ambient(est)


def test_steiner_point_section():
    cube = build_body([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)])
    v = np.ones(3) / np.sqrt(3)
    sec = section(cube, v, 1.5 / np.sqrt(3))
    pt, sigma = _steiner_estimate(sec, 40000, np.random.default_rng(9))
    # symmetric hexagon: Steiner point is the center
    assert np.linalg.norm(pt - [0.5, 0.5, 0.5]) <= 4 * np.linalg.norm(sigma) + 1e-9

    # asymmetric section of a random polytope against the dense-grid oracle
    rng = np.random.default_rng(17)
    body = random_polytope(rng, 3, n=16)
    w = random_unit_vector(rng, 3)
    t0, t1 = support_interval(body, w)
    sec = section(body, w, t0 + 0.4 * (t1 - t0))
    want = _steiner_oracle_2d(sec)
    pt, sigma = _steiner_estimate(sec, 60000, np.random.default_rng(29))
    assert np.linalg.norm(pt - want) <= 4 * np.linalg.norm(sigma) + 1e-9


def test_steiner_point_degenerate_and_seeded():
    b = unit_square()
    s = section(b, np.array([1.0, 1.0]) / np.sqrt(2), np.sqrt(2))
    assert np.allclose(steiner_point_estimate(s, 100, seed=0), [1.0, 1.0])
    # segment: Steiner point is the midpoint (exact for the 1-D estimator in the limit)
    s = section(b, [1.0, 0.0], 0.5)
    pt, sigma = _steiner_estimate(s, 20000, np.random.default_rng(2))
    assert np.linalg.norm(pt - [0.5, 0.5]) <= 4 * np.linalg.norm(sigma) + 1e-12


def test_steiner_translation_equivariance():
    rng = np.random.default_rng(31)
    body = random_polytope(rng, 2, n=9)
    shift = np.array([3.0, -2.0])
    moved = build_body(body.vertices + shift)
    v = random_unit_vector(rng, 2)
    t0, t1 = support_interval(body, v)
    t = t0 + 0.3 * (t1 - t0)
    s0 = section(body, v, t)
    s1 = section(moved, v, t + shift @ v)
    p0, sig0 = _steiner_estimate(s0, 30000, np.random.default_rng(4))
    p1, sig1 = _steiner_estimate(s1, 30000, np.random.default_rng(4))
    tol = 4 * (np.linalg.norm(sig0) + np.linalg.norm(sig1)) + 1e-9
    assert np.linalg.norm((p1 - p0) - shift) <= tol


def test_support_interval():
    b = unit_square()
    assert support_interval(b, [0.0, 1.0]) == (0.0, 1.0)
    hi = support_interval(b, np.array([1.0, 1.0]) / np.sqrt(2))[1]
    assert hi == pytest.approx(np.sqrt(2.0))
    rng = np.random.default_rng(6)
    body = random_polytope(rng, 3, n=10)
    v = random_unit_vector(rng, 3)
    t0, t1 = support_interval(body, v)
    h = body.vertices @ v
    assert t0 == pytest.approx(h.min(), rel=1e-14)
    assert t1 == pytest.approx(h.max(), rel=1e-14)
    with pytest.raises(DimensionMismatch):
        support_interval(b, [1.0, 0.0, 0.0])


def test_halfspace_normalization():
    h = Halfspace([0.0, 2.0], 3.0)
    assert np.allclose(h.normal, [0.0, 1.0])
    assert h.offset == pytest.approx(1.5)
    hc = h.complement()
    assert np.allclose(hc.normal, [0.0, -1.0])
    assert hc.offset == pytest.approx(-1.5)
    assert h.signed_excess([0.0, 2.0]) == pytest.approx(0.5)


def test_distance_to_body():
    b = unit_square()
    assert distance_to_body(b, [0.5, 0.5]) == 0.0
    assert distance_to_body(b, [2.0, 0.5]) == pytest.approx(1.0)
    assert distance_to_body(b, [2.0, 2.0]) == pytest.approx(np.sqrt(2.0))
    cube = build_body([[x, y, z] for x in (0, 1) for y in (0, 1) for z in (0, 1)])
    assert distance_to_body(cube, [0.5, 0.5, 3.0]) == pytest.approx(2.0)       # facet
    assert distance_to_body(cube, [2.0, 2.0, 0.5]) == pytest.approx(np.sqrt(2))  # edge
    assert distance_to_body(cube, [-1, -1, -1]) == pytest.approx(np.sqrt(3))     # vertex
    assert max_distance_to_body(b, [0.0, 0.0]) == pytest.approx(np.sqrt(2.0))


def test_distance_matches_brute_force():
    rng = np.random.default_rng(13)
    for d in (1, 2, 3):
        body = random_polytope(rng, d, n=6 + 4 * d)
        # dense rejection sample of the body as a brute-force oracle
        lo = body.vertices.min(axis=0)
        hi = body.vertices.max(axis=0)
        pts = lo + rng.uniform(size=(200000, d)) * (hi - lo)
        pts = pts[body.contains(pts)]
        for _ in range(10):
            x = rng.uniform(-3, 3, d)
            brute = np.sqrt(((pts - x) ** 2).sum(axis=1)).min()
            got = distance_to_body(body, x)
            assert got <= brute + 1e-9
            assert got >= brute - 0.05  # grid resolution slack


def test_polygon_area():
    ring = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]])
    assert polygon_area(ring) == pytest.approx(2.0)
