import math

import numpy as np
import pytest

from convexslice.errors import NotWellSeparated
from convexslice.geometry import build_body, clipped_volume
from convexslice.halfspace import (
    SolveOptions,
    TupleState,
    selection_map_step,
    selection_points,
    solve,
    solve_tangent_partition,
    uniqueness_probe,
)
from convexslice.measures import uniform_measures
from convexslice.separation import Family, orientation_normal
from helpers import random_separated_family, two_squares

TANGENT_V = np.array([-1.0, 2.0]) / math.sqrt(5.0)
TANGENT_T = -1.0 / math.sqrt(5.0)


def two_squares_family() -> Family:
    return Family(two_squares())


def test_selection_points_symmetric_halves():
    fam = two_squares_family()
    mus = uniform_measures(fam.bodies)
    pts = selection_points(fam, mus, [0.5, 0.5], [0.0, 1.0])
    assert pts == pytest.approx(np.array([[0.5, 0.5], [3.5, 0.5]]), abs=1e-12)


def test_selection_points_differing_offsets():
    fam = two_squares_family()
    mus = uniform_measures(fam.bodies)
    pts = selection_points(fam, mus, [0.5, 0.5], [1.0, 0.0])
    # offsets differ (0.5 vs 3.5): each point on its own vertical line
    assert pts[0, 0] == pytest.approx(0.5, abs=1e-10)
    assert pts[1, 0] == pytest.approx(3.5, abs=1e-10)


def test_selection_points_tangent_corners():
    fam = two_squares_family()
    mus = uniform_measures(fam.bodies)
    pts = selection_points(fam, mus, [0.0, 1.0], TANGENT_V)
    assert pts[0] == pytest.approx([1.0, 0.0], abs=1e-9)
    assert pts[1] == pytest.approx([3.0, 1.0], abs=1e-9)


def test_selection_map_fixed_point():
    fam = two_squares_family()
    mus = uniform_measures(fam.bodies)
    x = TupleState(np.array([[0.5, 0.5], [3.5, 0.5]]))
    fx = selection_map_step(fam, mus, [0.5, 0.5], x)
    assert fx.points == pytest.approx(x.points, abs=1e-12)


def test_selection_map_range_contract():
    rng = np.random.default_rng(7)
    fam = random_separated_family(rng, 2, n=6)
    mus = uniform_measures(fam.bodies)
    alpha = [0.3, 0.7]
    for _ in range(20):
        pts = np.array([
            rng.dirichlet(np.ones(len(b.vertices))) @ b.vertices
            for b in fam.bodies])
        fx = selection_map_step(fam, mus, alpha, TupleState(pts))
        v = orientation_normal(pts)
        for i, body in enumerate(fam.bodies):
            assert body.contains(fx.points[i], tol=1e-10)
            t_i = mus[i].quantile(v, alpha[i])
            assert abs(v @ fx.points[i] - t_i) <= 1e-9


def test_solve_two_squares_halves():
    fam = two_squares_family()
    rep = solve(fam, None, [0.5, 0.5])
    assert rep.converged
    assert rep.halfspace.normal == pytest.approx([0.0, 1.0], abs=1e-9)
    assert rep.halfspace.offset == pytest.approx(0.5, abs=1e-9)
    assert rep.orientation_det > 0.0
    assert np.abs(rep.per_body_fraction - 0.5).max() <= 1e-9


def test_solve_engines_agree():
    rng = np.random.default_rng(21)
    for _ in range(6):
        fam = random_separated_family(rng, 2, n=3)
        alpha = rng.uniform(0.15, 0.85, 2)
        sols = {}
        for engine in ("hybrid", "newton", "fixpoint"):
            opts = SolveOptions(engine=engine, max_iterations=3000)
            rep = solve(fam, None, alpha, opts)
            sols[engine] = (rep.halfspace.normal, rep.halfspace.offset)
        vh, th = sols["hybrid"]
        for v, t in sols.values():
            assert np.linalg.norm(v - vh) <= 1e-7
            assert abs(t - th) <= 1e-7


def test_solve_boundary_fractions_tangent_line():
    fam = two_squares_family()
    rep = solve(fam, None, [0.0, 1.0])
    assert rep.converged
    assert rep.halfspace.normal == pytest.approx(TANGENT_V, abs=1e-7)
    assert rep.halfspace.offset == pytest.approx(TANGENT_T, abs=1e-7)


def test_solve_one_dimensional():
    fam = Family((build_body([[2.0], [5.0]]),))
    rep = solve(fam, None, [0.4])
    assert rep.halfspace.normal == pytest.approx([1.0])
    assert rep.halfspace.offset == pytest.approx(3.2, abs=1e-10)
    assert rep.engine_used == "direct"
    assert rep.orientation_det > 0.0


def test_solve_complement_duality():
    rng = np.random.default_rng(33)
    fam = random_separated_family(rng, 2, n=5)
    alpha = np.array([0.35, 0.6])
    rep = solve(fam, None, alpha)
    comp = solve(fam, None, 1.0 - alpha)
    # H(v<=t) cuts alpha iff H(-v<=-t) cuts 1-alpha: check by direct volume
    hs = rep.halfspace
    for i, body in enumerate(fam.bodies):
        above = body.volume - clipped_volume(body, hs.normal, hs.offset)
        assert above / body.volume == pytest.approx(1.0 - alpha[i], abs=1e-8)
    # the positively oriented complement solution is its own halfspace
    assert comp.converged and comp.orientation_det > 0.0
    assert not np.allclose(comp.halfspace.normal, hs.normal)


def test_solve_three_dimensional():
    rng = np.random.default_rng(5)
    fam = random_separated_family(rng, 3, n=8)
    alpha = np.array([0.25, 0.5, 0.75])
    rep = solve(fam, None, alpha)
    assert rep.converged
    assert np.abs(rep.per_body_fraction - alpha).max() <= 1e-9
    assert rep.orientation_det > 0.0


def test_tangent_partition_two_squares():
    fam = two_squares_family()
    h1, h2 = solve_tangent_partition(fam, [0])
    # the two inner tangent lines: through (1,0)-(3,1) and (1,1)-(3,0)
    pairs = [np.array([[1.0, 0.0], [3.0, 1.0]]),
             np.array([[1.0, 1.0], [3.0, 0.0]])]
    matched = []
    for pts in pairs:
        hits = [h for h in (h1, h2)
                if np.abs(pts @ h.normal - h.offset).max() <= 1e-8]
        assert len(hits) == 1
        matched.append(hits[0])
    assert matched[0] is not matched[1]
    # side containment: K_1 inside h1, K_2 outside (touching)
    k1, k2 = fam.bodies
    assert (k1.vertices @ h1.normal - h1.offset <= 1e-9).all()
    assert (k2.vertices @ h1.normal - h1.offset >= -1e-9).all()
    assert (k1.vertices @ h2.normal - h2.offset >= -1e-9).all()
    assert (k2.vertices @ h2.normal - h2.offset <= 1e-9).all()
    # distinct, non-antipodal normals
    assert np.linalg.norm(h1.normal - h2.normal) > 1e-3
    assert np.linalg.norm(h1.normal + h2.normal) > 1e-3


def test_tangent_partition_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(5):
        fam = random_separated_family(rng, 2, n=4)
        h1, h2 = solve_tangent_partition(fam, [0])
        k1, k2 = fam.bodies
        assert (k1.vertices @ h1.normal - h1.offset <= 1e-9).all()
        assert (k2.vertices @ h1.normal - h1.offset >= -1e-9).all()
        assert (k1.vertices @ h2.normal - h2.offset >= -1e-9).all()
        assert (k2.vertices @ h2.normal - h2.offset <= 1e-9).all()


def test_uniqueness_probe_two_squares():
    fam = two_squares_family()
    rep = uniqueness_probe(fam, None, [0.5, 0.5], starts=16, seed=1)
    assert rep.ok
    assert rep.successes == 16
    assert rep.max_angle_dev <= 1e-7
    assert rep.max_offset_dev <= 1e-7


def test_solve_rejects_bad_input():
    fam = two_squares_family()
    with pytest.raises(ValueError):
        solve(fam, None, [0.5, 1.5])
    with pytest.raises(ValueError):
        solve(fam, None, [0.5])
    with pytest.raises(ValueError):
        SolveOptions(engine="sgd")
    overlapping = Family((build_body([[0, 0], [2, 0], [1, 2]]),
                          build_body([[1, 0], [3, 0], [2, 2]])))
    with pytest.raises(NotWellSeparated):
        solve(overlapping, None, [0.5, 0.5])


def test_report_contents():
    fam = two_squares_family()
    rep = solve(fam, None, [0.3, 0.8])
    assert rep.converged
    assert rep.residual <= 1e-9
    assert len(rep.residual_history) == rep.iterations
    assert rep.engine_used == "hybrid"
    assert rep.t_values.shape == (2,)
    assert rep.alpha == pytest.approx([0.3, 0.8])
