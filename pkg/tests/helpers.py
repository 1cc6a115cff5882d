"""Shared helpers for the test suite: seeded generators and brute-force oracles."""

from __future__ import annotations

import numpy as np

from convexslice.geometry import Body, build_body
from convexslice.separation import Family, check_well_separated


def unit_square() -> Body:
    return build_body([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def two_squares() -> tuple[Body, Body]:
    """Unit squares with lower-left corners (0,0) and (3,0): gap 2 along x."""
    a = unit_square()
    b = build_body([[3.0, 0.0], [4.0, 0.0], [4.0, 1.0], [3.0, 1.0]])
    return a, b


def regular_ngon(n: int, radius: float = 1.0, center=(0.0, 0.0),
                 phase: float = 0.0) -> Body:
    ang = phase + 2.0 * np.pi * np.arange(n) / n
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1) * radius + np.asarray(center)
    return build_body(pts)


def random_polytope(rng: np.random.Generator, d: int, n: int = 12,
                    radius: float = 1.0, center=None) -> Body:
    """Hull of n random points in a box; full-dimensional almost surely."""
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    pts = c + radius * rng.uniform(-1.0, 1.0, size=(n, d))
    return build_body(pts)


def random_unit_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(d)
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n


def random_separated_family(rng: np.random.Generator, d: int,
                            count: int | None = None, n: int = 3,
                            spread: float = 4.0) -> Family:
    """Well-separated family of `count` small random polytopes in R^d.

    Bodies sit near the corners of a scaled simplex frame, far enough apart
    that the separation check passes; resamples on the rare failure.
    """
    count = d if count is None else count
    frame = np.vstack([np.zeros(d), np.eye(d) * spread])
    for _ in range(200):
        bodies = []
        for i in range(count):
            c = frame[i % len(frame)] + 0.2 * rng.uniform(-1, 1, d)
            bodies.append(random_polytope(rng, d, n=max(n, d + 1),
                                          radius=0.6, center=c))
        fam = Family(tuple(bodies))
        if check_well_separated(fam).ok:
            return fam
    raise AssertionError("could not sample a well-separated family")


def mc_volume(body: Body, n: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo volume estimate and its standard error (box sampling)."""
    lo = body.vertices.min(axis=0)
    hi = body.vertices.max(axis=0)
    box = float(np.prod(hi - lo))
    pts = lo + rng.uniform(size=(n, body.dim)) * (hi - lo)
    p = body.contains(pts).mean()
    return box * float(p), box * float(np.sqrt(max(p * (1 - p), 1e-12) / n))


def mc_clipped_fraction(body: Body, v, t, n: int,
                        rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate of vol(body ∩ {v.x <= t}) / vol(body)."""
    lo = body.vertices.min(axis=0)
    hi = body.vertices.max(axis=0)
    pts = lo + rng.uniform(size=(n, body.dim)) * (hi - lo)
    inside = body.contains(pts)
    k = int(inside.sum())
    below = (pts[inside] @ np.asarray(v)) <= t
    p = below.mean() if k else 0.0
    return float(p), float(np.sqrt(max(p * (1 - p), 1e-12) / max(k, 1)))
