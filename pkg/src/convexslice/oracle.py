"""Derivative-free planar oracle: scan every direction, keep the real roots.

For two bodies in the plane, the solver's output can be checked without any
fixed-point machinery: walk the direction circle on a fine grid, force the
first body's fraction exactly via its quantile, record the second body's
fraction, and refine each sign change by bisection on the angle.  Roots
whose selection points are negatively oriented are the mirror solutions and
are filtered out; theory predicts exactly one survivor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDimension
from .geometry import Body, simplex_fraction_nonneg
from .halfspace import selection_points
from .measures import UniformMeasure
from .separation import Family, orientation_det


@dataclass(frozen=True)
class SweepRoot:
    theta: float
    normal: np.ndarray
    offset: float
    orientation_det: float


def fraction_below_many(body: Body, directions: np.ndarray,
                        offsets: np.ndarray) -> np.ndarray:
    """Volume fraction of the body below ``directions[i] . x <= offsets[i]``.

    Vectorized over the whole direction grid: one affine-cut kernel call on
    the cached fan simplices.
    """
    dots = np.einsum("mk,sjk->msj", directions, body.simplex_points)
    gamma = offsets[:, None, None] - dots
    frac = simplex_fraction_nonneg(gamma)
    return frac @ body.simplex_volumes / body.volume


def oracle_angle_sweep(instance, grid: int = 4096) -> list[SweepRoot]:
    """All positively oriented fraction-matching directions of a planar pair.

    ``instance`` is an Instance document (mode halfspace, d=2) or a bare
    ``(family, alpha)`` tuple.  Returns the refined roots; the count doubles
    as an empirical uniqueness check.
    """
    if hasattr(instance, "bodies"):
        family, alpha = Family(tuple(instance.bodies)), np.asarray(instance.alpha)
    else:
        family, alpha = instance
        family = family if isinstance(family, Family) else Family(tuple(family))
        alpha = np.asarray(alpha, dtype=float)
    if family.dim != 2 or len(family) != 2:
        raise UnsupportedDimension("the sweep oracle handles two planar bodies")
    if ((alpha <= 0.0) | (alpha >= 1.0)).any():
        # with an empty or full slice prescribed, every direction in a whole
        # arc satisfies the fraction equations; sign-change bisection cannot
        # isolate the limiting tangent, so refuse instead of reporting noise
        raise ValueError("sweep requires interior fractions (0 < alpha < 1)")
    b1, b2 = family.bodies
    mu1, mu2 = UniformMeasure(b1), UniformMeasure(b2)

    thetas = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    ts = mu1.quantile_many(dirs, np.full(grid, alpha[0]))
    h = fraction_below_many(b2, dirs, ts) - alpha[1]

    def h_of(theta: float) -> float:
        v = np.array([np.cos(theta), np.sin(theta)])
        t = mu1.quantile(v, float(alpha[0]))
        return float(fraction_below_many(b2, v[None], np.array([t]))[0]
                     - alpha[1])

    roots: list[SweepRoot] = []
    step = 2.0 * np.pi / grid
    for i in range(grid):
        a, b = h[i], h[(i + 1) % grid]
        if a == 0.0:
            theta = thetas[i]
        elif a * b < 0.0:
            lo, hi = thetas[i], thetas[i] + step
            flo = a
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                fm = h_of(mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (flo < 0.0) == (fm < 0.0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            theta = 0.5 * (lo + hi)
        else:
            continue
        v = np.array([np.cos(theta), np.sin(theta)])
        t = mu1.quantile(v, float(alpha[0]))
        pts = selection_points(family, (mu1, mu2), alpha, v)
        det = float(orientation_det(v, pts))
        if det > 0.0:
            roots.append(SweepRoot(theta=float(theta), normal=v,
                                   offset=float(t), orientation_det=det))

    # merge near-duplicate roots (a sign change split across grid cells)
    merged: list[SweepRoot] = []
    for r in roots:
        if any(abs((r.theta - m.theta + np.pi) % (2 * np.pi) - np.pi) < 1e-6
               for m in merged):
            continue
        merged.append(r)
    return merged
