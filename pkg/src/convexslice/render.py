"""Deterministic SVG figures for planar instances and their solutions.

Bodies render as ``<polygon>`` elements (one each), a halfspace solution as
one ``<line>`` plus a shaded ``<path>`` over its side of the viewport, a
sphere solution as one ``<circle>``, and a tangent pair as two lines.
Identical inputs produce byte-identical SVG.
"""

from __future__ import annotations

import numpy as np

from .errors import UnsupportedDimension
from .geometry import Halfspace

_W, _H, _PAD = 640, 480, 40
_BODY_FILL = "#a6cee3"
_BODY_EDGE = "#1f78b4"
_SHADE = "#fb9a99"
_LINE = "#e31a1c"


def _fmt(x: float) -> str:
    return f"{x:.3f}"


class _Frame:
    """World-to-pixel transform with a uniform scale and a flipped y-axis."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        span = np.maximum(hi - lo, 1e-9)
        self.scale = min((_W - 2 * _PAD) / span[0], (_H - 2 * _PAD) / span[1])
        self.lo = lo
        self.hi = hi

    def to_px(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        x = (pts[:, 0] - self.lo[0]) * self.scale + _PAD
        y = _H - ((pts[:, 1] - self.lo[1]) * self.scale + _PAD)
        return np.stack([x, y], axis=1)

    def pts_attr(self, pts: np.ndarray) -> str:
        return " ".join(f"{_fmt(p[0])},{_fmt(p[1])}" for p in self.to_px(pts))


def _clip_rect_halfplane(lo, hi, normal, offset):
    """Rectangle corners cut to the side ``normal . x <= offset``."""
    ring = [np.array([lo[0], lo[1]]), np.array([hi[0], lo[1]]),
            np.array([hi[0], hi[1]]), np.array([lo[0], hi[1]])]
    out = []
    for i, p in enumerate(ring):
        q = ring[(i + 1) % 4]
        dp = normal @ p - offset
        dq = normal @ q - offset
        if dp <= 0.0:
            out.append(p)
        if (dp < 0.0 < dq) or (dq < 0.0 < dp):
            w = dp / (dp - dq)
            out.append(p + w * (q - p))
    return out


def _line_through(frame: _Frame, normal: np.ndarray, offset: float) -> str:
    p0 = normal * offset
    tang = np.array([-normal[1], normal[0]])
    length = 2.0 * float(np.linalg.norm(frame.hi - frame.lo))
    a, b = frame.to_px(np.stack([p0 - length * tang, p0 + length * tang]))
    return (f'<line x1="{_fmt(a[0])}" y1="{_fmt(a[1])}" '
            f'x2="{_fmt(b[0])}" y2="{_fmt(b[1])}" '
            f'stroke="{_LINE}" stroke-width="2"/>')


def render_svg(instance, result=None) -> str:
    """SVG figure of a planar instance, with its solution when provided."""
    if instance.dimension != 2:
        raise UnsupportedDimension("SVG rendering is planar only")

    allv = np.vstack([b.vertices for b in instance.bodies])
    lo, hi = allv.min(axis=0), allv.max(axis=0)
    sphere = getattr(result, "sphere", None) if result is not None else None
    if sphere is not None:
        lo = np.minimum(lo, sphere.center - sphere.radius)
        hi = np.maximum(hi, sphere.center + sphere.radius)
    pad = 0.1 * max(float((hi - lo).max()), 1e-9)
    frame = _Frame(lo - pad, hi + pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]

    shaded = None
    lines = []
    circle = None
    fractions = None
    if result is not None:
        fractions = getattr(result, "per_body_fraction", None)
        hs = getattr(result, "halfspace", None)
        second = getattr(result, "second_halfspace", None)
        if sphere is not None:
            c = frame.to_px(sphere.center)[0]
            circle = (f'<circle cx="{_fmt(c[0])}" cy="{_fmt(c[1])}" '
                      f'r="{_fmt(sphere.radius * frame.scale)}" '
                      f'fill="{_SHADE}" fill-opacity="0.35" '
                      f'stroke="{_LINE}" stroke-width="2"/>')
        elif hs is not None and second is not None:
            lines.append(_line_through(frame, hs.normal, hs.offset))
            lines.append(_line_through(frame, second.normal, second.offset))
        elif hs is not None:
            if not isinstance(hs, Halfspace):
                hs = Halfspace(hs.normal, hs.offset)
            ring = _clip_rect_halfplane(frame.lo, frame.hi, hs.normal, hs.offset)
            if len(ring) >= 3:
                d = "M " + " L ".join(
                    f"{_fmt(p[0])} {_fmt(p[1])}"
                    for p in frame.to_px(np.array(ring))) + " Z"
                shaded = (f'<path d="{d}" fill="{_SHADE}" '
                          f'fill-opacity="0.35"/>')
            lines.append(_line_through(frame, hs.normal, hs.offset))

    if shaded:
        parts.append(shaded)
    for body in instance.bodies:
        parts.append(f'<polygon points="{frame.pts_attr(body.vertices)}" '
                     f'fill="{_BODY_FILL}" fill-opacity="0.8" '
                     f'stroke="{_BODY_EDGE}" stroke-width="1.5"/>')
    parts.extend(lines)
    if circle:
        parts.append(circle)

    values = fractions if fractions is not None else (
        instance.alpha if instance.alpha is not None else None)
    for i, (name, body) in enumerate(zip(instance.names, instance.bodies)):
        c = frame.to_px(body.centroid)[0]
        label = name if values is None else f"{name}: {values[i]:.6f}"
        parts.append(f'<text x="{_fmt(c[0])}" y="{_fmt(c[1])}" '
                     f'font-family="monospace" font-size="13" '
                     f'text-anchor="middle">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
