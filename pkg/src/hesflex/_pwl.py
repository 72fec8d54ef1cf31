"""Convex piecewise-linear functions on a closed interval.

Just enough machinery for exact one-dimensional dynamic programming
with convex stage costs: evaluation, construction from exact samples,
infimal convolution by slope merging, and domain clipping. A function
is stored as strictly increasing breakpoints ``xs`` with values ``ys``;
a single-point domain is legal.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

__all__ = ["Pwl", "from_points", "inf_convolve", "clip"]

_KINK_TOL = 1e-12


@dataclass(frozen=True)
class Pwl:
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.xs or len(self.xs) != len(self.ys):
            raise ValueError("xs and ys must be nonempty and equal length")
        for a, b in zip(self.xs, self.xs[1:]):
            if not b > a:
                raise ValueError("breakpoints must strictly increase")

    @property
    def x_lo(self) -> float:
        return self.xs[0]

    @property
    def x_hi(self) -> float:
        return self.xs[-1]

    def __call__(self, x: float) -> float:
        """Linear interpolation; outside the domain the endpoint value
        is held (callers are expected to stay in-domain)."""
        xs, ys = self.xs, self.ys
        if x <= xs[0]:
            return ys[0]
        if x >= xs[-1]:
            return ys[-1]
        i = bisect.bisect_right(xs, x) - 1
        t = (x - xs[i]) / (xs[i + 1] - xs[i])
        return (1.0 - t) * ys[i] + t * ys[i + 1]

    def min_point(self) -> tuple[float, float]:
        """(argmin, min) over the domain; global for convex data."""
        i = min(range(len(self.ys)), key=self.ys.__getitem__)
        return self.xs[i], self.ys[i]


def from_points(points) -> Pwl:
    """Lower convex hull of exact samples of a convex function.

    The sample set must contain every kink of the target; duplicate x
    values keep the smaller y, and interior points on or above the
    chord of their neighbours are dropped, so float noise can only
    produce an underestimate, never a non-convex result.
    """
    pts = sorted((float(x), float(y)) for x, y in points)
    if not pts:
        raise ValueError("no sample points")
    merged: list[list[float]] = []
    for x, y in pts:
        if merged and x - merged[-1][0] <= 1e-13 * max(1.0, abs(x)):
            if y < merged[-1][1]:
                merged[-1][1] = y
        else:
            merged.append([x, y])
    hull: list[list[float]] = []
    for x, y in merged:
        while len(hull) >= 2:
            x0, y0 = hull[-2]
            x1, y1 = hull[-1]
            lhs = (y1 - y0) * (x - x1)
            rhs = (y - y1) * (x1 - x0)
            if lhs >= rhs - _KINK_TOL * max(1.0, abs(lhs), abs(rhs)):
                hull.pop()  # middle point is no strict downward kink
            else:
                break
        hull.append([x, y])
    return Pwl(tuple(p[0] for p in hull), tuple(p[1] for p in hull))


def inf_convolve(f: Pwl, g: Pwl) -> Pwl:
    """Infimal convolution ``h(z) = min over x of f(x) + g(z - x)``.

    For convex piecewise-linear operands the result sweeps the merged
    ascending slope sequence starting from the sum of the left domain
    endpoints; that is what is built here.
    """
    segs: list[tuple[float, float]] = []
    for h in (f, g):
        for i in range(len(h.xs) - 1):
            dx = h.xs[i + 1] - h.xs[i]
            segs.append(((h.ys[i + 1] - h.ys[i]) / dx, dx))
    segs.sort(key=lambda sd: sd[0])
    x = f.xs[0] + g.xs[0]
    y = f.ys[0] + g.ys[0]
    pts = [(x, y)]
    for slope, dx in segs:
        x += dx
        y += slope * dx
        pts.append((x, y))
    return from_points(pts)


def clip(f: Pwl, lo: float, hi: float) -> Pwl | None:
    """Restriction of f to [lo, hi]; None when the overlap is empty."""
    a = max(lo, f.x_lo)
    b = min(hi, f.x_hi)
    if a > b:
        return None
    if a == b:
        return Pwl((a,), (f(a),))
    pts = [(a, f(a)), (b, f(b))]
    pts.extend((x, y) for x, y in zip(f.xs, f.ys) if a < x < b)
    return from_points(pts)
