"""Exact planar geometry of convex polygons: covariogram, clipping, difference
body, brightness and the polar projection body volume.

The covariogram along a ray is evaluated through the chord-length function
ell(y) of the polygon in the ray direction:

    g(s v) = int (ell(y) - s)_+ dy,

which is exact for polygons because ell is piecewise linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .radial_core import TWO_PI, RadialFunction, SpecError, grid

DEFAULT_POLYGON_SIZE = 8192


class NonConvexError(ValueError):
    """Vertex list fails the convexity test; ``index`` is the first offending vertex."""

    def __init__(self, index: int, message: str = ""):
        self.index = int(index)
        super().__init__(message or f"polygon is not convex at vertex {index}")


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Convex polygon with counter-clockwise vertices.

    Clockwise input is reversed and repeated consecutive vertices dropped;
    anything else that turns clockwise raises NonConvexError.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        keep = np.any(v != np.roll(v, 1, axis=0), axis=1)
        if len(v) and not keep.any():
            keep[0] = True
        v = v[keep]
        if len(v) < 3:
            raise ValueError("a polygon needs at least 3 distinct vertices")
        if _signed_area(v) < 0:
            v = v[::-1].copy()
        scale = float(np.max(np.abs(v)))
        e = np.roll(v, -1, axis=0) - v
        turn = _cross(np.roll(e, 1, axis=0), e)
        bad = np.flatnonzero(turn < -1e-12 * scale * scale)
        if len(bad):
            raise NonConvexError(int(bad[0]))
        if _signed_area(v) <= 0:
            raise ValueError("degenerate polygon (zero area)")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def area(self) -> float:
        return _signed_area(self.vertices)

    def translate(self, x) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + np.asarray(x, dtype=float))

    def scale(self, lam: float) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices * float(lam))

    def rotate(self, phi: float) -> "ConvexPolygon":
        c, s = math.cos(phi), math.sin(phi)
        return ConvexPolygon(self.vertices @ np.array([[c, s], [-s, c]]))

    def reflect(self) -> "ConvexPolygon":
        return ConvexPolygon(-self.vertices)

    def normalized(self) -> "ConvexPolygon":
        """Scaled copy with unit area."""
        return self.scale(1.0 / math.sqrt(self.area()))

    def diameter(self) -> float:
        v = self.vertices
        if len(v) > 2048:
            # support-function bound over many directions, then exact on the extreme pairs
            th = grid(4096)
            u = np.stack([np.cos(th), np.sin(th)], axis=1)
            h = v @ u.T
            return float(np.max(h.max(axis=0) - h.min(axis=0))) * (1 + 1e-6)
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    @classmethod
    def from_json(cls, data) -> "ConvexPolygon":
        if not isinstance(data, dict) or "vertices" not in data:
            raise SpecError("polygon spec: missing field 'vertices'")
        verts = data["vertices"]
        try:
            arr = np.asarray(verts, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SpecError(f"polygon spec: vertices must be [x, y] pairs ({exc})") from exc
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise SpecError("polygon spec: vertices must be a list of [x, y] pairs")
        try:
            return cls(arr)
        except NonConvexError as exc:
            raise SpecError(f"polygon spec: vertices[{exc.index}] breaks convexity") from exc
        except ValueError as exc:
            raise SpecError(f"polygon spec: {exc}") from exc


# ---------------------------------------------------------------------------
# constructors


def polygon_from_radial(f: RadialFunction, n: int | None = None) -> ConvexPolygon:
    """Inscribed polygon with vertices rho(theta_i)(cos theta_i, sin theta_i)."""
    if n is not None and n != f.n:
        f = f.resample(n)
    r = f.samples
    if not np.all(r > 0):
        raise ValueError(f"radial function vanishes at sample {int(np.argmin(r > 0))}; not a radial body")
    th = f.angles
    return ConvexPolygon(np.stack([r * np.cos(th), r * np.sin(th)], axis=1))


def regular_polygon(k: int, area: float = 1.0, phase: float = 0.0) -> ConvexPolygon:
    th = phase + TWO_PI * np.arange(k) / k
    p = ConvexPolygon(np.stack([np.cos(th), np.sin(th)], axis=1))
    return p.scale(math.sqrt(area / p.area()))


def rectangle(width: float, height: float, center: bool = True) -> ConvexPolygon:
    v = np.array([[0, 0], [width, 0], [width, height], [0, height]], dtype=float)
    if center:
        v -= [width / 2, height / 2]
    return ConvexPolygon(v)


def unit_square(center: bool = False) -> ConvexPolygon:
    return rectangle(1.0, 1.0, center=center)


def disk_polygon(n: int = DEFAULT_POLYGON_SIZE, radius: float = 1.0) -> ConvexPolygon:
    return polygon_from_radial(RadialFunction.constant(radius, n))


# ---------------------------------------------------------------------------
# chord profile: the covariogram engine


def _cyclic_runs(y: np.ndarray):
    """Chains of a convex CCW polygon split at the extremes of y.

    Returns index arrays (up, down): ``up`` walks from the minimum of y to the
    maximum, ``down`` from the maximum back to the minimum.  Vertices sharing
    the extreme value are kept on the edge they bound, so an edge parallel to
    the chord direction shows up as a positive chord at the end of the range.
    """
    n = len(y)
    ymin, ymax = y.min(), y.max()
    i0 = int(np.argmin(y))
    # step back to the start of the minimum run
    while y[(i0 - 1) % n] == ymin and (i0 - 1) % n != int(np.argmin(y)):
        i0 = (i0 - 1) % n
    order = (i0 + np.arange(n + 1)) % n
    yr = y[order]
    a = 0
    while a + 1 <= n and yr[a + 1] == ymin:
        a += 1
    is_max = yr == ymax
    p1 = int(np.argmax(is_max))
    p2 = n - int(np.argmax(is_max[::-1]))
    b = n
    while b - 1 > p2 and yr[b - 1] == ymin:
        b -= 1
    return order[a:p1 + 1], order[p2:b + 1]


class ChordProfile:
    """Piecewise-linear chord length of a convex polygon along one direction.

    ``ys`` are breakpoints (projections onto the normal of the direction) and
    ``ell`` the chord lengths there; the covariogram along the direction is
    ``G(s) = int (ell - s)_+``.
    """

    def __init__(self, vertices: np.ndarray, theta: float):
        c, s = math.cos(theta), math.sin(theta)
        z = vertices @ np.array([c, s])
        y = vertices @ np.array([-s, c])
        up, down = _cyclic_runs(y)
        ya, za = np.maximum.accumulate(y[up]), z[up]
        yb, zb = y[down][::-1], z[down][::-1]
        yb = np.maximum.accumulate(yb)
        ys = np.sort(np.concatenate([ya, yb]), kind="stable")
        keep = np.empty(len(ys), dtype=bool)
        keep[0] = True
        np.not_equal(ys[1:], ys[:-1], out=keep[1:])
        ys = ys[keep]
        ell = np.interp(ys, ya, za) - np.interp(ys, yb, zb)
        self.theta = theta
        self.ys = ys
        self.ell = np.maximum(ell, 0.0)
        dy = np.diff(ys)
        self._cum = np.concatenate([[0.0], np.cumsum(0.5 * dy * (self.ell[1:] + self.ell[:-1]))])
        self.area = float(self._cum[-1])

    def g(self, s) -> np.ndarray:
        """Covariogram at distance(s) s along the direction (exact segment-wise integral)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        u0 = self.ell[:-1][None, :] - s[:, None]
        u1 = self.ell[1:][None, :] - s[:, None]
        dy = np.diff(self.ys)[None, :]
        both = (u0 >= 0) & (u1 >= 0)
        mixed = (u0 > 0) != (u1 > 0)
        full = 0.5 * dy * (u0 + u1)
        pos = np.maximum(u0, u1)
        denom = np.abs(u1 - u0)
        with np.errstate(divide="ignore", invalid="ignore"):
            tri = np.where(denom > 0, 0.5 * dy * pos * pos / denom, 0.0)
        val = np.where(both, full, np.where(mixed, tri, 0.0))
        return val.sum(axis=1)

    def _width(self, lam: np.ndarray) -> np.ndarray:
        """Length of {y : ell(y) >= lam}; exact away from plateau levels."""
        ell, ys = self.ell, self.ys
        p = int(np.argmax(ell))
        a = np.interp(lam, np.maximum.accumulate(ell[:p + 1]), ys[:p + 1])
        b = np.interp(lam, np.maximum.accumulate(ell[p:][::-1]), ys[p:][::-1])
        return np.maximum(b - a, 0.0)

    def _levels(self):
        """Chord levels, G at each level, and per-piece width data.

        Between consecutive levels the width is linear in lam, so it is read at
        two interior points; the levels themselves can sit on a plateau (an
        edge parallel to the direction) where the width jumps.
        """
        ell, ys = self.ell, self.ys
        lam = np.unique(np.concatenate([[0.0], ell]))
        p = int(np.argmax(ell))
        a = np.interp(lam, np.maximum.accumulate(ell[:p + 1]), ys[:p + 1])
        b = np.interp(lam, np.maximum.accumulate(ell[p:][::-1]), ys[p:][::-1])
        G = np.maximum(self._F(b) - self._F(a) - lam * np.maximum(b - a, 0.0), 0.0)
        G[-1] = 0.0
        span = np.diff(lam)
        w1 = self._width(lam[:-1] + 0.25 * span)
        w3 = self._width(lam[:-1] + 0.75 * span)
        k = np.maximum((w1 - w3) / (0.5 * span), 0.0)
        w_hi = np.maximum(w3 - 0.25 * span * k, 0.0)
        return lam, G, w_hi, k

    def _F(self, y: np.ndarray) -> np.ndarray:
        ys, ell = self.ys, self.ell
        j = np.clip(np.searchsorted(ys, y, side="right") - 1, 0, len(ys) - 2)
        ly = np.interp(y, ys, ell)
        return self._cum[j] + (y - ys[j]) * 0.5 * (ell[j] + ly)

    def solve(self, targets) -> np.ndarray:
        """Distances s with G(s) = target for 0 < target < area.

        G is piecewise quadratic between consecutive chord levels; the bracketing
        piece is located and the quadratic solved in closed form.
        """
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        lam, G, w_hi, k = self._levels()
        # G is non-increasing in lam; searchsorted on -G
        i = np.searchsorted(-G, -targets, side="right") - 1
        i = np.clip(i, 0, len(lam) - 2)
        lo, hi = lam[i], lam[i + 1]
        w, k = w_hi[i], k[i]
        # G(hi - d) - G(hi) = w d + k d^2 / 2
        dG = np.maximum(targets - G[i + 1], 0.0)
        root = np.sqrt(w * w + 2.0 * k * dG)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(w + root > 0, 2.0 * dG / (w + root), 0.0)
        return np.clip(hi - d, lo, hi)


def chord_profile(P: ConvexPolygon, theta: float) -> ChordProfile:
    return ChordProfile(P.vertices, theta)


def covariogram(P: ConvexPolygon, x, method: str = "chord") -> float:
    """g_P(x) = area(P intersected with P + x).

    ``method="chord"`` integrates the chord profile along x (O(n) per call);
    ``method="clip"`` clips P against its translate.
    """
    x = np.asarray(x, dtype=float)
    if method == "clip":
        return intersection_area(P, P.translate(x))
    if method != "chord":
        raise ValueError(f"unknown covariogram method {method!r}")
    r = float(math.hypot(x[0], x[1]))
    if r == 0.0:
        return P.area()
    prof = ChordProfile(P.vertices, math.atan2(x[1], x[0]))
    return float(prof.g(r)[0])


def covariogram_ray(P: ConvexPolygon, theta: float, s) -> np.ndarray:
    """Covariogram at distances s along the direction theta."""
    g = ChordProfile(P.vertices, theta).g(np.atleast_1d(np.asarray(s, dtype=float)))
    return float(g[0]) if np.ndim(s) == 0 else g


# ---------------------------------------------------------------------------
# clipping


def _clip_halfplane(pts: np.ndarray, normal: np.ndarray, offset: float, eps: float) -> np.ndarray:
    """Keep the part of a convex polygon with normal . p <= offset."""
    d = pts @ normal - offset
    d = np.where(np.abs(d) <= eps, 0.0, d)
    nxt = np.roll(pts, -1, axis=0)
    dn = np.roll(d, -1)
    inside = d <= 0
    crossing = (d < 0) & (dn > 0) | (d > 0) & (dn < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(crossing, d / (d - dn), 0.0)
    inter = pts + t[:, None] * (nxt - pts)
    out = np.stack([pts, inter], axis=1)
    mask = np.stack([inside, crossing], axis=1)
    return out[mask]


def intersection_area(P: ConvexPolygon, Q: ConvexPolygon) -> float:
    """Area of the intersection of two convex polygons by half-plane clipping."""
    scale = max(float(np.max(np.abs(P.vertices))), float(np.max(np.abs(Q.vertices))))
    eps = 1e-12 * scale * scale
    pts = P.vertices
    q = Q.vertices
    e = np.roll(q, -1, axis=0) - q
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    offsets = np.einsum("ij,ij->i", normals, q)
    for nrm, off in zip(normals, offsets):
        pts = _clip_halfplane(pts, nrm, off, eps * math.hypot(*nrm) / max(scale, 1e-300))
        if len(pts) < 3:
            return 0.0
    return max(_signed_area(pts), 0.0)


# ---------------------------------------------------------------------------
# derived bodies


def difference_body(P: ConvexPolygon) -> ConvexPolygon:
    """P + (-P) by merging the edge vectors of both polygons by angle."""
    v = P.vertices
    edges = np.roll(v, -1, axis=0) - v
    all_edges = np.concatenate([edges, -edges])
    ang = np.mod(np.arctan2(all_edges[:, 1], all_edges[:, 0]), TWO_PI)
    order = np.lexsort((-np.hypot(all_edges[:, 0], all_edges[:, 1]), ang))
    all_edges = all_edges[order]
    ang = ang[order]
    # merge parallel edges
    groups = np.concatenate([[True], np.diff(ang) > 1e-14])
    gid = np.cumsum(groups) - 1
    merged = np.zeros((gid[-1] + 1, 2))
    np.add.at(merged, gid, all_edges)
    # start at the vertex of P + (-P) that is lowest (then leftmost): the
    # first edge has the smallest angle, so start at the bottom-most point
    lowest = v[np.lexsort((v[:, 0], v[:, 1]))[0]]
    highest = v[np.lexsort((-v[:, 0], -v[:, 1]))[0]]
    start = lowest - highest
    pts = start + np.concatenate([[[0.0, 0.0]], np.cumsum(merged, axis=0)[:-1]])
    # recenter exactly: DK is origin-symmetric
    pts = pts - pts.mean(axis=0) if len(pts) % 2 else pts - 0.5 * (pts[0] + pts[len(pts) // 2])
    return ConvexPolygon(pts)


def brightness(P: ConvexPolygon, v) -> float:
    """Length of the projection of P onto the line orthogonal to the unit vector v."""
    v = np.asarray(v, dtype=float)
    if abs(math.hypot(v[0], v[1]) - 1.0) > 1e-9:
        raise ValueError("brightness needs a unit direction")
    proj = P.vertices @ np.array([-v[1], v[0]])
    return float(proj.max() - proj.min())


def brightness_function(P: ConvexPolygon, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    e = np.roll(P.vertices, -1, axis=0) - P.vertices
    # projection length onto v^perp is half the sum of |e . v^perp|
    vp = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    return 0.5 * np.abs(vp @ e.T).sum(axis=-1)


def polar_projection_volume(P: ConvexPolygon) -> float:
    """Area of the unit ball of v -> brightness(P, v): (1/2) int brightness^-2.

    The brightness of a polygon is a sum of |a_i cos + b_i sin|, hence a single
    sinusoid R cos(theta - phi) between consecutive kinks, and each piece
    integrates in closed form to tan(theta - phi) / R^2.
    """
    e = np.roll(P.vertices, -1, axis=0) - P.vertices
    # |e . v^perp| = |e_y cos - e_x sin| vanishes where theta = atan2(e_y, e_x) mod pi
    kinks = np.mod(np.arctan2(e[:, 1], e[:, 0]), math.pi)
    kinks = np.unique(np.concatenate([kinks, kinks + math.pi]))
    bounds = np.concatenate([kinks, [kinks[0] + TWO_PI]])
    total = 0.0
    coef = np.stack([e[:, 1], -e[:, 0]], axis=1)  # e . v^perp = e_y cos - e_x sin
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        sign = np.sign(coef[:, 0] * math.cos(mid) + coef[:, 1] * math.sin(mid))
        A, B = 0.5 * (sign @ coef)
        R = math.hypot(A, B)
        phi = math.atan2(B, A)
        total += (math.tan(b - phi) - math.tan(a - phi)) / (R * R)
    return 0.5 * total


def polar_projection_volume_trapezoid(P: ConvexPolygon, n: int = 4096) -> float:
    return 0.5 * TWO_PI * float(np.mean(brightness_function(P, grid(n)) ** -2.0))


# ---------------------------------------------------------------------------
# second-order covariogram correction


def t_correction(f: RadialFunction, v: float, alpha: float) -> float:
    """Second-order boundary term T_K(x) for x = 2 cos(alpha) (cos v, sin v).

    The upper pair of boundary points of S(x) sits at v + alpha and
    v + pi - alpha, the lower pair at v - alpha and v + pi + alpha.
    """
    if not 0.0 < alpha < math.pi / 2:
        raise ValueError(f"alpha must lie in (0, pi/2), got {alpha}")
    r1, r2, r3, r4 = f(np.array([v + alpha, v + math.pi - alpha, v - alpha, v + math.pi + alpha]))
    s = 2.0 * math.cos(alpha)
    num = 4.0 * (r1 * r2 + r3 * r4) + (r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4) * (s * s - 2.0)
    return float(num / (2.0 * s * math.sqrt(4.0 - s * s)))


def ray_table(P: ConvexPolygon, theta: float, s_values: Sequence[float]) -> list[tuple[float, float]]:
    """(s, g) rows along a ray, for CSV output."""
    s_values = np.asarray(list(s_values), dtype=float)
    return list(zip(s_values.tolist(), covariogram_ray(P, theta, s_values).tolist()))


def polygons_from(items: Iterable) -> list[ConvexPolygon]:
    return [p if isinstance(p, ConvexPolygon) else ConvexPolygon(p) for p in items]
