"""Convolution bodies C_delta P of convex polygons and the bodies built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .covariogram import ChordProfile, ConvexPolygon, brightness_function, polar_projection_volume
from .radial_core import DEFAULT_GRID, TWO_PI, RadialFunction, alpha_from_delta, grid, s_from_delta

DEFAULT_DIRECTIONS = 1024


def _check_delta(delta) -> np.ndarray:
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    if np.any(~((d > 0) & (d < 1))):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return d


def radii_matrix(P: ConvexPolygon, deltas, thetas) -> np.ndarray:
    """rho_{C_delta P}(theta) for every (delta, theta) pair, shape (len(deltas), len(thetas)).

    Radii along opposite directions coincide (g(x) = g(-x)), so when the
    direction list is an even equispaced grid only the first half is solved.
    """
    deltas = _check_delta(deltas)
    thetas = np.asarray(thetas, dtype=float).reshape(-1)
    area = P.area()
    targets = deltas * area
    n = len(thetas)
    half = n // 2
    mirrored = n % 2 == 0 and n > 0 and np.allclose(thetas[half:] - thetas[:half], math.pi, atol=1e-13)
    todo = thetas[:half] if mirrored else thetas
    out = np.empty((len(deltas), len(todo)))
    for j, th in enumerate(todo):
        out[:, j] = ChordProfile(P.vertices, th).solve(targets)
    if mirrored:
        out = np.concatenate([out, out], axis=1)
    return out


def convbody_radius(P: ConvexPolygon, delta: float, v: float) -> float:
    """Distance s >= 0 along angle v with covariogram(P, s v) = delta area(P)."""
    return float(radii_matrix(P, [delta], [v])[0, 0])


def convbody(P: ConvexPolygon, delta: float, n: int = DEFAULT_GRID) -> RadialFunction:
    """Radial samples of C_delta P on the n-point angle grid."""
    return RadialFunction(radii_matrix(P, [delta], grid(n))[0], spectral=False, tag="convbody")


def direction_rule(P: ConvexPolygon, n_dirs: int = DEFAULT_DIRECTIONS, nodes_per_piece: int = 12,
                   max_exact_vertices: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Angles and weights (summing to 2 pi) for integrals of functions of rho_{C_delta P}.

    The radial function of C_delta P is smooth between directions parallel to
    a pair of vertices. For small polygons those directions are few, and
    Gauss-Legendre on each piece of [0, pi) is used (radii repeat after pi).
    Large polygons fall back to the equispaced trapezoid rule with n_dirs points.
    """
    if P.n > max_exact_vertices:
        return grid(n_dirs), np.full(n_dirs, TWO_PI / n_dirs)
    V = P.vertices
    i, j = np.triu_indices(P.n, 1)
    d = V[j] - V[i]
    br = np.mod(np.arctan2(d[:, 1], d[:, 0]), math.pi)
    br = np.sort(np.concatenate([br, [0.0, math.pi]]))
    br = br[np.concatenate([[True], np.diff(br) > 1e-13])]
    br[-1] = math.pi
    x, w = np.polynomial.legendre.leggauss(nodes_per_piece)
    a, b = br[:-1, None], br[1:, None]
    th = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wt = (b - a) * w          # doubled: the half-width factor cancels the two half circles
    return th, wt.ravel()


def convbody_volume(P: ConvexPolygon, delta: float, n_dirs: int = DEFAULT_DIRECTIONS) -> float:
    return float(convbody_volumes(P, [delta], n_dirs)[0])


def convbody_volumes(P: ConvexPolygon, deltas, n_dirs: int = DEFAULT_DIRECTIONS) -> np.ndarray:
    th, w = direction_rule(P, n_dirs)
    r = radii_matrix(P, deltas, th)
    return 0.5 * (r * r) @ w


def disk_convbody_volume(area: float, delta: float) -> float:
    """vol C_delta of the disk with the given area: area * s(delta)^2."""
    return float(area) * s_from_delta(delta) ** 2


# ---------------------------------------------------------------------------
# delta quadrature


@lru_cache(maxsize=8)
def delta_nodes(n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes in tau mapped through delta = sin^2(pi tau / 2).

    The node density behaves like (1 - delta)^(-1/2) near 1 and delta^(-1/2)
    near 0, where convolution-body radii have square-root type behaviour.
    """
    x, w = np.polynomial.legendre.leggauss(n)
    tau = 0.5 * (x + 1.0)
    delta = np.sin(0.5 * math.pi * tau) ** 2
    weight = 0.5 * w * 0.5 * math.pi * np.sin(math.pi * tau)
    delta.setflags(write=False)
    weight.setflags(write=False)
    return delta, weight


def disk_radius_profile(deltas) -> np.ndarray:
    """s(delta) for the unit disk at each delta."""
    return np.array([s_from_delta(d) for d in np.atleast_1d(deltas)])


# ---------------------------------------------------------------------------
# radial mean bodies


def _p_mean(values: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    return (weights @ values ** p) ** (1.0 / p)


def radial_mean_body(P: ConvexPolygon, p: float, n: int = DEFAULT_DIRECTIONS,
                     n_delta: int = 64) -> RadialFunction:
    """rho_{R_p P}(v) = (int_0^1 rho_{C_delta P}(v)^p d delta)^(1/p)."""
    if p <= -1 or p == 0:
        raise ValueError(f"p must satisfy p > -1 and p != 0, got {p}")
    d, w = delta_nodes(n_delta)
    r = radii_matrix(P, d, grid(n))
    return RadialFunction(_p_mean(r, w, p), spectral=False, tag="radial_mean")


def radial_mean_volumes(P: ConvexPolygon, ps, n: int = DEFAULT_DIRECTIONS, n_delta: int = 64) -> dict:
    """vol R_p P for several p, sharing one radii computation."""
    d, w = delta_nodes(n_delta)
    th, wt = direction_rule(P, n)
    r = radii_matrix(P, d, th)
    out = {}
    for p in ps:
        if p <= -1 or p == 0:
            raise ValueError(f"p must satisfy p > -1 and p != 0, got {p}")
        rp = _p_mean(r, w, p)
        out[p] = 0.5 * float((rp * rp) @ wt)
    return out


def disk_radial_mean_volume(area: float, p: float, n_delta: int = 64) -> float:
    d, w = delta_nodes(n_delta)
    s = disk_radius_profile(d)
    radius = math.sqrt(area / math.pi) * float((w @ s ** p) ** (1.0 / p))
    return math.pi * radius * radius


# ---------------------------------------------------------------------------
# averaged volumes and limits


def weighted_volume(volumes: np.ndarray, omega, n_delta: int = 64) -> float:
    d, w = delta_nodes(n_delta)
    return float(np.sum(w * omega(d) * volumes))


def kiener_average(P: ConvexPolygon, omega, n_dirs: int = DEFAULT_DIRECTIONS, n_delta: int = 64) -> float:
    """int_0^1 omega(delta) vol C_delta P d delta."""
    d, _ = delta_nodes(n_delta)
    return weighted_volume(convbody_volumes(P, d, n_dirs), omega, n_delta)


def disk_kiener_average(area: float, omega, n_delta: int = 64) -> float:
    d, _ = delta_nodes(n_delta)
    return weighted_volume(area * disk_radius_profile(d) ** 2, omega, n_delta)


@dataclass(frozen=True)
class SchmuckRatio:
    delta: float
    ratio: float          # vol C_delta P / (1 - delta)^2
    limit: float          # vol(P)^2 vol(Pi* P)
    lower: float          # (1 - delta)^2 vol(P)^2 vol(Pi* P)
    upper: float          # (-log delta)^2 vol(P)^2 vol(Pi* P)
    volume: float

    @property
    def relative_gap(self) -> float:
        return abs(self.ratio / self.limit - 1.0)


def schmuck_ratio(P: ConvexPolygon, delta: float, n_dirs: int = DEFAULT_DIRECTIONS) -> SchmuckRatio:
    """Compare vol C_delta P / (1 - delta)^2 with its delta -> 1 limit vol(P)^2 vol(Pi* P)."""
    _check_delta(delta)
    vol = convbody_volume(P, delta, n_dirs)
    base = P.area() ** 2 * polar_projection_volume(P)
    return SchmuckRatio(delta, vol / (1 - delta) ** 2, base, (1 - delta) ** 2 * base,
                        math.log(delta) ** 2 * base, vol)


def disk_schmuck_limit(area: float) -> float:
    """vol(B)^2 vol(Pi* B) for the disk of the given area."""
    # brightness of a radius-r disk is 2r, so Pi* B has radius 1/(2r)
    r2 = area / math.pi
    return area ** 2 * math.pi / (4.0 * r2)


def difference_body_radius(P: ConvexPolygon, thetas) -> np.ndarray:
    """Radial function of P + (-P): the support of covariogram is where chords are positive."""
    return np.array([ChordProfile(P.vertices, th).ell.max() for th in np.atleast_1d(thetas)])


def brightness_on_grid(P: ConvexPolygon, n: int = DEFAULT_GRID) -> np.ndarray:
    return brightness_function(P, grid(n))


def lens_radius(delta: float) -> float:
    return 2.0 * math.cos(alpha_from_delta(delta))
