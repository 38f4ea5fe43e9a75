"""Perturbations K_t of the disk and the variation of t -> vol C_delta of their normalizations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .convolution_body import DEFAULT_DIRECTIONS, radii_matrix
from .covariogram import DEFAULT_POLYGON_SIZE, ChordProfile, polygon_from_radial, t_correction
from .radial_core import (
    FourierSeries,
    RadialFunction,
    alpha_from_delta,
    area_of,
    circle_integral,
    grid,
    lens_area,
    min_polar_curvature,
)

CONVEXITY_TOL = -1e-9


@dataclass(frozen=True)
class PerturbationFamily:
    """K_t with radial function 1 + t rho_K; ``t`` is the working parameter."""

    base: RadialFunction
    t: float = 0.0

    def body_at(self, t: float | None = None) -> RadialFunction:
        t = self.t if t is None else float(t)
        out = 1.0 + t * self.base
        if not out.is_body():
            raise ValueError(f"1 + t rho_K is not positive at t={t}")
        return RadialFunction(out.samples, self.base.spectral, "perturbed")

    def area_at(self, t: float | None = None) -> float:
        """pi + t I_K + t^2 area(K)."""
        t = self.t if t is None else float(t)
        return math.pi + t * self.base.integral() + t * t * area_of(self.base)

    def normalized_at(self, t: float | None = None) -> RadialFunction:
        body = self.body_at(t)
        return RadialFunction(body.samples / math.sqrt(area_of(body)), body.spectral, "normalized")

    def is_convex_at(self, t: float | None = None) -> bool:
        return min_polar_curvature(self.body_at(t)) >= CONVEXITY_TOL

    def convexity_window(self) -> float:
        """Largest t on a fine scan with body_at(t) convex (closed form 1/(2m^2) for cos^2(mv))."""
        lo, hi = 0.0, 1.0
        while self.is_convex_at(hi) and hi < 1e6:
            lo, hi = hi, 2 * hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.is_convex_at(mid):
                lo = mid
            else:
                hi = mid
        return lo


def normalized_volumes(fam: PerturbationFamily, ts, deltas, n_poly: int = DEFAULT_POLYGON_SIZE,
                       n_dirs: int = DEFAULT_DIRECTIONS) -> np.ndarray:
    """vol(C_delta P_t) / area(P_t) for the inscribed n_poly-gon P_t of K_t, shape (len(ts), len(deltas)).

    Dividing by the polygon's own area is the same as normalizing it to area 1.
    """
    out = np.empty((len(ts), len(np.atleast_1d(deltas))))
    th = grid(n_dirs)
    for i, t in enumerate(ts):
        P = polygon_from_radial(fam.body_at(t), n_poly)
        r = radii_matrix(P, deltas, th)
        out[i] = math.pi * np.mean(r * r, axis=1) / P.area()
    return out


@dataclass(frozen=True)
class FDResult:
    delta: float
    h: float
    first: float            # Richardson-combined central first difference
    second: float           # Richardson-combined central second difference
    first_h: float
    first_h2: float
    second_h: float
    second_h2: float
    order: float            # log2 |first_h / first_h2|
    volumes: dict = field(default_factory=dict)

    @property
    def h_term(self) -> float:
        """Size of the Richardson correction, a proxy for the O(h^2) error."""
        return abs(self.second_h2 - self.second_h) / 3.0


def _observed_order(a: float, b: float) -> float:
    if b == 0.0:
        return math.inf if a != 0.0 else math.nan
    if a == 0.0:
        return math.nan
    return math.log2(abs(a / b))


def fd_derivatives(fam: PerturbationFamily, delta, h: float = 0.02, n_poly: int = DEFAULT_POLYGON_SIZE,
                   n_dirs: int = DEFAULT_DIRECTIONS):
    """Central differences of V(t) = vol(C_delta normalized_at(t)) at t = 0 with steps h and h/2.

    Negative t is evaluated on the family itself (1 + t rho_K stays positive for
    small |t|). Each stencil point must give a convex body. ``delta`` may be a
    scalar or a sequence; the polygons are shared across deltas.
    """
    scalar = np.ndim(delta) == 0
    deltas = np.atleast_1d(np.asarray(delta, dtype=float))
    ts = [0.0, h, -h, h / 2, -h / 2]
    for t in ts[1:]:
        if not fam.is_convex_at(t):
            raise ValueError(f"body_at({t:g}) is not convex; reduce h")
    V = normalized_volumes(fam, ts, deltas, n_poly, n_dirs)
    out = []
    for j, d in enumerate(deltas):
        v0, vp, vm, vp2, vm2 = V[:, j]
        d1h = (vp - vm) / (2 * h)
        d1h2 = (vp2 - vm2) / h
        d2h = (vp - 2 * v0 + vm) / (h * h)
        d2h2 = (vp2 - 2 * v0 + vm2) / (h * h / 4)
        out.append(FDResult(float(d), h, (4 * d1h2 - d1h) / 3, (4 * d2h2 - d2h) / 3,
                            d1h, d1h2, d2h, d2h2, _observed_order(d1h, d1h2),
                            dict(zip(ts, V[:, j].tolist()))))
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# analytic second variation


def _profile(obj) -> RadialFunction:
    return obj.base if isinstance(obj, PerturbationFamily) else obj


def second_variation_terms(base: RadialFunction, alpha: float) -> dict:
    """The five integrals entering the second derivative at t = 0."""
    if not 0.0 < alpha < math.pi / 2:
        raise ValueError(f"alpha must lie in (0, pi/2), got {alpha}")
    rho = base.samples
    I = base.integral()
    bracket = (base.shifted(alpha) + base.shifted(-alpha)
               + base.shifted(math.pi + alpha) + base.shifted(math.pi - alpha))
    w = base.arc_integrals(alpha)
    return {
        "I": I,
        "bracket_w": circle_integral(bracket * w),
        "w2": circle_integral(w * w),
        "cross": circle_integral(base.shifted(math.pi - alpha) * base.shifted(alpha)),
        "vol": 0.5 * circle_integral(rho * rho),
    }


def second_variation_at_alpha(base: RadialFunction, alpha: float) -> float:
    T = second_variation_terms(base, alpha)
    sa, ca = math.sin(alpha), math.cos(alpha)
    k = (math.sin(2 * alpha) - 2 * alpha) / sa
    inner = (-k * k * T["I"] ** 2 / (2 * math.pi)
             - 0.5 * ca / sa * T["bracket_w"]
             + T["w2"] / (4 * sa * sa)
             + 2 * T["cross"]
             + 4 * math.cos(2 * alpha) * T["vol"])
    return inner / (math.pi * sa * sa)


def analytic_second_derivative(fam, delta: float) -> float:
    """d^2/dt^2 vol(C_delta of the normalized K_t) at t = 0, from the profile alone."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return second_variation_at_alpha(_profile(fam), alpha_from_delta(delta))


def f_m(alpha, m: int):
    """Closed-form second variation for the profile cos(m v)^2."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    a = np.asarray(alpha, dtype=float)
    if np.any((a <= 0) | (a >= math.pi / 2)):
        raise ValueError("alpha must lie in (0, pi/2)")
    s2 = np.sin(a) ** 2
    c4 = np.cos(4 * a * m)
    out = (0.5 * np.cos(2 * a) + 0.5 * c4 + (1.0 - c4) / (8 * m * m * s2)
           - np.sin(4 * a * m) / (2 * m * np.tan(a))) / s2
    return float(out) if out.ndim == 0 else out


def limit_second_derivative(base: RadialFunction) -> float:
    """delta -> 1 limit of the second derivative divided by (1 - delta)^2."""
    rho = base.samples
    sym = 0.5 * (rho + base.shifted(math.pi))
    d1 = base.derivative(1)
    I = base.integral()
    return (0.75 * math.pi * circle_integral(sym * sym) - 0.5 * I * I
            - 0.25 * math.pi * circle_integral(d1 * d1) + 0.5 * math.pi * area_of(base))


def fourier_limit_value(series: FourierSeries) -> float:
    """4 pi sum_{n>=1} (1 + 3 [n even] - n^2) |a_n|^2; equals (4/pi) times the limit above."""
    n = np.arange(1, series.n_max + 1)
    eps = (n % 2 == 0).astype(float)
    return float(4 * math.pi * np.sum((1 + 3 * eps - n * n) * np.abs(series.an) ** 2))


def extrapolated_limit(base: RadialFunction, ks=range(4, 13)) -> tuple[float, np.ndarray]:
    """Richardson extrapolation of second_derivative/(1 - delta)^2 along delta = 1 - 2^-k.

    The ratio has an expansion in powers of (1 - delta)^(1/2) near 1, so the
    sequence is eliminated successively for exponents 1/2, 1, 3/2, ...
    Returns the best estimate and the raw ratios.
    """
    ks = list(ks)
    ratios = np.array([analytic_second_derivative(base, 1 - 2.0 ** -k) * 4.0 ** k for k in ks])
    table = ratios.copy()
    for j in range(1, len(ks)):
        f = 2.0 ** (0.5 * j)
        table = (f * table[1:] - table[:-1]) / (f - 1)
    return float(table[-1]), ratios


# ---------------------------------------------------------------------------
# covariogram expansion in t


@dataclass(frozen=True)
class CovariogramExpansion:
    s: float
    theta: float
    ts: np.ndarray
    g: np.ndarray
    L: float
    W: float
    model_c2: float          # 1/2 int_S rho^2 + T_K
    fitted_c2: float
    residuals: np.ndarray    # g - (L + t W + t^2 model_c2)


def covariogram_expansion(base: RadialFunction, s: float, theta: float = 0.0,
                          ks=range(4, 10), n_poly: int = 1 << 17) -> CovariogramExpansion:
    """g_{K_t}(s v_theta) along t = 2^-k next to its second-order expansion in t.

    The polygon error is removed by subtracting the same construction at t = 0
    and adding back the exact lens area.
    """
    if not 0.0 < s < 2.0:
        raise ValueError(f"s must lie in (0, 2), got {s}")
    alpha = math.acos(s / 2)
    fine = base.resample(n_poly) if base.spectral else base

    def g_at(t):
        P = polygon_from_radial(1.0 + t * fine if t else RadialFunction.constant(1.0, n_poly))
        return float(ChordProfile(P.vertices, theta).g(np.array([s]))[0])

    g0 = g_at(0.0)
    L = lens_area(s)
    ts = np.array([2.0 ** -k for k in ks])
    g = np.array([g_at(t) - g0 + L for t in ts])
    W = float(RadialFunction(base.arc_integrals(alpha), spectral=True)(theta))
    sq = base.squared()
    half_int = 0.5 * float(RadialFunction(sq.arc_integrals(alpha), spectral=True)(theta))
    c2 = half_int + t_correction(base, theta, alpha)
    q = (g - L - ts * W) / ts ** 2
    # q = c2 + c3 t + ...: fit a line in t
    A = np.stack([np.ones_like(ts), ts], axis=1)
    coef, *_ = np.linalg.lstsq(A, q, rcond=None)
    return CovariogramExpansion(s, theta, ts, g, L, W, c2, float(coef[0]), g - (L + ts * W + ts ** 2 * c2))
