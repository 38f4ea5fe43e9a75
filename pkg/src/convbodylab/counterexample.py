"""Certified convex bodies whose convolution body is larger than the disk's, and the inequality suite."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .convolution_body import (
    DEFAULT_DIRECTIONS,
    delta_nodes,
    direction_rule,
    disk_kiener_average,
    disk_radial_mean_volume,
    radii_matrix,
)
from .covariogram import (
    DEFAULT_POLYGON_SIZE,
    ChordProfile,
    ConvexPolygon,
    difference_body,
    polar_projection_volume,
    polygon_from_radial,
)
from .radial_core import RadialFunction, alpha_from_delta, grid, min_polar_curvature, s_from_delta
from .variation import CONVEXITY_TOL, PerturbationFamily, f_m

F_ZERO_TOL = 1e-12   # F_1 vanishes identically; keep rounding noise from counting as positive


class NoM(ValueError):
    """No frequency m <= m_max with F_m(alpha) > 0."""


class Inconclusive(RuntimeError):
    """The margin did not clear the error budget; carries the best report."""

    def __init__(self, report: "CertificateReport"):
        super().__init__(f"margin {report.margin:.3e} does not exceed "
                         f"{report.threshold:g} x budget {report.error_budget:.3e}")
        self.report = report


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class CertificateReport:
    delta: float
    alpha: float
    m: int
    t: float
    f_value: float
    vol_perturbed: float
    vol_disk: float
    margin: float
    error_budget: float
    convexity_ok: bool
    verdict: str
    threshold: float
    model_margin: float
    budget_terms: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    config_hash: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def model_ratio(self) -> float:
        return self.margin / self.model_margin

    def to_json(self) -> dict:
        out = asdict(self)
        out["model_ratio"] = self.model_ratio
        return out


def find_m(delta: float, m_max: int = 200):
    """Smallest m <= m_max with F_m(alpha(delta)) > 0, or None."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if int(m_max) != m_max or m_max < 1:
        raise ValueError(f"m_max must be a positive integer, got {m_max}")
    alpha = alpha_from_delta(delta)
    for m in range(1, int(m_max) + 1):
        if f_m(alpha, m) > F_ZERO_TOL:
            return m
    return None


def _normalized_volume(P: ConvexPolygon, delta: float, n_dirs: int) -> tuple[float, np.ndarray]:
    r = radii_matrix(P, [delta], grid(n_dirs))[0]
    return math.pi * float(np.mean(r * r)) / P.area(), r


def _root_residual_bound(P: ConvexPolygon, delta: float, radii: np.ndarray, n_dirs: int,
                         probes: int = 16) -> float:
    """Volume error implied by the root-solve residual, from a sample of directions."""
    target = delta * P.area()
    worst = 0.0
    idx = np.linspace(0, n_dirs // 2, probes, endpoint=False).astype(int)
    for j in idx:
        cp = ChordProfile(P.vertices, grid(n_dirs)[j])
        r = radii[j]
        eps = 1e-6 * max(r, 1e-12)
        g = cp.g(np.array([r - eps, r, r + eps]))
        slope = abs(g[2] - g[0]) / (2 * eps)
        if slope > 0:
            worst = max(worst, abs(g[1] - target) / slope)
    return 2 * math.pi * float(np.max(radii)) * worst / P.area()


def _evaluate(fam: PerturbationFamily, delta: float, t: float, n_poly: int, n_dirs: int) -> tuple[float, dict]:
    P = polygon_from_radial(fam.body_at(t), n_poly)
    v, r = _normalized_volume(P, delta, n_dirs)
    v_half_poly, _ = _normalized_volume(polygon_from_radial(fam.body_at(t), n_poly // 2), delta, n_dirs)
    # a direction count sharing no small factor with n_poly exposes aliasing of the vertex ripple
    v_other_dirs, _ = _normalized_volume(P, delta, n_dirs + 2)
    terms = {
        "polygon": abs(v - v_half_poly),
        "quadrature": abs(v - v_other_dirs),
        "root_solve": _root_residual_bound(P, delta, r, n_dirs),
        "rounding": 8 * np.finfo(float).eps * v * (n_poly + n_dirs),
    }
    return v, terms


def certify(delta: float, m_max: int = 200, n_poly: int = DEFAULT_POLYGON_SIZE,
            n_dirs: int = DEFAULT_DIRECTIONS, threshold: float = 10.0, max_halvings: int = 6,
            m: int | None = None) -> CertificateReport:
    """Exhibit a convex polygon of area 1 whose C_delta has more area than the unit-area disk's.

    The certified body is the inscribed n_poly-gon of K_t with rho = 1 + t cos^2(m v).
    Raises NoM when no m <= m_max works and Inconclusive when no dyadic t clears
    the threshold.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n_poly < 32 or n_poly % 2:
        raise ValueError(f"n_poly must be even and >= 32, got {n_poly}")
    if m is None:
        m = find_m(delta, m_max)
        if m is None:
            raise NoM(f"no m <= {m_max} with F_m > 0 at delta={delta}")
    config = {"delta": delta, "m_max": m_max, "m": m, "n_poly": n_poly, "n_dirs": n_dirs,
              "threshold": threshold, "max_halvings": max_halvings, "version": __version__}
    chash = config_hash(config)
    alpha = alpha_from_delta(delta)
    F = f_m(alpha, m)
    vol_disk = s_from_delta(delta) ** 2
    grid_n = max(n_poly, 8 * m)
    grid_n += grid_n % 2
    fam = PerturbationFamily(RadialFunction.cos2m(m, grid_n))

    t = 2.0 ** math.floor(math.log2(1.0 / (2 * m * m)))
    best = None
    for _ in range(max_halvings + 1):
        convex = min_polar_curvature(fam.body_at(t)) >= CONVEXITY_TOL
        if convex:
            v, terms = _evaluate(fam, delta, t, n_poly, n_dirs)
            v_half, _ = _normalized_volume(polygon_from_radial(fam.body_at(t / 2), n_poly), delta, n_dirs)
            monotone = vol_disk < v_half < v
            budget = float(sum(terms.values()))
            margin = v - vol_disk
            ok = monotone and margin > threshold * budget
            report = CertificateReport(
                delta=delta, alpha=alpha, m=m, t=t, f_value=F, vol_perturbed=v, vol_disk=vol_disk,
                margin=margin, error_budget=budget, convexity_ok=True,
                verdict="pass" if ok else "inconclusive", threshold=threshold,
                model_margin=0.5 * F * t * t, budget_terms={**terms, "monotone": monotone},
                config=config, config_hash=chash)
            if ok:
                return report
            if best is None or margin / max(budget, 1e-300) > best.margin / max(best.error_budget, 1e-300):
                best = report
        t /= 2
    if best is None:
        best = CertificateReport(delta, alpha, m, t, F, math.nan, vol_disk, math.nan, math.nan, False,
                                 "inconclusive", threshold, 0.5 * F * t * t, {}, config, chash)
    raise Inconclusive(best)


# ---------------------------------------------------------------------------
# inequality suite


@dataclass(frozen=True)
class Check:
    body: str
    name: str
    lhs: float
    rhs: float
    relation: str          # "<=" or ">="
    tol: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs if self.relation == "<=" else self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.slack >= -self.tol


RP_VALUES = (-0.5, 1.0, 1.5, 4.0)
SANDWICH_DELTAS = (0.5, 0.9, 0.99)
KIENER_WEIGHTS = {"1": lambda d: np.ones_like(d), "delta": lambda d: d, "delta^2": lambda d: d * d}


def inequality_suite(bodies, names=None, n_dirs: int = DEFAULT_DIRECTIONS, n_delta: int = 64,
                     rtol: float = 1e-6) -> list[Check]:
    """Compare each polygon with the disk of equal area under the classical inequalities.

    rtol is the relative tolerance under which a reversed sign still counts as
    equality (the disk against itself).
    """
    names = list(names) if names is not None else [f"body{i}" for i in range(len(bodies))]
    d_nodes, w = delta_nodes(n_delta)
    deltas = np.concatenate([d_nodes, SANDWICH_DELTAS])
    out: list[Check] = []
    for P, name in zip(bodies, names):
        A = P.area()
        th, wt = direction_rule(P, n_dirs)
        r = radii_matrix(P, deltas, th)
        vols = 0.5 * (r * r) @ wt
        gl_r, gl_v = r[:n_delta], vols[:n_delta]

        def add(label, lhs, rhs, rel):
            out.append(Check(name, label, float(lhs), float(rhs), rel, rtol * max(abs(lhs), abs(rhs))))

        for label, omega in KIENER_WEIGHTS.items():
            add(f"kiener[{label}]", float(np.sum(w * omega(d_nodes) * gl_v)),
                disk_kiener_average(A, omega, n_delta), "<=")
        for p in RP_VALUES:
            rp = (w @ gl_r ** p) ** (1.0 / p)
            add(f"R_p[{p:g}]", 0.5 * float((rp * rp) @ wt), disk_radial_mean_volume(A, p, n_delta),
                "<=" if p <= 2 else ">=")
        add("difference_body", difference_body(P).area(), 4 * A, ">=")
        base = A * A * polar_projection_volume(P)
        for k, d in enumerate(SANDWICH_DELTAS):
            v = vols[n_delta + k]
            add(f"sandwich_lower[{d:g}]", (1 - d) ** 2 * base, v, "<=")
            add(f"sandwich_upper[{d:g}]", v, math.log(d) ** 2 * base, "<=")
    return out
