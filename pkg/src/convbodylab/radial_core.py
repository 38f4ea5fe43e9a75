"""Radial functions on the circle, lens geometry of two unit disks, and the
alpha / s / delta parameter conversions.

All circle integrals use the trapezoidal rule on an equispaced periodic grid,
which is exact for trigonometric polynomials of degree below N/2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

TWO_PI = 2.0 * math.pi
DEFAULT_GRID = 4096


# ---------------------------------------------------------------------------
# lens geometry


def _check_s(s: float, open_interval: bool = False) -> float:
    s = float(s)
    if not math.isfinite(s):
        raise ValueError(f"chord parameter must be finite, got {s}")
    if open_interval:
        if not 0.0 < s < 2.0:
            raise ValueError(f"chord parameter must lie in (0, 2), got {s}")
    elif not 0.0 <= s <= 2.0:
        raise ValueError(f"chord parameter must lie in [0, 2], got {s}")
    return s


def _two_alpha_minus_sin(alpha: float) -> float:
    """2a - sin(2a), with a series branch to keep relative accuracy near 0."""
    x = 2.0 * alpha
    if x < 1e-2:
        x2 = x * x
        return x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    return x - math.sin(x)


def lens_area(s: float) -> float:
    """Area of the unit disk intersected with its translate by a vector of length s."""
    s = _check_s(s)
    alpha = math.acos(s / 2.0)
    return _two_alpha_minus_sin(alpha)


def lens_derivatives(s: float) -> tuple[float, float]:
    """(L'(s), L''(s)) for the lens area L."""
    s = _check_s(s, open_interval=True)
    alpha = math.acos(s / 2.0)
    return -2.0 * math.sin(alpha), 1.0 / math.tan(alpha)


def lens_boundary(s: float) -> tuple[float, float]:
    """(S(s), S'(s)): total length of the two circle arcs bounding the lens, and its derivative."""
    s = _check_s(s, open_interval=True)
    alpha = math.acos(s / 2.0)
    return 4.0 * alpha, -2.0 / math.sin(alpha)


def delta_from_alpha(alpha: float) -> float:
    if not 0.0 < alpha < math.pi / 2:
        raise ValueError(f"alpha must lie in (0, pi/2), got {alpha}")
    return _two_alpha_minus_sin(alpha) / math.pi


def alpha_from_delta(delta: float) -> float:
    """Invert delta = (2a - sin 2a)/pi by bisection on (0, pi/2).

    The map is strictly increasing, so plain bisection is used; it runs until
    the bracket can no longer be split in floating point.
    """
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    target = delta * math.pi
    lo, hi = 0.0, math.pi / 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _two_alpha_minus_sin(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def s_from_delta(delta: float) -> float:
    """Radius of the delta-convolution body of the unit disk."""
    return 2.0 * math.cos(alpha_from_delta(delta))


@dataclass(frozen=True)
class LensParams:
    alpha: float
    s: float
    delta: float

    @classmethod
    def from_alpha(cls, alpha: float) -> "LensParams":
        return cls(alpha, 2.0 * math.cos(alpha), delta_from_alpha(alpha))

    @classmethod
    def from_delta(cls, delta: float) -> "LensParams":
        alpha = alpha_from_delta(delta)
        return cls(alpha, 2.0 * math.cos(alpha), float(delta))

    @classmethod
    def from_s(cls, s: float) -> "LensParams":
        s = _check_s(s, open_interval=True)
        return cls.from_alpha(math.acos(s / 2.0))


# ---------------------------------------------------------------------------
# Fourier series


@dataclass(frozen=True)
class FourierSeries:
    """Real periodic function a0 + 2 Re sum_{n>=1} a_n e^{i n v}.

    Only nonnegative frequencies are stored; a_{-n} is the conjugate of a_n.
    """

    a0: float
    an: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        an = np.asarray(self.an, dtype=complex).reshape(-1)
        an.setflags(write=False)
        object.__setattr__(self, "an", an)
        object.__setattr__(self, "a0", float(np.real(self.a0)))

    @property
    def n_max(self) -> int:
        return len(self.an)

    def coefficient(self, n: int) -> complex:
        if n == 0:
            return complex(self.a0)
        if n < 0:
            return np.conj(self.coefficient(-n))
        return self.an[n - 1] if n <= self.n_max else 0j

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = np.arange(1, self.n_max + 1)
        phase = np.exp(1j * np.multiply.outer(theta, n))
        return self.a0 + 2.0 * np.real(phase @ self.an)


def analyze(f: "RadialFunction", n_max: int) -> FourierSeries:
    n = f.n
    if n_max >= n // 2:
        raise ValueError(f"n_max={n_max} aliases on a grid of {n} samples (need n_max < {n // 2})")
    c = np.fft.rfft(f.samples) / n
    return FourierSeries(c[0].real, c[1:n_max + 1])


def synthesize(series: FourierSeries, n: int = DEFAULT_GRID) -> "RadialFunction":
    if series.n_max >= n // 2:
        raise ValueError(f"series with {series.n_max} modes needs more than {2 * series.n_max} samples")
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[0] = series.a0
    spec[1:series.n_max + 1] = series.an
    samples = np.fft.irfft(spec * n, n)
    return RadialFunction(samples, spectral=True, tag="fourier")


# ---------------------------------------------------------------------------
# radial functions


def grid(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


@dataclass(frozen=True)
class RadialFunction:
    """Periodic profile sampled at N equispaced angles 2 pi j / N.

    ``spectral`` marks profiles known to be band-limited (built from a closed
    form or a Fourier series); their derivatives are taken spectrally. Plain
    samples use fourth-order centered differences.
    """

    samples: np.ndarray
    spectral: bool = False
    tag: Optional[str] = None

    def __post_init__(self):
        x = np.array(self.samples, dtype=float).reshape(-1)
        n = len(x)
        if n < 16 or n % 2:
            raise ValueError(f"need an even number of samples >= 16, got {n}")
        if not np.all(np.isfinite(x)):
            raise ValueError("radial samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    # constructors -----------------------------------------------------------

    @classmethod
    def constant(cls, c: float, n: int = DEFAULT_GRID) -> "RadialFunction":
        return cls(np.full(n, float(c)), spectral=True, tag="constant")

    @classmethod
    def cos2m(cls, m: int, n: int = DEFAULT_GRID) -> "RadialFunction":
        """cos(m v)^2, the profile behind the counterexample family."""
        if int(m) != m or m < 1:
            raise ValueError(f"m must be a positive integer, got {m}")
        m = int(m)
        if 2 * m >= n // 2:
            raise ValueError(f"cos^2({m} v) is not resolved by {n} samples")
        return cls(np.cos(m * grid(n)) ** 2, spectral=True, tag="cos2m")

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], n: int = DEFAULT_GRID,
                      spectral: bool = True) -> "RadialFunction":
        return cls(func(grid(n)), spectral=spectral, tag="function")

    # basic properties -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def angles(self) -> np.ndarray:
        return grid(self.n)

    def is_body(self) -> bool:
        return bool(np.all(self.samples > 0))

    def is_set(self) -> bool:
        return bool(np.all(self.samples >= 0))

    def __call__(self, theta):
        """Trigonometric interpolant of the samples at arbitrary angles."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        n = self.n
        c = np.fft.rfft(self.samples) / n
        k = np.arange(1, n // 2)
        phase = np.exp(1j * np.multiply.outer(theta, k))
        out = c[0].real + 2.0 * np.real(phase @ c[1:n // 2])
        out = out + c[n // 2].real * np.cos(np.multiply.outer(theta, n // 2))
        return out

    # arithmetic -------------------------------------------------------------

    def _combine(self, other, op):
        if isinstance(other, RadialFunction):
            if other.n != self.n:
                raise ValueError("radial functions live on different grids")
            return RadialFunction(op(self.samples, other.samples), self.spectral and other.spectral)
        return RadialFunction(op(self.samples, float(other)), self.spectral)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.divide)

    def __neg__(self):
        return RadialFunction(-self.samples, self.spectral)

    def squared(self) -> "RadialFunction":
        return RadialFunction(self.samples ** 2, self.spectral)

    def resample(self, n: int) -> "RadialFunction":
        """Band-limited resampling on a finer (or coarser) grid."""
        if n == self.n:
            return self
        c = np.fft.rfft(self.samples) / self.n
        out = np.zeros(n // 2 + 1, dtype=complex)
        k = min(len(c), len(out)) - 1
        out[:k] = c[:k]
        return RadialFunction(np.fft.irfft(out * n, n), self.spectral, self.tag)

    # spectral operations on the grid ---------------------------------------

    def _spectrum(self) -> np.ndarray:
        return np.fft.rfft(self.samples)

    def _freqs(self) -> np.ndarray:
        return np.arange(self.n // 2 + 1)

    def shifted(self, phi: float) -> np.ndarray:
        """Grid samples of v -> rho(v + phi)."""
        spec = self._spectrum() * np.exp(1j * self._freqs() * phi)
        return np.fft.irfft(spec, self.n)

    def derivative(self, order: int = 1) -> np.ndarray:
        if order == 0:
            return self.samples.copy()
        if self.spectral:
            spec = self._spectrum() * (1j * self._freqs()) ** order
            if order % 2:
                spec[-1] = 0.0
            return np.fft.irfft(spec, self.n)
        h = TWO_PI / self.n
        x = self.samples
        xm2, xm1, xp1, xp2 = (np.roll(x, 2), np.roll(x, 1), np.roll(x, -1), np.roll(x, -2))
        if order == 1:
            return (xm2 - 8 * xm1 + 8 * xp1 - xp2) / (12 * h)
        if order == 2:
            return (-xm2 + 16 * xm1 - 30 * x + 16 * xp1 - xp2) / (12 * h * h)
        raise ValueError("finite differences are provided up to order 2")

    def arc_integrals(self, alpha: float) -> np.ndarray:
        """w(v) = int_{v-a}^{v+a} rho + int_{v+pi-a}^{v+pi+a} rho at every grid angle.

        Integrates the trigonometric interpolant exactly, so the result is
        continuous in alpha.
        """
        k = self._freqs().astype(float)
        kernel = np.empty_like(k)
        kernel[0] = 4.0 * alpha
        kk = k[1:]
        kernel[1:] = 2.0 * np.sin(kk * alpha) / kk * (1.0 + np.cos(kk * math.pi))
        return np.fft.irfft(self._spectrum() * kernel, self.n)

    # integrals --------------------------------------------------------------

    def integral(self) -> float:
        return TWO_PI * float(np.mean(self.samples))

    def to_spec(self) -> dict:
        return {"kind": "samples", "values": self.samples.tolist()}


def area_of(f: RadialFunction) -> float:
    """Area of the radial set, (1/2) int rho^2."""
    return math.pi * float(np.mean(f.samples ** 2))


def mean_integral(f: RadialFunction) -> float:
    """int_{S^1} rho."""
    return f.integral()


def circle_integral(values: np.ndarray) -> float:
    """Trapezoidal integral over [0, 2pi) of equispaced periodic samples."""
    return TWO_PI * float(np.mean(values))


def arc_integral_w(f: RadialFunction, v, alpha: float):
    """w_{K,v}(alpha) at angle(s) v; grid values are interpolated spectrally."""
    if not 0.0 < alpha < math.pi / 2:
        raise ValueError(f"alpha must lie in (0, pi/2), got {alpha}")
    w = RadialFunction(f.arc_integrals(alpha), spectral=True)
    return w(v)


def min_polar_curvature(f: RadialFunction) -> float:
    """min over the grid of rho^2 + 2 rho'^2 - rho rho''; nonnegative iff the body is convex."""
    if not f.is_body():
        raise ValueError("polar curvature needs a strictly positive radial function")
    r = f.samples
    d1 = f.derivative(1)
    d2 = f.derivative(2)
    return float(np.min(r * r + 2 * d1 * d1 - r * d2))


def min_discrete_curvature(f: RadialFunction) -> float:
    """Turning of the sampled boundary polygon, scaled by 1/h^3.

    Consistent with min_polar_curvature on smooth profiles, and still
    nonnegative for convex profiles with corners, where derivatives do not exist.
    """
    if not f.is_body():
        raise ValueError("polar curvature needs a strictly positive radial function")
    th = f.angles
    p = np.stack([f.samples * np.cos(th), f.samples * np.sin(th)], axis=1)
    e = np.roll(p, -1, axis=0) - p
    e_prev = np.roll(e, 1, axis=0)
    turn = e_prev[:, 0] * e[:, 1] - e_prev[:, 1] * e[:, 0]
    h = TWO_PI / f.n
    return float(np.min(turn)) / h ** 3


# ---------------------------------------------------------------------------
# body specs (JSON)


class SpecError(ValueError):
    """Malformed body specification."""


def _require(spec: dict, key: str, where: str):
    if key not in spec:
        raise SpecError(f"{where}: missing field '{key}'")
    return spec[key]


def radial_from_spec(spec: dict[str, Any], n: int = DEFAULT_GRID) -> RadialFunction:
    if not isinstance(spec, dict):
        raise SpecError("body spec must be a JSON object")
    kind = _require(spec, "kind", "body spec")
    try:
        if kind == "constant":
            return RadialFunction.constant(float(_require(spec, "c", "constant")), n)
        if kind == "cos2m":
            m = _require(spec, "m", "cos2m")
            if not isinstance(m, int) or isinstance(m, bool):
                raise SpecError(f"cos2m: field 'm' must be an integer, got {m!r}")
            return RadialFunction.cos2m(m, n)
        if kind == "fourier":
            a0 = float(_require(spec, "a0", "fourier"))
            an = _require(spec, "an", "fourier")
            coeffs = []
            for i, pair in enumerate(an):
                if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                    raise SpecError(f"fourier: an[{i}] must be a [re, im] pair")
                coeffs.append(complex(float(pair[0]), float(pair[1])))
            return synthesize(FourierSeries(a0, np.array(coeffs, dtype=complex)), n)
        if kind == "samples":
            values = _require(spec, "values", "samples")
            return RadialFunction(np.asarray(values, dtype=float), spectral=False, tag="samples")
    except SpecError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{kind}: {exc}") from exc
    raise SpecError(f"body spec: unknown kind {kind!r}")


def series_to_spec(series: FourierSeries) -> dict:
    return {"kind": "fourier", "a0": series.a0,
            "an": [[float(c.real), float(c.imag)] for c in series.an]}


def load_json(path: str) -> Any:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
