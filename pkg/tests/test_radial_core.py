import math

import numpy as np
import pytest

from convbodylab.radial_core import (
    FourierSeries,
    LensParams,
    RadialFunction,
    SpecError,
    alpha_from_delta,
    analyze,
    arc_integral_w,
    area_of,
    delta_from_alpha,
    lens_area,
    lens_boundary,
    lens_derivatives,
    mean_integral,
    min_discrete_curvature,
    min_polar_curvature,
    radial_from_spec,
    s_from_delta,
    series_to_spec,
    synthesize,
)


class TestLens:
    def test_endpoints(self):
        assert lens_area(0.0) == pytest.approx(math.pi, abs=1e-15)
        assert lens_area(2.0) == pytest.approx(0.0, abs=1e-15)

    def test_sqrt2(self):
        assert lens_area(math.sqrt(2)) == pytest.approx(math.pi / 2 - 1, abs=1e-14)
        d1, d2 = lens_derivatives(math.sqrt(2))
        S, dS = lens_boundary(math.sqrt(2))
        assert d1 == pytest.approx(-math.sqrt(2), abs=1e-14)
        assert d2 == pytest.approx(1.0, abs=1e-14)
        assert S == pytest.approx(math.pi, abs=1e-14)
        assert dS == pytest.approx(-2 * math.sqrt(2), abs=1e-14)

    def test_boundary_near_zero(self):
        assert lens_boundary(1e-9)[0] == pytest.approx(2 * math.pi, abs=1e-8)

    def test_derivative_matches_central_difference(self):
        h = 1e-5
        fd = (lens_area(1 + h) - lens_area(1 - h)) / (2 * h)
        assert fd == pytest.approx(lens_derivatives(1.0)[0], abs=1e-6)

    def test_second_derivative_matches_central_difference(self):
        h = 1e-4
        fd = (lens_area(1.3 + h) - 2 * lens_area(1.3) + lens_area(1.3 - h)) / h ** 2
        assert fd == pytest.approx(lens_derivatives(1.3)[1], rel=1e-5)

    @pytest.mark.parametrize("s", [-0.1, 2.1, math.nan])
    def test_out_of_range(self, s):
        with pytest.raises(ValueError):
            lens_area(s)

    @pytest.mark.parametrize("s", [0.0, 2.0])
    def test_endpoint_derivatives_rejected(self, s):
        with pytest.raises(ValueError):
            lens_boundary(s)

    def test_strictly_decreasing(self):
        s = np.linspace(0, 2, 401)
        L = np.array([lens_area(x) for x in s])
        assert np.all(np.diff(L) < 0)


class TestParameters:
    def test_alpha_pi_over_4(self):
        d = (math.pi / 2 - 1) / math.pi
        assert alpha_from_delta(d) == pytest.approx(math.pi / 4, abs=1e-13)

    def test_round_trip(self):
        for a in np.linspace(0.01, 1.56, 50):
            assert alpha_from_delta(delta_from_alpha(a)) == pytest.approx(a, abs=1e-12)

    def test_residual(self):
        for d in [1e-6, 0.1, 0.5, 0.9, 1 - 1e-6]:
            a = alpha_from_delta(d)
            assert abs(2 * (a - math.sin(a) * math.cos(a)) - d * math.pi) <= 1e-13

    def test_limits(self):
        assert alpha_from_delta(1 - 1e-12) > 1.5
        assert alpha_from_delta(1e-12) < 1e-3

    @pytest.mark.parametrize("d", [0.0, 1.0, -0.2, 1.5])
    def test_delta_range(self, d):
        with pytest.raises(ValueError):
            alpha_from_delta(d)

    def test_lens_params_consistent(self):
        p = LensParams.from_delta(0.37)
        assert p.s == pytest.approx(2 * math.cos(p.alpha), abs=1e-15)
        assert lens_area(p.s) / math.pi == pytest.approx(0.37, abs=1e-13)
        q = LensParams.from_s(p.s)
        assert q.alpha == pytest.approx(p.alpha, abs=1e-12)

    def test_s_from_delta(self):
        assert s_from_delta(delta_from_alpha(math.pi / 3)) == pytest.approx(1.0, abs=1e-12)


class TestRadialFunction:
    def test_disk_integrals(self):
        f = RadialFunction.constant(1.0)
        assert area_of(f) == pytest.approx(math.pi, abs=1e-14)
        assert mean_integral(f) == pytest.approx(2 * math.pi, abs=1e-14)

    @pytest.mark.parametrize("m", [1, 2, 5, 17])
    def test_cos2m_integrals(self, m):
        f = RadialFunction.cos2m(m)
        assert area_of(f) == pytest.approx(3 * math.pi / 8, abs=1e-12)
        assert mean_integral(f) == pytest.approx(math.pi, abs=1e-12)

    def test_area_small_mode(self):
        f = RadialFunction.from_function(lambda v: 1 + 0.1 * np.cos(3 * v))
        assert area_of(f) == pytest.approx(math.pi * 1.005, abs=1e-12)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            RadialFunction(np.ones(15))
        with pytest.raises(ValueError):
            RadialFunction(np.ones(8))
        with pytest.raises(ValueError):
            RadialFunction(np.array([1.0] * 15 + [np.nan]))

    def test_body_and_set_flags(self):
        x = np.ones(16)
        x[3] = 0.0
        f = RadialFunction(x)
        assert f.is_set() and not f.is_body()

    def test_periodic_evaluation(self):
        f = RadialFunction.from_function(lambda v: 1 + 0.3 * np.sin(2 * v) + 0.1 * np.cos(7 * v), 64)
        th = np.array([0.1, 1.7, 4.0])
        assert np.allclose(f(th), f(th + 2 * math.pi), atol=0)
        assert np.allclose(f(th), 1 + 0.3 * np.sin(2 * th) + 0.1 * np.cos(7 * th), atol=1e-13)

    def test_spectral_derivatives(self):
        f = RadialFunction.from_function(lambda v: np.sin(3 * v), 256)
        v = f.angles
        assert np.allclose(f.derivative(1), 3 * np.cos(3 * v), atol=1e-11)
        assert np.allclose(f.derivative(2), -9 * np.sin(3 * v), atol=1e-10)

    def test_finite_difference_derivatives(self):
        v = np.arange(4096) * 2 * math.pi / 4096
        f = RadialFunction(np.sin(3 * v), spectral=False)
        assert np.allclose(f.derivative(1), 3 * np.cos(3 * v), atol=1e-9)
        assert np.allclose(f.derivative(2), -9 * np.sin(3 * v), atol=1e-7)

    def test_shift(self):
        f = RadialFunction.from_function(lambda v: np.cos(v) + np.sin(4 * v), 128)
        assert np.allclose(f.shifted(0.3), np.cos(f.angles + 0.3) + np.sin(4 * (f.angles + 0.3)), atol=1e-13)


class TestFourier:
    def test_constant(self):
        s = analyze(RadialFunction.constant(2.5, 64), 10)
        assert s.a0 == pytest.approx(2.5)
        assert np.allclose(s.an, 0, atol=1e-15)

    def test_cos2m(self):
        s = analyze(RadialFunction.cos2m(3, 128), 20)
        assert s.a0 == pytest.approx(0.5, abs=1e-15)
        expect = np.zeros(20, dtype=complex)
        expect[5] = 0.25
        assert np.allclose(s.an, expect, atol=1e-15)

    def test_round_trip(self):
        f = RadialFunction.from_function(lambda v: 1 + 0.2 * np.sin(5 * v), 256)
        g = synthesize(analyze(f, 20), 256)
        assert np.max(np.abs(g.samples - f.samples)) <= 1e-10

    def test_aliasing_guard(self):
        with pytest.raises(ValueError):
            analyze(RadialFunction.constant(1.0, 64), 32)
        with pytest.raises(ValueError):
            synthesize(FourierSeries(1.0, np.ones(40)), 64)

    def test_series_real(self, rng):
        s = FourierSeries(1.0, rng.normal(size=8) + 1j * rng.normal(size=8))
        out = synthesize(s, 64)
        assert np.isrealobj(out.samples)
        assert np.allclose(out(out.angles), s(out.angles), atol=1e-12)

    def test_spec_round_trip(self, rng):
        s = FourierSeries(1.0, 0.1 * (rng.normal(size=4) + 1j * rng.normal(size=4)))
        f = radial_from_spec(series_to_spec(s), 64)
        assert np.allclose(f.samples, synthesize(s, 64).samples, atol=1e-15)


class TestArcIntegral:
    def test_constant(self):
        assert arc_integral_w(RadialFunction.constant(1.0), 0.3, 0.7) == pytest.approx(2.8, abs=1e-13)

    @pytest.mark.parametrize("m", [1, 2, 5])
    def test_cos2m_closed_form(self, m):
        # both arcs contribute alpha plus an oscillating part
        f = RadialFunction.cos2m(m)
        a = 0.61
        v = np.array([0.0, 0.4, 2.2, 5.0])
        expect = 2 * a + np.cos(2 * m * v) * np.sin(2 * m * a) / m
        assert np.allclose(arc_integral_w(f, v, a), expect, atol=1e-12)

    def test_average(self):
        f = RadialFunction.from_function(lambda v: 1 + 0.3 * np.cos(3 * v) + 0.2 * np.sin(v), 256)
        a = 0.9
        w = f.arc_integrals(a)
        assert 2 * math.pi * w.mean() == pytest.approx(4 * a * mean_integral(f), abs=1e-12)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            arc_integral_w(RadialFunction.constant(1.0), 0.0, math.pi / 2)


class TestCurvature:
    def test_disk(self):
        assert min_polar_curvature(RadialFunction.constant(1.0)) == pytest.approx(1.0)
        assert min_polar_curvature(RadialFunction.constant(3.0)) == pytest.approx(9.0)

    @pytest.mark.parametrize("m", range(1, 7))
    def test_convexity_window_edge(self, m):
        f = 1 + RadialFunction.cos2m(m) * (1 / (2 * m * m))
        assert min_polar_curvature(f) >= -1e-9

    def test_not_convex(self):
        assert min_polar_curvature(1 + RadialFunction.cos2m(1)) < 0

    def test_rejects_zero(self):
        x = np.ones(16)
        x[0] = 0
        with pytest.raises(ValueError):
            min_polar_curvature(RadialFunction(x))

    def test_discrete_agrees_on_smooth(self):
        f = 1 + 0.3 * RadialFunction.cos2m(1, 4096)
        assert min_discrete_curvature(f) == pytest.approx(min_polar_curvature(f), abs=1e-4)


class TestSpecs:
    def test_kinds(self):
        assert radial_from_spec({"kind": "constant", "c": 2}, 32).samples[0] == 2
        assert radial_from_spec({"kind": "cos2m", "m": 2}, 32).spectral
        assert radial_from_spec({"kind": "samples", "values": [1.0] * 16}).n == 16

    @pytest.mark.parametrize("spec,needle", [
        ({"kind": "cos2m"}, "'m'"),
        ({"kind": "cos2m", "m": 1.5}, "'m'"),
        ({"kind": "fourier", "a0": 1, "an": [[1]]}, "an[0]"),
        ({"kind": "blob"}, "unknown kind"),
        ({"c": 1}, "'kind'"),
    ])
    def test_diagnostics(self, spec, needle):
        with pytest.raises(SpecError, match=None) as exc:
            radial_from_spec(spec, 32)
        assert needle in str(exc.value)
