import math

import numpy as np
import pytest

from convbodylab.convolution_body import (
    convbody,
    convbody_radius,
    convbody_volume,
    convbody_volumes,
    delta_nodes,
    difference_body_radius,
    direction_rule,
    disk_kiener_average,
    disk_radial_mean_volume,
    disk_schmuck_limit,
    kiener_average,
    radial_mean_body,
    radial_mean_volumes,
    radii_matrix,
    schmuck_ratio,
)
from convbodylab.covariogram import (
    ConvexPolygon,
    covariogram,
    disk_polygon,
    polygon_from_radial,
    rectangle,
    regular_polygon,
    unit_square,
)
from convbodylab.radial_core import (
    RadialFunction,
    alpha_from_delta,
    delta_from_alpha,
    grid,
    min_discrete_curvature,
    min_polar_curvature,
)


def square_volume(delta):
    # area of {(1-|x|)(1-|y|) >= delta}
    return 4 * ((1 - delta) + delta * math.log(delta))


class TestRadius:
    @pytest.mark.parametrize("d", [0.1, 0.5, 0.93])
    def test_square_axis(self, d):
        assert convbody_radius(unit_square(), d, 0.0) == pytest.approx(1 - d, abs=1e-12)

    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_disk_scaling(self, r):
        P = disk_polygon(8192, r)
        for d in [0.2, 0.7]:
            expect = r * 2 * math.cos(alpha_from_delta(d))
            for v in [0.0, 1.1]:
                assert convbody_radius(P, d, v) == pytest.approx(expect, rel=1e-6)

    def test_collapses(self):
        P = regular_polygon(5)
        assert convbody_radius(P, 1 - 1e-10, 0.4) < 1e-4

    def test_solves_level(self):
        P = ConvexPolygon(np.array([[0, 0], [2, 0.3], [2.5, 1.5], [0.7, 2.2]]))
        for v in [0.2, 1.9, 4.0]:
            r = convbody_radius(P, 0.4, v)
            assert covariogram(P, [r * math.cos(v), r * math.sin(v)], "clip") == pytest.approx(0.4 * P.area(), abs=1e-12)

    @pytest.mark.parametrize("d", [0.0, 1.0, -0.5, 2.0])
    def test_delta_range(self, d):
        with pytest.raises(ValueError):
            convbody_radius(unit_square(), d, 0.0)


class TestVolume:
    def test_disk_sqrt2(self):
        d = delta_from_alpha(math.pi / 4)
        assert convbody_volume(disk_polygon(8192), d) == pytest.approx(2 * math.pi, rel=1e-6)

    def test_square_closed_form(self):
        for d in [0.1, 0.5, 0.9]:
            assert convbody_volume(unit_square(), d) == pytest.approx(square_volume(d), abs=1e-12)

    def test_square_rasterized(self):
        n = 2000
        x = (np.arange(n) + 0.5) / n * 2 - 1
        X, Y = np.meshgrid(x, x)
        g = (1 - np.abs(X)) * (1 - np.abs(Y))
        raster = float((g >= 0.5).mean()) * 4
        assert convbody_volume(unit_square(), 0.5) == pytest.approx(raster, abs=1e-3)

    def test_trapezoid_and_piecewise_rules_agree(self):
        P = regular_polygon(5)
        th = grid(4096)
        r = radii_matrix(P, [0.3], th)[0]
        assert math.pi * np.mean(r * r) == pytest.approx(convbody_volume(P, 0.3), rel=1e-6)

    def test_direction_rule_weights(self):
        for P in [unit_square(), regular_polygon(7), disk_polygon(256)]:
            _, w = direction_rule(P)
            assert w.sum() == pytest.approx(2 * math.pi, abs=1e-12)

    def test_monotone_in_delta(self):
        P = regular_polygon(6)
        r = radii_matrix(P, [0.2, 0.4, 0.8], grid(64))
        assert np.all(np.diff(r, axis=0) <= 0)


class TestShape:
    @pytest.mark.parametrize("P", [unit_square(True), regular_polygon(3), regular_polygon(5), rectangle(1, 2)],
                             ids=["square", "triangle", "pentagon", "rectangle"])
    def test_convex_output_polygons(self, P):
        for d in [0.1, 0.5, 0.9]:
            assert min_discrete_curvature(convbody(P, d)) >= -1e-6

    def test_convex_output_smooth(self):
        P = polygon_from_radial(1 + RadialFunction.cos2m(3, 8192) * 0.05)
        for d in [0.2, 0.5, 0.9]:
            assert min_polar_curvature(convbody(P, d)) >= -1e-6

    def test_rotation_equivariance(self):
        P = regular_polygon(5, 1.0, 0.1)
        n = 64
        phi = 2 * math.pi * 5 / n
        a = convbody(P, 0.4, n).samples
        b = convbody(P.rotate(phi), 0.4, n).samples
        assert np.allclose(np.roll(a, 5), b, atol=1e-9)

    def test_small_delta_approaches_difference_body(self):
        P = regular_polygon(5)
        th = grid(64)
        dk = difference_body_radius(P, th)
        gaps = [np.max(np.abs(radii_matrix(P, [d], th)[0] - dk)) for d in [1e-4, 1e-6]]
        assert gaps[0] <= 0.02
        # generic boundary points of DK are vertex-vertex contacts, so the gap scales like sqrt(delta)
        assert gaps[1] == pytest.approx(gaps[0] / 10, rel=0.05)


class TestDeltaQuadrature:
    def test_weights(self):
        d, w = delta_nodes(64)
        assert w.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all((d > 0) & (d < 1))

    def test_sqrt_endpoint(self):
        d, w = delta_nodes(64)
        assert w @ np.sqrt(1 - d) == pytest.approx(2 / 3, abs=1e-13)


class TestRadialMean:
    def test_disk_p1(self):
        d, w = delta_nodes(64)
        s = np.array([2 * math.cos(alpha_from_delta(x)) for x in d])
        f = radial_mean_body(disk_polygon(8192), 1.0, 256)
        assert np.allclose(f.samples, w @ s, rtol=1e-6)

    def test_square_vs_disk(self):
        v = radial_mean_volumes(unit_square(), [1.0, 4.0])
        assert v[1.0] <= disk_radial_mean_volume(1.0, 1.0)
        assert v[4.0] >= disk_radial_mean_volume(1.0, 4.0)

    def test_p2_is_area_identity(self):
        # vol R_2 K = int_0^1 vol C_delta K d delta = vol K
        assert radial_mean_volumes(regular_polygon(3), [2.0])[2.0] == pytest.approx(1.0, rel=1e-9)

    @pytest.mark.parametrize("p", [-1.0, -2.0, 0.0])
    def test_bad_p(self, p):
        with pytest.raises(ValueError):
            radial_mean_body(unit_square(), p, 64)


class TestKiener:
    def test_identity(self):
        assert kiener_average(unit_square(), lambda d: np.ones_like(d)) == pytest.approx(1.0, abs=1e-9)
        assert disk_kiener_average(2.0, lambda d: np.ones_like(d)) == pytest.approx(2.0, abs=1e-9)

    def test_square_below_disk(self):
        for om in [lambda d: d, lambda d: d * d]:
            assert kiener_average(unit_square(), om) <= disk_kiener_average(1.0, om)


class TestSchmuck:
    def test_square(self):
        r = schmuck_ratio(unit_square(), 0.999)
        assert r.limit == pytest.approx(2.0, abs=1e-12)
        assert r.relative_gap <= 0.05

    def test_disk(self):
        r = schmuck_ratio(disk_polygon(8192), 0.999)
        assert disk_schmuck_limit(math.pi) == pytest.approx(math.pi ** 3 / 4)
        assert abs(r.ratio / (math.pi ** 3 / 4) - 1) <= 0.05

    def test_sandwich(self):
        for P in [unit_square(), regular_polygon(5), rectangle(1, 2)]:
            for d in [0.5, 0.9, 0.99]:
                r = schmuck_ratio(P, d)
                assert r.lower <= r.volume <= r.upper

    def test_scaling(self):
        a = schmuck_ratio(regular_polygon(5, 1.0), 0.9)
        b = schmuck_ratio(regular_polygon(5, 4.0), 0.9)
        assert b.ratio == pytest.approx(4 * a.ratio, rel=1e-10)
        assert b.limit == pytest.approx(4 * a.limit, rel=1e-10)
