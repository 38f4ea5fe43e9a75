import json
import math

import numpy as np
import pytest

from convbodylab.counterexample import (
    CertificateReport,
    Inconclusive,
    NoM,
    certify,
    config_hash,
    find_m,
    inequality_suite,
)
from convbodylab.covariogram import disk_polygon, regular_polygon, unit_square
from convbodylab.radial_core import alpha_from_delta
from convbodylab.variation import f_m


class TestFindM:
    @pytest.mark.parametrize("delta,m", [(0.1, 2), (0.2, 2), (0.3, 3), (0.4, 3), (0.5, 4),
                                         (0.6, 5), (0.7, 7), (0.8, 10), (0.9, 20)])
    def test_table(self, delta, m):
        assert find_m(delta) == m

    def test_is_smallest(self):
        a = alpha_from_delta(0.9)
        assert all(f_m(a, k) <= 1e-12 for k in range(1, 20))
        assert f_m(a, 20) > 0

    def test_none_when_capped(self):
        assert find_m(0.9, m_max=5) is None

    @pytest.mark.parametrize("bad", [0.0, 1.0, 1.5])
    def test_bad_delta(self, bad):
        with pytest.raises(ValueError):
            find_m(bad)


class TestCertify:
    def test_passes(self):
        rep = certify(0.5)
        assert rep.passed and rep.m == 4
        assert rep.margin > 10 * rep.error_budget
        assert rep.vol_perturbed > rep.vol_disk
        assert rep.t <= 1 / (2 * rep.m ** 2)
        assert abs(rep.model_ratio - 1) <= 0.2
        assert rep.budget_terms["monotone"]

    def test_no_m(self):
        with pytest.raises(NoM):
            certify(0.9, m_max=5)

    def test_coarse_polygon_is_inconclusive(self):
        with pytest.raises(Inconclusive) as info:
            certify(0.5, n_poly=64, n_dirs=256)
        assert not info.value.report.passed

    def test_reproducible(self):
        a = certify(0.3, n_poly=2048, n_dirs=512)
        b = certify(0.3, n_poly=2048, n_dirs=512)
        assert json.dumps(a.to_json()) == json.dumps(b.to_json())
        assert a.config_hash == config_hash(a.config)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            certify(1.0)
        with pytest.raises(ValueError):
            certify(0.5, n_poly=33)


class TestSuite:
    def test_square(self):
        checks = inequality_suite([unit_square()], ["square"])
        assert all(c.holds for c in checks), [c for c in checks if not c.holds]
        names = {c.name for c in checks}
        assert {"kiener[1]", "R_p[1]", "R_p[4]", "difference_body", "sandwich_upper[0.99]"} <= names

    def test_disk_against_itself(self):
        checks = inequality_suite([disk_polygon(8192)], ["disk"], n_dirs=1024)
        by = {c.name: c for c in checks}
        for name in ["kiener[1]", "kiener[delta]", "R_p[1]", "R_p[4]"]:
            c = by[name]
            assert abs(c.lhs - c.rhs) <= 1e-5 * c.rhs

    def test_p4_reversed(self):
        checks = {c.name: c for c in inequality_suite([regular_polygon(3)], ["tri"])}
        assert checks["R_p[4]"].relation == ">="
        assert checks["R_p[4]"].lhs > checks["R_p[4]"].rhs
        assert checks["R_p[1]"].lhs < checks["R_p[1]"].rhs
