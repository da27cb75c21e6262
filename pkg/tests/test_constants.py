import numpy as np
import pytest

from freeconvex import constants as cn
from freeconvex import linalg as la
from freeconvex import oracles as orc
from freeconvex import reports
from freeconvex import sets as st
from freeconvex.config import DEFAULT


@pytest.fixture(autouse=True)
def _fresh_registry():
    orc.reset_soundness_registry()
    yield


def brute_interval_hausdorff(a1, b1, a2, b2):
    """Hausdorff distance of [a1,b1] and [a2,b2] on the line."""
    return max(abs(a1 - a2), abs(b1 - b2))


class TestConversions:
    def test_identity_scaling_zero_distance(self):
        assert cn.dist_from_scaling(1.0, 1.0, 5.0) == 0.0

    def test_small_eps_limit(self):
        assert abs(cn.scaling_from_dist(1e-12, 1.0, 3) - 1.0) < 1e-11

    def test_segment_bound_direction(self):
        # C = [-1, 1], D = [-1/a, 1/a] with a = 1.25: the bound dominates
        a, m = 1.25, 1.0
        bound = cn.dist_from_scaling(1 / a, 1 / a, m)
        true = brute_interval_hausdorff(-1, 1, -1 / a, 1 / a)
        assert abs(true - 0.2) < 1e-12
        assert bound >= true - 1e-12 and abs(bound - 0.25) < 1e-12

    def test_randomized_interval_cases(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            delta = rng.uniform(0.2, 1.0)
            b1 = rng.uniform(delta, 2.0)
            b2 = rng.uniform(delta, 2.0)
            # symmetric intervals [-b, b] both contain delta-ball
            c, d = (-b1, b1), (-b2, b2)
            true = brute_interval_hausdorff(*c, *d)
            eps = true + 1e-9
            a = cn.scaling_from_dist(eps, delta, 1)
            # the sandwich (1/a) D <= C <= a D must hold
            assert b2 / a <= b1 + 1e-9 and b1 <= a * b2 + 1e-9
            m = max(b1, b2)
            bound = cn.dist_from_scaling(1 / a, a, m)
            assert bound >= true - 1e-9

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            cn.dist_from_scaling(0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            cn.scaling_from_dist(-1.0, 1.0, 2)


class TestBeta:
    def test_contraction_set_is_minimal(self):
        b = cn.beta(st.Primitive("contraction"), 1)
        assert b.lower == 1.0 and b.upper == 1.0

    def test_commuting_normal_all_k(self):
        w = np.exp(2j * np.pi / 3)
        t = la.MatrixTuple((np.diag([1.0, w, w ** 2]),))
        s = st.matrix_range(t)
        for k in (1, 2, 3):
            b = cn.beta(s, k)
            assert b.lower == 1.0 and b.upper <= 1.0 + 1e-6

    def test_ando_value_two(self):
        b = cn.beta(st.catalog("ando_set"), 1)
        assert 1.95 <= b.lower <= b.upper <= 2.05
        ok, why = reports.verify_certificate(
            b.lower_witness,
            reports.VerificationContext(st.catalog("ando_set")))
        assert ok, why

    def test_zero_not_interior_rejected(self):
        t = la.MatrixTuple((np.diag([1.0, 2.0]),), selfadjoint=True)
        with pytest.raises(cn.ZeroNotInteriorError):
            cn.beta(st.matrix_range(t), 1)


class TestGamma:
    def test_ando_fixed_point(self):
        g = cn.gamma(st.catalog("ando_set"), 1)
        assert g.upper <= 1.0 + 1e-6 and g.lower >= 1.0 - 1e-9

    def test_scale_invariance(self):
        s = st.catalog("ando_set")
        g1 = cn.gamma(s, 1)
        g2 = cn.gamma(st.scale(3.0, s), 1)
        assert abs(g1.lower - g2.lower) < 1e-6
        assert abs(min(g1.upper, 10) - min(g2.upper, 10)) < 1e-6

    def test_cross_validation_consistent_on_ando(self):
        from dataclasses import replace
        cfg = replace(DEFAULT, budget=replace(DEFAULT.budget, cross_validate=True))
        g = cn.gamma(st.catalog("ando_set"), 1, cfg)
        assert g.upper <= 1.0 + 1e-6


class TestAlpha:
    def test_interval_set_trivial(self):
        sz = la.MatrixTuple((np.diag([1.0, -1.0]),), selfadjoint=True)
        a = cn.alpha(st.matrix_range(sz), 1)
        assert a.lower == 1.0 and a.upper <= 1.0 + 1e-6

    def test_ball_pair_bounds(self):
        # dimension-2 ball: the pauli witness forces the full constant 2
        a = cn.alpha(st.Primitive("ball_min", 2), 1)
        assert a.lower >= np.sqrt(2) - 0.02
        assert a.upper <= 2.0 + 1e-6
        assert a.lower <= a.upper + 1e-6

    def test_sandwich_on_random_tuples(self):
        rng = np.random.default_rng(19)
        for i in range(2):
            t0 = la.MatrixTuple((la.random_complex(2, rng, norm=1.0),))
            t, _ = st.recoordinatize(t0)
            s = st.matrix_range(t)
            bb = cn.beta(s, 1)
            gg = cn.gamma(s, 1)
            aa = cn.alpha(s, 1)
            assert aa.lower >= max(bb.lower, gg.lower) - 1e-6
            assert aa.upper <= bb.upper * gg.upper + 1e-6
            assert aa.lower <= aa.upper + 1e-6


class TestWitnessTuples:
    def test_level_covered_recovers_base(self):
        # generators at level 2 with k = 2: the witness sum recovers the set
        s = st.catalog("ando_set")
        a, r, cert = cn.witness_tuple_upper(s, 2, 8)
        assert r <= 1.0 + 1e-6
        assert cert["summands"] >= 2

    def test_k1_within_small_factor_and_monotone(self):
        s = st.catalog("ando_set")
        _, r8, _ = cn.witness_tuple_upper(s, 1, 8)
        _, r16, _ = cn.witness_tuple_upper(s, 1, 16)
        assert 2.0 - 1e-9 <= r16 <= r8 + 1e-9
        assert r16 <= 2.1


class TestProfiles:
    def test_contraction_profile_flat(self):
        p = cn.limit_profile(st.Primitive("contraction"), 3, "beta")
        assert all(abs(lo - 1.0) < 1e-9 for lo in p.reg_lower)
        assert all(up <= 1.0 + 1e-6 for up in p.reg_upper)
        assert p.validate()

    def test_ando_beta_profile_drops(self):
        p = cn.limit_profile(st.catalog("ando_set"), 2, "beta")
        assert p.raw_lower[0] >= 1.95
        assert p.raw_upper[1] <= 1.05  # level-2 sampling recovers the set
        assert p.validate()
        rows = p.csv_rows()
        assert rows[0][0] == "k" and len(rows) == 3

    def test_ando_gamma_profile_flat(self):
        p = cn.limit_profile(st.catalog("ando_set"), 3, "gamma")
        assert all(up <= 1.0 + 1e-6 for up in p.reg_upper)

    def test_degenerate_single_entry(self):
        p = cn.limit_profile(st.Primitive("contraction"), 1, "beta")
        assert len(p.bounds) == 1 and p.validate()


class TestEnvelopeBound:
    def test_ball_is_exactly_dimension(self):
        assert abs(cn.envelope_bound(st.Primitive("ball_min", 2)) - 2.0) < 1e-12
        assert abs(cn.envelope_bound(st.Primitive("ball_max", 3)) - 3.0) < 1e-12

    def test_dominates_all_constants(self):
        s = st.catalog("ando_set")
        env = cn.envelope_bound(s)
        for fn in (cn.alpha, cn.beta, cn.gamma):
            sb = fn(s, 1)
            assert sb.lower <= env + 1e-6
