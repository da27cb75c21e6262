import numpy as np
import pytest

from freeconvex import linalg as la
from freeconvex import oracles as orc
from freeconvex import reports
from freeconvex import sets as st
from freeconvex.config import DEFAULT

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def brute_numerical_radius(x):
    """Independent sweep oracle for w(X)."""
    return la.numerical_radius(x, samples=1440)


@pytest.fixture(autouse=True)
def _fresh_registry():
    orc.reset_soundness_registry()
    yield


def verified(s, x, v):
    ok, why = reports.verify_membership_verdict(s, x, v)
    assert ok, f"certificate failed: {why}"
    return v


class TestSupport:
    def test_pauli_level1_direction(self):
        # numerical range of sigma_x is [-1, 1]
        s = st.catalog("pauli_set")
        h = orc.SupportFunctional(1, (np.array([[1.0]]), np.array([[0.0]])), True)
        v = orc.support(s, h)
        assert abs(v.lo - 1.0) < 1e-9 and v.exact

    def test_contraction_trace_norm(self):
        rng = np.random.default_rng(2)
        cs = st.Primitive("contraction")
        for m in (1, 2, 3):
            hre = la.random_hermitian(m, rng)
            him = la.random_hermitian(m, rng)
            h = orc.SupportFunctional(m, (hre, him), False)
            v = orc.support(cs, h)
            assert abs(v.lo - la.trace_norm(hre + 1j * him)) < 1e-10
            # achiever attains the value and is a contraction
            assert la.op_norm(v.achiever.entries[0]) <= 1 + 1e-10
            assert abs(h.pair(v.achiever) - v.lo) < 1e-9

    def test_scaled_support(self):
        s = st.catalog("pauli_set")
        h = orc.random_functional(2, 2, True, 7)
        v1 = orc.support(s, h)
        v2 = orc.support(st.scale(2.0, s), h)
        assert abs(v2.lo - 2 * v1.lo) < 1e-7

    def test_range_support_level2_vs_dual(self):
        rng = np.random.default_rng(11)
        t = la.MatrixTuple((la.random_complex(3, rng),))
        s = st.matrix_range(t)
        h = orc.random_functional(2, 2, False, rng)
        v = orc.support(s, h)
        # dual certificate: I (x) Z dominates the objective, tr Z = value
        z = v.certificate["dual_z"]
        mobj = sum(la.kron(g.T, hh) for g, hh in zip(s.sa_generators(), h.entries))
        assert la.eig_min(la.kron(np.eye(3), z) - mobj) > -1e-7
        assert abs(np.real(np.trace(z)) - v.lo) < 1e-6

    def test_cartesian_sum_and_hull_max_level1(self):
        a = st.catalog("pauli_set")
        b = st.catalog("pauli_set")
        u = np.array([0.6, 0.8])
        h4 = orc.SupportFunctional(
            1, tuple(np.array([[c]]) for c in (0.6, 0.8, 0.0, 1.0)), True)
        vc = orc.support(st.CartesianProduct(a, b), h4)
        vh = orc.support(st.HullProduct(a, b), h4)
        sa = orc.support(a, orc.SupportFunctional(
            1, (np.array([[0.6]]), np.array([[0.8]])), True))
        sb = orc.support(b, orc.SupportFunctional(
            1, (np.array([[0.0]]), np.array([[1.0]])), True))
        assert abs(vc.lo - (sa.lo + sb.lo)) < 1e-9
        assert abs(vh.lo - max(sa.lo, sb.lo)) < 1e-9

    def test_functional_dual_norm(self):
        h = orc.SupportFunctional(2, (SX / 2, SZ / 2), False)
        g = SX / 2 + 1j * SZ / 2
        assert abs(h.dual_norm() - la.trace_norm(g)) < 1e-12


class TestMembership:
    def test_ando_identity_point(self):
        s = st.catalog("ando_set")
        x = la.MatrixTuple((2 * E12,))
        v = verified(s, x, orc.membership(s, x))
        assert v.verdict == "IN"

    def test_ando_out_with_radius_oracle(self):
        s = st.catalog("ando_set")
        x = la.MatrixTuple((3 * E12,))
        assert brute_numerical_radius(3 * E12) > 1  # independent oracle
        v = verified(s, x, orc.membership(s, x))
        assert v.verdict == "OUT"
        # separating functional beats the certified support bound
        hfun = orc.SupportFunctional(2, tuple(v.certificate["H"]), s.selfadjoint)
        assert hfun.pair(x) > v.certificate["support_bound"] + v.margin - 1e-9

    def test_ando_agrees_with_radius_oracle_random(self):
        s = st.catalog("ando_set")
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = la.random_complex(3, rng)
            w = brute_numerical_radius(x)
            if abs(w - 1.0) < 1e-4:
                continue
            v = orc.membership(s, la.MatrixTuple((x,)))
            assert (v.verdict == "IN") == (w <= 1.0), (w, v.verdict)

    def test_spectrahedron_scalar(self):
        fs = st.polar(st.catalog("ando_set"))
        x_in = la.MatrixTuple((np.array([[1.0]], dtype=complex),))
        x_out = la.MatrixTuple((np.array([[1.2]], dtype=complex),))
        v1 = verified(fs, x_in, orc.membership(fs, x_in))
        v2 = verified(fs, x_out, orc.membership(fs, x_out))
        assert v1.verdict == "IN" and abs(v1.certificate["top_eig"] - 1.0) < 1e-12
        assert v2.verdict == "OUT" and abs(v2.margin - 0.2) < 1e-9

    def test_scaled_membership_transport(self):
        s = st.scale(2.0, st.catalog("ando_set"))
        x = la.MatrixTuple((3 * E12,))  # w = 1.5 <= 2
        v = verified(s, x, orc.membership(s, x))
        assert v.verdict == "IN"

    def test_cartesian_conjunction(self):
        cs = st.catalog("free_unitaries", 2)
        good = la.MatrixTuple((SX, SZ))
        bad = la.MatrixTuple((SX, 1.5 * SZ))
        v1 = verified(cs, good, orc.membership(cs, good))
        v2 = verified(cs, bad, orc.membership(cs, bad))
        assert v1.verdict == "IN" and v2.verdict == "OUT"

    def test_ballmax_membership(self):
        bm = st.Primitive("ball_max", 2)
        x = la.MatrixTuple((SX, SZ), selfadjoint=True)
        xin, xout = x.scaled(0.99), x.scaled(1.1)
        v = verified(bm, xin, orc.membership(bm, xin))
        assert v.verdict == "IN"
        v2 = verified(bm, xout, orc.membership(bm, xout))
        assert v2.verdict == "OUT"

    def test_verdict_coherence_random_functionals(self):
        # IN point never beats the support value
        s = st.catalog("ando_set")
        x = la.MatrixTuple((1.2 * E12,))
        v = orc.membership(s, x)
        assert v.verdict == "IN"
        rng = np.random.default_rng(13)
        for _ in range(20):
            h = orc.random_functional(2, 2, False, rng)
            sv = orc.support(s, h)
            assert h.pair(x) <= sv.hi + 1e-6

    def test_ucp_closure_of_in_points(self):
        s = st.catalog("ando_set")
        x = la.MatrixTuple((2 * E12,))
        rng = np.random.default_rng(17)
        for _ in range(5):
            j = la.random_unital_choi(2, 3, rng)
            y = la.MatrixTuple((j.apply(x.entries[0]),))
            v = orc.membership(s, y)
            assert v.verdict != "OUT"

    def test_soundness_registry_trips(self):
        s = st.catalog("ando_set")
        x = la.MatrixTuple((2 * E12,))
        orc.record_verdict(s, x, "IN")
        with pytest.raises(orc.SoundnessViolation):
            orc.record_verdict(s, x, "OUT")


class TestContains:
    def test_reflexive(self):
        s = st.catalog("pauli_set")
        assert orc.contains(s, s).verdict == "IN"

    def test_pauli_pencil_decided_exactly(self):
        # spectral oracle: lambda_max(Re(sx (x) sx + sz (x) sz)) / 2 == 1
        pauli = st.catalog("pauli_set")
        half = la.MatrixTuple(tuple(0.5 * e for e in st.catalog("pauli_pair").entries),
                              selfadjoint=True)
        fs = st.FreeSpectrahedron(half)
        top = la.eig_max((la.kron(SX, SX) + la.kron(SZ, SZ)) / 2)
        assert abs(top - 1.0) < 1e-12
        v = orc.contains(pauli, fs)
        assert v.verdict == "IN"
        assert abs(v.certificate["top_eig"] - top) < 1e-12

    def test_scale2_escapes(self):
        z1 = st.matrix_range(la.MatrixTuple((2 * E12,)))
        z2 = st.matrix_range(la.MatrixTuple((E12,)))
        v = orc.contains(z1, z2)
        assert v.verdict == "OUT"
        ok, why = reports.verify_certificate(
            v.certificate, reports.VerificationContext(z2, z1.tuple, "OUT"))
        assert ok, why

    def test_range_in_range_ucp(self):
        rng = np.random.default_rng(23)
        t = la.MatrixTuple((la.random_complex(3, rng),))
        j = la.random_unital_choi(3, 2, rng)
        r = la.MatrixTuple((j.apply(t.entries[0]),))
        v = orc.contains(st.matrix_range(r), st.matrix_range(t))
        assert v.verdict == "IN"

    def test_fs_in_fs_by_polarity(self):
        pair = st.catalog("pauli_pair")
        fs1 = st.FreeSpectrahedron(pair)
        fs2 = st.FreeSpectrahedron(pair.scaled(0.5))
        v = orc.contains(fs1, fs2)
        assert v.verdict == "IN"
        v2 = orc.contains(fs2, fs1)
        assert v2.verdict == "OUT"


class TestScaleAndHausdorff:
    def test_homogeneity(self):
        t = st.catalog("matrix_units_pair")
        s1 = st.matrix_range(t.scaled(2.0))
        s2 = st.matrix_range(t)
        sb = orc.inclusion_scale(s1, s2)
        assert abs(sb.upper - 2.0) < 1e-6 and abs(sb.lower - 2.0) < 1e-6

    def test_self_scale_one(self):
        s = st.catalog("pauli_set")
        sb = orc.inclusion_scale(s, s)
        assert abs(sb.lower - 1.0) < 1e-6 and abs(sb.upper - 1.0) < 1e-6

    def test_pencil_path_equals_eig(self):
        pauli = st.catalog("pauli_set")
        fs = st.FreeSpectrahedron(st.catalog("pauli_pair"))
        sb = orc.inclusion_scale(pauli, fs)
        top = la.eig_max(la.kron(SX, SX) + la.kron(SZ, SZ))
        assert abs(sb.upper - top) < 1e-9 and abs(sb.lower - top) < 1e-9

    def test_sweep_lower_monotone_in_level_cap(self):
        from dataclasses import replace
        s1 = st.matrix_range(st.catalog("matrix_units_pair").scaled(1.5))
        s2 = st.matrix_range(st.catalog("matrix_units_pair"))
        lows = []
        for cap in (1, 2):
            cfg = replace(DEFAULT, budget=replace(DEFAULT.budget, level_cap=cap,
                                                  sweep_starts=8, sweep_iters=8))
            lows.append(orc.inclusion_scale(s1, s2, cfg).lower)
        assert lows[1] >= lows[0] - 1e-9

    def test_hausdorff_self_zero(self):
        s = st.catalog("pauli_set")
        assert orc.hausdorff(s, s) == (0.0, 0.0)

    def test_hausdorff_scaled_lower(self):
        from dataclasses import replace
        cfg = replace(DEFAULT, budget=replace(DEFAULT.budget, level_cap=2,
                                              sweep_starts=12, sweep_iters=10))
        s = st.catalog("pauli_set")
        lo, up = orc.hausdorff(s, st.scale(1.1, s), cfg)
        # direct computation: sup over swept H of 0.1 * support(S, H)
        assert lo >= 0.1 * 1.0 - 1e-6
        assert up >= lo - 1e-9

    def test_hausdorff_disk_vs_point(self):
        from dataclasses import replace
        cfg = replace(DEFAULT, budget=replace(DEFAULT.budget, level_cap=1,
                                              sweep_starts=8, sweep_iters=8))
        z = st.catalog("ando_set")
        zero = st.matrix_range(la.MatrixTuple((np.zeros((2, 2), dtype=complex),)))
        lo, _ = orc.hausdorff(z, zero, cfg)
        assert lo >= 1.0 - 1e-6

    def test_hausdorff_scaling_consistency(self):
        # certified sandwich converts to an upper bound that dominates
        s = st.catalog("pauli_set")
        d = st.scale(0.9, s)
        lo, up = orc.hausdorff(s, d)
        assert np.isfinite(up)
        assert lo <= up + 1e-6


class TestPlot:
    def test_pauli_circle(self):
        poly = orc.plot_level1(st.catalog("pauli_set"), resolution=720)
        r = np.linalg.norm(poly, axis=1)
        assert np.all(np.abs(r - 1.0) < 1e-3)

    def test_ando_circle(self):
        poly = orc.plot_level1(st.catalog("ando_set"), resolution=360)
        r = np.linalg.norm(poly, axis=1)
        assert np.all(np.abs(r - 1.0) < 1e-3)

    def test_scaled_doubles(self):
        p1 = orc.plot_level1(st.catalog("pauli_set"), resolution=90)
        p2 = orc.plot_level1(st.scale(2.0, st.catalog("pauli_set")), resolution=90)
        assert np.allclose(p2, 2 * p1, atol=1e-9)

    def test_polygon_convex(self):
        poly = orc.plot_level1(st.catalog("pauli_set"), resolution=120)
        n = len(poly)
        cross = []
        for i in range(n):
            a, b, c = poly[i], poly[(i + 1) % n], poly[(i + 2) % n]
            u, v = b - a, c - b
            cross.append(u[0] * v[1] - u[1] * v[0])
        cross = np.array(cross)
        assert np.all(cross >= -1e-9) or np.all(cross <= 1e-9)
