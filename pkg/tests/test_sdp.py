import numpy as np
import pytest

from freeconvex import linalg as la
from freeconvex import sdp
from freeconvex.config import DEFAULT


def lambda_max_program(a):
    """max tr(aX), tr X = 1, X psd."""
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(a.shape[0])
    pb.eq(pb.row().block(bx, np.eye(a.shape[0])), 1.0)
    pb.maximize(pb.row().block(bx, a))
    return pb.program()


def test_diag_objective():
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(2, field="R")
    pb.eq(pb.row().block(bx, np.eye(2)), 1.0)
    pb.minimize(pb.row().block(bx, np.diag([1.0, 2.0])))
    res = sdp.solve(pb.program())
    assert res.status == "optimal"
    assert abs(res.value - 1.0) < 1e-8
    assert np.allclose(res.primal[0], np.diag([1.0, 0.0]), atol=1e-6)


def test_lambda_max_matches_eigensolver():
    rng = np.random.default_rng(0)
    for _ in range(4):
        a = la.random_hermitian(3, rng)
        res = sdp.solve(lambda_max_program(a))
        assert res.status == "optimal"
        assert abs(res.value - la.eig_max(a)) < 1e-7
        # upper certificate: objective of solved min form plus y-combination is PSD
        assert res.gap <= 1e-7 * (1 + abs(res.value))


def test_infeasible_farkas():
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(3)
    pb.eq(pb.row().block(bx, np.eye(3)), -1.0)
    res = sdp.solve(pb.program())
    assert res.status == "infeasible"
    ok, info = sdp.verify_farkas(pb.program(), res.certificate["ray"])
    assert ok, info


def test_unbounded():
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(2, field="R")
    pb.maximize(pb.row().block(bx, np.eye(2)))
    res = sdp.solve(pb.program())
    assert res.status == "unbounded"


def test_redundant_rows_ok():
    a = np.diag([1.0, -1.0])
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(2)
    pb.eq(pb.row().block(bx, np.eye(2)), 1.0)
    pb.eq(pb.row().block(bx, 2 * np.eye(2)), 2.0)  # duplicate
    pb.maximize(pb.row().block(bx, a))
    res = sdp.solve(pb.program())
    assert res.status == "optimal"
    assert abs(res.value - 1.0) < 1e-7


def test_inconsistent_rows_infeasible():
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(2)
    pb.eq(pb.row().block(bx, np.eye(2)), 1.0)
    pb.eq(pb.row().block(bx, np.eye(2)), 2.0)
    res = sdp.solve(pb.program())
    assert res.status == "infeasible"
    ok, _ = sdp.verify_farkas(pb.program(), res.certificate["ray"])
    assert ok


def test_free_variable_epigraph():
    # min s s.t. s >= lambda_max(a): epigraph via slack block sI - a = S >= 0
    a = np.diag([0.3, -2.0, 1.2])
    pb = sdp.ProgramBuilder()
    s = pb.free_var()
    slack = pb.psd_block(3, field="R")
    for q, f in enumerate(la.herm_basis_iter(3, "R")):
        r = pb.row().block(slack, f).free(s, -float(np.real(np.trace(f))))
        pb.eq(r, -float(np.real(np.trace(f @ a))))
    obj = pb.row(); obj.free(s, 1.0)
    pb.minimize(obj)
    res = sdp.solve(pb.program())
    assert res.status == "optimal"
    assert abs(res.value - 1.2) < 1e-7


def test_feasibility_margin_strict():
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(3)
    pb.eq(pb.row().block(bx, np.eye(3)), 1.0)
    m, payload = sdp.feasibility_margin(pb.program())
    assert abs(m - 1.0 / 3.0) < 1e-6
    assert payload["kind"] == "witness"
    w = payload["blocks"][0]
    assert la.eig_min(w) > 1e-7 and abs(np.trace(w) - 1) < 1e-7


def test_feasibility_margin_boundary():
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(2)
    pb.eq(pb.row().block(bx, np.eye(2)), 0.0)
    m, payload = sdp.feasibility_margin(pb.program())
    assert abs(m) <= 1e-6
    assert payload["kind"] == "boundary"


def test_feasibility_margin_infeasible():
    pb = sdp.ProgramBuilder()
    bx = pb.psd_block(2)
    pb.eq(pb.row().block(bx, np.eye(2)), -1.0)
    m, payload = sdp.feasibility_margin(pb.program())
    assert m < -1e-6
    assert payload["kind"] == "farkas"
    ok, _ = sdp.verify_farkas(pb.program(), payload["ray"])
    assert ok


def test_weak_duality_and_determinism():
    rng = np.random.default_rng(42)
    a = la.random_hermitian(4, rng)
    p = lambda_max_program(a)
    r1 = sdp.solve(p)
    r2 = sdp.solve(p)
    assert r1.status == r2.status == "optimal"
    assert abs(r1.value - r2.value) <= 1e-9
    assert p.fingerprint() == p.fingerprint()


def test_support_dual_certificate():
    # max tr(MJ) s.t. Tr_in J = I_m: value = tr Z with I (x) Z >= M
    rng = np.random.default_rng(8)
    n, m = 2, 2
    t = la.random_hermitian(n, rng)
    h = la.random_hermitian(m, rng)
    M = la.kron(t.T, h)
    pb = sdp.ProgramBuilder()
    bj = pb.psd_block(n * m)
    for q, f in enumerate(la.herm_basis_iter(m, "C")):
        pb.eq(pb.row().block(bj, la.kron(np.eye(n), f)), float(np.real(np.trace(f))),
              tag=("unital", q))
    pb.maximize(pb.row().block(bj, M))
    res = sdp.solve(pb.program())
    assert res.status == "optimal"
    z = sum(y * f for y, f in zip(res.dual["y"], la.herm_basis_iter(m, "C")))
    assert abs(np.trace(z).real - res.value) < 1e-6
    assert la.eig_min(la.kron(np.eye(n), z) - M) > -1e-7


def test_dump_program():
    p = lambda_max_program(np.diag([1.0, 2.0]).astype(complex))
    txt = sdp.dump_program(p)
    assert txt.startswith("FREECONVEX-SDP 1")
    assert "BLOCKS 2:C" in txt and "SENSE max" in txt


def test_side_cap():
    pb = sdp.ProgramBuilder()
    pb.psd_block(300)
    pb.eq(pb.row().block(0, np.eye(300)), 1.0)
    with pytest.raises(sdp.ProgramError):
        sdp.solve(pb.program())
