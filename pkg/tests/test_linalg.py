import numpy as np
import pytest

from freeconvex import linalg as la

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def direct_partial_trace(m, n, mm, factor):
    """Independent index-summation oracle for partial traces."""
    if factor == "input":
        out = np.zeros((mm, mm), dtype=complex)
        for i in range(mm):
            for j in range(mm):
                out[i, j] = sum(m[a * mm + i, a * mm + j] for a in range(n))
    else:
        out = np.zeros((n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                out[a, b] = sum(m[a * mm + i, b * mm + i] for i in range(mm))
    return out


def test_kron_identity():
    assert np.allclose(la.kron(np.eye(2), np.eye(3)), np.eye(6))


def test_kron_block_placement():
    k = la.kron(E12, np.eye(2))
    expect = np.zeros((4, 4))
    expect[0:2, 2:4] = np.eye(2)
    assert np.allclose(k, expect)


def test_kron_spectrum_products():
    rng = np.random.default_rng(7)
    for _ in range(5):
        a = la.random_hermitian(3, rng)
        b = la.random_hermitian(3, rng)
        ev = np.sort(np.linalg.eigvalsh(la.kron(a, b)))
        prods = np.sort([x * y for x in np.linalg.eigvalsh(a)
                         for y in np.linalg.eigvalsh(b)])
        assert np.allclose(ev, prods, atol=1e-10)


def test_partial_trace_identity():
    assert np.allclose(la.partial_trace(np.eye(4), (2, 2), "input"), 2 * np.eye(2))


def test_partial_trace_product_state():
    rng = np.random.default_rng(3)
    rho = la.random_hermitian(2, rng)
    sig = la.random_hermitian(3, rng)
    m = la.kron(rho, sig)
    assert np.allclose(la.partial_trace(m, (2, 3), "input"), np.trace(rho) * sig)
    assert np.allclose(la.partial_trace(m, (2, 3), "output"), np.trace(sig) * rho)


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(11)
    for factor in ("input", "output"):
        m = la.random_hermitian(6, rng)
        ref = direct_partial_trace(m, 2, 3, factor)
        got = la.partial_trace(m, (2, 3), factor)
        assert np.allclose(got, ref, atol=1e-13)
        assert abs(np.trace(got) - np.trace(m)) < 1e-12


def test_partial_trace_shape_error():
    with pytest.raises(la.ShapeMismatchError):
        la.partial_trace(np.eye(5), (2, 2))


def test_apply_choi_identity_map():
    j = la.choi_identity(3)
    rng = np.random.default_rng(5)
    a = la.random_complex(3, rng)
    assert np.allclose(j.apply(a), a, atol=1e-12)


def test_apply_choi_trace_map():
    n, m = 3, 2
    j = la.choi_of_map(lambda a: np.trace(a) / n * np.eye(m), n, m)
    e11 = np.zeros((n, n)); e11[0, 0] = 1.0
    assert np.allclose(j.apply(e11), np.eye(m) / n)


def test_apply_choi_unitality():
    rng = np.random.default_rng(9)
    j = la.random_unital_choi(3, 2, rng)
    assert la.op_norm(j.apply(np.eye(3)) - np.eye(2)) < 1e-10
    assert j.unitality_defect() < 1e-10
    assert j.psd_defect() < 1e-12


def test_apply_choi_trace_duality():
    rng = np.random.default_rng(13)
    n, m = 3, 2
    j = la.random_unital_choi(n, m, rng)
    for _ in range(5):
        a = la.random_complex(n, rng)
        h = la.random_hermitian(m, rng)
        lhs = np.trace(j.apply(a) @ h)
        rhs = np.trace(j.block_matrix @ la.kron(a.T, h))
        assert abs(lhs - rhs) < 1e-10


def test_hermitian_spectrum():
    assert np.allclose(la.hermitian_spectrum(np.eye(3)), [1, 1, 1])
    assert np.allclose(la.hermitian_spectrum(SX), [-1, 1])
    assert np.allclose(la.hermitian_spectrum(E12 + E12.conj().T), [-1, 1])
    with pytest.raises(la.HermiticityError):
        la.hermitian_spectrum(E12)


def test_tuple_metric():
    t = la.MatrixTuple((SX, SZ), selfadjoint=True)
    assert la.tuple_metric(t, t) == 0.0
    a = la.MatrixTuple((np.eye(2), np.zeros((2, 2))))
    b = la.MatrixTuple((np.zeros((2, 2)), np.zeros((2, 2))))
    assert abs(la.tuple_metric(a, b) - 1.0) < 1e-14
    z = la.MatrixTuple((2 * E12,))
    zero = la.MatrixTuple((np.zeros((2, 2)),))
    assert abs(la.tuple_metric(z, zero) - 2.0) < 1e-14


def test_selfadjoint_coordinates():
    t = la.selfadjoint_coordinates(la.MatrixTuple((SX,), selfadjoint=True))
    assert t.d == 2 and np.allclose(t.entries[0], SX)
    assert np.allclose(t.entries[1], 0)
    z = la.selfadjoint_coordinates(la.MatrixTuple((2 * E12,)))
    assert np.allclose(z.entries[0], E12 + E12.conj().T)
    assert np.allclose(z.entries[1], -1j * E12 + 1j * E12.conj().T)


def test_selfadjoint_round_trip():
    rng = np.random.default_rng(17)
    for _ in range(5):
        t = la.MatrixTuple(tuple(la.random_complex(3, rng) for _ in range(2)))
        s = la.selfadjoint_coordinates(t)
        for j in range(t.d):
            rec = s.entries[j] + 1j * s.entries[t.d + j]
            assert la.op_norm(rec - t.entries[j]) < 1e-14


def test_sa_view_round_trip():
    rng = np.random.default_rng(19)
    t = la.MatrixTuple(tuple(la.random_complex(2, rng) for _ in range(2)))
    back = la.tuple_from_sa_view(t.sa_view(), selfadjoint=False)
    assert la.tuple_metric(t, back) < 1e-13


def test_re_tensor_pencil():
    x = la.MatrixTuple((np.zeros((2, 2)),))
    a = la.MatrixTuple((2 * E12,))
    assert np.allclose(la.re_tensor_pencil(x, a), 0)
    one = la.MatrixTuple((np.array([[1.0]]),))
    p = la.re_tensor_pencil(one, a)
    assert np.allclose(np.sort(np.linalg.eigvalsh(p)), [-1, 1])
    x2 = la.MatrixTuple((la.random_complex(2, np.random.default_rng(1)),))
    p1 = la.re_tensor_pencil(la.MatrixTuple((3.0 * x2.entries[0],)), a)
    assert np.allclose(p1, 3 * la.re_tensor_pencil(x2, a))


def test_box_sum_matrix_units():
    z = la.MatrixTuple((2 * E12,), label="ando")
    bs = la.box_sum(z, z)
    assert bs.d == 2 and bs.n == 4
    e12_4 = np.zeros((4, 4)); e12_4[0, 1] = 2.0
    e34_4 = np.zeros((4, 4)); e34_4[2, 3] = 2.0
    assert np.allclose(bs.entries[0], e12_4)
    assert np.allclose(bs.entries[1], e34_4)


def test_realify_unrealify():
    rng = np.random.default_rng(23)
    h = la.random_hermitian(3, rng)
    r = la.realify(h)
    assert np.allclose(r, r.T)
    ev = np.linalg.eigvalsh(r)
    assert np.allclose(np.sort(ev), np.sort(np.repeat(np.linalg.eigvalsh(h), 2)))
    assert np.allclose(la.unrealify(r), h)


def test_coords_round_trip_and_pairing():
    rng = np.random.default_rng(29)
    for field, gen in (("C", la.random_hermitian), ("R", lambda n, r: np.real(la.random_hermitian(n, r)))):
        m = gen(3, rng)
        x = la.herm_to_coords(m, field)
        back = la.coords_to_herm(x, 3, field)
        assert la.op_norm(back - m) < 1e-13
        k = gen(3, rng)
        assert abs(la.pairing_coords(k, field) @ x - np.real(np.trace(k @ m))) < 1e-12


def test_numerical_radius():
    assert abs(la.numerical_radius(2 * E12) - 1.0) < 1e-9
    assert abs(la.numerical_radius(SX) - 1.0) < 1e-9
    assert abs(la.numerical_radius(3 * E12) - 1.5) < 1e-9


def test_clean_choi():
    rng = np.random.default_rng(31)
    j = la.random_unital_choi(2, 2, rng)
    noisy = j.block_matrix + 1e-9 * la.random_hermitian(4, rng)
    c = la.clean_choi(noisy, 2, 2)
    assert c.psd_defect() < 1e-14
    assert c.unitality_defect() < 1e-12
    assert la.op_norm(c.block_matrix - j.block_matrix) < 1e-7


def test_json_round_trip():
    rng = np.random.default_rng(37)
    t = la.MatrixTuple(tuple(la.random_complex(2, rng) for _ in range(2)), label="x")
    t2 = la.tuple_from_json(la.tuple_to_json(t))
    assert la.tuple_metric(t, t2) < 1e-15
    assert t2.label == "x" and not t2.selfadjoint


def test_json_malformed():
    with pytest.raises(la.ShapeMismatchError):
        la.matrix_from_json([[1.0, 2.0]])
