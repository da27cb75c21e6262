import numpy as np
import pytest

from freeconvex import linalg as la
from freeconvex import sets
from freeconvex.sets import (CartesianProduct, FreeSpectrahedron, HullProduct,
                             MatrixRange, MaxOver, MinOver, Primitive, Scaled,
                             catalog, geometry, hull_product, matrix_range,
                             max_over, min_over, polar, recoordinatize, scale,
                             structural_eq)


def test_constructor_collapses():
    s = catalog("pauli_set")
    assert scale(2.0, scale(0.5, s)) is s
    m = min_over(2, s)
    assert isinstance(m, MinOver) and m.k == 2
    assert min_over(1, m).k == 1 and min_over(1, m).base is s
    assert min_over(3, m) is m or (isinstance(min_over(3, m), MinOver)
                                   and min_over(3, m).k == 2)
    x = max_over(2, s)
    assert max_over(1, x).k == 1 and max_over(1, x).base is s


def test_known_flags():
    # commuting normal diagonal tuple generates a minimal set
    t = la.MatrixTuple((np.diag([1.0, 1j, -1.0]),))
    s = matrix_range(t)
    assert s.known_min_level == 1
    assert min_over(1, s) is s
    # numerical-radius set is the level-1 maximal envelope of the disk
    ando = catalog("ando_set")
    assert max_over(1, ando) is ando
    # single Hermitian generator: both envelopes at level 1
    h = matrix_range(la.MatrixTuple((np.diag([1.0, -1.0]),), selfadjoint=True))
    assert min_over(1, h) is h and max_over(1, h) is h
    # contraction set is level-1 minimal
    c = Primitive("contraction")
    assert min_over(1, c) is c


def test_polar_rewrites_and_involution():
    z = catalog("ando")
    s = matrix_range(z)
    p = polar(s)
    assert isinstance(p, FreeSpectrahedron)
    assert structural_eq(matrix_range(p.tuple), s)
    assert polar(p) is s  # bipolar, structurally

    pauli = catalog("pauli_set")
    m = MinOver(2, pauli)
    pm = polar(m)
    assert isinstance(pm, MaxOver) and pm.k == 2
    assert isinstance(pm.base, FreeSpectrahedron)
    assert polar(pm) is m

    sc = Scaled(2.0, pauli)
    psc = polar(sc)
    assert isinstance(psc, Scaled) and abs(psc.r - 0.5) < 1e-15
    assert polar(psc) is sc

    prod = CartesianProduct(pauli, catalog("pauli_set"))
    pp = polar(prod)
    assert isinstance(pp, HullProduct)
    assert polar(pp) is prod

    ball = Primitive("ball_min", 2)
    pb = polar(ball)
    assert isinstance(pb, Primitive) and pb.name == "ball_max"
    assert polar(pb) is ball

    cs = Primitive("contraction")
    pc = polar(cs)
    assert isinstance(pc, MatrixRange) and pc.known_max_level == 1
    assert polar(pc) is cs


def test_polar_rejects_uncentered():
    t = la.MatrixTuple((np.diag([1.0, 2.0]),), selfadjoint=True)  # W1 = [1,2]
    with pytest.raises(sets.UnboundedSetError):
        polar(matrix_range(t))


def test_unbounded_spectrahedron_rejected():
    # W1(E12-range) has empty interior? no: 0 interior fails for sigma_z alone
    t = la.MatrixTuple((np.diag([1.0, 0.0]),), selfadjoint=True)  # W1 = [0,1]
    fs = FreeSpectrahedron(t)
    with pytest.raises(sets.UnboundedSetError):
        sets.ensure_bounded(fs)


def test_geometry_pauli_disk():
    g = geometry(catalog("pauli_set"))
    assert abs(g.inner_radius - 1.0) < 0.01
    assert abs(g.bounding_radius - 1.0) < 0.01
    assert g.zero_interior


def test_geometry_ando_disk():
    # level one of the numerical-radius set is the unit disk
    g = geometry(catalog("ando_set"))
    assert abs(g.inner_radius - 1.0) < 0.01
    assert abs(g.bounding_radius - 1.0) < 0.01


def test_geometry_scaled():
    s = catalog("pauli_set")
    g3 = geometry(scale(3.0, s))
    assert abs(g3.inner_radius - 3.0) < 0.03
    assert abs(g3.bounding_radius - 3.0) < 0.03


def test_geometry_matrix_units_interior():
    s = matrix_range(catalog("matrix_units_pair"))
    g = geometry(s)
    assert g.zero_interior  # certified via inner hull in dimension 4
    assert g.inner_radius > 0.2
    assert g.bounding_radius < 2.0


def test_geometry_spectrahedron_bounds():
    fs = FreeSpectrahedron(catalog("pauli_pair"))
    g = geometry(fs)
    assert g.zero_interior
    assert 0.4 <= g.inner_radius <= 1.0 + 1e-9
    assert g.bounding_radius >= 1.0 - 1e-9


def test_level1_support_values():
    s = catalog("pauli_set")
    v, x, w = sets.level1_support(s, np.array([1.0, 0.0]))
    assert abs(v - 1.0) < 1e-12
    psi = w["psi"]
    assert abs(np.linalg.norm(psi) - 1) < 1e-12
    # hull/cartesian combination rules at level one
    c = CartesianProduct(s, catalog("pauli_set"))
    u = np.array([1.0, 0.0, 1.0, 0.0])
    vc, xc, _ = sets.level1_support(c, u)
    assert abs(vc - 2.0) < 1e-12
    h = HullProduct(s, catalog("pauli_set"))
    vh, xh, _ = sets.level1_support(h, u)
    assert abs(vh - 1.0) < 1e-12


def test_recoordinatize_shift():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    t = la.MatrixTuple((sx + 2 * np.eye(2),), selfadjoint=True)
    t2, amap = recoordinatize(t)
    assert not amap.degenerate
    assert la.op_norm(t2.entries[0] - sx) < 1e-6
    assert abs(amap.c[0] - 2.0) < 1e-6


def test_recoordinatize_point_degenerate():
    t = la.MatrixTuple((np.eye(2),), selfadjoint=True)
    t2, amap = recoordinatize(t)
    assert amap.degenerate
    assert la.op_norm(t2.entries[0]) < 1e-8


def test_recoordinatize_identity_when_centered():
    t = catalog("matrix_units_pair")
    t2, amap = recoordinatize(t)
    assert not amap.degenerate
    assert np.allclose(amap.w, np.eye(4))
    assert np.linalg.norm(amap.c) < 0.2


def test_recoordinatize_dimension_reduction():
    # duplicate coordinate: level-one set lives in a diagonal line
    sz = np.diag([1.0, -1.0]).astype(complex)
    t = la.MatrixTuple((sz, sz), selfadjoint=True)
    t2, amap = recoordinatize(t)
    assert amap.reduced
    assert t2.d == 1


def test_hull_product_rewrite_to_box_sum():
    z = catalog("ando")
    s = hull_product(matrix_range(z), matrix_range(z))
    assert isinstance(s, MatrixRange)
    assert s.tuple.d == 2 and s.tuple.n == 4


def test_box_sum_level1_is_cross_hull():
    """Level-one set of the direct-sum tuple equals conv(C1 x 0 union 0 x D1)."""
    rng = np.random.default_rng(5)
    a = la.MatrixTuple((la.random_hermitian(2, rng),), selfadjoint=True)
    b = la.MatrixTuple((la.random_hermitian(2, rng),), selfadjoint=True)
    bs = sets.box_sum(a, b)
    s = matrix_range(bs)
    # oracle: sample states, compare support values against the cross hull
    ga = geometry(matrix_range(a))
    gb = geometry(matrix_range(b))
    for theta in np.linspace(0, 2 * np.pi, 13, endpoint=False):
        u = np.array([np.cos(theta), np.sin(theta)])
        v, _, _ = sets.level1_support(s, u)
        va, _, _ = sets.level1_support(matrix_range(a), u[:1])
        vb, _, _ = sets.level1_support(matrix_range(b), u[1:])
        assert abs(v - max(va, vb)) < 1e-9


def test_outer_polytope_contains_inner_points():
    s = catalog("pauli_set")
    verts, data = sets.level1_outer_polytope(s, directions=24)
    pts, _ = sets.level1_inner_points(s, directions=24)
    # every inner point satisfies all supporting halfspaces
    for x in pts:
        assert np.all(data["net"] @ x <= data["values"] + 1e-9)
    # polygon vertices stay within sec(pi/24) of the disk
    r = np.linalg.norm(verts, axis=1)
    assert np.max(r) <= 1.0 / np.cos(np.pi / 24) + 1e-9
    assert np.min(r) >= 1.0 - 1e-9


def test_outer_polytope_dim4():
    s = matrix_range(catalog("matrix_units_pair"))
    verts, data = sets.level1_outer_polytope(s, directions=40)
    assert verts.shape[1] == 4
    pts, _ = sets.level1_inner_points(s, directions=16)
    for x in pts:
        assert np.all(data["net"] @ x <= data["values"] + 1e-8)


def test_catalog_and_json_round_trip():
    for name in ("ando_set", "pauli_set"):
        s = catalog(name)
        s2 = sets.set_from_json(sets.set_to_json(s))
        assert structural_eq(s, s2)
        assert s2.known_max_level == s.known_max_level
    fu = catalog("free_unitaries", 2)
    assert isinstance(fu, CartesianProduct) and fu.d == 2
    u = catalog("clock_shift", 3)
    assert u.d == 2 and u.n == 3
    assert np.allclose(u.entries[0] @ u.entries[1],
                       np.exp(2j * np.pi / 3) * u.entries[1] @ u.entries[0])
    with pytest.raises(sets.UnknownCatalogName):
        catalog("nope")
    tree = min_over(2, scale(2.0, catalog("pauli_set")))
    tree2 = sets.set_from_json(sets.set_to_json(tree))
    assert structural_eq(tree, tree2)


def test_tuple_norm_bound():
    s = catalog("ando_set")
    m = sets.tuple_norm_bound(s)
    # members have operator norm at most 2 (numerical radius 1)
    assert m >= 2.0 - 1e-6
