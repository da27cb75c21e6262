"""Representation trees for matrix convex sets and their rewrite algebra.

A set is represented symbolically: matrix ranges and free spectrahedra carry
a generator tuple, envelopes/scalings/products wrap a base representation,
and a few primitives carry closed-form oracles.  Rewrites implement the
duality identities (polar swaps range/spectrahedron and the two envelopes,
products swap under polars, hull products of matrix ranges collapse to a
direct-sum tuple).  Geometric normalization (inner/bounding radius, centering)
runs over the level-one set, which every variant exposes exactly.

Coordinate convention: a set over d complex coordinates is handled through
its selfadjoint splitting of dimension D = 2d (D = d for selfadjoint tuples);
functionals, direction nets, and polytopes live in R^D.
"""

from __future__ import annotations

import numpy as np

from . import _nets
from . import linalg as la
from . import sdp
from .config import DEFAULT, RunConfig


class UnboundedSetError(ValueError):
    """Operation requires a bounded set (or zero interior to level one)."""


class UnknownCatalogName(KeyError):
    pass


# ---------------------------------------------------------------------------
# the representation tree
# ---------------------------------------------------------------------------

class FreeConvexSet:
    """Base class; nodes are immutable after construction."""

    variant = "abstract"

    def __init__(self, d: int, selfadjoint: bool, label: str | None = None):
        self.d = d
        self.selfadjoint = selfadjoint
        self.label = label
        self.known_min_level: int | None = None
        self.known_max_level: int | None = None
        self.notes: tuple[str, ...] = ()
        self._polar_of: FreeConvexSet | None = None
        self._geom_cache: dict = {}

    @property
    def sa_dim(self) -> int:
        return self.d if self.selfadjoint else 2 * self.d

    def children(self) -> tuple["FreeConvexSet", ...]:
        return ()

    def __repr__(self):
        lab = f" {self.label!r}" if self.label else ""
        return f"<{self.variant}{lab} d={self.d}{' sa' if self.selfadjoint else ''}>"


class MatrixRange(FreeConvexSet):
    variant = "matrix_range"

    def __init__(self, t: la.MatrixTuple, label=None):
        super().__init__(t.d, t.selfadjoint, label or t.label)
        self.tuple = t
        self._sa = None
        if _is_commuting_normal(t):
            self.known_min_level = 1
            self.notes += ("commuting normal generators: equals its own "
                           "level-1 minimal envelope",)
        if self.sa_dim == 1:
            self.known_min_level = 1
            self.known_max_level = 1
            self.notes += ("single Hermitian generator: interval set",)

    def sa_generators(self) -> list[np.ndarray]:
        if self._sa is None:
            self._sa = self.tuple.sa_view()
        return self._sa


class FreeSpectrahedron(FreeConvexSet):
    """All X (every level) with Re(sum_j X_j (x) A_j) <= I."""

    variant = "free_spectrahedron"

    def __init__(self, a: la.MatrixTuple, label=None):
        super().__init__(a.d, a.selfadjoint, label or a.label)
        self.tuple = a
        self._coeffs = None

    def pencil_coeffs(self) -> list[np.ndarray]:
        """Hermitian P_l with pencil(X) = sum_l sa_l(X) (x) P_l."""
        if self._coeffs is None:
            t = self.tuple
            if t.selfadjoint:
                self._coeffs = [la.herm_part(e) for e in t.entries]
            else:
                h = [la.herm_part(e) for e in t.entries]
                k = [(e - la.dagger(e)) / 2j for e in t.entries]
                self._coeffs = h + [-m for m in k]
        return self._coeffs


class MinOver(FreeConvexSet):
    """Smallest matrix convex set agreeing with the base at level k."""

    variant = "min_over"

    def __init__(self, k: int, base: FreeConvexSet, label=None):
        super().__init__(base.d, base.selfadjoint, label)
        self.k = k
        self.base = base
        self.known_min_level = k

    def children(self):
        return (self.base,)


class MaxOver(FreeConvexSet):
    """Largest matrix convex set agreeing with the base at level k."""

    variant = "max_over"

    def __init__(self, k: int, base: FreeConvexSet, label=None):
        super().__init__(base.d, base.selfadjoint, label)
        self.k = k
        self.base = base
        self.known_max_level = k

    def children(self):
        return (self.base,)


class Scaled(FreeConvexSet):
    variant = "scaled"

    def __init__(self, r: float, base: FreeConvexSet, label=None):
        super().__init__(base.d, base.selfadjoint, label)
        self.r = float(r)
        self.base = base
        self.known_min_level = base.known_min_level
        self.known_max_level = base.known_max_level

    def children(self):
        return (self.base,)


class CartesianProduct(FreeConvexSet):
    """Levelwise pairs (X, Y); coordinate counts add."""

    variant = "cartesian_product"

    def __init__(self, left: FreeConvexSet, right: FreeConvexSet, label=None):
        if left.selfadjoint != right.selfadjoint:
            raise la.ShapeMismatchError("product factors must share coordinate type")
        super().__init__(left.d + right.d, left.selfadjoint, label)
        self.left = left
        self.right = right
        if left.known_max_level is not None and right.known_max_level is not None:
            self.known_max_level = max(left.known_max_level, right.known_max_level)

    def children(self):
        return (self.left, self.right)


class HullProduct(FreeConvexSet):
    """Matrix convex hull of (X, 0) and (0, Y); coordinate counts add."""

    variant = "hull_product"

    def __init__(self, left: FreeConvexSet, right: FreeConvexSet, label=None):
        if left.selfadjoint != right.selfadjoint:
            raise la.ShapeMismatchError("product factors must share coordinate type")
        super().__init__(left.d + right.d, left.selfadjoint, label)
        self.left = left
        self.right = right
        if left.known_min_level is not None and right.known_min_level is not None:
            self.known_min_level = max(left.known_min_level, right.known_min_level)

    def children(self):
        return (self.left, self.right)


class Primitive(FreeConvexSet):
    """Closed-form sets: the matrix contraction set and the Euclidean balls.

    contraction : all contractions, one complex coordinate; the level-1
                  minimal set over the closed unit disk.
    ball_min(n) : level-1 minimal set over the real unit ball in R^n.
    ball_max(n) : level-1 maximal set over the same ball.
    """

    variant = "primitive"

    def __init__(self, name: str, n: int | None = None, label=None):
        if name == "contraction":
            super().__init__(1, False, label or "contraction_set")
            self.known_min_level = 1
        elif name in ("ball_min", "ball_max"):
            if n is None or n < 1:
                raise ValueError(f"{name} needs a dimension n >= 1")
            super().__init__(n, True, label or f"{name}({n})")
            if name == "ball_min":
                self.known_min_level = 1
            else:
                self.known_max_level = 1
        else:
            raise UnknownCatalogName(f"unknown primitive {name!r}")
        self.name = name
        self.n = n


def _is_commuting_normal(t: la.MatrixTuple, tol: float = 1e-10) -> bool:
    ents = t.entries
    scale = max(1.0, max(la.op_norm(e) for e in ents))
    for i, a in enumerate(ents):
        if la.op_norm(a @ la.dagger(a) - la.dagger(a) @ a) > tol * scale ** 2:
            return False
        for b in ents[i:]:
            if la.op_norm(a @ b - b @ a) > tol * scale ** 2:
                return False
            if la.op_norm(a @ la.dagger(b) - la.dagger(b) @ a) > tol * scale ** 2:
                return False
    return True


# ---------------------------------------------------------------------------
# constructors with rewrite rules
# ---------------------------------------------------------------------------

def matrix_range(t: la.MatrixTuple, label=None) -> MatrixRange:
    return MatrixRange(t, label)


def free_spectrahedron(a: la.MatrixTuple, label=None) -> FreeSpectrahedron:
    return FreeSpectrahedron(a, label)


def min_over(k: int, s: FreeConvexSet, config: RunConfig = DEFAULT) -> FreeConvexSet:
    if k < 1:
        raise ValueError("k must be >= 1")
    ensure_bounded(s, config)
    if s.known_min_level is not None and s.known_min_level <= k:
        return s
    if isinstance(s, MinOver):
        return min_over(min(k, s.k), s.base, config)
    if isinstance(s, MaxOver) and s.k >= k:
        # levels <= k of the max envelope coincide with its base
        return min_over(k, s.base, config)
    return MinOver(k, s)


def max_over(k: int, s: FreeConvexSet, config: RunConfig = DEFAULT) -> FreeConvexSet:
    if k < 1:
        raise ValueError("k must be >= 1")
    ensure_bounded(s, config)
    if s.known_max_level is not None and s.known_max_level <= k:
        return s
    if isinstance(s, MaxOver):
        return max_over(min(k, s.k), s.base, config)
    if isinstance(s, MinOver) and s.k >= k:
        return max_over(k, s.base, config)
    return MaxOver(k, s)


def scale(r: float, s: FreeConvexSet) -> FreeConvexSet:
    if r <= 0:
        raise ValueError("scale factor must be positive")
    if abs(r - 1.0) < 1e-15:
        return s
    if isinstance(s, Scaled):
        return scale(r * s.r, s.base)
    return Scaled(r, s)


def cartesian_product(left: FreeConvexSet, right: FreeConvexSet,
                      config: RunConfig = DEFAULT, label=None) -> FreeConvexSet:
    ensure_bounded(left, config)
    ensure_bounded(right, config)
    return CartesianProduct(left, right, label)


def hull_product(left: FreeConvexSet, right: FreeConvexSet,
                 config: RunConfig = DEFAULT, label=None) -> FreeConvexSet:
    ensure_bounded(left, config)
    ensure_bounded(right, config)
    if isinstance(left, MatrixRange) and isinstance(right, MatrixRange) \
            and left.selfadjoint == right.selfadjoint:
        out = MatrixRange(la.box_sum(left.tuple, right.tuple), label)
        out.notes += ("direct-sum tuple of hull-product factors",)
        if left.known_min_level is not None and right.known_min_level is not None:
            out.known_min_level = max(left.known_min_level, right.known_min_level)
        return out
    return HullProduct(left, right, label)


def box_sum(t: la.MatrixTuple, r: la.MatrixTuple | None) -> la.MatrixTuple:
    """Direct-sum tuple; its matrix range is the hull product of the factor ranges."""
    return la.box_sum(t, r)


def polar(s: FreeConvexSet, config: RunConfig = DEFAULT) -> FreeConvexSet:
    """Polar dual as a representation rewrite; an involution on trees."""
    if s._polar_of is not None:
        return s._polar_of
    ensure_bounded(s, config)
    g = geometry(s, config)
    if not g.zero_interior:
        raise UnboundedSetError(
            "polar requires 0 interior to the level-one set (inner radius "
            f"{g.inner_radius:.3g} not certified positive)")
    out: FreeConvexSet
    if isinstance(s, MatrixRange):
        out = FreeSpectrahedron(s.tuple)
    elif isinstance(s, FreeSpectrahedron):
        out = MatrixRange(s.tuple)
    elif isinstance(s, MinOver):
        out = MaxOver(s.k, polar(s.base, config))
    elif isinstance(s, MaxOver):
        out = MinOver(s.k, polar(s.base, config))
    elif isinstance(s, Scaled):
        out = Scaled(1.0 / s.r, polar(s.base, config))
    elif isinstance(s, CartesianProduct):
        out = HullProduct(polar(s.left, config), polar(s.right, config))
    elif isinstance(s, HullProduct):
        out = CartesianProduct(polar(s.left, config), polar(s.right, config))
    elif isinstance(s, Primitive):
        if s.name == "contraction":
            out = MatrixRange(catalog("ando"))
            out.known_max_level = 1
            out.notes += ("numerical-radius unit set: polar of the contractions",)
        elif s.name == "ball_min":
            out = Primitive("ball_max", s.n)
        else:
            out = Primitive("ball_min", s.n)
    else:
        raise TypeError(f"no polar rule for {s.variant}")
    out._polar_of = s
    if s._polar_of is None:
        s._polar_of = out
    return out


def structural_eq(a: FreeConvexSet, b: FreeConvexSet, tol: float = 1e-12) -> bool:
    if a is b:
        return True
    if a.variant != b.variant or a.d != b.d or a.selfadjoint != b.selfadjoint:
        return False
    if isinstance(a, (MatrixRange, FreeSpectrahedron)):
        if a.tuple.n != b.tuple.n:
            return False
        return all(la.op_norm(x - y) <= tol * max(1.0, la.op_norm(x))
                   for x, y in zip(a.tuple.entries, b.tuple.entries))
    if isinstance(a, (MinOver, MaxOver)):
        return a.k == b.k and structural_eq(a.base, b.base, tol)
    if isinstance(a, Scaled):
        return abs(a.r - b.r) <= tol * max(1.0, abs(a.r)) \
            and structural_eq(a.base, b.base, tol)
    if isinstance(a, (CartesianProduct, HullProduct)):
        return structural_eq(a.left, b.left, tol) and structural_eq(a.right, b.right, tol)
    if isinstance(a, Primitive):
        return a.name == b.name and a.n == b.n
    return False


# ---------------------------------------------------------------------------
# boundedness and level-one geometry
# ---------------------------------------------------------------------------

def ensure_bounded(s: FreeConvexSet, config: RunConfig = DEFAULT):
    """Raise UnboundedSetError unless the representation is certifiably bounded."""
    if isinstance(s, FreeSpectrahedron):
        # bounded exactly when 0 is interior to level one of its polar range
        rng = MatrixRange(s.tuple)
        g = geometry(rng, config)
        if not g.zero_interior:
            raise UnboundedSetError(
                "free spectrahedron is unbounded: 0 is not interior to the "
                "level-one set of its polar matrix range")
        return
    for c in s.children():
        ensure_bounded(c, config)


class GeometryReport:
    """Certified inner radius delta and bounding radius M of level one."""

    def __init__(self, inner_radius, bounding_radius, zero_interior,
                 net, values, mesh, method, witnesses=None):
        self.inner_radius = float(inner_radius)
        self.bounding_radius = float(bounding_radius)
        self.zero_interior = bool(zero_interior)
        self.net = net
        self.values = values
        self.mesh = float(mesh)
        self.method = method
        self.witnesses = witnesses or {}

    def to_json(self):
        return {"inner_radius": self.inner_radius,
                "bounding_radius": self.bounding_radius,
                "zero_interior": self.zero_interior,
                "mesh": self.mesh, "method": self.method,
                "net_size": int(len(self.net))}


def level1_support(s: FreeConvexSet, u: np.ndarray, config: RunConfig = DEFAULT):
    """Exact level-one support value sup{<u, x>: x in S_1} plus achiever data.

    Returns (value, achiever_point, witness) where witness is enough to
    re-verify that the achiever lies in S_1 using linear algebra only.
    """
    u = np.asarray(u, dtype=float)
    if len(u) != s.sa_dim:
        raise la.ShapeMismatchError("direction dimension mismatch")
    if isinstance(s, MatrixRange):
        gens = s.sa_generators()
        m = sum(c * g for c, g in zip(u, gens))
        w, v = np.linalg.eigh(la.herm_part(m))
        psi = v[:, -1]
        x = np.array([float(np.real(psi.conj() @ g @ psi)) for g in gens])
        return float(w[-1]), x, {"kind": "state", "psi": psi}
    if isinstance(s, FreeSpectrahedron):
        return _fs_level1_support(s, u, config)
    if isinstance(s, Primitive):
        nu = float(np.linalg.norm(u))
        if nu < 1e-300:
            return 0.0, np.zeros(s.sa_dim), {"kind": "closed_form"}
        return nu, u / nu, {"kind": "closed_form"}
    if isinstance(s, (MinOver, MaxOver)):
        return level1_support(s.base, u, config)
    if isinstance(s, Scaled):
        v, x, wit = level1_support(s.base, u, config)
        return s.r * v, s.r * x, wit
    if isinstance(s, CartesianProduct):
        dl = s.left.sa_dim
        ul, ur = _split_sa(u, s)
        v1, x1, w1 = level1_support(s.left, ul, config)
        v2, x2, w2 = level1_support(s.right, ur, config)
        return v1 + v2, _join_sa(x1, x2, s), {"kind": "pair", "left": w1, "right": w2}
    if isinstance(s, HullProduct):
        ul, ur = _split_sa(u, s)
        v1, x1, w1 = level1_support(s.left, ul, config)
        v2, x2, w2 = level1_support(s.right, ur, config)
        if v1 >= v2:
            return v1, _join_sa(x1, np.zeros(s.right.sa_dim), s), \
                {"kind": "hull_left", "left": w1}
        return v2, _join_sa(np.zeros(s.left.sa_dim), x2, s), \
            {"kind": "hull_right", "right": w2}
    raise TypeError(f"no level-one support for {s.variant}")


def _split_sa(u: np.ndarray, s) -> tuple[np.ndarray, np.ndarray]:
    """Split an sa-view vector over a product into the factor views."""
    dl, dr = s.left.d, s.right.d
    if s.selfadjoint:
        return u[:dl], u[dl:]
    ul = np.concatenate([u[:dl], u[dl + dr: 2 * dl + dr]])
    ur = np.concatenate([u[dl: dl + dr], u[2 * dl + dr:]])
    return ul, ur


def _join_sa(xl: np.ndarray, xr: np.ndarray, s) -> np.ndarray:
    dl, dr = s.left.d, s.right.d
    if s.selfadjoint:
        return np.concatenate([xl, xr])
    return np.concatenate([xl[:dl], xr[:dr], xl[dl:], xr[dr:]])


def _fs_level1_support(s: FreeSpectrahedron, u: np.ndarray, config: RunConfig):
    coeffs = s.pencil_coeffs()
    side = s.tuple.n
    pb = sdp.ProgramBuilder()
    xs = [pb.free_var() for _ in range(s.sa_dim)]
    slack = pb.psd_block(side, "C")
    for f in la.herm_basis_iter(side, "C"):
        r = pb.row().block(slack, f)
        for l, p in enumerate(coeffs):
            r.free(xs[l], float(np.real(np.trace(f @ p))))
        pb.eq(r, float(np.real(np.trace(f))))
    obj = pb.row()
    for l in range(s.sa_dim):
        obj.free(xs[l], float(u[l]))
    pb.maximize(obj)
    res = sdp.solve(pb.program(), config)
    if res.status == "unbounded":
        raise UnboundedSetError("free spectrahedron level-one support is unbounded")
    if res.status != "optimal":
        raise RuntimeError(f"level-one support solve failed: {res.diagnostics}")
    x = np.array(res.free)
    # upper witness: PSD multiplier P with sum_l <P, P_l> e_l = u, tr P = value
    pmul = res.dual["cone"][0]
    return float(res.value), x, {"kind": "pencil_point", "point": x,
                                 "dual_multiplier": pmul}


def geometry(s: FreeConvexSet, config: RunConfig = DEFAULT) -> GeometryReport:
    """Certified level-one inner radius delta and bounding radius M.

    Both radii are measured around 0.  The inner radius is certified either
    by a Lipschitz-corrected net minimum (tight in low dimension, where the
    net carries a proven mesh) or by the inscribed ball of the convex hull of
    support achievers (dimension-free).  The bounding radius combines the
    coordinate box bound with the Lipschitz-corrected net maximum.
    """
    key = (config.budget.net_refinement, config.budget.max_net_size)
    if key in s._geom_cache:
        return s._geom_cache[key]
    rep = _geometry_impl(s, config)
    s._geom_cache[key] = rep
    return rep


def _geometry_impl(s: FreeConvexSet, config: RunConfig) -> GeometryReport:
    dim = s.sa_dim
    if isinstance(s, Primitive):
        net = _nets.coordinate_directions(dim)
        vals = np.ones(len(net))
        return GeometryReport(1.0, 1.0, True, net, vals, 0.0, "closed_form")
    if isinstance(s, Scaled):
        g = geometry(s.base, config)
        return GeometryReport(s.r * g.inner_radius, s.r * g.bounding_radius,
                              g.zero_interior, g.net, s.r * np.asarray(g.values),
                              g.mesh, g.method, g.witnesses)
    if isinstance(s, (MinOver, MaxOver)):
        return geometry(s.base, config)
    if isinstance(s, CartesianProduct):
        gl, gr = geometry(s.left, config), geometry(s.right, config)
        delta = min(gl.inner_radius, gr.inner_radius)
        m = float(np.hypot(gl.bounding_radius, gr.bounding_radius))
        return GeometryReport(delta, m, delta > config.tol.verdict,
                              _nets.coordinate_directions(dim), np.zeros(2 * dim),
                              np.inf, "product_combination",
                              witnesses={"left": gl, "right": gr})
    if isinstance(s, HullProduct):
        gl, gr = geometry(s.left, config), geometry(s.right, config)
        delta = min(gl.inner_radius, gr.inner_radius) / np.sqrt(2.0)
        m = max(gl.bounding_radius, gr.bounding_radius)
        return GeometryReport(delta, m, delta > config.tol.verdict,
                              _nets.coordinate_directions(dim), np.zeros(2 * dim),
                              np.inf, "product_combination",
                              witnesses={"left": gl, "right": gr})
    if isinstance(s, FreeSpectrahedron):
        # level one is the scalar polar of the (flipped) level-one set of the
        # generator range: radii invert
        g = geometry(MatrixRange(s.tuple), config)
        if not g.zero_interior:
            raise UnboundedSetError(
                "free spectrahedron is unbounded: 0 is not interior to the "
                "level-one set of its polar matrix range")
        delta = 1.0 / g.bounding_radius
        m = 1.0 / g.inner_radius
        return GeometryReport(delta, m, True, g.net, np.asarray(g.values),
                              g.mesh, "polar_of_range", witnesses={"range": g})
    if not isinstance(s, MatrixRange):
        raise TypeError(f"no geometry rule for {s.variant}")

    if dim <= 2:
        net, mesh = _nets.circle_net(720) if dim == 2 else (np.array([[1.0], [-1.0]]), 0.0)
    else:
        net = np.concatenate([_nets.coordinate_directions(dim),
                              _nets.halton_directions(dim, 64 * dim)], axis=0)
        mesh = np.inf
    vals = np.empty(len(net))
    pts = np.empty((len(net), dim))
    wits = []
    for i, u in enumerate(net):
        v, x, w = level1_support(s, u, config)
        vals[i] = v
        pts[i] = x
        wits.append(w)
    # bounding radius: coordinate box is always certified
    box = np.empty(dim)
    for l in range(dim):
        e = np.zeros(dim); e[l] = 1.0
        up, _, _ = level1_support(s, e, config)
        dn, _, _ = level1_support(s, -e, config)
        box[l] = max(up, dn, 0.0)
    m_cert = float(np.linalg.norm(box))
    method = "box"
    if np.isfinite(mesh) and mesh < 0.5:
        m_net = max(float(np.max(vals)), 0.0) / (1.0 - mesh)
        if m_net < m_cert:
            m_cert, method = m_net, "net_lipschitz"
        delta = max(0.0, float(np.min(vals)) - m_cert * mesh)
    else:
        delta = 0.0
    if delta <= config.tol.verdict and dim <= 6:
        delta = max(delta, _inscribed_radius(pts))
        method += "+inner_hull"
    return GeometryReport(delta, m_cert, delta > config.tol.verdict,
                          net, vals, mesh, method,
                          witnesses={"achiever_points": pts, "achievers": wits})


def _inscribed_radius(points: np.ndarray) -> float:
    """Radius of the largest origin-centered ball inside conv(points)."""
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError):
        return 0.0
    offs = -hull.equations[:, -1]  # normal . x <= -off form, unit normals
    if np.any(offs <= 0):
        return 0.0
    return float(np.min(offs))


def tuple_norm_bound(s: FreeConvexSet, config: RunConfig = DEFAULT) -> float:
    """Uniform bound on the tuple metric over ALL levels of the set.

    Each selfadjoint coordinate of a member is bounded in operator norm by
    the level-one bounding radius (states compress levels to level one), so
    the complex tuple metric is at most d * 2 * M1 (or d * M1 selfadjoint).
    """
    g = geometry(s, config)
    per = g.bounding_radius
    return float(s.d * (per if s.selfadjoint else 2.0 * per))


# ---------------------------------------------------------------------------
# recoordinatization
# ---------------------------------------------------------------------------

class AffineMap:
    """x  |->  W (x - c) on selfadjoint coordinate views."""

    def __init__(self, w: np.ndarray, c: np.ndarray, degenerate=False):
        self.w = np.asarray(w, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.degenerate = degenerate

    @property
    def reduced(self) -> bool:
        return self.w.shape[0] < self.w.shape[1]

    def apply_point(self, x: np.ndarray) -> np.ndarray:
        return self.w @ (np.asarray(x) - self.c)

    def apply_tuple(self, t: la.MatrixTuple) -> la.MatrixTuple:
        sa = t.sa_view()
        n = t.n
        shifted = [sa[l] - self.c[l] * np.eye(n) for l in range(len(sa))]
        new = [sum(self.w[i, l] * shifted[l] for l in range(len(sa)))
               for i in range(self.w.shape[0])]
        return la.MatrixTuple(tuple(la.herm_part(m) for m in new), selfadjoint=True,
                              label=None if t.label is None else t.label + "#recoord")

    def invert_point(self, y: np.ndarray) -> np.ndarray:
        sol, *_ = np.linalg.lstsq(self.w, np.asarray(y), rcond=None)
        return sol + self.c

    def to_json(self):
        return {"w": self.w.tolist(), "c": self.c.tolist(),
                "degenerate": self.degenerate}


def recoordinatize(t: la.MatrixTuple, config: RunConfig = DEFAULT):
    """Affinely reposition a tuple so 0 is interior to level one.

    Returns (tuple', AffineMap).  The center is the net-Chebyshev center; if
    the level-one set is flat in some directions the coordinate count drops
    and the map records the reduction.  A single-point level-one set yields a
    translation-only output with the degenerate flag.
    """
    from scipy.optimize import linprog

    s = MatrixRange(t)
    dim = s.sa_dim
    g = geometry(s, config)
    net, vals = g.net, np.asarray(g.values)
    # Chebyshev: max r s.t. <u, c> + r <= s(u) for all net u
    aub = np.concatenate([net, np.ones((len(net), 1))], axis=1)
    res = linprog(c=np.concatenate([np.zeros(dim), [-1.0]]), A_ub=aub, b_ub=vals,
                  bounds=[(None, None)] * (dim + 1), method="highs")
    if not res.success:
        raise RuntimeError("Chebyshev centering LP failed")
    center, rad = res.x[:dim], float(res.x[dim])
    amap = AffineMap(np.eye(dim), center)
    t1 = amap.apply_tuple(t)
    if geometry(MatrixRange(t1), config).zero_interior:
        return t1, amap
    # flat set: principal directions of the achiever cloud span the affine hull
    pts = np.asarray(g.witnesses.get("achiever_points",
                                     np.zeros((0, dim)))) - center
    if pts.size == 0:
        amap.degenerate = True
        return t1, amap
    _, sv, vt = np.linalg.svd(pts, full_matrices=True)
    scale0 = sv[0] if len(sv) and sv[0] > 0 else 0.0
    keep = vt[: int(np.sum(sv > 1e-7 * max(1.0, scale0)))]
    if keep.shape[0] == 0:
        amap.degenerate = True
        return t1, amap
    if keep.shape[0] == dim:
        amap.degenerate = True  # numerically full-dimensional but no interior
        return t1, amap
    amap2 = AffineMap(keep, np.zeros(dim))
    t2 = amap2.apply_tuple(t1)
    # re-center inside the reduced coordinates
    t3, amap3 = recoordinatize(t2, config)
    combined = AffineMap(amap3.w @ keep, center + keep.T @ amap3.c,
                         degenerate=amap3.degenerate)
    return t3, combined


# ---------------------------------------------------------------------------
# level-one polytope sandwiches
# ---------------------------------------------------------------------------

def level1_outer_polytope(s: FreeConvexSet, config: RunConfig = DEFAULT,
                          directions: int | None = None):
    """Vertices of a polytope containing the level-one set.

    Built from supporting halfspaces <u, x> <= s(u); valid at any direction
    count.  Returns (vertices, support_data) with per-direction upper
    witnesses for re-verification.
    """
    dim = s.sa_dim
    nd = directions or (config.budget.polygon_verts if dim <= 2 else 96)
    key = ("outer", nd)
    if key in s._geom_cache:
        return s._geom_cache[key]
    if isinstance(s, (CartesianProduct, HullProduct)):
        out = _product_outer_polytope(s, config, nd)
        s._geom_cache[key] = out
        return out
    if dim == 1:
        v1, _, w1 = level1_support(s, np.array([1.0]), config)
        v2, _, w2 = level1_support(s, np.array([-1.0]), config)
        verts = np.array([[v1], [-v2]])
        out = verts, {"net": np.array([[1.0], [-1.0]]), "values": np.array([v1, v2]),
                      "witnesses": [w1, w2]}
        s._geom_cache[key] = out
        return out
    if dim == 2:
        net, _ = _nets.circle_net(nd)
    else:
        # vertex counts of halfspace intersections grow quickly with the
        # direction count; keep the net modest in higher dimension
        net = np.concatenate([_nets.coordinate_directions(dim),
                              _nets.halton_directions(dim, min(nd, 40))], axis=0)
    vals, wits = [], []
    for u in net:
        v, _, w = level1_support(s, u, config)
        vals.append(v)
        wits.append(w)
    vals = np.array(vals)
    if dim == 2:
        verts = _polygon_from_lines(net, vals)
    else:
        verts = _vertices_from_halfspaces(net, vals, s, config)
    out = verts, {"net": net, "values": vals, "witnesses": wits}
    s._geom_cache[key] = out
    return out


def _polygon_from_lines(net, vals):
    verts = []
    n = len(net)
    for i in range(n):
        j = (i + 1) % n
        a = np.stack([net[i], net[j]])
        b = np.array([vals[i], vals[j]])
        try:
            verts.append(np.linalg.solve(a, b))
        except np.linalg.LinAlgError:
            continue
    return np.array(verts)


def _product_outer_polytope(s, config, nd):
    """Product/cross combination of per-factor circumscribed polytopes."""
    if isinstance(s, CartesianProduct) and s.left.sa_dim >= 2 and s.right.sa_dim >= 2:
        per = max(8, min(nd, 12))  # vertex count multiplies across factors
    else:
        per = max(8, min(nd, 32))
    vl, dl = level1_outer_polytope(s.left, config, directions=per)
    vr, dr = level1_outer_polytope(s.right, config, directions=per)
    pts = []
    if isinstance(s, CartesianProduct):
        for a in vl:
            for b in vr:
                pts.append(_join_sa(a, b, s))
    else:
        zl = np.zeros(s.left.sa_dim)
        zr = np.zeros(s.right.sa_dim)
        for a in vl:
            pts.append(_join_sa(a, zr, s))
        for b in vr:
            pts.append(_join_sa(zl, b, s))
    net = np.concatenate([
        np.stack([_join_sa(u, np.zeros(s.right.sa_dim), s) for u in dl["net"]]),
        np.stack([_join_sa(np.zeros(s.left.sa_dim), u, s) for u in dr["net"]]),
    ])
    vals = np.concatenate([dl["values"], dr["values"]])
    return np.asarray(pts), {"net": net, "values": vals,
                             "witnesses": [{"kind": "factor_polytopes"}],
                             "factors": (dl, dr)}


def _vertices_from_halfspaces(net, vals, s, config):
    from scipy.spatial import HalfspaceIntersection

    g = geometry(s, config)
    if g.zero_interior:
        interior = np.zeros(net.shape[1])
    else:
        from scipy.optimize import linprog
        dim = net.shape[1]
        aub = np.concatenate([net, np.ones((len(net), 1))], axis=1)
        res = linprog(np.concatenate([np.zeros(dim), [-1.0]]), A_ub=aub, b_ub=vals,
                      bounds=[(None, None)] * (dim + 1), method="highs")
        interior = res.x[:dim]
    hs = np.concatenate([net, -vals[:, None]], axis=1)
    try:
        hi = HalfspaceIntersection(hs, interior)
        verts = np.unique(np.round(hi.intersections, 10), axis=0)
        return verts
    except Exception as exc:  # qhull degeneracies
        raise RuntimeError(f"halfspace vertex enumeration failed: {exc}") from exc


def level1_inner_points(s: FreeConvexSet, config: RunConfig = DEFAULT,
                        directions: int | None = None):
    """Certified level-one boundary points (support achievers) with witnesses."""
    dim = s.sa_dim
    nd = directions or (config.budget.polygon_verts if dim <= 2 else 96)
    key = ("inner", nd)
    if key in s._geom_cache:
        return s._geom_cache[key]
    if dim == 1:
        net = np.array([[1.0], [-1.0]])
    elif dim == 2:
        net, _ = _nets.circle_net(nd)
    else:
        net = np.concatenate([_nets.coordinate_directions(dim),
                              _nets.halton_directions(dim, nd)], axis=0)
    pts, wits = [], []
    for u in net:
        _, x, w = level1_support(s, u, config)
        pts.append(x)
        wits.append(w)
    out = np.array(pts), wits
    s._geom_cache[key] = out
    return out


# ---------------------------------------------------------------------------
# the example catalog
# ---------------------------------------------------------------------------

def _e(i, j, n):
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1.0
    return m


def catalog(name: str, n: int | None = None):
    """Named tuples and sets used across the test and benchmark suites."""
    if name == "ando":
        return la.MatrixTuple((2 * _e(0, 1, 2),), label="ando")
    if name == "matrix_units_pair":
        return la.MatrixTuple((_e(0, 1, 4), _e(2, 3, 4)), label="matrix_units_pair")
    if name == "pauli_pair":
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sz = np.diag([1.0, -1.0]).astype(complex)
        return la.MatrixTuple((sx, sz), selfadjoint=True, label="pauli_pair")
    if name == "clock_shift":
        nn = n or 3
        w = np.exp(2j * np.pi / nn)
        clock = np.diag([w ** a for a in range(nn)])
        shift = np.zeros((nn, nn), dtype=complex)
        for a in range(nn):
            shift[(a + 1) % nn, a] = 1.0
        return la.MatrixTuple((clock, shift), label=f"clock_shift({nn})")
    if name == "contraction_set":
        return Primitive("contraction")
    if name in ("ball_min", "ball_max"):
        return Primitive(name, n or 2)
    if name == "free_unitaries":
        nn = n or 2
        out = Primitive("contraction")
        for _ in range(nn - 1):
            out = CartesianProduct(out, Primitive("contraction"))
        out.label = f"free_unitaries({nn})"
        out.notes += ("levelwise product of contraction sets",)
        return out
    if name == "ando_set":
        s = MatrixRange(catalog("ando"))
        s.known_max_level = 1
        s.notes += ("numerical-radius unit set (Ando): the level-1 maximal "
                    "envelope of the closed unit disk",)
        return s
    if name == "pauli_set":
        return MatrixRange(catalog("pauli_pair"))
    raise UnknownCatalogName(f"unknown catalog name {name!r}")


CATALOG_NAMES = ("ando", "ando_set", "matrix_units_pair", "pauli_pair",
                 "pauli_set", "clock_shift", "contraction_set", "ball_min",
                 "ball_max", "free_unitaries")


# ---------------------------------------------------------------------------
# JSON set expressions
# ---------------------------------------------------------------------------

def set_to_json(s: FreeConvexSet) -> dict:
    if isinstance(s, MatrixRange):
        out = {"type": "matrix_range", "tuple": la.tuple_to_json(s.tuple)}
        if s.known_max_level is not None:
            out["known_max_level"] = s.known_max_level
        if s.known_min_level is not None:
            out["known_min_level"] = s.known_min_level
        return out
    if isinstance(s, FreeSpectrahedron):
        return {"type": "free_spectrahedron", "tuple": la.tuple_to_json(s.tuple)}
    if isinstance(s, MinOver):
        return {"type": "min_over", "k": s.k, "base": set_to_json(s.base)}
    if isinstance(s, MaxOver):
        return {"type": "max_over", "k": s.k, "base": set_to_json(s.base)}
    if isinstance(s, Scaled):
        return {"type": "scaled", "r": s.r, "base": set_to_json(s.base)}
    if isinstance(s, CartesianProduct):
        return {"type": "cartesian_product", "left": set_to_json(s.left),
                "right": set_to_json(s.right)}
    if isinstance(s, HullProduct):
        return {"type": "hull_product", "left": set_to_json(s.left),
                "right": set_to_json(s.right)}
    if isinstance(s, Primitive):
        out = {"type": "primitive", "name": s.name}
        if s.n is not None:
            out["n"] = s.n
        return out
    raise TypeError(f"cannot serialize {s.variant}")


def set_from_json(obj: dict, base_dir: str | None = None,
                  config: RunConfig = DEFAULT) -> FreeConvexSet:
    import json
    import os

    def load_tuple(spec):
        if isinstance(spec, dict) and "path" in spec:
            path = spec["path"]
            if base_dir is not None and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            with open(path) as fh:
                return la.tuple_from_json(json.load(fh))
        return la.tuple_from_json(spec)

    t = obj.get("type")
    if t == "matrix_range":
        s = MatrixRange(load_tuple(obj["tuple"]))
        if "known_max_level" in obj:
            s.known_max_level = int(obj["known_max_level"])
        if "known_min_level" in obj:
            kl = int(obj["known_min_level"])
            s.known_min_level = kl if s.known_min_level is None \
                else min(kl, s.known_min_level)
        return s
    if t == "free_spectrahedron":
        return FreeSpectrahedron(load_tuple(obj["tuple"]))
    if t == "min_over":
        return min_over(int(obj["k"]), set_from_json(obj["base"], base_dir, config), config)
    if t == "max_over":
        return max_over(int(obj["k"]), set_from_json(obj["base"], base_dir, config), config)
    if t == "scaled":
        return scale(float(obj["r"]), set_from_json(obj["base"], base_dir, config))
    if t == "cartesian_product":
        return CartesianProduct(set_from_json(obj["left"], base_dir, config),
                                set_from_json(obj["right"], base_dir, config))
    if t == "hull_product":
        return hull_product(set_from_json(obj["left"], base_dir, config),
                            set_from_json(obj["right"], base_dir, config), config)
    if t == "primitive":
        return Primitive(obj["name"], obj.get("n"))
    raise ValueError(f"unknown set expression type {t!r}")
