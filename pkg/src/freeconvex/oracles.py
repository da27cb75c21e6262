"""Set-level queries with machine-checkable certificates.

Every query answers with a verdict or bound pair plus a certificate that can
be re-verified by eigenvalue computations alone.  IN is never claimed from
sweeps; only structural reductions, feasible Choi/POVM data, or covered nets
grant it.  OUT always carries a separating functional (or an equivalent
Farkas object).  A global soundness registry records every verdict and hard-
fails if any point ever collects both IN and OUT.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _nets
from . import _programs as prog
from . import linalg as la
from . import sets as st
from .config import DEFAULT, RunConfig


class SoundnessViolation(AssertionError):
    """A point received both an IN and an OUT certificate."""


_VERDICTS: dict[tuple, set] = {}


def _fingerprint(obj) -> str:
    def enc(o):
        if isinstance(o, float):
            return round(o, 10)
        if isinstance(o, dict):
            return {k: enc(v) for k, v in sorted(o.items())}
        if isinstance(o, (list, tuple)):
            return [enc(v) for v in o]
        return o
    return json.dumps(enc(obj), sort_keys=True)


def record_verdict(s: st.FreeConvexSet, x: la.MatrixTuple, verdict: str):
    if verdict not in ("IN", "OUT"):
        return
    key = (_fingerprint(st.set_to_json(s)), _fingerprint(la.tuple_to_json(x)))
    seen = _VERDICTS.setdefault(key, set())
    seen.add(verdict)
    if "IN" in seen and "OUT" in seen:
        raise SoundnessViolation(
            f"contradictory certificates for point {x!r} in set {s!r}")


def reset_soundness_registry():
    _VERDICTS.clear()


def soundness_summary():
    return {"points": len(_VERDICTS),
            "verdicts": sum(len(v) for v in _VERDICTS.values())}


# ---------------------------------------------------------------------------
# support functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportFunctional:
    """Selfadjoint functional tuple at a fixed level.

    Pairs with a point as sum_l tr(H_l sa_l(X)); the normalization constant
    is the dual of the summed-operator-norm tuple metric.
    """

    level: int
    entries: tuple[np.ndarray, ...]
    selfadjoint: bool = True  # coordinate type of the paired sets

    def __post_init__(self):
        ents = []
        for h in self.entries:
            a = la.herm_part(np.asarray(h, dtype=complex))
            if a.shape != (self.level, self.level):
                raise la.ShapeMismatchError("functional entries must be level-sized")
            a.setflags(write=False)
            ents.append(a)
        object.__setattr__(self, "entries", tuple(ents))

    @property
    def sa_dim(self) -> int:
        return len(self.entries)

    def pair(self, x: la.MatrixTuple) -> float:
        sa = x.sa_view()
        if len(sa) != self.sa_dim or x.n != self.level:
            raise la.ShapeMismatchError("functional/point shape mismatch")
        return float(np.real(sum(np.trace(h @ s) for h, s in zip(self.entries, sa))))

    def pair_sa(self, sa: list[np.ndarray]) -> float:
        return float(np.real(sum(np.trace(h @ s) for h, s in zip(self.entries, sa))))

    def complex_pairs(self) -> list[np.ndarray]:
        if self.selfadjoint:
            return [np.asarray(h) for h in self.entries]
        d = self.sa_dim // 2
        return [self.entries[j] + 1j * self.entries[d + j] for j in range(d)]

    def dual_norm(self) -> float:
        return max(la.trace_norm(g) for g in self.complex_pairs())

    def normalized(self) -> "SupportFunctional":
        nrm = self.dual_norm()
        if nrm < 1e-300:
            return self
        return SupportFunctional(self.level, tuple(h / nrm for h in self.entries),
                                 self.selfadjoint)

    def scaled(self, c: float) -> "SupportFunctional":
        return SupportFunctional(self.level, tuple(c * h for h in self.entries),
                                 self.selfadjoint)

    def to_json(self):
        return {"level": self.level, "selfadjoint": self.selfadjoint,
                "entries": [la.matrix_to_json(h) for h in self.entries]}

    @staticmethod
    def from_json(obj):
        return SupportFunctional(int(obj["level"]),
                                 tuple(la.matrix_from_json(m) for m in obj["entries"]),
                                 bool(obj.get("selfadjoint", True)))


def functional_from_vector(u: np.ndarray, level: int, selfadjoint: bool,
                           state: np.ndarray | None = None) -> SupportFunctional:
    """Rank-one functional u (x) |psi><psi| (identity-normalized if no state)."""
    rho = np.eye(level) / level if state is None else state
    return SupportFunctional(level, tuple(float(c) * rho for c in u), selfadjoint)


def random_functional(dim: int, level: int, selfadjoint: bool, rng) -> SupportFunctional:
    rng = la.rng_from(rng)
    ents = tuple(la.random_hermitian(level, rng) for _ in range(dim))
    return SupportFunctional(level, ents, selfadjoint).normalized()


@dataclass
class SupportValue:
    """One- or two-sided certified support value."""

    lo: float
    hi: float
    achiever: la.MatrixTuple | None = None
    certificate: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.hi - self.lo <= 1e-6 * (1 + abs(self.hi))


def _assemble_presentation(s: st.FreeConvexSet, sa_list: list[np.ndarray],
                           label=None) -> la.MatrixTuple:
    return la.tuple_from_sa_view(sa_list, s.selfadjoint, label)


def support(s: st.FreeConvexSet, h: SupportFunctional,
            config: RunConfig = DEFAULT) -> SupportValue:
    """Support value sup over the level-m slice of the trace pairing with h.

    Exact for matrix ranges, spectrahedra, contractions, scalings, cartesian
    products, and hull products at level one; envelope variants return
    certified one-sided bounds (the certificate labels each side).
    """
    if h.sa_dim != s.sa_dim:
        raise la.ShapeMismatchError("functional dimension mismatch")
    m = h.level
    if isinstance(s, st.MatrixRange):
        gens = s.sa_generators()
        if m == 1:
            u = np.array([float(np.real(e[0, 0])) for e in h.entries])
            v, x, wit = st.level1_support(s, u, config)
            ach = la.MatrixTuple(tuple(np.array([[c]], dtype=complex)
                                       for c in (x if s.selfadjoint else
                                                 [x[j] + 1j * x[s.d + j]
                                                  for j in range(s.d)])),
                                 s.selfadjoint)
            return SupportValue(v, v, ach,
                                {"kind": "range_support_eig", "value": v,
                                 "direction": u, "state": wit.get("psi")})
        v, j, z = prog.range_support(gens, s.tuple.n, list(h.entries), m, config)
        ach = la.MatrixTuple(tuple(la.apply_choi(j, e) for e in s.tuple.entries),
                             s.selfadjoint)
        return SupportValue(v, v, ach,
                            {"kind": "range_support", "choi": j, "dual_z": z})
    if isinstance(s, st.FreeSpectrahedron):
        v, xlist, pmul = prog.fs_support(s.pencil_coeffs(), s.tuple.n,
                                         list(h.entries), m, config)
        ach = _assemble_presentation(s, xlist)
        return SupportValue(v, v, ach,
                            {"kind": "fs_support", "dual_multiplier": pmul})
    if isinstance(s, st.Primitive):
        return _support_primitive(s, h, config)
    if isinstance(s, st.Scaled):
        inner = support(s.base, h, config)
        ach = None
        if inner.achiever is not None:
            ach = inner.achiever.scaled(s.r)
        return SupportValue(s.r * inner.lo, s.r * inner.hi, ach,
                            {"kind": "scaled", "r": s.r, "base": inner.certificate})
    if isinstance(s, (st.MinOver, st.MaxOver)):
        if m <= s.k:
            out = support(s.base, h, config)
            out.certificate = {"kind": "level_reduction", "k": s.k,
                               "base": out.certificate}
            return out
        return _support_envelope(s, h, config)
    if isinstance(s, st.CartesianProduct):
        hl, hr = _split_functional(h, s)
        vl = support(s.left, hl, config)
        vr = support(s.right, hr, config)
        ach = None
        if vl.achiever is not None and vr.achiever is not None:
            ach = la.MatrixTuple(vl.achiever.entries + vr.achiever.entries,
                                 s.selfadjoint)
        return SupportValue(vl.lo + vr.lo, vl.hi + vr.hi, ach,
                            {"kind": "sum", "left": vl.certificate,
                             "right": vr.certificate})
    if isinstance(s, st.HullProduct):
        return _support_hull(s, h, config)
    raise TypeError(f"no support rule for {s.variant}")


def _split_functional(h: SupportFunctional, s) -> tuple[SupportFunctional, SupportFunctional]:
    dl, dr = s.left.d, s.right.d
    ents = list(h.entries)
    if s.selfadjoint:
        return (SupportFunctional(h.level, tuple(ents[:dl]), True),
                SupportFunctional(h.level, tuple(ents[dl:]), True))
    left = ents[:dl] + ents[dl + dr: 2 * dl + dr]
    right = ents[dl: dl + dr] + ents[2 * dl + dr:]
    return (SupportFunctional(h.level, tuple(left), False),
            SupportFunctional(h.level, tuple(right), False))


def _pad_functional(h: SupportFunctional, s, side: str) -> SupportFunctional:
    """Lift a factor functional to the product by zero-padding."""
    z = np.zeros((h.level, h.level))
    dl, dr = s.left.d, s.right.d
    if s.selfadjoint:
        ents = (list(h.entries) + [z] * dr) if side == "left" \
            else ([z] * dl + list(h.entries))
        return SupportFunctional(h.level, tuple(ents), True)
    d = dl if side == "left" else dr
    re, im = list(h.entries[:d]), list(h.entries[d:])
    if side == "left":
        ents = re + [z] * dr + im + [z] * dr
    else:
        ents = [z] * dl + re + [z] * dl + im
    return SupportFunctional(h.level, tuple(ents), False)


def _support_primitive(s: st.Primitive, h: SupportFunctional, config) -> SupportValue:
    m = h.level
    if s.name == "contraction":
        g = h.complex_pairs()[0]
        u, sv, vt = np.linalg.svd(g)
        val = float(np.sum(sv))
        ach = la.MatrixTuple((u @ vt,))
        return SupportValue(val, val, ach, {"kind": "trace_norm", "svals": sv})
    if m == 1:
        u = np.array([float(np.real(e[0, 0])) for e in h.entries])
        val = float(np.linalg.norm(u))
        pt = u / val if val > 0 else u
        ach = la.MatrixTuple(tuple(np.array([[c]], dtype=complex) for c in pt),
                             selfadjoint=True)
        return SupportValue(val, val, ach, {"kind": "ball_level1"})
    # Euclidean ball envelopes at higher levels: certified bound pair
    lo, lo_cert = _ball_support_lower(s, h, config)
    hi, hi_cert = _ball_support_upper(s, h, config)
    return SupportValue(lo, hi, lo_cert.pop("achiever", None),
                        {"kind": "ball_bounds", "lower": lo_cert, "upper": hi_cert})


def _ball_support_lower(s: st.Primitive, h: SupportFunctional, config):
    pts = np.concatenate([_nets.coordinate_directions(s.sa_dim),
                          _nets.halton_directions(s.sa_dim, 32)], axis=0)
    val, povm = prog.povm_support(pts, list(h.entries), h.level, config)
    ach_sa = [sum(pts[i, l] * povm[i] for i in range(len(pts)))
              for l in range(s.sa_dim)]
    ach = la.MatrixTuple(tuple(ach_sa), selfadjoint=True)
    return val, {"kind": "povm_lower", "points": pts, "achiever": ach}


def _ball_support_upper(s: st.Primitive, h: SupportFunctional, config):
    hi = float(sum(la.trace_norm(e) for e in h.entries))
    return hi, {"kind": "coordinate_bound"}


def _support_envelope(s, h: SupportFunctional, config) -> SupportValue:
    base = s.base
    if isinstance(s, st.MinOver):
        upper = support(base, h, config)
        lo = -np.inf
        locert = {}
        try:
            pts, wits = st.level1_inner_points(base, config)
            val, _ = prog.povm_support(pts, list(h.entries), h.level, config)
            lo, locert = val, {"kind": "level1_povm", "points": pts}
        except Exception as exc:
            locert = {"kind": "unavailable", "error": repr(exc)}
        return SupportValue(lo, upper.hi, None,
                            {"kind": "envelope_bounds", "side": "min",
                             "lower": locert, "upper": upper.certificate})
    lower = support(base, h, config)
    g = st.geometry(base, config)
    hi = float(g.bounding_radius * sum(la.trace_norm(e) for e in h.entries))
    return SupportValue(lower.lo, max(hi, lower.hi), lower.achiever,
                        {"kind": "envelope_bounds", "side": "max",
                         "lower": lower.certificate,
                         "upper": {"kind": "coordinate_bound", "M": g.bounding_radius}})


def _support_hull(s: st.HullProduct, h: SupportFunctional, config) -> SupportValue:
    hl, hr = _split_functional(h, s)
    vl = support(s.left, hl, config)
    vr = support(s.right, hr, config)
    if h.level == 1:
        lo = max(vl.lo, vr.lo)
        hi = max(vl.hi, vr.hi)
        ach = None
        src = vl if vl.lo >= vr.lo else vr
        if src.achiever is not None:
            z = tuple(np.zeros((1, 1), dtype=complex)
                      for _ in range((s.right if src is vl else s.left).d))
            ents = (src.achiever.entries + z) if src is vl else (z + src.achiever.entries)
            ach = la.MatrixTuple(ents, s.selfadjoint)
        return SupportValue(lo, hi, ach, {"kind": "hull_level1_max",
                                          "left": vl.certificate,
                                          "right": vr.certificate})
    lo = max(vl.lo, vr.lo)
    gl = st.geometry(s.left, config)
    gr = st.geometry(s.right, config)
    zero_ok = _contains_zero_level1(gl) and _contains_zero_level1(gr)
    hi = vl.hi + vr.hi if zero_ok else \
        max(gl.bounding_radius, gr.bounding_radius) * \
        sum(la.trace_norm(e) for e in h.entries)
    return SupportValue(lo, hi, None, {"kind": "hull_bounds",
                                       "left": vl.certificate,
                                       "right": vr.certificate})


def _contains_zero_level1(g: st.GeometryReport) -> bool:
    if g.zero_interior:
        return True
    vals = np.asarray(g.values, dtype=float)
    return vals.size > 0 and float(np.min(vals)) >= -1e-9


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------

@dataclass
class MembershipVerdict:
    verdict: str  # IN | OUT | UNDECIDED
    margin: float
    certificate: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {"verdict": self.verdict, "margin": self.margin,
                "certificate": _cert_json(self.certificate),
                "diagnostics": _diag_json(self.diagnostics)}


def _cert_json(c):
    from .reports import certificate_to_json
    return certificate_to_json(c)


def _diag_json(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (int, float, str, bool, type(None))):
            out[k] = v
        else:
            out[k] = repr(v)
    return out


def _coerce_point(s: st.FreeConvexSet, x: la.MatrixTuple) -> la.MatrixTuple:
    if x.d != s.d:
        raise la.ShapeMismatchError(f"point has d={x.d}, set expects d={s.d}")
    if s.selfadjoint and not x.selfadjoint:
        return la.MatrixTuple(x.entries, selfadjoint=True, label=x.label)
    return x


def membership(s: st.FreeConvexSet, x: la.MatrixTuple,
               config: RunConfig = DEFAULT) -> MembershipVerdict:
    """Trichotomy membership with an independently checkable certificate."""
    x = _coerce_point(s, x)
    v = _membership_impl(s, x, config)
    record_verdict(s, x, v.verdict)
    return v


def _membership_impl(s, x, config) -> MembershipVerdict:
    m = x.n
    if isinstance(s, st.MatrixRange):
        return _membership_range(s, x, config)
    if isinstance(s, st.FreeSpectrahedron):
        return _membership_fs(s, x, config)
    if isinstance(s, st.Primitive):
        if s.name == "contraction":
            return _membership_contraction(x, config)
        if s.name == "ball_max":
            return _membership_ballmax(s, x, config)
        from . import kcert
        return kcert.level1_hull_membership(s, x, config)
    if isinstance(s, st.Scaled):
        inner = _membership_impl(s.base, x.scaled(1.0 / s.r), config)
        return MembershipVerdict(inner.verdict, inner.margin * s.r,
                                 {"kind": "scaled", "r": s.r,
                                  "base": inner.certificate},
                                 inner.diagnostics)
    if isinstance(s, (st.MinOver, st.MaxOver)):
        if m <= s.k:
            inner = _membership_impl(s.base, x, config)
            inner.certificate = {"kind": "level_reduction", "k": s.k,
                                 "base": inner.certificate}
            return inner
        from . import kcert
        if isinstance(s, st.MinOver):
            return kcert.min_membership(s.base, s.k, x, config)
        return kcert.max_membership(s.base, s.k, x, config)
    if isinstance(s, st.CartesianProduct):
        xl = la.MatrixTuple(x.entries[:s.left.d], x.selfadjoint)
        xr = la.MatrixTuple(x.entries[s.left.d:], x.selfadjoint)
        vl = _membership_impl(s.left, xl, config)
        vr = _membership_impl(s.right, xr, config)
        if vl.verdict == "OUT" or vr.verdict == "OUT":
            side, vv = ("left", vl) if vl.verdict == "OUT" else ("right", vr)
            return MembershipVerdict("OUT", vv.margin,
                                     {"kind": "component_out", "side": side,
                                      "component": vv.certificate})
        if vl.verdict == "IN" and vr.verdict == "IN":
            return MembershipVerdict("IN", min(vl.margin, vr.margin),
                                     {"kind": "component_pair",
                                      "left": vl.certificate,
                                      "right": vr.certificate})
        return MembershipVerdict("UNDECIDED", 0.0, {},
                                 {"left": vl.verdict, "right": vr.verdict})
    if isinstance(s, st.HullProduct):
        from . import kcert
        if s.known_min_level == 1:
            return kcert.level1_hull_membership(s, x, config)
        return MembershipVerdict("UNDECIDED", 0.0, {},
                                 {"reason": "hull product without an exact oracle"})
    raise TypeError(f"no membership rule for {s.variant}")


def _membership_range(s: st.MatrixRange, x, config) -> MembershipVerdict:
    gens = s.sa_generators()
    n, m = s.tuple.n, x.n
    xsa = x.sa_view()
    dist, jraw = prog.ucp_distance(gens, n, xsa, m, config)
    if dist is None:
        return MembershipVerdict("UNDECIDED", 0.0, {},
                                 {"reason": "distance solve failed", **jraw})
    if dist <= config.tol.verdict:
        j = la.clean_choi(jraw, n, m)
        repro = max(la.op_norm(la.apply_choi(j, g) - t) for g, t in zip(gens, xsa))
        if repro <= 1e-7:
            return MembershipVerdict("IN", dist,
                                     {"kind": "choi", "choi": j,
                                      "reproduction": repro})
        # polish: re-solve distance at the cleaned point? fall through to
        # a degraded but honest verdict
        return MembershipVerdict("IN", dist,
                                 {"kind": "choi", "choi": j, "reproduction": repro,
                                  "note": "boundary reproduction above strict tol"},
                                 {"reproduction": repro})
    status, cert = prog.solve_ucp_feasibility(gens, n, xsa, m, config)
    if status == "infeasible" and cert.get("kind") == "farkas_functional":
        raw = SupportFunctional(m, tuple(cert["H"]), s.selfadjoint)
        scale = raw.dual_norm() or 1.0
        hfun = raw.scaled(1.0 / scale)
        zm = cert["Z"] / scale
        margin = cert["pairing"] / scale
        out = {"kind": "farkas_functional", "H": list(hfun.entries), "Z": zm,
               "margin": margin, "support_bound": float(-np.real(np.trace(zm))),
               "n": n, "m": m}
        if margin >= config.tol.verdict:
            return MembershipVerdict("OUT", margin, out, {"distance": dist})
        return MembershipVerdict("UNDECIDED", margin, out,
                                 {"reason": "boundary sliver", "distance": dist})
    if status == "feasible":
        # distance said no but equality is feasible: boundary noise
        j = cert
        repro = max(la.op_norm(la.apply_choi(j, g) - t) for g, t in zip(gens, xsa))
        if repro <= 1e-7:
            return MembershipVerdict("IN", 0.0, {"kind": "choi", "choi": j,
                                                 "reproduction": repro})
    return MembershipVerdict("UNDECIDED", 0.0, {},
                             {"reason": "feasibility inconclusive",
                              "distance": dist, "status": status})


def _membership_fs(s: st.FreeSpectrahedron, x, config) -> MembershipVerdict:
    coeffs = s.pencil_coeffs()
    xsa = x.sa_view()
    pencil = sum(la.kron(sa, p) for sa, p in zip(xsa, coeffs))
    w, v = np.linalg.eigh(la.herm_part(pencil))
    top = float(w[-1])
    if top <= 1.0 + config.tol.verdict:
        return MembershipVerdict("IN", 1.0 - top,
                                 {"kind": "pencil_in", "top_eig": top})
    psi = v[:, -1]
    pmat = np.outer(psi, psi.conj())
    hlist = [la.herm_part(prog.kron_contract_right(pmat, p, x.n, s.tuple.n))
             for p in coeffs]
    hfun = SupportFunctional(x.n, tuple(hlist), s.selfadjoint)
    pairing = hfun.pair_sa(xsa)
    return MembershipVerdict("OUT", top - 1.0,
                             {"kind": "pencil_out", "psi": psi, "top_eig": top,
                              "H": hlist, "pairing": pairing,
                              "support_bound": 1.0})


def _membership_contraction(x, config) -> MembershipVerdict:
    g = x.entries[0]
    u, sv, vt = np.linalg.svd(g)
    nrm = float(sv[0])
    if nrm <= 1.0 + config.tol.verdict:
        return MembershipVerdict("IN", 1.0 - nrm, {"kind": "norm_in", "norm": nrm})
    gfun = np.outer(u[:, 0], vt[0].conj())
    # G = Hre + i Him pairs as Re tr(G^dagger X); trace norm of G is 1
    hre = la.herm_part(gfun)
    him = (gfun - la.dagger(gfun)) / 2j
    return MembershipVerdict("OUT", nrm - 1.0,
                             {"kind": "norm_out", "norm": nrm,
                              "H": [hre, la.herm_part(him)],
                              "support_bound": 1.0, "pairing": nrm})


def _membership_ballmax(s: st.Primitive, x, config) -> MembershipVerdict:
    """W_1(X) inside the unit ball, certified by a Lipschitz-corrected sweep."""
    xsa = x.sa_view()
    dim = s.sa_dim
    lip = float(np.sqrt(sum(la.op_norm(e) ** 2 for e in xsa)))
    net, mesh = _nets.direction_net(dim, 1440 if dim == 2 else 64 * dim,
                                    config.budget.max_net_size)
    worst, worst_u, worst_psi = -np.inf, None, None
    for u in net:
        mat = sum(c * e for c, e in zip(u, xsa))
        w, v = np.linalg.eigh(la.herm_part(mat))
        if w[-1] > worst:
            worst, worst_u, worst_psi = float(w[-1]), u, v[:, -1]
    if worst > 1.0 + config.tol.verdict:
        rho = np.outer(worst_psi, worst_psi.conj())
        hlist = [float(c) * rho for c in worst_u]
        return MembershipVerdict("OUT", worst - 1.0,
                                 {"kind": "ballmax_out", "u": worst_u,
                                  "psi": worst_psi, "top_eig": worst,
                                  "H": hlist, "support_bound": 1.0,
                                  "pairing": worst})
    if np.isfinite(mesh) and worst + lip * mesh <= 1.0 + config.tol.verdict:
        return MembershipVerdict("IN", 1.0 - worst - lip * mesh,
                                 {"kind": "ballmax_in", "net_top": worst,
                                  "lipschitz": lip, "mesh": mesh})
    return MembershipVerdict("UNDECIDED", 0.0, {},
                             {"reason": "net too coarse",
                              "net_top": worst, "mesh": mesh, "lipschitz": lip})


# ---------------------------------------------------------------------------
# sweep engine
# ---------------------------------------------------------------------------

def sweep_maximize(value_fn, dim: int, level: int, selfadjoint: bool,
                   config: RunConfig, salt: int = 0, warm=None):
    """Multi-start projected subgradient ascent over the dual unit sphere.

    value_fn(H) -> (value, subgrad sa-list or None).  Any evaluated point is
    a valid lower bound; the best (value, H) pair is returned.
    """
    rng = np.random.default_rng([config.seed, salt, dim, level])
    starts: list[SupportFunctional] = list(warm or [])
    for l in range(min(dim, 8)):
        for sgn in (1.0, -1.0):
            u = np.zeros(dim); u[l] = sgn
            starts.append(functional_from_vector(u, level, selfadjoint))
    while len(starts) < config.budget.sweep_starts:
        starts.append(random_functional(dim, level, selfadjoint, rng))
    best_val, best_h = -np.inf, None
    for h0 in starts[:config.budget.sweep_starts]:
        h = h0.normalized()
        for it in range(config.budget.sweep_iters):
            val, grad = value_fn(h)
            if val > best_val:
                best_val, best_h = val, h
            if grad is None:
                break
            step = 0.5 / np.sqrt(it + 1.0)
            ents = tuple(np.asarray(e) + step * g
                         for e, g in zip(h.entries, grad))
            h = SupportFunctional(level, ents, selfadjoint).normalized()
        val, _ = value_fn(h)
        if val > best_val:
            best_val, best_h = val, h
    return best_val, best_h


# ---------------------------------------------------------------------------
# containment, inclusion scaling, Hausdorff distance
# ---------------------------------------------------------------------------

def contains(s1: st.FreeConvexSet, s2: st.FreeConvexSet,
             config: RunConfig = DEFAULT) -> MembershipVerdict:
    """Verdict on 's1 is a subset of s2'."""
    if s1.sa_dim != s2.sa_dim:
        raise la.ShapeMismatchError("containment needs equal coordinate counts")
    st.ensure_bounded(s1, config)
    st.ensure_bounded(s2, config)
    if st.structural_eq(s1, s2):
        return MembershipVerdict("IN", 0.0, {"kind": "structural",
                                             "rule": "identical trees"})
    if isinstance(s1, st.MinOver) and st.structural_eq(s1.base, s2):
        return MembershipVerdict("IN", 0.0, {"kind": "structural",
                                             "rule": "minimal envelope shrinks"})
    if isinstance(s2, st.MaxOver) and st.structural_eq(s1, s2.base):
        return MembershipVerdict("IN", 0.0, {"kind": "structural",
                                             "rule": "maximal envelope grows"})
    if isinstance(s1, st.MatrixRange) and isinstance(s2, st.MatrixRange):
        status, cert = prog.solve_ucp_feasibility(
            s2.sa_generators(), s2.tuple.n, s1.sa_generators(), s1.tuple.n, config)
        if status == "feasible":
            return MembershipVerdict("IN", 0.0, {"kind": "choi", "choi": cert,
                                                 "rule": "ucp interpolation"})
        if status == "infeasible":
            return _containment_out_from_farkas(s1, s2, cert, config)
        return MembershipVerdict("UNDECIDED", 0.0, {}, cert)
    if isinstance(s1, st.MatrixRange) and isinstance(s2, st.FreeSpectrahedron):
        top = la.eig_max(sum(la.kron(g, p) for g, p in
                             zip(s1.sa_generators(), s2.pencil_coeffs())))
        if top <= 1.0 + config.tol.verdict:
            return MembershipVerdict("IN", 1.0 - top,
                                     {"kind": "pencil_in", "top_eig": top,
                                      "rule": "generator pencil check"})
        verdict = _membership_fs(s2, s1.tuple, config)
        verdict.certificate["rule"] = "generator escapes the spectrahedron"
        return verdict
    if isinstance(s1, st.FreeSpectrahedron) and isinstance(s2, st.FreeSpectrahedron):
        inner = contains(st.MatrixRange(s2.tuple), st.MatrixRange(s1.tuple), config)
        inner.certificate = {"kind": "polar_swap", "base": inner.certificate}
        return inner
    # refutation sweep over levels
    best_gap, best_data = -np.inf, None
    for m in range(1, config.budget.level_cap + 1):
        def gap_fn(h):
            v1 = support(s1, h, config)
            v2 = support(s2, h, config)
            grad = None
            if v1.achiever is not None:
                g1 = v1.achiever.sa_view()
                g2 = v2.achiever.sa_view() if v2.achiever is not None else \
                    [np.zeros((h.level, h.level))] * len(g1)
                grad = [a - b for a, b in zip(g1, g2)]
            return v1.lo - v2.hi, grad
        val, h = sweep_maximize(gap_fn, s1.sa_dim, m, s1.selfadjoint, config,
                                salt=101 + m)
        if val > best_gap:
            best_gap, best_data = val, (m, h)
        if val > config.tol.verdict:
            v1 = support(s1, h, config)
            v2 = support(s2, h, config)
            return MembershipVerdict(
                "OUT", val,
                {"kind": "support_gap", "level": m, "H": list(h.entries),
                 "inner_value": v1.lo, "outer_bound": v2.hi,
                 "inner_cert": v1.certificate, "outer_cert": v2.certificate})
    return MembershipVerdict("UNDECIDED", best_gap, {},
                             {"reason": "no structural reduction; best swept gap",
                              "best_gap": best_gap})


def _containment_out_from_farkas(s1, s2, cert, config) -> MembershipVerdict:
    hlist, z = cert["H"], cert["Z"]
    raw = SupportFunctional(s1.tuple.n, tuple(hlist), s1.selfadjoint)
    scale = raw.dual_norm() or 1.0
    hfun = raw.scaled(1.0 / scale)
    return MembershipVerdict(
        "OUT", cert["pairing"] / scale,
        {"kind": "farkas_functional", "H": list(hfun.entries), "Z": cert["Z"] / scale,
         "margin": cert["pairing"] / scale, "n": s2.tuple.n, "m": s1.tuple.n,
         "rule": "generators of the first range escape the second"})


@dataclass
class ScaleBounds:
    """Certified lower/upper bounds on an inclusion scaling constant."""

    lower: float
    upper: float
    target_name: str = "inclusion"
    lower_witness: dict = field(default_factory=dict)
    upper_witness: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lower > self.upper + 1e-6:
            raise SoundnessViolation(
                f"scale bounds crossed: {self.lower} > {self.upper}")

    def to_json(self):
        return {"target": self.target_name, "lower": self.lower,
                "upper": None if np.isinf(self.upper) else self.upper,
                "lower_witness": _cert_json(self.lower_witness),
                "upper_witness": _cert_json(self.upper_witness),
                "diagnostics": _diag_json(self.diagnostics)}


def inclusion_scale(s1: st.FreeConvexSet, s2: st.FreeConvexSet,
                    config: RunConfig = DEFAULT) -> ScaleBounds:
    """Smallest r with s1 inside r * s2 (certified bounds)."""
    st.ensure_bounded(s1, config)
    st.ensure_bounded(s2, config)
    g2 = st.geometry(s2, config)
    if not g2.zero_interior:
        raise st.UnboundedSetError("inclusion scaling needs 0 interior to the "
                                   "target level-one set")
    if isinstance(s1, st.Scaled):
        inner = inclusion_scale(s1.base, s2, config)
        return ScaleBounds(inner.lower * s1.r, inner.upper * s1.r, "inclusion",
                           {"kind": "scaled", "r": s1.r, "base": inner.lower_witness},
                           {"kind": "scaled", "r": s1.r, "base": inner.upper_witness})
    if isinstance(s2, st.Scaled):
        inner = inclusion_scale(s1, s2.base, config)
        return ScaleBounds(inner.lower / s2.r, inner.upper / s2.r, "inclusion",
                           {"kind": "scaled", "r": 1 / s2.r, "base": inner.lower_witness},
                           {"kind": "scaled", "r": 1 / s2.r, "base": inner.upper_witness})
    if st.structural_eq(s1, s2):
        return ScaleBounds(1.0, 1.0, "inclusion",
                           {"kind": "structural", "rule": "identical trees"},
                           {"kind": "structural", "rule": "identical trees"})
    if isinstance(s1, st.MatrixRange) and isinstance(s2, st.MatrixRange):
        cstar, j = prog.range_in_scaled_range(
            s2.sa_generators(), s2.tuple.n, s1.sa_generators(), s1.tuple.n, config)
        if cstar is None:
            raise RuntimeError(f"inclusion scale solve failed: {j.diagnostics}")
        if cstar <= 1e-12:
            return ScaleBounds(0.0, np.inf, "inclusion",
                               {}, {}, {"reason": "no positive scaling found"})
        r = 1.0 / cstar
        wit = {"kind": "choi_scaling", "choi": j, "c": cstar,
               "n": s2.tuple.n, "m": s1.tuple.n}
        return ScaleBounds(r * (1 - 1e-9), r, "inclusion",
                           {"kind": "sdp_optimal", "gap_note": "interior point",
                            **{"c": cstar}}, wit)
    if isinstance(s1, st.MatrixRange) and isinstance(s2, st.FreeSpectrahedron):
        top = la.eig_max(sum(la.kron(g, p) for g, p in
                             zip(s1.sa_generators(), s2.pencil_coeffs())))
        r = max(top, 0.0)
        wit = {"kind": "pencil_scale", "top_eig": top}
        return ScaleBounds(r, r, "inclusion", wit, wit)
    if isinstance(s1, st.FreeSpectrahedron) and isinstance(s2, st.FreeSpectrahedron):
        inner = inclusion_scale(st.MatrixRange(s2.tuple), st.MatrixRange(s1.tuple),
                                config)
        inner.diagnostics["rule"] = "polar swap"
        return inner
    # general: swept lower bound; upper only from structure
    lo, lo_wit = 1e-12, {}
    for m in range(1, config.budget.level_cap + 1):
        def ratio_fn(h):
            v1 = support(s1, h, config)
            v2 = support(s2, h, config)
            if v2.hi <= config.tol.verdict:
                return -np.inf, None
            grad = None
            if v1.achiever is not None:
                grad = v1.achiever.sa_view()
            return v1.lo / v2.hi, grad
        val, h = sweep_maximize(ratio_fn, s1.sa_dim, m, s1.selfadjoint, config,
                                salt=211 + m)
        if val > lo and h is not None:
            v1 = support(s1, h, config)
            v2 = support(s2, h, config)
            lo = val
            lo_wit = {"kind": "support_ratio", "level": m, "H": list(h.entries),
                      "inner_value": v1.lo, "outer_bound": v2.hi}
    up, up_wit = np.inf, {"kind": "unbounded_flag"}
    cont = contains(s1, s2, config)
    if cont.verdict == "IN":
        up, up_wit = 1.0, {"kind": "containment", "base": cont.certificate}
        lo = min(lo, up)
    return ScaleBounds(max(lo, 0.0), up, "inclusion", lo_wit, up_wit)


def hausdorff(s1: st.FreeConvexSet, s2: st.FreeConvexSet,
              config: RunConfig = DEFAULT) -> tuple[float, float]:
    """Certified (lower, upper) bounds on the graded Hausdorff distance.

    Lower bounds come from support gaps against dual-unit functionals over
    levels up to the cap; upper bounds from certified scaling sandwiches.
    """
    if s1.sa_dim != s2.sa_dim:
        raise la.ShapeMismatchError("hausdorff needs equal coordinate counts")
    if st.structural_eq(s1, s2):
        return 0.0, 0.0
    lo = 0.0
    for m in range(1, config.budget.level_cap + 1):
        def gap_fn(h):
            v1 = support(s1, h, config)
            v2 = support(s2, h, config)
            g = max(v1.lo - v2.hi, v2.lo - v1.hi)
            grad = None
            if v1.achiever is not None and v2.achiever is not None:
                a1, a2 = v1.achiever.sa_view(), v2.achiever.sa_view()
                sign = 1.0 if (v1.lo - v2.hi) >= (v2.lo - v1.hi) else -1.0
                grad = [sign * (p - q) for p, q in zip(a1, a2)]
            return g, grad
        val, _ = sweep_maximize(gap_fn, s1.sa_dim, m, s1.selfadjoint, config,
                                salt=307 + m)
        lo = max(lo, val)
    up = np.inf
    try:
        r12 = inclusion_scale(s1, s2, config)
        r21 = inclusion_scale(s2, s1, config)
        if np.isfinite(r12.upper) and np.isfinite(r21.upper):
            a = 1.0 / r21.upper
            b = r12.upper
            mbound = max(st.tuple_norm_bound(s1, config),
                         st.tuple_norm_bound(s2, config))
            up = mbound * max(abs(1.0 / a - 1.0), abs(b - 1.0))
    except (st.UnboundedSetError, RuntimeError):
        pass
    return max(lo, 0.0), up


def plot_level1(s: st.FreeConvexSet, resolution: int = 360,
                coords: tuple[int, int] = (0, 1),
                config: RunConfig = DEFAULT) -> np.ndarray:
    """Support-sweep polygon of a 2D coordinate projection of level one."""
    st.ensure_bounded(s, config)
    dim = s.sa_dim
    i, j = coords
    if not (0 <= i < dim and 0 <= j < dim and i != j):
        raise ValueError("coords must be two distinct sa-coordinate indices")
    ts = np.linspace(0, 2 * np.pi, resolution, endpoint=False)
    net = np.zeros((resolution, dim))
    net[:, i] = np.cos(ts)
    net[:, j] = np.sin(ts)
    vals = np.array([st.level1_support(s, u, config)[0] for u in net])
    verts2d = st._polygon_from_lines(net[:, [i, j]], vals)
    return verts2d
