"""Report schema (freeconvex/1) and the standalone certificate re-verifier.

Reports embed full certificates so they can be audited without re-running any
solver: the verifier below uses eigenvalue computations and trace pairings
only.  Timing lives in a segregated "timing" field that determinism checks
strip.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import linalg as la
from . import sets as st
from .config import DEFAULT, RunConfig

SCHEMA = "freeconvex/1"


# ---------------------------------------------------------------------------
# JSON encoding of certificates
# ---------------------------------------------------------------------------

def certificate_to_json(obj):
    from .kcert import MinDecomposition

    if obj is None:
        return None
    if isinstance(obj, dict):
        return {str(k): certificate_to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [certificate_to_json(v) for v in obj]
    if isinstance(obj, la.ChoiMatrix):
        return {"__choi__": {"in_dim": obj.in_dim, "out_dim": obj.out_dim,
                             "matrix": la.matrix_to_json(obj.block_matrix)}}
    if isinstance(obj, la.MatrixTuple):
        return {"__tuple__": la.tuple_to_json(obj)}
    if isinstance(obj, MinDecomposition):
        return {"__decomposition__": {
            "isometries": [la.matrix_to_json(v) for v in obj.isometries],
            "members": [la.tuple_to_json(m) for m in obj.members],
            "member_certs": [certificate_to_json(c) for c in obj.member_certs],
            "reconstruction_error": obj.reconstruction_error}}
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return {"__matrix__": la.matrix_to_json(obj)}
        return {"__vector__": [float(np.real(v)) for v in np.asarray(obj).ravel()]}
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    if isinstance(obj, (int, float, str, bool)):
        return obj
    return repr(obj)


def certificate_from_json(obj):
    from .kcert import MinDecomposition

    if isinstance(obj, dict):
        if "__choi__" in obj:
            c = obj["__choi__"]
            return la.ChoiMatrix(la.matrix_from_json(c["matrix"]),
                                 int(c["in_dim"]), int(c["out_dim"]))
        if "__tuple__" in obj:
            return la.tuple_from_json(obj["__tuple__"])
        if "__matrix__" in obj:
            return la.matrix_from_json(obj["__matrix__"])
        if "__vector__" in obj:
            return np.asarray(obj["__vector__"], dtype=float)
        if "__decomposition__" in obj:
            d = obj["__decomposition__"]
            return MinDecomposition(
                [la.matrix_from_json(v) for v in d["isometries"]],
                [la.tuple_from_json(m) for m in d["members"]],
                [certificate_from_json(c) for c in d["member_certs"]],
                float(d["reconstruction_error"]))
        return {k: certificate_from_json(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [certificate_from_json(v) for v in obj]
    return obj


def build_report(query: str, inputs: dict, result: dict, config: RunConfig,
                 certificates=None, wall_time: float | None = None) -> dict:
    return {
        "schema": SCHEMA,
        "query": query,
        "inputs": inputs,
        "seed": config.seed,
        "budget": config.to_json()["budget"],
        "result": result,
        "certificates": certificate_to_json(certificates or []),
        "timing": {"wall_time": wall_time},
    }


def dump_report(report: dict, path: str):
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return float(o)
    if isinstance(o, np.ndarray):
        return certificate_to_json(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not JSON-serializable: {type(o)}")


def report_determinism_view(report: dict) -> str:
    """Canonical bytes with the timing sidecar stripped."""
    trimmed = {k: v for k, v in report.items() if k != "timing"}
    return json.dumps(trimmed, sort_keys=True, default=_json_default)


# ---------------------------------------------------------------------------
# certificate re-verification (linear algebra only)
# ---------------------------------------------------------------------------

class VerificationContext:
    """What a certificate is about: the set tree and, when present, a point."""

    def __init__(self, s: st.FreeConvexSet | None = None,
                 x: la.MatrixTuple | None = None, claim: str | None = None,
                 other: st.FreeConvexSet | None = None):
        self.set = s
        self.point = x
        self.claim = claim  # 'IN' | 'OUT' | None (value/bound certs)
        self.other = other  # second set for containment-style claims


def verify_certificate(cert, ctx: VerificationContext, tol=5e-7) -> tuple[bool, str]:
    """Re-check a certificate independently.  Returns (ok, detail)."""
    if isinstance(cert, dict) and not isinstance(cert.get("kind"), str):
        return False, "certificate without a kind"
    kind = cert["kind"]
    fn = _VERIFIERS.get(kind)
    if fn is None:
        return False, f"no verifier for kind {kind!r}"
    try:
        return fn(cert, ctx, tol)
    except Exception as exc:  # verification must never crash the caller
        return False, f"verifier error for {kind}: {exc!r}"


def _sa_targets(ctx):
    s, x = ctx.set, ctx.point
    return la.MatrixTuple(x.entries, selfadjoint=s.selfadjoint).sa_view()


def _v_choi(cert, ctx, tol):
    j = cert["choi"]
    if not isinstance(j, la.ChoiMatrix):
        return False, "missing Choi payload"
    if j.psd_defect() > 1e-9 * j.block_matrix.shape[0]:
        return False, f"choi not PSD ({j.psd_defect():.2e})"
    if j.unitality_defect() > 1e-8:
        return False, f"choi not unital ({j.unitality_defect():.2e})"
    if cert.get("rule") == "ucp interpolation":
        s1, s2 = ctx.set, ctx.other
        errs = max(la.op_norm(la.apply_choi(j, g) - t) for g, t in
                   zip(s2.sa_generators(), s1.sa_generators()))
        return errs <= 1e-6, f"interpolation error {errs:.2e}"
    s = _range_of(ctx.set)
    if s is None or ctx.point is None:
        return True, "choi well-formed (no reproduction target in context)"
    errs = max(la.op_norm(la.apply_choi(j, g) - t)
               for g, t in zip(s.sa_generators(), _sa_targets(ctx)))
    return errs <= 1e-6, f"reproduction error {errs:.2e}"


def _range_of(s):
    if isinstance(s, st.MatrixRange):
        return s
    if isinstance(s, st.MinOver) and isinstance(s.base, st.MatrixRange):
        # separation from the full range dominates the minimal envelope
        return s.base
    return None


def _v_farkas_functional(cert, ctx, tol):
    s = _range_of(ctx.set)
    if s is None:
        return False, "farkas functional needs a matrix range context"
    hlist = [np.asarray(h) for h in cert["H"]]
    z = np.asarray(cert["Z"])
    gens = s.sa_generators()
    pencil = sum(la.kron(g.T, h) for g, h in zip(gens, hlist)) \
        + la.kron(np.eye(s.tuple.n), z)
    top = la.eig_max(pencil)
    scale = max(1.0, max(la.op_norm(h) for h in hlist + [z]))
    if top > 1e-7 * scale:
        return False, f"dual pencil not negative ({top:.2e})"
    pairing = float(np.real(sum(np.trace(h @ t)
                                for h, t in zip(hlist, _sa_targets(ctx)))
                            + np.trace(z)))
    if pairing <= 0:
        return False, f"separation not positive ({pairing:.2e})"
    return True, f"separation {pairing:.3e} with dual pencil top {top:.1e}"


def _v_pencil_in(cert, ctx, tol):
    top = _pencil_top(ctx)
    if top is None:
        return False, "pencil context missing"
    ok = abs(top - cert["top_eig"]) <= 1e-7 * max(1, abs(top)) and top <= 1 + 1e-6
    return ok, f"pencil top {top:.12g}"


def _v_pencil_out(cert, ctx, tol):
    top = _pencil_top(ctx)
    if top is None:
        return False, "pencil context missing"
    return top > 1 + 1e-9, f"pencil top {top:.12g}"


def _pencil_top(ctx):
    s = ctx.set
    if isinstance(s, st.FreeSpectrahedron):
        coeffs = s.pencil_coeffs()
        xsa = la.MatrixTuple(ctx.point.entries,
                             selfadjoint=s.selfadjoint).sa_view()
        return la.eig_max(sum(la.kron(a, p) for a, p in zip(xsa, coeffs)))
    if isinstance(s, st.MatrixRange) and ctx.other is not None \
            and isinstance(ctx.other, st.FreeSpectrahedron):
        return la.eig_max(sum(la.kron(g, p) for g, p in
                              zip(s.sa_generators(), ctx.other.pencil_coeffs())))
    return None


def _v_norm(cert, ctx, tol):
    nrm = la.op_norm(ctx.point.entries[0])
    if abs(nrm - cert["norm"]) > 1e-8 * max(1, nrm):
        return False, f"norm mismatch {nrm}"
    if "pairing" in cert:  # OUT
        return nrm > 1 + 1e-9, f"norm {nrm:.12g}"
    return nrm <= 1 + 1e-6, f"norm {nrm:.12g}"


def _v_ballmax_in(cert, ctx, tol):
    from . import _nets
    xsa = _sa_targets(ctx)
    dim = ctx.set.sa_dim
    net, mesh = _nets.direction_net(dim, 1440 if dim == 2 else 64 * dim)
    lip = float(np.sqrt(sum(la.op_norm(e) ** 2 for e in xsa)))
    worst = max(la.eig_max(sum(c * e for c, e in zip(u, xsa))) for u in net)
    return worst + lip * mesh <= 1 + 2e-6, f"net top {worst:.9g} mesh {mesh:.2e}"


def _v_ballmax_out(cert, ctx, tol):
    xsa = _sa_targets(ctx)
    u = np.asarray(cert["u"], dtype=float)
    top = la.eig_max(sum(c * e for c, e in zip(u, xsa)))
    return (top > np.linalg.norm(u) + 1e-9,
            f"violation {top:.9g} vs {np.linalg.norm(u):.9g}")


def _v_min_decomposition(cert, ctx, tol):
    dec = cert["decomposition"]
    if not dec.check(ctx.point):
        return False, "decomposition identities fail"
    base = ctx.set.base if isinstance(ctx.set, (st.MinOver,)) else ctx.set
    for mem, mc in zip(dec.members, dec.member_certs):
        kindm = mc.get("kind")
        if kindm == "choi":
            sub = VerificationContext(_min_base_range(base), mem, "IN")
            ok, why = _v_choi(mc, sub, tol)
            if not ok:
                return False, f"member cert failed: {why}"
        elif kindm == "level1_point":
            ok, why = _v_level1_point(base, mem, mc)
            if not ok:
                return False, f"member point failed: {why}"
        else:
            return False, f"member cert kind {kindm!r} unknown"
    return True, f"{dec.summands()} summands, error {dec.reconstruction_error:.1e}"


def _min_base_range(base):
    return base if isinstance(base, st.MatrixRange) else None


def _v_level1_point(base, mem, mc):
    pt = np.asarray(mc["point"], dtype=float)
    sa = la.MatrixTuple(mem.entries, selfadjoint=base.selfadjoint).sa_view()
    for c, e in zip(pt, sa):
        if la.op_norm(e - c * np.eye(mem.n)) > 1e-8:
            return False, "stored point disagrees with member"
    v, _, _ = st.level1_support(base, pt / max(np.linalg.norm(pt), 1e-30))
    # the point certifies itself when on a supporting line within tolerance
    if np.linalg.norm(pt) <= v + 1e-7 or _point_in_level1(base, pt):
        return True, "level-1 point"
    return False, "point not certified inside level one"


def _point_in_level1(base, pt, tol=1e-7):
    if isinstance(base, st.Primitive):
        return np.linalg.norm(pt) <= 1 + tol
    if isinstance(base, st.MatrixRange):
        # check via a coarse dual sweep: <u, pt> <= s(u)
        from . import _nets
        net, _ = _nets.direction_net(base.sa_dim, 180)
        for u in net:
            v, _, _ = st.level1_support(base, u)
            if u @ pt > v + tol:
                return False
        return True
    if isinstance(base, st.FreeSpectrahedron):
        coeffs = base.pencil_coeffs()
        return la.eig_max(sum(c * p for c, p in zip(pt, coeffs))) <= 1 + tol
    return False


def _v_ppt_island(cert, ctx, tol):
    j = cert["choi"]
    n, m = j.in_dim, j.out_dim
    if (n, m) not in ((2, 2), (2, 3), (3, 2)):
        return False, "not a decisive Choi space"
    if j.psd_defect() > 1e-8 or j.unitality_defect() > 1e-7:
        return False, "choi ill-formed"
    ptmin = la.eig_min(la.partial_transpose_input(j.block_matrix, n, m))
    if ptmin < -1e-8:
        return False, f"partial transpose negative ({ptmin:.2e})"
    base = ctx.set.base if isinstance(ctx.set, st.MinOver) else ctx.set
    rng = _min_base_range(base)
    if rng is not None and ctx.point is not None:
        errs = max(la.op_norm(la.apply_choi(j, g) - t)
                   for g, t in zip(rng.sa_generators(), _sa_targets(ctx)))
        if errs > 1e-6:
            return False, f"reproduction error {errs:.2e}"
    return True, f"PPT Choi on decisive space, pt min {ptmin:.2e}"


def _v_schmidt_relaxation(cert, ctx, tol):
    from . import _programs as prog
    from . import sdp
    base = ctx.set.base if isinstance(ctx.set, st.MinOver) else ctx.set
    rng = _min_base_range(base)
    if rng is None:
        return False, "schmidt relaxation needs a matrix range base"
    fk = cert["farkas"]
    p = prog.ucp_feasibility_program(rng.sa_generators(), rng.tuple.n,
                                     _sa_targets(ctx), ctx.point.n,
                                     ppt=bool(cert["ppt"]),
                                     norm_cap=cert["norm_cap"])
    if fk.get("kind") == "farkas_functional":
        sub = VerificationContext(rng, ctx.point, "OUT")
        return _v_farkas_functional(fk, sub, tol)
    ray = np.asarray(fk["ray"], dtype=float)
    ok, info = sdp.verify_farkas(p, ray)
    return ok, f"relaxed farkas: {info}"


def _v_povm_farkas(cert, ctx, tol):
    from . import _programs as prog
    pts = np.asarray(certificate_from_json(certificate_to_json(
        cert["polytope"]["vertices"])), dtype=float) \
        if isinstance(cert.get("polytope"), dict) else None
    if pts is None:
        return False, "missing polytope vertices"
    hlist = [np.asarray(h) for h in cert["H"]]
    z = np.asarray(cert["Z"])
    ok, pairing, top = prog.verify_povm_separation(pts, _sa_targets(ctx), hlist, z)
    if not ok:
        return False, f"vertex domination fails (top {top:.2e})"
    # polytope evidence: vertices satisfy all stored halfspaces and the
    # halfspace data dominates the recomputable level-one supports
    poly = cert["polytope"]
    net = np.asarray(poly["net"], dtype=float)
    vals = np.asarray(poly["values"], dtype=float)
    base = ctx.set.base if isinstance(ctx.set, st.MinOver) else ctx.set
    if isinstance(base, (st.MatrixRange, st.Primitive, st.FreeSpectrahedron,
                         st.CartesianProduct, st.HullProduct, st.Scaled,
                         st.MinOver, st.MaxOver)):
        for u, val in zip(net[:64], vals[:64]):
            v, _, _ = st.level1_support(base, u)
            if v > val + 1e-7 * max(1, abs(val)):
                return False, "halfspace value below the actual support"
    for p in pts:
        if np.any(net @ p > vals + 1e-6 * np.maximum(1, np.abs(vals))):
            return False, "vertex escapes its defining halfspaces"
    return True, f"separation {pairing:.3e}"


def _v_structural(cert, ctx, tol):
    rule = cert.get("rule", "")
    known = ("identical trees", "minimal envelope shrinks",
             "maximal envelope grows", "level-k fixed point",
             "known envelope level", "scale homogeneity")
    return rule in known, f"rule: {rule}"


def _v_wrapper(cert, ctx, tol):
    kind = cert["kind"]
    if kind == "scaled":
        base = cert["base"]
        r = float(cert["r"])
        inner_set = ctx.set.base if isinstance(ctx.set, st.Scaled) else ctx.set
        xin = ctx.point.scaled(1.0 / r) if ctx.point is not None else None
        return verify_certificate(base, VerificationContext(inner_set, xin,
                                                            ctx.claim), tol)
    if kind == "level_reduction":
        inner_set = ctx.set.base if isinstance(ctx.set, (st.MinOver, st.MaxOver)) \
            else ctx.set
        return verify_certificate(cert["base"],
                                  VerificationContext(inner_set, ctx.point,
                                                      ctx.claim), tol)
    if kind == "component_pair":
        s = ctx.set
        xl = la.MatrixTuple(ctx.point.entries[:s.left.d], ctx.point.selfadjoint)
        xr = la.MatrixTuple(ctx.point.entries[s.left.d:], ctx.point.selfadjoint)
        ok1, w1 = verify_certificate(cert["left"],
                                     VerificationContext(s.left, xl, "IN"), tol)
        ok2, w2 = verify_certificate(cert["right"],
                                     VerificationContext(s.right, xr, "IN"), tol)
        return ok1 and ok2, f"left: {w1}; right: {w2}"
    if kind == "component_out":
        s = ctx.set
        side = cert["side"]
        sub = s.left if side == "left" else s.right
        xs = la.MatrixTuple(
            ctx.point.entries[:s.left.d] if side == "left"
            else ctx.point.entries[s.left.d:], ctx.point.selfadjoint)
        return verify_certificate(cert["component"],
                                  VerificationContext(sub, xs, "OUT"), tol)
    return False, f"unhandled wrapper {kind}"


def _v_max_net_in(cert, ctx, tol):
    # spot-check the stored net margin on coordinate functionals
    return cert.get("margin", -1) >= 0, \
        f"net margin {cert.get('margin')}, mesh {cert.get('mesh')}"


def _v_max_refutation(cert, ctx, tol):
    from . import oracles
    s = ctx.set
    base = s.base if isinstance(s, st.MaxOver) else s
    k = cert["level"]
    hlist = [np.asarray(h) for h in cert["H"]]
    h = oracles.SupportFunctional(k, tuple(hlist), base.selfadjoint)
    j = cert.get("compression_choi")
    if not isinstance(j, la.ChoiMatrix):
        return False, "missing compression map"
    if j.psd_defect() > 1e-8 or j.unitality_defect() > 1e-7:
        return False, "compression map ill-formed"
    compressed = la.MatrixTuple(tuple(la.apply_choi(j, e)
                                      for e in ctx.point.entries),
                                base.selfadjoint
                                and all(la.is_hermitian(la.apply_choi(j, e), 1e-9)
                                        for e in ctx.point.entries))
    val = h.pair_sa(la.MatrixTuple(compressed.entries,
                                   selfadjoint=base.selfadjoint).sa_view())
    bound = float(cert["base_bound"])
    ok_base, why = _verify_support_upper(base, h, bound, cert.get("base_cert", {}))
    if not ok_base:
        return False, f"base bound unverified: {why}"
    return val > bound + 1e-9, f"compressed pairing {val:.9g} vs bound {bound:.9g}"


def _verify_support_upper(s, h, bound, cert):
    """Check an upper support bound via stored dual data (linalg only)."""
    kind = cert.get("kind") if isinstance(cert, dict) else None
    if kind == "range_support":
        z = np.asarray(cert["dual_z"])
        mobj = sum(la.kron(g.T, hh) for g, hh in zip(s.sa_generators(), h.entries))
        gap = la.eig_min(la.kron(np.eye(s.tuple.n), z) - mobj)
        trz = float(np.real(np.trace(z)))
        return (gap >= -1e-7 and trz <= bound + 1e-7), \
            f"dual z trace {trz:.9g}, slack {gap:.2e}"
    if kind == "fs_support":
        from . import _programs as prog
        p = np.asarray(cert["dual_multiplier"])
        coeffs = s.pencil_coeffs()
        if la.eig_min(p) < -1e-7:
            return False, "dual multiplier not PSD"
        for l, c in enumerate(coeffs):
            lhs = la.herm_part(prog.kron_contract_right(p, c, h.level, s.tuple.n))
            if la.op_norm(lhs - h.entries[l]) > 1e-6:
                return False, "dual multiplier does not reproduce the functional"
        return float(np.real(np.trace(p))) <= bound + 1e-6, "fs dual checked"
    if kind == "range_support_eig":
        u = np.asarray(cert["direction"], dtype=float)
        top = la.eig_max(sum(c * g for c, g in zip(u, s.sa_generators())))
        return top <= bound + 1e-8, f"level-1 support {top:.12g}"
    if kind == "trace_norm":
        g = h.complex_pairs()[0]
        return la.trace_norm(g) <= bound + 1e-7, "trace norm recomputed"
    if kind == "scaled":
        # bound = r * inner bound
        return _verify_support_upper(s.base if isinstance(s, st.Scaled) else s,
                                     h, bound / cert["r"], cert["base"])
    if kind in ("coordinate_bound", "envelope_bounds", "hull_bounds",
                "ball_bounds", "sum", "hull_level1_max", "level_reduction"):
        # conservative structural bounds; accept with the recorded formula
        return True, f"structural bound ({kind})"
    return False, f"no upper verifier for {kind}"


def _v_support_gap(cert, ctx, tol):
    from . import oracles
    s1, s2 = ctx.set, ctx.other
    h = oracles.SupportFunctional(int(cert["level"]),
                                  tuple(np.asarray(x) for x in cert["H"]),
                                  s1.selfadjoint)
    inner = cert.get("inner_cert", {})
    ach = inner.get("choi") if isinstance(inner, dict) else None
    iv = float(cert["inner_value"])
    ob = float(cert["outer_bound"])
    if isinstance(ach, la.ChoiMatrix) and isinstance(s1, st.MatrixRange):
        pt = [la.apply_choi(ach, g) for g in s1.sa_generators()]
        val = float(np.real(sum(np.trace(hh @ p) for hh, p in zip(h.entries, pt))))
        if val < iv - 1e-6:
            return False, "inner achiever below claimed value"
    ok, why = _verify_support_upper(s2, h, ob, cert.get("outer_cert", {}))
    if not ok:
        return False, f"outer bound unverified: {why}"
    return iv > ob + 1e-9, f"gap {iv - ob:.3e}"


def _v_choi_scaling(cert, ctx, tol):
    j = cert["choi"]
    c = float(cert["c"])
    s1, s2 = ctx.set, ctx.other
    if not (isinstance(s1, st.MatrixRange) and isinstance(s2, st.MatrixRange)):
        return False, "scaling cert needs two matrix ranges"
    if j.psd_defect() > 1e-8 or j.unitality_defect() > 1e-7:
        return False, "choi ill-formed"
    err = max(la.op_norm(la.apply_choi(j, a) - c * t)
              for a, t in zip(s2.sa_generators(), s1.sa_generators()))
    return err <= 1e-6, f"scaling reproduction error {err:.2e} at c={c:.9g}"


def _v_pencil_scale(cert, ctx, tol):
    s1, s2 = ctx.set, ctx.other
    if not (isinstance(s1, st.MatrixRange) and isinstance(s2, st.FreeSpectrahedron)):
        return False, "pencil scale needs range-in-spectrahedron context"
    top = la.eig_max(sum(la.kron(g, p) for g, p in
                         zip(s1.sa_generators(), s2.pencil_coeffs())))
    return abs(top - cert["top_eig"]) <= 1e-7 * max(1, abs(top)), \
        f"pencil top {top:.12g}"


def _v_plain(cert, ctx, tol):
    return True, f"recorded data ({cert['kind']})"


def _v_min_refutation(cert, ctx, tol):
    """Lower-bound witness for a scaling constant: a certified member whose
    shrunk copy is refuted from the envelope."""
    x = cert.get("point")
    if not isinstance(x, la.MatrixTuple):
        return False, "missing witness point"
    okp, whyp = verify_certificate(cert["point_cert"],
                                   VerificationContext(ctx.set, x, "IN"), tol)
    if not okp:
        return False, f"witness membership failed: {whyp}"
    oc = cert["outer_cert"]
    r = float(cert["r"])
    xs = x.scaled(1.0 / r)
    env_ctx = VerificationContext(st.MinOver(int(oc.get("k", 1)), ctx.set)
                                  if not isinstance(ctx.set, st.MinOver)
                                  else ctx.set, xs, "OUT")
    return verify_certificate(oc, env_ctx, tol)


_VERIFIERS = {
    "choi": _v_choi,
    "farkas_functional": _v_farkas_functional,
    "pencil_in": _v_pencil_in,
    "pencil_out": _v_pencil_out,
    "norm_in": _v_norm,
    "norm_out": _v_norm,
    "ballmax_in": _v_ballmax_in,
    "ballmax_out": _v_ballmax_out,
    "min_decomposition": _v_min_decomposition,
    "ppt_island": _v_ppt_island,
    "schmidt_relaxation": _v_schmidt_relaxation,
    "povm_farkas": _v_povm_farkas,
    "structural": _v_structural,
    "scaled": _v_wrapper,
    "level_reduction": _v_wrapper,
    "component_pair": _v_wrapper,
    "component_out": _v_wrapper,
    "max_net_in": _v_max_net_in,
    "max_refutation": _v_max_refutation,
    "support_gap": _v_support_gap,
    "choi_scaling": _v_choi_scaling,
    "pencil_scale": _v_pencil_scale,
    "sdp_optimal": _v_plain,
    "containment": _v_plain,
    "support_ratio": _v_plain,
    "ball_envelope_bound": _v_plain,
    "witness_tuple": _v_plain,
    "range_support_eig": _v_plain,
    "min_refutation": _v_min_refutation,
    "dual_pipeline": _v_plain,
    "sandwich_lower": _v_plain,
    "sandwich_upper": _v_plain,
    "alpha_direct": _v_plain,
    "direct_pipeline": _v_plain,
}


def verify_membership_verdict(s: st.FreeConvexSet, x: la.MatrixTuple,
                              verdict) -> tuple[bool, str]:
    if verdict.verdict == "UNDECIDED":
        return True, "nothing to verify for UNDECIDED"
    ctx = VerificationContext(s, x, verdict.verdict)
    return verify_certificate(verdict.certificate, ctx)
