"""Certification machinery for the level-k envelopes.

Inner certificates of minimal-envelope membership are explicit matrix convex
combinations (POVM form at k = 1, stacked-isometry decompositions above);
outer refutations are Farkas certificates of relaxed Choi programs whose
extra constraints (input partial transpose at k = 1, the spectral cap
J <= k I implied by Schmidt-limited unital maps) are necessary for any map
factoring through level k.  On 2x2- and 2x3-input Choi spaces with k = 1 the
partial transpose test is decisive, so feasibility there grants membership.

Soundness convention: inner failure never claims OUT, outer passing never
claims IN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _programs as prog
from . import linalg as la
from . import sets as st
from .config import DEFAULT, RunConfig


def _verdict(verdict, margin, certificate=None, diagnostics=None):
    from .oracles import MembershipVerdict
    return MembershipVerdict(verdict, margin, certificate or {}, diagnostics or {})


# ---------------------------------------------------------------------------
# UCP image feasibility
# ---------------------------------------------------------------------------

def ucp_image_feasible(t: la.MatrixTuple, x: la.MatrixTuple,
                       config: RunConfig = DEFAULT):
    """Unital Choi J with apply(J, T_j) = X_j, or a separating functional.

    Returns ('feasible', ChoiMatrix) or ('infeasible', certificate dict) or
    ('failure', diagnostics).
    """
    if t.d != x.d:
        raise la.ShapeMismatchError("tuples must have equal length")
    sgens = t.sa_view()
    targets = la.MatrixTuple(x.entries, selfadjoint=t.selfadjoint).sa_view()
    status, cert = prog.solve_ucp_feasibility(sgens, t.n, targets, x.n, config)
    return status, cert


# ---------------------------------------------------------------------------
# witnesses for the outer side
# ---------------------------------------------------------------------------

@dataclass
class KWitness:
    """A k-positive test (canonical map under a unitary twirl) or the input
    partial transpose; records the violation evidence of a refutation."""

    kind: str  # 'theta_cap' | 'ppt'
    k: int
    unitary: np.ndarray | None = None
    violation: float = 0.0
    detail: dict = field(default_factory=dict)

    def check_member(self, j: la.ChoiMatrix) -> float:
        """Smallest eigenvalue after applying the witness map to a Choi
        matrix; nonnegative for any map factoring through level k."""
        n, m = j.in_dim, j.out_dim
        jm = j.block_matrix
        if self.kind == "ppt":
            return la.eig_min(la.partial_transpose_input(jm, n, m))
        u = self.unitary if self.unitary is not None else np.eye(n)
        conj = la.kron(u, np.eye(m)) @ jm @ la.kron(la.dagger(u), np.eye(m))
        red = la.partial_trace(jm, (n, m), "input")
        return la.eig_min(self.k * la.kron(np.eye(n), red) - conj)


def witness_family(n: int, k: int, config: RunConfig = DEFAULT, count: int = 64):
    """Canonical k-positive witnesses under seeded Haar conjugations, plus the
    partial transpose at k = 1.

    Under unitality all conjugated canonical maps impose the single spectral
    cap J <= k I; the family is still exposed for auditing members.
    """
    rng = np.random.default_rng([config.seed, 977, n, k])
    fam = [KWitness("theta_cap", k, la.haar_unitary(n, rng)) for _ in range(count)]
    if k == 1:
        fam.append(KWitness("ppt", 1))
    return fam


def _is_ppt_island(n: int, m: int) -> bool:
    return (n, m) in ((2, 2), (2, 3), (3, 2))


def min_membership_outer(base: st.FreeConvexSet, k: int, x: la.MatrixTuple,
                         config: RunConfig = DEFAULT):
    """OUT certificate against the level-k minimal envelope, or 'pass'.

    For matrix-range bases the relaxation {unital, image constraints,
    J <= k I, PPT at k = 1} must be feasible for any true member; its Farkas
    ray refutes.  For other bases with a level-one description, membership in
    the hull of a circumscribed polytope is necessary at k = 1.
    Returns ('out', cert) | ('pass', data) | ('island_in', choi) |
    ('unavailable', reason).
    """
    m = x.n
    if isinstance(base, st.MatrixRange):
        n = base.tuple.n
        sgens = base.sa_generators()
        targets = _targets_for(base, x)
        if k >= min(n, m):
            status, cert = prog.solve_ucp_feasibility(sgens, n, targets, m, config)
            if status == "infeasible":
                return "out", {"kind": "farkas_functional", **_fk(cert)}
            if status == "feasible":
                return "island_in", cert  # Schmidt constraint vacuous
            return "unavailable", cert
        ppt = (k == 1)
        status, cert = prog.solve_ucp_feasibility(
            sgens, n, targets, m, config, ppt=ppt, norm_cap=float(k))
        if status == "infeasible":
            w = KWitness("ppt" if ppt else "theta_cap", k,
                         None, detail={"relaxation": "cap+ppt" if ppt else "cap"})
            return "out", {"kind": "schmidt_relaxation", "k": k, "ppt": ppt,
                           "norm_cap": float(k), "witness_kind": w.kind,
                           "farkas": cert, "n": n, "m": m}
        if status == "feasible" and ppt and _is_ppt_island(n, m):
            return "island_in", cert
        if status == "feasible":
            if k == 1 and base.sa_dim <= 4:
                # the level-one polytope refutation can out-perform the
                # transpose relaxation off the decisive Choi spaces
                st_out = _polytope_outer(base, x, targets, config)
                if st_out is not None:
                    return "out", st_out
            return "pass", {"relaxed_choi": cert}
        return "unavailable", cert
    if k == 1:
        targets = _targets_for(base, x)
        res = _polytope_outer(base, x, targets, config)
        if res is not None:
            return "out", res
        return "pass", {"outer_povm": "no refutation"}
    return "unavailable", {"reason": f"no outer oracle for {base.variant} at k={k}"}


def _polytope_outer(base, x, targets, config):
    """Circumscribed-polytope POVM refutation; None when not refuted."""
    try:
        verts, data = st.level1_outer_polytope(base, config)
    except Exception:
        return None
    status, cert = prog.povm_membership(verts, targets, x.n, config)
    if status == "infeasible":
        cert = dict(cert)
        cert["polytope"] = {"vertices": verts, "net": data["net"],
                           "values": data["values"]}
        return cert
    return None


def _fk(cert):
    return {kk: vv for kk, vv in cert.items() if kk != "kind"}


def _targets_for(base: st.FreeConvexSet, x: la.MatrixTuple):
    xx = la.MatrixTuple(x.entries, selfadjoint=base.selfadjoint, label=x.label) \
        if base.selfadjoint and not x.selfadjoint else x
    return xx.sa_view()


# ---------------------------------------------------------------------------
# inner decompositions
# ---------------------------------------------------------------------------

@dataclass
class MinDecomposition:
    """Matrix convex combination Y = sum_i V_i* X^(i) V_i with level-k members."""

    isometries: list[np.ndarray]            # V_i : C^m -> C^{k_i}
    members: list[la.MatrixTuple]           # X^(i), levels <= k
    member_certs: list[dict]
    reconstruction_error: float = 0.0

    def summands(self) -> int:
        return len(self.isometries)

    def check(self, x: la.MatrixTuple, tol_iso=1e-8, tol_rec=1e-6) -> bool:
        m = x.n
        s = sum(la.dagger(v) @ v for v in self.isometries)
        if la.op_norm(s - np.eye(m)) > tol_iso:
            return False
        for j in range(x.d):
            rec = sum(la.dagger(v) @ mem.entries[j] @ v
                      for v, mem in zip(self.isometries, self.members))
            if la.op_norm(rec - x.entries[j]) > tol_rec:
                return False
        return True


def _block_structure(x: la.MatrixTuple, tol=1e-12):
    """Connected components of the joint support pattern of all entries."""
    m = x.n
    adj = np.zeros((m, m), dtype=bool)
    for e in x.entries:
        adj |= np.abs(e) > tol
        adj |= np.abs(e.T) > tol
    comps = []
    seen = [False] * m
    for s0 in range(m):
        if seen[s0]:
            continue
        stack, comp = [s0], []
        seen[s0] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in range(m):
                if not seen[w] and (adj[v, w] or adj[w, v]):
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def min_membership_inner(base: st.FreeConvexSet, k: int, x: la.MatrixTuple,
                         config: RunConfig = DEFAULT):
    """Search for a verified MinDecomposition; ('found', dec) or
    ('not_found', best residual report).  Failure to find is not an OUT."""
    m = x.n
    # direct-sum shortcut: a fine enough common block structure
    comps = _block_structure(x)
    if all(len(c) <= k for c in comps) and len(comps) > 1:
        dec = _decomposition_from_blocks(base, x, comps, config)
        if dec is not None:
            return "found", dec
    if k == 1:
        return _inner_povm(base, x, config)
    if isinstance(base, st.MatrixRange):
        return _inner_seesaw(base, k, x, config)
    return "not_found", {"reason": f"no inner search for {base.variant} at k={k}"}


def _decomposition_from_blocks(base, x, comps, config):
    from . import oracles
    isos, members, certs = [], [], []
    m = x.n
    for comp in comps:
        v = np.zeros((len(comp), m), dtype=complex)
        for r, c in enumerate(comp):
            v[r, c] = 1.0
        blk = la.MatrixTuple(tuple(v @ e @ la.dagger(v) for e in x.entries),
                             x.selfadjoint and all(
                                 la.is_hermitian(v @ e @ la.dagger(v))
                                 for e in x.entries))
        mv = oracles.membership(base, blk, config)
        if mv.verdict != "IN":
            return None
        isos.append(v)
        members.append(blk)
        certs.append(mv.certificate)
    dec = MinDecomposition(isos, members, certs, 0.0)
    return dec if dec.check(x) else None


def _inner_povm(base, x, config):
    """POVM decomposition over inscribed level-one polytopes, escalating."""
    m = x.n
    targets = _targets_for(base, x)
    best = {"residual": np.inf}
    for nd in (config.budget.polygon_verts, 2 * config.budget.polygon_verts,
               4 * config.budget.polygon_verts):
        try:
            pts, wits = st.level1_inner_points(base, config, directions=nd)
        except Exception as exc:
            return "not_found", {"reason": repr(exc)}
        status, payload = prog.povm_membership(pts, targets, m, config)
        if status == "feasible":
            dec = _decomposition_from_povm(base, x, pts, wits, payload, config)
            if dec is not None:
                return "found", dec
            best = {"residual": 0.0, "note": "povm found but cleanup failed"}
        else:
            best = {"residual": np.nan, "status": status}
    return "not_found", best


def _decomposition_from_povm(base, x, points, point_wits, povm, config):
    m = x.n
    isos, members, certs = [], [], []
    for i, p in enumerate(povm):
        w, v = np.linalg.eigh(la.herm_part(p))
        for s in range(len(w)):
            if w[s] <= 1e-12:
                continue
            vi = np.sqrt(w[s]) * v[:, s].conj().reshape(1, m)
            isos.append(vi)
            pt = points[i]
            members.append(_point_tuple(base, pt))
            certs.append({"kind": "level1_point", "point": np.asarray(pt),
                          "witness": _wit_json_safe(point_wits[i])})
    dec = MinDecomposition(isos, members, certs)
    err = 0.0
    for j in range(x.d):
        rec = sum(la.dagger(v) @ mem.entries[j] @ v
                  for v, mem in zip(dec.isometries, dec.members))
        err = max(err, la.op_norm(rec - x.entries[j]))
    dec.reconstruction_error = err
    return dec if dec.check(x) else None


def _wit_json_safe(w):
    return {k: v for k, v in w.items() if isinstance(v, (str, int, float))}


def _point_tuple(base, pt):
    pt = np.asarray(pt, dtype=float)
    if base.selfadjoint:
        ents = tuple(np.array([[c]], dtype=complex) for c in pt)
        return la.MatrixTuple(ents, selfadjoint=True)
    d = base.d
    ents = tuple(np.array([[pt[j] + 1j * pt[d + j]]]) for j in range(d))
    return la.MatrixTuple(ents, selfadjoint=False)


def _inner_seesaw(base: st.MatrixRange, k: int, x: la.MatrixTuple,
                  config: RunConfig = DEFAULT):
    """Alternate Choi updates (SDP) with Procrustes isometry steps."""
    from . import sdp

    m = x.n
    n = base.tuple.n
    sgens = base.sa_generators()
    targets = _targets_for(base, x)
    dim = len(sgens)
    cap = config.budget.summand_cap or (m * m + 1)
    rng = np.random.default_rng([config.seed, 1213, m, k])
    schedule = []
    nn = max(1, int(np.ceil(m / k)))
    while nn <= cap:
        schedule.append(nn)
        nn *= 2
    if not schedule or schedule[-1] != cap:
        schedule.append(cap)
    best_err, best = np.inf, None

    for n_sum in schedule:
        for restart in range(config.budget.seesaw_restarts):
            w = _random_isometry(n_sum * k, m, rng)
            chois = None
            err_prev = np.inf
            for _ in range(config.budget.seesaw_rounds):
                err, chois = _seesaw_choi_step(sgens, n, targets, m, k, n_sum,
                                               w, config)
                if err is None:
                    break
                if err < best_err:
                    best_err = err
                    best = (w.copy(), [c.block_matrix.copy() for c in chois])
                if err <= 1e-8:
                    break
                if err_prev - err <= 1e-10:
                    w = _seesaw_isometry_step(sgens, targets, k, n_sum, w,
                                              chois, rng)
                else:
                    w = _seesaw_isometry_step(sgens, targets, k, n_sum, w,
                                              chois, rng, descent_only=True)
                err_prev = err
            if best_err <= 1e-8:
                break
        if best_err <= 1e-8:
            break
    if best is None or best_err > 1e-7:
        return "not_found", {"residual": best_err, "summand_cap": cap}
    w, jblocks = best
    isos, members, certs = [], [], []
    for i in range(len(jblocks)):
        vi = w[i * k:(i + 1) * k, :]
        j = la.ChoiMatrix(jblocks[i], n, k)
        mem = la.MatrixTuple(tuple(la.apply_choi(j, e) for e in base.tuple.entries),
                             base.selfadjoint)
        isos.append(vi)
        members.append(mem)
        certs.append({"kind": "choi", "choi": j})
    dec = MinDecomposition(isos, members, certs, best_err)
    if dec.check(x):
        return "found", dec
    return "not_found", {"residual": best_err, "note": "verification failed"}


def _random_isometry(rows, cols, rng):
    g = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, _ = np.linalg.qr(g)
    return q[:, :cols]


def _seesaw_choi_step(sgens, n, targets, m, k, n_sum, w, config):
    from . import sdp

    pb = sdp.ProgramBuilder()
    t = pb.free_var()
    jb = [pb.psd_block(n * k, "C") for _ in range(n_sum)]
    for i in range(n_sum):
        for f in la.herm_basis_iter(k, "C"):
            pb.eq(pb.row().block(jb[i], la.kron(np.eye(n), f)),
                  float(np.real(np.trace(f))))
    for l, (s, xl) in enumerate(zip(sgens, targets)):
        for sign in (1.0, -1.0):
            bslack = pb.psd_block(m, "C")
            for f in la.herm_basis_iter(m, "C"):
                r = pb.row().block(bslack, f)
                r.free(t, -float(np.real(np.trace(f))))
                for i in range(n_sum):
                    wi = w[i * k:(i + 1) * k, :]
                    fi = wi @ f @ la.dagger(wi)
                    r.block(jb[i], sign * la.kron(s.T, fi))
                pb.eq(r, sign * float(np.real(np.trace(f @ xl))))
    obj = pb.row(); obj.free(t, 1.0)
    pb.minimize(obj)
    res = sdp.solve(pb.program(), config)
    if res.status != "optimal":
        return None, None
    chois = [la.clean_choi(res.primal[i], n, k) for i in range(n_sum)]
    return float(res.value), chois


def _seesaw_isometry_step(sgens, targets, k, n_sum, w, chois, rng,
                          descent_only=False):
    m = w.shape[1]
    dmats = []
    for s in sgens:
        blocks = [la.apply_choi(c, s) for c in chois]
        d = np.zeros((n_sum * k, n_sum * k), dtype=complex)
        for i, b in enumerate(blocks):
            d[i * k:(i + 1) * k, i * k:(i + 1) * k] = b
        dmats.append(d)
    if not descent_only:
        # escape step: small random rotation
        pert = 0.05 * (rng.normal(size=w.shape) + 1j * rng.normal(size=w.shape))
        return _nearest_isometry(w + pert)
    grad = np.zeros_like(w)
    for d, xl in zip(dmats, targets):
        e = la.dagger(w) @ d @ w - xl
        grad += 2.0 * (d @ w @ e)
    best_w, best_val = w, _residual(dmats, targets, w)
    step = 1.0
    for _ in range(12):
        cand = _nearest_isometry(w - step * grad)
        val = _residual(dmats, targets, cand)
        if val < best_val:
            best_w, best_val = cand, val
            break
        step /= 2.0
    return best_w


def _residual(dmats, targets, w):
    return max(la.op_norm(la.dagger(w) @ d @ w - xl)
               for d, xl in zip(dmats, targets))


def _nearest_isometry(a):
    u, _, vt = np.linalg.svd(a, full_matrices=False)
    return u @ vt


# ---------------------------------------------------------------------------
# combined envelope membership
# ---------------------------------------------------------------------------

def min_membership(base: st.FreeConvexSet, k: int, x: la.MatrixTuple,
                   config: RunConfig = DEFAULT):
    out_status, out_data = min_membership_outer(base, k, x, config)
    if out_status == "out":
        return _verdict("OUT", out_data.get("pairing", out_data.get("margin", 0.0))
                        or 1e-3, out_data)
    if out_status == "island_in":
        return _verdict("IN", 0.0, {"kind": "ppt_island", "choi": out_data,
                                    "k": k})
    in_status, in_data = min_membership_inner(base, k, x, config)
    if in_status == "found":
        return _verdict("IN", in_data.reconstruction_error,
                        {"kind": "min_decomposition", "decomposition": in_data})
    return _verdict("UNDECIDED", 0.0, {},
                    {"outer": out_status, "inner": in_status,
                     "inner_report": in_data if isinstance(in_data, dict) else {},
                     "reason": "inner/outer gap"})


def max_membership(base: st.FreeConvexSet, k: int, x: la.MatrixTuple,
                   config: RunConfig = DEFAULT):
    status, data = max_membership_refute(base, k, x, config)
    if status == "out":
        return _verdict("OUT", data["gap"], data)
    status_c, data_c = max_membership_certify(base, k, x, config)
    if status_c == "in":
        return _verdict("IN", data_c["margin"], data_c)
    return _verdict("UNDECIDED", 0.0, {},
                    {"refute": data, "certify": data_c,
                     "reason": "no refutation found; net certification "
                               "unavailable or inconclusive"})


def max_membership_refute(base: st.FreeConvexSet, k: int, x: la.MatrixTuple,
                          config: RunConfig = DEFAULT):
    """Search for (H at level k, UCP compression) with
    support(W(x), H) > support(base, H); certified OUT on success."""
    from . import oracles

    xr = st.MatrixRange(la.MatrixTuple(x.entries, x.selfadjoint))

    def gap_fn(h):
        vx = oracles.support(xr, h, config)
        vb = oracles.support(base, h, config)
        grad = None
        if vx.achiever is not None:
            gx = vx.achiever.sa_view()
            gb = vb.achiever.sa_view() if vb.achiever is not None else \
                [np.zeros((k, k))] * len(gx)
            grad = [a - b for a, b in zip(gx, gb)]
        return vx.lo - vb.hi, grad

    val, h = oracles.sweep_maximize(gap_fn, base.sa_dim, k, base.selfadjoint,
                                    config, salt=419)
    if val > config.tol.verdict and h is not None:
        vx = oracles.support(xr, h, config)
        vb = oracles.support(base, h, config)
        comp = vx.certificate.get("choi")
        if comp is None and vx.certificate.get("kind") == "range_support_eig":
            psi = np.asarray(vx.certificate["state"])
            comp = la.ChoiMatrix(np.outer(psi.conj(), psi), x.n, 1)
        return "out", {"kind": "max_refutation", "H": list(h.entries),
                       "level": k, "gap": vx.lo - vb.hi,
                       "compression_choi": comp,
                       "base_bound": vb.hi, "base_cert": vb.certificate}
    return "none_found", {"best_gap": val}


def max_membership_certify(base: st.FreeConvexSet, k: int, x: la.MatrixTuple,
                           config: RunConfig = DEFAULT):
    """Net certification of W_k(x) inside base_k; guarded by dimension."""
    from . import _nets, oracles

    dim_total = base.sa_dim * k * k
    if dim_total > 4:
        needed = int((4.0 / 0.05) ** max(dim_total - 1, 1))
        return "undecided", {"reason": "net budget guard",
                             "required_net_size": needed,
                             "margin": 0.0}
    xr = st.MatrixRange(la.MatrixTuple(x.entries, x.selfadjoint))
    gx = st.geometry(xr, config)
    gb = st.geometry(base, config)
    # Lipschitz constant: basis elements have Frobenius norm <= sqrt(2) and
    # members satisfy ||X_l||_F <= sqrt(k) M1 coordinatewise
    lip = float(np.sqrt(2.0 * base.sa_dim * k)
                * (gx.bounding_radius + gb.bounding_radius))
    net, mesh = _nets.direction_net(dim_total, 720, config.budget.max_net_size)
    if not np.isfinite(mesh):
        return "undecided", {"reason": "no certified mesh",
                             "margin": 0.0}
    worst = np.inf
    basis = list(la.herm_basis_iter(k, "C"))
    nfc = la.herm_coord_dim(k, "C")
    records = []
    for u in net:
        ents = []
        for l in range(base.sa_dim):
            seg = u[l * nfc:(l + 1) * nfc]
            hmat = sum(c * f for c, f in zip(seg, basis))
            ents.append(la.herm_part(np.asarray(hmat, dtype=complex)))
        h = oracles.SupportFunctional(k, tuple(ents), base.selfadjoint)
        vx = oracles.support(xr, h, config)
        vb = oracles.support(base, h, config)
        margin = vb.lo - vx.hi
        records.append(margin)
        worst = min(worst, margin)
        if worst < lip * mesh:
            break
    threshold = lip * mesh + config.tol.verdict if mesh > 0 else -1e-9
    if worst >= threshold:
        return "in", {"kind": "max_net_in", "margin": max(worst - lip * mesh, 0.0),
                      "net_size": len(net), "mesh": mesh, "lipschitz": lip,
                      "worst_net_margin": worst, "level": k}
    return "undecided", {"reason": "net margin insufficient",
                         "worst_margin": worst, "mesh": mesh,
                         "lipschitz": lip, "margin": 0.0}


# ---------------------------------------------------------------------------
# level-1 hull membership for primitives and products
# ---------------------------------------------------------------------------

def level1_hull_membership(s: st.FreeConvexSet, x: la.MatrixTuple,
                           config: RunConfig = DEFAULT):
    """Membership in a set known to equal its own level-1 minimal envelope,
    via inscribed/circumscribed polytope POVMs."""
    m = x.n
    targets = _targets_for(s, x)
    # outer refutation first
    verts, data = st.level1_outer_polytope(s, config)
    status, cert = prog.povm_membership(verts, targets, m, config)
    if status == "infeasible":
        cert = dict(cert)
        cert["polytope"] = {"vertices": verts, "net": data["net"],
                           "values": data["values"]}
        return _verdict("OUT", cert.get("pairing", 1e-3), cert)
    result, payload = _inner_povm(s, x, config)
    if result == "found":
        return _verdict("IN", payload.reconstruction_error,
                        {"kind": "min_decomposition", "decomposition": payload})
    return _verdict("UNDECIDED", 0.0, {},
                    {"reason": "between inscribed and circumscribed polytopes",
                     "inner": payload})
