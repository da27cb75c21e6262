"""Standard conic-program formulations over set representations.

Shared by the set-level oracles and the envelope certification machinery.
Every function returns enough data to re-verify its answer with plain linear
algebra: cleaned Choi matrices for feasible/achiever sides, and reassembled
Hermitian multiplier pairs for Farkas sides.
"""

from __future__ import annotations

import numpy as np

from . import linalg as la
from . import sdp
from .config import DEFAULT, RunConfig


def kron_contract_right(e: np.ndarray, b: np.ndarray, mdim: int, pdim: int) -> np.ndarray:
    """M with tr(X M) = tr((X (x) b) e) for all X of side mdim."""
    e4 = e.reshape(mdim, pdim, mdim, pdim)
    return np.einsum("jbia,ab->ji", e4, b)


def partial_transpose_pairing(f: np.ndarray, n: int, m: int) -> np.ndarray:
    """F' with tr(F' J) = tr(F J^Gamma) for the input-leg partial transpose."""
    return la.partial_transpose_input(f, n, m)


# ---------------------------------------------------------------------------
# UCP image feasibility and membership distance
# ---------------------------------------------------------------------------

def ucp_feasibility_program(sgens, n, targets, m, *, ppt=False, norm_cap=None):
    """Feasibility: J PSD on C^n (x) C^m, unital, tr-paired images hit targets.

    sgens: Hermitian n x n generator list; targets: Hermitian m x m list.
    Optional relaxation constraints: input partial transpose PSD, and a
    spectral cap J <= norm_cap * I (both necessary for Schmidt-limited maps).
    """
    pb = sdp.ProgramBuilder()
    bj = pb.psd_block(n * m, "C")
    for q, f in enumerate(la.herm_basis_iter(m, "C")):
        pb.eq(pb.row().block(bj, la.kron(np.eye(n), f)),
              float(np.real(np.trace(f))), tag=("unital", q))
    for l, (s, x) in enumerate(zip(sgens, targets)):
        for q, f in enumerate(la.herm_basis_iter(m, "C")):
            pb.eq(pb.row().block(bj, la.kron(s.T, f)),
                  float(np.real(np.trace(f @ x))), tag=("gen", l, q))
    if ppt:
        bp = pb.psd_block(n * m, "C")
        for q, f in enumerate(la.herm_basis_iter(n * m, "C")):
            r = pb.row().block(bp, f).block(bj, -partial_transpose_pairing(f, n, m))
            pb.eq(r, 0.0, tag=("ppt", q))
    if norm_cap is not None:
        bc = pb.psd_block(n * m, "C")
        for q, f in enumerate(la.herm_basis_iter(n * m, "C")):
            r = pb.row().block(bc, f).block(bj, f)
            pb.eq(r, float(norm_cap) * float(np.real(np.trace(f))),
                  tag=("cap", q))
    return pb.program()


def farkas_functional(p: sdp.ConicProgram, ray: np.ndarray, m: int):
    """Reassemble (H_l list, Z) from a Farkas ray of a UCP-type program.

    The combination satisfies sum_l S_l^T (x) H'_l + I (x) Z' >= 0 blockwise
    with b.y < 0; flipping signs yields the separating form.  Extra blocks
    (ppt/cap relaxations) contribute their own multipliers, returned raw.
    """
    hs: dict[int, np.ndarray] = {}
    z = np.zeros((m, m), dtype=complex)
    basis = list(la.herm_basis_iter(m, "C"))
    extra = {}
    for w, tag in zip(ray, p.row_tags):
        if w == 0.0 or tag is None:
            continue
        if tag[0] == "unital":
            z = z + w * basis[tag[1]]
        elif tag[0] == "gen":
            l = tag[1]
            hs[l] = hs.get(l, 0) + w * basis[tag[2]]
        else:
            extra.setdefault(tag[0], []).append((tag[1:], w))
    dmax = max(hs.keys(), default=-1)
    hlist = [np.asarray(hs.get(l, np.zeros((m, m), dtype=complex)))
             for l in range(dmax + 1)]
    return [-h for h in hlist], -z, extra


def verify_separation(sgens, n, targets, m, hlist, z, tol=1e-8):
    """Eigenvalue re-check of a separating pair (H, Z).

    Returns (ok, pairing_gap, max_eig) for the statement
      sum_l S_l^T (x) H_l + I (x) Z <= 0   and   sum_l <H_l, X_l> + tr Z > 0,
    which imply sup over the matrix range of <H, .> <= -tr Z < <H, X>.
    """
    pencil = sum(la.kron(s.T, h) for s, h in zip(sgens, hlist)) \
        + la.kron(np.eye(n), z)
    top = la.eig_max(pencil)
    pairing = float(np.real(sum(np.trace(h @ x) for h, x in zip(hlist, targets))
                            + np.trace(z)))
    scale = max(1.0, max(la.op_norm(h) for h in hlist + [z]))
    ok = top <= tol * scale and pairing > 0
    return ok, pairing, top


def solve_ucp_feasibility(sgens, n, targets, m, config: RunConfig = DEFAULT,
                          *, ppt=False, norm_cap=None):
    """Run the feasibility program; returns ('feasible', ChoiMatrix),
    ('infeasible', cert) or ('failure', diagnostics)."""
    p = ucp_feasibility_program(sgens, n, targets, m, ppt=ppt, norm_cap=norm_cap)
    res = sdp.solve(p, config)
    if res.status == "optimal":
        j = la.clean_choi(res.primal[0], n, m)
        return "feasible", j
    if res.status == "infeasible":
        ray = res.certificate["ray"]
        hlist, z, extra = farkas_functional(p, ray, m)
        if not extra:
            ok, pairing, top = verify_separation(sgens, n, targets, m, hlist, z)
            cert = {"kind": "farkas_functional", "H": hlist, "Z": z,
                    "pairing": pairing, "pencil_top": top,
                    "n": n, "m": m}
            if ok:
                return "infeasible", cert
        # relaxation constraints participate: keep the raw ray, verified
        # against the full row system
        ok, info = sdp.verify_farkas(p, ray)
        if ok:
            cert = {"kind": "farkas_ray", "ray": ray, "ppt": ppt,
                    "norm_cap": norm_cap, "n": n, "m": m, **info}
            return "infeasible", cert
        return "failure", {"reason": "unverified farkas", **info}
    return "failure", res.diagnostics


def ucp_distance(sgens, n, targets, m, config: RunConfig = DEFAULT):
    """min over unital Choi J of max_l ||apply(J, S_l) - X_l||_op.

    Strictly feasible for any inputs; the optimum is the sup-norm distance
    from the target tuple to the level-m matrix range slice.
    """
    pb = sdp.ProgramBuilder()
    s_var = pb.free_var()
    bj = pb.psd_block(n * m, "C")
    for q, f in enumerate(la.herm_basis_iter(m, "C")):
        pb.eq(pb.row().block(bj, la.kron(np.eye(n), f)),
              float(np.real(np.trace(f))), tag=("unital", q))
    for l, (s, x) in enumerate(zip(sgens, targets)):
        for sign in (+1.0, -1.0):
            bs = pb.psd_block(m, "C")
            for f in la.herm_basis_iter(m, "C"):
                r = pb.row().block(bs, f)
                r.block(bj, sign * la.kron(s.T, f))
                r.free(s_var, -float(np.real(np.trace(f))))
                pb.eq(r, sign * float(np.real(np.trace(f @ x))))
    obj = pb.row(); obj.free(s_var, 1.0)
    pb.minimize(obj)
    res = sdp.solve(pb.program(), config)
    if res.status != "optimal":
        return None, res.diagnostics
    return float(res.value), res.primal[0]


# ---------------------------------------------------------------------------
# support functions
# ---------------------------------------------------------------------------

def range_support(sgens, n, hlist, m, config: RunConfig = DEFAULT):
    """Exact support of a matrix range: max <H, phi(T)> over UCP phi.

    Returns (value, choi, z) with I (x) z >= sum S^T (x) H and tr z = value.
    """
    pb = sdp.ProgramBuilder()
    bj = pb.psd_block(n * m, "C")
    for q, f in enumerate(la.herm_basis_iter(m, "C")):
        pb.eq(pb.row().block(bj, la.kron(np.eye(n), f)),
              float(np.real(np.trace(f))), tag=("unital", q))
    mobj = sum(la.kron(s.T, h) for s, h in zip(sgens, hlist))
    pb.maximize(pb.row().block(bj, mobj))
    res = sdp.solve(pb.program(), config)
    if res.status != "optimal":
        raise RuntimeError(f"support solve failed: {res.diagnostics}")
    basis = list(la.herm_basis_iter(m, "C"))
    z = sum(w * f for w, f in zip(res.dual["y"], basis))
    j = la.clean_choi(res.primal[0], n, m)
    return float(res.value), j, la.herm_part(np.asarray(z))


def fs_support(coeffs, p_side, hlist, m, config: RunConfig = DEFAULT):
    """Exact support of a bounded free spectrahedron at level m.

    max sum_l <H_l, X_l>  s.t.  sum_l X_l (x) P_l <= I.
    Returns (value, x_list, dual multiplier).
    """
    dim = len(coeffs)
    pb = sdp.ProgramBuilder()
    xs = []
    for l in range(dim):
        xs.append([pb.free_var() for _ in range(la.herm_coord_dim(m, "C"))])
    slack = pb.psd_block(m * p_side, "C")
    xbasis = list(la.herm_basis_iter(m, "C"))
    for f in la.herm_basis_iter(m * p_side, "C"):
        r = pb.row().block(slack, f)
        for l in range(dim):
            mpair = kron_contract_right(f, coeffs[l], m, p_side)
            pc = la.pairing_coords(la.herm_part(mpair), "C")
            # X_l contributes tr(X_l mpair); mpair is Hermitian when f is
            for q, c in enumerate(pc):
                if c != 0.0:
                    r.free(xs[l][q], float(c))
        pb.eq(r, float(np.real(np.trace(f))))
    obj = pb.row()
    for l in range(dim):
        for q, c in enumerate(la.pairing_coords(hlist[l], "C")):
            if c != 0.0:
                obj.free(xs[l][q], float(c))
    pb.maximize(obj)
    res = sdp.solve(pb.program(), config)
    if res.status == "unbounded":
        raise RuntimeError("support of an unbounded spectrahedron")
    if res.status != "optimal":
        raise RuntimeError(f"fs support solve failed: {res.diagnostics}")
    xlist = []
    free = np.asarray(res.free)
    nc = la.herm_coord_dim(m, "C")
    for l in range(dim):
        xlist.append(la.coords_to_herm(free[l * nc:(l + 1) * nc], m, "C"))
    return float(res.value), xlist, res.dual["cone"][0]


def povm_support(points, hlist, m, config: RunConfig = DEFAULT):
    """Exact support of the matrix hull of finitely many scalar tuples.

    max sum_i <lambda^i, h(P_i)> over POVMs (P_i); equals the level-m support
    of the minimal set over conv(points).
    """
    points = np.asarray(points, dtype=float)
    n_pts, dim = points.shape
    pb = sdp.ProgramBuilder()
    blocks = [pb.psd_block(m, "C") for _ in range(n_pts)]
    for q, f in enumerate(la.herm_basis_iter(m, "C")):
        r = pb.row()
        for b in blocks:
            r.block(b, f)
        pb.eq(r, float(np.real(np.trace(f))), tag=("unital", q))
    obj = pb.row()
    for i, b in enumerate(blocks):
        mi = sum(points[i, l] * hlist[l] for l in range(dim))
        obj.block(b, mi)
    pb.maximize(obj)
    res = sdp.solve(pb.program(), config)
    if res.status != "optimal":
        raise RuntimeError(f"povm support failed: {res.diagnostics}")
    return float(res.value), res.primal


# ---------------------------------------------------------------------------
# POVM membership for level-1 generated envelopes
# ---------------------------------------------------------------------------

def povm_membership(points, targets, m, config: RunConfig = DEFAULT):
    """Feasibility of sum_i lambda^i_l P_i = X_l with (P_i) a POVM.

    Decides membership in the matrix hull of the scalar tuples ``points``.
    Returns ('feasible', povm blocks), ('infeasible', cert) or
    ('failure', diagnostics).
    """
    points = np.asarray(points, dtype=float)
    n_pts, dim = points.shape
    pb = sdp.ProgramBuilder()
    blocks = [pb.psd_block(m, "C") for _ in range(n_pts)]
    for q, f in enumerate(la.herm_basis_iter(m, "C")):
        r = pb.row()
        for b in blocks:
            r.block(b, f)
        pb.eq(r, float(np.real(np.trace(f))), tag=("unital", q))
    for l in range(dim):
        for q, f in enumerate(la.herm_basis_iter(m, "C")):
            r = pb.row()
            for i, b in enumerate(blocks):
                if points[i, l] != 0.0:
                    r.block(b, points[i, l] * f)
            pb.eq(r, float(np.real(np.trace(f @ targets[l]))), tag=("gen", l, q))
    res = sdp.solve(pb.program(), config)
    if res.status == "optimal":
        povm = _clean_povm(res.primal)
        return "feasible", povm
    if res.status == "infeasible":
        hlist, z, _ = farkas_functional(pb.program(), res.certificate["ray"], m)
        ok, pairing, top = verify_povm_separation(points, targets, hlist, z)
        if ok:
            return "infeasible", {"kind": "povm_farkas", "H": hlist, "Z": z,
                                  "pairing": pairing, "vertex_top": top}
        return "failure", {"reason": "unverified povm farkas"}
    return "failure", res.diagnostics


def verify_povm_separation(points, targets, hlist, z, tol=1e-8):
    """Check sum_l p_l H_l + Z <= 0 at every vertex and positive pairing."""
    points = np.asarray(points, dtype=float)
    top = -np.inf
    for p in points:
        mat = sum(c * h for c, h in zip(p, hlist)) + z
        top = max(top, la.eig_max(mat))
    pairing = float(np.real(sum(np.trace(h @ x) for h, x in zip(hlist, targets))
                            + np.trace(z)))
    scale = max(1.0, max(la.op_norm(h) for h in list(hlist) + [z]))
    return (top <= tol * scale and pairing > 0), pairing, top


def _clean_povm(blocks):
    s = sum(blocks)
    w, v = np.linalg.eigh(la.herm_part(s))
    w = np.clip(w, 1e-14, None)
    sinv = (v * (1.0 / np.sqrt(w))) @ la.dagger(v)
    out = []
    for b in blocks:
        wb, vb = np.linalg.eigh(la.herm_part(b))
        bpos = (vb * np.clip(wb, 0.0, None)) @ la.dagger(vb)
        out.append(la.herm_part(sinv @ bpos @ sinv))
    return out


# ---------------------------------------------------------------------------
# inclusion scaling between matrix ranges
# ---------------------------------------------------------------------------

def range_in_scaled_range(agens, na, tgens, m_level, config: RunConfig = DEFAULT):
    """max c such that a UCP map sends the A-tuple to c * (T-tuple).

    The minimal r with W(T) <= r W(A) is 1/c*.  ``m_level`` = side of T.
    """
    pb = sdp.ProgramBuilder()
    c = pb.free_var()
    bj = pb.psd_block(na * m_level, "C")
    for q, f in enumerate(la.herm_basis_iter(m_level, "C")):
        pb.eq(pb.row().block(bj, la.kron(np.eye(na), f)),
              float(np.real(np.trace(f))), tag=("unital", q))
    for l, (a, t) in enumerate(zip(agens, tgens)):
        for q, f in enumerate(la.herm_basis_iter(m_level, "C")):
            r = pb.row().block(bj, la.kron(a.T, f))
            r.free(c, -float(np.real(np.trace(f @ t))))
            pb.eq(r, 0.0, tag=("gen", l, q))
    obj = pb.row(); obj.free(c, 1.0)
    pb.maximize(obj)
    res = sdp.solve(pb.program(), config)
    if res.status != "optimal":
        return None, res
    cstar = float(res.free[0])
    j = la.clean_choi(res.primal[0], na, m_level)
    return cstar, j
