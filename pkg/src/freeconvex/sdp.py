"""Small dense semidefinite-programming engine.

Programs are stated in primal standard form: PSD variable blocks (complex
Hermitian or real symmetric), optional free scalar variables, affine equality
constraints, and a linear objective.  Complex Hermitian blocks are realified
by the standard side-doubling embedding; the cone solver only ever sees real
symmetric blocks.  Solves go through cvxopt's conelp, a primal-dual interior
point method with Nesterov-Todd scaling, Mehrotra predictor-corrector steps
and a homogeneous self-dual embedding, which yields Farkas rays for
infeasible programs without a separate phase-1.

Every result is post-verified: optimal solutions must meet the gap/PSD/
residual contracts, infeasibility certificates must re-verify independently,
otherwise the status degrades to ``numerical_failure``.
"""

from __future__ import annotations

import io
import threading
from dataclasses import dataclass, field

import numpy as np
from cvxopt import matrix as _cvxmat
from cvxopt import solvers as _solvers

from . import linalg as la
from .config import DEFAULT, RunConfig

_SOLVER_LOCK = threading.Lock()


class ProgramError(ValueError):
    """Malformed conic program."""


@dataclass(frozen=True)
class BlockSpec:
    side: int
    field: str = "C"  # 'C' Hermitian, 'R' real symmetric

    def __post_init__(self):
        if self.side < 1 or self.field not in ("C", "R"):
            raise ProgramError("block needs side >= 1 and field in {'C','R'}")

    @property
    def coord_dim(self) -> int:
        return la.herm_coord_dim(self.side, self.field)

    @property
    def cone_side(self) -> int:
        return 2 * self.side if self.field == "C" else self.side


@dataclass(frozen=True)
class ConicProgram:
    """Feasibility or linear optimization over PSD blocks with equalities.

    Variable layout: ``free_dim`` free scalars first, then the Hermitian
    coordinates of each block in order.
    """

    blocks: tuple[BlockSpec, ...]
    free_dim: int
    objective: np.ndarray | None
    constraints: tuple[tuple[np.ndarray, float], ...]
    sense: str = "min"  # 'min' | 'max' | 'feasibility'
    row_tags: tuple = ()

    @property
    def nvar(self) -> int:
        return self.free_dim + sum(b.coord_dim for b in self.blocks)

    def block_offset(self, bi: int) -> int:
        return self.free_dim + sum(b.coord_dim for b in self.blocks[:bi])

    def validate(self):
        if self.sense not in ("min", "max", "feasibility"):
            raise ProgramError(f"bad sense {self.sense!r}")
        if self.sense == "feasibility":
            if self.objective is not None and np.any(self.objective):
                raise ProgramError("feasibility programs carry an empty objective")
        elif self.objective is None or len(self.objective) != self.nvar:
            raise ProgramError("objective length must match stacked dimension")
        for row, _ in self.constraints:
            if len(row) != self.nvar:
                raise ProgramError("constraint row length must match stacked dimension")

    def fingerprint(self) -> bytes:
        buf = io.BytesIO()
        buf.write(repr([(b.side, b.field) for b in self.blocks]).encode())
        buf.write(repr(self.free_dim).encode() + self.sense.encode())
        if self.objective is not None:
            buf.write(np.ascontiguousarray(self.objective, dtype=float).tobytes())
        for row, rhs in self.constraints:
            buf.write(np.ascontiguousarray(row, dtype=float).tobytes())
            buf.write(np.float64(rhs).tobytes())
        return buf.getvalue()


@dataclass
class ConicResult:
    status: str  # optimal | infeasible | unbounded | numerical_failure
    value: float = np.nan
    primal: list = field(default_factory=list)       # Hermitian block matrices
    free: np.ndarray | None = None
    dual: dict = field(default_factory=dict)         # y, cone multipliers
    gap: float = np.nan
    iterations: int = 0
    certificate: dict | None = None
    diagnostics: dict = field(default_factory=dict)


class RowBuilder:
    def __init__(self, program: "ProgramBuilder"):
        self._p = program
        self._free: dict[int, float] = {}
        self._blocks: dict[int, np.ndarray] = {}

    def free(self, idx: int, coef: float) -> "RowBuilder":
        self._free[idx] = self._free.get(idx, 0.0) + float(coef)
        return self

    def block(self, bi: int, m: np.ndarray) -> "RowBuilder":
        """Add the pairing tr(m X_bi) to the row; m must be Hermitian."""
        if bi in self._blocks:
            self._blocks[bi] = self._blocks[bi] + la.herm_part(m)
        else:
            self._blocks[bi] = la.herm_part(np.asarray(m, dtype=complex))
        return self

    def build(self) -> np.ndarray:
        row = np.zeros(self._p.nvar)
        for i, c in self._free.items():
            row[i] = c
        for bi, m in self._blocks.items():
            off = self._p.block_offset(bi)
            spec = self._p.blocks[bi]
            row[off:off + spec.coord_dim] = la.pairing_coords(m, spec.field)
        return row


class ProgramBuilder:
    """Assemble a ConicProgram from matrix pairings."""

    def __init__(self):
        self.blocks: list[BlockSpec] = []
        self.free_dim = 0
        self._rows: list[tuple[np.ndarray, float]] = []
        self._tags: list = []
        self._objective: np.ndarray | None = None
        self._sense = "feasibility"

    def free_var(self) -> int:
        self.free_dim += 1
        return self.free_dim - 1

    def psd_block(self, side: int, field: str = "C") -> int:
        self.blocks.append(BlockSpec(side, field))
        return len(self.blocks) - 1

    @property
    def nvar(self) -> int:
        return self.free_dim + sum(b.coord_dim for b in self.blocks)

    def block_offset(self, bi: int) -> int:
        return self.free_dim + sum(b.coord_dim for b in self.blocks[:bi])

    def row(self) -> RowBuilder:
        return RowBuilder(self)

    def eq(self, row: RowBuilder | np.ndarray, rhs: float, tag=None):
        r = row.build() if isinstance(row, RowBuilder) else np.asarray(row, float)
        self._rows.append((r, float(rhs)))
        self._tags.append(tag)

    def eq_herm(self, mexprs: dict[int, np.ndarray], free_coefs: dict[int, np.ndarray],
                rhs: np.ndarray, side: int, field: str = "C", tag=None):
        """Matrix equality sum_b map_b(X_b) + sum_i x_i C_i = rhs, expanded over
        a Hermitian basis.  ``mexprs[bi]`` maps basis element F to the pairing
        matrix M with tr(M X_bi) = <F, map_bi(X_bi)>."""
        for q, f in enumerate(la.herm_basis_iter(side, field)):
            r = self.row()
            for bi, fn in mexprs.items():
                r.block(bi, fn(f))
            for i, c in free_coefs.items():
                r.free(i, float(np.real(np.trace(f @ c))))
            self.eq(r, float(np.real(np.trace(f @ rhs))),
                    tag=None if tag is None else (*tag, q))

    def minimize(self, row: RowBuilder):
        self._objective = row.build()
        self._sense = "min"

    def maximize(self, row: RowBuilder):
        self._objective = row.build()
        self._sense = "max"

    def program(self) -> ConicProgram:
        # pad rows created before later variables were added
        n = self.nvar
        rows = []
        for r, rhs in self._rows:
            if len(r) < n:
                r = np.concatenate([r, np.zeros(n - len(r))])
            rows.append((r, rhs))
        obj = self._objective
        if obj is not None and len(obj) < n:
            obj = np.concatenate([obj, np.zeros(n - len(obj))])
        p = ConicProgram(tuple(self.blocks), self.free_dim, obj, tuple(rows),
                         self._sense, tuple(self._tags))
        p.validate()
        return p


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _embed_matrices(p: ConicProgram):
    """Build sparse cvxopt G and h for the realified program."""
    from cvxopt import spmatrix

    n = p.nvar
    cone_sides = [b.cone_side for b in p.blocks]
    total = sum(s * s for s in cone_sides)
    vals, rows, cols = [], [], []
    roff = 0
    for bi, b in enumerate(p.blocks):
        off = p.block_offset(bi)
        for q, e in enumerate(la.herm_basis_iter(b.side, b.field)):
            r = la.realify(e) if b.field == "C" else np.real(e)
            flat = r.flatten(order="F")
            nz = np.nonzero(flat)[0]
            vals.extend((-flat[nz]).tolist())
            rows.extend((roff + nz).tolist())
            cols.extend([off + q] * len(nz))
        roff += b.cone_side ** 2
    G = spmatrix(vals, rows, cols, size=(total, n))
    h = np.zeros(total)
    return G, h, {"l": 0, "q": [], "s": cone_sides}


def _reduce_rows(rows, rhs, tol=1e-11):
    """Pick a maximal independent subset of constraint rows (QR with pivoting).

    Returns (keep_idx, inconsistent_ray) where the ray, if not None, is a
    vector y over the original rows with A^T y = 0 and b . y = -1.
    """
    import scipy.linalg

    A = np.asarray(rows)
    b = np.asarray(rhs)
    if A.shape[0] == 0:
        return [], None
    q, r, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r)) if r.size else np.array([])
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int(np.sum(diag > tol * max(1.0, scale)))
    keep = sorted(piv[:rank].tolist())
    # consistency of the dropped rows
    Ak, bk = A[keep], b[keep]
    x0, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = A @ x0 - b
    if np.linalg.norm(resid) > 1e-7 * max(1.0, np.linalg.norm(b)):
        y = resid / -(b @ resid)
        return keep, y
    return keep, None


_OPTION_LADDER = (
    {"abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9, "maxiters": 120},
    {"abstol": 1e-8, "reltol": 1e-8, "feastol": 1e-8, "maxiters": 200},
)


def _run_conelp(c, G, h, dims, A, b, options):
    from cvxopt import sparse, spmatrix

    with _SOLVER_LOCK:
        saved = dict(_solvers.options)
        try:
            _solvers.options.clear()
            _solvers.options.update({"show_progress": False, **options})
            if A is None or A.shape[0] == 0:
                return _solvers.conelp(_cvxmat(c), G, _cvxmat(h), dims)
            asp = sparse(_cvxmat(A))
            return _solvers.conelp(_cvxmat(c), G, _cvxmat(h), dims,
                                   asp, _cvxmat(b))
        finally:
            _solvers.options.clear()
            _solvers.options.update(saved)


def _extract_blocks(p: ConicProgram, x: np.ndarray):
    mats = []
    for bi, b in enumerate(p.blocks):
        off = p.block_offset(bi)
        m = la.coords_to_herm(x[off:off + b.coord_dim], b.side, b.field)
        mats.append(m if b.field == "C" else np.real(m))
    return mats


def _cone_multipliers(p: ConicProgram, z: np.ndarray):
    """Hermitian multiplier per block: objective + sum_i y_i M_i = Z >= 0."""
    mats = []
    roff = 0
    for b in p.blocks:
        s = b.cone_side
        zm = np.array(z[roff:roff + s * s]).reshape(s, s, order="F")
        zm = (zm + zm.T) / 2.0
        if b.field == "C":
            mats.append(2.0 * la.unrealify(zm))
        else:
            mats.append(zm)
        roff += s * s
    return mats


def row_block_matrix(p: ConicProgram, row: np.ndarray, bi: int) -> np.ndarray:
    """Recover the Hermitian pairing matrix of one block segment of a row."""
    b = p.blocks[bi]
    off = p.block_offset(bi)
    seg = row[off:off + b.coord_dim]
    side = b.side
    m = np.zeros((side, side), dtype=complex)
    k = side
    for a in range(side):
        m[a, a] = seg[a]
    for a in range(side):
        for bb in range(a + 1, side):
            re = seg[k] / 2.0; k += 1
            im = 0.0
            if b.field == "C":
                im = seg[k] / 2.0; k += 1
            m[bb, a] = re + 1j * im
            m[a, bb] = re - 1j * im
    return m if b.field == "C" else np.real(m)


def combine_rows(p: ConicProgram, y: np.ndarray):
    """y-weighted combination of constraint rows, as (free part, block mats)."""
    acc = np.zeros(p.nvar)
    for w, (row, _) in zip(y, p.constraints):
        if w != 0.0:
            acc += w * row
    free = acc[:p.free_dim]
    mats = [row_block_matrix(p, acc, bi) for bi in range(len(p.blocks))]
    return free, mats


def verify_farkas(p: ConicProgram, y: np.ndarray, tol: float = 1e-8) -> tuple[bool, dict]:
    """Check an infeasibility ray independently: the y-combination of the
    constraints must be PSD on every block, vanish on free variables, and have
    strictly negative right-hand side."""
    free, mats = combine_rows(p, y)
    bdst = float(sum(w * rhs for w, (_, rhs) in zip(y, p.constraints)))
    scale = max(1.0, float(np.max(np.abs(y))))
    min_eig = min((la.eig_min(m) for m in mats), default=0.0)
    free_norm = float(np.linalg.norm(free))
    ok = (min_eig >= -tol * scale) and (free_norm <= tol * scale) and (bdst <= -tol)
    return ok, {"min_eig": min_eig, "free_norm": free_norm, "b_dot_y": bdst}


def solve(p: ConicProgram, config: RunConfig = DEFAULT) -> ConicResult:
    """Solve a conic program; deterministic for identical inputs."""
    p.validate()
    cone_max = max((b.cone_side for b in p.blocks), default=0)
    if cone_max > config.side_cap:
        raise ProgramError(f"cone side {cone_max} exceeds cap {config.side_cap}")
    if p.nvar > 40 * config.side_cap:
        raise ProgramError(f"stacked dimension {p.nvar} exceeds budget")
    n = p.nvar
    if n == 0:
        return ConicResult(status="optimal", value=0.0, gap=0.0)

    c = np.zeros(n)
    sign = 1.0
    if p.sense != "feasibility":
        c = np.array(p.objective, dtype=float)
        if p.sense == "max":
            c, sign = -c, -1.0

    G, h, dims = _embed_matrices(p)
    rows = [r for r, _ in p.constraints]
    rhs = [v for _, v in p.constraints]
    keep, bad_ray = _reduce_rows(rows, rhs) if rows else ([], None)
    if bad_ray is not None:
        ok, info = verify_farkas(p, bad_ray)
        if ok:
            return ConicResult(status="infeasible", certificate={"ray": bad_ray},
                               diagnostics={"reason": "inconsistent equalities", **info})
        return ConicResult(status="numerical_failure",
                           diagnostics={"reason": "inconsistent equalities, ray rejected", **info})
    A = np.asarray([rows[i] for i in keep]) if keep else np.zeros((0, n))
    b = np.asarray([rhs[i] for i in keep]) if keep else np.zeros(0)

    last_diag = {}
    for attempt, opts in enumerate(_OPTION_LADDER):
        opts = dict(opts)
        opts["maxiters"] = min(opts["maxiters"], config.iteration_cap)
        try:
            sol = _run_conelp(c, G, h, dims, A, b, opts)
        except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
            last_diag = {"exception": repr(exc), "attempt": attempt}
            continue
        status = sol["status"]
        iters = int(sol.get("iterations", 0))
        if status == "optimal":
            x = np.array(sol["x"]).ravel()
            mats = _extract_blocks(p, x)
            pval = float(c @ x)
            dval = sol["dual objective"]
            gap = abs(pval - dval) if dval is not None else float(sol.get("gap", np.inf))
            resid = float(np.max(np.abs(A @ x - b))) if len(b) else 0.0
            psd_ok = all(la.eig_min(m) >= -config.tol.psd * m.shape[0] for m in mats)
            if gap <= config.tol.sdp_gap * (1 + abs(pval)) and psd_ok \
                    and resid <= config.tol.constraint:
                # duals of the minimization actually solved:
                #   c_solved + sum_i y_i row_i = cone pairings blockwise,
                # where c_solved is -objective for max sense.
                y_full = np.zeros(len(rows))
                yv = np.array(sol["y"]).ravel() if len(keep) else np.zeros(0)
                for i, idx in enumerate(keep):
                    y_full[idx] = yv[i]
                zmul = _cone_multipliers(p, np.array(sol["z"]).ravel())
                return ConicResult(status="optimal", value=sign * pval, primal=mats,
                                   free=x[:p.free_dim], gap=gap, iterations=iters,
                                   dual={"y": y_full, "cone": zmul},
                                   diagnostics={"residual": resid})
            last_diag = {"gap": gap, "residual": resid, "psd_ok": psd_ok,
                         "attempt": attempt}
            continue
        if status == "primal infeasible":
            yv = np.array(sol["y"]).ravel() if len(keep) else np.zeros(0)
            y_full = np.zeros(len(rows))
            for i, idx in enumerate(keep):
                y_full[idx] = yv[i]
            ok, info = verify_farkas(p, y_full)
            if ok:
                return ConicResult(status="infeasible", iterations=iters,
                                   certificate={"ray": y_full}, diagnostics=info)
            last_diag = {"reason": "farkas rejected", **info, "attempt": attempt}
            continue
        if status == "dual infeasible":
            x = np.array(sol["x"]).ravel()
            return ConicResult(status="unbounded", iterations=iters,
                               certificate={"ray": x},
                               diagnostics={"reason": "dual infeasible"})
        last_diag = {"reason": f"solver status {status}", "attempt": attempt}
    return ConicResult(status="numerical_failure", diagnostics=last_diag)


def feasibility_margin(p: ConicProgram, config: RunConfig = DEFAULT):
    """Maximal t with X_b - t I PSD inside the constraint set.

    Returns (margin, payload): payload is a witness (block list) when
    strictly feasible, a Farkas ray dict when infeasible, and the boundary
    witness otherwise.
    """
    if p.sense != "feasibility":
        raise ProgramError("feasibility_margin expects a feasibility-form program")
    pb = ProgramBuilder()
    t = pb.free_var()
    for b in p.blocks:
        pb.psd_block(b.side, b.field)
    for (row, rhs), tag in zip(p.constraints, p.row_tags or [None] * len(p.constraints)):
        r = np.concatenate([[0.0], row[p.free_dim:]])
        tcoef = sum(float(np.real(np.trace(row_block_matrix(p, row, bi))))
                    for bi in range(len(p.blocks)))
        if p.free_dim:
            raise ProgramError("margin form does not support extra free variables")
        r[0] = tcoef
        pb.eq(r, rhs, tag=tag)
    obj = pb.row(); obj.free(t, 1.0)
    pb.maximize(obj)
    res = solve(pb.program(), config)
    if res.status == "optimal":
        tstar = float(res.free[0])
        witness = [y + tstar * np.eye(y.shape[0]) for y in res.primal]
        if tstar > config.tol.verdict:
            return tstar, {"kind": "witness", "blocks": witness}
        if tstar < -config.tol.verdict:
            y = res.dual["y"]
            ok, info = verify_farkas(p, y)
            if ok:
                return tstar, {"kind": "farkas", "ray": y, **info}
            return tstar, {"kind": "boundary", "blocks": witness,
                           "note": "infeasible margin but ray rejected", **info}
        return tstar, {"kind": "boundary", "blocks": witness}
    if res.status == "infeasible":
        return -np.inf, {"kind": "farkas", "ray": res.certificate["ray"]}
    if res.status == "unbounded":
        return np.inf, {"kind": "unbounded"}
    raise RuntimeError(f"margin solve failed: {res.diagnostics}")


def dump_program(p: ConicProgram) -> str:
    """Plain-text standard form for cross-checking against external solvers.

    Line format:
      BLOCKS side:field ...
      FREE k
      SENSE min|max|feasibility
      OBJ i:coef ...                (stacked-coordinate sparse pairs)
      ROW rhs | i:coef ...
    """
    out = ["FREECONVEX-SDP 1"]
    out.append("BLOCKS " + " ".join(f"{b.side}:{b.field}" for b in p.blocks))
    out.append(f"FREE {p.free_dim}")
    out.append(f"SENSE {p.sense}")
    if p.objective is not None:
        nz = [f"{i}:{v:.17g}" for i, v in enumerate(p.objective) if v != 0.0]
        out.append("OBJ " + " ".join(nz))
    for row, rhs in p.constraints:
        nz = [f"{i}:{v:.17g}" for i, v in enumerate(row) if v != 0.0]
        out.append(f"ROW {rhs:.17g} | " + " ".join(nz))
    return "\n".join(out) + "\n"
