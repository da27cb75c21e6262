"""Dense complex linear algebra primitives.

Kronecker products, partial traces, Choi calculus, Hermitian spectra, tuple
metrics and coordinate splitting.  Everything downstream (SDP builders, set
oracles, certificate re-verification) is written on top of this module, and
certificate checks use nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT, RunConfig

Array = np.ndarray


class ShapeMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class HermiticityError(ValueError):
    """Input expected Hermitian (within tolerance) is not."""


def dagger(m: Array) -> Array:
    return np.conjugate(m.T)


def herm_part(m: Array) -> Array:
    return (m + dagger(m)) / 2.0


def is_hermitian(m: Array, tol: float = 1e-12) -> bool:
    scale = max(1.0, op_norm(m))
    return op_norm(m - dagger(m)) <= tol * scale


def op_norm(m: Array) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def trace_norm(m: Array) -> float:
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def kron(a: Array, b: Array) -> Array:
    """Kronecker product; dimensions multiply."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(m: Array, dims: tuple[int, int], factor: str = "input") -> Array:
    """Trace out one tensor factor of a matrix on C^n (x) C^m.

    The first factor (size ``dims[0]``) is the "input" leg, the second the
    "output" leg.  Total trace is preserved: trace(result) == trace(m).
    """
    n, m_out = dims
    if m.shape != (n * m_out, n * m_out):
        raise ShapeMismatchError(f"side {m.shape} incompatible with dims {dims}")
    t = m.reshape(n, m_out, n, m_out)
    if factor == "input":
        return np.einsum("aiaj->ij", t)
    if factor == "output":
        return np.einsum("aibi->ab", t)
    raise ValueError("factor must be 'input' or 'output'")


def partial_transpose_input(j: Array, n: int, m: int) -> Array:
    """Transpose the input (first) tensor factor of a matrix on C^n (x) C^m."""
    if j.shape != (n * m, n * m):
        raise ShapeMismatchError(f"side {j.shape} incompatible with ({n},{m})")
    return j.reshape(n, m, n, m).transpose(2, 1, 0, 3).reshape(n * m, n * m)


def hermitian_spectrum(m: Array, tol: float = 1e-9) -> Array:
    """Eigenvalues of a Hermitian matrix, ascending; rejects non-Hermitian input."""
    if not is_hermitian(m, tol=max(tol, 1e-12)):
        raise HermiticityError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(herm_part(m))


def eig_max(m: Array) -> float:
    return float(np.linalg.eigvalsh(herm_part(m))[-1])


def eig_min(m: Array) -> float:
    return float(np.linalg.eigvalsh(herm_part(m))[0])


# ---------------------------------------------------------------------------
# matrix tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatrixTuple:
    """A d-tuple of n x n complex matrices.

    ``selfadjoint`` asserts every entry is Hermitian (checked on build); such
    tuples are paired against functionals coordinate-by-coordinate, while a
    general tuple is handled through its real/imaginary splitting.
    """

    entries: tuple[Array, ...]
    selfadjoint: bool = False
    label: str | None = None

    def __post_init__(self):
        if len(self.entries) < 1:
            raise ShapeMismatchError("tuple needs d >= 1 entries")
        ents = []
        side = None
        for e in self.entries:
            a = np.asarray(e, dtype=complex)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ShapeMismatchError("entries must be square matrices")
            if side is None:
                side = a.shape[0]
            elif a.shape[0] != side:
                raise ShapeMismatchError("entries must share a common side")
            a.setflags(write=False)
            ents.append(a)
        if side < 1:
            raise ShapeMismatchError("side must be >= 1")
        object.__setattr__(self, "entries", tuple(ents))
        if self.selfadjoint:
            for a in self.entries:
                if not is_hermitian(a, tol=1e-12):
                    raise HermiticityError("selfadjoint flag set on non-Hermitian entry")

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def n(self) -> int:
        return self.entries[0].shape[0]

    @property
    def sa_dim(self) -> int:
        """Number of selfadjoint coordinates of the splitting view."""
        return self.d if self.selfadjoint else 2 * self.d

    def sa_view(self) -> list[Array]:
        """Selfadjoint coordinate view: the entries themselves, or all real
        parts followed by all imaginary parts."""
        if self.selfadjoint:
            return [herm_part(e) for e in self.entries]
        res = [herm_part(e) for e in self.entries]
        res += [(e - dagger(e)) / 2j for e in self.entries]
        return res

    def scaled(self, c: float) -> "MatrixTuple":
        return MatrixTuple(tuple(c * e for e in self.entries), self.selfadjoint,
                           None if self.label is None else f"{c}*{self.label}")

    def __repr__(self):
        lab = f" {self.label!r}" if self.label else ""
        sa = " sa" if self.selfadjoint else ""
        return f"<MatrixTuple{lab} d={self.d} n={self.n}{sa}>"


def tuple_from_sa_view(sa: list[Array], selfadjoint: bool, label=None) -> MatrixTuple:
    """Inverse of :meth:`MatrixTuple.sa_view`."""
    if selfadjoint:
        return MatrixTuple(tuple(herm_part(a) for a in sa), True, label)
    if len(sa) % 2 != 0:
        raise ShapeMismatchError("splitting view of a complex tuple has even length")
    d = len(sa) // 2
    ents = tuple(herm_part(sa[j]) + 1j * herm_part(sa[d + j]) for j in range(d))
    return MatrixTuple(ents, False, label)


def selfadjoint_coordinates(t: MatrixTuple) -> MatrixTuple:
    """Length-2d selfadjoint splitting ((T+T*)/2 ..., (T-T*)/2i ...)."""
    re = [herm_part(e) for e in t.entries]
    im = [(e - dagger(e)) / 2j for e in t.entries]
    return MatrixTuple(tuple(re + im), selfadjoint=True,
                       label=None if t.label is None else t.label + "#sa")


def tuple_metric(a: MatrixTuple, b: MatrixTuple) -> float:
    """Sum of operator-norm distances of the entries."""
    if a.d != b.d or a.n != b.n:
        raise ShapeMismatchError("tuple metric needs equal length and side")
    return float(sum(op_norm(x - y) for x, y in zip(a.entries, b.entries)))


def re_tensor_pencil(x: MatrixTuple, a: MatrixTuple) -> Array:
    """Hermitian pencil Re(sum_j X_j (x) A_j) of side level(x) * level(a)."""
    if x.d != a.d:
        raise ShapeMismatchError("pencil needs tuples of equal length")
    s = sum(kron(xj, aj) for xj, aj in zip(x.entries, a.entries))
    return herm_part(s)


def box_sum(t: MatrixTuple, r: MatrixTuple | None) -> MatrixTuple:
    """Direct-sum tuple (T_1 + 0, ..., 0 + R_k) of side n_T + n_R."""
    if r is None:
        return t
    nt, nr = t.n, r.n
    zt = np.zeros((nr, nr), dtype=complex)
    zr = np.zeros((nt, nt), dtype=complex)
    ents = [block_diag2(e, zt) for e in t.entries]
    ents += [block_diag2(zr, e) for e in r.entries]
    lab = None
    if t.label and r.label:
        lab = f"{t.label}[+]{r.label}"
    return MatrixTuple(tuple(ents), t.selfadjoint and r.selfadjoint, lab)


def block_diag2(a: Array, b: Array) -> Array:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def direct_sum_tuples(tuples: list[MatrixTuple], selfadjoint=None, label=None) -> MatrixTuple:
    """Coordinatewise direct sum of same-length tuples (levels add)."""
    d = tuples[0].d
    for t in tuples:
        if t.d != d:
            raise ShapeMismatchError("direct sum needs equal coordinate counts")
    ents = []
    for j in range(d):
        blocks = [t.entries[j] for t in tuples]
        side = sum(b.shape[0] for b in blocks)
        out = np.zeros((side, side), dtype=complex)
        off = 0
        for b in blocks:
            out[off:off + b.shape[0], off:off + b.shape[0]] = b
            off += b.shape[0]
        ents.append(out)
    if selfadjoint is None:
        selfadjoint = all(t.selfadjoint for t in tuples)
    return MatrixTuple(tuple(ents), selfadjoint, label)


# ---------------------------------------------------------------------------
# Choi calculus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChoiMatrix:
    """PSD block matrix on C^in_dim (x) C^out_dim encoding a CP map.

    Unital maps have input partial trace equal to the identity.
    """

    block_matrix: Array
    in_dim: int
    out_dim: int

    def __post_init__(self):
        j = np.asarray(self.block_matrix, dtype=complex)
        side = self.in_dim * self.out_dim
        if j.shape != (side, side):
            raise ShapeMismatchError("Choi side must equal in_dim*out_dim")
        j = herm_part(j)
        j.setflags(write=False)
        object.__setattr__(self, "block_matrix", j)

    def psd_defect(self) -> float:
        """max(0, -lambda_min); 0 for PSD matrices."""
        return max(0.0, -eig_min(self.block_matrix))

    def unitality_defect(self) -> float:
        r = partial_trace(self.block_matrix, (self.in_dim, self.out_dim), "input")
        return op_norm(r - np.eye(self.out_dim))

    def apply(self, a: Array) -> Array:
        return apply_choi(self, a)


def apply_choi(j: ChoiMatrix | Array, a: Array, dims: tuple[int, int] | None = None) -> Array:
    """Evaluate the map encoded by a Choi matrix: Tr_in[J (A^T (x) I)]."""
    if isinstance(j, ChoiMatrix):
        jm, n, m = j.block_matrix, j.in_dim, j.out_dim
    else:
        if dims is None:
            raise ShapeMismatchError("raw Choi matrix needs explicit dims")
        jm, (n, m) = np.asarray(j), dims
    a = np.asarray(a, dtype=complex)
    if a.shape != (n, n):
        raise ShapeMismatchError(f"argument side {a.shape} != in_dim {n}")
    t = jm.reshape(n, m, n, m)
    return np.einsum("aibj,ab->ij", t, a)


def choi_of_map(phi, n: int, m: int) -> ChoiMatrix:
    """Choi matrix sum_ij E_ij (x) phi(E_ij) of a callable map."""
    side = n * m
    out = np.zeros((side, side), dtype=complex)
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = 1.0
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = np.asarray(phi(e))
    return ChoiMatrix(out, n, m)


def choi_identity(n: int) -> ChoiMatrix:
    return choi_of_map(lambda a: a, n, n)


def clean_choi(jm: Array, n: int, m: int) -> ChoiMatrix:
    """Project a near-feasible Choi candidate to an exactly PSD, exactly
    unital one (eigenvalue clip followed by an input-leg congruence)."""
    j = herm_part(np.asarray(jm, dtype=complex))
    w, v = np.linalg.eigh(j)
    w = np.clip(w, 0.0, None)
    j = (v * w) @ dagger(v)
    r = partial_trace(j, (n, m), "input")
    # congruence by I (x) r^{-1/2} restores unitality exactly
    wr, vr = np.linalg.eigh(herm_part(r))
    wr = np.clip(wr, 1e-14, None)
    rinv = (vr * (1.0 / np.sqrt(wr))) @ dagger(vr)
    c = kron(np.eye(n), rinv)
    return ChoiMatrix(c @ j @ dagger(c), n, m)


# ---------------------------------------------------------------------------
# coordinates for the solver layer
# ---------------------------------------------------------------------------

def realify(h: Array) -> Array:
    """Hermitian L x L  ->  real symmetric 2L x 2L with doubled spectrum."""
    a, b = np.real(h), np.imag(h)
    return np.block([[a, -b], [b, a]])


def unrealify(z: Array) -> Array:
    """Adjoint of :func:`realify` up to the factor 2: returns Hermitian H with
    <realify(H'), Z> = 2 <H', unrealify(Z)/2>; normalized so that
    unrealify(realify(H)) == H."""
    L = z.shape[0] // 2
    z11, z12 = z[:L, :L], z[:L, L:]
    z21, z22 = z[L:, :L], z[L:, L:]
    return herm_part((z11 + z22) / 2.0 + 1j * (z21 - z12) / 2.0)


def herm_coord_dim(side: int, field: str) -> int:
    return side * side if field == "C" else side * (side + 1) // 2


def herm_basis_iter(side: int, field: str):
    """Yield a real-coordinate basis of Hermitian (or real symmetric) matrices."""
    for a in range(side):
        e = np.zeros((side, side), dtype=complex)
        e[a, a] = 1.0
        yield e
    for a in range(side):
        for b in range(a + 1, side):
            e = np.zeros((side, side), dtype=complex)
            e[a, b] = e[b, a] = 1.0
            yield e
            if field == "C":
                f = np.zeros((side, side), dtype=complex)
                f[a, b] = 1j
                f[b, a] = -1j
                yield f


def herm_to_coords(m: Array, field: str = "C") -> Array:
    """Coordinates x with H(x) = m in the :func:`herm_basis_iter` basis."""
    side = m.shape[0]
    out = np.empty(herm_coord_dim(side, field))
    k = side
    out[:side] = np.real(np.diag(m))
    for a in range(side):
        for b in range(a + 1, side):
            out[k] = np.real(m[a, b]); k += 1
            if field == "C":
                out[k] = np.imag(m[a, b]); k += 1
    return out


def coords_to_herm(x: Array, side: int, field: str = "C") -> Array:
    m = np.zeros((side, side), dtype=complex)
    k = side
    for a in range(side):
        m[a, a] = x[a]
    for a in range(side):
        for b in range(a + 1, side):
            re = x[k]; k += 1
            im = 0.0
            if field == "C":
                im = x[k]; k += 1
            m[a, b] = re + 1j * im
            m[b, a] = re - 1j * im
    return m


def pairing_coords(m: Array, field: str = "C") -> Array:
    """Row p with p . x = tr(m H(x)) over the herm coordinate basis."""
    side = m.shape[0]
    out = np.empty(herm_coord_dim(side, field))
    out[:side] = np.real(np.diag(m))
    k = side
    for a in range(side):
        for b in range(a + 1, side):
            out[k] = 2.0 * np.real(m[a, b]); k += 1
            if field == "C":
                out[k] = 2.0 * np.imag(m[a, b]); k += 1
    return out


# ---------------------------------------------------------------------------
# seeded randomness
# ---------------------------------------------------------------------------

def rng_from(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def random_hermitian(n: int, rng, norm: float | None = None) -> Array:
    rng = rng_from(rng)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = herm_part(g)
    if norm is not None:
        h = h * (norm / max(op_norm(h), 1e-30))
    return h


def random_complex(n: int, rng, norm: float | None = None) -> Array:
    rng = rng_from(rng)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    if norm is not None:
        g = g * (norm / max(op_norm(g), 1e-30))
    return g


def haar_unitary(n: int, rng) -> Array:
    rng = rng_from(rng)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unital_choi(n: int, m: int, rng, rank: int | None = None) -> ChoiMatrix:
    """Random strictly positive unital Choi matrix (Wishart + congruence)."""
    rng = rng_from(rng)
    side = n * m
    r = rank if rank is not None else side + 2
    g = rng.normal(size=(side, r)) + 1j * rng.normal(size=(side, r))
    j = g @ dagger(g) + 1e-6 * np.eye(side)
    red = partial_trace(j, (n, m), "input")
    wr, vr = np.linalg.eigh(herm_part(red))
    rinv = (vr * (1.0 / np.sqrt(np.clip(wr, 1e-14, None)))) @ dagger(vr)
    c = kron(np.eye(n), rinv)
    return ChoiMatrix(c @ j @ dagger(c), n, m)


def random_state(n: int, rng) -> Array:
    rng = rng_from(rng)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def numerical_radius(x: Array, samples: int = 720) -> float:
    """w(X) = max_theta lambda_max Re(e^{i theta} X), by sweep + refinement."""
    def f(t):
        return eig_max(np.exp(1j * t) * x)
    ts = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    vals = [f(t) for t in ts]
    i = int(np.argmax(vals))
    lo, hi = ts[i] - 2 * np.pi / samples, ts[i] + 2 * np.pi / samples
    for _ in range(60):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) < f(m2):
            lo = m1
        else:
            hi = m2
    return f((lo + hi) / 2)


# ---------------------------------------------------------------------------
# JSON encoding: a matrix is a list of rows of [re, im] pairs
# ---------------------------------------------------------------------------

def matrix_to_json(m: Array) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(np.real(v)), float(np.imag(v))] for v in row] for row in m]


def matrix_from_json(rows) -> Array:
    try:
        return np.array([[complex(v[0], v[1]) for v in row] for row in rows])
    except (TypeError, IndexError) as exc:
        raise ShapeMismatchError(f"malformed matrix JSON: {exc}") from exc


def tuple_to_json(t: MatrixTuple) -> dict:
    return {
        "label": t.label,
        "d": t.d,
        "n": t.n,
        "selfadjoint": t.selfadjoint,
        "matrices": [matrix_to_json(e) for e in t.entries],
    }


def tuple_from_json(obj: dict) -> MatrixTuple:
    mats = [matrix_from_json(m) for m in obj["matrices"]]
    t = MatrixTuple(tuple(mats), bool(obj.get("selfadjoint", False)),
                    obj.get("label"))
    if "d" in obj and int(obj["d"]) != t.d:
        raise ShapeMismatchError("declared d does not match matrix count")
    if "n" in obj and int(obj["n"]) != t.n:
        raise ShapeMismatchError("declared n does not match matrix side")
    return t
