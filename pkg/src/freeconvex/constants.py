"""Inclusion-scaling constants of the level-k envelopes.

For a bounded set C with 0 interior to level one, three constants measure the
distance to its level-k envelopes:

  beta_k  : smallest r with C inside r * (level-k minimal envelope),
  gamma_k : smallest r with (level-k maximal envelope) inside r * C,
  alpha_k : smallest r with max envelope inside r * min envelope,

all non-increasing in k and sandwiched by
max(beta_k, gamma_k) <= alpha_k <= beta_k * gamma_k.  Lower bounds come from
refuted scalings of certified witness points; upper bounds from structural
fixed points, direct-sum witness tuples (an exact inclusion SDP), and the
ball-envelope a-priori bound dim * M / delta.  Bounds are certified on both
sides or flagged; truncation never masquerades as an upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kcert
from . import linalg as la
from . import oracles as orc
from . import sets as st
from .config import DEFAULT, RunConfig
from .oracles import ScaleBounds


class ZeroNotInteriorError(ValueError):
    pass


def _geometry_checked(c: st.FreeConvexSet, config: RunConfig):
    st.ensure_bounded(c, config)
    g = st.geometry(c, config)
    if not g.zero_interior:
        raise ZeroNotInteriorError(
            "scaling constants need 0 interior to the level-one set")
    return g


def envelope_bound(c: st.FreeConvexSet, config: RunConfig = DEFAULT) -> float:
    """A-priori bound dim * M / delta on all three constants.

    Follows from the Euclidean-ball envelope estimate: the maximal envelope
    of the dim-ball sits inside dim times its minimal envelope, and
    delta-ball <= level-one <= M-ball squeezes the general case.
    """
    g = _geometry_checked(c, config)
    return float(c.sa_dim * g.bounding_radius / g.inner_radius)


# ---------------------------------------------------------------------------
# conversion formulas between scalings and Hausdorff distances
# ---------------------------------------------------------------------------

def dist_from_scaling(a: float, b: float, m_bound: float) -> float:
    """Hausdorff bound from a sandwich a*D <= C <= b*D with uniform bound M."""
    if a <= 0 or b <= 0 or m_bound <= 0:
        raise ValueError("conversion needs positive a, b, M")
    return float(m_bound * max(abs(1.0 / a - 1.0), abs(b - 1.0)))


def scaling_from_dist(eps: float, delta: float, d: int) -> float:
    """Sandwich ratio a with (1/a) D <= C <= a D from dist < eps and a common
    inner ball of radius delta in d selfadjoint coordinates."""
    if eps <= 0 or delta <= 0 or d < 1:
        raise ValueError("conversion needs positive eps, delta and d >= 1")
    return float(1.0 + d * eps / delta)


# ---------------------------------------------------------------------------
# witness selection and refutation bisection
# ---------------------------------------------------------------------------

def _beta_witnesses(c: st.FreeConvexSet, k: int, config: RunConfig):
    """Certified members of C used as scaling witnesses.

    Commuting points never refute (the envelope matches the base at level
    one), so only noncommuting candidates are produced: generator tuples,
    level-2 support achievers, and standard unitary pairs for products.
    """
    out = []
    if isinstance(c, st.MatrixRange):
        out.append(c.tuple)
    if isinstance(c, st.FreeSpectrahedron):
        rng = np.random.default_rng([config.seed, 331])
        for _ in range(3):
            h = orc.random_functional(c.sa_dim, 2, c.selfadjoint, rng)
            sv = orc.support(c, h, config)
            if sv.achiever is not None:
                out.append(sv.achiever)
    if isinstance(c, (st.CartesianProduct, st.HullProduct, st.Primitive)):
        out.extend(_unitary_witnesses(c, config))
    out.sort(key=lambda t: t.n)  # cheap witnesses first
    return out


def _tuple_from_point(c: st.FreeConvexSet, pt):
    pt = np.asarray(pt, dtype=float)
    if c.selfadjoint:
        return la.MatrixTuple(tuple(np.array([[v]], dtype=complex) for v in pt),
                              selfadjoint=True)
    d = c.d
    return la.MatrixTuple(tuple(np.array([[pt[j] + 1j * pt[d + j]]])
                                for j in range(d)))


def _unitary_witnesses(c: st.FreeConvexSet, config: RunConfig):
    """Non-commuting contraction tuples matching the coordinate count."""
    out = []
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    pool2 = [sx, sz]
    cs = st.catalog("clock_shift", 3)
    pool3 = list(cs.entries)
    for pool in (pool2, pool3):
        if c.d <= len(pool):
            ents = tuple(pool[j] for j in range(c.d))
            sa = c.selfadjoint and all(la.is_hermitian(e) for e in ents)
            if c.selfadjoint and not sa:
                continue
            out.append(la.MatrixTuple(ents, selfadjoint=c.selfadjoint))
    return out


def _refuted(c: st.FreeConvexSet, k: int, x: la.MatrixTuple, r: float,
             config: RunConfig):
    """Certified refutation of x / r belonging to the level-k minimal
    envelope of c; returns the certificate or None."""
    status, data = kcert.min_membership_outer(c, k, x.scaled(1.0 / r), config)
    if status == "out":
        return data
    return None


def _bisect_refuted(c, k, x, r_hi, config, floor: float = 1.0):
    """Largest refuted scaling for witness x (downward-closed predicate).

    ``floor`` prunes witnesses that cannot beat an existing lower bound: the
    first probe sits just above it and a miss abandons the witness.
    """
    width = config.budget.bisect_rel_width
    lo_probe = max(1.0 + 1e-9, floor * (1.0 + width))
    cert = _refuted(c, k, x, lo_probe, config)
    if cert is None:
        return 1.0, None
    chi = _refuted(c, k, x, r_hi, config)
    if chi is not None:
        return r_hi, chi
    a, b = lo_probe, r_hi
    best = cert
    while (b - a) > width * max(1.0, a):
        mid = 0.5 * (a + b)
        cm = _refuted(c, k, x, mid, config)
        if cm is not None:
            a, best = mid, cm
        else:
            b = mid
    return a, best


# ---------------------------------------------------------------------------
# the three constants
# ---------------------------------------------------------------------------

def beta(c: st.FreeConvexSet, k: int, config: RunConfig = DEFAULT) -> ScaleBounds:
    """Certified bounds on the smallest r with C inside r * MinOver(k, C)."""
    g = _geometry_checked(c, config)
    r_env = envelope_bound(c, config)
    if c.known_min_level is not None and c.known_min_level <= k:
        w = {"kind": "structural", "rule": "known envelope level",
             "level": c.known_min_level}
        return ScaleBounds(1.0, 1.0, f"beta_{k}", w, w)
    lower, lo_wit = 1.0, {"kind": "structural", "rule": "definitional floor"}
    for x0 in _beta_witnesses(c, k, config):
        x, mv = None, None
        for shrink in (1.0, 0.995, 0.98):
            cand = x0 if shrink == 1.0 else x0.scaled(shrink)
            v = orc.membership(c, cand, config)
            if v.verdict == "IN":
                x, mv = cand, v
                break
        if x is None:
            continue
        r, cert = _bisect_refuted(c, k, x, r_env * 1.01, config, floor=lower)
        if r > lower and cert is not None:
            lower = r
            lo_wit = {"kind": "min_refutation", "r": r,
                      "point": x, "point_cert": mv.certificate,
                      "outer_cert": cert}
    upper, up_wit = r_env, {"kind": "ball_envelope_bound",
                            "dim": c.sa_dim, "M": g.bounding_radius,
                            "delta": g.inner_radius}
    if isinstance(c, st.MatrixRange):
        try:
            a, r_wit, wit = witness_tuple_upper(c, k, config.budget.witness_samples,
                                                config)
            if r_wit < upper:
                upper, up_wit = r_wit, wit
        except Exception as exc:
            up_wit = dict(up_wit)
            up_wit["witness_tuple_note"] = repr(exc)
    lower = min(lower, upper + 1e-9)
    return ScaleBounds(max(lower, 1.0), max(upper, 1.0), f"beta_{k}",
                       lo_wit, up_wit)


def gamma(c: st.FreeConvexSet, k: int, config: RunConfig = DEFAULT) -> ScaleBounds:
    """Certified bounds on the smallest r with MaxOver(k, C) inside r * C.

    Default pipeline is dual (beta of the polar); the direct pipeline runs
    when the budget allows and the two must agree within 0.05.
    """
    g = _geometry_checked(c, config)
    r_env = envelope_bound(c, config)
    if c.known_max_level is not None and c.known_max_level <= k:
        w = {"kind": "structural", "rule": "level-k fixed point",
             "level": c.known_max_level}
        return ScaleBounds(1.0, 1.0, f"gamma_{k}", w, w)
    pol = st.polar(c, config)
    dual = beta(pol, k, config)
    lower, upper = dual.lower, min(dual.upper, r_env)
    lo_wit = {"kind": "dual_pipeline", "base": dual.lower_witness}
    up_wit = {"kind": "dual_pipeline", "base": dual.upper_witness} \
        if dual.upper <= r_env else {"kind": "ball_envelope_bound",
                                     "dim": c.sa_dim, "M": g.bounding_radius,
                                     "delta": g.inner_radius}
    diagnostics = {"pipeline": "dual"}
    if config.budget.cross_validate:
        dlo, dhi, ddiag = _gamma_direct(c, k, r_env, config)
        diagnostics["direct_lower"] = dlo
        diagnostics["direct_upper"] = dhi
        if dlo > upper + 0.05 or lower > dhi + 0.05:
            raise orc.SoundnessViolation(
                f"gamma pipelines disagree: dual [{lower},{upper}] vs "
                f"direct [{dlo},{dhi}]")
        if dlo > lower:
            lower, lo_wit = dlo, {"kind": "direct_pipeline", **ddiag}
        upper = min(upper, dhi)
    lower = min(lower, upper + 1e-9)
    return ScaleBounds(max(lower, 1.0), max(upper, 1.0), f"gamma_{k}",
                       lo_wit, up_wit, diagnostics)


def _gamma_direct(c: st.FreeConvexSet, k: int, r_env: float, config: RunConfig):
    """Direct gamma pipeline: refute scaled memberships of max-certified
    points; upper bounds only from net certification budgets."""
    lo, diag = 1.0, {}
    for x in _max_witnesses(c, k, config):
        status, data = kcert.max_membership_certify(c, k, x, config)
        if status != "in":
            continue
        a, b = 1.0, r_env * 1.01
        mv = orc.membership(st.scale(b, c), x, config)
        if mv.verdict == "OUT":
            lo = max(lo, b)
            continue
        while (b - a) > config.budget.bisect_rel_width * max(1.0, a):
            mid = 0.5 * (a + b)
            mv = orc.membership(st.scale(mid, c), x, config)
            if mv.verdict == "OUT":
                a = mid
            else:
                b = mid
        if a > lo:
            lo = a
            diag = {"witness_level": x.n, "max_cert": data}
    return lo, np.inf, diag


def _max_witnesses(c: st.FreeConvexSet, k: int, config: RunConfig):
    out = []
    if isinstance(c, st.MatrixRange) and c.sa_dim <= 2 and k == 1:
        pts, _ = st.level1_inner_points(c, config, directions=8)
        for m_side in (2,):
            rng = np.random.default_rng([config.seed, 555])
            for _ in range(3):
                u = la.haar_unitary(2 * m_side, rng)
                diag = [_tuple_from_point(c, p) for p in pts[:2 * m_side]]
                a = la.direct_sum_tuples(diag, selfadjoint=c.selfadjoint)
                ents = tuple(u @ e @ la.dagger(u) for e in a.entries)
                out.append(la.MatrixTuple(ents, a.selfadjoint))
    return out


def alpha(c: st.FreeConvexSet, k: int, config: RunConfig = DEFAULT) -> ScaleBounds:
    """Certified bounds on the envelope-to-envelope constant, intersected
    with the product/max sandwich from beta and gamma."""
    _geometry_checked(c, config)
    bb = beta(c, k, config)
    gg = gamma(c, k, config)
    lower = max(bb.lower, gg.lower)
    upper = min(bb.upper * gg.upper, envelope_bound(c, config))
    lo_wit = {"kind": "sandwich_lower", "beta": bb.lower, "gamma": gg.lower,
              "beta_witness": bb.lower_witness, "gamma_witness": gg.lower_witness}
    up_wit = {"kind": "sandwich_upper", "beta": bb.upper, "gamma": gg.upper}
    dlo, dwit = _alpha_direct_lower(c, k, config)
    if dlo > lower:
        lower, lo_wit = dlo, dwit
    lower = min(lower, upper + 1e-9)
    return ScaleBounds(max(lower, 1.0), max(upper, 1.0), f"alpha_{k}",
                       lo_wit, up_wit,
                       {"beta": (bb.lower, bb.upper), "gamma": (gg.lower, gg.upper)})


def _alpha_direct_lower(c: st.FreeConvexSet, k: int, config: RunConfig):
    """Witness a point of the maximal envelope refuted from the scaled
    minimal envelope."""
    if k != 1 or c.sa_dim > 4:
        return 1.0, {}
    lo, wit = 1.0, {}
    for x in _envelope_gap_witnesses(c, config):
        status, data = kcert.max_membership_certify(c, 1, x, config)
        if status != "in":
            continue
        r_hi = envelope_bound(c, config) * 1.01
        r, cert = _bisect_refuted(c, 1, x, r_hi, config)
        if r > lo and cert is not None:
            lo = r
            wit = {"kind": "alpha_direct", "r": r, "point": x,
                   "max_cert": data, "outer_cert": cert}
    return lo, wit


def _envelope_gap_witnesses(c: st.FreeConvexSet, config: RunConfig):
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    sy = np.array([[0, -1j], [1j, 0]])
    if c.selfadjoint and c.d == 2:
        return [la.MatrixTuple((sx, sz), selfadjoint=True)]
    if c.selfadjoint and c.d == 3:
        return [la.MatrixTuple((sx, sy, sz), selfadjoint=True)]
    if not c.selfadjoint and c.d == 1:
        return [la.MatrixTuple((2 * np.array([[0, 1], [0, 0]]),))]
    return []


# ---------------------------------------------------------------------------
# witness tuples: the direct-sum upper-bound construction
# ---------------------------------------------------------------------------

def witness_tuple_upper(c: st.MatrixRange, k: int, samples: int,
                        config: RunConfig = DEFAULT):
    """Direct sum A of certified level-<=k members with exact inclusion SDP.

    Every summand lies in a level <= k slice of C, so the range of A sits
    inside the level-k minimal envelope; r = inclusion_scale(C, W(A)) then
    bounds beta_k(C) from above.  Returns (A, r, certificate).
    """
    if not isinstance(c, st.MatrixRange):
        raise TypeError("witness tuples need a matrix range (or polar thereof)")
    _geometry_checked(c, config)
    rng = np.random.default_rng([config.seed, 777])
    for attempt in range(2):
        tuples, certs = [], []
        n_dirs = samples * (attempt + 1)
        pts, _ = st.level1_inner_points(c, config, directions=n_dirs)
        for p in pts:
            tuples.append(_tuple_from_point(c, p))
            certs.append({"kind": "level1_achiever"})
        lvl = min(k, 2)
        if lvl >= 2:
            for _ in range(max(2, samples // 4)):
                h = orc.random_functional(c.sa_dim, lvl, c.selfadjoint, rng)
                sv = orc.support(c, h, config)
                if sv.achiever is not None:
                    tuples.append(sv.achiever)
                    certs.append({"kind": "support_achiever",
                                  "cert": sv.certificate})
        a = la.direct_sum_tuples(tuples, selfadjoint=c.selfadjoint,
                                 label="witness_sum")
        wa = st.MatrixRange(a)
        if st.geometry(wa, config).zero_interior:
            sb = orc.inclusion_scale(c, wa, config)
            cert = {"kind": "witness_tuple", "summands": len(tuples),
                    "levels": [t.n for t in tuples], "k": k,
                    "scaling": sb.upper_witness, "r": sb.upper}
            return a, float(sb.upper), cert
    raise RuntimeError("witness tuple construction stayed degenerate; "
                       "increase the sampling budget")


# ---------------------------------------------------------------------------
# profiles over k
# ---------------------------------------------------------------------------

@dataclass
class ConstantProfile:
    """Per-k certified bounds with monotone regularization.

    Raw bounds are logged; the regularized profile back-propagates deep-level
    lower bounds (valid for smaller k by monotonicity) and forward-propagates
    upper bounds, so it is non-increasing and sound on both sides.
    """

    name: str
    k_values: list[int]
    bounds: list[ScaleBounds]
    raw_lower: list[float] = field(default_factory=list)
    raw_upper: list[float] = field(default_factory=list)
    reg_lower: list[float] = field(default_factory=list)
    reg_upper: list[float] = field(default_factory=list)

    def regularize(self):
        self.raw_lower = [b.lower for b in self.bounds]
        self.raw_upper = [b.upper for b in self.bounds]
        n = len(self.bounds)
        self.reg_lower = list(self.raw_lower)
        for i in range(n - 2, -1, -1):
            self.reg_lower[i] = max(self.reg_lower[i], self.reg_lower[i + 1])
        self.reg_upper = list(self.raw_upper)
        for i in range(1, n):
            self.reg_upper[i] = min(self.reg_upper[i], self.reg_upper[i - 1])
        return self

    def validate(self, tol: float = 1e-6) -> bool:
        n = len(self.bounds)
        for i in range(n - 1):
            if self.reg_lower[i] < self.reg_lower[i + 1] - tol:
                return False
            if self.reg_upper[i] < self.reg_upper[i + 1] - tol:
                pass  # upper may only decrease; forward-min enforces this
        for i in range(n):
            for jj in range(i, n):
                # a lower bound at deep k never exceeds an upper at small k
                if self.reg_lower[jj] > self.raw_upper[i] + tol \
                        and np.isfinite(self.raw_upper[i]):
                    return False
        return True

    @property
    def limit_estimate(self):
        return self.reg_lower[-1], self.reg_upper[-1]

    def csv_rows(self):
        rows = [("k", "lower", "upper", "reg_lower", "reg_upper")]
        for i, k in enumerate(self.k_values):
            rows.append((k, self.raw_lower[i], self.raw_upper[i],
                         self.reg_lower[i], self.reg_upper[i]))
        return rows

    def to_json(self):
        return {"name": self.name, "k": self.k_values,
                "raw_lower": self.raw_lower,
                "raw_upper": [None if np.isinf(u) else u for u in self.raw_upper],
                "reg_lower": self.reg_lower,
                "reg_upper": [None if np.isinf(u) else u for u in self.reg_upper],
                "bounds": [b.to_json() for b in self.bounds]}


_PIPELINES = {"alpha": alpha, "beta": beta, "gamma": gamma}


def limit_profile(c: st.FreeConvexSet, k_max: int, name: str = "beta",
                  config: RunConfig = DEFAULT) -> ConstantProfile:
    fn = _PIPELINES[name]
    ks = list(range(1, k_max + 1))
    bounds = [fn(c, k, config) for k in ks]
    prof = ConstantProfile(name, ks, bounds).regularize()
    if not prof.validate():
        raise orc.SoundnessViolation(f"profile regularization failed for {name}")
    return prof
