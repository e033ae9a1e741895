"""Gauge words: replayable certificates of reductions.

A word is an ordered list of elementary factors applied left to right.
A single invertible factor g acts on the dz-coefficient of a connection
by g A g^-1 + (dg/dz) g^-1; in Higgs mode the derivative term is
dropped.  Ramification factors substitute the current variable by a
b-th root and rescale the one-form accordingly.

Replaying a word is deterministic, which is what makes a word a
certificate: every reduction engine returns the word it applied, and
verification replays it against the input.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .series import INF, LaurentSeries, RamifiedContext, frac, frac_str
from .liealg import (ConstMat, DimensionMismatch, LieError, MatSeries,
                     NonConvergent, exp_trunc, integer_eigenvalues)


class GaugeError(LieError):
    pass


@dataclass(frozen=True)
class Connection:
    """dz-coefficient of a formal connection (or Higgs field)."""

    mat: MatSeries
    context: RamifiedContext = RamifiedContext(1)
    higgs: bool = False

    @property
    def n(self) -> int:
        return self.mat.n

    def with_mat(self, mat: MatSeries) -> "Connection":
        return Connection(mat, self.context, self.higgs)

    def is_zero(self) -> bool:
        return self.mat.is_zero()

    def agrees(self, other: "Connection", upto=INF) -> bool:
        return (self.context == other.context and self.higgs == other.higgs
                and self.mat.agrees(other.mat, upto))


# ---------------------------------------------------------------------------
# factors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpFactor:
    """exp of a matrix argument with terminating truncated exponential."""

    arg: MatSeries

    def inverse(self) -> "ExpFactor":
        return ExpFactor(-self.arg)


@dataclass(frozen=True)
class ConstFactor:
    """Invertible constant matrix."""

    mat: ConstMat

    def inverse(self) -> "ConstFactor":
        return ConstFactor(self.mat.inverse())


@dataclass(frozen=True)
class CocharFactor:
    """z^Xi for an integer diagonal Xi."""

    xi: tuple[int, ...]

    def inverse(self) -> "CocharFactor":
        return CocharFactor(tuple(-x for x in self.xi))


@dataclass(frozen=True)
class ShearFactor:
    """zeta^(n h) for an integer-spectrum semisimple h."""

    n: int
    h: ConstMat

    def inverse(self) -> "ShearFactor":
        return ShearFactor(-self.n, self.h)


@dataclass(frozen=True)
class RamifyFactor:
    """Pass to the b-cover: z = zeta^b."""

    b: int

    def inverse(self):
        raise GaugeError("ramification factors are not invertible")


Factor = ExpFactor | ConstFactor | CocharFactor | ShearFactor | RamifyFactor


@dataclass(frozen=True)
class GaugeWord:
    """Ordered list of factors; replay applies them left to right."""

    factors: tuple[Factor, ...] = ()

    @staticmethod
    def identity() -> "GaugeWord":
        return GaugeWord(())

    def then(self, *factors: Factor) -> "GaugeWord":
        return GaugeWord(self.factors + tuple(factors))

    def concat(self, other: "GaugeWord") -> "GaugeWord":
        return GaugeWord(self.factors + other.factors)

    def inverse(self) -> "GaugeWord":
        return GaugeWord(tuple(f.inverse() for f in reversed(self.factors)))

    def __len__(self):
        return len(self.factors)


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------

def _diag_monomials(exps, n: int) -> MatSeries:
    return MatSeries([[LaurentSeries.monomial(1, exps[i]) if i == j
                       else LaurentSeries.zero(INF) for j in range(n)]
                      for i in range(n)])


def _shear_matrices(f: ShearFactor, n: int):
    """(g, g_inv) for g = zeta^(n h)."""
    h = f.h
    if h.n != n:
        raise DimensionMismatch("shear dimension mismatch")
    if all(h.rows[a][b] == 0 for a in range(n) for b in range(n) if a != b):
        exps = []
        for i in range(n):
            e = h.rows[i][i] * f.n
            if e.denominator != 1:
                raise GaugeError("shear exponentials need integer eigenvalues")
            exps.append(int(e))
        return _diag_monomials(exps, n), _diag_monomials([-e for e in exps], n)
    with_mult = integer_eigenvalues(h)
    eigs = sorted(set(with_mult), reverse=True)
    if len(with_mult) != n:
        raise GaugeError("shear element must have integer spectrum")
    ident = ConstMat.identity(n)
    g = MatSeries.zeros(n)
    gi = MatSeries.zeros(n)
    recon = ConstMat.zeros(n)
    for e in eigs:
        proj = ident
        for e2 in eigs:
            if e2 == e:
                continue
            proj = (proj @ (h - ident.scale(e2))).scale(Fraction(1, e - e2))
        recon = recon + proj.scale(e)
        g = g + MatSeries.from_const(proj, INF, f.n * e)
        gi = gi + MatSeries.from_const(proj, INF, -f.n * e)
    if recon != h:
        raise GaugeError("shear element must be semisimple")
    return g, gi


def _clamped_exp(arg: MatSeries, target: MatSeries) -> tuple[MatSeries, MatSeries]:
    """exp(arg) and exp(-arg) with the argument clamped to what matters.

    Precision past target.trunc - val(target) cannot influence the
    replayed connection modulo its truncation; clamping there keeps the
    exponential finite for arguments exact to all orders.
    """
    t = target.trunc_effective()
    v = target.val_lower()
    if t != INF and v != INF and arg.trunc_effective() == INF and not arg.power_is_zero():
        span = int(t - min(v, 0)) + 2
        arg = arg.truncate(span)
    return exp_trunc(arg), exp_trunc(-arg)


def factor_matrices(f: Factor, target: MatSeries):
    """(g, g_inv, dg) for a matrix factor; dg is None when zero."""
    n = target.n
    if isinstance(f, ExpFactor):
        if f.arg.n != n:
            raise DimensionMismatch("factor dimension mismatch")
        g, gi = _clamped_exp(f.arg, target)
        return g, gi, g.deriv()
    if isinstance(f, ConstFactor):
        if f.mat.n != n:
            raise DimensionMismatch("factor dimension mismatch")
        return MatSeries.from_const(f.mat), MatSeries.from_const(f.mat.inverse()), None
    if isinstance(f, CocharFactor):
        if len(f.xi) != n:
            raise DimensionMismatch("factor dimension mismatch")
        g = _diag_monomials(f.xi, n)
        gi = _diag_monomials([-x for x in f.xi], n)
        return g, gi, g.deriv()
    if isinstance(f, ShearFactor):
        g, gi = _shear_matrices(f, n)
        return g, gi, g.deriv()
    raise GaugeError(f"not a matrix factor: {f!r}")


def apply_factor(f: Factor, conn: Connection) -> Connection:
    if isinstance(f, RamifyFactor):
        if f.b < 1:
            raise GaugeError("cover degree must be positive")
        if f.b == 1:
            return conn
        scale = LaurentSeries.monomial(f.b, f.b - 1)
        mat = conn.mat.ramify(f.b).scale(scale)
        return Connection(mat, conn.context.extend(f.b), conn.higgs)
    g, gi, dg = factor_matrices(f, conn.mat)
    mat = g @ conn.mat @ gi
    if dg is not None and not conn.higgs:
        mat = mat + dg @ gi
    return conn.with_mat(mat)


def gauge(word: GaugeWord, conn: Connection) -> Connection:
    """Replay a gauge word on a connection, left to right."""
    for f in word.factors:
        conn = apply_factor(f, conn)
    return conn


def gauge_matrix(g: MatSeries, conn: Connection) -> Connection:
    """Gauge by an explicit invertible matrix of series."""
    gi = g.inverse()
    mat = g @ conn.mat @ gi
    if not conn.higgs:
        mat = mat + g.deriv() @ gi
    return conn.with_mat(mat)


def word_matrix(word: GaugeWord, n: int) -> MatSeries:
    """Total matrix of a ramification-free word (product of factors).

    Replaying [f1, ..., fk] equals gauging once by fk ... f1.
    """
    total = MatSeries.identity(n)
    for f in word.factors:
        g, _, _ = factor_matrices(f, total)
        total = g @ total
    return total


# ---------------------------------------------------------------------------
# serialization (tagged factor records, bit-exact round trip)
# ---------------------------------------------------------------------------

def _series_payload(s: LaurentSeries):
    return {"terms": s.to_pairs(), "trunc": "inf" if s.trunc == INF else int(s.trunc)}


def _series_from_payload(p) -> LaurentSeries:
    trunc = INF if p["trunc"] == "inf" else int(p["trunc"])
    return LaurentSeries.from_pairs(p["terms"], trunc)


def _matseries_payload(m: MatSeries):
    return {"n": m.n, "entries": [[_series_payload(x) for x in r] for r in m.rows]}


def _matseries_from_payload(p) -> MatSeries:
    return MatSeries([[_series_from_payload(x) for x in r] for r in p["entries"]])


def _constmat_payload(m: ConstMat):
    return {"n": m.n, "entries": [[frac_str(x) for x in r] for r in m.rows]}


def _constmat_from_payload(p) -> ConstMat:
    return ConstMat([[frac(x) for x in r] for r in p["entries"]])


def factor_payload(f: Factor):
    if isinstance(f, ExpFactor):
        return {"kind": "exp", "arg": _matseries_payload(f.arg)}
    if isinstance(f, ConstFactor):
        return {"kind": "const", "mat": _constmat_payload(f.mat)}
    if isinstance(f, CocharFactor):
        return {"kind": "cochar", "xi": list(f.xi)}
    if isinstance(f, ShearFactor):
        return {"kind": "shear", "n": f.n, "h": _constmat_payload(f.h)}
    if isinstance(f, RamifyFactor):
        return {"kind": "ramify", "b": f.b}
    raise GaugeError(f"unknown factor {f!r}")


def factor_from_payload(p) -> Factor:
    kind = p.get("kind")
    if kind == "exp":
        return ExpFactor(_matseries_from_payload(p["arg"]))
    if kind == "const":
        return ConstFactor(_constmat_from_payload(p["mat"]))
    if kind == "cochar":
        return CocharFactor(tuple(int(x) for x in p["xi"]))
    if kind == "shear":
        return ShearFactor(int(p["n"]), _constmat_from_payload(p["h"]))
    if kind == "ramify":
        return RamifyFactor(int(p["b"]))
    raise GaugeError(f"unknown factor kind {kind!r}")


def word_payload(word: GaugeWord):
    return [factor_payload(f) for f in word.factors]


def word_from_payload(p) -> GaugeWord:
    return GaugeWord(tuple(factor_from_payload(f) for f in p))


# ---------------------------------------------------------------------------
# Birkhoff-style factorization
# ---------------------------------------------------------------------------

def _elementary_word(q: LaurentSeries, a: int, b: int, n: int) -> ExpFactor:
    """Factor with matrix I + q E_ab (a != b)."""
    rows = [[LaurentSeries.zero(INF)] * n for _ in range(n)]
    rows[a][b] = q
    return ExpFactor(MatSeries(rows))


def _unit_diag_word(units: list[LaurentSeries], n: int) -> list[Factor]:
    """Factors whose product is diag(units) for invertible power series."""
    const = []
    logs = [[LaurentSeries.zero(INF)] * n for _ in range(n)]
    has_log = False
    for i, u in enumerate(units):
        v = u.coeff(0)
        if v == 0:
            raise GaugeError("unit series must have an invertible constant term")
        const.append(v)
        w = u.scale(1 / v) - LaurentSeries.one(u.trunc)
        if not w.is_zero():
            if w.trunc == INF:
                raise GaugeError("multi-term unit factors need a finite truncation")
            has_log = True
            acc = LaurentSeries.zero(u.trunc)
            powk = LaurentSeries.one(INF)
            k = 0
            while True:
                k += 1
                powk = powk * w
                if powk.is_zero():
                    break
                acc = acc + powk.scale(Fraction((-1) ** (k + 1), k))
            logs[i][i] = acc
    out: list[Factor] = [ConstFactor(ConstMat.diag(const))]
    if has_log:
        out.append(ExpFactor(MatSeries(logs)))
    return out


def birkhoff_factor(g: MatSeries, weight) -> tuple[GaugeWord, tuple[int, ...], GaugeWord]:
    """Factor g = g1 * z^Xi * g2 with g1, g2 replaying inside the
    weighted parahoric group.

    Smith-style elimination over the power series ring, with pivots
    chosen by valuation adjusted by the weight grading so that every
    elimination factor is parahoric.  Raises NotInvertible when g is
    singular modulo its truncation.
    """
    from .liealg import NotInvertible

    n = g.n
    work = [list(r) for r in g.rows]

    def grading(a, b):
        return weight.grading(a, b)

    left_ops: list[Factor] = []   # applied to work as O @ work, in order
    right_ops: list[Factor] = []  # applied as work @ O, in order
    free_rows = set(range(n))
    free_cols = set(range(n))
    pivots = {}
    for _ in range(n):
        best = None
        for a in sorted(free_rows):
            for b in sorted(free_cols):
                e = work[a][b]
                if e.is_zero():
                    continue
                v = e.val_lower() + grading(a, b)
                if best is None or v < best[0]:
                    best = (v, a, b)
        if best is None:
            raise NotInvertible("matrix is singular modulo truncation")
        _, p, q = best
        pivots[p] = q
        inv = work[p][q].inverse()
        for a in sorted(free_rows - {p}):
            if work[a][q].is_zero():
                continue
            quot = work[a][q] * inv
            fac = _elementary_word(-quot, a, p, n)
            left_ops.append(fac)
            for col in range(n):
                work[a][col] = work[a][col] - quot * work[p][col]
        for b in sorted(free_cols - {q}):
            if work[p][b].is_zero():
                continue
            quot = inv * work[p][b]
            fac = _elementary_word(-quot, q, b, n)
            right_ops.append(fac)
            for row in range(n):
                work[row][b] = work[row][b] - work[row][q] * quot
        free_rows.discard(p)
        free_cols.discard(q)

    # work is now monomial-supported: row p has its only entry at pivots[p],
    # equal to a unit times an integer power of z.
    perm_rows = [[LaurentSeries.zero(INF)] * n for _ in range(n)]
    xi = [0] * n
    units = [LaurentSeries.one(INF)] * n
    for p, q in pivots.items():
        e = work[p][q]
        v = e.val_lower()
        xi[q] = int(v)
        units[q] = e.shift(-int(v))
        perm_rows[p][q] = LaurentSeries.one(INF)
    perm = ConstMat([[perm_rows[a][b].coeff(0) for b in range(n)] for a in range(n)])

    # g = L^-1 (P z^Xi U) R^-1 with L = product(left_ops reversed order applied),
    # R = right_ops in application order.
    g1_factors: list[Factor] = [op.inverse() for op in left_ops]
    g1_factors.append(ConstFactor(perm))
    g2_factors: list[Factor] = list(_unit_diag_word(list(units), n))
    g2_factors.extend(op.inverse() for op in reversed(right_ops))

    # words are stored replay-style: word_matrix([f1..fk]) = fk ... f1
    g1 = GaugeWord(tuple(reversed(g1_factors)))
    g2 = GaugeWord(tuple(reversed(g2_factors)))
    return g1, tuple(xi), g2


def birkhoff_product(g1: GaugeWord, xi: tuple[int, ...], g2: GaugeWord, n: int) -> MatSeries:
    """Reassemble g1 * z^Xi * g2 as a matrix (for verification)."""
    m1 = word_matrix(g1, n)
    m2 = word_matrix(g2, n)
    return m1 @ _diag_monomials(list(xi), n) @ m2
