"""Weights, weighted filtrations, residues and depth.

A weight is a rational point of the standard apartment for the diagonal
torus of gl_n.  It grades matrix entries by lam(a, b) = theta_a -
theta_b, and the weighted filtration keeps the grade-lam coefficient at
z^i exactly when lam + i >= 0 (Levi part: = 0, pro-unipotent part:
> 0).  The canonical weighted representation splits every monomial as
z^r * (graded piece at z^i) with i = -floor(lam), which pins the sharp
level l = lam + i inside [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .series import INF, LaurentSeries, frac, frac_str
from .liealg import ConstMat, LieError, MatSeries
from .gauge import (Connection, ConstFactor, ExpFactor, Factor, GaugeWord,
                    apply_factor, gauge)


class ParahoricError(LieError):
    pass


class NotParahoric(ParahoricError):
    pass


class ZeroConnection(ParahoricError):
    pass


class ScaleTooSmall(ParahoricError):
    pass


@dataclass(frozen=True)
class Weight:
    """Rational point (theta_1, ..., theta_n) of the standard apartment."""

    theta: tuple[Fraction, ...]

    def __init__(self, theta):
        object.__setattr__(self, "theta", tuple(frac(t) for t in theta))

    @staticmethod
    def zero(n: int) -> "Weight":
        return Weight([0] * n)

    @property
    def n(self) -> int:
        return len(self.theta)

    def grading(self, a: int, b: int) -> Fraction:
        """Grade of the entry (a, b): theta_a - theta_b (0-indexed)."""
        return self.theta[a] - self.theta[b]

    def is_integer(self) -> bool:
        """All pairwise grades integral."""
        return all((t - self.theta[0]).denominator == 1 for t in self.theta)

    def is_scalar(self) -> bool:
        """Fixed by the full symmetric group: all entries equal."""
        return all(t == self.theta[0] for t in self.theta)

    def as_matrix(self) -> ConstMat:
        return ConstMat.diag(list(self.theta))

    def max_grade(self) -> Fraction:
        return max(self.theta) - min(self.theta)

    def denominator(self) -> int:
        d = 1
        for t in self.theta:
            d = d * t.denominator // math.gcd(d, t.denominator)
        return d

    def to_strings(self):
        return [frac_str(t) for t in self.theta]


def iwahori_weight(n: int, c_scale: int) -> Weight:
    """Alcove-interior weight theta_a = (n - 1 - a)/c_scale (0-indexed).

    The attached filtration is an Iwahori one: constant parts are forced
    upper triangular.  Requires every grade strictly inside (-1, 1).
    """
    if c_scale < 1 or Fraction(n - 1, c_scale) >= 1:
        raise ScaleTooSmall("need c_scale > n - 1 for an alcove-interior weight")
    return Weight([Fraction(n - 1 - a, c_scale) for a in range(n)])


# ---------------------------------------------------------------------------
# filtration membership, residues
# ---------------------------------------------------------------------------

def in_filtration(weight: Weight, x: MatSeries, part: str = "parahoric") -> bool:
    """Entrywise filtration test: lam + i >= 0 / == 0 / > 0 per part."""
    if part not in ("parahoric", "levi", "unipotent"):
        raise ValueError(f"unknown filtration part {part!r}")
    for a in range(x.n):
        for b in range(x.n):
            lam = weight.grading(a, b)
            for i in x.rows[a][b].coeffs:
                v = lam + i
                if part == "parahoric" and v < 0:
                    return False
                if part == "levi" and v != 0:
                    return False
                if part == "unipotent" and v <= 0:
                    return False
    return True


def residue(weight: Weight, x: MatSeries) -> MatSeries:
    """Levi part: keep exactly the lam + i = 0 monomials."""
    if not in_filtration(weight, x, "parahoric"):
        raise NotParahoric("residue needs a parahoric element")
    n = x.n
    out = []
    for a in range(n):
        row = []
        for b in range(n):
            lam = weight.grading(a, b)
            s = x.rows[a][b]
            if lam.denominator == 1:
                keep = {-int(lam): s.coeff(-int(lam))} if -int(lam) < s.trunc else {}
            else:
                keep = {}
            row.append(LaurentSeries(keep, s.trunc))
        out.append(row)
    return MatSeries(out)


def residue0(weight: Weight, x: MatSeries) -> ConstMat:
    """Constant coefficient of the residue (the i = 0 slice)."""
    r = residue(weight, x)
    n = x.n
    return ConstMat([[r.rows[a][b].coeff(0) if weight.grading(a, b) == 0 else 0
                      for b in range(n)] for a in range(n)])


def levi_flatten(weight: Weight, x: MatSeries) -> ConstMat:
    """Forget z on a Levi element: entry (a, b) takes its z^(-lam) coefficient."""
    n = x.n
    out = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            lam = weight.grading(a, b)
            if lam.denominator == 1:
                out[a][b] = x.rows[a][b].coeff(-int(lam))
    return ConstMat(out)


def levi_unflatten(weight: Weight, m: ConstMat, trunc=INF) -> MatSeries:
    """Inverse of levi_flatten on integer-grade support."""
    n = m.n
    rows = []
    for a in range(n):
        row = []
        for b in range(n):
            c = m.rows[a][b]
            lam = weight.grading(a, b)
            if c and lam.denominator != 1:
                raise ParahoricError("entry sits at a non-integral grade")
            row.append(LaurentSeries.monomial(c, -int(lam), trunc) if c
                       else LaurentSeries.zero(trunc))
        rows.append(row)
    return MatSeries(rows)


# ---------------------------------------------------------------------------
# weighted representation and leading index
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RepTerm:
    """One graded monomial X z^(r + i): r the slot, l = lam + i the sharp level."""

    r: int
    level: Fraction
    i: int
    x: ConstMat


@dataclass(frozen=True)
class WeightRep:
    """Canonical weighted representation of a connection."""

    weight: Weight
    c: int
    terms: tuple[RepTerm, ...]

    def reassemble(self, n: int, trunc=INF) -> MatSeries:
        acc = MatSeries.zeros(n, trunc)
        for t in self.terms:
            acc = acc + MatSeries.from_const(t.x, trunc, t.r + t.i)
        return acc

    def export_payload(self):
        return [{"r": t.r, "level": frac_str(t.level), "i": t.i,
                 "matrix": [[frac_str(v) for v in row] for row in t.x.rows]}
                for t in self.terms]


def weight_rep(weight: Weight, conn: Connection) -> WeightRep:
    """Split every monomial canonically: i = -floor(lam), r = k + floor(lam).

    The sharp level l = lam + i lands in [0, 1), each slot r then holds a
    monomial not divisible by z inside the filtration, and reassembling
    the terms reproduces the connection exactly.
    """
    mat = conn.mat
    n = mat.n
    if mat.is_zero():
        raise ZeroConnection("zero connection has no weighted representation")
    buckets: dict[tuple[int, Fraction, int], list] = {}
    for a in range(n):
        for b in range(n):
            lam = weight.grading(a, b)
            fl = math.floor(lam)
            for k, cval in mat.rows[a][b].coeffs.items():
                r = k + fl
                i = -fl
                lev = lam + i
                key = (r, lev, i)
                buckets.setdefault(key, []).append((a, b, cval))
    terms = []
    for (r, lev, i) in sorted(buckets, key=lambda t: (t[0], t[1], t[2])):
        rows = [[Fraction(0)] * n for _ in range(n)]
        for a, b, cval in buckets[(r, lev, i)]:
            rows[a][b] = cval
        terms.append(RepTerm(r, lev, i, ConstMat(rows)))
    c = -min(t.r for t in terms)
    return WeightRep(weight, c, tuple(terms))


def leading_index(weight: Weight, conn: Connection) -> int:
    """The weighted order: -min slot of the canonical representation."""
    return weight_rep(weight, conn).c


# ---------------------------------------------------------------------------
# weight-graded slots (absolute weight omega = k + lam on the dz-coefficient)
# ---------------------------------------------------------------------------

def slot_values(weight: Weight, mat: MatSeries):
    """Sorted absolute weights omega = exponent + grade present in mat."""
    vals = set()
    for a in range(mat.n):
        for b in range(mat.n):
            lam = weight.grading(a, b)
            for k in mat.rows[a][b].coeffs:
                vals.add(k + lam)
    return sorted(vals)


def slot_flat(weight: Weight, mat: MatSeries, omega: Fraction) -> ConstMat:
    """Constant matrix of the omega-slot (entry (a,b) reads z^(omega - lam))."""
    n = mat.n
    out = [[Fraction(0)] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            e = omega - weight.grading(a, b)
            if e.denominator == 1:
                out[a][b] = mat.rows[a][b].coeff(int(e))
    return ConstMat(out)


def slot_unflatten(weight: Weight, m: ConstMat, omega: Fraction, trunc=INF) -> MatSeries:
    n = m.n
    rows = []
    for a in range(n):
        row = []
        for b in range(n):
            c = m.rows[a][b]
            e = omega - weight.grading(a, b)
            if c and e.denominator != 1:
                raise ParahoricError("entry does not sit in the slot lattice")
            row.append(LaurentSeries.monomial(c, int(e), trunc) if c
                       else LaurentSeries.zero(trunc))
        rows.append(row)
    return MatSeries(rows)


def slot_entry_support(weight: Weight, n: int, omega: Fraction):
    """Entries (a, b) whose grade is congruent to omega mod 1."""
    return [(a, b) for a in range(n) for b in range(n)
            if (omega - weight.grading(a, b)).denominator == 1]


def max_representable_slot(weight: Weight, mat: MatSeries):
    """Slots strictly below this weight are fully determined by the truncation."""
    best = INF
    for a in range(mat.n):
        for b in range(mat.n):
            t = mat.rows[a][b].trunc
            if t != INF:
                best = min(best, t + weight.grading(a, b))
    return best


def grade_component(weight: Weight, m: ConstMat, grade: Fraction) -> ConstMat:
    n = m.n
    return ConstMat([[m.rows[a][b] if weight.grading(a, b) == grade else 0
                      for b in range(n)] for a in range(n)])


def grade_zero(weight: Weight, m: ConstMat) -> ConstMat:
    return grade_component(weight, m, Fraction(0))


def grades_present(weight: Weight, m: ConstMat):
    return sorted({weight.grading(a, b) for a in range(m.n) for b in range(m.n)
                   if m.rows[a][b] != 0})


# ---------------------------------------------------------------------------
# Moy-Prasad membership and depth at a point
# ---------------------------------------------------------------------------

def in_depth_filtration(x: Weight, s: Fraction, m: MatSeries) -> bool:
    """Entrywise test lam(a, b) + i >= s."""
    s = frac(s)
    for a in range(m.n):
        for b in range(m.n):
            lam = x.grading(a, b)
            for i in m.rows[a][b].coeffs:
                if lam + i < s:
                    return False
    return True


def depth_at(x: Weight, conn: Connection) -> Fraction:
    """Depth of the connection at the apartment point x.

    Equals max(0, -(deepest filtration value of the dz/z-normalized
    matrix)): the leading stratum absorbs the deepest slice and
    everything else must move strictly up the filtration.
    """
    mat = conn.mat
    deepest = None
    for a in range(mat.n):
        for b in range(mat.n):
            lam = x.grading(a, b)
            for k in mat.rows[a][b].coeffs:
                v = lam + k + 1
                if deepest is None or v < deepest:
                    deepest = v
    if deepest is None:
        return Fraction(0)
    return max(Fraction(0), -deepest)


# ---------------------------------------------------------------------------
# residue equivariance (transport of the Levi part)
# ---------------------------------------------------------------------------

def _levi_group_contribution(weight: Weight, f: Factor, n: int) -> ConstMat:
    """Centralizer element matching a parahoric generator's action on residues.

    Constant factors contribute their grade-zero block (the positive
    part is pro-unipotent and acts trivially); exponential factors
    contribute exp of the filtration-level-zero slice of the argument.
    """
    if isinstance(f, ConstFactor):
        c = f.mat
        for a in range(n):
            for b in range(n):
                if c.rows[a][b] != 0 and weight.grading(a, b) < 0:
                    raise NotParahoric("constant factor leaves the parahoric group")
        c0 = grade_zero(weight, c)
        c0.inverse()  # raises NotInvertible when the Levi block is singular
        return c0
    if isinstance(f, ExpFactor):
        arg = f.arg
        levi = [[Fraction(0)] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                lam = weight.grading(a, b)
                for i, cval in arg.rows[a][b].coeffs.items():
                    v = lam + i
                    if v < 0:
                        raise NotParahoric("exponential argument dips below the filtration")
                    if v == 0:
                        levi[a][b] += cval
        lm = ConstMat(levi)
        if lm.is_zero():
            return ConstMat.identity(n)
        if not lm.is_nilpotent():
            raise ParahoricError("level-zero part of the generator is not nilpotent")
        acc = ConstMat.identity(n)
        term = ConstMat.identity(n)
        k = 0
        while True:
            k += 1
            term = (term @ lm).scale(Fraction(1, k))
            if term.is_zero():
                return acc
            acc = acc + term
    raise NotParahoric(f"unsupported factor for residue transport: {type(f).__name__}")


def residue_transport(weight: Weight, word: GaugeWord, x: MatSeries):
    """Check Res(Ad_g X) = Ad_h(Res X) and return (h, ok).

    h is composed factor by factor from the parahoric generator word;
    the adjoint replay runs in Higgs mode (the statement is about the
    conjugation action on filtration elements, not on connections).
    """
    if not in_filtration(weight, x, "parahoric"):
        raise NotParahoric("residue transport needs a parahoric element")
    n = x.n
    h = ConstMat.identity(n)
    for f in word.factors:
        h = _levi_group_contribution(weight, f, n) @ h
    carrier = Connection(x, higgs=True)
    moved = gauge(word, carrier).mat
    lhs = residue(weight, moved)
    rhs_const = h @ levi_flatten(weight, residue(weight, x)) @ h.inverse()
    rhs = levi_unflatten(weight, rhs_const, moved.trunc_effective())
    ok = lhs.agrees(rhs)
    return h, ok
