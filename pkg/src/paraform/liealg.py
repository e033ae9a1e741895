"""gl_n over exact rationals and over truncated Laurent series.

Constant matrices (`ConstMat`) carry the exact linear algebra: kernels,
deterministic linear solves, characteristic polynomials, the rational
Jordan decomposition, sl2 triples and centralizers.  `MatSeries` is the
same shell over `LaurentSeries` entries and provides brackets, truncated
exponentials and exact inversion.

All solvers break ties lexicographically in the elementary-matrix basis
E_ab ordered row-major, so outputs are reproducible.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .series import INF, LaurentSeries, frac, frac_str


class LieError(Exception):
    """Base class for algebra-level failures."""


class DimensionMismatch(LieError):
    pass


class NonConvergent(LieError):
    """Truncated exponential does not terminate."""


class NotNilpotent(LieError):
    pass


class NotInAmbient(LieError):
    pass


class Inconsistent(LieError):
    """A linear system required to be solvable has no solution."""


class NotInvertible(LieError):
    pass


# ---------------------------------------------------------------------------
# exact linear algebra over Fraction
# ---------------------------------------------------------------------------

def rref(rows: list[list[Fraction]]):
    """Reduced row echelon form; returns (rows, pivot column list)."""
    rows = [list(r) for r in rows]
    if not rows:
        return rows, []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, len(rows)):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def solve_linear(rows: list[list[Fraction]], rhs: list[Fraction]):
    """One solution of rows|rhs with free variables set to zero, or None."""
    if not rows:
        return []
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug)
    ncols = len(rows[0])
    if ncols in pivots:
        return None
    sol = [Fraction(0)] * ncols
    prow = 0
    for c in pivots:
        sol[c] = red[prow][-1]
        prow += 1
    return sol


def nullspace(rows: list[list[Fraction]]):
    """Canonical basis of the kernel (RREF free-variable vectors)."""
    if not rows:
        return []
    red, pivots = rref(rows)
    ncols = len(rows[0])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        prow = 0
        for c in pivots:
            vec[c] = -red[prow][f]
            prow += 1
        basis.append(vec)
    return basis


# ---------------------------------------------------------------------------
# polynomial helpers over Fraction (ascending coefficient lists)
# ---------------------------------------------------------------------------

def _poly_trim(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_add(p, q):
    out = [Fraction(0)] * max(len(p), len(q))
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] += c
    return _poly_trim(out)


def _poly_scale(p, c):
    return _poly_trim([x * c for x in p])


def _poly_mul(p, q):
    if not p or not q:
        return []
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _poly_trim(out)


def _poly_divmod(p, q):
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    p = list(p)
    quot = [Fraction(0)] * max(0, len(p) - len(q) + 1)
    while len(p) >= len(q) and p:
        f = p[-1] / q[-1]
        k = len(p) - len(q)
        quot[k] = f
        for i, c in enumerate(q):
            p[i + k] -= f * c
        _poly_trim(p)
    return _poly_trim(quot), p


def _poly_deriv(p):
    return _poly_trim([i * c for i, c in enumerate(p)][1:])


def _poly_monic(p):
    return _poly_scale(p, 1 / p[-1]) if p else p


def _poly_gcd(p, q):
    p, q = list(p), list(q)
    while q:
        p, q = q, _poly_divmod(p, q)[1]
    return _poly_monic(p)


def _poly_xgcd(p, q):
    """(g, u, v) with u*p + v*q = g, g monic gcd."""
    r0, r1 = list(p), list(q)
    s0, s1 = [Fraction(1)], []
    t0, t1 = [], [Fraction(1)]
    while r1:
        quot, rem = _poly_divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, _poly_add(s0, _poly_scale(_poly_mul(quot, s1), -1))
        t0, t1 = t1, _poly_add(t0, _poly_scale(_poly_mul(quot, t1), -1))
    if r0:
        lead = r0[-1]
        r0 = _poly_scale(r0, 1 / lead)
        s0 = _poly_scale(s0, 1 / lead)
        t0 = _poly_scale(t0, 1 / lead)
    return r0, s0, t0


# ---------------------------------------------------------------------------
# constant matrices
# ---------------------------------------------------------------------------

class ConstMat:
    """Immutable n x n matrix over Fraction."""

    __slots__ = ("n", "rows")

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(frac(x) for x in r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionMismatch("matrix must be square")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, *a):
        raise AttributeError("ConstMat is immutable")

    @staticmethod
    def zeros(n: int) -> "ConstMat":
        return ConstMat([[0] * n for _ in range(n)])

    @staticmethod
    def identity(n: int) -> "ConstMat":
        return ConstMat([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @staticmethod
    def unit(n: int, a: int, b: int, c=1) -> "ConstMat":
        """c * E_ab (0-indexed)."""
        rows = [[0] * n for _ in range(n)]
        rows[a][b] = frac(c)
        return ConstMat(rows)

    @staticmethod
    def diag(entries: Sequence) -> "ConstMat":
        n = len(entries)
        return ConstMat([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    def __getitem__(self, ab):
        a, b = ab
        return self.rows[a][b]

    def __eq__(self, other):
        return isinstance(other, ConstMat) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        body = "; ".join(" ".join(frac_str(x) for x in r) for r in self.rows)
        return f"ConstMat[{body}]"

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.rows for x in r)

    def __add__(self, other: "ConstMat") -> "ConstMat":
        self._same(other)
        return ConstMat([[a + b for a, b in zip(r1, r2)]
                         for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other: "ConstMat") -> "ConstMat":
        self._same(other)
        return ConstMat([[a - b for a, b in zip(r1, r2)]
                         for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self) -> "ConstMat":
        return self.scale(-1)

    def scale(self, c) -> "ConstMat":
        c = frac(c)
        return ConstMat([[c * x for x in r] for r in self.rows])

    def __matmul__(self, other: "ConstMat") -> "ConstMat":
        self._same(other)
        n = self.n
        cols = list(zip(*other.rows))
        return ConstMat([[sum(a * b for a, b in zip(row, col)) for col in cols]
                         for row in self.rows])

    def _same(self, other):
        if not isinstance(other, ConstMat) or other.n != self.n:
            raise DimensionMismatch("incompatible matrices")

    def bracket(self, other: "ConstMat") -> "ConstMat":
        return self @ other - other @ self

    def trace(self) -> Fraction:
        return sum(self.rows[i][i] for i in range(self.n))

    def power(self, k: int) -> "ConstMat":
        out = ConstMat.identity(self.n)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def is_nilpotent(self) -> bool:
        return self.power(self.n).is_zero()

    def flat(self) -> list[Fraction]:
        return [x for r in self.rows for x in r]

    @staticmethod
    def from_flat(n: int, vec: Sequence[Fraction]) -> "ConstMat":
        return ConstMat([vec[i * n:(i + 1) * n] for i in range(n)])

    def inverse(self) -> "ConstMat":
        n = self.n
        aug = [list(r) + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
               for i, r in enumerate(self.rows)]
        red, pivots = rref(aug)
        if pivots[:n] != list(range(n)):
            raise NotInvertible("singular matrix")
        return ConstMat([row[n:] for row in red[:n]])

    def charpoly(self) -> list[Fraction]:
        """Monic characteristic polynomial, ascending coefficients."""
        n = self.n
        coeffs = [Fraction(0)] * (n + 1)
        coeffs[n] = Fraction(1)
        acc = ConstMat.zeros(n)
        for k in range(1, n + 1):
            acc = self @ acc + self.scale(coeffs[n - k + 1])
            coeffs[n - k] = -acc.trace() / k
        return coeffs

    def eval_poly(self, p: Sequence[Fraction]) -> "ConstMat":
        out = ConstMat.zeros(self.n)
        for c in reversed(list(p)):
            out = out @ self + ConstMat.identity(self.n).scale(c)
        return out

    def det(self) -> Fraction:
        cp = self.charpoly()
        return cp[0] * (-1) ** self.n


def bracket(x, y):
    """Lie bracket xy - yx for matching matrix kinds."""
    return x.bracket(y)


def jordan_chevalley(m: ConstMat) -> tuple[ConstMat, ConstMat]:
    """Rational Jordan decomposition m = s + n, via squarefree Newton lifting.

    s is semisimple (annihilated by the squarefree part of the
    characteristic polynomial), n is nilpotent, [s, n] = 0, and both
    parts are polynomials in m.  No eigenvalue factorization is used.
    """
    chi = m.charpoly()
    g = _poly_divmod(chi, _poly_gcd(chi, _poly_deriv(chi)))[0]
    g = _poly_monic(g)
    _, _, v = _poly_xgcd(g, _poly_deriv(g))
    s = m
    for _ in range(m.n + 2):
        gs = s.eval_poly(g)
        if gs.is_zero():
            nil = m - s
            return s, nil
        s = s - gs @ s.eval_poly(v)
    raise LieError("Jordan decomposition did not stabilize")


def is_semisimple(m: ConstMat) -> bool:
    chi = m.charpoly()
    g = _poly_divmod(chi, _poly_gcd(chi, _poly_deriv(chi)))[0]
    return m.eval_poly(g).is_zero()


def integer_eigenvalues(m: ConstMat) -> list[int]:
    """Integer roots of the characteristic polynomial with multiplicity."""
    p = m.charpoly()
    roots = []
    while True:
        if not p or len(p) == 1:
            break
        den = 1
        for c in p:
            den = den * c.denominator // _gcd(den, c.denominator)
        ip = [c * den for c in p]
        const = ip[0]
        found = None
        if const == 0:
            found = 0
        else:
            cn = abs(int(const))
            for d in sorted(_divisors(cn)):
                for cand in (d, -d):
                    if _poly_eval_scalar(p, Fraction(cand)) == 0:
                        found = cand
                        break
                if found is not None:
                    break
        if found is None:
            break
        roots.append(int(found))
        p, _ = _poly_divmod(p, [Fraction(-found), Fraction(1)])
    return sorted(roots)


def rational_eigenvalues(m: ConstMat) -> list[Fraction]:
    """Rational roots of the characteristic polynomial with multiplicity."""
    p = m.charpoly()
    roots = []
    while len(p) > 1:
        den = 1
        for c in p:
            den = den * c.denominator // _gcd(den, c.denominator)
        ip = [int(c * den) for c in p]
        found = None
        if ip[0] == 0:
            found = Fraction(0)
        else:
            lead = abs(ip[-1])
            const = abs(ip[0])
            for q in sorted(_divisors(lead)):
                for pnum in sorted(_divisors(const)):
                    for cand in (Fraction(pnum, q), Fraction(-pnum, q)):
                        if _poly_eval_scalar(p, cand) == 0:
                            found = cand
                            break
                    if found is not None:
                        break
                if found is not None:
                    break
        if found is None:
            break
        roots.append(found)
        p, _ = _poly_divmod(p, [-found, Fraction(1)])
    return sorted(roots)


def _poly_eval_scalar(p, x: Fraction) -> Fraction:
    out = Fraction(0)
    for c in reversed(list(p)):
        out = out * x + c
    return out


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _divisors(n: int):
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            if d != n // d:
                out.append(n // d)
        d += 1
    return out


# ---------------------------------------------------------------------------
# subalgebras
# ---------------------------------------------------------------------------

class Subalgebra:
    """Span of constant matrices, canonicalized by RREF of the flattened basis."""

    __slots__ = ("ambient_n", "basis")

    def __init__(self, ambient_n: int, basis: Sequence[ConstMat]):
        red, pivots = rref([m.flat() for m in basis])
        canon = tuple(ConstMat.from_flat(ambient_n, red[i]) for i in range(len(pivots)))
        object.__setattr__(self, "ambient_n", ambient_n)
        object.__setattr__(self, "basis", canon)

    def __setattr__(self, *a):
        raise AttributeError("Subalgebra is immutable")

    @staticmethod
    def gl(n: int) -> "Subalgebra":
        return Subalgebra(n, [ConstMat.unit(n, a, b) for a in range(n) for b in range(n)])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coordinates(self, m: ConstMat):
        """Coordinates of m in the basis, or None if not a member."""
        if not self.basis:
            return None if not m.is_zero() else []
        cols = [b.flat() for b in self.basis]
        rows = [[cols[j][i] for j in range(len(cols))] for i in range(len(cols[0]))]
        return solve_linear(rows, m.flat())

    def contains(self, m: ConstMat) -> bool:
        return self.coordinates(m) is not None

    def combine(self, coords) -> ConstMat:
        out = ConstMat.zeros(self.ambient_n)
        for c, b in zip(coords, self.basis):
            if c:
                out = out + b.scale(c)
        return out

    def is_bracket_closed(self) -> bool:
        return all(self.contains(x.bracket(y)) for x in self.basis for y in self.basis)

    def is_abelian(self) -> bool:
        return all(x.bracket(y).is_zero() for x in self.basis for y in self.basis)

    def intersect_entry_support(self, support) -> "Subalgebra":
        """Sub-span of elements supported on the given (a, b) entry set."""
        support = set(support)
        n = self.ambient_n
        rows = []
        for a in range(n):
            for b in range(n):
                if (a, b) not in support:
                    rows.append([bas.rows[a][b] for bas in self.basis])
        kern = nullspace(rows) if rows else [
            [Fraction(1) if i == j else Fraction(0) for j in range(self.dim)]
            for i in range(self.dim)]
        return Subalgebra(n, [self.combine(v) for v in kern])


def centralizer(elems: Iterable[ConstMat], ambient: Subalgebra) -> Subalgebra:
    """Joint centralizer of the elements inside the ambient subalgebra."""
    elems = list(elems)
    for s in elems:
        if not ambient.contains(s):
            raise NotInAmbient("centralizer argument lies outside the ambient algebra")
    rows = []
    for s in elems:
        for i in range(ambient.ambient_n ** 2):
            rows.append([b.bracket(s).flat()[i] for b in ambient.basis])
    if not rows:
        return ambient
    kern = nullspace(rows)
    return Subalgebra(ambient.ambient_n, [ambient.combine(v) for v in kern])


def center(ambient: Subalgebra) -> Subalgebra:
    return centralizer(list(ambient.basis), ambient)


def central_projector(ambient: Subalgebra):
    """Projection g -> z(g) along the trace form; returns a callable.

    For the reductive matrix algebras produced by centralizer descent the
    trace form is nondegenerate on the center, which makes the projector
    well defined and exact.
    """
    zc = center(ambient)
    if zc.dim == 0:
        return lambda m: ConstMat.zeros(ambient.ambient_n)
    gram = [[(zi @ zj).trace() for zj in zc.basis] for zi in zc.basis]
    def project(m: ConstMat) -> ConstMat:
        rhs = [(m @ zi).trace() for zi in zc.basis]
        coords = solve_linear(gram, rhs)
        if coords is None:
            raise LieError("trace form degenerate on the center")
        return zc.combine(coords)
    return project


# ---------------------------------------------------------------------------
# sl2 triples and commutator solves
# ---------------------------------------------------------------------------

class Sl2Triple:
    """Triple (p, q, h) with [h,p] = -2p, [h,q] = 2q, [p,q] = -h.

    p is the given nilpotent (the lowering element), q the raised
    complement, h the integer-spectrum semisimple element.  The sign
    convention is fixed once here and asserted by `verify`.
    """

    __slots__ = ("p", "q", "h")

    def __init__(self, p: ConstMat, q: ConstMat, h: ConstMat):
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "h", h)

    def __setattr__(self, *a):
        raise AttributeError("Sl2Triple is immutable")

    def verify(self) -> bool:
        return (self.h.bracket(self.p) == self.p.scale(-2)
                and self.h.bracket(self.q) == self.q.scale(2)
                and self.p.bracket(self.q) == -self.h)

    def conjugate(self, g: ConstMat) -> "Sl2Triple":
        gi = g.inverse()
        return Sl2Triple(g @ self.p @ gi, g @ self.q @ gi, g @ self.h @ gi)


def _stack_bracket_system(ambient: Subalgebra, equations):
    """Rows of the linear map coords -> concatenated equation values."""
    rows = []
    for eq in equations:
        images = [eq(b).flat() for b in ambient.basis]
        for i in range(ambient.ambient_n ** 2):
            rows.append([img[i] for img in images])
    return rows


def jacobson_morozov(p: ConstMat, ambient: Subalgebra) -> Sl2Triple:
    """Complete a nonzero nilpotent p to an sl2 triple inside ambient.

    Deterministic: both linear solves take the lexicographically minimal
    solution in the ambient basis.
    """
    if p.is_zero():
        raise NotNilpotent("zero element has no sl2 completion")
    if not p.is_nilpotent():
        raise NotNilpotent("element is not nilpotent")
    if not ambient.contains(p):
        raise NotInAmbient("nilpotent lies outside the ambient algebra")
    # h = [p, x] with [h, p] = -2p
    rows = _stack_bracket_system(ambient, [lambda y: p.bracket(y).bracket(p)])
    rhs = p.scale(-2).flat()
    sol = solve_linear(rows, rhs)
    if sol is None:
        raise Inconsistent("no sl2 neutral element; ambient is not reductive enough")
    h = p.bracket(ambient.combine(sol))
    # q with [h, q] = 2q and [q, p] = h
    rows = _stack_bracket_system(
        ambient,
        [lambda y: h.bracket(y) - y.scale(2), lambda y: y.bracket(p)])
    rhs = ConstMat.zeros(p.n).flat() + h.flat()
    sol = solve_linear(rows, rhs)
    if sol is None:
        raise Inconsistent("no raising complement for the sl2 triple")
    q = ambient.combine(sol)
    triple = Sl2Triple(p, q, h)
    if not triple.verify():
        raise LieError("sl2 relations failed to verify")
    return triple


def solve_commutator(s: ConstMat, p_like: ConstMat, b: ConstMat,
                     domain: Subalgebra) -> ConstMat:
    """Solve [s, b + [y, p_like]] = 0 for y in the domain.

    Returns the lexicographically minimal solution; raises Inconsistent
    when the system has none (a violated hypothesis upstream).
    """
    rows = _stack_bracket_system(
        domain, [lambda y: s.bracket(y.bracket(p_like))])
    rhs = (-s.bracket(b)).flat()
    sol = solve_linear(rows, rhs)
    if sol is None:
        raise Inconsistent("commutator equation has no solution in the domain")
    return domain.combine(sol)


# ---------------------------------------------------------------------------
# matrices of series
# ---------------------------------------------------------------------------

class MatSeries:
    """Immutable n x n matrix of LaurentSeries."""

    __slots__ = ("n", "rows")

    def __init__(self, rows: Sequence[Sequence[LaurentSeries]]):
        rows = tuple(tuple(r) for r in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionMismatch("matrix must be square")
        for r in rows:
            for x in r:
                if not isinstance(x, LaurentSeries):
                    raise TypeError("entries must be LaurentSeries")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, *a):
        raise AttributeError("MatSeries is immutable")

    @staticmethod
    def zeros(n: int, trunc=INF) -> "MatSeries":
        return MatSeries([[LaurentSeries.zero(trunc)] * n for _ in range(n)])

    @staticmethod
    def identity(n: int, trunc=INF) -> "MatSeries":
        return MatSeries([[LaurentSeries.one(trunc) if i == j else LaurentSeries.zero(trunc)
                           for j in range(n)] for i in range(n)])

    @staticmethod
    def from_const(m: ConstMat, trunc=INF, exponent: int = 0) -> "MatSeries":
        return MatSeries([[LaurentSeries.monomial(x, exponent, trunc) if x else
                           LaurentSeries.zero(trunc) for x in r] for r in m.rows])

    def __getitem__(self, ab):
        a, b = ab
        return self.rows[a][b]

    def __eq__(self, other):
        return isinstance(other, MatSeries) and self.rows == other.rows

    def __repr__(self):
        return "MatSeries[" + "; ".join(
            ", ".join(repr(x) for x in r) for r in self.rows) + "]"

    def agrees(self, other: "MatSeries", upto=INF) -> bool:
        if other.n != self.n:
            return False
        return all(self.rows[a][b].agrees(other.rows[a][b], upto)
                   for a in range(self.n) for b in range(self.n))

    def is_zero(self) -> bool:
        return all(x.is_zero() for r in self.rows for x in r)

    def trunc_effective(self):
        return min((x.trunc for r in self.rows for x in r), default=INF)

    def val_lower(self):
        return min((x.val_lower() for r in self.rows for x in r), default=INF)

    def map(self, fn) -> "MatSeries":
        return MatSeries([[fn(x) for x in r] for r in self.rows])

    def __add__(self, other: "MatSeries") -> "MatSeries":
        self._same(other)
        return MatSeries([[a + b for a, b in zip(r1, r2)]
                          for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other: "MatSeries") -> "MatSeries":
        self._same(other)
        return MatSeries([[a - b for a, b in zip(r1, r2)]
                          for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self) -> "MatSeries":
        return self.map(lambda x: -x)

    def scale(self, c) -> "MatSeries":
        if isinstance(c, LaurentSeries):
            return self.map(lambda x: x * c)
        return self.map(lambda x: x.scale(c))

    def __matmul__(self, other: "MatSeries") -> "MatSeries":
        self._same(other)
        n = self.n
        out = []
        for a in range(n):
            row = []
            for b in range(n):
                acc = LaurentSeries.zero(INF)
                for k in range(n):
                    acc = acc + self.rows[a][k] * other.rows[k][b]
                row.append(acc)
            out.append(row)
        return MatSeries(out)

    def _same(self, other):
        if not isinstance(other, MatSeries) or other.n != self.n:
            raise DimensionMismatch("incompatible matrices")

    def bracket(self, other: "MatSeries") -> "MatSeries":
        return self @ other - other @ self

    def deriv(self) -> "MatSeries":
        return self.map(lambda x: x.deriv())

    def ramify(self, b: int) -> "MatSeries":
        return self.map(lambda x: x.ramify(b))

    def shift(self, k: int) -> "MatSeries":
        return self.map(lambda x: x.shift(k))

    def truncate(self, trunc) -> "MatSeries":
        return self.map(lambda x: x.truncate(trunc))

    def trace(self) -> LaurentSeries:
        acc = LaurentSeries.zero(INF)
        for i in range(self.n):
            acc = acc + self.rows[i][i]
        return acc

    def coeff(self, exponent: int) -> ConstMat:
        return ConstMat([[x.coeff(exponent) for x in r] for r in self.rows])

    def support(self):
        exps = set()
        for r in self.rows:
            for x in r:
                exps.update(x.coeffs)
        return sorted(exps)

    def power_is_zero(self) -> bool:
        """True when the matrix is nilpotent (checks powers up to n)."""
        p = self
        for _ in range(self.n):
            if p.is_zero():
                return True
            p = p @ self
        return p.is_zero()

    def inverse(self) -> "MatSeries":
        """Exact inverse by valuation-pivoted elimination."""
        n = self.n
        work = [list(r) for r in self.rows]
        aug = [[LaurentSeries.one(INF) if i == j else LaurentSeries.zero(INF)
                for j in range(n)] for i in range(n)]
        row_used = [False] * n
        pivot_of_col = {}
        for col in range(n):
            best = None
            for a in range(n):
                if row_used[a] or work[a][col].is_zero():
                    continue
                v = work[a][col].val_lower()
                if best is None or v < best[0]:
                    best = (v, a)
            if best is None:
                raise NotInvertible("matrix of series is singular modulo truncation")
            a = best[1]
            row_used[a] = True
            pivot_of_col[col] = a
            inv = work[a][col].inverse()
            work[a] = [x * inv for x in work[a]]
            aug[a] = [x * inv for x in aug[a]]
            for i in range(n):
                if i != a and not work[i][col].is_zero():
                    f = work[i][col]
                    work[i] = [x - f * y for x, y in zip(work[i], work[a])]
                    aug[i] = [x - f * y for x, y in zip(aug[i], aug[a])]
        return MatSeries([aug[pivot_of_col[c]] for c in range(n)])


def matseries_charpoly(m: MatSeries) -> list[LaurentSeries]:
    """Characteristic polynomial with LaurentSeries coefficients."""
    n = m.n
    coeffs = [LaurentSeries.zero(INF)] * (n + 1)
    coeffs[n] = LaurentSeries.one(INF)
    acc = MatSeries.zeros(n)
    for k in range(1, n + 1):
        acc = m @ (acc + MatSeries.identity(n).scale(coeffs[n - k + 1]))
        coeffs[n - k] = acc.trace().scale(Fraction(-1, k))
    return coeffs


def exp_trunc(x: MatSeries) -> MatSeries:
    """Truncated exponential sum(x^k / k!).

    Terminates when the terms vanish exactly (nilpotent arguments) or
    when their valuation passes the accumulated truncation, after which
    no later term can contribute.  Raises NonConvergent when neither can
    happen (non-nilpotent constant part, or a non-nilpotent argument of
    negative valuation or infinite truncation).
    """
    n = x.n
    nilpotent = x.power_is_zero()
    if not nilpotent:
        if x.trunc_effective() == INF:
            raise NonConvergent("exponential of a non-nilpotent exact argument")
        if x.val_lower() < 0:
            raise NonConvergent("non-nilpotent argument of negative valuation")
    acc = MatSeries.identity(n, x.trunc_effective())
    term = MatSeries.identity(n)
    stall_val = None
    stall_at = 0
    k = 0
    while True:
        k += 1
        term = (term @ x).scale(Fraction(1, k))
        if term.is_zero():
            break
        acc = acc + term
        v = term.val_lower()
        if v >= acc.trunc_effective():
            break
        if stall_val is None or v > stall_val:
            stall_val = v
            stall_at = k
        elif k - stall_at > n * n + 4:
            raise NonConvergent("exponential argument has a non-nilpotent constant part")
    return acc
