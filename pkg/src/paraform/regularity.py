"""Regular-singularity machinery: logarithmic normal forms, cocharacter
twists, the regularity decision, and the relative-regularity criterion.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .series import INF, LaurentSeries
from .liealg import (ConstMat, Inconsistent, MatSeries, Subalgebra,
                     jordan_chevalley, nullspace, rational_eigenvalues,
                     rref, solve_linear)
from .gauge import (CocharFactor, Connection, ConstFactor, ExpFactor,
                    GaugeWord, apply_factor, gauge)
from .parahoric import (Weight, ZeroConnection, in_filtration, leading_index,
                        levi_flatten, max_representable_slot, residue,
                        residue0, slot_entry_support, slot_flat,
                        slot_unflatten, slot_values)
from .reduction import (FieldExtensionNeeded, ReductionBudget, ReductionReport,
                        full_reduce, reduce_to_cartan)


class NotLogarithmic(Exception):
    pass


@dataclass(frozen=True)
class RegularityVerdict:
    regular: bool
    witness_weight: Weight | None
    witness_gauge: GaugeWord | None


# ---------------------------------------------------------------------------
# logarithmic normal form
# ---------------------------------------------------------------------------

def _log_coefficient(conn: Connection) -> MatSeries:
    """X with A = X dz/z; raises when A has worse than a simple pole
    relative to the weighted filtration."""
    return conn.mat.shift(1)


def is_boalch_type(weight: Weight, conn: Connection, r: ConstMat) -> bool:
    """Every graded monomial of z*A at degree i is an ad_r eigenvector
    with eigenvalue i (up to the effective truncation)."""
    x = _log_coefficient(conn)
    n = x.n
    for a in range(n):
        for b in range(n):
            s = x.rows[a][b]
            for i, _ in s.coeffs.items():
                piece = ConstMat.unit(n, a, b, s.coeff(i))
                if r.bracket(piece) != piece.scale(i):
                    return False
    return True


def _degree_operator_rows(weight: Weight, r_pivot: ConstMat, omega, support, n):
    """Rows of U -> (ad_pivot - D) U on the slot space, D the z-degree."""
    rows = []
    units = [ConstMat.unit(n, a, b) for (a, b) in support]
    images = []
    for (a, b), u in zip(support, units):
        deg = omega - weight.grading(a, b)
        images.append((r_pivot.bracket(u) - u.scale(deg)).flat())
    for i in range(n * n):
        rows.append([img[i] for img in images])
    return rows


def _boalch_kernel(weight: Weight, r: ConstMat, omega, support, n):
    """Basis of the allowed slot subspace: graded pieces that are ad_r
    eigenvectors with eigenvalue equal to their z-degree."""
    rows = _degree_operator_rows(weight, r, omega, support, n)
    kern = nullspace(rows)
    out = []
    for vec in kern:
        m = ConstMat.zeros(n)
        for coef, (a, b) in zip(vec, support):
            if coef:
                m = m + ConstMat.unit(n, a, b, coef)
        out.append(m)
    return out


def boalch_normalize(weight: Weight, conn: Connection):
    """Normalize a logarithmic weighted-parahoric connection so that every
    degree-i coefficient is an ad_R eigenvector with eigenvalue i, R the
    semisimple part of the constant Levi datum.

    Order-by-order rational linear solves; raises FieldExtensionNeeded
    when a system is inconsistent over Q (eigenvalue splitting needed)
    and NotLogarithmic when the input is not a weighted simple pole.
    """
    if conn.higgs:
        raise ValueError("normalization is defined for connections")
    x = _log_coefficient(conn)
    if not in_filtration(weight, x, "parahoric"):
        raise NotLogarithmic("input is not a weighted logarithmic form")
    n = conn.n
    r = jordan_chevalley(residue0(weight, x))[0]
    factors = []
    guard = 0
    while True:
        guard += 1
        if guard > 4 * n * n + 40:
            raise FieldExtensionNeeded("normalization did not stabilize")
        x = _log_coefficient(conn)
        bound = max_representable_slot(weight, x)
        pivot = levi_flatten(weight, residue(weight, x))
        target = None
        for w in slot_values(weight, x):
            if w >= bound:
                continue
            support = slot_entry_support(weight, n, w)
            f = slot_flat(weight, x, w)
            if _in_span(_boalch_kernel(weight, r, w, support, n), f):
                continue
            target = (w, f, support)
            break
        if target is None:
            break
        w, f, support = target
        kern = _boalch_kernel(weight, r, w, support, n)
        rows = _degree_operator_rows(weight, pivot, w, support, n)
        ncols = len(support)
        kcols = [k.flat() for k in kern]
        full_rows = [rows[i] + [kc[i] for kc in kcols] for i in range(n * n)]
        rhs = f.flat()
        sol = solve_linear(full_rows, rhs)
        if sol is None:
            raise FieldExtensionNeeded(
                "a degree system is inconsistent over the rationals")
        u = ConstMat.zeros(n)
        for coef, (a, b) in zip(sol[:ncols], support):
            if coef:
                u = u + ConstMat.unit(n, a, b, coef)
        if u.is_zero():
            raise FieldExtensionNeeded("degree system returned no usable move")
        # gauge argument at slot w of z*A corresponds to exponents w - grade
        fac = ExpFactor(slot_unflatten(weight, u, w))
        conn = apply_factor(fac, conn)
        factors.append(fac)
    return conn, GaugeWord(tuple(factors)), r


def _in_span(basis, m: ConstMat) -> bool:
    if m.is_zero():
        return True
    if not basis:
        return False
    cols = [b.flat() for b in basis]
    rows = [[cols[j][i] for j in range(len(cols))] for i in range(len(cols[0]))]
    return solve_linear(rows, m.flat()) is not None


# ---------------------------------------------------------------------------
# cocharacter twist
# ---------------------------------------------------------------------------

def deligne_twist(conn: Connection, r: ConstMat):
    """Twist a normalized logarithmic connection by an integer cocharacter
    so that the coefficient becomes constant.

    The twist exponents are read from the integer-difference components
    of the eigenvalues of r; a non-diagonal r is first diagonalized when
    its spectrum is rational, otherwise FieldExtensionNeeded.
    """
    n = conn.n
    factors = []
    diag = all(r.rows[a][b] == 0 for a in range(n) for b in range(n) if a != b)
    if not diag:
        eigs = rational_eigenvalues(r)
        if len(eigs) != n:
            raise FieldExtensionNeeded("twist needs a rational spectrum")
        cols = []
        ident = ConstMat.identity(n)
        for e in sorted(set(eigs), reverse=True):
            shifted = r - ident.scale(e)
            for vec in nullspace([list(row) for row in shifted.rows]):
                cols.append(vec)
        v = ConstMat([[cols[j][i] for j in range(n)] for i in range(n)])
        g = v.inverse()
        factors.append(ConstFactor(g))
        conn = apply_factor(factors[-1], conn)
        r = g @ r @ v
    evals = [r.rows[i][i] for i in range(n)]
    # integer parts realize every integer eigenvalue difference, and the
    # scalar part of the twist cancels the integer part of the residue
    import math as _math
    xi = [_math.floor(e) for e in evals]
    fac = CocharFactor(tuple(-x for x in xi))
    conn = apply_factor(fac, conn)
    factors.append(fac)
    return conn, GaugeWord(tuple(factors))


# ---------------------------------------------------------------------------
# regularity decisions
# ---------------------------------------------------------------------------

def reduce_with_normalization(weight: Weight, conn: Connection,
                              budget: ReductionBudget | None = None) -> ReductionReport:
    """full_reduce followed, on a logarithmic exit of a genuine connection,
    by the Boalch normalization; upgrades the form class when it applies."""
    report = full_reduce(weight, conn, budget)
    if report.form_class != "logarithmic" or report.final.higgs:
        return report
    scale = report.ramification // conn.context.b
    cover_weight = Weight([t * scale for t in weight.theta])
    try:
        normalized, w2, r = boalch_normalize(cover_weight, report.final)
    except (NotLogarithmic, FieldExtensionNeeded):
        return report
    if not is_boalch_type(cover_weight, normalized, r):
        return report
    return ReductionReport(
        form_class="boalch",
        final=normalized,
        ramification=report.ramification,
        certificate=report.certificate.concat(w2),
        slope=report.slope,
        effective_trunc=normalized.mat.trunc_effective(),
        progress_log=report.progress_log + (("boalch-normalize", {}),),
    )


def is_regular(conn: Connection, budget: ReductionBudget | None = None) -> RegularityVerdict:
    """Slope-zero test with a replay-verified parahoric witness."""
    if conn.higgs:
        raise ValueError("regularity is defined for connections")
    if conn.is_zero():
        raise ZeroConnection("the zero connection has no regularity class")
    weight = Weight.zero(conn.n)
    report = full_reduce(weight, conn, budget)
    if report.slope != 0:
        return RegularityVerdict(False, None, None)
    final = report.final
    witness_weight = Weight.zero(conn.n)
    x = final.mat.shift(1)
    if not in_filtration(witness_weight, x, "parahoric"):
        raise AssertionError("logarithmic exit failed the filtration check")
    replay = gauge(report.certificate, conn)
    if not replay.agrees(final):
        raise AssertionError("certificate replay mismatch")
    return RegularityVerdict(True, witness_weight, report.certificate)


def relative_regularity(conn: Connection, budget: ReductionBudget | None = None):
    """Criterion based on adding a dominating regular semisimple pole:
    B = Q + A must reduce to Q plus a Cartan tail of simple-pole order.

    Returns (verdict, weight, template_connection_or_None, certificate).
    """
    if conn.is_zero():
        raise ZeroConnection("the zero connection has no regularity class")
    weight = Weight.zero(conn.n)
    verdict = is_regular(conn, budget)
    if verdict.regular:
        return True, verdict.witness_weight, None, verdict.witness_gauge

    n = conn.n
    c = leading_index(weight, conn)
    if c <= 1:
        # simple pole but not regular cannot happen; defensive
        return False, weight, None, GaugeWord.identity()
    # dominating scale keeps the perturbed spectrum rational and separated
    bound = Fraction(0)
    for row in conn.mat.rows:
        for s in row:
            for val in s.coeffs.values():
                bound = max(bound, abs(val))
    k = 2 * (int(bound) + 1) * n
    q_const = ConstMat.diag([k * (a + 1) for a in range(n)])
    t = conn.mat.trunc_effective()
    q_mat = MatSeries.zeros(n, t)
    for rdeg in range(-c, -1):
        q_mat = q_mat + MatSeries.from_const(q_const, t, rdeg)
    template = conn.with_mat(q_mat)
    b_conn = conn.with_mat(conn.mat + q_mat)

    lead0 = slot_flat(weight, b_conn.mat, _min_slot(weight, b_conn.mat))
    s_full = jordan_chevalley(lead0)[0]
    b_red, word = reduce_to_cartan(weight, b_conn, [s_full])

    # normalize the Cartan to the diagonal torus (ascending spectrum
    # matches the template ordering by dominance of k)
    eigs = rational_eigenvalues(s_full)
    if len(eigs) != n:
        raise FieldExtensionNeeded("criterion needs a rational spectrum")
    cols = []
    ident = ConstMat.identity(n)
    for e in sorted(set(eigs)):
        shifted = s_full - ident.scale(e)
        for vec in nullspace([list(row) for row in shifted.rows]):
            cols.append(vec)
    v = ConstMat([[cols[j][i] for j in range(n)] for i in range(n)])
    fac = ConstFactor(v.inverse())
    b_red = apply_factor(fac, b_red)
    word = word.then(fac)

    residual = b_red.mat - q_mat
    ok = True
    for a in range(n):
        for b in range(n):
            s = residual.rows[a][b]
            for e in s.coeffs:
                if a != b or e < -1:
                    ok = False
    return ok, weight, template, word


def _min_slot(weight: Weight, mat: MatSeries):
    vals = slot_values(weight, mat)
    if not vals:
        raise ZeroConnection("zero matrix has no slots")
    return vals[0]
