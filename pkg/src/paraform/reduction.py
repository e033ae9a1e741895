"""Reduction engines: commuting-family splitting, nilpotent splitting,
shearing, and the main canonical-form loop.

Every engine returns the connection it produced together with the gauge
word it applied, so each run doubles as a replayable certificate.  The
induction is organized by the absolute weight omega = exponent + grade
of the dz-coefficient: a gauge exp(U) whose argument sits at weight
d > 0 changes the slot at pivot_weight + d at first order and every
other slot strictly above it, so processing slots in ascending order
terminates at the representable bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .series import INF, LaurentSeries, frac_str
from .liealg import (ConstMat, Inconsistent, LieError, MatSeries, Sl2Triple,
                     Subalgebra, centralizer, center, central_projector,
                     integer_eigenvalues, is_semisimple, jacobson_morozov,
                     jordan_chevalley, nullspace, solve_commutator)
from .gauge import (CocharFactor, Connection, ConstFactor, ExpFactor,
                    GaugeWord, RamifyFactor, ShearFactor, apply_factor, gauge)
from .parahoric import (Weight, ZeroConnection, grade_component, grade_zero,
                        grades_present, leading_index, max_representable_slot,
                        slot_entry_support, slot_flat, slot_unflatten,
                        slot_values, weight_rep)


class ReductionError(LieError):
    pass


class OrderTooLow(ReductionError):
    pass


class ZeroSemisimplePart(ReductionError):
    pass


class NonCommutingList(ReductionError):
    pass


class NotCartan(ReductionError):
    pass


class NotNilpotentLeading(ReductionError):
    pass


class NotIntegerWeight(ReductionError):
    pass


class BudgetExceeded(ReductionError):
    pass


class NoProgress(ReductionError):
    """The loop invariant failed to decrease: bug or truncation too small."""


class FieldExtensionNeeded(ReductionError):
    """The step needs eigenvalue data that is not rational."""


@dataclass(frozen=True)
class ReductionBudget:
    iterations: int | None = None
    max_ramification: int | None = None


@dataclass(frozen=True)
class ReductionReport:
    form_class: str  # logarithmic | cartan_irregular | boalch | failed
    final: Connection
    ramification: int
    certificate: GaugeWord
    slope: Fraction
    effective_trunc: object
    progress_log: tuple


# ---------------------------------------------------------------------------
# slot machinery
# ---------------------------------------------------------------------------

def _pivot_weight(weight: Weight, mat: MatSeries):
    vals = slot_values(weight, mat)
    if not vals:
        raise ZeroConnection("connection is zero modulo truncation")
    return vals[0]


def _const_exp(m: ConstMat) -> ConstMat:
    """Exponential of a nilpotent constant matrix (exact polynomial)."""
    acc = ConstMat.identity(m.n)
    term = ConstMat.identity(m.n)
    k = 0
    while True:
        k += 1
        term = (term @ m).scale(Fraction(1, k))
        if term.is_zero():
            return acc
        acc = acc + term
        if k > m.n + 1:
            raise ReductionError("exponential argument is not nilpotent")


def _slot_domain(weight: Weight, amb: Subalgebra, d) -> Subalgebra:
    support = slot_entry_support(weight, amb.ambient_n, d)
    return amb.intersect_entry_support(support)


def _levi_normalize(weight: Weight, conn: Connection, s: ConstMat, omega0,
                    amb: Subalgebra):
    """Make the pivot-slot flat commute with s using weight-zero factors.

    Follows the grade-by-grade linear solves against the grade-zero part
    of the slot; sweeps are capped and a surviving defect raises
    FieldExtensionNeeded (the normalization needs irrational spectral
    data, e.g. diagonalizing a matrix with irrational eigenvalues).
    """
    n = conn.n
    factors = []
    for _ in range(n * n + 4):
        r = slot_flat(weight, conn.mat, omega0)
        if s.bracket(r).is_zero():
            return conn, factors
        b0 = grade_zero(weight, r)
        progress = False
        for gamma in grades_present(weight, r):
            rg = grade_component(weight, r, gamma)
            if s.bracket(rg).is_zero():
                continue
            support = [(a, b) for a in range(n) for b in range(n)
                       if weight.grading(a, b) == gamma]
            dom = amb.intersect_entry_support(support)
            if dom.dim == 0:
                continue
            try:
                u = solve_commutator(s, b0, rg, dom)
            except Inconsistent:
                continue
            if u.is_zero():
                continue
            if gamma == 0:
                if not u.is_nilpotent():
                    raise FieldExtensionNeeded(
                        "grade-zero normalization needs a non-nilpotent exponential")
                fac = ConstFactor(_const_exp(u))
            else:
                arg = slot_unflatten(weight, u, Fraction(0))
                fac = ExpFactor(arg)
            conn = apply_factor(fac, conn)
            factors.append(fac)
            progress = True
            r = slot_flat(weight, conn.mat, omega0)
            if s.bracket(r).is_zero():
                return conn, factors
        if not progress:
            break
    raise FieldExtensionNeeded(
        "leading residue cannot be aligned with the semisimple part over Q")


def _commutation_split(weight: Weight, conn: Connection, lhs: ConstMat,
                       omega0, amb: Subalgebra):
    """Ascending-slot induction: make [lhs, slot] = 0 for every slot above
    the pivot, solving [lhs, F + [U, pivot]] = 0 at each defective slot."""
    factors = []
    processed = omega0
    guard = 0
    while True:
        guard += 1
        if guard > 10000:
            raise ReductionError("slot induction failed to terminate")
        mat = conn.mat
        bound = max_representable_slot(weight, mat)
        target = None
        for w in slot_values(weight, mat):
            if w <= processed or w >= bound:
                continue
            f = slot_flat(weight, mat, w)
            if not lhs.bracket(f).is_zero():
                target = (w, f)
                break
        if target is None:
            return conn, factors
        w, f = target
        pivot = slot_flat(weight, mat, omega0)
        dom = _slot_domain(weight, amb, w - omega0)
        u = solve_commutator(lhs, pivot, f, dom)
        processed = w
        if u.is_zero():
            # defect already satisfies the target modulo the pivot bracket
            continue
        fac = ExpFactor(slot_unflatten(weight, u, w - omega0))
        conn = apply_factor(fac, conn)
        factors.append(fac)


# ---------------------------------------------------------------------------
# semisimple splitting (non-nilpotent leading data)
# ---------------------------------------------------------------------------

def reduce_by_semisimple(weight: Weight, conn: Connection,
                         amb: Subalgebra | None = None):
    """Split off the semisimple part of the leading constant datum.

    Returns (B, word, S) with B = gauge(word, conn), the leading slot
    moved only by Levi factors, and every graded coefficient of B
    commuting with S up to the effective truncation.
    """
    c = leading_index(weight, conn)
    if c <= 1:
        raise OrderTooLow(f"weighted order {c} is not > 1")
    amb = amb or Subalgebra.gl(conn.n)
    omega0 = _pivot_weight(weight, conn.mat)
    p0 = grade_zero(weight, slot_flat(weight, conn.mat, omega0))
    s, _ = jordan_chevalley(p0)
    if s.is_zero():
        raise ZeroSemisimplePart("leading constant datum has no semisimple part")
    word = []
    if not s.bracket(slot_flat(weight, conn.mat, omega0)).is_zero():
        conn, fs = _levi_normalize(weight, conn, s, omega0, amb)
        word.extend(fs)
    conn, fs = _commutation_split(weight, conn, s, omega0, amb)
    word.extend(fs)
    return conn, GaugeWord(tuple(word)), s


def reduce_by_semisimple_family(weight: Weight, conn: Connection,
                                s_list, amb: Subalgebra | None = None):
    """Iterate semisimple splitting over a commuting family, descending
    into the joint centralizer after each pass."""
    s_list = list(s_list)
    if not s_list:
        return conn, GaugeWord.identity()
    for s in s_list:
        if not is_semisimple(s):
            raise NonCommutingList("family member is not semisimple")
        if grade_zero(weight, s) != s:
            raise NonCommutingList("family member does not commute with the weight")
    for i, si in enumerate(s_list):
        for sj in s_list[i + 1:]:
            if not si.bracket(sj).is_zero():
                raise NonCommutingList("family members do not commute")
    c = leading_index(weight, conn)
    if c <= 1:
        raise OrderTooLow(f"weighted order {c} is not > 1")
    omega0 = _pivot_weight(weight, conn.mat)
    p0 = grade_zero(weight, slot_flat(weight, conn.mat, omega0))
    total = ConstMat.zeros(conn.n)
    for s in s_list:
        total = total + s
    ss_part, _ = jordan_chevalley(p0)
    if total != ss_part:
        raise Inconsistent("family does not sum to the leading semisimple part")
    amb = amb or Subalgebra.gl(conn.n)
    word = []
    for i, s in enumerate(s_list):
        if not s.bracket(slot_flat(weight, conn.mat, omega0)).is_zero():
            conn, fs = _levi_normalize(weight, conn, s, omega0, amb)
            word.extend(fs)
        conn, fs = _commutation_split(weight, conn, s, omega0, amb)
        word.extend(fs)
        amb = centralizer([s], amb)
    return conn, GaugeWord(tuple(word))


def reduce_to_cartan(weight: Weight, conn: Connection, s_list):
    """Commuting-family reduction whose joint centralizer is a Cartan
    subalgebra: the output has leading coefficient exactly sum(s_list)
    and all coefficients inside the Cartan."""
    s_list = list(s_list)
    cart = centralizer(s_list, Subalgebra.gl(conn.n))
    if not cart.is_abelian():
        raise NotCartan("joint centralizer is not abelian")
    if centralizer(list(cart.basis), Subalgebra.gl(conn.n)).dim != cart.dim:
        raise NotCartan("joint centralizer is not self-centralizing")
    conn, word = reduce_by_semisimple_family(weight, conn, s_list)
    total = ConstMat.zeros(conn.n)
    for s in s_list:
        total = total + s
    omega0 = _pivot_weight(weight, conn.mat)
    lead = slot_flat(weight, conn.mat, omega0)
    if lead != total:
        raise FieldExtensionNeeded("leading coefficient did not collapse to the "
                                   "semisimple part")
    bound = max_representable_slot(weight, conn.mat)
    for w in slot_values(weight, conn.mat):
        if w >= bound:
            continue
        if not cart.contains(slot_flat(weight, conn.mat, w)):
            raise ReductionError("coefficient left the Cartan subalgebra")
    return conn, word


# ---------------------------------------------------------------------------
# nilpotent splitting
# ---------------------------------------------------------------------------

def _align_neutral(weight: Weight, conn: Connection, triple: Sl2Triple):
    """Diagonalize the neutral element by a grade-zero constant factor.

    Eigenvalues descend along the diagonal, so the lowering element ends
    up lower triangular and the raised complement upper triangular.
    Skipped (returning the triple unchanged) when the neutral element is
    not supported on grade zero.
    """
    h = triple.h
    n = h.n
    grade0_supported = all(h.rows[a][b] == 0 or weight.grading(a, b) == 0
                           for a in range(n) for b in range(n))
    if not grade0_supported:
        return conn, triple, []
    diag = all(h.rows[a][b] == 0 for a in range(n) for b in range(n) if a != b)
    if diag and list(h.rows[i][i] for i in range(n)) == sorted(
            (h.rows[i][i] for i in range(n)), reverse=True):
        return conn, triple, []
    eigs = integer_eigenvalues(h)
    if len(eigs) != n:
        return conn, triple, []
    cols = []
    ident = ConstMat.identity(n)
    for e in sorted(set(eigs), reverse=True):
        shifted = h - ident.scale(e)
        for vec in nullspace([list(r) for r in shifted.rows]):
            cols.append(vec)
    if len(cols) != n:
        return conn, triple, []
    v = ConstMat([[cols[j][i] for j in range(n)] for i in range(n)])
    if not all(v.rows[a][b] == 0 or weight.grading(a, b) == 0
               for a in range(n) for b in range(n)):
        # the alignment would leave the Levi subgroup
        return conn, triple, []
    g = v.inverse()
    fac = ConstFactor(g)
    conn = apply_factor(fac, conn)
    return conn, triple.conjugate(g), [fac]


def reduce_by_nilpotent(weight: Weight, conn: Connection,
                        amb: Subalgebra | None = None,
                        full_slot: bool = False):
    """Nilpotent-leading splitting: complete the leading datum to an sl2
    triple (p, q, h), align h with the diagonal torus, then push every
    later slot into ker(ad_q) by ascending-slot solves.

    With full_slot the whole pivot slot (the flattened Levi residue) is
    the nilpotent datum; otherwise its grade-zero part is.
    """
    c = leading_index(weight, conn)
    if c <= 1:
        raise OrderTooLow(f"weighted order {c} is not > 1")
    amb = amb or Subalgebra.gl(conn.n)
    omega0 = _pivot_weight(weight, conn.mat)
    pivot = slot_flat(weight, conn.mat, omega0)
    datum = pivot if full_slot else grade_zero(weight, pivot)
    if datum.is_zero() or not datum.is_nilpotent():
        raise NotNilpotentLeading("designated leading datum is not nonzero nilpotent")
    if full_slot:
        jm_amb = _slot_domain(weight, amb, Fraction(0))
    else:
        support = [(a, b) for a in range(conn.n) for b in range(conn.n)
                   if weight.grading(a, b) == 0]
        jm_amb = amb.intersect_entry_support(support)
    triple = jacobson_morozov(datum, jm_amb)
    conn, triple, word = _align_neutral(weight, conn, triple)
    conn, fs = _commutation_split(weight, conn, triple.q, omega0, amb)
    word.extend(fs)
    return conn, GaugeWord(tuple(word)), triple


# ---------------------------------------------------------------------------
# shearing
# ---------------------------------------------------------------------------

def _ad_eigen_project(h: ConstMat, x: ConstMat, e: int, spectrum) -> ConstMat:
    """Component of x in the ad_h eigenvalue-e space (Lagrange projector)."""
    out = x
    for e2 in spectrum:
        if e2 == e:
            continue
        out = (h.bracket(out) - out.scale(e2)).scale(Fraction(1, e - e2))
    return out


def _ad_spectrum(h: ConstMat):
    eigs = integer_eigenvalues(h)
    if len(eigs) != h.n:
        raise FieldExtensionNeeded("neutral element needs an integer spectrum")
    return sorted({a - b for a in eigs for b in eigs})


def shear_invariants(weight: Weight, conn: Connection, triple: Sl2Triple):
    """(cap, ratio): cap = max ad_h eigenvalue on ker(ad_q) halved plus one;
    ratio = least (r + c) / (e/2 + 1) over nonzero window coefficients,
    None when the window is empty (treated as infinity)."""
    q, h = triple.q, triple.h
    spectrum = _ad_spectrum(h)
    kerq = centralizer([q], Subalgebra.gl(conn.n))
    present = set()
    for b in kerq.basis:
        for e in spectrum:
            if not _ad_eigen_project(h, b, e, spectrum).is_zero():
                present.add(e)
    if not present:
        raise ReductionError("centralizer of the raised element is trivial")
    cap = Fraction(max(present), 2) + 1
    rep = weight_rep(weight, conn)
    c = rep.c
    lo = -c + 1
    hi = -c + cap * (c - 1)
    ratio = None
    for t in rep.terms:
        if not (lo <= t.r and t.r < hi):
            continue
        for e in spectrum:
            comp = _ad_eigen_project(h, t.x, e, spectrum)
            if comp.is_zero():
                continue
            val = Fraction(t.r + c) / (Fraction(e, 2) + 1)
            if ratio is None or val < ratio:
                ratio = val
    return cap, ratio


def shear(conn: Connection, triple: Sl2Triple, b: int, n_twist: int):
    """Pull back along the b-cover and twist by zeta^(n_twist * h)."""
    factors = []
    if b > 1:
        factors.append(RamifyFactor(b))
    if n_twist != 0:
        factors.append(ShearFactor(n_twist, triple.h))
    word = GaugeWord(tuple(factors))
    return gauge(word, conn), word


# ---------------------------------------------------------------------------
# the main loop
# ---------------------------------------------------------------------------

def _central_series_part(mat: MatSeries, project) -> MatSeries:
    t = mat.trunc_effective()
    n = mat.n
    acc = MatSeries.zeros(n, t)
    for k in mat.support():
        if k >= t:
            continue
        pk = project(mat.coeff(k))
        if not pk.is_zero():
            acc = acc + MatSeries.from_const(pk, t, k)
    return acc


def _derived_dim(amb: Subalgebra) -> int:
    return amb.dim - center(amb).dim


def full_reduce(weight: Weight, conn: Connection,
                budget: ReductionBudget | None = None) -> ReductionReport:
    """Run the reduction loop to a canonical form.

    Alternates center extraction, splitting along the semisimple part of
    the leading residue (descending into its centralizer), and the
    nilpotent branch (sl2 completion, shear invariants, shearing on a
    ramified cover), until the non-central part is logarithmic.  Each
    iteration strictly decreases (derived centralizer dimension, slope
    bound) lexicographically; a stall raises NoProgress.
    """
    if conn.is_zero():
        raise ZeroConnection("cannot reduce the zero connection")
    if not weight.is_integer():
        raise NotIntegerWeight("the reduction loop needs an integer weight")
    budget = budget or ReductionBudget()
    n = conn.n
    c0 = max(leading_index(weight, conn), 2)
    iter_cap = budget.iterations or 4 * c0 * n * n
    # the shearing step uses covers of degree 2*denominator(ratio), so the
    # guard must sit well above the minimal cover degree lcm(1..n)
    default_ram = 2 * math.lcm(*range(1, n + 1)) ** 2
    ram_cap = (budget.max_ramification or default_ram) * conn.context.b

    cur = conn
    w_cur = weight
    amb = Subalgebra.gl(n)
    word = GaugeWord.identity()
    log = []
    prev_measure = None

    for _ in range(iter_cap):
        project = central_projector(amb)
        central = _central_series_part(cur.mat, project)
        noncentral = cur.mat - central
        if noncentral.is_zero():
            break
        nc_conn = cur.with_mat(noncentral)
        cprime = leading_index(w_cur, nc_conn)
        if cprime <= 1:
            break
        slope_bound = Fraction(cprime - 1, cur.context.b)
        measure = (_derived_dim(amb), slope_bound)
        if prev_measure is not None and measure >= prev_measure:
            raise NoProgress(f"invariant did not decrease: {prev_measure} -> {measure}")
        prev_measure = measure

        omega0 = _pivot_weight(w_cur, noncentral)
        if max_representable_slot(w_cur, cur.mat) <= omega0 + 1:
            raise BudgetExceeded("truncation too small to continue the reduction")
        r_flat = slot_flat(w_cur, noncentral, omega0)
        s_part, _ = jordan_chevalley(r_flat)
        if not s_part.is_zero():
            cur, fs = _commutation_split(w_cur, cur, s_part, omega0, amb)
            word = word.concat(GaugeWord(tuple(fs)))
            amb = centralizer([s_part], amb)
            log.append(("semisimple-split",
                        {"order": str(cprime), "cover": str(cur.context.b),
                         "derived_dim": str(_derived_dim(amb))}))
        else:
            cur, w2, triple = reduce_by_nilpotent(w_cur, cur, amb=amb, full_slot=True)
            word = word.concat(w2)
            cap, ratio = shear_invariants(w_cur, cur, triple)
            if ratio is None or ratio >= cprime - 1:
                b2, n2 = 2, -cprime + 1
            else:
                delta = ratio.denominator
                b2, n2 = 2 * delta, int(-delta * ratio)
            if cur.context.b * b2 > ram_cap:
                raise BudgetExceeded(f"cover degree {cur.context.b * b2} exceeds "
                                     f"the ramification cap {ram_cap}")
            cur, w3 = shear(cur, triple, b2, n2)
            word = word.concat(w3)
            w_cur = Weight([t * b2 for t in w_cur.theta])
            log.append(("nilpotent-shear",
                        {"order": str(cprime), "cover": str(cur.context.b),
                         "ratio": "inf" if ratio is None else frac_str(ratio),
                         "twist": str(n2)}))
    else:
        raise BudgetExceeded(f"no canonical form within {iter_cap} iterations")

    try:
        c_total = leading_index(w_cur, cur)
    except ZeroConnection:
        c_total = 0
    if c_total <= 1:
        form = "logarithmic"
        slope_val = Fraction(0)
    else:
        form = "cartan_irregular"
        slope_val = Fraction(c_total - 1, cur.context.b)
    return ReductionReport(
        form_class=form,
        final=cur,
        ramification=cur.context.b,
        certificate=word,
        slope=slope_val,
        effective_trunc=cur.mat.trunc_effective(),
        progress_log=tuple(log),
    )


def slope(conn: Connection, weight: Weight | None = None,
          budget: ReductionBudget | None = None) -> Fraction:
    """Irregularity slope (c' - 1)/b of the canonical form, 0 when regular."""
    if conn.is_zero():
        raise ZeroConnection("the zero connection has no slope")
    weight = weight or Weight.zero(conn.n)
    return full_reduce(weight, conn, budget).slope
