"""Form-valued fiberwise Hochschild cochains over a symplectic chart: the
double complex carrying the fiberwise Hochschild differential and the
extended Fedosov differential, with cup product, Gerstenhaber bracket, the
embedding of scalar forms, the lift of delta-closed cochains to D-closed
ones, projection to local polydifferential operators, and exactness
witnesses in positive exterior degree.

Data layout: a cochain of arity k is {(S, m, p, (alpha_1..alpha_k)): XPoly}
with S the increasing dx subset, m the hbar power, p the y-multidegree and
alpha_s the slot derivative multidegrees.  Evaluation on arguments
a_1..a_k produces  dx^S c(x) y^p (d^{alpha_1}a_1)...(d^{alpha_k}a_k)  with
commutative products of the resulting y-series and argument dx blocks
wedged after dx^S in slot order.

Sign conventions (pinned by the identity suite, see the module tests):
  * insertions wedge dx^{S_1} dx^{S_2} with no extra sign,
  * the Gerstenhaber bracket uses the shifted-arity signs only; with these
    conventions graded antisymmetry and the graded Jacobi identity hold
    with arity signs alone at every exterior degree,
  * the cup-derivation rule picks up the exterior degrees:
    d(A cup B) = (-)^{q_B} dA cup B + (-)^{k_A + q_A} A cup dB,
  * the bracket-derivation rule takes the dressing forced by the bracket
    form of d and the Jacobi identity,
    d[A,B] = (-)^{k_B - 1}[dA,B] + [A,dB]  (dx-free factors),
    which is the usual rule written for the transposed bracket; for two
    factors both of odd exterior degree no global sign dressing makes it
    hold in this convention,
  * the Hochschild differential carries the (-1)^q exterior prefactor,
    equivalently d P = (-1)^{q+k+1} [mult, P]_G on each exterior component;
    this is the unique choice restricting the extended Fedosov differential
    on arity 0 to the plain one and anticommuting with it,
  * delta and nabla act on cochains as canonical extensions: componentwise
    on the (y, dx) data, with nabla additionally rotating slot indices
    through the Christoffel symbols.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from .poly import XPoly, as_fraction
from .weyl import (FormWeyl, SymplecticChart, WeylElement, as_form,
                   contract_index, merge_subsets, omega_matrix, prepend_index,
                   unit_vec, vec_add, vec_sub)


def _acc(d, key, val: XPoly):
    prev = d.get(key)
    val = val if prev is None else prev + val
    if val.is_zero():
        d.pop(key, None)
    else:
        d[key] = val


def _falling(n, k):
    out = 1
    for i in range(k):
        out *= n - i
    return out


class FiberwiseCochain:
    """Form-valued fiberwise Hochschild cochain; arity 0 coincides with
    form-valued Weyl sections."""

    __slots__ = ("dim", "order", "arity", "cap", "terms")

    def __init__(self, dim, order, arity, terms=None, cap=None):
        self.dim = dim
        self.order = order
        self.arity = arity
        self.cap = order if cap is None else cap
        clean = {}
        for (S, m, p, alphas), c in (terms or {}).items():
            if c.is_zero():
                continue
            if len(alphas) != arity:
                raise ValueError("wrong arity")
            if 2 * m + sum(p) > self.order:
                continue
            if any(sum(al) > self.cap for al in alphas):
                continue
            clean[(tuple(S), m, tuple(p),
                   tuple(tuple(al) for al in alphas))] = c
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim, order, arity, cap=None):
        return cls(dim, order, arity, None, cap)

    @classmethod
    def from_form(cls, w: FormWeyl, cap=None) -> "FiberwiseCochain":
        terms = {}
        for S, elt in w.components.items():
            for (m, p), c in elt.terms.items():
                terms[(S, m, p, ())] = c
        return cls(w.dim, w.order, 0, terms, cap)

    @classmethod
    def identity(cls, dim, order, cap=None) -> "FiberwiseCochain":
        zero = (0,) * dim
        return cls(dim, order, 1, {((), 0, zero, (zero,)): XPoly.const(dim, 1)}, cap)

    @classmethod
    def single_slot(cls, dim, order, alpha, cap=None) -> "FiberwiseCochain":
        """The 1-cochain a -> d^alpha a."""
        zero = (0,) * dim
        return cls(dim, order, 1, {((), 0, zero, (tuple(alpha),)): XPoly.const(dim, 1)}, cap)

    def to_form(self) -> FormWeyl:
        if self.arity != 0:
            raise ValueError("not an arity-0 cochain")
        comps = {}
        for (S, m, p, _), c in self.terms.items():
            comp = comps.setdefault(S, {})
            _acc(comp, (m, p), c)
        return FormWeyl(self.dim, self.order,
                        {S: WeylElement(self.dim, self.order, t)
                         for S, t in comps.items()})

    # -- linear structure ---------------------------------------------------

    def __add__(self, other):
        terms = dict(self.terms)
        for key, c in other.terms.items():
            _acc(terms, key, c)
        return FiberwiseCochain(self.dim, self.order, self.arity, terms,
                                max(self.cap, other.cap))

    def __neg__(self):
        out = FiberwiseCochain(self.dim, self.order, self.arity, None, self.cap)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = as_fraction(c)
        out = FiberwiseCochain(self.dim, self.order, self.arity, None, self.cap)
        if c:
            out.terms = {k: v.scale(c) for k, v in self.terms.items()}
        return out

    def hbar_shift(self, j: int):
        return FiberwiseCochain(
            self.dim, self.order, self.arity,
            {(S, m + j, p, al): c for (S, m, p, al), c in self.terms.items()},
            self.cap)

    def is_zero(self):
        return not self.terms

    def exterior_degrees(self):
        return sorted({len(S) for (S, _, _, _) in self.terms})

    def homogeneous_q(self, q):
        out = FiberwiseCochain(self.dim, self.order, self.arity, None, self.cap)
        out.terms = {k: c for k, c in self.terms.items() if len(k[0]) == q}
        return out

    def min_term_weight(self):
        return min((2 * m + sum(p) for (_, m, p, _) in self.terms), default=0)

    def restrict_slots(self, cap):
        out = FiberwiseCochain(self.dim, self.order, self.arity, None, self.cap)
        out.terms = {k: c for k, c in self.terms.items()
                     if all(sum(al) <= cap for al in k[3])}
        return out

    def truncate(self, order, cap=None):
        return FiberwiseCochain(self.dim, order, self.arity, self.terms,
                                self.cap if cap is None else cap)

    def __eq__(self, other):
        return (isinstance(other, FiberwiseCochain)
                and self.arity == other.arity and self.terms == other.terms)

    def __repr__(self):
        from .io import cochain_slot_text
        bits = []
        for (S, m, p, alphas), c in sorted(self.terms.items()):
            slot = "|".join(cochain_slot_text(al) for al in alphas)
            bits.append(f"dx{S} hbar^{m} y{p} [{slot}] * ({c})")
        return "FiberwiseCochain(" + ("; ".join(bits) or "0") + ")"


# ---------------------------------------------------------------------------
# evaluation


def cochain_eval(P: FiberwiseCochain, args) -> FormWeyl:
    """Evaluate on WeylElement or FormWeyl arguments; argument dx blocks are
    wedged after the cochain's own dx^S in slot order."""
    if len(args) != P.arity:
        raise ValueError("arity mismatch")
    args = [as_form(a) for a in args]
    comps = {}
    for (S, m, p, alphas), c in P.terms.items():
        partial = {(S, m, p): c}
        for al, arg in zip(alphas, args):
            nxt = {}
            for T, w in arg.components.items():
                for (ka, pa), ca in w.terms.items():
                    if not all(x <= y for x, y in zip(al, pa)):
                        continue
                    f = 1
                    for n_, k_ in zip(pa, al):
                        f *= _falling(n_, k_)
                    for (Scur, mcur, pcur), ccur in partial.items():
                        merged = merge_subsets(Scur, T)
                        if merged is None:
                            continue
                        sign, S2 = merged
                        _acc(nxt, (S2, mcur + ka, vec_add(pcur, vec_sub(pa, al))),
                             (ccur * ca).scale(sign * f))
            partial = nxt
            if not partial:
                break
        for (S2, m2, p2), c2 in partial.items():
            _acc(comps, (S2, m2, p2), c2)
    grouped = {}
    for (S, m, p), c in comps.items():
        grouped.setdefault(S, {})[(m, p)] = c
    return FormWeyl(P.dim, P.order,
                    {S: WeylElement(P.dim, P.order, t) for S, t in grouped.items()})


# ---------------------------------------------------------------------------
# cup product, insertion, Gerstenhaber bracket, Hochschild differential


def product_cochain(chart_or_theta, dim, order, t_max, cap=None) -> FiberwiseCochain:
    """The fiberwise multiplication as a 2-cochain, with Poisson pairings up
    to order t_max."""
    omega = omega_matrix(chart_or_theta, dim)
    zero = (0,) * dim
    terms = {}
    state = {(zero, zero): XPoly.const(dim, 1)}
    t = 0
    while True:
        for (al, be), c in state.items():
            terms[((), t, zero, (al, be))] = c
        if t == t_max:
            break
        t += 1
        nxt = {}
        for (al, be), c in state.items():
            for i in range(dim):
                for j in range(dim):
                    om = omega[i][j]
                    if om.is_zero():
                        continue
                    _acc(nxt, (vec_add(al, unit_vec(dim, i + 1)),
                               vec_add(be, unit_vec(dim, j + 1))),
                         (om * c).scale(Fraction(1, 2 * t)))
        state = nxt
    return FiberwiseCochain(dim, order, 2, terms, cap)


def cup(P1: FiberwiseCochain, P2: FiberwiseCochain, chart_or_theta) -> FiberwiseCochain:
    """(P1 cup P2)(a_1..a_{k1+k2}) = P1(first) o P2(rest).  The fiberwise
    product pairs the y-parts and slots of both factors; dx blocks are
    wedged in factor order."""
    dim, order, cap = P1.dim, P1.order, max(P1.cap, P2.cap)
    omega = omega_matrix(chart_or_theta, dim)
    out = {}
    for (S1, m1, p1, al1), c1 in P1.terms.items():
        for (S2, m2, p2, al2), c2 in P2.terms.items():
            merged = merge_subsets(S1, S2)
            if merged is None:
                continue
            sign, S = merged
            kk = m1 + m2
            state = {(p1, al1, p2, al2): (c1 * c2).scale(sign)}
            t = 0
            while state:
                for (q1, b1, q2, b2), c in state.items():
                    _acc(out, (S, kk + t, vec_add(q1, q2), b1 + b2), c)
                t += 1
                nxt = {}
                for (q1, b1, q2, b2), c in state.items():
                    for i in range(dim):
                        for j in range(dim):
                            om = omega[i][j]
                            if om.is_zero():
                                continue
                            base = (om * c).scale(Fraction(1, 2 * t))
                            for q1n, b1n, f1 in _derive_targets(q1, b1, i):
                                for q2n, b2n, f2 in _derive_targets(q2, b2, j):
                                    if 2 * (kk + t) + sum(q1n) + sum(q2n) > order:
                                        continue
                                    if any(sum(al) > cap for al in b1n + b2n):
                                        continue
                                    _acc(nxt, (q1n, b1n, q2n, b2n),
                                         base.scale(f1 * f2))
                state = nxt
    return FiberwiseCochain(dim, order, P1.arity + P2.arity, out, cap)


def _derive_targets(p, alphas, i):
    """Ways d/dy^{i+1} hits y^p * slots: (p', alphas', integer factor)."""
    out = []
    if p[i]:
        out.append((p[:i] + (p[i] - 1,) + p[i + 1:], alphas, p[i]))
    for s, al in enumerate(alphas):
        al2 = al[:i] + (al[i] + 1,) + al[i + 1:]
        out.append((p, alphas[:s] + (al2,) + alphas[s + 1:], 1))
    return out


_SPLIT_CACHE = {}


def _slot_splits(alpha, nslots):
    """All ways the multi-index alpha distributes over a y-part and nslots
    inserted slots: tuples ((g0, g1..g_{nslots}), multinomial_factor)."""
    key = (alpha, nslots)
    hit = _SPLIT_CACHE.get(key)
    if hit is not None:
        return hit
    dim = len(alpha)
    splits = [((), 1)]
    for coord in range(dim):
        a = alpha[coord]
        nxt = []
        for parts, f in splits:
            for compn in _compositions(a, nslots + 1):
                nxt.append((parts + (compn,), f * _multinomial(a, compn)))
        splits = nxt
    out = []
    for parts, f in splits:
        pieces = tuple(tuple(parts[c][s] for c in range(dim))
                       for s in range(nslots + 1))
        out.append((pieces, f))
    _SPLIT_CACHE[key] = out
    return out


def insert(P1: FiberwiseCochain, i: int, P2: FiberwiseCochain) -> FiberwiseCochain:
    """Insert P2 into slot i (0-based) of P1; the slot derivative distributes
    multinomially over P2's y-part and slots; dx^{S1} dx^{S2} ordering."""
    dim = P1.dim
    order = P1.order
    out = {}
    for (S1, m1, p1, al1), c1 in P1.terms.items():
        alpha = al1[i]
        asize = sum(alpha)
        base_w = 2 * m1 + sum(p1)
        for (S2, m2, p2, al2), c2 in P2.terms.items():
            # minimal achievable output weight for this pair
            if base_w + 2 * m2 + max(0, sum(p2) - asize) > order:
                continue
            merged = merge_subsets(S1, S2)
            if merged is None:
                continue
            sign, S = merged
            base = (c1 * c2).scale(sign)
            nslots = len(al2)
            for pieces, f in _slot_splits(alpha, nslots):
                g0 = pieces[0]
                if not all(x <= y for x, y in zip(g0, p2)):
                    continue
                ff = f
                for n_, k_ in zip(p2, g0):
                    ff *= _falling(n_, k_)
                if not ff:
                    continue
                new_alphas = tuple(vec_add(al2[s], pieces[s + 1])
                                   for s in range(nslots))
                key = (S, m1 + m2, vec_add(p1, vec_sub(p2, g0)),
                       al1[:i] + new_alphas + al1[i + 1:])
                _acc(out, key, base.scale(ff))
    return FiberwiseCochain(dim, order, P1.arity + P2.arity - 1, out,
                            max(P1.cap, P2.cap))


def _compositions(total, parts):
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def _multinomial(total, compn):
    out = 1
    rem = total
    for c in compn:
        out *= comb(rem, c)
        rem -= c
    return out


def gerstenhaber(P1: FiberwiseCochain, P2: FiberwiseCochain) -> FiberwiseCochain:
    """[P1, P2]_G = sum_i (-)^{i k2'} P1 o_i P2 - (-)^{k1' k2'} (1 <-> 2),
    k' = arity - 1."""
    k1, k2 = P1.arity - 1, P2.arity - 1
    out = None
    for i in range(P1.arity):
        term = insert(P1, i, P2)
        if (i * k2) % 2:
            term = -term
        out = term if out is None else out + term
    if out is None:
        out = FiberwiseCochain.zero(P1.dim, P1.order, P1.arity + P2.arity - 1,
                                    max(P1.cap, P2.cap))
    for j in range(P2.arity):
        term = insert(P2, j, P1)
        if (k1 * k2 + j * k1) % 2 == 0:
            out = out - term
        else:
            out = out + term
    return out


def hochschild_d(P: FiberwiseCochain, chart_or_theta) -> FiberwiseCochain:
    """Fiberwise Hochschild differential with the (-1)^q exterior-degree
    prefactor; equals (-1)^{q+k+1} [mult, P]_G on each exterior component."""
    k = P.arity
    t_max = max(0, P.order - min(0, P.min_term_weight()) + 1)
    mu = product_cochain(chart_or_theta, P.dim, P.order, t_max, P.cap)
    out = FiberwiseCochain.zero(P.dim, P.order, k + 1, P.cap)
    for q in P.exterior_degrees():
        Pq = P.homogeneous_q(q)
        part = insert(mu, 1, Pq)
        last = insert(mu, 0, Pq)
        part = part + (last if (k + 1) % 2 == 0 else -last)
        for j in range(k):
            mid = insert(Pq, j, mu)
            part = part + (mid if (j + 1) % 2 == 0 else -mid)
        out = out + (part if q % 2 == 0 else -part)
    return out


# ---------------------------------------------------------------------------
# delta, nabla, sigma and the extended Fedosov differential


def delta_cochain(P: FiberwiseCochain) -> FiberwiseCochain:
    """Componentwise dx^j d/dy^j on the y-part; the canonical extension
    (delta P)(a..) = delta(P(a..)) - (-)^q sum_s P(.., delta a_s, ..)."""
    out = {}
    for (S, m, p, alphas), c in P.terms.items():
        for j in range(1, P.dim + 1):
            if not p[j - 1]:
                continue
            ins = prepend_index(j, S)
            if ins is None:
                continue
            sign, S2 = ins
            _acc(out, (S2, m, vec_sub(p, unit_vec(P.dim, j)), alphas),
                 c.scale(sign * p[j - 1]))
    return FiberwiseCochain(P.dim, P.order, P.arity, out, P.cap)


def delta_inv_cochain(P: FiberwiseCochain) -> FiberwiseCochain:
    """Componentwise contracting homotopy (slots are spectators)."""
    out = {}
    for (S, m, p, alphas), c in P.terms.items():
        deg = sum(p) + len(S)
        if not S:
            continue
        for idx in S:
            sign, S2 = contract_index(idx, S)
            _acc(out, (S2, m, vec_add(p, unit_vec(P.dim, idx)), alphas),
                 c.scale(Fraction(sign, deg)))
    return FiberwiseCochain(P.dim, P.order, P.arity, out, P.cap)


def sigma_cochain(P: FiberwiseCochain) -> FiberwiseCochain:
    """Set y = dx = 0, keeping the slots."""
    zero = (0,) * P.dim
    out = FiberwiseCochain.zero(P.dim, P.order, P.arity, P.cap)
    out.terms = {key: c for key, c in P.terms.items()
                 if key[0] == () and key[2] == zero}
    return out


def nabla_cochain(P: FiberwiseCochain, chart: SymplecticChart) -> FiberwiseCochain:
    """Covariant derivative: the canonical extension
    (nabla P)(a..) = nabla(P(a..)) - (-)^q sum_s P(.., nabla a_s, ..);
    on data: dx^i (d/dx^i on coefficients), the Christoffel action on the
    y-part, and the rotation of slot indices."""
    dim = P.dim
    out = {}
    for (S, m, p, alphas), c in P.terms.items():
        for i in range(1, dim + 1):
            ins = prepend_index(i, S)
            if ins is None:
                continue
            sign, S2 = ins
            dc = c.diff(i)
            if chart.x_cap is not None:
                dc = dc.truncate(chart.x_cap)
            if not dc.is_zero():
                _acc(out, (S2, m, p, alphas), dc.scale(sign))
            for (j, ii, kk), g in chart.christoffel.items():
                if ii != i:
                    continue
                gc = g * c
                if chart.x_cap is not None:
                    gc = gc.truncate(chart.x_cap)
                if gc.is_zero():
                    continue
                if p[j - 1]:
                    p2 = vec_add(vec_sub(p, unit_vec(dim, j)), unit_vec(dim, kk))
                    _acc(out, (S2, m, p2, alphas),
                         gc.scale(-sign * p[j - 1]))
                for s, al in enumerate(alphas):
                    if not al[kk - 1]:
                        continue
                    al2 = vec_add(vec_sub(al, unit_vec(dim, kk)), unit_vec(dim, j))
                    new_alphas = alphas[:s] + (al2,) + alphas[s + 1:]
                    _acc(out, (S2, m, p, new_alphas),
                         gc.scale(sign * al[kk - 1]))
    return FiberwiseCochain(dim, P.order, P.arity, out, P.cap)


def _left_right_mult_cochains(r: FormWeyl, chart, order, cap):
    """The 1-cochains a -> r o a and a -> a o r, with r's dx index kept."""
    dim = r.dim
    rc = FiberwiseCochain.from_form(r, cap)
    ident = FiberwiseCochain.identity(dim, order, cap)
    return cup(rc, ident, chart), cup(ident, rc, chart)


def _r_mult_parts(chart, r: FormWeyl, order, cap):
    """(r as 0-cochain, left-mult 1-cochain, right-mult 1-cochain), carried
    two levels above the target order for the hbar division."""
    work = order + 2
    r = r.truncate(work)
    rc = FiberwiseCochain.from_form(r, cap)
    L, R = _left_right_mult_cochains(r, chart, work, cap)
    return rc, L, R


def _commutator_action(P: FiberwiseCochain, chart, parts) -> FiberwiseCochain:
    """(1/hbar) K_r(P) with
    K_r(P) = r cup P - (-)^q P cup r - (-)^q sum_s (P o_s L_r - P o_s R_r).

    The cup/insertion products are taken two filtration levels above P's
    order so the hbar division is exact at P's order."""
    rc, L, R = parts
    work = P.order + 2
    out = FiberwiseCochain.zero(P.dim, P.order, P.arity, P.cap)
    for q in P.exterior_degrees():
        Pq = P.homogeneous_q(q).truncate(work)
        K = cup(rc, Pq, chart)
        second = cup(Pq, rc, chart)
        K = K + (-second if q % 2 == 0 else second)
        for s in range(P.arity):
            slot_term = insert(Pq, s, L) - insert(Pq, s, R)
            K = K + (-slot_term if q % 2 == 0 else slot_term)
        out = out + K.hbar_shift(-1).truncate(P.order, P.cap)
    return out


def fedosov_d_cochain(P: FiberwiseCochain, chart: SymplecticChart,
                      r: FormWeyl) -> FiberwiseCochain:
    """The extended Fedosov differential
    (D P)(a..) = D(P(a..)) - (-)^q sum_s P(.., D a_s, ..), computed on data
    as nabla P - delta P + (1/hbar) K_r(P) with

    K_r(P) = r cup P - (-)^q P cup r - (-)^q sum_s (P o_s L_r - P o_s R_r),

    L_r / R_r the left/right fiberwise multiplications by r."""
    out = nabla_cochain(P, chart) - delta_cochain(P)
    if r.is_zero():
        return out
    return out + _commutator_action(P, chart, _r_mult_parts(chart, r, P.order, P.cap))


def embed_forms(u: FormWeyl, cap=None) -> FiberwiseCochain:
    """Scalar exterior forms (y-free, hbar-Laurent coefficients) as arity-0
    cochains; intertwines d with D + Hochschild-d and wedge with cup."""
    for w in u.components.values():
        if not w.is_y_free():
            raise ValueError("embedding expects y-free coefficients")
    return FiberwiseCochain.from_form(u, cap)


# ---------------------------------------------------------------------------
# the lift to D-closed cochains, exactness witnesses, local operators


def horizontal_lift_cochain(P: FiberwiseCochain, chart: SymplecticChart,
                            r: FormWeyl, validate: bool = True) -> FiberwiseCochain:
    """The unique D-closed cochain with sigma-projection P, for P of exterior
    degree 0 with delta P = 0: the fixed point of
    A = P + delta_inv(nabla A + (1/hbar) K_r(A))."""
    if validate:
        if P.exterior_degrees() not in ([], [0]):
            raise ValueError("input must have exterior degree 0")
        if not delta_cochain(P).is_zero():
            raise ValueError("input must be delta-closed")
    parts = None if r.is_zero() else _r_mult_parts(chart, r, P.order, P.cap)
    # the recursion map is linear and strictly raises the filtration, so the
    # fixed point is the sum of the iterated increments
    total = P
    inc = P
    for _ in range(P.order + 2):
        upd = nabla_cochain(inc, chart)
        if parts is not None:
            upd = upd + _commutator_action(inc, chart, parts)
        inc = delta_inv_cochain(upd)
        if inc.is_zero():
            return total
        total = total + inc
    raise RuntimeError("cochain lift failed to stabilize")


def transfer_exactness(P: FiberwiseCochain, chart: SymplecticChart,
                       r: FormWeyl, validate: bool = True) -> FiberwiseCochain:
    """For D-closed P of exterior degree >= 1, the witness Q with D Q = P:
    the fixed point of Q = -delta_inv P + delta_inv(nabla Q + (1/hbar) K_r(Q))."""
    if validate:
        if 0 in P.exterior_degrees():
            raise ValueError("input must have exterior degree >= 1")
        if not fedosov_d_cochain(P, chart, r).truncate(P.order - 1).is_zero():
            raise ValueError("input must be D-closed")
    parts = None if r.is_zero() else _r_mult_parts(chart, r, P.order, P.cap)
    total = -delta_inv_cochain(P)
    inc = total
    for _ in range(P.order + 2):
        upd = nabla_cochain(inc, chart)
        if parts is not None:
            upd = upd + _commutator_action(inc, chart, parts)
        inc = delta_inv_cochain(upd)
        if inc.is_zero():
            return total
        total = total + inc
    raise RuntimeError("exactness recursion failed to stabilize")


class LocalCochainEvaluator:
    """Local polydifferential operator induced by a D-closed cochain:
    (a_1..a_k) -> sigma(P(tau a_1, .., tau a_k))."""

    __slots__ = ("cochain", "star_product")

    def __init__(self, cochain: FiberwiseCochain, star_product):
        self.cochain = cochain
        self.star_product = star_product

    @property
    def arity(self):
        return self.cochain.arity

    def __call__(self, *args) -> WeylElement:
        from .weyl import sigma_project

        lifted = [self.star_product.tau(a) for a in args]
        val = cochain_eval(self.cochain, lifted)
        return sigma_project(val).truncate(self.star_product.order)

    def cup(self, other: "LocalCochainEvaluator"):
        """(E1 cup E2)(a..) = E1(first) * E2(rest) under the star product."""
        return _CupEvaluator(self, other)

    def coefficients(self, max_order: int):
        """Extract the polydifferential coefficients by triangular
        reconstruction on x-monomial tuples: returns
        {(mu_1..mu_k): y-free WeylElement} for |mu_s| <= max_order."""
        dim = self.cochain.dim
        order = self.star_product.order
        from .weyl import WeylElement as WE

        degs = [t for t in _multidegrees(dim, max_order)]
        tuples = [()]
        for _ in range(self.arity):
            tuples = [t + (d,) for t in tuples for d in degs]
        tuples.sort(key=lambda bt: (sum(sum(b) for b in bt), bt))
        data = {}
        for nt in tuples:
            args = [WE.from_xpoly(XPoly.monomial(dim, mu, 1), order) for mu in nt]
            val = self(*args)
            acc = dict(val.terms)
            for mus, coeff in data.items():
                if not all(all(a <= b for a, b in zip(mu, nu))
                           for mu, nu in zip(mus, nt)):
                    continue
                if mus == nt:
                    continue
                f = 1
                shift = (0,) * dim
                for mu, nu in zip(mus, nt):
                    for n_, k_ in zip(nu, mu):
                        f *= _falling(n_, k_)
                    shift = vec_add(shift, vec_sub(nu, mu))
                for (m, p), cx in coeff.terms.items():
                    sub = cx * XPoly.monomial(dim, shift, f)
                    prev = acc.get((m, p))
                    sub = -sub if prev is None else prev - sub
                    if sub.is_zero():
                        acc.pop((m, p), None)
                    else:
                        acc[(m, p)] = sub
            fact = 1
            for mu in nt:
                for e in mu:
                    for ii in range(1, e + 1):
                        fact *= ii
            entry = WE(dim, order,
                       {k: v.scale(Fraction(1, fact)) for k, v in acc.items()})
            if not entry.is_zero():
                data[nt] = entry
        return data


class _CupEvaluator:
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left = left
        self.right = right

    @property
    def arity(self):
        return self.left.arity + self.right.arity

    def __call__(self, *args):
        k1 = self.left.arity
        a = self.left(*args[:k1])
        b = self.right(*args[k1:])
        return self.left.star_product(a, b)


def _multidegrees(dim, max_total):
    out = [()]
    for _ in range(dim):
        out = [t + (e,) for t in out for e in range(max_total + 1)]
    return sorted((t for t in out if sum(t) <= max_total),
                  key=lambda t: (sum(t), t))


def to_local_operator(P: FiberwiseCochain, star_product,
                      validate: bool = True) -> LocalCochainEvaluator:
    """beta: D-closed cochains of exterior degree 0 to local operators."""
    if validate:
        D = fedosov_d_cochain(P, star_product.data.chart, star_product.r)
        if not D.truncate(P.order - 1).is_zero():
            raise ValueError("input must be D-closed")
    return LocalCochainEvaluator(P, star_product)


# ---------------------------------------------------------------------------
# linear coordinate transport (push-forward along x -> g x)


def transport_xpoly(p: XPoly, ginv) -> XPoly:
    return p.substitute_linear(ginv)


def transport_weyl(w: WeylElement, ginv) -> WeylElement:
    out = WeylElement.zero(w.dim, w.order)
    for (m, p), c in w.terms.items():
        cx = c.substitute_linear(ginv)
        for mono, f in _subst_multidegree(p, ginv).items():
            out = out + WeylElement(w.dim, w.order, {(m, mono): cx.scale(f)})
    return out


def transport_form(w: FormWeyl, ginv) -> FormWeyl:
    out = FormWeyl.zero(w.dim, w.order)
    for S, elt in w.components.items():
        te = transport_weyl(elt, ginv)
        for S2, f in _subst_subset(S, ginv).items():
            out = out + FormWeyl.from_component(S2, te.scale(f))
    return out


def transport_cochain(P: FiberwiseCochain, g, ginv) -> FiberwiseCochain:
    """Push-forward: y and x substitute by g^{-1}, dx expands by g^{-1},
    slot indices transform contravariantly (by g transposed)."""
    gt = [[as_fraction(g[j][i]) for j in range(P.dim)] for i in range(P.dim)]
    out = {}
    for (S, m, p, alphas), c in P.terms.items():
        cx = c.substitute_linear(ginv)
        for S2, f0 in _subst_subset(S, ginv).items():
            for mono, f1 in _subst_multidegree(p, ginv).items():
                partial = [((), Fraction(1))]
                for al in alphas:
                    nxt = []
                    for done, f in partial:
                        for al2, f2 in _subst_multidegree(al, gt).items():
                            nxt.append((done + (al2,), f * f2))
                    partial = nxt
                for done, f2 in partial:
                    _acc(out, (S2, m, mono, done), cx.scale(f0 * f1 * f2))
    return FiberwiseCochain(P.dim, P.order, P.arity, out, P.cap)


def transport_chart(chart: SymplecticChart, g, ginv) -> SymplecticChart:
    n = chart.dim
    gq = [[as_fraction(v) for v in row] for row in g]
    gi = [[as_fraction(v) for v in row] for row in ginv]
    upper = [[XPoly.zero(n) for _ in range(n)] for _ in range(n)]
    lower = [[XPoly.zero(n) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    if gq[i][k] and gq[j][l]:
                        upper[i][j] = upper[i][j] + transport_xpoly(
                            chart.omega_upper[k][l], ginv).scale(gq[i][k] * gq[j][l])
                    if gi[k][i] and gi[l][j]:
                        lower[i][j] = lower[i][j] + transport_xpoly(
                            chart.omega_lower[k][l], ginv).scale(gi[k][i] * gi[l][j])
    christoffel = {}
    for (mj, mi, mk), gam in chart.christoffel.items():
        gx = transport_xpoly(gam, ginv)
        for j in range(1, n + 1):
            for i in range(1, n + 1):
                for k in range(1, n + 1):
                    f = gq[j - 1][mj - 1] * gi[mi - 1][i - 1] * gi[mk - 1][k - 1]
                    if not f:
                        continue
                    key = (j, i, k)
                    prev = christoffel.get(key, XPoly.zero(n))
                    s = prev + gx.scale(f)
                    if s.is_zero():
                        christoffel.pop(key, None)
                    else:
                        christoffel[key] = s
    return SymplecticChart(n, lower, upper, christoffel, chart.x_cap)


def _subst_multidegree(p, M):
    dim = len(p)
    acc = {(0,) * dim: Fraction(1)}
    for i in range(dim):
        for _ in range(p[i]):
            nxt = {}
            for mono, c in acc.items():
                for j in range(dim):
                    f = as_fraction(M[i][j])
                    if not f:
                        continue
                    key = vec_add(mono, unit_vec(dim, j + 1))
                    prev = nxt.get(key, Fraction(0)) + c * f
                    if prev:
                        nxt[key] = prev
                    else:
                        nxt.pop(key, None)
            acc = nxt
    return acc


def _subst_subset(S, M):
    dim = len(M)
    acc = {(): Fraction(1)}
    for i in S:
        nxt = {}
        for mono, c in acc.items():
            for j in range(1, dim + 1):
                f = as_fraction(M[i - 1][j - 1])
                if not f or j in mono:
                    continue
                after = sum(1 for t in mono if t > j)
                sign = -1 if after % 2 else 1
                key = tuple(sorted(mono + (j,)))
                prev = nxt.get(key, Fraction(0)) + c * f * sign
                if prev:
                    nxt[key] = prev
                else:
                    nxt.pop(key, None)
        acc = nxt
    return acc
