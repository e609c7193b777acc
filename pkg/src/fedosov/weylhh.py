"""Hochschild cochain complex of the formal Weyl algebra at constant theta:
topological bar and Koszul resolutions, their contracting homotopies and
comparison maps, the reduced complex on anticommuting psi variables, the
induced cochain homotopy, and GL(2n, Q) transport.

Representations (all coefficients exact rationals):
  WSeries     {(hbar_exp, y_multidegree): Fraction}          element of W
  BarChain    {(hbar_exp, (p_1..p_{m+2})): Fraction}         element of B_m
  KoszulChain {(hbar_exp, p1, p2, C_subset): Fraction}       element of K_m
  PsiElement  {(hbar_exp, p, psi_subset): Fraction}          element of W[psi]
  WeylCochain {(hbar_exp, p, (alpha_1..alpha_q)): Fraction}  arity-q cochain

Anticommuting indices (C, psi) are stored strictly increasing; left
derivatives and left multiplication fix all signs.  The bar differential
contracts every adjacent pair of tensor slots (the dual of the Hochschild
differential under the identification of cochains with bimodule maps on the
bar resolution); the homotopies insert a fresh constant first slot.

Chain arithmetic is exact and untruncated (all operations on finitely
generated chains are finite); cochain data is normalized to filtration
weight 2k + |p| <= order and per-slot |alpha| <= cap, which is exact for
every evaluation at that order.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from .poly import HbarScalar, as_fraction

ZERO = Fraction(0)


def _zero(dim):
    return (0,) * dim


def vec_add(p, q):
    return tuple(a + b for a, b in zip(p, q))


def vec_sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def vec_le(p, q):
    return all(a <= b for a, b in zip(p, q))


def unit(dim, i):
    return tuple(1 if j == i else 0 for j in range(dim))


def multidegrees(dim, max_total):
    """All exponent tuples with given total-degree bound, sorted by
    (total, tuple)."""
    out = [()]
    for _ in range(dim):
        out = [t + (e,) for t in out for e in range(max_total + 1)]
    out = [t for t in out if sum(t) <= max_total]
    out.sort(key=lambda t: (sum(t), t))
    return out


def subset_insert_left(i, T):
    """Sign and result of multiplying the anticommuting generator i from the
    left into the increasing monomial T; None if i already occurs."""
    if i in T:
        return None
    before = sum(1 for t in T if t < i)
    return (-1 if before % 2 else 1), tuple(sorted(T + (i,)))


def subset_remove_left(i, T):
    """Left derivative sign and result; None if i does not occur."""
    if i not in T:
        return None
    pos = T.index(i)
    return (-1 if pos % 2 else 1), T[:pos] + T[pos + 1:]


def _acc(d, key, val):
    s = d.get(key, ZERO) + val
    if s:
        d[key] = s
    else:
        d.pop(key, None)


def falling(n, k):
    """n (n-1) ... (n-k+1)."""
    out = 1
    for i in range(k):
        out *= n - i
    return out


class WeylContext:
    """Constant antisymmetric theta^{ij} over Q, its inverse omega_{ij} with
    omega^{ik} omega_{kj} = delta^i_j, a truncation order, and the caches for
    the comparison-map recursions (safe to share: all results deterministic)."""

    def __init__(self, theta, order: int, cap=None):
        self.dim = len(theta)
        self.theta = tuple(tuple(as_fraction(c) for c in row) for row in theta)
        for i in range(self.dim):
            for j in range(self.dim):
                if self.theta[i][j] != -self.theta[j][i]:
                    raise ValueError("theta must be antisymmetric")
        self.theta_lower = _invert(self.theta)
        self.order = order
        self.cap = order if cap is None else cap
        self._mono_cache = {}
        self._lambda_cache = {}
        self._nu_cache = {}
        self._rho_cache = {}
        self._product_cochain = {}

    @classmethod
    def standard(cls, dim: int, order: int, cap=None) -> "WeylContext":
        theta = [[ZERO] * dim for _ in range(dim)]
        for b in range(dim // 2):
            theta[2 * b][2 * b + 1] = Fraction(1)
            theta[2 * b + 1][2 * b] = Fraction(-1)
        return cls(theta, order, cap)

    def mono_product(self, p, q):
        """theta-Weyl product of monomials: y^p o y^q as
        {(extra_hbar, multidegree): Fraction}."""
        key = (p, q)
        hit = self._mono_cache.get(key)
        if hit is not None:
            return hit
        out = {}
        state = {(p, q): Fraction(1)}
        t = 0
        while state:
            for (pa, pb), c in state.items():
                _acc(out, (t, vec_add(pa, pb)), c)
            t += 1
            nxt = {}
            for (pa, pb), c in state.items():
                for i in range(self.dim):
                    if not pa[i]:
                        continue
                    for j in range(self.dim):
                        if not pb[j] or not self.theta[i][j]:
                            continue
                        coeff = c * self.theta[i][j] * Fraction(pa[i] * pb[j], 2 * t)
                        _acc(nxt, (tuple(pa[:i] + (pa[i] - 1,) + pa[i + 1:]),
                                   tuple(pb[:j] + (pb[j] - 1,) + pb[j + 1:])), coeff)
            state = nxt
        self._mono_cache[key] = out
        return out


def _invert(theta):
    n = len(theta)
    a = [list(row) for row in theta]
    inv = [[Fraction(1) if i == j else ZERO for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ValueError("theta is degenerate")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        d = a[col][col]
        a[col] = [v / d for v in a[col]]
        inv[col] = [v / d for v in inv[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
                inv[r] = [v - f * w for v, w in zip(inv[r], inv[col])]
    return tuple(tuple(row) for row in inv)


# ---------------------------------------------------------------------------
# W-series


class WSeries:
    """Element of the Weyl algebra: {(hbar_exp, y_multidegree): Fraction}."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim, terms=None, order=None):
        self.dim = dim
        clean = {}
        for (k, p), c in (terms or {}).items():
            if not c:
                continue
            if order is not None and 2 * k + sum(p) > order:
                continue
            clean[(k, tuple(p))] = c
        self.terms = clean

    @classmethod
    def monomial(cls, dim, p, c=1, k=0):
        return cls(dim, {(k, tuple(p)): as_fraction(c)})

    @classmethod
    def const(cls, dim, c=1):
        return cls(dim, {(0, _zero(dim)): as_fraction(c)})

    def __add__(self, other):
        terms = dict(self.terms)
        for key, c in other.terms.items():
            _acc(terms, key, c)
        out = WSeries(self.dim)
        out.terms = terms
        return out

    def __neg__(self):
        out = WSeries(self.dim)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = as_fraction(c)
        out = WSeries(self.dim)
        if c:
            out.terms = {k: c * v for k, v in self.terms.items()}
        return out

    def is_zero(self):
        return not self.terms

    def is_y_free(self):
        return all(not any(p) for (_, p) in self.terms)

    def truncate(self, order):
        return WSeries(self.dim, self.terms, order)

    def poly_mul(self, other):
        """Commutative product of the underlying power series."""
        terms = {}
        for (k1, p1), c1 in self.terms.items():
            for (k2, p2), c2 in other.terms.items():
                _acc(terms, (k1 + k2, vec_add(p1, p2)), c1 * c2)
        out = WSeries(self.dim)
        out.terms = terms
        return out

    def weyl_mul(self, other, ctx: WeylContext, order=None):
        """Moyal-type product in W_theta."""
        terms = {}
        for (k1, p1), c1 in self.terms.items():
            for (k2, p2), c2 in other.terms.items():
                for (t, p), cp in ctx.mono_product(p1, p2).items():
                    _acc(terms, (k1 + k2 + t, p), c1 * c2 * cp)
        return WSeries(self.dim, terms, order)

    def hbar_scalar(self):
        """The y-free part as an HbarScalar; raises if y-dependence remains."""
        if not self.is_y_free():
            raise ValueError("series has y-dependence")
        return HbarScalar({k: c for (k, _), c in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, WSeries) and self.terms == other.terms

    def __repr__(self):
        return f"WSeries({self.terms})"


def w_commutator(a: WSeries, b: WSeries, ctx: WeylContext) -> WSeries:
    return a.weyl_mul(b, ctx) - b.weyl_mul(a, ctx)


# ---------------------------------------------------------------------------
# bar resolution


class BarChain:
    """Element of B_m = completed (m+2)-fold tensor power of W."""

    __slots__ = ("dim", "m", "terms")

    def __init__(self, dim, m, terms=None):
        self.dim = dim
        self.m = m
        clean = {}
        for (k, ps), c in (terms or {}).items():
            if not c:
                continue
            if len(ps) != m + 2:
                raise ValueError("wrong number of tensor slots")
            clean[(k, tuple(tuple(p) for p in ps))] = c
        self.terms = clean

    @classmethod
    def interior(cls, dim, betas, c=1, k=0):
        """1 (x) y^{beta_1} (x) ... (x) y^{beta_q} (x) 1."""
        ps = (_zero(dim),) + tuple(tuple(b) for b in betas) + (_zero(dim),)
        return cls(dim, len(betas), {(k, ps): as_fraction(c)})

    def __add__(self, other):
        terms = dict(self.terms)
        for key, c in other.terms.items():
            _acc(terms, key, c)
        out = BarChain(self.dim, self.m)
        out.terms = terms
        return out

    def __neg__(self):
        out = BarChain(self.dim, self.m)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = as_fraction(c)
        out = BarChain(self.dim, self.m)
        if c:
            out.terms = {k: c * v for k, v in self.terms.items()}
        return out

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return (isinstance(other, BarChain) and self.m == other.m
                and self.terms == other.terms)

    def __repr__(self):
        return f"BarChain(m={self.m}, {self.terms})"


def bar_d(ctx: WeylContext, b: BarChain) -> BarChain:
    """Alternating sum of the Weyl products of every adjacent slot pair;
    the dual, under Hom(B, W), of the Hochschild differential."""
    if b.m < 1:
        raise ValueError("bar differential needs m >= 1")
    out = {}
    for (k, ps), c in b.terms.items():
        for pos in range(b.m + 1):
            sign = -1 if pos % 2 else 1
            for (t, merged), cp in ctx.mono_product(ps[pos], ps[pos + 1]).items():
                key = (k + t, ps[:pos] + (merged,) + ps[pos + 2:])
                _acc(out, key, c * cp * sign)
    return BarChain(b.dim, b.m - 1, out)


def bar_aug(ctx: WeylContext, b: BarChain) -> WSeries:
    """Augmentation B_0 -> W: the Weyl product of the two slots."""
    if b.m != 0:
        raise ValueError("augmentation lives on B_0")
    terms = {}
    for (k, ps), c in b.terms.items():
        for (t, merged), cp in ctx.mono_product(ps[0], ps[1]).items():
            _acc(terms, (k + t, merged), c * cp)
    return WSeries(b.dim, terms)


def bar_h(b) -> BarChain:
    """Contracting homotopy: insert a fresh constant first slot.  Accepts a
    BarChain (B_{m-1} -> B_m) or a WSeries (W -> B_0)."""
    if isinstance(b, WSeries):
        return BarChain(b.dim, 0,
                        {(k, (_zero(b.dim), p)): c for (k, p), c in b.terms.items()})
    out = {}
    for (k, ps), c in b.terms.items():
        out[(k, (_zero(b.dim),) + ps)] = c
    return BarChain(b.dim, b.m + 1, out)


def bar_act_left(ctx: WeylContext, u: WSeries, b: BarChain) -> BarChain:
    """Left module action: Weyl-multiply u into the first slot from the left."""
    out = {}
    for (ku, pu), cu in u.terms.items():
        for (k, ps), c in b.terms.items():
            for (t, merged), cp in ctx.mono_product(pu, ps[0]).items():
                _acc(out, (k + ku + t, (merged,) + ps[1:]), cu * c * cp)
    return BarChain(b.dim, b.m, out)


def bar_act_right(ctx: WeylContext, b: BarChain, v: WSeries) -> BarChain:
    """Right module action: Weyl-multiply v into the last slot from the right."""
    out = {}
    for (kv, pv), cv in v.terms.items():
        for (k, ps), c in b.terms.items():
            for (t, merged), cp in ctx.mono_product(ps[-1], pv).items():
                _acc(out, (k + kv + t, ps[:-1] + (merged,)), cv * c * cp)
    return BarChain(b.dim, b.m, out)


# ---------------------------------------------------------------------------
# Koszul resolution


class KoszulChain:
    """Element of K_m: {(hbar_exp, p1, p2, C_subset): Fraction} with the
    C indices 1-based, strictly increasing."""

    __slots__ = ("dim", "m", "terms")

    def __init__(self, dim, m, terms=None):
        self.dim = dim
        self.m = m
        clean = {}
        for (k, p1, p2, T), c in (terms or {}).items():
            if not c:
                continue
            if len(T) != m:
                raise ValueError("wrong Koszul degree")
            clean[(k, tuple(p1), tuple(p2), tuple(T))] = c
        self.terms = clean

    @classmethod
    def generator(cls, dim, T, c=1):
        return cls(dim, len(T), {(0, _zero(dim), _zero(dim), tuple(T)): as_fraction(c)})

    def __add__(self, other):
        terms = dict(self.terms)
        for key, c in other.terms.items():
            _acc(terms, key, c)
        out = KoszulChain(self.dim, self.m)
        out.terms = terms
        return out

    def __neg__(self):
        out = KoszulChain(self.dim, self.m)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = as_fraction(c)
        out = KoszulChain(self.dim, self.m)
        if c:
            out.terms = {k: c * v for k, v in self.terms.items()}
        return out

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return (isinstance(other, KoszulChain) and self.m == other.m
                and self.terms == other.terms)

    def __repr__(self):
        return f"KoszulChain(m={self.m}, {self.terms})"


def koszul_d(ctx: WeylContext, a: KoszulChain) -> KoszulChain:
    """(y1^i - y2^i) d/dC^i - (hbar/2) theta^{ij} d/dC^i (d/dy1^j + d/dy2^j),
    with left C-derivatives.

    This is multiplication by y^i on the two inner tensor positions (right
    Weyl multiplication on the first factor minus left multiplication on the
    second), the unique reading that commutes with the outer bimodule action
    and whose augmented complex is contracted by the stated homotopy: the
    Moyal kernel exp((hbar/2) theta d1 d2) conjugates it to the classical
    Koszul differential (y1 - y2) d/dC."""
    if a.m < 1:
        raise ValueError("Koszul differential needs m >= 1")
    dim = a.dim
    out = {}
    for (k, p1, p2, T), c in a.terms.items():
        for idx in T:
            sign, T2 = subset_remove_left(idx, T)
            cc = c * sign
            i = idx - 1
            _acc(out, (k, vec_add(p1, unit(dim, i)), p2, T2), cc)
            _acc(out, (k, p1, vec_add(p2, unit(dim, i)), T2), -cc)
            for j in range(dim):
                th = ctx.theta[i][j]
                if not th:
                    continue
                if p1[j]:
                    _acc(out, (k + 1, vec_sub(p1, unit(dim, j)), p2, T2),
                         -cc * th * Fraction(p1[j], 2))
                if p2[j]:
                    _acc(out, (k + 1, p1, vec_sub(p2, unit(dim, j)), T2),
                         -cc * th * Fraction(p2[j], 2))
    return KoszulChain(dim, a.m - 1, out)


def koszul_aug(ctx: WeylContext, a: KoszulChain) -> WSeries:
    """Augmentation K_0 = W (x) W^op -> W: the Weyl product of the factors."""
    if a.m != 0:
        raise ValueError("augmentation lives on K_0")
    terms = {}
    for (k, p1, p2, _), c in a.terms.items():
        for (t, merged), cp in ctx.mono_product(p1, p2).items():
            _acc(terms, (k + t, merged), c * cp)
    return WSeries(a.dim, terms)


def koszul_h(ctx: WeylContext, a) -> KoszulChain:
    """Contracting homotopy of the augmented Koszul complex:

    h(a) = C^k  int_0^1 dt (D_{-t} D d/dy1^k a)(hbar, y2 + t(y1-y2), y2, tC)

    with D = exp((hbar/2) theta^{ij} d/dy1^i d/dy2^j); the t-integral is the
    exact per-monomial division.  Accepts a KoszulChain or a WSeries (the
    W -> K_0 insertion w |-> w(y2))."""
    if isinstance(a, WSeries):
        return KoszulChain(a.dim, 0,
                           {(k, _zero(a.dim), p, ()): c for (k, p), c in a.terms.items()})
    dim = a.dim
    out = {}
    for (k, p1, p2, T), c in a.terms.items():
        tpow_T = len(T)
        for kc in range(dim):
            if not p1[kc]:
                continue
            ins = subset_insert_left(kc + 1, T)
            if ins is None:
                continue
            csign, T2 = ins
            c0 = c * csign * p1[kc]
            p1a = vec_sub(p1, unit(dim, kc))
            # D_{-t} D = exp((hbar (1-t)/2) theta^{ij} d/dy1^i d/dy2^j);
            # s pairings carry (1-t)^s and hbar^s
            states = {(p1a, p2): c0}
            s = 0
            while states:
                for (pb1, pb2), cs in states.items():
                    # (1-t)^s = sum_w C(s,w) (-t)^w
                    for w in range(s + 1):
                        cw = cs * comb(s, w) * (-1 if w % 2 else 1)
                        _collect_subst(out, dim, k + s, pb1, pb2, T2,
                                       cw, w + tpow_T)
                s += 1
                nxt = {}
                for (pb1, pb2), cs in states.items():
                    for i in range(dim):
                        if not pb1[i]:
                            continue
                        for j in range(dim):
                            if not pb2[j] or not ctx.theta[i][j]:
                                continue
                            coeff = cs * ctx.theta[i][j] * Fraction(pb1[i] * pb2[j], 2 * s)
                            _acc(nxt, (vec_sub(pb1, unit(dim, i)),
                                       vec_sub(pb2, unit(dim, j))), coeff)
                states = nxt
    return KoszulChain(dim, a.m + 1, out)


def _collect_subst(out, dim, k, p1, p2, T, coeff, base_tpow):
    """Expand y1 -> y2 + t(y1 - y2) on y1^{p1}, integrate t exactly, and
    accumulate results."""
    # per coordinate: (y2 + t(y1-y2))^{p} =
    #   sum_{v <= u <= p} C(p,u) C(u,v) (-1)^{u-v} t^u y1^v y2^{p-v}
    combos = [((), 0, Fraction(1))]  # (v-tuple, t-degree, coeff)
    for c_idx in range(dim):
        p = p1[c_idx]
        nxt = []
        for v_t, tdeg, cf in combos:
            for u in range(p + 1):
                for v in range(u + 1):
                    cc = cf * comb(p, u) * comb(u, v) * (-1 if (u - v) % 2 else 1)
                    nxt.append((v_t + (v,), tdeg + u, cc))
        combos = nxt
    for v_t, tdeg, cf in combos:
        if not cf:
            continue
        d = base_tpow + tdeg
        newp2 = vec_add(p2, vec_sub(p1, v_t))
        _acc(out, (k, v_t, newp2, T), coeff * cf * Fraction(1, d + 1))


def koszul_act_left(ctx: WeylContext, u: WSeries, a: KoszulChain) -> KoszulChain:
    out = {}
    for (ku, pu), cu in u.terms.items():
        for (k, p1, p2, T), c in a.terms.items():
            for (t, merged), cp in ctx.mono_product(pu, p1).items():
                _acc(out, (k + ku + t, merged, p2, T), cu * c * cp)
    return KoszulChain(a.dim, a.m, out)


def koszul_act_right(ctx: WeylContext, a: KoszulChain, v: WSeries) -> KoszulChain:
    out = {}
    for (kv, pv), cv in v.terms.items():
        for (k, p1, p2, T), c in a.terms.items():
            for (t, merged), cp in ctx.mono_product(p2, pv).items():
                _acc(out, (k + kv + t, p1, merged, T), cv * c * cp)
    return KoszulChain(a.dim, a.m, out)


# ---------------------------------------------------------------------------
# comparison maps lambda, nu and the homotopy rho


def koszul_to_bar(ctx: WeylContext, a: KoszulChain) -> BarChain:
    """lambda: identity on K_0, lambda(C^T) = h_B(lambda(d C^T)) on the
    C-monomial generators, extended as a bimodule map."""
    out = BarChain(a.dim, a.m if a.m >= 0 else 0)
    acc = None
    for (k, p1, p2, T), c in a.terms.items():
        gen = _lambda_gen(ctx, T)
        piece = gen
        if any(p1):
            piece = bar_act_left(ctx, WSeries.monomial(ctx.dim, p1), piece)
        if any(p2):
            piece = bar_act_right(ctx, piece, WSeries.monomial(ctx.dim, p2))
        piece = piece.scale(c)
        piece = BarChain(piece.dim, piece.m,
                         {(kk + k, ps): cc for (kk, ps), cc in piece.terms.items()})
        acc = piece if acc is None else acc + piece
    return acc if acc is not None else BarChain(ctx.dim, a.m, {})


def _lambda_gen(ctx: WeylContext, T) -> BarChain:
    hit = ctx._lambda_cache.get(T)
    if hit is not None:
        return hit
    if not T:
        out = BarChain(ctx.dim, 0, {(0, (_zero(ctx.dim), _zero(ctx.dim))): Fraction(1)})
    else:
        out = bar_h(koszul_to_bar(ctx, koszul_d(ctx, KoszulChain.generator(ctx.dim, T))))
    ctx._lambda_cache[T] = out
    return out


def bar_to_koszul(ctx: WeylContext, b: BarChain) -> KoszulChain:
    """nu: identity on B_0, nu(g) = h_K(nu(bar_d g)) on interior monomial
    generators (unit first and last slots), extended as a bimodule map."""
    acc = None
    for (k, ps), c in b.terms.items():
        if b.m == 0:
            piece = KoszulChain(b.dim, 0, {(0, ps[0], ps[1], ()): Fraction(1)})
        else:
            gen = _nu_gen(ctx, ps[1:-1])
            piece = gen
            if any(ps[0]):
                piece = koszul_act_left(ctx, WSeries.monomial(ctx.dim, ps[0]), piece)
            if any(ps[-1]):
                piece = koszul_act_right(ctx, piece, WSeries.monomial(ctx.dim, ps[-1]))
        piece = piece.scale(c)
        piece = KoszulChain(piece.dim, piece.m,
                            {(kk + k, p1, p2, T): cc
                             for (kk, p1, p2, T), cc in piece.terms.items()})
        acc = piece if acc is None else acc + piece
    return acc if acc is not None else KoszulChain(ctx.dim, b.m, {})


def _nu_gen(ctx: WeylContext, betas) -> KoszulChain:
    hit = ctx._nu_cache.get(betas)
    if hit is not None:
        return hit
    g = BarChain.interior(ctx.dim, betas)
    out = koszul_h(ctx, bar_to_koszul(ctx, bar_d(ctx, g)))
    ctx._nu_cache[betas] = out
    return out


def bar_homotopy(ctx: WeylContext, b: BarChain) -> BarChain:
    """rho: zero on B_0, rho(g) = h_B((id - lambda nu) g) - h_B(rho(bar_d g))
    on interior generators, extended as a bimodule map; satisfies
    b - lambda(nu(b)) = bar_d(rho(b)) + rho(bar_d(b))."""
    if b.m == 0:
        return BarChain(b.dim, 1, {})
    acc = None
    for (k, ps), c in b.terms.items():
        gen = _rho_gen(ctx, ps[1:-1])
        piece = gen
        if any(ps[0]):
            piece = bar_act_left(ctx, WSeries.monomial(ctx.dim, ps[0]), piece)
        if any(ps[-1]):
            piece = bar_act_right(ctx, piece, WSeries.monomial(ctx.dim, ps[-1]))
        piece = piece.scale(c)
        piece = BarChain(piece.dim, piece.m,
                         {(kk + k, pss): cc for (kk, pss), cc in piece.terms.items()})
        acc = piece if acc is None else acc + piece
    return acc if acc is not None else BarChain(ctx.dim, b.m + 1, {})


def _rho_gen(ctx: WeylContext, betas) -> BarChain:
    hit = ctx._rho_cache.get(betas)
    if hit is not None:
        return hit
    g = BarChain.interior(ctx.dim, betas)
    stage = g - koszul_to_bar(ctx, bar_to_koszul(ctx, g))
    out = bar_h(stage) - bar_h(bar_homotopy(ctx, bar_d(ctx, g)))
    ctx._rho_cache[betas] = out
    return out


# ---------------------------------------------------------------------------
# the reduced complex W[psi]


class PsiElement:
    """Element of W[psi_1..psi_{2n}]: {(hbar_exp, p, psi_subset): Fraction}."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim, terms=None):
        self.dim = dim
        clean = {}
        for (k, p, T), c in (terms or {}).items():
            if c:
                clean[(k, tuple(p), tuple(T))] = c
        self.terms = clean

    def __add__(self, other):
        terms = dict(self.terms)
        for key, c in other.terms.items():
            _acc(terms, key, c)
        out = PsiElement(self.dim)
        out.terms = terms
        return out

    def __neg__(self):
        out = PsiElement(self.dim)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self):
        return not self.terms

    def psi_degrees(self):
        return sorted({len(T) for (_, _, T) in self.terms})

    def constant_part(self) -> HbarScalar:
        """Terms with y = psi = 0."""
        z = _zero(self.dim)
        return HbarScalar({k: c for (k, p, T), c in self.terms.items()
                           if p == z and not T})

    def __eq__(self, other):
        return isinstance(other, PsiElement) and self.terms == other.terms

    def __repr__(self):
        return f"PsiElement({self.terms})"


def psi_d(ctx: WeylContext, a: PsiElement) -> PsiElement:
    """hbar psi_i omega^{ij} d/dy^j with left psi multiplication;
    omega^{ij} = theta^{ij}."""
    dim = a.dim
    out = {}
    for (k, p, T), c in a.terms.items():
        for i in range(dim):
            ins = subset_insert_left(i + 1, T)
            if ins is None:
                continue
            sign, T2 = ins
            for j in range(dim):
                th = ctx.theta[i][j]
                if not th or not p[j]:
                    continue
                _acc(out, (k + 1, vec_sub(p, unit(dim, j)), T2),
                     c * sign * th * p[j])
    return PsiElement(dim, out)


def psi_h(ctx: WeylContext, a: PsiElement) -> PsiElement:
    """(1/hbar) int_0^1 dt  y^i omega_{ij} (d/dpsi_j a)(hbar, ty, t psi),
    the exact per-monomial partial homotopy: a = a|_{y=psi=0}
    + (psi_d psi_h + psi_h psi_d) a."""
    dim = a.dim
    out = {}
    for (k, p, T), c in a.terms.items():
        deg = sum(p) + len(T)  # t-degree after removing one psi and adding one y
        for j in T:
            sign, T2 = subset_remove_left(j, T)
            for i in range(dim):
                om = ctx.theta_lower[i][j - 1]
                if not om:
                    continue
                _acc(out, (k - 1, vec_add(p, unit(dim, i)), T2),
                     c * sign * om * Fraction(1, deg))
    return PsiElement(dim, out)


# ---------------------------------------------------------------------------
# Weyl cochains


class WeylCochain:
    """Arity-q continuous cochain of W in its unique polydifferential form:
    {(hbar_exp, y_multidegree, (alpha_1..alpha_q)): Fraction}; evaluation is
    c y^p (d^{alpha_1} a_1) ... (d^{alpha_q} a_q) with commutative products
    of the resulting series."""

    __slots__ = ("dim", "arity", "terms")

    def __init__(self, dim, arity, terms=None, order=None, cap=None):
        self.dim = dim
        self.arity = arity
        clean = {}
        for (k, p, alphas), c in (terms or {}).items():
            if not c:
                continue
            if len(alphas) != arity:
                raise ValueError("wrong arity")
            if order is not None and 2 * k + sum(p) > order:
                continue
            if cap is not None and any(sum(al) > cap for al in alphas):
                continue
            clean[(k, tuple(p), tuple(tuple(al) for al in alphas))] = c
        self.terms = clean

    @classmethod
    def from_wseries(cls, w: WSeries) -> "WeylCochain":
        return cls(w.dim, 0, {(k, p, ()): c for (k, p), c in w.terms.items()})

    def as_wseries(self) -> WSeries:
        if self.arity != 0:
            raise ValueError("not an arity-0 cochain")
        return WSeries(self.dim, {(k, p): c for (k, p, _), c in self.terms.items()})

    def __add__(self, other):
        terms = dict(self.terms)
        for key, c in other.terms.items():
            _acc(terms, key, c)
        out = WeylCochain(self.dim, self.arity)
        out.terms = terms
        return out

    def __neg__(self):
        out = WeylCochain(self.dim, self.arity)
        out.terms = {k: -c for k, c in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = as_fraction(c)
        out = WeylCochain(self.dim, self.arity)
        if c:
            out.terms = {k: c * v for k, v in self.terms.items()}
        return out

    def is_zero(self):
        return not self.terms

    def normalize(self, order, cap=None):
        return WeylCochain(self.dim, self.arity, self.terms, order, cap)

    def restrict(self, cap):
        """Keep terms with every |alpha_s| <= cap (window comparison)."""
        return WeylCochain(self.dim, self.arity, self.terms, None, cap)

    def min_term_weight(self):
        return min((2 * k + sum(p) for (k, p, _) in self.terms), default=0)

    def eval(self, args, order=None) -> WSeries:
        """Evaluate on WSeries arguments."""
        if len(args) != self.arity:
            raise ValueError("arity mismatch")
        out = {}
        for (k, p, alphas), c in self.terms.items():
            partial = {(k, p): c}
            for al, arg in zip(alphas, args):
                nxt = {}
                for (ka, pa), ca in arg.terms.items():
                    if not vec_le(al, pa):
                        continue
                    f = 1
                    for n_, k_ in zip(pa, al):
                        f *= falling(n_, k_)
                    for (kk, pp), cc in partial.items():
                        _acc(nxt, (kk + ka, vec_add(pp, vec_sub(pa, al))),
                             cc * ca * f)
                partial = nxt
                if not partial:
                    break
            for key, cc in partial.items():
                _acc(out, key, cc)
        return WSeries(self.dim, out, order)

    def __eq__(self, other):
        return (isinstance(other, WeylCochain) and self.arity == other.arity
                and self.terms == other.terms)

    def __repr__(self):
        return f"WeylCochain(arity={self.arity}, {self.terms})"


def product_cochain(ctx: WeylContext, t_max: int) -> WeylCochain:
    """The multiplication of W_theta as a 2-cochain, with pairing order up
    to t_max: sum_t (hbar/2)^t/t! theta^{i1 j1}..theta^{it jt}
    d^t (x) d^t."""
    hit = ctx._product_cochain.get(t_max)
    if hit is not None:
        return hit
    dim = ctx.dim
    terms = {}
    state = {(_zero(dim), _zero(dim)): Fraction(1)}
    t = 0
    while True:
        for (al, be), c in state.items():
            terms[(t, _zero(dim), (al, be))] = c
        if t == t_max:
            break
        t += 1
        nxt = {}
        for (al, be), c in state.items():
            for i in range(dim):
                for j in range(dim):
                    th = ctx.theta[i][j]
                    if not th:
                        continue
                    _acc(nxt, (vec_add(al, unit(dim, i)), vec_add(be, unit(dim, j))),
                         c * th / (2 * t))
        state = nxt
    out = WeylCochain(dim, 2, terms)
    ctx._product_cochain[t_max] = out
    return out


def cochain_insert(P1: WeylCochain, i: int, P2: WeylCochain) -> WeylCochain:
    """Insert P2 into slot i (0-based) of P1: the slot derivative
    distributes multinomially over P2's y-part and slots."""
    dim = P1.dim
    out = {}
    for (k1, p1, al1), c1 in P1.terms.items():
        alpha = al1[i]
        for (k2, p2, al2), c2 in P2.terms.items():
            # split alpha into gamma_0 (hits y^{p2}) + gamma_1..gamma_{k2}
            splits = [((), Fraction(c1 * c2))]
            nslots = len(al2)
            for coord in range(dim):
                a = alpha[coord]
                nxt = []
                for parts, cf in splits:
                    for comp in _compositions(a, nslots + 1):
                        m = _multinomial(a, comp)
                        nxt.append((parts + (comp,), cf * m))
                splits = nxt
            for parts, cf in splits:
                # parts[coord] = (g0, g1.., g_{nslots}) for that coordinate
                g0 = tuple(parts[c][0] for c in range(dim))
                if not vec_le(g0, p2):
                    continue
                f = 1
                for n_, k_ in zip(p2, g0):
                    f *= falling(n_, k_)
                if not f:
                    continue
                new_alphas = []
                ok = True
                for s in range(nslots):
                    gs = tuple(parts[c][s + 1] for c in range(dim))
                    new_alphas.append(vec_add(al2[s], gs))
                newp = vec_add(p1, vec_sub(p2, g0))
                key = (k1 + k2, newp,
                       al1[:i] + tuple(new_alphas) + al1[i + 1:])
                _acc(out, key, cf * f)
    return WeylCochain(dim, P1.arity + P2.arity - 1, out)


def _compositions(total, parts):
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def _multinomial(total, comp):
    out = 1
    rem = total
    for c in comp:
        out *= comb(rem, c)
        rem -= c
    return out


def cochain_cup(ctx: WeylContext, P1: WeylCochain, P2: WeylCochain,
                order=None, cap=None) -> WeylCochain:
    """(P1 cup P2)(a..) = P1(first) o P2(rest): Weyl-pair the y-parts and
    slots of the two factors.  Pairing steps that can only produce terms
    beyond the order or slot cap are dropped (that is exact at the order)."""
    dim = ctx.dim
    order = ctx.order if order is None else order
    cap = ctx.cap if cap is None else cap
    out = {}
    for (k1, p1, al1), c1 in P1.terms.items():
        for (k2, p2, al2), c2 in P2.terms.items():
            kk = k1 + k2
            state = {(p1, al1, p2, al2): c1 * c2}
            t = 0
            while state:
                for (q1, b1, q2, b2), c in state.items():
                    _acc(out, (kk + t, vec_add(q1, q2), b1 + b2), c)
                t += 1
                nxt = {}
                for (q1, b1, q2, b2), c in state.items():
                    for i in range(dim):
                        for j in range(dim):
                            th = ctx.theta[i][j]
                            if not th:
                                continue
                            base = c * th / (2 * t)
                            for q1n, b1n, cc1 in _derive_targets(q1, b1, i, base):
                                for q2n, b2n, cc2 in _derive_targets(q2, b2, j, cc1):
                                    if 2 * (kk + t) + sum(q1n) + sum(q2n) > order:
                                        continue
                                    if any(sum(al) > cap for al in b1n + b2n):
                                        continue
                                    _acc(nxt, (q1n, b1n, q2n, b2n), cc2)
                state = nxt
    return WeylCochain(dim, P1.arity + P2.arity, out, order, cap)


def _derive_targets(p, alphas, i, coeff):
    """All ways d/dy^i can hit the extended monomial y^p * slots(alphas):
    either lower p (factor p_i) or bump one slot's alpha.  Yields
    (p', alphas', coeff')."""
    out = []
    if p[i]:
        out.append((tuple(p[:i] + (p[i] - 1,) + p[i + 1:]), alphas, coeff * p[i]))
    for s, al in enumerate(alphas):
        al2 = tuple(al[:i] + (al[i] + 1,) + al[i + 1:])
        out.append((p, alphas[:s] + (al2,) + alphas[s + 1:], coeff))
    return out


def hh_hochschild_d(ctx: WeylContext, a: WeylCochain, order=None, cap=None) -> WeylCochain:
    """Hochschild differential on C^q(W):
    (dPhi)(a_1..a_{q+1}) = a_1 o Phi(a_2..) - Phi(a_1 o a_2, ..) + ...
    + (-)^q Phi(a_1, .., a_q o a_{q+1}) + (-)^{q+1} Phi(a_1..a_q) o a_{q+1}."""
    order = ctx.order if order is None else order
    q = a.arity
    t_max = max(0, order - min(0, a.min_term_weight()) + 1)
    mu = product_cochain(ctx, t_max)
    out = cochain_insert(mu, 1, a)  # a_1 o Phi(...)
    last = cochain_insert(mu, 0, a)  # Phi(...) o a_{q+1}
    out = out + (last if (q + 1) % 2 == 0 else -last)
    for j in range(q):
        mid = cochain_insert(a, j, mu)
        out = out + (mid if (j + 1) % 2 == 0 else -mid)
    return out.normalize(order, cap if cap is not None else ctx.cap)


def gerstenhaber_w(P1: WeylCochain, P2: WeylCochain,
                   order=None, cap=None) -> WeylCochain:
    """[P1, P2]_G = sum_i (-)^{i k2'} P1 o_i P2 - (-)^{k1' k2'} (1 <-> 2)
    with k' = arity - 1."""
    k1, k2 = P1.arity - 1, P2.arity - 1
    out = None
    for i in range(P1.arity):
        term = cochain_insert(P1, i, P2)
        if (i * k2) % 2:
            term = -term
        out = term if out is None else out + term
    if out is None:
        out = WeylCochain(P1.dim, P1.arity + P2.arity - 1)
    for j in range(P2.arity):
        term = cochain_insert(P2, j, P1)
        sign = (k1 * k2 + j * k1) % 2
        out = out - term if sign == 0 else out + term
    if order is not None or cap is not None:
        out = out.normalize(order, cap)
    return out


# ---------------------------------------------------------------------------
# dualization: cochains against the resolutions


def eval_on_bar(ctx: WeylContext, a: WeylCochain, b: BarChain,
                order=None) -> WSeries:
    """The bimodule map Hom(B_q, W) attached to a, evaluated on b:
    hbar^k y^{p_1} o a(middle slots) o y^{p_{q+2}}."""
    if b.m != a.arity:
        raise ValueError("bar degree must match cochain arity")
    order = ctx.order if order is None else order
    total = {}
    for (k, ps), c in b.terms.items():
        mid = [WSeries.monomial(ctx.dim, p) for p in ps[1:-1]]
        val = a.eval(mid)
        if val.is_zero():
            continue
        val = WSeries.monomial(ctx.dim, ps[0]).weyl_mul(val, ctx)
        val = val.weyl_mul(WSeries.monomial(ctx.dim, ps[-1]), ctx)
        for (kk, pp), cc in val.terms.items():
            _acc(total, (kk + k, pp), cc * c)
    return WSeries(ctx.dim, total, order)


def eval_psi_on_koszul(ctx: WeylContext, f: PsiElement, kappa: KoszulChain,
                       order=None) -> WSeries:
    """Evaluate f in W[psi] = Hom(K, W) on a Koszul chain:
    f(hbar^k y^{p1} y^{p2} C^T) = hbar^k y^{p1} o w_T o y^{p2}."""
    order = ctx.order if order is None else order
    coeffs = {}
    for (k, p, T), c in f.terms.items():
        w = coeffs.setdefault(T, {})
        _acc(w, (k, p), c)
    out = WSeries(ctx.dim, {})
    for (k, p1, p2, T), c in kappa.terms.items():
        w = coeffs.get(T)
        if not w:
            continue
        val = WSeries(ctx.dim, w)
        val = WSeries.monomial(ctx.dim, p1).weyl_mul(val, ctx)
        val = val.weyl_mul(WSeries.monomial(ctx.dim, p2), ctx)
        val = WSeries(ctx.dim, {(kk + k, pp): cc for (kk, pp), cc in val.terms.items()})
        out = out + val.scale(c)
    return out.truncate(order)


def lambda_hat(ctx: WeylContext, a: WeylCochain, order=None) -> PsiElement:
    """Precompose with lambda: sum over |T| = arity of Phi_a(lambda(C^T)) psi_T."""
    q = a.arity
    out = {}
    for T in _subsets(ctx.dim, q):
        chain = _lambda_gen(ctx, T)
        val = eval_on_bar(ctx, a, chain, order)
        for (k, p), c in val.terms.items():
            _acc(out, (k, p, T), c)
    return PsiElement(ctx.dim, out)


def _subsets(dim, size):
    from itertools import combinations

    return [tuple(c) for c in combinations(range(1, dim + 1), size)]


def cochain_from_values(ctx: WeylContext, fn, arity, rec_cap, order=None) -> WeylCochain:
    """Reconstruct the unique polydifferential form of a polylinear map from
    its values on monomial argument tuples, triangularly by total slot
    degree; exact for slot multidegrees within rec_cap."""
    order = ctx.order if order is None else order
    degs = multidegrees(ctx.dim, rec_cap)
    tuples = [()]
    for _ in range(arity):
        tuples = [t + (d,) for t in tuples for d in degs]
    tuples.sort(key=lambda bt: (sum(sum(b) for b in bt), bt))
    data = {}
    for bt in tuples:
        val = dict(fn(bt).terms)
        # subtract contributions of already-known data with gamma <= beta
        for (k, p, gammas), c in data.items():
            if not all(vec_le(g, b) for g, b in zip(gammas, bt)):
                continue
            f = 1
            extra = _zero(ctx.dim)
            for g, b in zip(gammas, bt):
                for n_, k_ in zip(b, g):
                    f *= falling(n_, k_)
                extra = vec_add(extra, vec_sub(b, g))
            if gammas == bt:
                continue
            _acc(val, (k, vec_add(p, extra)), -c * f)
        fact = 1
        for b in bt:
            for e in b:
                for ii in range(1, e + 1):
                    fact *= ii
        for (k, p), c in val.items():
            if 2 * k + sum(p) > order:
                continue
            data[(k, p, bt)] = c / fact
    return WeylCochain(ctx.dim, arity, data)


def nu_hat(ctx: WeylContext, f: PsiElement, arity, rec_cap, order=None) -> WeylCochain:
    """Precompose with nu: the cochain with values f(nu(1 (x) args (x) 1))."""

    def fn(betas):
        chain = bar_to_koszul(ctx, BarChain.interior(ctx.dim, betas))
        return eval_psi_on_koszul(ctx, f, chain, order)

    return cochain_from_values(ctx, fn, arity, rec_cap, order)


def rho_hat(ctx: WeylContext, a: WeylCochain, rec_cap, order=None) -> WeylCochain:
    """Precompose with rho: arity drops by one."""

    def fn(betas):
        chain = bar_homotopy(ctx, BarChain.interior(ctx.dim, betas))
        return eval_on_bar(ctx, a, chain, order)

    return cochain_from_values(ctx, fn, a.arity - 1, rec_cap, order)


def cochain_homotopy(ctx: WeylContext, a: WeylCochain, rec_cap, order=None) -> WeylCochain:
    """chi(a) = nu_hat(psi_h(lambda_hat(a))) + rho_hat(a) for arity >= 1;
    satisfies a = (d chi + chi d) a."""
    if a.arity < 1:
        raise ValueError("the homotopy needs arity >= 1")
    f = psi_h(ctx, lambda_hat(ctx, a, order))
    part1 = nu_hat(ctx, f, a.arity - 1, rec_cap, order)
    part2 = rho_hat(ctx, a, rec_cap, order)
    return part1 + part2


def hh_reduce(ctx: WeylContext, a: WeylCochain, rec_cap=None):
    """For a cocycle: arity 0 -> its central value in C((hbar)); arity >= 1
    -> an exactness witness chi(a) with d chi(a) = a."""
    d = hh_hochschild_d(ctx, a)
    if not d.is_zero():
        raise ValueError("input is not a Hochschild cocycle")
    if a.arity == 0:
        w = a.as_wseries()
        return w.hbar_scalar()
    rec_cap = ctx.cap if rec_cap is None else rec_cap
    return cochain_homotopy(ctx, a, rec_cap)


# ---------------------------------------------------------------------------
# GL(2n, Q) transport


def gl_push_theta(g, theta):
    """theta' = g theta g^T."""
    n = len(theta)
    out = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            s = ZERO
            for k in range(n):
                for l in range(n):
                    s += as_fraction(g[i][k]) * theta[k][l] * as_fraction(g[j][l])
            out[i][j] = s
    return tuple(tuple(row) for row in out)


def gl_transport_context(ctx: WeylContext, g) -> WeylContext:
    return WeylContext(gl_push_theta(g, ctx.theta), ctx.order, ctx.cap)


def _matrix_inverse(g):
    n = len(g)
    a = [[as_fraction(v) for v in row] for row in g]
    inv = [[Fraction(1) if i == j else ZERO for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        d = a[col][col]
        a[col] = [v / d for v in a[col]]
        inv[col] = [v / d for v in inv[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
                inv[r] = [v - f * w for v, w in zip(inv[r], inv[col])]
    return inv


def _subst_monomial(p, M):
    """Expand prod_i (sum_j M[i][j] y_j)^{p_i} -> {multidegree: Fraction}."""
    dim = len(p)
    acc = {_zero(dim): Fraction(1)}
    for i in range(dim):
        for _ in range(p[i]):
            nxt = {}
            for mono, c in acc.items():
                for j in range(dim):
                    if not M[i][j]:
                        continue
                    _acc(nxt, vec_add(mono, unit(dim, j)), c * M[i][j])
            acc = nxt
    return acc


def _subst_exterior(T, M):
    """Expand prod_{i in T} (sum_j M[i][j] e_j) in an anticommuting algebra:
    {subset: Fraction} including the ordering signs."""
    dim = len(M)
    acc = {(): Fraction(1)}
    for i in T:
        nxt = {}
        for mono, c in acc.items():
            for j in range(1, dim + 1):
                coeff = M[i - 1][j - 1]
                if not coeff:
                    continue
                # multiply e_j from the RIGHT of mono
                if j in mono:
                    continue
                after = sum(1 for t in mono if t > j)
                sign = -1 if after % 2 else 1
                _acc(nxt, tuple(sorted(mono + (j,))), c * coeff * sign)
        acc = nxt
    return acc


def gl_transport(ctx: WeylContext, g, obj):
    """Push an object of W_theta along g in GL(2n, Q) to W_{g theta g^T}:
    y-variables substitute by g^{-1} in every copy, anticommuting indices
    transform compatibly with the Hom identifications; functorial in g."""
    ginv = _matrix_inverse(g)
    if isinstance(obj, WSeries):
        out = {}
        for (k, p), c in obj.terms.items():
            for mono, cf in _subst_monomial(p, ginv).items():
                _acc(out, (k, mono), c * cf)
        return WSeries(obj.dim, out)
    if isinstance(obj, BarChain):
        out = {}
        for (k, ps), c in obj.terms.items():
            partial = {(): Fraction(1)}
            for p in ps:
                nxt = {}
                for done, cf in partial.items():
                    for mono, cf2 in _subst_monomial(p, ginv).items():
                        _acc(nxt, done + (mono,), cf * cf2)
                partial = nxt
            for done, cf in partial.items():
                _acc(out, (k, done), c * cf)
        return BarChain(obj.dim, obj.m, out)
    if isinstance(obj, KoszulChain):
        out = {}
        for (k, p1, p2, T), c in obj.terms.items():
            for m1, c1 in _subst_monomial(p1, ginv).items():
                for m2, c2 in _subst_monomial(p2, ginv).items():
                    for T2, c3 in _subst_exterior(T, ginv).items():
                        _acc(out, (k, m1, m2, T2), c * c1 * c2 * c3)
        return KoszulChain(obj.dim, obj.m, out)
    if isinstance(obj, PsiElement):
        # psi_i are dual to C^i: (g_* f)(C'^T) = g_*(f(g^{-1}_* C'^T)),
        # with g^{-1}_* C' = substitution by g.
        gmat = [[as_fraction(v) for v in row] for row in g]
        out = {}
        for (k, p, T), c in obj.terms.items():
            for mono, cf in _subst_monomial(p, ginv).items():
                for T2, cf2 in _subst_exterior(T, _transpose(gmat)).items():
                    _acc(out, (k, mono, T2), c * cf * cf2)
        return PsiElement(obj.dim, out)
    if isinstance(obj, WeylCochain):
        ctx2 = gl_transport_context(ctx, g)

        def fn(betas):
            args = [gl_transport(ctx2, ginv, WSeries.monomial(ctx.dim, b))
                    for b in betas]
            val = obj.eval(args)
            return gl_transport(ctx, g, val).truncate(ctx.order)

        rec_cap = max((max((sum(al) for al in alphas), default=0)
                       for (_, _, alphas) in obj.terms), default=0)
        return cochain_from_values(ctx2, fn, obj.arity, rec_cap, ctx.order)
    raise TypeError(f"cannot transport {type(obj).__name__}")


def _transpose(m):
    n = len(m)
    return [[m[j][i] for j in range(n)] for i in range(n)]
