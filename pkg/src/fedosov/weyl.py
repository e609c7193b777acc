"""Formal Weyl algebra sections over a polynomial symplectic chart.

A section is a finite sum of terms  hbar^k * c(x) * y^p  with c an XPoly and
p a y-multidegree; the filtration weight of a term is 2k + |p| and every
operation is exact modulo weight > order.  Exterior-form-valued sections
carry strictly increasing dx-index subsets; a form component's coefficient is
always written to the left of its dx block, and dx indices coming from an
operator (delta, nabla, a 1-form r) are wedged in from the left.

Conventions fixed here and verified by the Hodge-identity tests:
  * delta = dx^i d/dy^i, delta_inv contracts with i(d/dx^k) from the left,
  * nabla delta + delta nabla = 0 (torsion-freeness),
  * the t-integral in delta_inv is the exact per-monomial division by
    (y-degree + form-degree), with degree-0 terms mapped to zero.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .poly import XPoly, as_fraction

# ---------------------------------------------------------------------------
# small index helpers

def vec_add(p, q):
    return tuple(a + b for a, b in zip(p, q))


def vec_sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def unit_vec(dim: int, i: int):
    """Multidegree e_i, 1-based i."""
    return tuple(1 if j == i - 1 else 0 for j in range(dim))


def prepend_index(i: int, S: tuple):
    """Sign and result of dx^i wedge dx^S, or None if i in S."""
    if i in S:
        return None
    before = sum(1 for s in S if s < i)
    sign = -1 if before % 2 else 1
    return sign, tuple(sorted(S + (i,)))


def merge_subsets(S: tuple, T: tuple):
    """Sign and result of dx^S wedge dx^T, or None on a repeated index."""
    if set(S) & set(T):
        return None
    sign = 1
    out = list(S)
    for t in T:
        after = sum(1 for s in out if s > t)
        if after % 2:
            sign = -sign
        out.append(t)
    return sign, tuple(sorted(out))


def contract_index(k: int, S: tuple):
    """Sign and result of i(d/dx^k) applied to dx^S from the left."""
    if k not in S:
        return None
    pos = S.index(k)
    sign = -1 if pos % 2 else 1
    return sign, S[:pos] + S[pos + 1:]


# ---------------------------------------------------------------------------
# Weyl elements


class WeylElement:
    """Section of the Weyl bundle: {(hbar_exp, y_multidegree): XPoly}."""

    __slots__ = ("dim", "order", "terms")

    def __init__(self, dim: int, order: int, terms=None):
        self.dim = dim
        self.order = order
        clean = {}
        if terms:
            for (k, p), c in terms.items():
                if c.is_zero():
                    continue
                if 2 * k + sum(p) <= order:
                    clean[(k, tuple(p))] = c
        self.terms = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, order: int) -> "WeylElement":
        return cls(dim, order)

    @classmethod
    def const(cls, dim: int, order: int, c) -> "WeylElement":
        return cls(dim, order, {(0, (0,) * dim): XPoly.const(dim, c)})

    @classmethod
    def from_xpoly(cls, poly: XPoly, order: int, hbar_exp: int = 0) -> "WeylElement":
        return cls(poly.nvars, order, {(hbar_exp, (0,) * poly.nvars): poly})

    @classmethod
    def y_monomial(cls, dim: int, order: int, p, c=1, hbar_exp: int = 0) -> "WeylElement":
        return cls(dim, order, {(hbar_exp, tuple(p)): XPoly.const(dim, c)})

    @classmethod
    def x_variable(cls, dim: int, order: int, i: int) -> "WeylElement":
        return cls.from_xpoly(XPoly.variable(dim, i), order)

    @classmethod
    def y_variable(cls, dim: int, order: int, i: int) -> "WeylElement":
        return cls.y_monomial(dim, order, unit_vec(dim, i))

    # -- ring structure -----------------------------------------------------

    def __add__(self, other: "WeylElement") -> "WeylElement":
        terms = dict(self.terms)
        for key, c in other.terms.items():
            s = terms.get(key)
            s = c if s is None else s + c
            if s.is_zero():
                terms.pop(key, None)
            else:
                terms[key] = s
        out = WeylElement(self.dim, self.order)
        out.terms = terms
        return out

    def __neg__(self) -> "WeylElement":
        out = WeylElement(self.dim, self.order)
        out.terms = {key: -c for key, c in self.terms.items()}
        return out

    def __sub__(self, other: "WeylElement") -> "WeylElement":
        return self + (-other)

    def scale(self, c) -> "WeylElement":
        c = as_fraction(c)
        out = WeylElement(self.dim, self.order)
        if c:
            out.terms = {key: v.scale(c) for key, v in self.terms.items()}
        return out

    def scale_xpoly(self, poly: XPoly) -> "WeylElement":
        return WeylElement(self.dim, self.order,
                           {key: v * poly for key, v in self.terms.items()})

    def hbar_shift(self, j: int) -> "WeylElement":
        """Multiply by hbar^j (j may be negative)."""
        return WeylElement(self.dim, self.order,
                           {(k + j, p): c for (k, p), c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def y_degree(self) -> int:
        return max((sum(p) for (_, p) in self.terms), default=-1)

    def is_y_free(self) -> bool:
        return all(not any(p) for (_, p) in self.terms)

    def min_hbar(self):
        return min((k for (k, _) in self.terms), default=None)

    def filtration_degree(self):
        """Min over stored terms of 2k + |p|; +inf for the zero element."""
        if not self.terms:
            return math.inf
        return min(2 * k + sum(p) for (k, p) in self.terms)

    def diff_y(self, i: int) -> "WeylElement":
        """d/dy^i, 1-based."""
        terms = {}
        for (k, p), c in self.terms.items():
            if p[i - 1]:
                p2 = p[: i - 1] + (p[i - 1] - 1,) + p[i:]
                add = c.scale(p[i - 1])
                prev = terms.get((k, p2))
                add = add if prev is None else prev + add
                if add.is_zero():
                    terms.pop((k, p2), None)
                else:
                    terms[(k, p2)] = add
        out = WeylElement(self.dim, self.order)
        out.terms = terms
        return out

    def diff_y_multi(self, alpha) -> "WeylElement":
        out = self
        for i, a in enumerate(alpha):
            for _ in range(a):
                out = out.diff_y(i + 1)
        return out

    def at_y_zero(self) -> "WeylElement":
        """Keep only the y-free part."""
        zero = (0,) * self.dim
        out = WeylElement(self.dim, self.order)
        out.terms = {key: c for key, c in self.terms.items() if key[1] == zero}
        return out

    def truncate(self, order: int) -> "WeylElement":
        return WeylElement(self.dim, order, self.terms)

    def truncate_x(self, max_deg) -> "WeylElement":
        if max_deg is None:
            return self
        return WeylElement(self.dim, self.order,
                           {key: c.truncate(max_deg) for key, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        return (isinstance(other, WeylElement) and self.dim == other.dim
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.dim, frozenset((k, p, c) for (k, p), c in self.terms.items())))

    def __repr__(self):
        from .io import weyl_text
        return weyl_text(self)


class FormWeyl:
    """Exterior-form-valued Weyl section: {dx_subset: WeylElement}."""

    __slots__ = ("dim", "order", "components")

    def __init__(self, dim: int, order: int, components=None):
        self.dim = dim
        self.order = order
        clean = {}
        if components:
            for S, w in components.items():
                if not w.is_zero():
                    clean[tuple(S)] = w
        self.components = clean

    @classmethod
    def zero(cls, dim: int, order: int) -> "FormWeyl":
        return cls(dim, order)

    @classmethod
    def from_weyl(cls, w: WeylElement) -> "FormWeyl":
        return cls(w.dim, w.order, {(): w})

    @classmethod
    def from_component(cls, S, w: WeylElement) -> "FormWeyl":
        return cls(w.dim, w.order, {tuple(S): w})

    def component(self, S) -> WeylElement:
        return self.components.get(tuple(S), WeylElement.zero(self.dim, self.order))

    def __add__(self, other: "FormWeyl") -> "FormWeyl":
        comps = dict(self.components)
        for S, w in other.components.items():
            s = comps.get(S)
            s = w if s is None else s + w
            if s.is_zero():
                comps.pop(S, None)
            else:
                comps[S] = s
        out = FormWeyl(self.dim, self.order)
        out.components = comps
        return out

    def __neg__(self) -> "FormWeyl":
        out = FormWeyl(self.dim, self.order)
        out.components = {S: -w for S, w in self.components.items()}
        return out

    def __sub__(self, other: "FormWeyl") -> "FormWeyl":
        return self + (-other)

    def scale(self, c) -> "FormWeyl":
        return FormWeyl(self.dim, self.order,
                        {S: w.scale(c) for S, w in self.components.items()})

    def hbar_shift(self, j: int) -> "FormWeyl":
        return FormWeyl(self.dim, self.order,
                        {S: w.hbar_shift(j) for S, w in self.components.items()})

    def is_zero(self) -> bool:
        return not self.components

    def exterior_degrees(self):
        return sorted({len(S) for S in self.components})

    def homogeneous(self, q: int) -> "FormWeyl":
        out = FormWeyl(self.dim, self.order)
        out.components = {S: w for S, w in self.components.items() if len(S) == q}
        return out

    def max_degree(self) -> int:
        return max((len(S) for S in self.components), default=0)

    def filtration_degree(self):
        return min((w.filtration_degree() for w in self.components.values()),
                   default=math.inf)

    def truncate(self, order: int) -> "FormWeyl":
        return FormWeyl(self.dim, order,
                        {S: w.truncate(order) for S, w in self.components.items()})

    def __eq__(self, other) -> bool:
        return (isinstance(other, FormWeyl) and self.dim == other.dim
                and self.components == other.components)

    def __repr__(self):
        from .io import form_text
        return form_text(self)


def as_form(a) -> FormWeyl:
    return a if isinstance(a, FormWeyl) else FormWeyl.from_weyl(a)


# ---------------------------------------------------------------------------
# symplectic chart


class SymplecticChart:
    """Polynomial symplectic data: omega_{ij}, omega^{ij} and Christoffel
    symbols Gamma^j_{ik} on a 2n-dimensional coordinate chart.

    omega_upper must be the exact inverse of omega_lower; this is validated
    rather than computed (a polynomial matrix need not have a polynomial
    inverse).  christoffel maps (j, i, k) -> XPoly and must be symmetric in
    (i, k); all indices 1-based.
    """

    __slots__ = ("dim", "omega_lower", "omega_upper", "christoffel", "x_cap")

    def __init__(self, dim, omega_lower, omega_upper, christoffel=None, x_cap=None):
        self.dim = dim
        self.omega_lower = omega_lower
        self.omega_upper = omega_upper
        self.christoffel = dict(christoffel or {})
        self.x_cap = x_cap

    @classmethod
    def standard_flat(cls, dim: int, order_unused=None) -> "SymplecticChart":
        """Flat chart with the block-constant symplectic form
        omega^{2i-1,2i} = 1 and zero connection."""
        n = dim
        lower = [[XPoly.zero(n) for _ in range(n)] for _ in range(n)]
        upper = [[XPoly.zero(n) for _ in range(n)] for _ in range(n)]
        for b in range(n // 2):
            i, j = 2 * b, 2 * b + 1
            upper[i][j] = XPoly.const(n, 1)
            upper[j][i] = XPoly.const(n, -1)
            lower[i][j] = XPoly.const(n, -1)
            lower[j][i] = XPoly.const(n, 1)
        return cls(n, lower, upper, {})

    @classmethod
    def from_constant(cls, theta, christoffel=None, x_cap=None) -> "SymplecticChart":
        """Chart with a constant antisymmetric matrix theta (Fractions) as
        omega^{ij}; omega_{ij} is its exact inverse."""
        n = len(theta)
        upper = [[XPoly.const(n, theta[i][j]) if theta[i][j] else XPoly.zero(n)
                  for j in range(n)] for i in range(n)]
        low = _invert_constant_antisymmetric(theta)
        lower = [[XPoly.const(n, low[i][j]) if low[i][j] else XPoly.zero(n)
                  for j in range(n)] for i in range(n)]
        return cls(n, lower, upper, christoffel or {}, x_cap)

    def gamma(self, j: int, i: int, k: int) -> XPoly:
        return self.christoffel.get((j, i, k), XPoly.zero(self.dim))

    def is_flat_constant(self) -> bool:
        return not self.christoffel and all(
            self.omega_upper[i][j].is_constant()
            for i in range(self.dim) for j in range(self.dim))

    def validate(self):
        """Raise ChartValidationError with index-level diagnostics on any
        violated invariant."""
        n = self.dim
        if n < 2 or n % 2:
            raise ChartValidationError(f"dimension must be even and >= 2, got {n}")
        for i in range(n):
            for j in range(n):
                if self.omega_lower[i][j] != -self.omega_lower[j][i]:
                    raise ChartValidationError(
                        f"omega_lower not antisymmetric at ({i + 1},{j + 1})")
                if self.omega_upper[i][j] != -self.omega_upper[j][i]:
                    raise ChartValidationError(
                        f"omega_upper not antisymmetric at ({i + 1},{j + 1})")
        for i in range(n):
            for j in range(n):
                acc = XPoly.zero(n)
                for k in range(n):
                    acc = acc + self.omega_upper[i][k] * self.omega_lower[k][j]
                want = XPoly.const(n, 1) if i == j else XPoly.zero(n)
                if acc != want:
                    raise ChartValidationError(
                        f"omega^ik omega_kj != delta at ({i + 1},{j + 1})")
        for (j, i, k), g in self.christoffel.items():
            if self.gamma(j, k, i) != g:
                raise ChartValidationError(
                    f"torsion: Gamma^{j}_{{{i},{k}}} != Gamma^{j}_{{{k},{i}}}")
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                for k in range(1, n + 1):
                    nab = self.omega_lower[j - 1][k - 1].diff(i)
                    for l in range(1, n + 1):
                        nab = nab - self.gamma(l, i, j) * self.omega_lower[l - 1][k - 1]
                        nab = nab - self.gamma(l, i, k) * self.omega_lower[j - 1][l - 1]
                    if not nab.is_zero():
                        raise ChartValidationError(
                            f"nabla_{i} omega_{{{j},{k}}} != 0")


class ChartValidationError(ValueError):
    pass


def _invert_constant_antisymmetric(theta):
    """Exact inverse of a constant antisymmetric matrix, by Gauss-Jordan."""
    n = len(theta)
    a = [[Fraction(theta[i][j]) for j in range(n)] for i in range(n)]
    inv = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
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
    return inv


def omega_matrix(chart_or_theta, dim: int):
    """Normalize a chart, an XPoly matrix, or a constant matrix to an XPoly
    matrix omega^{ij}."""
    if isinstance(chart_or_theta, SymplecticChart):
        return chart_or_theta.omega_upper
    theta = chart_or_theta
    if theta and isinstance(theta[0][0], XPoly):
        return theta
    return [[XPoly.const(dim, theta[i][j]) if theta[i][j] else XPoly.zero(dim)
             for j in range(dim)] for i in range(dim)]


# ---------------------------------------------------------------------------
# the Moyal-type fiberwise product


def _check_antisymmetric(omega, dim):
    for i in range(dim):
        for j in range(dim):
            if omega[i][j] != -omega[j][i]:
                raise ValueError("Poisson tensor must be antisymmetric")


def _moyal_weyl(a: WeylElement, b: WeylElement, omega, x_cap=None) -> WeylElement:
    """Fiberwise product of plain Weyl sections.

    exp((hbar/2) omega^{ij} d/dy^i d/dz^j) a(y) b(z) |_{z=y}, expanded as a
    terminating series: each step consumes one y from each factor and adds
    one hbar, so the filtration weight of a contribution is the sum of the
    weights of its parents.
    """
    dim, order = a.dim, a.order
    # state: {(hbar_exp, p_a, p_b): XPoly}
    state = {}
    for (k1, p1), c1 in a.terms.items():
        w1 = 2 * k1 + sum(p1)
        for (k2, p2), c2 in b.terms.items():
            if w1 + 2 * k2 + sum(p2) > order:
                continue
            key = (k1 + k2, p1, p2)
            c = c1 * c2
            prev = state.get(key)
            c = c if prev is None else prev + c
            if c.is_zero():
                state.pop(key, None)
            else:
                state[key] = c
    out_terms = {}
    t = 0
    while state:
        for (k, pa, pb), c in state.items():
            key = (k, vec_add(pa, pb))
            prev = out_terms.get(key)
            c2 = c if prev is None else prev + c
            if c2.is_zero():
                out_terms.pop(key, None)
            else:
                out_terms[key] = c2
        t += 1
        new_state = {}
        for (k, pa, pb), c in state.items():
            for i in range(dim):
                if not pa[i]:
                    continue
                for j in range(dim):
                    if not pb[j]:
                        continue
                    om = omega[i][j]
                    if om.is_zero():
                        continue
                    coeff = Fraction(pa[i] * pb[j], 2 * t)
                    add = (om * c).scale(coeff)
                    if x_cap is not None:
                        add = add.truncate(x_cap)
                    if add.is_zero():
                        continue
                    key = (k + 1,
                           pa[:i] + (pa[i] - 1,) + pa[i + 1:],
                           pb[:j] + (pb[j] - 1,) + pb[j + 1:])
                    prev = new_state.get(key)
                    add = add if prev is None else prev + add
                    if add.is_zero():
                        new_state.pop(key, None)
                    else:
                        new_state[key] = add
        state = new_state
    return WeylElement(dim, order, out_terms)


def moyal_product(a, b, chart_or_theta, x_cap=None):
    """Product of Weyl sections or form-valued Weyl sections.

    For forms, coefficients multiply fiberwise and dx blocks are wedged in
    factor order: (u dx^S) o (v dx^T) = (u o v) dx^S dx^T.
    """
    if isinstance(a, WeylElement) and isinstance(b, WeylElement):
        if a.dim != b.dim or a.order != b.order:
            raise ValueError("operands must share dim and order")
        omega = omega_matrix(chart_or_theta, a.dim)
        _check_antisymmetric(omega, a.dim)
        if x_cap is None and isinstance(chart_or_theta, SymplecticChart):
            x_cap = chart_or_theta.x_cap
        return _moyal_weyl(a, b, omega, x_cap)
    fa, fb = as_form(a), as_form(b)
    if fa.dim != fb.dim or fa.order != fb.order:
        raise ValueError("operands must share dim and order")
    omega = omega_matrix(chart_or_theta, fa.dim)
    _check_antisymmetric(omega, fa.dim)
    if x_cap is None and isinstance(chart_or_theta, SymplecticChart):
        x_cap = chart_or_theta.x_cap
    out = FormWeyl.zero(fa.dim, fa.order)
    for S, u in fa.components.items():
        for T, v in fb.components.items():
            merged = merge_subsets(S, T)
            if merged is None:
                continue
            sign, ST = merged
            w = _moyal_weyl(u, v, omega, x_cap)
            if sign < 0:
                w = -w
            if not w.is_zero():
                out = out + FormWeyl.from_component(ST, w)
    return out


def graded_commutator(a, b, chart_or_theta, x_cap=None) -> FormWeyl:
    """[a, b] = a o b - (-)^{q_a q_b} b o a, componentwise in exterior degree."""
    fa, fb = as_form(a), as_form(b)
    out = moyal_product(fa, fb, chart_or_theta, x_cap)
    for qa in fa.exterior_degrees():
        for qb in fb.exterior_degrees():
            term = moyal_product(fb.homogeneous(qb), fa.homogeneous(qa),
                                 chart_or_theta, x_cap)
            out = out - term if (qa * qb) % 2 == 0 else out + term
    return out


def commutator_over_hbar(a, b, chart_or_theta, x_cap=None) -> FormWeyl:
    """(1/hbar)[a, b], exact at the operands' order: the product is taken
    with two filtration levels of headroom so that the hbar division does
    not lose boundary terms."""
    fa, fb = as_form(a), as_form(b)
    work = fa.order + 2
    out = graded_commutator(fa.truncate(work), fb.truncate(work),
                            chart_or_theta, x_cap)
    return out.hbar_shift(-1).truncate(fa.order)


def product_over_hbar(a, b, chart_or_theta, x_cap=None) -> FormWeyl:
    """(1/hbar)(a o b), exact at the operands' order."""
    fa, fb = as_form(a), as_form(b)
    work = fa.order + 2
    out = moyal_product(fa.truncate(work), fb.truncate(work),
                        chart_or_theta, x_cap)
    return out.hbar_shift(-1).truncate(fa.order)


# ---------------------------------------------------------------------------
# the operators delta, delta_inv, sigma, nabla


def filtration_degree(a):
    return a.filtration_degree()


def delta(a) -> FormWeyl:
    """dx^i d/dy^i, raising exterior degree by one."""
    f = as_form(a)
    out = FormWeyl.zero(f.dim, f.order)
    comps = {}
    for S, w in f.components.items():
        for i in range(1, f.dim + 1):
            ins = prepend_index(i, S)
            if ins is None:
                continue
            sign, S2 = ins
            dw = w.diff_y(i)
            if dw.is_zero():
                continue
            if sign < 0:
                dw = -dw
            prev = comps.get(S2)
            dw = dw if prev is None else prev + dw
            comps[S2] = dw
    out = FormWeyl(f.dim, f.order, comps)
    return out


def delta_inv(a) -> FormWeyl:
    """y^k i(d/dx^k) with the exact per-monomial t-integral: a term of
    y-degree p and exterior degree q picks up the factor 1/(p+q); terms with
    p+q = 0 go to zero."""
    f = as_form(a)
    comps = {}
    for S, w in f.components.items():
        if not S:
            continue
        for (k, p), c in w.terms.items():
            m = sum(p) + len(S)
            for idx in S:
                con = contract_index(idx, S)
                sign, S2 = con
                p2 = vec_add(p, unit_vec(f.dim, idx))
                coeff = Fraction(sign, m)
                add = c.scale(coeff)
                comp = comps.setdefault(S2, {})
                prev = comp.get((k, p2))
                add = add if prev is None else prev + add
                if add.is_zero():
                    comp.pop((k, p2), None)
                else:
                    comp[(k, p2)] = add
    return FormWeyl(f.dim, f.order,
                    {S: WeylElement(f.dim, f.order, terms)
                     for S, terms in comps.items()})


def sigma_project(a) -> WeylElement:
    """Evaluate at y = 0, dx = 0; the result is an hbar-Laurent polynomial
    in x (a y-free WeylElement)."""
    f = as_form(a)
    return f.component(()).at_y_zero()


def nabla(a, chart: SymplecticChart) -> FormWeyl:
    """dx^i d/dx^i - dx^i Gamma^j_{ik} y^k d/dy^j."""
    f = as_form(a)
    comps = {}

    def _acc(S2, key, add):
        comp = comps.setdefault(S2, {})
        prev = comp.get(key)
        add = add if prev is None else prev + add
        if add.is_zero():
            comp.pop(key, None)
        else:
            comp[key] = add

    for S, w in f.components.items():
        for i in range(1, f.dim + 1):
            ins = prepend_index(i, S)
            if ins is None:
                continue
            sign, S2 = ins
            for (k, p), c in w.terms.items():
                dc = c.diff(i)
                if chart.x_cap is not None:
                    dc = dc.truncate(chart.x_cap)
                if not dc.is_zero():
                    _acc(S2, (k, p), dc.scale(sign))
            for (j, ii, kk), g in chart.christoffel.items():
                if ii != i:
                    continue
                for (k, p), c in w.terms.items():
                    if not p[j - 1]:
                        continue
                    p2 = vec_add(vec_sub(p, unit_vec(f.dim, j)), unit_vec(f.dim, kk))
                    add = (g * c).scale(Fraction(-sign * p[j - 1]))
                    if chart.x_cap is not None:
                        add = add.truncate(chart.x_cap)
                    if not add.is_zero():
                        _acc(S2, (k, p2), add)
    return FormWeyl(f.dim, f.order,
                    {S: WeylElement(f.dim, f.order, terms)
                     for S, terms in comps.items()})


def riemann_tensor(chart: SymplecticChart):
    """(R_{ij})^m_l = d_j Gamma^m_{il} - d_i Gamma^m_{jl}
    + Gamma^m_{jp} Gamma^p_{il} - Gamma^m_{ip} Gamma^p_{jl};
    returns {(i, j, m, l): XPoly} for i < j (antisymmetric in i, j).

    Sign convention chosen so that nabla^2 a = (1/hbar)[R, a] holds with
    R = -1/4 dx^i dx^j omega_{km} (R_{ij})^m_l y^k y^l.
    """
    n = chart.dim
    out = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            for m in range(1, n + 1):
                for l in range(1, n + 1):
                    r = chart.gamma(m, i, l).diff(j) - chart.gamma(m, j, l).diff(i)
                    for p in range(1, n + 1):
                        r = r + chart.gamma(m, j, p) * chart.gamma(p, i, l)
                        r = r - chart.gamma(m, i, p) * chart.gamma(p, j, l)
                    if not r.is_zero():
                        out[(i, j, m, l)] = r
    return out


def curvature_R(chart: SymplecticChart, order: int) -> FormWeyl:
    """R = -1/4 dx^i dx^j omega_{km} (R_{ij})^m_l y^k y^l, the Weyl curvature
    of the connection; satisfies nabla^2 a = (1/hbar)[R, a]."""
    n = chart.dim
    riem = riemann_tensor(chart)
    comps = {}
    for (i, j, m, l), r in riem.items():
        for k in range(1, n + 1):
            om = chart.omega_lower[k - 1][m - 1]
            if om.is_zero():
                continue
            # i < j contributes twice (dx^i dx^j and dx^j dx^i), so -1/4 -> -1/2
            c = (om * r).scale(Fraction(-1, 2))
            if c.is_zero():
                continue
            p = vec_add(unit_vec(n, k), unit_vec(n, l))
            comp = comps.setdefault((i, j), {})
            prev = comp.get((0, p))
            c = c if prev is None else prev + c
            if c.is_zero():
                comp.pop((0, p), None)
            else:
                comp[(0, p)] = c
    return FormWeyl(n, order,
                    {S: WeylElement(n, order, terms) for S, terms in comps.items()})


def fedosov_D(a, chart: SymplecticChart, r: FormWeyl) -> FormWeyl:
    """D a = nabla a - delta a + (1/hbar)[r, a] for r in Omega^1 of filtration
    weight >= 3.  r solved at a higher order is truncated to a's order."""
    if r.exterior_degrees() not in ([], [1]):
        raise ValueError("r must be a 1-form")
    if not r.is_zero() and r.filtration_degree() < 3:
        raise ValueError("r must have filtration weight >= 3")
    f = as_form(a)
    out = nabla(f, chart) - delta(f)
    if not r.is_zero():
        # r two levels deeper than a's order participates exactly
        comm = commutator_over_hbar(r.truncate(f.order + 2),
                                    f.truncate(f.order + 2), chart)
        out = out + comm.truncate(f.order)
    return out


def weyl_curvature_class(chart: SymplecticChart, r: FormWeyl, order: int) -> FormWeyl:
    """R - delta r + nabla r + (1/hbar) r o r; central iff y-free."""
    out = curvature_R(chart, order) - delta(r).truncate(order) \
        + nabla(r, chart).truncate(order)
    if not r.is_zero():
        out = out + product_over_hbar(r, r, chart).truncate(order)
    return out


def is_central(a) -> bool:
    """A form-valued section is central iff it has no y-dependence."""
    f = as_form(a)
    return all(w.is_y_free() for w in f.components.values())
