"""Exact coefficient arithmetic: multivariate polynomials over Q and Laurent
polynomials in hbar.

Both types are sparse dictionaries with Fraction coefficients.  Instances are
treated as immutable after construction; every operation returns a new,
normalized object (no stored zero coefficients).
"""

from __future__ import annotations

from fractions import Fraction

Exps = tuple  # length-(2n) tuple of non-negative int exponents


def as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot coerce {c!r} to an exact rational")


class XPoly:
    """Polynomial in the base coordinates x^1..x^{2n} with rational coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        clean = {}
        if terms:
            for exps, c in terms.items():
                c = as_fraction(c)
                if c:
                    if len(exps) != nvars:
                        raise ValueError("exponent vector has wrong length")
                    clean[tuple(exps)] = c
        self.terms = clean

    @classmethod
    def zero(cls, nvars: int) -> "XPoly":
        return cls(nvars)

    @classmethod
    def const(cls, nvars: int, c) -> "XPoly":
        return cls(nvars, {(0,) * nvars: as_fraction(c)})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "XPoly":
        """x^i with 1-based index i."""
        e = [0] * nvars
        e[i - 1] = 1
        return cls(nvars, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, nvars: int, exps, c=1) -> "XPoly":
        return cls(nvars, {tuple(exps): as_fraction(c)})

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def __add__(self, other: "XPoly") -> "XPoly":
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e, Fraction(0)) + c
            if s:
                terms[e] = s
            else:
                terms.pop(e, None)
        out = XPoly(self.nvars)
        out.terms = terms
        return out

    def __neg__(self) -> "XPoly":
        out = XPoly(self.nvars)
        out.terms = {e: -c for e, c in self.terms.items()}
        return out

    def __sub__(self, other: "XPoly") -> "XPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, XPoly):
            terms = {}
            for e1, c1 in self.terms.items():
                for e2, c2 in other.terms.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    s = terms.get(e, Fraction(0)) + c1 * c2
                    if s:
                        terms[e] = s
                    else:
                        terms.pop(e, None)
            out = XPoly(self.nvars)
            out.terms = terms
            return out
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c) -> "XPoly":
        c = as_fraction(c)
        out = XPoly(self.nvars)
        if c:
            out.terms = {e: c * v for e, v in self.terms.items()}
        return out

    def diff(self, i: int) -> "XPoly":
        """d/dx^i with 1-based index i."""
        terms = {}
        for e, c in self.terms.items():
            k = e[i - 1]
            if k:
                e2 = e[: i - 1] + (k - 1,) + e[i:]
                s = terms.get(e2, Fraction(0)) + c * k
                if s:
                    terms[e2] = s
                else:
                    terms.pop(e2, None)
        out = XPoly(self.nvars)
        out.terms = terms
        return out

    def truncate(self, max_deg) -> "XPoly":
        if max_deg is None:
            return self
        out = XPoly(self.nvars)
        out.terms = {e: c for e, c in self.terms.items() if sum(e) <= max_deg}
        return out

    def substitute_linear(self, matrix) -> "XPoly":
        """Substitute x^i -> sum_j matrix[i][j] x^j (matrix of Fractions)."""
        n = self.nvars
        out = XPoly.zero(n)
        for e, c in self.terms.items():
            term = XPoly.const(n, c)
            for i in range(n):
                if e[i]:
                    lin = XPoly(n, {tuple(1 if j == k else 0 for j in range(n)): matrix[i][k]
                                    for k in range(n) if matrix[i][k]})
                    for _ in range(e[i]):
                        term = term * lin
            out = out + term
        return out

    def eval_rational(self, point) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for xi, ei in zip(point, e):
                v *= Fraction(xi) ** ei
            total += v
        return total

    def __eq__(self, other) -> bool:
        return isinstance(other, XPoly) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for e in sorted(self.terms):
            c = self.terms[e]
            mono = "*".join(f"x{i+1}" + (f"^{k}" if k > 1 else "")
                            for i, k in enumerate(e) if k)
            bits.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(bits)


class HbarScalar:
    """Laurent polynomial in hbar over Q; exponents bounded below.

    Filtration weight of hbar^k is 2k, so truncation at order N keeps k <= N//2.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for k, c in terms.items():
                c = as_fraction(c)
                if c:
                    clean[int(k)] = c
        self.terms = clean

    @classmethod
    def const(cls, c) -> "HbarScalar":
        return cls({0: as_fraction(c)})

    @classmethod
    def hbar(cls, k: int = 1, c=1) -> "HbarScalar":
        return cls({k: as_fraction(c)})

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def min_exp(self):
        return min(self.terms) if self.terms else None

    def __add__(self, other: "HbarScalar") -> "HbarScalar":
        terms = dict(self.terms)
        for k, c in other.terms.items():
            s = terms.get(k, Fraction(0)) + c
            if s:
                terms[k] = s
            else:
                terms.pop(k, None)
        return HbarScalar(terms)

    def __neg__(self) -> "HbarScalar":
        return HbarScalar({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "HbarScalar") -> "HbarScalar":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HbarScalar):
            terms = {}
            for k1, c1 in self.terms.items():
                for k2, c2 in other.terms.items():
                    k = k1 + k2
                    s = terms.get(k, Fraction(0)) + c1 * c2
                    if s:
                        terms[k] = s
                    else:
                        terms.pop(k, None)
            return HbarScalar(terms)
        return HbarScalar({k: c * as_fraction(other) for k, c in self.terms.items()})

    __rmul__ = __mul__

    def truncate(self, order: int) -> "HbarScalar":
        return HbarScalar({k: c for k, c in self.terms.items() if 2 * k <= order})

    def __eq__(self, other) -> bool:
        return isinstance(other, HbarScalar) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for k in sorted(self.terms):
            c = self.terms[k]
            if k == 0:
                bits.append(f"{c}")
            elif k == 1:
                bits.append(f"{c}*hbar")
            else:
                bits.append(f"{c}*hbar^{k}")
        return " + ".join(bits)
