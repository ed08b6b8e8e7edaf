"""Exact-coefficient polynomials for the zeta and graph-polynomial work.

Coefficients are Python ints or Fractions, so identities like the
Hashimoto limit and the deletion-contraction golden values are checked
without floating point.  ``Poly`` is univariate, ``Poly2`` bivariate with
a sparse term map.  Canonical text form: terms ascending by degree,
coefficient 1 suppressed, unicode superscripts ("1+2β+16β⁴").
"""

from __future__ import annotations

from fractions import Fraction

_SUPERSCRIPTS = {"0": "⁰", "1": "¹", "2": "²", "3": "³",
                 "4": "⁴", "5": "⁵", "6": "⁶", "7": "⁷",
                 "8": "⁸", "9": "⁹"}


def _power_text(sym, k):
    if k == 0:
        return ""
    if k == 1:
        return sym
    return sym + "".join(_SUPERSCRIPTS[c] for c in str(k))


def _coef_text(c, has_symbol, first):
    sign = "-" if c < 0 else ("" if first else "+")
    mag = -c if c < 0 else c
    if has_symbol and mag == 1:
        return sign
    return sign + str(mag)


class Poly:
    """Univariate polynomial with exact coefficients."""

    def __init__(self, coeffs=()):
        cs = list(coeffs)
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = cs

    @classmethod
    def constant(cls, c):
        return cls([c])

    @classmethod
    def x(cls):
        return cls([0, 1])

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else -1

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly([other])
        return isinstance(other, Poly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly([other])
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + [0] * (n - len(self.coeffs))
        b = other.coeffs + [0] * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly([other])
        return self + (-other)

    def __rsub__(self, other):
        return Poly([other]) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly([c * other for c in self.coeffs])
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1) \
            if self.coeffs and other.coeffs else []
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Poly([1])
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __call__(self, x):
        out = 0
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def coefficient(self, k):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0

    def divide_exact(self, other):
        """Exact polynomial division; raises if a remainder is left."""
        if not other:
            raise ZeroDivisionError
        rem = [Fraction(c) for c in self.coeffs]
        q = [Fraction(0)] * max(len(rem) - len(other.coeffs) + 1, 0)
        d = other.coeffs
        while len(rem) >= len(d) and any(rem):
            while rem and rem[-1] == 0:
                rem.pop()
            if len(rem) < len(d):
                break
            c = rem[-1] / d[-1]
            k = len(rem) - len(d)
            q[k] = c
            for i, dc in enumerate(d):
                rem[k + i] -= c * dc
        if any(rem):
            raise ValueError("non-zero remainder in exact division")
        return Poly([int(c) if c.denominator == 1 else c for c in q])

    def text(self, sym="β"):
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            parts.append(_coef_text(c, k > 0, not parts) + _power_text(sym, k))
        return "".join(parts)

    def __repr__(self):
        return "Poly(%s)" % self.text("x")


class Poly2:
    """Bivariate polynomial; sparse dict {(i, j): coeff} for x^i y^j."""

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for key, c in terms.items():
                if c != 0:
                    self.terms[key] = self.terms.get(key, 0) + c
            self.terms = {k: c for k, c in self.terms.items() if c != 0}

    @classmethod
    def constant(cls, c):
        return cls({(0, 0): c})

    @classmethod
    def x(cls):
        return cls({(1, 0): 1})

    @classmethod
    def y(cls):
        return cls({(0, 1): 1})

    @classmethod
    def from_poly_in_y(cls, p, x_power=0):
        return cls({(x_power, j): c for j, c in enumerate(p.coeffs)})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly2.constant(other)
        return isinstance(other, Poly2) and self.terms == other.terms

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly2.constant(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return Poly2(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly2({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly2.constant(other)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly2({k: c * other for k, c in self.terms.items()})
        out = {}
        for (i1, j1), c1 in self.terms.items():
            for (i2, j2), c2 in other.terms.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
        return Poly2(out)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Poly2.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __call__(self, x, y):
        return sum(c * x ** i * y ** j for (i, j), c in self.terms.items())

    def coefficient(self, i, j):
        return self.terms.get((i, j), 0)

    def substitute_y_squared(self, value):
        """Replace y^2 by a constant; requires only even powers of y."""
        out = {}
        for (i, j), c in self.terms.items():
            if j % 2:
                raise ValueError("odd power of second variable present")
            out[i] = out.get(i, 0) + c * value ** (j // 2)
        return Poly([out.get(i, 0) for i in range(max(out, default=0) + 1)])

    def as_poly_in_x(self):
        """Coefficients in x as Poly objects in y."""
        deg = max((i for (i, _) in self.terms), default=0)
        out = []
        for i in range(deg + 1):
            ys = {j: c for (xi, j), c in self.terms.items() if xi == i}
            out.append(Poly([ys.get(j, 0)
                             for j in range(max(ys, default=0) + 1)]))
        return out

    def text(self, sym_x="β", sym_y="γ"):
        if not self.terms:
            return "0"
        keys = sorted(self.terms, key=lambda k: (k[0] + k[1], k[0], k[1]))
        parts = []
        for (i, j) in keys:
            c = self.terms[(i, j)]
            body = _power_text(sym_x, i) + _power_text(sym_y, j)
            parts.append(_coef_text(c, bool(body), not parts) + body)
        return "".join(parts)

    def __repr__(self):
        return "Poly2(%s)" % self.text("x", "y")


def char_poly_det_i_minus_u_m(matrix):
    """det(I - u*M) as an exact Poly in u, for an integer matrix M.

    Faddeev-LeVerrier on Python ints: p(s) = det(sI - M) = sum a_k s^k is
    monic with integer coefficients, and det(I - uM) = sum a_k u^{n-k}.
    """
    n = len(matrix)
    if n == 0:
        return Poly([1])
    m_rows = [[int(x) for x in row] for row in matrix]

    def matmul(a, b):
        return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
                for i in range(n)]

    ident = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    coeffs = [1]  # a_{n} .. a_0, a_n = 1
    mk = [row[:] for row in ident]
    for k in range(1, n + 1):
        mk = matmul(m_rows, mk)
        trace = sum(mk[i][i] for i in range(n))
        assert trace % k == 0
        c = -trace // k
        coeffs.append(c)
        for i in range(n):
            mk[i][i] += c
    # coeffs[k] = a_{n-k}; det(I - uM) = sum_k a_{n-k} u^k
    return Poly(coeffs)
