"""Coefficient fields for q-expansions.

Three rings share one small interface (zero/one/from_rational/is_zero/
coeff_vector/convert): the rationals (elements are plain Fractions), a
number field Q[x]/(m) with elements on the power basis, and a quadratic
tower R[b]/(b^2 - t*b + n) used for p-stabilization.  The tower never
tests irreducibility; division is by adjugate and fails loudly on a
zero-divisor norm, which the pipeline never produces.
"""

from fractions import Fraction


def _poly_trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _poly_mul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    out[i + j] += x * y
    return _poly_trim(out)


def _poly_divmod(a, b):
    a = list(a)
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    inv = 1 / b[-1]
    for i in range(len(a) - len(b), -1, -1):
        f = a[i + len(b) - 1] * inv
        q[i] = f
        if f:
            for j, y in enumerate(b):
                a[i + j] -= f * y
    return _poly_trim(q), _poly_trim(a)


def _poly_xgcd(a, b):
    """(g, s, t) with s*a + t*b = g over Q[x]."""
    r0, r1 = list(a), list(b)
    s0, s1 = [Fraction(1)], []
    t0, t1 = [], [Fraction(1)]
    while r1:
        q, r = _poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, _poly_trim([x - y for x, y in _zip_pad(s0, _poly_mul(q, s1))])
        t0, t1 = t1, _poly_trim([x - y for x, y in _zip_pad(t0, _poly_mul(q, t1))])
    return r0, s0, t0


def _zip_pad(a, b):
    n = max(len(a), len(b))
    a = list(a) + [Fraction(0)] * (n - len(a))
    b = list(b) + [Fraction(0)] * (n - len(b))
    return zip(a, b)


class RationalRing:
    """The field Q; elements are fractions.Fraction."""

    degree = 1
    is_rational_ring = True

    def zero(self):
        return Fraction(0)

    def one(self):
        return Fraction(1)

    def from_rational(self, r):
        return Fraction(r)

    def convert(self, x):
        if isinstance(x, (int, Fraction)):
            return Fraction(x)
        raise TypeError("cannot convert %r into Q" % (x,))

    def is_zero(self, x):
        return x == 0

    def coeff_vector(self, x):
        return [Fraction(x)]

    def minpoly_coeffs(self):
        return [Fraction(0), Fraction(1)]

    def __eq__(self, other):
        return isinstance(other, RationalRing)

    def __hash__(self):
        return hash("QQ")

    def __repr__(self):
        return "QQ"


QQ = RationalRing()


class NFElt:
    __slots__ = ("field", "coeffs")

    def __init__(self, field, coeffs):
        self.field = field
        c = list(coeffs)
        assert len(c) <= field.degree
        c += [Fraction(0)] * (field.degree - len(c))
        self.coeffs = tuple(Fraction(x) for x in c)

    def _coerce(self, other):
        if isinstance(other, NFElt):
            if other.field is not self.field and other.field != self.field:
                raise TypeError("mixed number fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.from_rational(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return NFElt(self.field, [a + b for a, b in zip(self.coeffs, o.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return NFElt(self.field, [-a for a in self.coeffs])

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return NFElt(self.field, [a - b for a, b in zip(self.coeffs, o.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.field._mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * self.field._inv(o)

    def __rtruediv__(self, other):
        return self.field.from_rational(other) / self

    def __pow__(self, n):
        out = self.field.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def __repr__(self):
        return "NFElt%r" % (list(self.coeffs),)


class NumberField:
    """Q[x]/(m(x)) for a monic irreducible m, elements on the power basis."""

    is_rational_ring = False

    def __init__(self, minpoly):
        m = [Fraction(c) for c in minpoly]
        assert len(m) >= 2 and m[-1] == 1, "minpoly must be monic of degree >= 1"
        self.minpoly = tuple(m)
        self.degree = len(m) - 1
        # reductions of x^k, k = degree .. 2*degree-2, as vectors of length degree
        r0 = [-c for c in m[:-1]]
        red = [tuple(r0)]
        cur = list(r0)
        for _ in range(self.degree - 2):
            shifted = [Fraction(0)] + cur  # multiply by x
            top = shifted[self.degree]
            cur = shifted[: self.degree]
            if top:
                cur = [a + top * b for a, b in zip(cur, r0)]
            red.append(tuple(cur))
        self._xk = red

    def zero(self):
        return NFElt(self, [])

    def one(self):
        return NFElt(self, [Fraction(1)])

    def gen(self):
        return NFElt(self, [Fraction(0), Fraction(1)] if self.degree >= 2 else [Fraction(1)])

    def from_rational(self, r):
        return NFElt(self, [Fraction(r)])

    def convert(self, x):
        if isinstance(x, NFElt) and x.field == self:
            return x
        if isinstance(x, (int, Fraction)):
            return self.from_rational(x)
        raise TypeError("cannot convert %r into %r" % (x, self))

    def is_zero(self, x):
        return x.is_zero()

    def coeff_vector(self, x):
        return list(x.coeffs)

    def minpoly_coeffs(self):
        return list(self.minpoly)

    def _mul(self, a, b):
        prod = [Fraction(0)] * (2 * self.degree - 1)
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        prod[i + j] += x * y
        # reduce degrees >= self.degree using the precomputed table
        for k in range(2 * self.degree - 2, self.degree - 1, -1):
            c = prod[k]
            if c:
                prod[k] = Fraction(0)
                for i, r in enumerate(self._xk[k - self.degree]):
                    prod[i] += c * r
        return NFElt(self, prod[: self.degree])

    def _inv(self, a):
        if a.is_zero():
            raise ZeroDivisionError("division by zero in number field")
        g, s, _ = _poly_xgcd(_poly_trim(a.coeffs), list(self.minpoly))
        assert len(g) == 1, "minpoly not irreducible or gcd error"
        inv = [c / g[0] for c in s]
        return NFElt(self, inv + [Fraction(0)] * (self.degree - len(inv)))

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.minpoly == other.minpoly

    def __hash__(self):
        return hash(self.minpoly)

    def __repr__(self):
        return "NumberField(deg %d)" % self.degree


class RQElt:
    """u + v*b in the tower R[b]/(b^2 - t*b + n)."""

    __slots__ = ("ring", "u", "v")

    def __init__(self, ring, u, v):
        self.ring = ring
        self.u = u
        self.v = v

    def _coerce(self, other):
        if isinstance(other, RQElt):
            if other.ring != self.ring:
                raise TypeError("mixed towers")
            return other
        return RQElt(self.ring, self.ring.base.convert(other), self.ring._bzero)

    def __add__(self, other):
        o = self._coerce(other)
        return RQElt(self.ring, self.u + o.u, self.v + o.v)

    __radd__ = __add__

    def __neg__(self):
        return RQElt(self.ring, -self.u, -self.v)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        t, n = self.ring.t, self.ring.n
        u1, v1, u2, v2 = self.u, self.v, o.u, o.v
        vv = v1 * v2
        return RQElt(self.ring, u1 * u2 - n * vv, u1 * v2 + v1 * u2 + t * vv)

    __rmul__ = __mul__

    def norm_to_base(self):
        t, n = self.ring.t, self.ring.n
        return self.u * self.u + t * self.u * self.v + n * self.v * self.v

    def __truediv__(self, other):
        o = self._coerce(other)
        nm = o.norm_to_base()
        if self.ring.base.is_zero(nm):
            raise ZeroDivisionError("zero or zero-divisor denominator in tower")
        # conjugate root is t - b: (u + v b)' = (u + t v) - v b
        t = self.ring.t
        adj = RQElt(self.ring, o.u + t * o.v, -o.v)
        num = self * adj
        return RQElt(self.ring, num.u / nm, num.v / nm)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k):
        out = self.ring.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        return self.u == o.u and self.v == o.v

    def __hash__(self):
        return hash((self.u, self.v))

    def is_zero(self):
        return self.ring.base.is_zero(self.u) and self.ring.base.is_zero(self.v)

    def __repr__(self):
        return "RQElt(%r + %r*b)" % (self.u, self.v)


class RelQuad:
    """Quadratic tower R[b]/(b^2 - t*b + n) over a base ring R."""

    is_rational_ring = False

    def __init__(self, base, t, n):
        self.base = base
        self.t = base.convert(t)
        self.n = base.convert(n)
        self._bzero = base.zero()
        self.degree = 2 * base.degree

    def zero(self):
        return RQElt(self, self.base.zero(), self.base.zero())

    def one(self):
        return RQElt(self, self.base.one(), self.base.zero())

    def beta(self):
        return RQElt(self, self.base.zero(), self.base.one())

    def from_rational(self, r):
        return RQElt(self, self.base.from_rational(r), self.base.zero())

    def from_base(self, x):
        return RQElt(self, self.base.convert(x), self.base.zero())

    def convert(self, x):
        if isinstance(x, RQElt) and x.ring == self:
            return x
        if isinstance(x, (int, Fraction)):
            return self.from_rational(x)
        return self.from_base(x)

    def is_zero(self, x):
        return x.is_zero()

    def coeff_vector(self, x):
        return self.base.coeff_vector(x.u) + self.base.coeff_vector(x.v)

    def minpoly_coeffs(self):
        # descriptive only (tower is relative); serialized with its parameters
        return None

    def __eq__(self, other):
        return (
            isinstance(other, RelQuad)
            and self.base == other.base
            and self.t == other.t
            and self.n == other.n
        )

    def __hash__(self):
        return hash(("RelQuad", self.base, self.t, self.n))

    def __repr__(self):
        return "RelQuad(%r; b^2 = t*b - n)" % (self.base,)


def promote_scalar(ring, x):
    """Convert x (possibly from a smaller ring along Q -> F -> F[b]) into ring."""
    return ring.convert(x)
