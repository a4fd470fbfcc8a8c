"""Truncated formal q-expansions with exact coefficients.

A QExp stores coefficients for exponents ell/den with 0 <= ell < cap,
so its precision is the rational cap/den.  Every operation computes the
exact valid precision of its output (products take the min, U-type
shifts divide, V-type shifts multiply); reading past the cap raises.

Coefficients live in one of the rings from `numberfield` (Q, a number
field, or the stabilization tower); rationals are promoted on demand.
"""

from fractions import Fraction
from math import gcd

from .errors import PrecisionUnderflow
from .numberfield import QQ

try:  # pragma: no cover - gmpy2 is an optional speedup
    from gmpy2 import mpz as _mpz
except ImportError:  # pragma: no cover
    _mpz = int


def _pack_nonneg(vals, nbytes):
    buf = bytearray(len(vals) * nbytes)
    for i, x in enumerate(vals):
        if x:
            buf[i * nbytes : (i + 1) * nbytes] = x.to_bytes(nbytes, "little")
    return int.from_bytes(bytes(buf), "little")


def poly_mul_int(a, b, cap):
    """First `cap` coefficients of the product of integer sequences a, b.

    Kronecker substitution: evaluate both at 2^bits (signed parts packed
    separately), take one big-integer product, decode two's-complement
    digits.  Exact for arbitrary Python ints, and fast: the heavy work is
    a single native big-int multiplication.
    """
    a = list(a[:cap])
    b = list(b[:cap])
    if not a or not b:
        return [0] * cap
    ma = max(abs(x) for x in a)
    mb = max(abs(x) for x in b)
    if ma == 0 or mb == 0:
        return [0] * cap
    bound = ma * mb * min(len(a), len(b))
    nbytes = ((4 * bound).bit_length() + 7) // 8 + 1
    bits = 8 * nbytes
    A = _pack_nonneg([x if x > 0 else 0 for x in a], nbytes) - _pack_nonneg(
        [-x if x < 0 else 0 for x in a], nbytes
    )
    B = _pack_nonneg([x if x > 0 else 0 for x in b], nbytes) - _pack_nonneg(
        [-x if x < 0 else 0 for x in b], nbytes
    )
    P = int(_mpz(A) * _mpz(B))
    base = 1 << bits
    half = base >> 1
    mask = base - 1
    out = []
    carry = 0
    for i in range(cap):
        d = ((P >> (i * bits)) & mask) + carry
        if d >= half:
            out.append(d - base)
            carry = 1
        else:
            out.append(d)
            carry = 0
    return out


class QExp:
    """Sparse truncated expansion sum a_ell q^(ell/den), ell < cap."""

    __slots__ = ("ring", "den", "cap", "coeffs")

    def __init__(self, ring, den, cap, coeffs):
        if cap < 1:
            raise PrecisionUnderflow("precision %r leaves no valid exponent slot" % (Fraction(cap, den),))
        self.ring = ring
        self.den = den
        self.cap = int(cap)
        self.coeffs = {}
        for ell, c in coeffs.items():
            if ell < 0 or ell >= cap:
                if ell >= cap:
                    continue
                raise ValueError("negative exponent")
            v = ring.convert(c)
            if not ring.is_zero(v):
                self.coeffs[int(ell)] = v

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, ring, cap, den=1):
        return cls(ring, den, cap, {})

    @classmethod
    def from_list(cls, vals, ring=QQ, den=1):
        return cls(ring, den, len(vals), dict(enumerate(vals)))

    @property
    def prec(self):
        return Fraction(self.cap, self.den)

    def coeff(self, ell):
        if ell >= self.cap:
            raise PrecisionUnderflow("coefficient %d beyond precision cap %d" % (ell, self.cap))
        return self.coeffs.get(ell, self.ring.zero())

    def an(self, n):
        """Coefficient of q^n (integer exponent), for den | n*den expansions."""
        if self.den == 1:
            return self.coeff(n)
        return self.coeff(n * self.den)

    # -- ring promotion --------------------------------------------------------

    def promote_ring(self, ring):
        if ring == self.ring:
            return self
        return QExp(ring, self.den, self.cap, {l: ring.convert(c) for l, c in self.coeffs.items()})

    def promote_den(self, den):
        if den == self.den:
            return self
        assert den % self.den == 0
        k = den // self.den
        return QExp(self.ring, den, self.cap * k, {l * k: c for l, c in self.coeffs.items()})

    @staticmethod
    def _common(f, g):
        ring = f.ring
        if ring == QQ and g.ring != QQ:
            ring = g.ring
        elif g.ring != QQ and g.ring != ring:
            raise TypeError("incompatible coefficient rings")
        den = f.den * g.den // gcd(f.den, g.den)
        return f.promote_ring(ring).promote_den(den), g.promote_ring(ring).promote_den(den)

    # -- arithmetic ------------------------------------------------------------

    def __add__(self, other):
        f, g = QExp._common(self, other)
        cap = min(f.cap, g.cap)
        out = {l: c for l, c in f.coeffs.items() if l < cap}
        for l, c in g.coeffs.items():
            if l < cap:
                out[l] = out.get(l, f.ring.zero()) + c
        return QExp(f.ring, f.den, cap, out)

    def __neg__(self):
        return QExp(self.ring, self.den, self.cap, {l: -c for l, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = self.ring.convert(s) if not isinstance(s, (int, Fraction)) else s
        return QExp(self.ring, self.den, self.cap, {l: c * s for l, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        f, g = QExp._common(self, other)
        cap = min(f.cap, g.cap)
        out = {}
        zero = f.ring.zero()
        for l1, c1 in f.coeffs.items():
            if l1 >= cap:
                continue
            for l2, c2 in g.coeffs.items():
                l = l1 + l2
                if l < cap:
                    out[l] = out.get(l, zero) + c1 * c2
        return QExp(f.ring, f.den, cap, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, QExp):
            return NotImplemented
        f, g = QExp._common(self, other)
        if f.cap != g.cap:
            return False
        return f.agrees_with(g, f.cap)

    def agrees_with(self, other, bound):
        """Exact equality of all coefficients with exponent index < bound."""
        f, g = QExp._common(self, other)
        if bound > f.cap or bound > g.cap:
            raise PrecisionUnderflow("agreement bound exceeds stored precision")
        for l in set(f.coeffs) | set(g.coeffs):
            if l < bound and not f.ring.is_zero(f.coeffs.get(l, f.ring.zero()) - g.coeffs.get(l, f.ring.zero())):
                return False
        return True

    def is_zero(self):
        return not self.coeffs

    def __repr__(self):
        items = sorted(self.coeffs)[:6]
        body = " + ".join("%r q^%s" % (self.coeffs[l], Fraction(l, self.den)) for l in items)
        return "QExp(%s%s; prec %s)" % (body or "0", " + ..." if len(self.coeffs) > 6 else "", self.prec)

    # -- serialization ----------------------------------------------------------

    def to_json(self):
        ring = self.ring
        mp = ring.minpoly_coeffs()
        return {
            "den": self.den,
            "prec": _frac_str(self.prec),
            "field": {"minpoly": [_frac_str(c) for c in mp]} if mp is not None else {"minpoly": None},
            "coeffs": [[l, [_frac_str(c) for c in ring.coeff_vector(self.coeffs[l])]] for l in sorted(self.coeffs)],
        }

    @classmethod
    def from_json(cls, data, ring=None):
        from .numberfield import NumberField

        if ring is None:
            mp = [Fraction(c) for c in data["field"]["minpoly"]]
            ring = QQ if len(mp) == 2 and mp[0] == 0 and mp[1] == 1 else NumberField(mp)
        den = int(data["den"])
        cap = Fraction(data["prec"]) * den
        assert cap.denominator == 1
        coeffs = {}
        for l, vec in data["coeffs"]:
            v = [Fraction(x) for x in vec]
            coeffs[int(l)] = v[0] if ring is QQ else ringelt(ring, v)
        return cls(ring, den, int(cap), coeffs)


def ringelt(ring, coeff_vector):
    from .numberfield import NFElt

    return NFElt(ring, coeff_vector)


def _frac_str(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else "%d/%d" % (x.numerator, x.denominator)


# -- operators -------------------------------------------------------------------


def mul(f, g):
    return f * g


def hecke_T(f, ell, w, chi):
    """Standard weight-w Hecke operator at a prime ell for character chi.

    a_n -> a_{n ell} + chi(ell) ell^(w-1) a_{n/ell}; constant terms follow the
    same rule (a_0 picks up the factor 1 + chi(ell) ell^(w-1)).
    """
    assert f.den == 1, "Hecke operators act on integer-exponent expansions"
    cap = -(-f.cap // ell)
    scal = Fraction(chi(ell) * ell ** (w - 1))
    out = {}
    zero = f.ring.zero()
    for n in range(cap):
        v = zero
        if n * ell < f.cap:
            v = v + f.coeffs.get(n * ell, zero)
        if n % ell == 0:
            v = v + f.coeffs.get(n // ell, zero) * scal
        out[n] = v
    return QExp(f.ring, 1, cap, out)


def u_shift(f, p):
    """a_n -> a_{np}; precision divides by p."""
    assert f.den == 1
    cap = -(-f.cap // p)
    return QExp(f.ring, 1, cap, {n: f.coeffs[n * p] for n in range(cap) if n * p in f.coeffs})


def v_shift(f, p):
    """a_n -> a_{n/p}, i.e. f(p*tau); precision multiplies by p."""
    assert f.den == 1
    return QExp(f.ring, 1, f.cap * p, {n * p: c for n, c in f.coeffs.items()})


def gamma0_index(N):
    idx = N
    seen = set()
    n = N
    d = 2
    while d * d <= n:
        if n % d == 0:
            seen.add(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        seen.add(n)
    for p in seen:
        idx = idx * (p + 1) // p
    return idx


def sturm_bound(w, N):
    """ceil(w/12 * [SL2(Z):Gamma0(N)]) + 1; agreement to this many
    coefficients certifies equality of weight-w level-N forms."""
    assert w >= 1 and N >= 1
    idx = gamma0_index(N)
    return -(-w * idx // 12) + 1
