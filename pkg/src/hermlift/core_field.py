"""Exact arithmetic in the imaginary quadratic field K = Q(sqrt(-D)).

D is a prime with D = 3 (mod 4) and class number one, so the ring of
integers is O = Z + Z*omega with omega = (1 + sqrt(-D))/2, the inverse
different is O/sqrt(-D), and the quadratic character chi_K agrees with
the Legendre symbol mod D on all integers.

Roots of unity (and through them sqrt(-D), realized as the quadratic
Gauss sum sum_j chi_K(j) zeta_D^j) live in CycloNum, an exact element
of Q(zeta_M) stored on the group basis {zeta_M^m} with canonical
reduction along each prime-power axis of M.  Equality is exact; floats
appear only in the diagnostic embedding.
"""

from fractions import Fraction
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import NotSplit, UnsupportedDiscriminant

SUPPORTED_D = (7, 11, 19, 43, 67, 163)


def _factorize(n):
    """Prime factorization [(q, e), ...] by trial division (desk-scale n)."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def _is_prime(n):
    return n >= 2 and _factorize(n) == [(n, 1)]


# ---------------------------------------------------------------------------
# Cyclotomic scalars


@lru_cache(maxsize=None)
def _crt_data(M):
    """Per prime-power axis data for conductor M.

    Returns (axes, weights) with axes = ((q, e, Q, phi), ...) and
    weights = (M/Q mod-inverses combination data): exponent m decomposes
    as i_j = m * inv(M/Q_j, Q_j) mod Q_j and recombines as sum i_j*(M/Q_j).
    """
    if M == 1:
        return ((), ())
    axes = []
    weights = []
    for q, e in _factorize(M):
        Q = q**e
        Mj = M // Q
        axes.append((q, e, Q, Q - Q // q))
        weights.append((Mj, pow(Mj, -1, Q)))
    return tuple(axes), tuple(weights)


def _reduce_exponents(M, items):
    """Canonically reduce {exponent: coeff} in Q(zeta_M).

    Each prime-power axis q^e is reduced modulo the sparse relation
    zeta^(phi + j) = -sum_{t=0..q-2} zeta^(t*q^(e-1) + j); one pass per
    axis suffices.  Returns a dict supported on the reduced tensor basis.
    """
    if M == 1:
        s = sum(items.values(), Fraction(0))
        return {} if s == 0 else {0: s}
    axes, weights = _crt_data(M)
    tensor = {}
    for m, c in items.items():
        key = tuple((m * inv) % Q for (q, e, Q, phi), (Mj, inv) in zip(axes, weights))
        tensor[key] = tensor.get(key, Fraction(0)) + c
    for ax, (q, e, Q, phi) in enumerate(axes):
        step = Q // q
        nxt = {}
        for key, c in tensor.items():
            if c == 0:
                continue
            i = key[ax]
            if i < phi:
                nxt[key] = nxt.get(key, Fraction(0)) + c
            else:
                j = i - phi
                for t in range(q - 1):
                    k2 = key[:ax] + (t * step + j,) + key[ax + 1 :]
                    nxt[k2] = nxt.get(k2, Fraction(0)) - c
        tensor = nxt
    out = {}
    for key, c in tensor.items():
        if c == 0:
            continue
        m = sum(i * Mj for i, (Mj, inv) in zip(key, weights)) % M
        out[m] = c
    return out


class CycloNum:
    """Exact element of Q(zeta_M), stored as a sparse sum of roots of unity."""

    __slots__ = ("M", "coeffs", "_canon")

    def __init__(self, M, coeffs):
        self.M = M
        self.coeffs = {m % M: Fraction(c) for m, c in coeffs.items() if c != 0}
        self._canon = None

    @classmethod
    def from_rational(cls, r, M=1):
        return cls(M, {0: Fraction(r)})

    @classmethod
    def root_of_unity(cls, M, k=1):
        return cls(M, {k % M: Fraction(1)})

    @classmethod
    def e_frac(cls, num, den):
        """e[num/den] = exp(2 pi i num/den) as an exact root of unity."""
        g = gcd(num, den) if num else den
        return cls.root_of_unity(den // g if g else 1, (num // g) if g else 0)

    def _promote(self, M2):
        if M2 == self.M:
            return self
        assert M2 % self.M == 0
        k = M2 // self.M
        return CycloNum(M2, {m * k: c for m, c in self.coeffs.items()})

    @staticmethod
    def _common(a, b):
        L = a.M * b.M // gcd(a.M, b.M)
        return a._promote(L), b._promote(L), L

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CycloNum.from_rational(other)
        a, b, L = CycloNum._common(self, other)
        out = dict(a.coeffs)
        for m, c in b.coeffs.items():
            out[m] = out.get(m, Fraction(0)) + c
        return CycloNum(L, out)

    __radd__ = __add__

    def __neg__(self):
        return CycloNum(self.M, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, CycloNum) else CycloNum.from_rational(-Fraction(other)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycloNum(self.M, {m: c * other for m, c in self.coeffs.items()})
        a, b, L = CycloNum._common(self, other)
        out = {}
        for m1, c1 in a.coeffs.items():
            for m2, c2 in b.coeffs.items():
                m = (m1 + m2) % L
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return CycloNum(L, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycloNum(self.M, {m: c / other for m, c in self.coeffs.items()})
        return self * other.inverse()

    def canonical(self):
        if self._canon is None:
            red = _reduce_exponents(self.M, self.coeffs)
            self._canon = tuple(sorted(red.items()))
        return self._canon

    def is_zero(self):
        return not self.canonical()

    def is_rational(self):
        c = self.canonical()
        return not c or (len(c) == 1 and c[0][0] == 0)

    def rational_value(self):
        c = self.canonical()
        if not c:
            return Fraction(0)
        if len(c) == 1 and c[0][0] == 0:
            return c[0][1]
        raise ValueError("not a rational number")

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CycloNum.from_rational(other)
        if not isinstance(other, CycloNum):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        c = self.canonical()
        if not c:
            return hash(0)
        # hash on the canonical support at the minimal stored conductor
        return hash((self.M, c))

    def __repr__(self):
        c = self.canonical()
        if not c:
            return "CycloNum(0)"
        return "CycloNum(%d; %s)" % (self.M, " + ".join("%s*z^%d" % (q, m) for m, q in c))

    def _basis_exponents(self):
        axes, weights = _crt_data(self.M)
        if not axes:
            return [0]
        idx = [0] * len(axes)
        exps = []
        while True:
            exps.append(sum(i * Mj for i, (Mj, inv) in zip(idx, weights)) % self.M)
            ax = 0
            while ax < len(axes):
                idx[ax] += 1
                if idx[ax] < axes[ax][3]:
                    break
                idx[ax] = 0
                ax += 1
            else:
                break
        return sorted(exps)

    def inverse(self):
        """Exact inverse via the regular representation on the reduced basis."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero cyclotomic number")
        if self.is_rational():
            return CycloNum.from_rational(1 / self.rational_value())
        exps = self._basis_exponents()
        pos = {m: i for i, m in enumerate(exps)}
        n = len(exps)
        # columns: reduced coordinates of self * zeta^b for each basis exponent b
        mat = [[Fraction(0)] * n for _ in range(n)]
        for j, b in enumerate(exps):
            prod = _reduce_exponents(self.M, {(m + b) % self.M: c for m, c in self.coeffs.items()})
            for m, c in prod.items():
                mat[pos[m]][j] = c
        rhs = [Fraction(0)] * n
        rhs[pos[0]] = Fraction(1)
        sol = _solve_fraction_system(mat, rhs)
        return CycloNum(self.M, {b: sol[j] for j, b in enumerate(exps)})

    def evalf(self):
        """Canonical complex embedding zeta_M -> exp(2 pi i / M). Diagnostic only."""
        import cmath

        return sum(complex(c) * cmath.exp(2j * cmath.pi * m / self.M) for m, c in self.coeffs.items())


def _solve_fraction_system(mat, rhs):
    """Solve a square exact linear system by Gaussian elimination."""
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(mat)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


# ---------------------------------------------------------------------------
# The field context


class QuadField:
    """Context object for K = Q(sqrt(-D)): character, cosets, Gauss sums."""

    def __init__(self, D):
        if D not in SUPPORTED_D:
            raise UnsupportedDiscriminant(
                "D must be one of %s (prime, 3 mod 4, class number one); got %r" % (list(SUPPORTED_D), D)
            )
        self.D = D
        self.omega_norm = (1 + D) // 4
        self.class_number = 1
        self._sqrt = None
        # squares mod D, for chi and the representation counts a_D
        sq = [0] * D
        for j in range(D):
            sq[(j * j) % D] += 1
        self._a_d_table = sq

    def __repr__(self):
        return "QuadField(D=%d)" % self.D

    def chi(self, n):
        """chi_K(n): the Legendre symbol (n|D), completely multiplicative."""
        n %= self.D
        if n == 0:
            return 0
        return 1 if pow(n, (self.D - 1) // 2, self.D) == 1 else -1

    def a_d(self, ell):
        """#{u in D^{-1}/O : D N(u) = -ell mod D} = #{j mod D : j^2 = -ell}."""
        return self._a_d_table[(-ell) % self.D]

    def omega(self):
        return AlgInt(self, 0, 1)

    def one(self):
        return AlgInt(self, 1, 0)

    def zero(self):
        return AlgInt(self, 0, 0)

    def cosets(self):
        """The fixed coset representatives j/sqrt(-D), j = 0..D-1."""
        return [CosetU(self, j) for j in range(self.D)]

    def coset_mul_index(self, pi, j):
        """Index of pi * u_j in D^{-1}/O; omega acts as (D+1)/2 mod D."""
        red = (pi.x + pi.y * ((self.D + 1) // 2)) % self.D
        return (red * j) % self.D

    def sqrt_minus_d(self):
        """sqrt(-D) as the quadratic Gauss sum sum_j chi(j) zeta_D^j.

        For D = 3 (mod 4) prime its square is -D exactly and the canonical
        embedding has positive imaginary part, so this is +i*sqrt(D).
        """
        if self._sqrt is None:
            self._sqrt = CycloNum(self.D, {j: Fraction(self.chi(j)) for j in range(1, self.D)})
        return self._sqrt


class AlgInt:
    """x + y*omega in the ring of integers O."""

    __slots__ = ("field", "x", "y")

    def __init__(self, field, x, y):
        self.field = field
        self.x = int(x)
        self.y = int(y)

    def norm(self):
        return self.x * self.x + self.x * self.y + self.field.omega_norm * self.y * self.y

    def trace(self):
        return 2 * self.x + self.y

    def conj(self):
        return AlgInt(self.field, self.x + self.y, -self.y)

    def content(self):
        return gcd(self.x, self.y)

    def is_zero(self):
        return self.x == 0 and self.y == 0

    def __add__(self, other):
        return AlgInt(self.field, self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return AlgInt(self.field, self.x - other.x, self.y - other.y)

    def __neg__(self):
        return AlgInt(self.field, -self.x, -self.y)

    def __mul__(self, other):
        if isinstance(other, int):
            return AlgInt(self.field, self.x * other, self.y * other)
        # omega^2 = omega - (1+D)/4
        q = self.field.omega_norm
        return AlgInt(
            self.field,
            self.x * other.x - q * self.y * other.y,
            self.x * other.y + self.y * other.x + self.y * other.y,
        )

    __rmul__ = __mul__

    def divide_exact(self, d):
        if self.x % d or self.y % d:
            raise ValueError("%r not divisible by %d" % (self, d))
        return AlgInt(self.field, self.x // d, self.y // d)

    def __eq__(self, other):
        return isinstance(other, AlgInt) and (self.x, self.y) == (other.x, other.y)

    def __hash__(self):
        return hash((self.x, self.y))

    def __repr__(self):
        return "AlgInt(%d%+d*w)" % (self.x, self.y)


class CosetU:
    """u = j/sqrt(-D), a representative of D^{-1}/O."""

    __slots__ = ("field", "j")

    def __init__(self, field, j):
        self.field = field
        self.j = j % field.D

    def norm_num(self):
        """D*N(u) = j^2 (so N(u) = j^2/D)."""
        return self.j * self.j

    def residue(self):
        """-D*N(u) mod D: the support class of the theta component at u."""
        return (-self.j * self.j) % self.field.D

    def __eq__(self, other):
        return isinstance(other, CosetU) and self.j == other.j and self.field.D == other.field.D

    def __hash__(self):
        return hash((self.field.D, self.j))

    def __repr__(self):
        return "CosetU(%d/sqrt(-%d))" % (self.j, self.field.D)


# ---------------------------------------------------------------------------
# Module-level operations


def make_field(D):
    return QuadField(D)


def chi_K(field, n):
    return field.chi(n)


def a_D(field, ell):
    return field.a_d(ell)


def split_prime(field, p):
    """pi = x + y*omega with N(pi) = p, canonical choice.

    Exhaustive search over |y| <= ceil(2*sqrt(p/D)) + 1, |x| <= ceil(sqrt(p)) + 1;
    among solutions the smallest (|y|, |x|) wins, then the sign is fixed by
    y >= 0 (and x > 0 when y = 0, which cannot occur for split p).
    """
    if not _is_prime(p) or p == field.D:
        raise ValueError("p must be a prime different from D")
    if field.chi(p) != 1:
        raise NotSplit("chi_K(%d) = %d; %d does not split in Q(sqrt(-%d))" % (p, field.chi(p), p, field.D))
    ybound = int((4 * p / field.D) ** 0.5) + 2
    xbound = int(p**0.5) + 2
    best = None
    for y in range(-ybound, ybound + 1):
        for x in range(-xbound, xbound + 1):
            cand = AlgInt(field, x, y)
            if cand.norm() == p:
                key = (abs(y), abs(x))
                if best is None or key < best[0]:
                    best = (key, cand)
                elif key == best[0] and (y > best[1].y or (y == best[1].y and x > best[1].x)):
                    best = (key, cand)
    assert best is not None, "split prime search bound too small"
    pi = best[1]
    if pi.y < 0 or (pi.y == 0 and pi.x < 0):
        pi = -pi
    return pi


def gauss_sum(field, a, N):
    """G_{-D}(a, N) = sum over O/NO of e[a*N(gamma)/N], exact in Q(zeta_N).

    For odd N coprime to D and gcd(a, N) = 1 this equals N*chi_K(N).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N == 1:
        return CycloNum.from_rational(1)
    q = field.omega_norm
    x = np.arange(N, dtype=np.int64)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    vals = (a * (xx * xx + xx * yy + q * yy * yy)) % N
    counts = np.bincount(vals.ravel(), minlength=N)
    return CycloNum(N, {int(m): Fraction(int(c)) for m, c in enumerate(counts) if c})


def sqrt_minus_D(field):
    return field.sqrt_minus_d()
