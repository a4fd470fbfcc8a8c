"""Spaces of elliptic modular forms M_w(D, chi_K) at desk scale.

Bases come from products of Eisenstein series with characters dividing
the level, certified complete against the Cohen-Oesterle dimension
formula; the cusp subspace is the image of a Hecke polynomial that
annihilates the Eisenstein eigenvalues.  Eigenforms are produced by an
exact simultaneous diagonalization over Q[x]/(m) for the irreducible
factors m of a generic Hecke combination, and each one remembers its
expression in Eisenstein products so its q-expansion can be re-expanded
to any precision later.
"""

from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from math import gcd

import sympy

from .errors import (
    EmbeddingAmbiguity,
    InsufficientPrecision,
    NotDiagonalizable,
    NotInSpan,
    NotNewform,
    NotOrdinary,
    NotSplit,
    ParityMismatch,
    SaturationFailure,
    UnsupportedWeight,
)
from .numberfield import NFElt, NumberField, QQ, RelQuad
from .qseries import QExp, hecke_T, poly_mul_int, sturm_bound, u_shift, v_shift


# ---------------------------------------------------------------------------
# Characters (only the trivial one and chi_K are ever needed)


class TrivialChar:
    modulus = 1
    conductor = 1

    def __call__(self, n):
        return 1

    def parity(self):
        return 1

    def name(self):
        return "trivial"

    def __eq__(self, other):
        return isinstance(other, TrivialChar)

    def __hash__(self):
        return hash("triv")


class QuadChar:
    """chi_K as a Dirichlet character mod D."""

    def __init__(self, fld):
        self.field = fld
        self.modulus = fld.D
        self.conductor = fld.D

    def __call__(self, n):
        return self.field.chi(n)

    def parity(self):
        return -1

    def name(self):
        return "kronecker_-%d" % self.field.D

    def __eq__(self, other):
        return isinstance(other, QuadChar) and other.field.D == self.field.D

    def __hash__(self):
        return hash(("kron", self.field.D))


TRIVIAL = TrivialChar()


# ---------------------------------------------------------------------------
# Bernoulli machinery


def bernoulli_number(n):
    return Fraction(int(sympy.bernoulli(n).p), int(sympy.bernoulli(n).q))


def bernoulli_poly_at(n, x):
    """B_n(x) for rational x."""
    x = Fraction(x)
    return sum(
        Fraction(sympy.binomial(n, i)) * bernoulli_number(i) * x ** (n - i) for i in range(n + 1)
    )


def generalized_bernoulli(n, psi):
    """B_{n,psi} = f^{n-1} sum_{a=1..f} psi(a) B_n(a/f)."""
    f = psi.modulus
    return Fraction(f) ** (n - 1) * sum(
        Fraction(psi(a)) * bernoulli_poly_at(n, Fraction(a, f)) for a in range(1, f + 1)
    )


# ---------------------------------------------------------------------------
# Eisenstein series


def eisenstein(w, chi, psi, prec):
    """E_w(chi, psi): a_n = sum_{d|n} chi(n/d) psi(d) d^(w-1) for n >= 1.

    Constant term -B_{w,psi}/(2w) when chi is trivial mod 1, else 0.
    """
    if chi.parity() * psi.parity() != (-1) ** w:
        raise ParityMismatch("(chi*psi)(-1) must equal (-1)^w")
    coeffs = {}
    if chi.modulus == 1 and chi.conductor == 1:
        coeffs[0] = -generalized_bernoulli(w, psi) / (2 * w)
    for n in range(1, prec):
        s = Fraction(0)
        d = 1
        while d * d <= n:
            if n % d == 0:
                s += chi(n // d) * psi(d) * Fraction(d) ** (w - 1)
                if d != n // d:
                    s += chi(d) * psi(n // d) * Fraction(n // d) ** (w - 1)
            d += 1
        coeffs[n] = s
    return QExp(QQ, 1, prec, coeffs)


def eisenstein_weight2_level(p, prec):
    """The weight-2 level-p Eisenstein series e2(tau) - p*e2(p*tau),
    normalized with e2 = -1/24 + sum sigma_1(n) q^n."""
    sig = [Fraction(0)] * prec
    for d in range(1, prec):
        for m in range(d, prec, d):
            sig[m] += d
    coeffs = {0: Fraction(p - 1, 24)}
    for n in range(1, prec):
        v = sig[n] - (p * sig[n // p] if n % p == 0 else 0)
        coeffs[n] = v
    return QExp(QQ, 1, prec, coeffs)


# ---------------------------------------------------------------------------
# Dimension oracles


def dim_oracle(w, N, chi):
    """dim S_w(Gamma0(N), chi) by the Cohen-Oesterle closed formula."""
    if w <= 1:
        raise UnsupportedWeight("weight-1 spaces are out of scope")
    if chi.parity() != (-1) ** w:
        return 0
    mu = N
    for p, _ in _factor(N):
        mu = mu * (p + 1) // p
    total = Fraction(w - 1, 12) * mu
    lam = Fraction(1)
    for p, r in _factor(N):
        s = _val(chi.conductor, p)
        if 2 * s <= r:
            lam *= p ** (r // 2) + p ** (r // 2 - 1) if r % 2 == 0 else 2 * p ** ((r - 1) // 2)
        else:
            lam *= 2 * p ** (r - s)
    total -= lam / 2
    # elliptic terms; for odd w the order-4 sum vanishes (chi odd pairs x, -x)
    e4 = sum(chi(x) for x in range(N) if (x * x + 1) % N == 0) if N > 1 else 1
    e3 = sum(chi(x) for x in range(N) if (x * x + x + 1) % N == 0) if N > 1 else 1
    g4 = {0: Fraction(1, 4), 2: Fraction(-1, 4)}.get(w % 4, Fraction(0))
    g3 = {0: Fraction(1, 3), 2: Fraction(-1, 3)}.get(w % 3, Fraction(0))
    total += g4 * e4 + g3 * e3
    # dim M_{2-w} correction only bites at w = 2
    if w == 2 and chi.conductor == 1:
        total += 1
    assert total.denominator == 1, "dimension formula did not produce an integer"
    return int(total)


def dim_eisenstein(w, N, chi):
    """Dimension of the Eisenstein subspace of M_w(N, chi), w >= 2,
    for the character set used here (trivial or primitive quadratic)."""
    count = 0
    pairs = []
    if chi.conductor == 1:
        pairs = [(1, 1)]
    else:
        pairs = [(1, chi.conductor), (chi.conductor, 1)]
    for u, v in pairs:
        t_ok = [t for t in _divisors(N // (u * v)) if u * v * t <= N and N % (u * v * t) == 0]
        count += len(t_ok)
    if w == 2 and chi.conductor == 1:
        count -= 1
    if w == 1:
        raise UnsupportedWeight("weight-1 spaces are out of scope")
    return count


def _factor(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


def _val(n, p):
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


# ---------------------------------------------------------------------------
# Candidate products of Eisenstein series


@dataclass(frozen=True)
class CandidateSpec:
    """A product of Eisenstein factors, re-expandable at any precision.

    Each factor is ('eis', w, chi_slot, psi_slot, shift) with slots in
    {'1', 'chi'}, or ('e2', p) for the weight-2 level-p series.
    """

    factors: tuple

    def expand(self, fld, prec):
        out = None
        for f in self.factors:
            if f[0] == "e2":
                series = eisenstein_weight2_level(f[1], prec)
            else:
                _, w, cs, ps, shift = f
                chi = TRIVIAL if cs == "1" else QuadChar(fld)
                psi = TRIVIAL if ps == "1" else QuadChar(fld)
                series = eisenstein(w, chi, psi, prec)
                if shift > 1:
                    series = QExp(QQ, 1, prec, {n * shift: c for n, c in series.coeffs.items() if n * shift < prec})
            out = series if out is None else _qexp_mul_fast(out, series, prec)
        return out


def _qexp_mul_fast(f, g, prec):
    """Rational series product through integer Kronecker convolution."""
    df = _common_den(f)
    dg = _common_den(g)
    fa = [int(f.coeffs.get(n, Fraction(0)) * df) for n in range(min(prec, f.cap))]
    ga = [int(g.coeffs.get(n, Fraction(0)) * dg) for n in range(min(prec, g.cap))]
    cap = min(prec, f.cap, g.cap)
    prod = poly_mul_int(fa, ga, cap)
    dd = df * dg
    return QExp(QQ, 1, cap, {n: Fraction(v, dd) for n, v in enumerate(prod) if v})


def _common_den(f):
    d = 1
    for c in f.coeffs.values():
        d = d * c.denominator // gcd(d, c.denominator)
    return d


def candidate_specs(fld, w, chi, escalate=False):
    """Products of Eisenstein series spanning M_w(D, chi) (chi odd) or
    M_w(D, trivial) (w even); degree <= 2, degree 3 on escalation."""
    D = fld.D
    odd_pool = {}
    for a in range(1, w + 1, 2):
        if a == 1:
            # in weight 1 the two orderings give the same form and only the
            # (1, chi) normalization carries the right constant term
            odd_pool[a] = [("eis", 1, "1", "chi", 1)]
        else:
            odd_pool[a] = [
                ("eis", a, "1", "chi", 1),
                ("eis", a, "chi", "1", 1),
            ]
    even_pool = {2: [("e2", D)]}
    for b in range(4, w + 1, 2):
        even_pool[b] = [("eis", b, "1", "1", 1), ("eis", b, "1", "1", D)]
    specs = []
    if chi.conductor > 1:
        if w % 2 == 1:
            specs += [CandidateSpec((f,)) for f in odd_pool.get(w, [])]
            for a in range(1, w - 1, 2):
                for fa in odd_pool[a]:
                    for fb in even_pool.get(w - a, []):
                        specs.append(CandidateSpec((fa, fb)))
            if escalate:
                for a in range(1, w - 3, 2):
                    for b in range(2, w - a - 1, 2):
                        c = w - a - b
                        if c < 2 or c % 2 or c < b:
                            continue
                        for fa in odd_pool[a]:
                            for fb in even_pool.get(b, []):
                                for fc in even_pool.get(c, []):
                                    specs.append(CandidateSpec((fa, fb, fc)))
    else:
        if w % 2 == 0:
            specs += [CandidateSpec((f,)) for f in even_pool.get(w, [])]
            for a in range(2, w - 1, 2):
                for fa in even_pool.get(a, []):
                    for fb in even_pool.get(w - a, []):
                        if w - a < a:
                            continue
                        specs.append(CandidateSpec((fa, fb)))
            if escalate:
                for a in range(2, w - 3, 2):
                    for b in range(a, w - a - 1, 2):
                        c = w - a - b
                        if c < b:
                            continue
                        for fa in even_pool.get(a, []):
                            for fb in even_pool.get(b, []):
                                for fc in even_pool.get(c, []):
                                    specs.append(CandidateSpec((fa, fb, fc)))
    # dedupe
    return list(dict.fromkeys(specs))


# ---------------------------------------------------------------------------
# Exact linear algebra over Q (rows are coefficient vectors)


def rref_rows(rows):
    """Reduced row echelon form with the transformation matrix.

    Returns (echelon_rows, pivots, transform) with echelon = transform @ rows.
    Zero rows are dropped.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    a = [list(map(Fraction, r)) for r in rows]
    t = [[Fraction(1 if i == j else 0) for j in range(m)] for i in range(m)]
    piv_rows = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, m) if a[i][col] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        t[r], t[piv] = t[piv], t[r]
        inv = 1 / a[r][col]
        a[r] = [x * inv for x in a[r]]
        t[r] = [x * inv for x in t[r]]
        for i in range(m):
            if i != r and a[i][col] != 0:
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                t[i] = [x - f * y for x, y in zip(t[i], t[r])]
        piv_rows.append(col)
        r += 1
        if r == m:
            break
    return a[:r], piv_rows, t[:r]


def coords_in_echelon(echelon, pivots, vec, check_cols):
    """Coordinates of vec in the echelon basis; None if not in the span
    (checked on check_cols columns)."""
    v = list(map(Fraction, vec))
    if pivots and pivots[-1] >= len(v):
        raise InsufficientPrecision("echelon pivot beyond the available coefficients")
    coords = []
    for row, p in zip(echelon, pivots):
        c = v[p]
        coords.append(c)
        if c != 0:
            v = [x - c * y for x, y in zip(v, row)]
    if any(v[j] != 0 for j in range(check_cols)):
        return None
    return coords


# ---------------------------------------------------------------------------
# Space basis


@dataclass
class SpaceBasis:
    weight: int
    level: int
    char: object
    field: object  # QuadField context (for chi)
    basis: list  # list of QExp over QQ
    dim: int
    prec: int
    specs: list  # candidate specs
    combos: list  # basis[i] = sum_j combos[i][j] * specs[j]
    is_cuspidal: bool = False
    _hecke_cache: dict = dataclass_field(default_factory=dict)

    def expand_vector(self, coeffs_q, prec):
        """Re-expand sum_i coeffs_q[i] * basis[i] at a larger precision.

        coeffs_q may live in any coefficient ring; the candidate series
        are re-expanded over Q and combined linearly.
        """
        ring = QQ
        for c in coeffs_q:
            if not isinstance(c, (int, Fraction)):
                ring = c.field if isinstance(c, NFElt) else c.ring
        spec_cache = {}
        total = QExp.zero(ring, prec)
        for i, c in enumerate(coeffs_q):
            if isinstance(c, (int, Fraction)) and c == 0:
                continue
            for j, w in enumerate(self.combos[i]):
                if w == 0:
                    continue
                if j not in spec_cache:
                    spec_cache[j] = self.specs[j].expand(self.field, prec)
                total = total + spec_cache[j].promote_ring(ring).scale(ring.convert(c * w) if isinstance(c, (int, Fraction)) else c * ring.convert(w))
        return total

    def hecke_matrix(self, ell):
        """Matrix of T_ell in this basis: columns are images."""
        if ell in self._hecke_cache:
            return self._hecke_cache[ell]
        B = sturm_bound(self.weight, self.level)
        if self.prec < B * ell:
            raise InsufficientPrecision("need precision %d for T_%d" % (B * ell, ell))
        rows = [[f.coeffs.get(n, Fraction(0)) for n in range(self.prec)] for f in self.basis]
        ech, piv, _ = rref_rows(rows)
        cols = []
        for f in self.basis:
            img = hecke_T(f, ell, self.weight, self.char)
            vec = [img.coeffs.get(n, Fraction(0)) for n in range(img.cap)]
            co = coords_in_echelon(ech, piv, vec, min(img.cap, B))
            if co is None:
                raise NotInSpan("Hecke image left the space; basis or constants wrong")
            cols.append(co)
        # basis is already echelon (built that way), so coords are direct
        mat = [[cols[j][i] for j in range(self.dim)] for i in range(self.dim)]
        self._hecke_cache[ell] = mat
        return mat


def build_space(w, N, chi, prec, fld=None, _escalated=False):
    """Span M_w(N, chi) by Eisenstein products, certified by the oracle."""
    assert fld is not None, "pass the QuadField context"
    assert N in (1, fld.D), "desk scale builds level 1 or D only"
    if prec < sturm_bound(w, N):
        raise InsufficientPrecision("prec below the Sturm bound")
    dim_m = dim_oracle(w, N, chi) + dim_eisenstein(w, N, chi)
    specs = candidate_specs(fld, w, chi, escalate=_escalated)
    series = [s.expand(fld, prec) for s in specs]
    rows = [[f.coeffs.get(n, Fraction(0)) for n in range(prec)] for f in series]
    ech, piv, transform = rref_rows(rows)
    if len(ech) < dim_m:
        if not _escalated:
            return build_space(w, N, chi, prec, fld=fld, _escalated=True)
        raise SaturationFailure(
            "rank %d < oracle dimension %d for M_%d(%d, %s)" % (len(ech), dim_m, w, N, chi.name())
        )
    if len(ech) > dim_m:
        raise SaturationFailure("rank exceeds the oracle dimension; oracle or products wrong")
    basis = [QExp(QQ, 1, prec, dict(enumerate(r))) for r in ech]
    return SpaceBasis(w, N, chi, fld, basis, dim_m, prec, specs, transform)


def cuspidal_subspace(space):
    """Cusp forms as the image of a Hecke polynomial annihilating the
    Eisenstein eigenvalues, certified against the dimension oracle."""
    dim_s = dim_oracle(space.weight, space.level, space.char)
    if dim_s == 0:
        return SpaceBasis(
            space.weight, space.level, space.char, space.field, [], 0, space.prec, space.specs, [], True
        )
    w = space.weight
    for ell in (2, 3, 5, 11, 13):
        if space.level % ell == 0:
            continue
        if space.prec < sturm_bound(w, space.level) * ell:
            break
        lam = set()
        if space.char.conductor == 1:
            lam.add(Fraction(1 + ell ** (w - 1)))
        else:
            ch = space.char(ell)
            lam.add(Fraction(1 + ch * ell ** (w - 1)))
            lam.add(Fraction(ch + ell ** (w - 1)))
        T = space.hecke_matrix(ell)
        op = _identity_frac(space.dim)
        for v in lam:
            op = _mat_mul(op, _mat_sub_scalar(T, v))
        # rows of (op applied to basis): image vectors in coefficient space
        img_rows = []
        for j in range(space.dim):
            col = [op[i][j] for i in range(space.dim)]
            vec = [sum(col[i] * space.basis[i].coeffs.get(n, Fraction(0)) for i in range(space.dim)) for n in range(space.prec)]
            img_rows.append(vec)
        ech, piv, tr = rref_rows(img_rows)
        if len(ech) == dim_s:
            combos = []
            for r in range(len(ech)):
                # ech[r] = sum_j tr[r][j] * img_rows[j]; img_rows[j] = sum_i op[i][j] basis[i]
                basis_combo = [sum(tr[r][j] * op[i][j] for j in range(space.dim)) for i in range(space.dim)]
                spec_combo = [
                    sum(basis_combo[i] * space.combos[i][k] for i in range(space.dim))
                    for k in range(len(space.specs))
                ]
                combos.append(spec_combo)
            basis = [QExp(QQ, 1, space.prec, dict(enumerate(r))) for r in ech]
            return SpaceBasis(
                space.weight, space.level, space.char, space.field, basis, dim_s, space.prec, space.specs, combos, True
            )
    raise SaturationFailure("could not isolate the cusp subspace at the oracle dimension")


def _identity_frac(n):
    return [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]


def _mat_mul(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _mat_sub_scalar(a, s):
    n = len(a)
    return [[a[i][j] - (s if i == j else 0) for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# Eigenforms


@dataclass
class Eigenform:
    level: int
    weight: int
    char: object
    field: object  # NumberField or QQ
    coeffs: QExp
    atkin_lehner_D: object  # a_D as a field element
    space: SpaceBasis = None
    space_coords: list = None  # over self.field
    quad: object = None  # QuadField context

    def an(self, n):
        return self.coeffs.coeff(n)

    def ap(self, p):
        return self.coeffs.coeff(p)

    def extend(self, prec):
        """Re-expand from the Eisenstein-product combination."""
        if prec <= self.coeffs.cap:
            return self
        assert self.space is not None, "no product combination stored"
        q = self.space.expand_vector(self.space_coords, prec)
        return Eigenform(
            self.level, self.weight, self.char, self.field, q, self.atkin_lehner_D, self.space, self.space_coords, self.quad
        )

    def conjugate(self):
        return conjugate_form(self)

    def euler_check(self, bound=None):
        """a_{mn} = a_m a_n for coprime m, n and the prime-power recursion,
        verified directly on the stored expansion."""
        cap = self.coeffs.cap if bound is None else min(bound, self.coeffs.cap)
        ring = self.coeffs.ring
        w = self.weight
        for n in range(2, cap):
            fac = _factor(n)
            if len(fac) > 1:
                prod = ring.one()
                for p, e in fac:
                    prod = prod * self.an(p**e)
                if not ring.is_zero(self.an(n) - prod):
                    return False
            else:
                p, e = fac[0]
                if e >= 2:
                    chi_p = self.char(p)
                    expect = self.an(p) * self.an(p ** (e - 1)) - Fraction(chi_p * p ** (w - 1)) * self.an(p ** (e - 2))
                    if not ring.is_zero(self.an(n) - expect):
                        return False
        return True


def eigen_decompose(space, primes):
    """Simultaneous exact eigenbasis of the commuting Hecke operators."""
    if space.dim == 0:
        return []
    primes = [p for p in primes if space.level % p != 0]
    mats = {p: space.hecke_matrix(p) for p in primes}
    combos_to_try = []
    for single in primes:
        combos_to_try.append({single: 1})
    if len(primes) >= 2:
        for c in (1, 2, 3, 5, 7):
            combos_to_try.append({primes[0]: 1, primes[1]: c})
    if len(primes) >= 3:
        combos_to_try.append({primes[0]: 1, primes[1]: 1, primes[2]: 1})
        combos_to_try.append({primes[0]: 1, primes[1]: 2, primes[2]: 5})
    x = sympy.Symbol("x")
    for combo in combos_to_try:
        A = None
        for p, c in combo.items():
            M = [[c * mats[p][i][j] for j in range(space.dim)] for i in range(space.dim)]
            A = M if A is None else [[A[i][j] + M[i][j] for j in range(space.dim)] for i in range(space.dim)]
        sym = sympy.Matrix([[sympy.Rational(A[i][j]) for j in range(space.dim)] for i in range(space.dim)])
        cp = sym.charpoly(x).as_expr()
        fac = sympy.factor_list(cp)[1]
        if any(mult > 1 for _, mult in fac):
            continue
        out = []
        for poly, _ in sorted(fac, key=lambda t: (sympy.degree(t[0], x), sympy.Poly(t[0], x).all_coeffs())):
            P = sympy.Poly(poly, x)
            lead = P.all_coeffs()[0]
            mono = [Fraction(int(sympy.Rational(c).p), int(sympy.Rational(c).q)) / Fraction(int(sympy.Rational(lead).p), int(sympy.Rational(lead).q)) for c in reversed(P.all_coeffs())]
            deg = len(mono) - 1
            if deg == 1:
                fld = QQ
                theta = -mono[0]
            else:
                fld = NumberField(mono)
                theta = fld.gen()
            vec = _eigenvector(A, theta, fld, space.dim)
            if vec is None:
                raise NotDiagonalizable("no eigenvector for an irreducible factor")
            q = _combine(space, vec, fld)
            a1 = q.coeff(1)
            if fld.is_zero(a1):
                raise NotDiagonalizable("eigenform with a_1 = 0; not a newform basis")
            inv = (Fraction(1) / a1) if fld is QQ else (fld.one() / a1)
            q = q.scale(inv)
            vec = [v * inv for v in vec]
            aD = q.coeff(space.field.D)
            out.append(
                Eigenform(space.level, space.weight, space.char, fld, q, aD, space, vec, space.field)
            )
        return out
    raise NotDiagonalizable("no generic Hecke combination had squarefree charpoly")


def _eigenvector(A, theta, fld, n):
    """One kernel vector of (A - theta) over fld, or None."""
    conv = (lambda r: Fraction(r)) if fld is QQ else (lambda r: fld.from_rational(r))
    zero = Fraction(0) if fld is QQ else fld.zero()
    one = Fraction(1) if fld is QQ else fld.one()
    rows = [[conv(A[i][j]) - (theta if i == j else zero) for j in range(n)] for i in range(n)]
    iszero = (lambda v: v == 0) if fld is QQ else (lambda v: v.is_zero())
    # gaussian elimination to echelon
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, n) if not iszero(rows[i][col])), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = one / rows[r][col]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(n):
            if i != r and not iszero(rows[i][col]):
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    if len(free) != 1:
        return None
    fc = free[0]
    vec = [zero] * n
    vec[fc] = one
    for row, p in zip(rows, pivots):
        vec[p] = -row[fc]
    return vec


def _combine(space, vec, fld):
    """sum_i vec[i] * basis[i] over fld."""
    prec = space.prec
    out = {}
    zero = Fraction(0) if fld is QQ else fld.zero()
    for n in range(prec):
        s = zero
        for i, v in enumerate(vec):
            c = space.basis[i].coeffs.get(n, Fraction(0))
            if c:
                s = s + v * c
        if not (s == 0 if fld is QQ else s.is_zero()):
            out[n] = s
    return QExp(fld, 1, prec, out)


# ---------------------------------------------------------------------------
# Conjugate form, plus space, p-stabilization


def qexp_from_prime_data(fld_ctx, level, weight, char, ring, ap_func, aD, prec):
    """Expansion of an eigenform from its prime eigenvalues.

    a_{p^e} by the Hecke recursion at good primes, a_{D^e} = a_D^e, and
    multiplicativity across coprime factors.
    """
    D = fld_ctx.D
    vals = {1: ring.one()}

    def a_prime_power(p, e):
        if p == D:
            return aD**e if e else ring.one()
        seq = [ring.one(), ap_func(p)]
        scal = Fraction(char(p) * p ** (weight - 1))
        while len(seq) <= e:
            seq.append(seq[-1] * seq[1] - seq[-2] * scal)
        return seq[e]

    coeffs = {}
    for n in range(1, prec):
        v = ring.one()
        for p, e in _factor(n):
            v = v * a_prime_power(p, e)
        coeffs[n] = v
    return QExp(ring, 1, prec, coeffs)


def conjugate_form(h):
    """h^c: a_l -> chi_K(l) a_l at good primes, a_D -> D^(w-1)/a_D.

    The twist-and-Euler-factor rule; the result is verified to lie in the
    same space (to the Sturm bound), certifying it is again an eigenform.
    """
    if h.quad is None or h.level != h.quad.D:
        raise NotNewform("conjugation implemented for newforms of level exactly D")
    ring = h.field
    if ring.is_zero(h.atkin_lehner_D) if ring is not QQ else h.atkin_lehner_D == 0:
        raise NotNewform("a_D = 0; not a newform of level D")
    w = h.weight
    aDc = Fraction(h.quad.D) ** (w - 1) / h.atkin_lehner_D
    q = qexp_from_prime_data(
        h.quad,
        h.level,
        w,
        h.char,
        ring if ring is not QQ else QQ,
        lambda p: h.an(p) * h.char(p),
        aDc,
        h.coeffs.cap,
    )
    # membership in the space certifies eigenform-ness (Sturm)
    if h.space is not None:
        coords = _solve_in_space(h.space, q)
        if coords is None:
            raise NotNewform("conjugate expansion left the space")
    else:
        coords = None
    return Eigenform(h.level, w, h.char, ring, q, aDc, h.space, coords, h.quad)


def _solve_in_space(space, q):
    """Coordinates of q (over its own ring) in space's echelon basis,
    or None if the reduction leaves a nonzero residual below the Sturm bound."""
    ring = q.ring
    B = sturm_bound(space.weight, space.level)
    n_cols = min(q.cap, space.prec)
    conv = (lambda r: Fraction(r)) if ring is QQ else ring.from_rational
    iszero = (lambda v: v == 0) if ring is QQ else (lambda v: v.is_zero())
    rows = [[conv(space.basis[i].coeffs.get(n, Fraction(0))) for n in range(n_cols)] for i in range(space.dim)]
    vec = [q.coeffs.get(n, ring.zero() if ring is not QQ else Fraction(0)) for n in range(n_cols)]
    pivots = [next(c for c in range(n_cols) if not iszero(rows[i][c])) for i in range(space.dim)]
    coords = []
    for i, p in enumerate(pivots):
        c = vec[p]
        coords.append(c)
        if not iszero(c):
            vec = [a - c * b for a, b in zip(vec, rows[i])]
    if any(not iszero(vec[n]) for n in range(min(B, n_cols))):
        return None
    return coords


def is_plus(f, fld_ctx, level, weight):
    """True iff every stored coefficient with chi_K(n) = +1 vanishes."""
    B = sturm_bound(weight, level)
    if f.cap < B:
        raise InsufficientPrecision("need %d coefficients, have %d" % (B, f.cap))
    ring = f.ring
    for n, c in f.coeffs.items():
        if fld_ctx.chi(n) == 1 and not (c == 0 if ring is QQ else ring.is_zero(c)):
            return False
    return True


@dataclass
class PStabilized:
    """Output of p-stabilization: unit root, non-unit root, stabilized form."""

    alpha: object
    beta: object
    f: QExp
    ring: object  # tower (or base field when the Hecke quadratic splits there)
    h: Eigenform
    g: QExp
    p: int
    alpha_padic: int  # unit root mod p^M under the configured embedding
    embedding_root: int  # image of the field generator mod p^M
    padic_modulus: int


def hensel_root(poly_mod_fn, x0, p, M):
    """Lift a simple root x0 of a polynomial mod p to mod p^M by Newton steps.

    poly_mod_fn(x, mod) -> (value, derivative) computed mod `mod`.
    """
    mod = p
    x = x0 % p
    while mod < p**M:
        mod = min(mod * mod, p**M)
        v, dv = poly_mod_fn(x, mod)
        x = (x - v * pow(dv, -1, mod)) % mod
    return x


def field_embeddings_mod_p(fld, p, M):
    """Roots of the field's minimal polynomial mod p^M (simple roots only)."""
    if fld is QQ:
        return [0]
    mp = [c for c in fld.minpoly_coeffs()]
    den = 1
    for c in mp:
        den = den * c.denominator // gcd(den, c.denominator)
    ip = [int(c * den) for c in mp]

    def eval_mod(x, mod):
        v = 0
        dv = 0
        for c in reversed(ip):
            dv = (dv * x + v) % mod
            v = (v * x + c) % mod
        return v, dv

    roots = []
    for x0 in range(p):
        v, dv = eval_mod(x0, p)
        if v % p == 0:
            if dv % p == 0:
                continue  # ramified/multiple root: unusable embedding
            roots.append(hensel_root(eval_mod, x0, p, M))
    return sorted(roots)


def embed_scalar(x, root, p, M, ring):
    """Image of a field element in Z/p^M via generator -> root."""
    mod = p**M
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        return x.numerator * pow(x.denominator, -1, mod) % mod
    if isinstance(x, NFElt):
        acc = 0
        for c in reversed(x.coeffs):
            cf = Fraction(c)
            acc = (acc * root + cf.numerator * pow(cf.denominator, -1, mod)) % mod
        return acc
    raise TypeError("cannot embed %r" % (x,))


def p_stabilize(h, p, M=10, embed_root_index=None):
    """Annihilate the non-unit root of X^2 - a_p X + p^(w-1) for g = h - h^c.

    Returns PStabilized with exact alpha, beta in the tower and the form
    f = g - beta * g(p tau); checks U(p) f = alpha f to the Sturm bound.
    """
    fldq = h.quad
    if fldq.chi(p) != 1:
        raise NotSplit("p = %d is not split; chi_K(p) = %d" % (p, fldq.chi(p)))
    if h.field is not QQ and h.field.degree > 8:
        raise EmbeddingAmbiguity("coefficient field degree > 8 rejected at desk scale")
    roots = field_embeddings_mod_p(h.field, p, M)
    if not roots:
        raise NotOrdinary("no unramified embedding of the coefficient field above p")
    if len(roots) > 1 and embed_root_index is None:
        raise EmbeddingAmbiguity(
            "%d primes above %d; set embedding_root in the configuration" % (len(roots), p)
        )
    root = roots[embed_root_index or 0]
    w = h.weight
    ap = h.an(p)
    ap_img = embed_scalar(ap, root, p, M, h.field)
    if ap_img % p == 0:
        raise NotOrdinary("val_p(a_p) > 0 under the chosen embedding")
    # unit root alpha-hat: simple root of x^2 - ap x + p^(w-1) congruent to ap mod p
    pw = pow(p, w - 1, p**M) if w >= 1 else 1
    pw_exact = p ** (w - 1)

    def quad_mod(x, mod):
        return (x * x - ap_img * x + pw_exact) % mod, (2 * x - ap_img) % mod

    alpha_hat = hensel_root(quad_mod, ap_img % p, p, M)
    tower = RelQuad(h.field, ap, Fraction(pw_exact))
    alpha = tower.beta()
    beta = tower.convert(ap) - alpha
    hc = conjugate_form(h)
    g = h.coeffs - hc.coeffs
    g_t = g.promote_ring(tower)
    f = g_t - v_shift(g_t, p).scale(beta)
    B = sturm_bound(w, fldq.D * p)
    if f.cap >= B * p:
        uf = u_shift(f, p)
        af = f.scale(alpha)
        if not uf.agrees_with(af, min(uf.cap, B)):
            raise NotOrdinary("U(p) f != alpha f; stabilization failed (internal)")
    return PStabilized(alpha, beta, f, tower, h, g, p, alpha_hat, root, p**M)


def decompose_p_old(f, g_list, p, weight, fld_ctx):
    """Express a p-old plus form as sum(lambda_i g_i) + sum(mu_i g_i(p tau)).

    Exact solve against coefficient columns up to the Sturm bound of level
    Dp; the residual must vanish through the full stored precision.
    """
    ring = f.ring
    B = min(f.cap, sturm_bound(weight, fld_ctx.D * p))
    cols = []
    for g in g_list:
        cols.append(g.promote_ring(ring))
    for g in g_list:
        cols.append(v_shift(g.promote_ring(ring), p))
    n = len(cols)
    zero = ring.zero()
    iszero = ring.is_zero
    # least-index Gaussian solve on the transposed system
    rows = [[c.coeffs.get(m, zero) for c in cols] for m in range(B)]
    rhs = [f.coeffs.get(m, zero) for m in range(B)]
    aug = [row[:] + [r] for row, r in zip(rows, rhs)]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(aug)) if not iszero(aug[i][col])), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = ring.one() / aug[r][col]
        aug[r] = [x * inv for x in aug[r]]
        for i in range(len(aug)):
            if i != r and not iszero(aug[i][col]):
                fa = aug[i][col]
                aug[i] = [x - fa * y for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
    sol = [zero] * n
    for row, c in zip(aug, pivots):
        sol[c] = row[n]
    for i in range(r, len(aug)):
        if not iszero(aug[i][n]):
            raise NotInSpan("inconsistent system: f not p-old in the given basis")
    # verify residual through the full cap
    recon = QExp.zero(ring, min(c.cap for c in cols + [f]))
    for c, s in zip(cols, sol):
        recon = recon + c.scale(s)
    if not recon.agrees_with(f, recon.cap):
        raise NotInSpan("residual nonzero beyond the Sturm bound")
    return sol[: len(g_list)], sol[len(g_list) :]
