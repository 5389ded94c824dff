"""Real quadratic fields, units, orders and ring class groups.

Class groups are computed with cycles of reduced indefinite binary quadratic
forms.  A form (a, b, c) with a > 0 corresponds to the proper O_c-ideal
[a, (b + sqrt(Delta))/2] whose norm form is a*x^2 + b*x*y + c*y^2.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from math import gcd, isqrt

from sympy.functions.combinatorial.numbers import kronecker_symbol

from ._arith import KElt, checked, ext_gcd, factorint, gcd3, is_squarefree

Form = tuple[int, int, int]


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class RealQuadraticField:
    d: int
    d_K: int

    @property
    def sqrt_dK(self) -> float:
        return math.sqrt(self.d_K)

    def elt(self, a, b=0) -> KElt:
        """a + b*sqrt(d_K)."""
        return KElt.make(a, b, self.d_K)

    @property
    def omega(self) -> KElt:
        """Standard generator (s + sqrt(d_K))/2 of O_K over Z, s = d_K mod 2."""
        return self.elt(Fraction(self.d_K % 2, 2), Fraction(1, 2))


def make_field(d: int) -> RealQuadraticField:
    if not isinstance(d, int) or d <= 1 or not is_squarefree(d):
        raise ValidationError(f"d must be a squarefree integer > 1, got {d!r}")
    d_K = d if d % 4 == 1 else 4 * d
    checked(d_K * d_K)
    return RealQuadraticField(d, d_K)


@dataclass(frozen=True)
class UnitData:
    t: int
    u: int
    eps0: tuple[int, int]  # eps0 = (t0 + u0 sqrt(d_K))/2
    eps0_log: float
    eps0_norm: int
    epsK_log: float

    @property
    def eps1_log(self) -> float:
        """log of the generator of the norm-one units (equals epsK_log)."""
        return self.epsK_log


def fundamental_unit(F: RealQuadraticField) -> UnitData:
    """Fundamental unit from the continued fraction of omega = (s + sqrt(d_K))/2.

    The first convergent p/q with N(p - q*omega) = +-1 gives eps0 = p - q*omega^tau.
    """
    D = F.d_K
    s = D % 2
    r = isqrt(D)
    # omega = (P + sqrt(D))/Q with Q | D - P^2
    P, Q = s, 2
    p0, p1 = 1, 0
    q0, q1 = 0, 1
    for _ in range(100000):
        a = (P + r) // Q
        p0, p1 = checked(a * p0 + p1), p0
        q0, q1 = checked(a * q0 + q1), q0
        n = p0 * p0 - s * p0 * q0 + q0 * q0 * (s * s - D) // 4
        if n in (1, -1):
            t0, u0 = 2 * p0 - s * q0, q0
            break
        P = a * Q - P
        Q = (D - P * P) // Q
    else:  # pragma: no cover - periods are far shorter at supported sizes
        raise ArithmeticError("continued fraction did not close")
    norm = int(n)
    log0 = math.log((t0 + u0 * math.sqrt(D)) / 2)
    if norm == 1:
        t, u = t0, u0
    else:
        t, u = checked((t0 * t0 + D * u0 * u0) // 2), checked(t0 * u0)
    assert t * t - D * u * u == 4
    return UnitData(t, u, (t0, u0), log0, norm, log0 if norm == 1 else 2 * log0)


def kronecker(F: RealQuadraticField, n: int) -> int:
    if n == 0:
        raise ValidationError("kronecker symbol at 0 is undefined here")
    return int(kronecker_symbol(F.d_K, n))


# -- binary quadratic forms ------------------------------------------------------


def form_disc(f: Form) -> int:
    return f[1] * f[1] - 4 * f[0] * f[2]


def _is_reduced(f: Form, Delta: int) -> bool:
    a, b, c = f
    r = math.sqrt(Delta)
    return 0 < b < r and r - b < 2 * abs(a) < r + b


def _rho(f: Form, Delta: int) -> Form:
    """One step of the indefinite reduction operator."""
    a, b, c = f
    r = isqrt(Delta)
    ac = abs(c)
    if ac > r:
        # -|c| < b' <= |c|
        b2 = (-b) % (2 * ac)
        if b2 > ac:
            b2 -= 2 * ac
    else:
        # sqrt(Delta) - 2|c| < b' < sqrt(Delta), b' = -b mod 2c
        b2 = (-b) % (2 * ac)
        top = r if r * r < Delta else r - 1
        b2 = b2 + ((top - b2) // (2 * ac)) * 2 * ac
    c2 = (b2 * b2 - Delta) // (4 * c)
    return (checked(c), checked(b2), checked(c2))


def reduce_form(f: Form) -> Form:
    Delta = form_disc(f)
    for _ in range(10000):
        if _is_reduced(f, Delta):
            return f
        f = _rho(f, Delta)
    raise ArithmeticError("reduction did not terminate")


def compose(f1: Form, f2: Form) -> Form:
    """Dirichlet composition of primitive forms of equal discriminant (unreduced)."""
    a1, b1, c1 = f1
    a2, b2, c2 = f2
    Delta = form_disc(f1)
    s = (b1 + b2) // 2
    g1, x1, y1 = ext_gcd(a1, a2)
    g, x2, w = ext_gcd(g1, s)
    u, v = x1 * x2, y1 * x2
    A = a1 * a2 // (g * g)
    B = b2 + 2 * (a2 // g) * (v * (s - b2) - w * c2)
    B %= 2 * abs(A)
    C = (B * B - Delta) // (4 * A)
    assert u * a1 + v * a2 + w * s == g
    return (checked(A), checked(B), checked(C))


def reduced_forms(Delta: int) -> list[Form]:
    out = []
    r = math.sqrt(Delta)
    for b in range(1, isqrt(Delta) + 1):
        if (b * b - Delta) % 4:
            continue
        ac = (b * b - Delta) // 4  # negative
        for a in range(1, abs(ac) + 1):
            if ac % a:
                continue
            for sa in (a, -a):
                c = ac // sa
                f = (sa, b, c)
                if gcd3(*f) == 1 and _is_reduced(f, Delta):
                    out.append(f)
    return sorted(out)


def cycles(Delta: int) -> list[list[Form]]:
    seen: set[Form] = set()
    out = []
    for f in reduced_forms(Delta):
        if f in seen:
            continue
        cyc = [f]
        seen.add(f)
        g = _rho(f, Delta)
        while g != f:
            cyc.append(g)
            seen.add(g)
            g = _rho(g, Delta)
        out.append(cyc)
    return out


def _transform(f: Form, M: tuple[int, int, int, int]) -> Form:
    """f o M for M = [[p, q], [r, s]] acting on column vectors (x, y)."""
    a, b, c = f
    p, q, r, s = M
    A = a * p * p + b * p * r + c * r * r
    B = 2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s
    C = a * q * q + b * q * s + c * s * s
    return (A, B, C)


# -- ideals ---------------------------------------------------------------------


@dataclass(frozen=True)
class FractionalIdeal:
    alpha: KElt
    z: KElt
    norm: Fraction
    conductor: int = 1

    @property
    def basis(self) -> tuple[KElt, KElt]:
        return (self.alpha, self.z)

    def to_json(self) -> dict:
        return {
            "basis": [self.alpha.as_triple(), self.z.as_triple()],
            "norm": [self.norm.numerator, self.norm.denominator],
        }


def ideal_from_form(F: RealQuadraticField, f: Form, c: int = 1) -> FractionalIdeal:
    a, b, _ = f
    if a <= 0:
        raise ValidationError("ideal representative needs a > 0")
    alpha = F.elt(a)
    z = F.elt(Fraction(b, 2), Fraction(c, 2))
    return FractionalIdeal(alpha, z, Fraction(a), c)


def ideal_norm_form(I: FractionalIdeal) -> Form:
    """Integral form N(x*alpha + y*z)/N(I); discriminant c^2 d_K is asserted."""
    if not I.alpha.is_rational():
        raise ValidationError("basis not normalized: alpha must be rational")
    A = I.alpha.norm() / I.norm
    B = (I.alpha * I.z.conj()).trace() / I.norm
    C = I.z.norm() / I.norm
    if any(x.denominator != 1 for x in (A, B, C)):
        raise ValidationError("norm form is not integral; basis not normalized")
    f = (int(A), int(B), int(C))
    if form_disc(f) != I.conductor**2 * I.alpha.D:
        raise ValidationError("norm form has the wrong discriminant")
    return f


def _module_basis(gens: list[KElt]) -> tuple[KElt, KElt]:
    """Z-basis (rational alpha, z) of the module spanned by gens, via 2x2 HNF."""
    D = gens[0].D
    den = 1
    for g in gens:
        den = den * g.a.denominator // gcd(den, g.a.denominator)
        den = den * g.b.denominator // gcd(den, g.b.denominator)
    rows = [[int(g.a * den), int(g.b * den)] for g in gens]
    # combine rows to get the gcd of the sqrt-coordinates
    g, v = 0, [0, 0]
    for r in rows:
        if r[1] == 0:
            continue
        if g == 0:
            g, v = abs(r[1]), (r if r[1] > 0 else [-r[0], -r[1]])
            continue
        d, x, y = ext_gcd(g, r[1])
        v = [x * v[0] + y * r[0], d]
        g = d
    if g == 0:
        raise ValidationError("generators span a rank-one module")
    xs = [r[0] - (r[1] // g) * v[0] for r in rows]
    a = 0
    for x in xs:
        a = gcd(a, x)
    a = abs(a)
    if a == 0:
        raise ValidationError("generators span a rank-one module")
    return KElt.make(Fraction(a, den), 0, D), KElt.make(Fraction(v[0] % a, den), Fraction(g, den), D)


def ideal_mul(I: FractionalIdeal, J: FractionalIdeal) -> FractionalIdeal:
    if I.conductor != J.conductor:
        raise ValidationError("ideals of different orders")
    alpha, z = _module_basis([x * y for x in I.basis for y in J.basis])
    return FractionalIdeal(alpha, z, I.norm * J.norm, I.conductor)


def ideal_scale(I: FractionalIdeal, r) -> FractionalIdeal:
    r = Fraction(r)
    return FractionalIdeal(I.alpha * r, I.z * r, I.norm * r * r, I.conductor)


# -- ring class group -----------------------------------------------------------


def _fmt(f: Form) -> str:
    return "({},{},{})".format(*f)


@dataclass
class RingClassGroup:
    field: RealQuadraticField
    conductor: int
    labels: list[Form]
    forms: list[Form]  # representative form per class (a > 0, coprime to avoid)
    reps: list[FractionalIdeal]
    table: list[list[int]]
    _lookup: dict[Form, int] = field(repr=False, default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.labels)

    @property
    def identity(self) -> int:
        return 0

    @property
    def discriminant(self) -> int:
        return self.conductor**2 * self.field.d_K

    def label_str(self, i: int) -> str:
        return _fmt(self.labels[i])

    def class_of_form(self, f: Form) -> int:
        return self._lookup[reduce_form(f)]

    def inverse(self, i: int) -> int:
        return self.table[i].index(0)

    def class_of_prime(self, p: int) -> tuple[int, int] | None:
        """Classes of the primes above a split or ramified rational prime p.

        Returns (class of P, class of P-bar) or None when p is inert or divides c.
        """
        Delta = self.discriminant
        if self.conductor % p == 0:
            return None
        for b in range(0, 2 * p):
            if (b * b - Delta) % (4 * p) == 0:
                i = self.class_of_form((p, b, (b * b - Delta) // (4 * p)))
                return i, self.inverse(i)
        return None

    def to_json(self, units: UnitData | None = None) -> dict:
        F = self.field
        units = units or fundamental_unit(F)
        return {
            "d": F.d,
            "dK": F.d_K,
            "c": self.conductor,
            "pell": [units.t, units.u],
            "eps0_log": units.eps0_log,
            "classes": [{"label": _fmt(lab), **rep.to_json()} for lab, rep in zip(self.labels, self.reps)],
            "table": self.table,
        }


def _representative(f: Form, avoid: int, bound: int = 60) -> Form:
    """A properly equivalent form with a > 0 and gcd(a, avoid) = 1."""
    best = None
    for x, y in sorted(product(range(-bound, bound + 1), repeat=2), key=lambda t: (abs(t[0]) + abs(t[1]), t)):
        if gcd(x, y) != 1:
            continue
        m = f[0] * x * x + f[1] * x * y + f[2] * y * y
        if m > 0 and gcd(m, avoid) == 1:
            if best is None or m < best[0]:
                best = (m, x, y)
                if m <= abs(f[0]) or m == 1:
                    break
    if best is None:
        raise ValidationError("no representative coprime to the avoidance set found")
    _, x, y = best
    _, s, r = ext_gcd(x, y)  # x*s + y*r = 1 -> matrix [[x, -r], [y, s]]
    g = _transform(f, (x, -r, y, s))
    # normalize b into (-a, a]
    a, b, c = g
    k = (a - b) // (2 * a)
    g = _transform(g, (1, k, 0, 1))
    assert form_disc(g) == form_disc(f)
    return g


def ring_class_group(F: RealQuadraticField, c: int = 1, avoid: int = 1, level: int = 1) -> RingClassGroup:
    """Pic(O_c) via form cycles, fused under f -> (-a, b, -c) when N(eps0) = +1."""
    if c < 1:
        raise ValidationError("conductor must be positive")
    if gcd(c, F.d_K * level) > 1:
        raise ValidationError("conductor must be coprime to d_K * N")
    Delta = checked(c * c * F.d_K)
    cyc = cycles(Delta)
    cyc_of: dict[Form, int] = {}
    for i, cy in enumerate(cyc):
        for f in cy:
            cyc_of[f] = i
    # wide classes: orbits of cycles under the (involutive) sign flip
    groups: dict[int, list[int]] = {}
    for i, cy in enumerate(cyc):
        a, b, cc = cy[0]
        j = cyc_of[reduce_form((-a, b, -cc))]
        groups.setdefault(min(i, j), sorted({i, j}))
    classes = []
    for members in groups.values():
        label = min(f for i in members for f in cyc[i])
        classes.append((label, members))
    # identity first, then by label
    s0 = Delta % 2
    principal = cyc_of[reduce_form((1, s0, (s0 - Delta) // 4))]
    classes.sort(key=lambda t: (principal not in t[1], t[0]))
    lookup = {f: k for k, (_, members) in enumerate(classes) for i in members for f in cyc[i]}
    labels = [lab for lab, _ in classes]
    avoid_all = avoid * c
    forms = []
    for lab, members in classes:
        start = next(f for f in cyc[members[0]] if f[0] > 0)
        forms.append(_representative(start, avoid_all) if avoid_all > 1 else start)
    h = len(classes)
    table = [[lookup[reduce_form(compose(forms[i], forms[j]))] for j in range(h)] for i in range(h)]
    reps = [ideal_from_form(F, f, c) for f in forms]
    G = RingClassGroup(F, c, labels, forms, reps, table, lookup)
    for i, f in enumerate(forms):
        assert G.class_of_form(f) == i
    return G


# -- characters -----------------------------------------------------------------


@dataclass(frozen=True)
class RingClassCharacter:
    exponents: tuple[int, ...]  # values e(k/exponent)
    exponent: int

    @cached_property
    def values(self) -> list[complex]:
        return [cmath.exp(2j * math.pi * k / self.exponent) for k in self.exponents]

    def __call__(self, i: int) -> complex:
        return self.values[i]

    @property
    def is_trivial(self) -> bool:
        return not any(self.exponents)

    @property
    def is_real(self) -> bool:
        return all((2 * k) % self.exponent == 0 for k in self.exponents)


def _element_orders(table: list[list[int]]) -> list[int]:
    out = []
    for g in range(len(table)):
        k, x = 1, g
        while x != 0:
            x = table[x][g]
            k += 1
        out.append(k)
    return out


def invariant_factors(table: list[list[int]]) -> list[int]:
    """Invariant factors of a finite abelian group from counts of elements of each order."""
    h = len(table)
    orders = _element_orders(table)
    out: list[int] = []
    for p, e in factorint(h).items():
        # number of elements killed by p^k determines the p-part partition
        counts = [sum(1 for o in orders if (p**k) % o == 0) for k in range(e + 1)]
        ranks = [round(math.log(counts[k] // counts[k - 1], p)) for k in range(1, e + 1)]
        # ranks[k-1] = number of cyclic factors of order >= p^k
        parts = []
        for k in range(1, e + 1):
            nxt = ranks[k] if k < e else 0
            parts += [p**k] * (ranks[k - 1] - nxt)
        out.append(sorted(parts, reverse=True))
    width = max((len(x) for x in out), default=0)
    factors = [1] * width
    for parts in out:
        for i, q in enumerate(parts):
            factors[i] *= q
    return sorted(factors)


def characters(G: RingClassGroup) -> list[RingClassCharacter]:
    """All characters of Pic(O_c), trivial first, by extension along a generating set."""
    table = G.table
    h = len(table)
    orders = _element_orders(table)
    e = math.lcm(*orders)
    gens: list[int] = []
    span = {0}
    for g in sorted(range(h), key=lambda i: (-orders[i], i)):
        if g in span:
            continue
        gens.append(g)
        new = set(span)
        frontier = list(span)
        while frontier:
            x = frontier.pop()
            y = table[x][g]
            if y not in new:
                new.add(y)
                frontier.append(y)
        span = new
    found = set()
    for ks in product(*[range(orders[g]) for g in gens]):
        vals = [None] * h
        vals[0] = 0
        ok = True
        queue = [0]
        while queue and ok:
            x = queue.pop()
            for g, k in zip(gens, ks):
                y = table[x][g]
                val = (vals[x] + k * (e // orders[g])) % e
                if vals[y] is None:
                    vals[y] = val
                    queue.append(y)
                elif vals[y] != val:
                    ok = False
                    break
        if ok and all(v is not None for v in vals):
            found.add(tuple(vals))
    chars = sorted(found, key=lambda v: (any(v), v))
    out = [RingClassCharacter(v, e) for v in chars]
    for chi in out:
        for i in range(h):
            for j in range(h):
                assert (chi.exponents[i] + chi.exponents[j]) % e == chi.exponents[table[i][j]]
    return out
