"""Exact helpers: checked integers, rational matrices and elements of Q(sqrt(D))."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Sequence

INT_BOUND = 1 << 127


class ArithmeticOverflow(OverflowError):
    pass


def checked(n: int) -> int:
    """Return ``n`` if it fits a signed 128-bit word, otherwise raise."""
    if -INT_BOUND <= n < INT_BOUND:
        return n
    raise ArithmeticOverflow(f"integer {n} exceeds the 128-bit working range")


def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    n = abs(n)
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        if n % p == 0:
            n //= p
        p += 1
    return True


def squarefree_part(q: Fraction | int) -> int:
    """Squarefree integer in the square class of a nonzero rational."""
    q = Fraction(q)
    if q == 0:
        raise ValueError("zero has no square class")
    n = q.numerator * q.denominator
    sign = -1 if n < 0 else 1
    n = abs(n)
    out = 1
    p = 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e % 2:
            out *= p
        p += 1
    return sign * out * n


def factorint(n: int) -> dict[int, int]:
    n = abs(n)
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(range(p * p, n + 1, p)))
    return [i for i, f in enumerate(sieve) if f]


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, x, y) with a*x + b*y = g = gcd(a, b) >= 0."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def gcd3(a: int, b: int, c: int) -> int:
    return gcd(gcd(a, b), c)


# -- rational matrices --------------------------------------------------------

Matrix = list[list[Fraction]]


def as_fraction_matrix(rows: Iterable[Iterable]) -> Matrix:
    return [[Fraction(x) for x in row] for row in rows]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0)) for j in range(len(b[0]))] for i in range(len(a))]


def transpose(a: Matrix) -> Matrix:
    return [list(r) for r in zip(*a)]


def det(a: Matrix) -> Fraction:
    """Exact determinant by fraction-valued Gaussian elimination."""
    m = [list(r) for r in a]
    n = len(m)
    out = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            out = -out
        out *= m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / m[col][col]
            if f:
                for k in range(col, n):
                    m[r][k] -= f * m[col][k]
    return out


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    m = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def signature(a: Matrix) -> tuple[int, int]:
    """(p, q) of a nondegenerate symmetric rational matrix via an exact LDL^T sweep."""
    m = [list(r) for r in a]
    n = len(m)
    pos = neg = 0
    idx = list(range(n))
    while idx:
        k = next((i for i in idx if m[i][i] != 0), None)
        if k is None:
            # all diagonal entries vanish: use a hyperbolic pair
            i = idx[0]
            j = next((j for j in idx[1:] if m[i][j] != 0), None)
            if j is None:
                raise ValueError("degenerate form")
            # replace e_i by e_i + e_j (makes the diagonal nonzero)
            for r in range(n):
                m[r][i] += m[r][j]
            for c in range(n):
                m[i][c] += m[j][c]
            continue
        d = m[k][k]
        if d > 0:
            pos += 1
        else:
            neg += 1
        idx.remove(k)
        for i in idx:
            f = m[i][k] / d
            if f:
                for j in idx:
                    m[i][j] -= f * m[k][j]
        for i in idx:
            m[i][k] = m[k][i] = Fraction(0)
    return pos, neg


def smith_normal_form(a: Sequence[Sequence[int]]) -> tuple[list[int], list[list[int]], list[list[int]]]:
    """Smith form of a square nonsingular integer matrix.

    Returns (diag, U, V) with U*A*V = diag(d_1, ..., d_n), d_i | d_{i+1}, U, V unimodular.
    """
    n = len(a)
    m = [list(map(int, r)) for r in a]
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in m:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    for t in range(n):
        while True:
            nz = [(abs(m[i][j]), i, j) for i in range(t, n) for j in range(t, n) if m[i][j]]
            if not nz:
                raise ValueError("singular matrix")
            _, i, j = min(nz)
            swap_rows(t, i)
            swap_cols(t, j)
            done = True
            for i in range(t + 1, n):
                q = m[i][t] // m[t][t]
                if q:
                    m[i] = [x - q * y for x, y in zip(m[i], m[t])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[t])]
                if m[i][t]:
                    done = False
            for j in range(t + 1, n):
                q = m[t][j] // m[t][t]
                if q:
                    for r in m:
                        r[j] -= q * r[t]
                    for r in V:
                        r[j] -= q * r[t]
                if m[t][j]:
                    done = False
            if not done:
                continue
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, n) if m[i][j] % m[t][t]), None)
            if bad is None:
                break
            i, _ = bad
            m[t] = [x + y for x, y in zip(m[t], m[i])]
            U[t] = [x + y for x, y in zip(U[t], U[i])]
        if m[t][t] < 0:
            m[t] = [-x for x in m[t]]
            U[t] = [-x for x in U[t]]
    return [m[i][i] for i in range(n)], U, V


# -- quadratic field elements --------------------------------------------------


@dataclass(frozen=True)
class KElt:
    """a + b*sqrt(D) with rational a, b."""

    a: Fraction
    b: Fraction
    D: int

    @classmethod
    def make(cls, a, b, D: int) -> "KElt":
        return cls(Fraction(a), Fraction(b), D)

    def _coerce(self, o) -> "KElt":
        if isinstance(o, KElt):
            if o.D != self.D:
                raise ValueError("mixed fields")
            return o
        return KElt(Fraction(o), Fraction(0), self.D)

    def __add__(self, o):
        o = self._coerce(o)
        return KElt(self.a + o.a, self.b + o.b, self.D)

    __radd__ = __add__

    def __neg__(self):
        return KElt(-self.a, -self.b, self.D)

    def __sub__(self, o):
        return self + (-self._coerce(o))

    def __rsub__(self, o):
        return self._coerce(o) - self

    def __mul__(self, o):
        o = self._coerce(o)
        return KElt(self.a * o.a + self.D * self.b * o.b, self.a * o.b + self.b * o.a, self.D)

    __rmul__ = __mul__

    def conj(self) -> "KElt":
        return KElt(self.a, -self.b, self.D)

    def norm(self) -> Fraction:
        return self.a * self.a - self.D * self.b * self.b

    def trace(self) -> Fraction:
        return 2 * self.a

    def inv(self) -> "KElt":
        n = self.norm()
        return KElt(self.a / n, -self.b / n, self.D)

    def __truediv__(self, o):
        return self * self._coerce(o).inv()

    def is_rational(self) -> bool:
        return self.b == 0

    def embed(self) -> tuple[float, float]:
        r = self.D ** 0.5
        return float(self.a) + float(self.b) * r, float(self.a) - float(self.b) * r

    def as_triple(self) -> list[int]:
        """(x, y, den) with self = (x + y sqrt(D)) / den."""
        den = self.a.denominator * self.b.denominator // gcd(self.a.denominator, self.b.denominator)
        return [int(self.a * den), int(self.b * den), den]
