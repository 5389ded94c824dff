"""Quadratic spaces attached to an ideal class, lattices and discriminant groups.

Conventions: a Gram matrix holds the bilinear form (x, y) = Q(x+y) - Q(x) - Q(y),
so Q(x) = x^T G x / 2.  Lattice generators are the rows of ``basis_matrix``
(coordinates in the ambient basis).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from itertools import product

import numpy as np

from ._arith import (
    KElt,
    Matrix,
    as_fraction_matrix,
    det,
    inverse,
    mat_mul,
    signature,
    smith_normal_form,
    squarefree_part,
    transpose,
)
from .quadorder import FractionalIdeal, ValidationError, ideal_norm_form

MAX_DISC_ORDER = 10**6


@dataclass(frozen=True)
class QuadraticSpaceModel:
    rank: int
    basis_tags: tuple[str, ...]
    gram: tuple[tuple[Fraction, ...], ...]
    signature: tuple[int, int]

    @classmethod
    def from_gram(cls, gram, tags=None, expected=None) -> "QuadraticSpaceModel":
        G = as_fraction_matrix(gram)
        n = len(G)
        if any(G[i][j] != G[j][i] for i in range(n) for j in range(n)):
            raise ValidationError("Gram matrix must be symmetric")
        if det(G) == 0:
            raise ValidationError("degenerate Gram matrix")
        sig = signature(G)
        if expected is not None and sig != tuple(expected):
            raise ValidationError(f"signature {sig} differs from declared {expected}")
        tags = tuple(tags) if tags else tuple(f"e{i + 1}" for i in range(n))
        return cls(n, tags, tuple(tuple(r) for r in G), sig)

    @property
    def gram_matrix(self) -> Matrix:
        return [list(r) for r in self.gram]

    def Q(self, x) -> Fraction:
        G = self.gram
        return sum((Fraction(x[i]) * G[i][j] * Fraction(x[j]) for i in range(self.rank) for j in range(self.rank)), Fraction(0)) / 2

    def negated(self) -> "QuadraticSpaceModel":
        return QuadraticSpaceModel(self.rank, self.basis_tags, tuple(tuple(-x for x in r) for r in self.gram), self.signature[::-1])


def _norm_form_gram(I: FractionalIdeal) -> list[list[Fraction]]:
    A, B, C = ideal_norm_form(I)
    return [[Fraction(2 * A), Fraction(B)], [Fraction(B), Fraction(2 * C)]]


def build_space(I: FractionalIdeal, variant: str) -> QuadraticSpaceModel:
    """Gram data for the variants qA, QA (rank 4) and V1, V2 (rank 2).

    qA uses the rational coordinates (x, y) of the hyperbolic part followed by the
    ideal basis (alpha, z); QA uses w1..w4 = (alpha,0), (z,0), (0,alpha), (0,z).
    """
    G2 = _norm_form_gram(I)
    if variant == "V2":
        return QuadraticSpaceModel.from_gram(G2, ("alpha", "z"), (1, 1))
    if variant == "V1":
        return QuadraticSpaceModel.from_gram([[-x for x in r] for r in G2], ("alpha", "z"), (1, 1))
    Z = Fraction(0)
    if variant == "QA":
        G = [G2[0] + [Z, Z], G2[1] + [Z, Z], [Z, Z, -G2[0][0], -G2[0][1]], [Z, Z, -G2[1][0], -G2[1][1]]]
        return QuadraticSpaceModel.from_gram(G, ("w1", "w2", "w3", "w4"), (2, 2))
    if variant == "qA":
        G = [[Z, Fraction(-1), Z, Z], [Fraction(-1), Z, Z, Z], [Z, Z] + G2[0], [Z, Z] + G2[1]]
        return QuadraticSpaceModel.from_gram(G, ("x", "y", "alpha", "z"), (2, 2))
    raise ValidationError(f"unknown variant {variant!r}")


def paper_basis_gram_qA(I: FractionalIdeal) -> list[list[KElt]]:
    """Gram matrix of q_A in the K-valued basis v1=(alpha, z, 0), v2=(alpha, -z, 0), v3=(0,0,alpha), v4=(0,0,z).

    The hyperbolic coordinates are extended K-linearly, so entries lie in K.
    """
    al, z = I.alpha, I.z
    n = I.norm

    def B_norm(x: KElt, y: KElt) -> KElt:
        return (x * y.conj() + y * x.conj()) * Fraction(1) / n

    zero = al * 0
    vecs = [(al, z, None), (al, -z, None), (None, None, al), (None, None, z)]

    def pair(u, v):
        x1, y1, l1 = u
        x2, y2, l2 = v
        out = zero
        if x1 is not None and x2 is not None:
            out = out - (x1 * y2 + x2 * y1)
        if l1 is not None and l2 is not None:
            out = out + B_norm(l1, l2)
        return out

    return [[pair(u, v) for v in vecs] for u in vecs]


@dataclass(frozen=True)
class SpaceInvariants:
    square_class: int
    delta_sq: Fraction
    centre: str


def space_invariants(V: QuadraticSpaceModel) -> SpaceInvariants:
    if V.rank != 4:
        raise ValidationError("invariants are defined for rank-4 spaces")
    dV = det(V.gram_matrix)
    sq = squarefree_part(dV)
    return SpaceInvariants(sq, dV / 16, "split" if sq == 1 else "field")


# -- lattices ------------------------------------------------------------------


def _rational_gcd(xs) -> Fraction:
    xs = [Fraction(x) for x in xs if x != 0]
    if not xs:
        return Fraction(0)
    num = reduce(math.gcd, (x.numerator for x in xs))
    den = reduce(math.lcm, (x.denominator for x in xs))
    return Fraction(num, den)


def minimal_even_scale(G: Matrix) -> Fraction:
    """Smallest positive rational s with s*G integral and of even diagonal."""
    n = len(G)
    content = _rational_gcd([G[i][j] for i in range(n) for j in range(n) if i != j] + [G[i][i] / 2 for i in range(n)])
    return 1 / content


@dataclass(frozen=True)
class LatticeModel:
    ambient: QuadraticSpaceModel
    basis_matrix: tuple[tuple[Fraction, ...], ...]
    scale: Fraction
    name: str = ""
    ideal: FractionalIdeal | None = field(default=None, compare=False, repr=False)

    @classmethod
    def make(cls, ambient: QuadraticSpaceModel, basis, scale=None, name: str = "", ideal=None) -> "LatticeModel":
        Bm = as_fraction_matrix(basis)
        G = mat_mul(mat_mul(Bm, ambient.gram_matrix), transpose(Bm))
        s = minimal_even_scale(G) if scale is None else Fraction(scale)
        L = cls(ambient, tuple(tuple(r) for r in Bm), s, name, ideal)
        L.check_scale()
        return L

    @property
    def rank(self) -> int:
        return len(self.basis_matrix)

    @cached_property
    def gram(self) -> Matrix:
        """Gram matrix of the lattice basis in the unscaled form."""
        Bm = [list(r) for r in self.basis_matrix]
        return mat_mul(mat_mul(Bm, self.ambient.gram_matrix), transpose(Bm))

    @cached_property
    def scaled_gram(self) -> list[list[int]]:
        S = [[x * self.scale for x in r] for r in self.gram]
        if any(x.denominator != 1 for r in S for x in r) or any(S[i][i].numerator % 2 for i in range(len(S))):
            raise ValidationError("scaled Gram matrix is not even integral")
        return [[int(x) for x in r] for r in S]

    @property
    def signature(self) -> tuple[int, int]:
        return signature(as_fraction_matrix(self.scaled_gram))

    def check_scale(self) -> None:
        _ = self.scaled_gram
        if minimal_even_scale(self.gram) != self.scale:
            raise ValidationError("scale is not minimal")

    @cached_property
    def disc(self) -> "DiscriminantGroup":
        return dual_and_discriminant(self)

    def level_unscaled(self) -> Fraction:
        """Smallest positive a with a*Q(lambda) integral for lambda in the dual of the unscaled lattice."""
        Gi = inverse(self.gram)
        n = self.rank
        vals = [Gi[i][i] / 2 for i in range(n)] + [Gi[i][j] for i in range(n) for j in range(n) if i != j]
        # a*Q integral on the dual <=> a * (content of the dual form)^-1 ... via denominators
        den = reduce(math.lcm, (Fraction(v).denominator for v in vals), 1)
        num = reduce(math.gcd, (int(Fraction(v) * den) for v in vals), 0)
        return Fraction(den, num) if num else Fraction(0)

    def to_json(self) -> dict:
        D = self.disc
        return {
            "gram": [[[x.numerator, x.denominator] for x in r] for r in self.gram],
            "scale": [self.scale.numerator, self.scale.denominator],
            "disc_group": {
                "factors": D.invariant_factors,
                "cosets": [
                    {"mu": [[x.numerator, x.denominator] for x in mu], "q": [q.numerator, q.denominator]}
                    for mu, q in zip(D.coset_reps, D.q_values)
                ],
            },
        }


def lattice_from_level(I: FractionalIdeal, N: int) -> tuple[LatticeModel, LatticeModel, LatticeModel]:
    """N^{-1} a (+) N^{-1} a inside (V_A, Q_A) and its two rank-2 summands L_{A,2}, L_{A,1}.

    Returns (L_A, L_A1, L_A2); L_A1 sits in the negative summand.
    """
    if N < 1:
        raise ValidationError("N must be positive")
    QA = build_space(I, "QA")
    r = Fraction(1, N)
    Z = Fraction(0)
    L = LatticeModel.make(QA, [[r, Z, Z, Z], [Z, r, Z, Z], [Z, Z, r, Z], [Z, Z, Z, r]], name=f"L_A(N={N})", ideal=I)
    V1, V2 = build_space(I, "V1"), build_space(I, "V2")
    L1 = LatticeModel.make(V1, [[r, Z], [Z, r]], name=f"L_A1(N={N})", ideal=I)
    L2 = LatticeModel.make(V2, [[r, Z], [Z, r]], name=f"L_A2(N={N})", ideal=I)
    return L, L1, L2


def eichler_lattice(I: FractionalIdeal, N: int) -> LatticeModel:
    """Level-N lattice Z E1 + Z F1 + Z E2 + N Z F2 in (V_A, Q_A).

    E_i = (e_i, e_i) for the ideal basis e_i and F_j = (y_j, -y_j) with
    2 B(e_i, y_j) = delta_ij; the result is U + U(N), discriminant group (Z/N)^2.
    """
    QA = build_space(I, "QA")
    G2 = _norm_form_gram(I)
    Gi = inverse(G2)
    Z = Fraction(0)
    E1 = [Fraction(1), Z, Fraction(1), Z]
    E2 = [Z, Fraction(1), Z, Fraction(1)]
    ys = [[Gi[j][k] / 2 for k in range(2)] for j in range(2)]
    F1 = ys[0] + [-x for x in ys[0]]
    F2 = ys[1] + [-x for x in ys[1]]
    # order (E1, F1, E2, N F2) so the Gram is block hyperbolic
    return LatticeModel.make(QA, [E1, F1, E2, [N * x for x in F2]], scale=1, name=f"Eichler(N={N})", ideal=I)


def unary_lattice(n: int) -> LatticeModel:
    """Rank-one lattice Z with Q(x) = n x^2 (positive definite test model)."""
    V = QuadraticSpaceModel.from_gram([[2 * n]])
    return LatticeModel.make(V, [[1]], scale=1, name=f"A1({n})")


def lattice_from_gram(gram, name: str = "") -> LatticeModel:
    V = QuadraticSpaceModel.from_gram(gram)
    n = V.rank
    return LatticeModel.make(V, [[int(i == j) for j in range(n)] for i in range(n)], name=name)


# -- discriminant groups --------------------------------------------------------


@dataclass
class DiscriminantGroup:
    """L^vee / L of the scaled even model.

    Elements are indexed 0..n-1 by mixed radix over the invariant factors; index 0 is 0.
    ``coset_reps`` are in lattice coordinates, reduced into [0, 1).
    """

    invariant_factors: list[int]
    gens: list[list[Fraction]]
    scaled_gram: list[list[int]]
    signature: tuple[int, int]
    coset_reps: list[tuple[Fraction, ...]] = field(default_factory=list)
    q_values: list[Fraction] = field(default_factory=list)
    level: int = 1
    qnum: np.ndarray | None = None  # q(mu) * level mod level
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def order(self) -> int:
        return len(self.q_values)

    def __len__(self) -> int:
        return self.order

    def index_of(self, vec) -> int:
        key = tuple(Fraction(x) % 1 for x in vec)
        return self._index[key]

    def digits(self, i: int) -> list[int]:
        out = []
        for d in reversed(self.invariant_factors):
            out.append(i % d)
            i //= d
        return out[::-1]

    def from_digits(self, ks) -> int:
        i = 0
        for k, d in zip(ks, self.invariant_factors):
            i = i * d + (k % d)
        return i

    @cached_property
    def neg(self) -> np.ndarray:
        return np.array([self.from_digits([-k for k in self.digits(i)]) for i in range(self.order)], dtype=np.int64)

    def add(self, i: int, j: int) -> int:
        return self.from_digits([a + b for a, b in zip(self.digits(i), self.digits(j))])

    def scalar(self, k: int, i: int) -> int:
        return self.from_digits([k * a for a in self.digits(i)])

    @cached_property
    def bilinear_num(self) -> np.ndarray:
        """(mu, nu) * level mod level as an integer matrix."""
        n = self.order
        if n == 0:
            return np.zeros((0, 0), dtype=np.int64)
        r = len(self.invariant_factors)
        S = self.scaled_gram
        Bg = [[_pair(self.gens[a], self.gens[b], S) for b in range(r)] for a in range(r)]
        M = np.array([[int(x * self.level) % self.level for x in row] for row in Bg], dtype=np.int64) if r else np.zeros((0, 0), np.int64)
        digs = np.array([self.digits(i) for i in range(n)], dtype=np.int64).reshape(n, r)
        return (digs @ M @ digs.T) % self.level

    def bilinear(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.bilinear_num[i, j]), self.level)

    def q(self, i: int) -> Fraction:
        return self.q_values[i]

    def negated(self) -> "DiscriminantGroup":
        """The same group with quadratic form -q (used for the conjugate representation)."""
        Sm = [[-x for x in r] for r in self.scaled_gram]
        D = _build_group(self.invariant_factors, self.gens, Sm, self.signature[::-1])
        return D

    def is_isotropic(self, i: int) -> bool:
        return self.q_values[i] == 0


def _pair(u, v, S) -> Fraction:
    n = len(S)
    return sum((u[i] * S[i][j] * v[j] for i in range(n) for j in range(n)), Fraction(0))


def _build_group(factors, gens, S, sig) -> DiscriminantGroup:
    r = len(factors)
    reps, qs, index = [], [], {}
    n = len(S)
    for ks in product(*[range(d) for d in factors]):
        v = [sum((Fraction(k) * g[t] for k, g in zip(ks, gens)), Fraction(0)) % 1 for t in range(n)]
        q = (_pair(v, v, S) / 2) % 1
        index[tuple(v)] = len(reps)
        reps.append(tuple(v))
        qs.append(q)
    level = reduce(math.lcm, (q.denominator for q in qs), 1)
    if r:
        level = math.lcm(level, *(_pair(gens[a], gens[b], S).denominator for a in range(r) for b in range(r)))
    qnum = np.array([int(q * level) for q in qs], dtype=np.int64)
    return DiscriminantGroup(list(factors), gens, S, sig, reps, qs, level, qnum, index)


def dual_and_discriminant(L: LatticeModel, max_order: int = MAX_DISC_ORDER) -> DiscriminantGroup:
    S = L.scaled_gram
    n = len(S)
    order = abs(det(as_fraction_matrix(S)))
    if order > max_order:
        raise ValidationError(f"discriminant group of order {order} exceeds bound {max_order}")
    diag, U, V = smith_normal_form(S)
    Sinv = inverse(as_fraction_matrix(S))
    Uinv = inverse(as_fraction_matrix(U))
    factors, gens = [], []
    for i, d in enumerate(diag):
        if d == 1:
            continue
        col = [Uinv[r][i] for r in range(n)]
        g = [sum((Sinv[a][b] * col[b] for b in range(n)), Fraction(0)) for a in range(n)]
        factors.append(d)
        gens.append(g)
    D = _build_group(factors, gens, S, L.signature)
    assert D.order == order
    return D
