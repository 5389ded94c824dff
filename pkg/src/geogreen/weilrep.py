"""Weil representation, vector-valued q-expansions, the newform lift and the xi-operator."""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from ._arith import factorint, inverse, as_fraction_matrix, mat_mul
from .newform import CoeffTable
from .qspace import DiscriminantGroup, LatticeModel
from .quadorder import ValidationError


class RelationError(ArithmeticError):
    pass


def e(x) -> complex:
    return cmath.exp(2j * math.pi * float(x))


@dataclass
class WeilRep:
    disc: DiscriminantGroup
    sig_mod8: int
    rhoT: np.ndarray
    rhoS: np.ndarray

    @property
    def dim(self) -> int:
        return self.disc.order

    def relation_residuals(self) -> dict[str, float]:
        S, T = self.rhoS, self.rhoT
        n = self.dim
        P = np.zeros((n, n))
        P[self.disc.neg, np.arange(n)] = 1.0
        ST = S @ T
        return {
            "braid": float(np.abs(ST @ ST @ ST - S @ S).max()),
            "S2": float(np.abs(S @ S - e(-self.sig_mod8 / 4) * P).max()),
            "unitary_S": float(np.abs(S @ S.conj().T - np.eye(n)).max()),
            "unitary_T": float(np.abs(T @ T.conj().T - np.eye(n)).max()),
        }

    def conjugate(self) -> "WeilRep":
        return weil_generators(self.disc.negated(), self.disc.signature[::-1])


def weil_generators(D: DiscriminantGroup, signature: tuple[int, int] | None = None, check: float = 1e-9) -> WeilRep:
    """rhoT e_mu = e(q(mu)) e_mu and rhoS e_mu = e((q-p)/8)/sqrt|D| sum_nu e(-(mu,nu)) e_nu."""
    p, q = signature if signature is not None else D.signature
    n = D.order
    L = D.level
    rhoT = np.diag(np.exp(2j * np.pi * D.qnum / L))
    B = D.bilinear_num
    rhoS = e((q - p) / 8) / math.sqrt(n) * np.exp(-2j * np.pi * B / L)
    W = WeilRep(D, (p - q) % 8, rhoT, rhoS)
    if check is not None:
        res = W.relation_residuals()
        bad = {k: v for k, v in res.items() if v > check}
        if bad:
            raise RelationError(f"Weil relations fail: {bad}")
    return W


def sl2_word(gamma) -> list[tuple[str, int]]:
    """Write gamma as a word in S and T^k (as a product, left to right).

    Uses the euclidean algorithm on the first column; the residual is +-T^k.
    """
    a, b, c, d = (int(x) for x in np.asarray(gamma).ravel())
    if a * d - b * c != 1:
        raise ValidationError("matrix is not in SL2(Z)")
    # reduce M = [[a,b],[c,d]] from the left: S^{-1} T^{-k} M ...
    word: list[tuple[str, int]] = []
    M = [a, b, c, d]
    while M[2] != 0:
        a, b, c, d = M
        k = a // c
        # M = T^k * S * M' with M' = S^{-1} T^{-k} M
        word.append(("T", k))
        word.append(("S", 1))
        a2, b2 = a - k * c, b - k * d  # T^{-k} M
        # S^{-1} = [[0,1],[-1,0]]
        M = [c, d, -a2, -b2]
    a, b, c, d = M
    if a == 1:
        word.append(("T", b))
    else:  # -T^{-b}: -I = S^2
        word.append(("S", 2))
        word.append(("T", -b))
    return word


def rho_of_gamma(W: WeilRep, gamma) -> np.ndarray:
    out = np.eye(W.dim, dtype=complex)
    Tdiag = np.diag(W.rhoT)
    for g, k in sl2_word(gamma):
        if g == "T":
            out = out * (Tdiag**k)[None, :]
        else:
            for _ in range(k):
                out = out @ W.rhoS
    return out


# -- vector-valued q-expansions -------------------------------------------------------


@dataclass
class VectorQExpansion:
    """sum_mu sum_n c(mu, n/denom) e(n tau / denom) 1_mu."""

    disc: DiscriminantGroup
    weight: float
    denom: int
    coeffs: dict[tuple[int, int], complex] = field(default_factory=dict)

    def check_support(self) -> None:
        for (mu, n), c in self.coeffs.items():
            if c != 0 and (Fraction(n, self.denom) - self.disc.q_values[mu]) % 1 != 0:
                raise ValidationError(f"coefficient at (mu={mu}, n={n}/{self.denom}) off the q(mu) mod 1 lattice")

    def scaled(self, lam: complex) -> "VectorQExpansion":
        return VectorQExpansion(self.disc, self.weight, self.denom, {k: lam * v for k, v in self.coeffs.items()})

    def __add__(self, other: "VectorQExpansion") -> "VectorQExpansion":
        if other.denom != self.denom:
            den = math.lcm(self.denom, other.denom)
            return self.rescaled(den) + other.rescaled(den)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return VectorQExpansion(self.disc, self.weight, self.denom, out)

    def rescaled(self, denom: int) -> "VectorQExpansion":
        f = denom // self.denom
        return VectorQExpansion(self.disc, self.weight, denom, {(mu, n * f): c for (mu, n), c in self.coeffs.items()})

    def coefficient(self, mu: int, m: Fraction) -> complex:
        m = Fraction(m) * self.denom
        if m.denominator != 1:
            return 0.0
        return self.coeffs.get((mu, int(m)), 0.0)

    def arrays(self):
        keys = sorted(self.coeffs)
        mu = np.array([k[0] for k in keys], dtype=np.int64)
        n = np.array([k[1] for k in keys], dtype=np.float64)
        c = np.array([self.coeffs[k] for k in keys], dtype=complex)
        return mu, n, c

    def evaluate(self, tau: complex) -> np.ndarray:
        mu, n, c = self.arrays()
        out = np.zeros(self.disc.order, dtype=complex)
        if len(c):
            np.add.at(out, mu, c * np.exp(2j * np.pi * n * tau / self.denom))
        return out

    def min_exponent(self) -> Fraction:
        return min((Fraction(n, self.denom) for (_, n), c in self.coeffs.items() if c != 0), default=Fraction(0))

    def to_json(self) -> dict:
        return {
            "denom": self.denom,
            "weight": self.weight,
            "entries": [
                {"mu_index": mu, "n": n, "re": float(np.real(c)), "im": float(np.imag(c))}
                for (mu, n), c in sorted(self.coeffs.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: dict, disc: DiscriminantGroup, key: str = "entries") -> "VectorQExpansion":
        coeffs = {}
        for ent in obj.get(key, []):
            coeffs[(int(ent["mu_index"]), int(ent["n"]))] = complex(ent["re"], ent.get("im", 0.0))
        f = cls(disc, obj.get("weight", 0), int(obj["denom"]), coeffs)
        f.check_support()
        return f


def pairing(f: np.ndarray, g: np.ndarray) -> complex:
    """C-bilinear pairing sum_mu f_mu g_mu of two evaluated vectors."""
    return complex(np.dot(f, g))


# -- the newform lift -----------------------------------------------------------------


S_CONVENTIONS = ("induced", "prime-divisors", "all-divisors")


def _squarefree_primes(N: int) -> list[int]:
    fac = factorint(N)
    if any(e > 1 for e in fac.values()):
        raise ValidationError("the lift is implemented for squarefree N")
    return sorted(fac)


def lift_weights(D: DiscriminantGroup, N: int) -> np.ndarray:
    """Per-coset weight prod_{p | N, mu_p = 0} (1 - p), where mu_p = 0 iff (N/p) mu = 0."""
    w = np.ones(D.order)
    for p in _squarefree_primes(N):
        k = N // p
        for i in range(D.order):
            if D.scalar(k, i) == 0:
                w[i] *= 1 - p
    return w


def lift_newform(T: CoeffTable, L: LatticeModel, N: int, s_convention: str = "induced", M: int | None = None) -> VectorQExpansion:
    """g_mu = sum_{m > 0, m = N q(mu) mod N} c_f(m) s e(m tau / N).

    ``induced`` uses the coset weights of ``lift_weights``: this is the lift that is
    modular for the level-N lattice, and it agrees with c_f(m) for gcd(m, N) = 1.
    The two divisor readings use s(m) = 2^{omega(gcd)} or 2^{d(gcd)} and are kept
    for comparison.
    """
    if s_convention not in S_CONVENTIONS:
        raise ValidationError(f"unknown s_convention {s_convention!r}")
    D = L.disc
    M = T.M if M is None else min(M, T.M)
    primes = _squarefree_primes(N)
    coeffs: dict[tuple[int, int], complex] = {}
    w = lift_weights(D, N) if s_convention == "induced" else None
    for mu in range(D.order):
        r = D.q_values[mu] * N
        if r.denominator != 1:
            raise ValidationError("N*q(mu) is not integral: lattice scaling does not match the level")
        r = int(r) % N
        for m in range(r if r else N, M + 1, N):
            c = int(T.coeffs[m])
            if c == 0:
                continue
            if s_convention == "induced":
                s = w[mu]
            else:
                g = math.gcd(m, N)
                k = sum(1 for p in primes if g % p == 0)
                s = 2**k if s_convention == "prime-divisors" else 2 ** _num_divisors(g)
            coeffs[(mu, m)] = c * s
    return VectorQExpansion(D, 2, N, coeffs)


def _num_divisors(n: int) -> int:
    out = 1
    for e_ in factorint(n).values():
        out *= e_ + 1
    return out


def lift_tail_bound(M: int, N: int, v: float, scale: float = 1.0) -> float:
    """Bound for sum_{m > M} |c(m)| e^{-2 pi m v / N} using |c(m)| <= d(m) sqrt(m) <= 2 m."""
    x = 2 * math.pi * v / N
    # sum_{m>M} 2 m e^{-x m} <= 2 e^{-x M} (M/(1-e^-x) + e^-x/(1-e^-x)^2)
    q = math.exp(-x)
    return scale * 2 * q**M * ((M + 1) / (1 - q) + q / (1 - q) ** 2)


def modularity_residual(g: VectorQExpansion, W: WeilRep, taus) -> float:
    """max over tau of |g(-1/tau) tau^{-k} - rhoS g(tau)| / |g(tau)|."""
    worst = 0.0
    for tau in taus:
        lhs = g.evaluate(-1 / tau) * tau ** (-g.weight)
        rhs = W.rhoS @ g.evaluate(tau)
        worst = max(worst, float(np.abs(lhs - rhs).max() / max(np.abs(rhs).max(), 1e-300)))
    return worst


# -- harmonic Maass forms and xi ------------------------------------------------------


@dataclass
class HarmonicMaassInput:
    plus: VectorQExpansion
    minus: list[tuple[int, Fraction, complex]] = field(default_factory=list)

    @property
    def weight(self) -> float:
        return self.plus.weight

    def __post_init__(self):
        for mu, m, _ in self.minus:
            if Fraction(m) >= 0:
                raise ValidationError("minus-part exponents must be negative")

    def evaluate(self, tau: complex) -> np.ndarray:
        out = self.plus.evaluate(tau)
        v = tau.imag
        l = self.weight
        for mu, m, c in self.minus:
            m = float(m)
            out[mu] += c * float(mpmath.gammainc(1 - l, 4 * math.pi * abs(m) * v)) * cmath.exp(2j * math.pi * m * tau)
        return out

    def c_plus(self, mu: int, m) -> complex:
        return self.plus.coefficient(mu, Fraction(m))

    def to_json(self) -> dict:
        out = self.plus.to_json()
        den = self.plus.denom
        out["minus"] = [
            {"mu_index": mu, "n": int(Fraction(m) * den), "re": float(np.real(c)), "im": float(np.imag(c))} for mu, m, c in self.minus
        ]
        return out

    @classmethod
    def from_json(cls, obj: dict, disc: DiscriminantGroup) -> "HarmonicMaassInput":
        plus = VectorQExpansion.from_json(obj, disc)
        den = plus.denom
        minus = [(int(t["mu_index"]), Fraction(int(t["n"]), den), complex(t["re"], t.get("im", 0.0))) for t in obj.get("minus", [])]
        return cls(plus, minus)

    @classmethod
    def load(cls, path, disc: DiscriminantGroup) -> "HarmonicMaassInput":
        return cls.from_json(json.loads(Path(path).read_text()), disc)


def xi_image(H: HarmonicMaassInput, validate: bool = True, tol: float = 1e-6) -> VectorQExpansion:
    """b(mu, n) = -(4 pi n)^{1-l} conj(c^-(mu, -n)); lives on the negated discriminant form."""
    l = H.weight
    den = H.plus.denom
    coeffs: dict[tuple[int, int], complex] = {}
    for mu, m, c in H.minus:
        n = -Fraction(m)
        key = (mu, int(n * den))
        coeffs[key] = coeffs.get(key, 0) - (4 * math.pi * float(n)) ** (1 - l) * np.conj(c)
    out = VectorQExpansion(H.plus.disc.negated(), 2 - l, den, coeffs)
    if validate and H.minus:
        res = xi_validation_residual(H, out)
        if res > tol:
            raise ValidationError(f"xi closed form disagrees with the differential operator (residual {res:.2e})")
    return out


def xi_validation_residual(H: HarmonicMaassInput, image: VectorQExpansion, taus=(0.13 + 0.9j, -0.31 + 1.2j, 0.4 + 0.75j), h: float = 1e-5) -> float:
    """Compare image(tau) with 2i v^l conj(d f / d tau-bar) from central differences."""
    l = H.weight
    worst = 0.0
    for tau in taus:
        fu = (H.evaluate(tau + h) - H.evaluate(tau - h)) / (2 * h)
        fv = (H.evaluate(tau + 1j * h) - H.evaluate(tau - 1j * h)) / (2 * h)
        dbar = 0.5 * (fu + 1j * fv)
        xi = 2j * tau.imag**l * np.conj(dbar)
        ref = image.evaluate(tau)
        worst = max(worst, float(np.abs(xi - ref).max() / max(np.abs(ref).max(), 1e-300)))
    return worst


# -- sublattices ------------------------------------------------------------------------


def _coords_in(L: LatticeModel, amb_vec) -> list[Fraction]:
    """Coordinates of an ambient vector in the basis of L (exact)."""
    B = as_fraction_matrix(L.basis_matrix)
    Binv = inverse(B)
    return [sum((Fraction(amb_vec[j]) * Binv[j][i] for j in range(len(amb_vec))), Fraction(0)) for i in range(len(B))]


def restrict_to_sublattice(f: VectorQExpansion, L: LatticeModel, M: LatticeModel) -> VectorQExpansion:
    """Pull back f on L^vee/L to M^vee/M for M subset L of finite index (same scale)."""
    if L.scale != M.scale or L.ambient != M.ambient:
        raise ValidationError("sublattice must live in the same space with the same scale")
    for row in M.basis_matrix:
        if any(x.denominator != 1 for x in _coords_in(L, row)):
            raise ValidationError("M is not contained in L")
    DL, DM = L.disc, M.disc
    BM = as_fraction_matrix(M.basis_matrix)
    # dual vector of L in lattice coords x: pairing with basis is S x, integral iff in L^vee
    SL = L.scaled_gram
    image = {}
    for i, mu in enumerate(DM.coset_reps):
        amb = [sum((mu[k] * BM[k][j] for k in range(len(BM))), Fraction(0)) for j in range(len(BM[0]))]
        x = _coords_in(L, amb)
        Sx = [sum((SL[a][b] * x[b] for b in range(len(x))), Fraction(0)) for a in range(len(x))]
        if all(v.denominator == 1 for v in Sx):
            image[i] = DL.index_of(x)
    coeffs = {}
    by_L: dict[int, list[int]] = {}
    for i, j in image.items():
        by_L.setdefault(j, []).append(i)
    for (j, n), c in f.coeffs.items():
        for i in by_L.get(j, []):
            coeffs[(i, n)] = c
    return VectorQExpansion(DM, f.weight, f.denom, coeffs)
