"""Coefficients of the weight-two newform attached to an elliptic curve over Q."""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import gcd, isqrt
from pathlib import Path

import numpy as np

from . import cache as _cache
from ._arith import factorint, primes_upto
from .quadorder import RealQuadraticField, ValidationError, kronecker

MAX_COUNT_PRIME = 1 << 20


@dataclass(frozen=True)
class CurveSpec:
    label: str
    a_invariants: tuple[int, int, int, int, int]
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("conductor must be positive")
        if self.discriminant == 0:
            raise ValidationError("singular Weierstrass equation")

    @property
    def b_invariants(self) -> tuple[int, int, int, int]:
        a1, a2, a3, a4, a6 = self.a_invariants
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        return b2, b4, b6, b8

    @property
    def c4(self) -> int:
        b2, b4, _, _ = self.b_invariants
        return b2 * b2 - 24 * b4

    @property
    def discriminant(self) -> int:
        b2, b4, b6, b8 = self.b_invariants
        return -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6

    @classmethod
    def from_json(cls, obj: dict) -> "CurveSpec":
        return cls(str(obj["label"]), tuple(int(x) for x in obj["a"]), int(obj["N"]))

    @classmethod
    def load(cls, path) -> "CurveSpec":
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        return {"label": self.label, "a": list(self.a_invariants), "N": self.N}


KNOWN_CURVES = {
    "11a": CurveSpec("11a", (0, -1, 1, -10, -20), 11),
    "14a": CurveSpec("14a", (1, 0, 1, 4, -6), 14),
    "37a": CurveSpec("37a", (0, 0, 1, -1, 0), 37),
}


def _affine_count(E: CurveSpec, p: int) -> int:
    """Affine points of the (possibly singular) reduction mod p."""
    a1, a2, a3, a4, a6 = (a % p for a in E.a_invariants)
    x = np.arange(p, dtype=np.int64)
    if p == 2:
        total = 0
        for xv in (0, 1):
            for yv in (0, 1):
                if (yv * yv + a1 * xv * yv + a3 * yv - (xv**3 + a2 * xv * xv + a4 * xv + a6)) % 2 == 0:
                    total += 1
        return total
    # (2y + a1 x + a3)^2 = g(x)
    g = (4 * (((x * x) % p * x) % p + a2 * (x * x % p) + a4 * x + a6) + (a1 * x + a3) ** 2) % p
    sq = np.zeros(p, dtype=np.int64)
    sq[(x * x) % p] = 1
    chi = np.where(g == 0, 0, np.where(sq[g] == 1, 1, -1))
    return int(p + chi.sum())


def reduction_type(E: CurveSpec, p: int) -> str:
    if E.discriminant % p:
        return "good"
    return "multiplicative" if E.c4 % p else "additive"


def ap_point_count(E: CurveSpec, p: int) -> int:
    """a_p = p + 1 - #E(F_p); at bad p the singular point is counted, giving +-1 or 0."""
    if p >= MAX_COUNT_PRIME:
        raise ValidationError(f"prime {p} exceeds the naive counting bound")
    ap = p - _affine_count(E, p)
    kind = reduction_type(E, p)
    if kind == "good":
        if ap * ap > 4 * p:
            raise ArithmeticError(f"Hasse bound violated at p={p}")
    elif kind == "multiplicative":
        if ap not in (1, -1):
            raise ArithmeticError(f"multiplicative reduction at {p} but a_p={ap}; model not minimal?")
    elif ap != 0:
        raise ArithmeticError(f"additive reduction at {p} but a_p={ap}; model not minimal?")
    return ap


@dataclass(frozen=True)
class CoeffTable:
    coeffs: np.ndarray  # coeffs[m] = c_f(m), coeffs[0] = 0
    source: str = "point-count"

    @property
    def M(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, m: int) -> int:
        return int(self.coeffs[m])


def hecke_extend(ap: dict[int, int], M: int, N: int) -> np.ndarray:
    """c_f(1..M) from prime coefficients by multiplicativity and the Hecke recursion."""
    spf = np.zeros(M + 1, dtype=np.int64)
    for p in primes_upto(M):
        blk = spf[p::p]
        blk[blk == 0] = p
    c = [0] * (M + 1)
    if M >= 1:
        c[1] = 1
    pk: dict[int, list[int]] = {}
    for m in range(2, M + 1):
        p = int(spf[m])
        k, r = 0, m
        while r % p == 0:
            r //= p
            k += 1
        seq = pk.setdefault(p, [1, ap[p]])
        while len(seq) <= k:
            j = len(seq)
            seq.append(ap[p] * seq[j - 1] - (p * seq[j - 2] if N % p else 0))
        c[m] = c[r] * seq[k]
    return np.array(c, dtype=np.int64)


def coefficients(E: CurveSpec, M: int, cache: Path | None = None) -> CoeffTable:
    if M < 1:
        raise ValidationError("M must be positive")
    path = None
    if cache is not None:
        path = Path(cache) / f"coeffs_{E.label}_{'_'.join(map(str, E.a_invariants))}_{M}.csv"
        if path.exists():
            try:
                T = read_coeff_csv(path)
                if T.M >= M and verify_table(T, E.N, samples=200):
                    return CoeffTable(T.coeffs[: M + 1], "point-count")
            except (_cache.CacheCorruption, ValueError):
                pass
    ap = {p: ap_point_count(E, p) for p in primes_upto(M)}
    T = CoeffTable(hecke_extend(ap, M, E.N), "point-count")
    if path is not None:
        write_coeff_csv(path, T)
    return T


def verify_table(T: CoeffTable, N: int, samples: int = 200) -> bool:
    """Spot-check c(1)=1 and multiplicativity on a deterministic sample of coprime pairs."""
    c = T.coeffs
    if T.M < 1 or c[1] != 1:
        return False
    M = T.M
    k = 0
    for m in range(2, M + 1):
        for n in range(m + 1, M // m + 1):
            if gcd(m, n) == 1:
                if c[m * n] != c[m] * c[n]:
                    return False
                k += 1
                if k >= samples:
                    return True
    return True


def write_coeff_csv(path: Path, T: CoeffTable) -> None:
    _cache.write_csv(path, ["m", "c"], ([m, int(T.coeffs[m])] for m in range(1, T.M + 1)))


def read_coeff_csv(path: Path) -> CoeffTable:
    rows = _cache.read_csv(path, ["m", "c"])
    vals = [0]
    for i, (m, c) in enumerate(rows, start=1):
        if int(m) != i:
            raise _cache.CacheCorruption("coefficient file must be sorted without gaps")
        vals.append(int(c))
    return CoeffTable(np.array(vals, dtype=np.int64), "file")


def twist_coefficients(T: CoeffTable, F: RealQuadraticField) -> CoeffTable:
    c = np.array([0] + [kronecker(F, m) * int(T.coeffs[m]) for m in range(1, T.M + 1)], dtype=np.int64)
    return CoeffTable(c, T.source)


@dataclass(frozen=True)
class LevelSplit:
    N_plus: int
    N_minus: int
    ehh_holds: bool
    sign: int


def level_split(N: int, F: RealQuadraticField) -> LevelSplit:
    if gcd(N, F.d_K) > 1:
        raise ValidationError("level must be coprime to d_K")
    Np = Nm = 1
    fac = factorint(N)
    for q, e in fac.items():
        if kronecker(F, q) == 1:
            Np *= q**e
        else:
            Nm *= q**e
    minus_primes = [q for q in fac if kronecker(F, q) == -1]
    squarefree = all(fac[q] == 1 for q in minus_primes)
    return LevelSplit(Np, Nm, squarefree and len(minus_primes) % 2 == 1, kronecker(F, N) if N > 1 else 1)
