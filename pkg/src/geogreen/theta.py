"""Representation numbers, Hecke theta series, Siegel theta functions and geodesic sets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import cache as _cache
from ._arith import KElt, as_fraction_matrix, inverse, smith_normal_form
from .qspace import DiscriminantGroup, LatticeModel
from .quadorder import (
    FractionalIdeal,
    RingClassCharacter,
    RingClassGroup,
    UnitData,
    ValidationError,
    fundamental_unit,
    ideal_mul,
    ideal_norm_form,
    ideal_scale,
)


class TruncationError(ArithmeticError):
    def __init__(self, msg: str, required_R: float):
        super().__init__(msg)
        self.required_R = required_R


# -- units of orders ------------------------------------------------------------------


def unit_elt(units: UnitData, D: int, which: str = "eps0") -> KElt:
    t, u = units.eps0 if which == "eps0" else (units.t, units.u)
    return KElt.make(Fraction(t, 2), Fraction(u, 2), D)


def order_unit(units: UnitData, D: int, c: int = 1) -> tuple[KElt, int]:
    """Generator (mod +-1) of the unit group of O_c and its norm."""
    e0 = unit_elt(units, D)
    x = e0
    while (x.b * 2) % c != 0 or (x.b * 2).denominator != 1:
        x = x * e0
    return x, int(x.norm())


def norm_one_unit(units: UnitData, D: int, c: int = 1) -> KElt:
    e, n = order_unit(units, D, c)
    return e if n == 1 else e * e


# -- representation numbers ---------------------------------------------------------


@dataclass
class RepCountTable:
    label: str
    entries: dict[Fraction, int]
    M: int
    mode: str = "ideal"

    def __getitem__(self, m) -> int:
        return self.entries.get(Fraction(m), 0)

    def to_rows(self):
        return [[m.numerator, m.denominator, c] for m, c in sorted(self.entries.items())]

    def write(self, path: Path) -> None:
        _cache.write_csv(path, ["m_num", "m_den", "count"], self.to_rows())

    @classmethod
    def read(cls, path: Path, label: str, M: int, mode: str = "ideal") -> "RepCountTable":
        rows = _cache.read_csv(path, ["m_num", "m_den", "count"])
        return cls(label, {Fraction(int(a), int(b)): int(c) for a, b, c in rows}, M, mode)


def _coords(I: FractionalIdeal, x: KElt) -> tuple[Fraction, Fraction]:
    c1 = x.b / I.z.b
    c0 = (x.a - c1 * I.z.a) / I.alpha.a
    return c0, c1


def rep_counts(I: FractionalIdeal, M: int, units: UnitData | None = None, mu=None, mode: str = "ideal", label: str = "") -> RepCountTable:
    """Orbit counts of Q_a(x) = m (0 < m <= M) on mu + a.

    mode ``ideal``: |Q_a(x)| = m modulo the full unit group; equals the number of
    integral ideals of norm m in the inverse class.  mode ``positive``: Q_a(x) = +m
    modulo +-eps1 (norm-one unit); both agree when N(eps0) = -1.
    Orbit representatives: first embedding positive and 1 <= |x/x'| < eps^2.
    """
    D = I.alpha.D
    if units is None:
        from .quadorder import RealQuadraticField

        d = D if D % 4 == 1 else D // 4
        units = fundamental_unit(RealQuadraticField(d, D))
    if mode == "ideal":
        eps, _ = order_unit(units, D, I.conductor)
    elif mode == "positive":
        eps = norm_one_unit(units, D, I.conductor)
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    mu = (Fraction(0), Fraction(0)) if mu is None else tuple(Fraction(x) for x in mu)
    if mu != (0, 0):
        eps = _coset_stabilizing_power(I, eps, mu)
    A, B, C = ideal_norm_form(I)
    den = math.lcm(mu[0].denominator, mu[1].denominator)
    e1 = eps.embed()[0]
    log_eps2 = 2 * math.log(abs(e1))
    Na = float(I.norm)
    alpha = float(I.alpha.a)
    z1, z2 = I.z.embed()
    xmax = abs(e1) * math.sqrt(M * Na) * (1 + 1e-9)
    ymax = 2 * xmax / abs(z1 - z2) + 2
    counts: dict[Fraction, int] = {}
    Ys = np.arange(math.floor(-ymax - 1), math.ceil(ymax + 1) + 1, dtype=np.int64)
    for Y in Ys:
        y = Y + float(mu[1])
        lo = (-y * z1) / alpha - float(mu[0])
        hi = (xmax - y * z1) / alpha - float(mu[0])
        X = np.arange(math.floor(min(lo, hi)) - 1, math.ceil(max(lo, hi)) + 2, dtype=np.int64)
        xr = X + float(mu[0])
        e_1 = xr * alpha + y * z1
        e_2 = xr * alpha + y * z2
        Xi = X * den + int(mu[0] * den)
        Yi = int(Y) * den + int(mu[1] * den)
        q = A * Xi * Xi + B * Xi * Yi + C * Yi * Yi  # = den^2 * Q
        ok = (e_1 > 0) & (q != 0) & (np.abs(q) <= M * den * den)
        if mode == "positive":
            ok &= q > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.log(np.abs(e_1)) - np.log(np.abs(e_2))
        ok &= (r > -1e-9) & (r < log_eps2 - 1e-9)
        for qq in np.abs(q[ok]):
            m = Fraction(int(qq), den * den)
            counts[m] = counts.get(m, 0) + 1
    return RepCountTable(label, counts, M, mode)


def _coset_stabilizing_power(I: FractionalIdeal, eps: KElt, mu) -> KElt:
    """Smallest power of eps mapping mu + a to +-(mu + a)."""
    x = I.alpha * mu[0] + I.z * mu[1]
    e = eps
    for _ in range(1, 200):
        y = e * x
        for sgn in (1, -1):
            c0, c1 = _coords(I, y * sgn - x)
            if c0.denominator == 1 and c1.denominator == 1:
                return e
        e = e * eps
    raise ArithmeticError("no unit power stabilizes the coset")


def class_rep_counts(G: RingClassGroup, M: int, units: UnitData | None = None, cache: Path | None = None) -> list[RepCountTable]:
    """r_A(m) = number of invertible O_c-ideals of norm m in class A, for every A."""
    units = units or fundamental_unit(G.field)
    out = []
    for A in range(G.order):
        inv = G.inverse(A)
        path = None
        if cache is not None:
            path = Path(cache) / f"reps_{G.field.d_K}_{G.conductor}_{G.label_str(A)}_1_{M}.csv"
            if path.exists():
                try:
                    out.append(RepCountTable.read(path, G.label_str(A), M))
                    continue
                except _cache.CacheCorruption:
                    pass
        T = rep_counts(G.reps[inv], M, units, label=G.label_str(A))
        if path is not None:
            T.write(path)
        out.append(T)
    return out


def partial_theta(table: RepCountTable, M: int | None = None) -> np.ndarray:
    """Coefficients of theta_A = 1 + sum r_A(m) q^m (constant term 1/w_K = 1)."""
    M = table.M if M is None else M
    out = np.zeros(M + 1)
    out[0] = 1.0
    for m, c in table.entries.items():
        if m.denominator == 1 and m <= M:
            out[int(m)] = c
    return out


def hecke_theta(chi: RingClassCharacter, tables: list[RepCountTable], M: int | None = None) -> np.ndarray:
    M = min(t.M for t in tables) if M is None else M
    return sum(chi(A) * partial_theta(t, M) for A, t in enumerate(tables))


def divisor_eta_sum(m: int, eta) -> int:
    return sum(eta(d) for d in range(1, m + 1) if m % d == 0)


# -- lattice sums ------------------------------------------------------------------


@dataclass(frozen=True)
class TubePoint:
    z1: complex
    z2: complex

    def __post_init__(self):
        if self.z1.imag <= 0 or self.z2.imag <= 0:
            raise ValidationError("tube point needs Im z1, Im z2 > 0")


def _snf_map(S) -> tuple[np.ndarray, list[int]]:
    diag, U, _ = smith_normal_form(S)
    keep = [i for i, d in enumerate(diag) if d != 1]
    return np.array([U[i] for i in keep], dtype=np.int64).reshape(len(keep), len(S)), [diag[i] for i in keep]


def _dual_box(P: np.ndarray, B: float) -> list[np.ndarray]:
    """Integer ranges covering {w : w^T P w <= B} (P positive definite)."""
    Pi = np.linalg.inv(P)
    return [np.arange(-math.floor(math.sqrt(B * Pi[i, i])) - 1, math.floor(math.sqrt(B * Pi[i, i])) + 2) for i in range(len(P))]


def theta_sum(
    L: LatticeModel,
    tau: complex,
    majorant: np.ndarray,
    tol: float = 1e-13,
    R: float | None = None,
) -> np.ndarray:
    """sum_{x in L^vee} e(Q(x) u) exp(-2 pi v P(x)) binned by coset.

    ``majorant`` is the matrix of P in lattice coordinates (P(x) = x^T P x); Q is
    the scaled form.  Returns the vector indexed like ``L.disc``.
    """
    v = tau.imag
    if v <= 0:
        raise ValidationError("Im tau must be positive")
    n = L.rank
    Pw = _dual_majorant(L, majorant)
    lam_min = float(np.linalg.eigvalsh(Pw).min())
    # tail: sum_{P > B} e^{-2 pi v P} <~ count(P<=B') e^{-2 pi v B}
    need = _required_bound(v, n, lam_min, tol)
    if R is not None and R * R < need:
        raise TruncationError(f"radius {R} too small for tolerance {tol}", math.sqrt(need))
    B = need if R is None else R * R
    idx, Qv, Pv = dual_points(L, majorant, B)
    vals = np.exp(2j * np.pi * Qv * tau.real - 2 * np.pi * v * Pv)
    out = np.zeros(L.disc.order, dtype=complex)
    np.add.at(out, idx, vals)
    return out


def _dual_majorant(L: LatticeModel, majorant: np.ndarray) -> np.ndarray:
    Sinv = np.linalg.inv(np.array(L.scaled_gram, dtype=float))
    return Sinv.T @ majorant @ Sinv  # majorant in dual coordinates x = S^{-1} w


def dual_points(L: LatticeModel, majorant: np.ndarray, B: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All x in L^vee with P(x) <= B as (coset index, Q(x), P(x)) arrays."""
    S = np.array(L.scaled_gram, dtype=float)
    Sinv = np.linalg.inv(S)
    Pw = Sinv.T @ majorant @ Sinv
    U, diag = _snf_map(L.scaled_gram)
    ranges = _dual_box(Pw, B)
    grids = np.meshgrid(*ranges, indexing="ij")
    W = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    Pv = np.einsum("ij,jk,ik->i", W, Pw, W)
    keep = Pv <= B
    W, Pv = W[keep], Pv[keep]
    X = W @ Sinv.T
    Qv = 0.5 * np.einsum("ij,jk,ik->i", X, S, X)
    idx = np.zeros(len(W), dtype=np.int64)
    if len(diag):
        digs = (W @ U.T) % np.array(diag)
        for k, d in enumerate(diag):
            idx = idx * d + digs[:, k]
    return idx, Qv, Pv


def _required_bound(v: float, n: int, lam_min: float, tol: float) -> float:
    B = 1.0
    for _ in range(200):
        count = (1 + 2 * math.sqrt(B / lam_min)) ** n
        if count * math.exp(-2 * math.pi * v * B) < tol:
            return B
        B *= 1.25
    return B


def theta_definite(L: LatticeModel, tau: complex, tol: float = 1e-13) -> np.ndarray:
    """Holomorphic theta of a positive definite lattice (majorant = Q)."""
    if L.signature[1] != 0:
        raise ValidationError("lattice is not positive definite")
    S = np.array(L.scaled_gram, dtype=float)
    return theta_sum(L, tau, S / 2, tol)


def _embedding_matrix(L: LatticeModel) -> tuple[np.ndarray, float]:
    """Rows: lattice basis vector -> real embeddings (x1, x1', [x2, x2'])."""
    I = L.ideal
    if I is None:
        raise ValidationError("lattice carries no ideal; cannot embed")
    a1 = float(I.alpha.a)
    z1, z2 = I.z.embed()
    rows = []
    for r in L.basis_matrix:
        c = [float(x) for x in r]
        if len(c) == 2:
            rows.append([c[0] * a1 + c[1] * z1, c[0] * a1 + c[1] * z2])
        else:
            rows.append([c[0] * a1 + c[1] * z1, c[0] * a1 + c[1] * z2, c[2] * a1 + c[3] * z1, c[2] * a1 + c[3] * z2])
    return np.array(rows), float(I.norm)


def majorant_22(L: LatticeModel, z: TubePoint) -> np.ndarray:
    """P(x) = scale |g1^{-1} M(x) g2|_F^2 / (2 N a), M(x) = [[x1, x2], [x2', x1']]."""
    E, Na = _embedding_matrix(L)
    if E.shape[1] != 4:
        raise ValidationError("rank-4 lattice in (V_A, Q_A) expected")

    def g(zz):
        x, y = zz.real, zz.imag
        return np.array([[math.sqrt(y), x / math.sqrt(y)], [0.0, 1 / math.sqrt(y)]])

    g1i = np.linalg.inv(g(z.z1))
    g2 = g(z.z2)
    cols = []
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        x1, x1c, x2, x2c = e
        Mk = np.array([[x1, x2], [x2c, x1c]])
        cols.append((g1i @ Mk @ g2).ravel())
    Amat = np.array(cols).T @ E.T  # 4 x rank
    return float(L.scale) * (Amat.T @ Amat) / (2 * Na)


def majorant_11(L: LatticeModel, t: float) -> np.ndarray:
    """P_t(x) = scale (e^{-t} x^2 + e^{t} x'^2) / (2 N a) for the (1,1) norm-form lattice."""
    E, Na = _embedding_matrix(L)
    if E.shape[1] != 2:
        raise ValidationError("rank-2 lattice expected")
    Dm = np.diag([math.exp(-t), math.exp(t)])
    sign = 1.0 if L.signature == (1, 1) else 1.0
    return sign * float(L.scale) * (E @ Dm @ E.T) / (2 * Na)


# -- class translation ----------------------------------------------------------------


@dataclass
class ClassTranslation:
    lattice: LatticeModel
    coset_map: np.ndarray  # index in L.disc -> index in lattice.disc


def _ideal_coprime_rep(G: RingClassGroup, h: int, avoid: int) -> FractionalIdeal:
    from .quadorder import _representative, ideal_from_form

    f = _representative(G.forms[h], avoid)
    return ideal_from_form(G.field, f, G.conductor)


def translate_by_class(L: LatticeModel, G: RingClassGroup, h: int) -> ClassTranslation:
    """The lattice (b/b-bar) L for an ideal b in class h coprime to |L^vee/L|, with the
    induced identification of discriminant groups (mu -> e mu, e = 1 mod |D|, 0 mod N(b)^2).
    """
    D = L.disc
    if h == G.identity:
        return ClassTranslation(L, np.arange(D.order))
    I = L.ideal
    if I is None:
        raise ValidationError("lattice carries no ideal")
    # every supported lattice is r * a in each factor
    r = L.basis_matrix[0][0]
    k = L.rank // 2 if L.rank == 4 else 1
    expected = [[r if i == j else 0 for j in range(L.rank)] for i in range(L.rank)]
    if [list(row) for row in L.basis_matrix] != expected:
        raise ValidationError("class translation supports r*a (+) r*a lattices only")
    order = D.order
    b = _ideal_coprime_rep(G, h, order * G.field.d_K)
    Nb = int(b.norm)
    J = ideal_scale(ideal_mul(b, b), Fraction(1, Nb))
    aJ = ideal_mul(J, I)
    cols = [_coords(I, aJ.alpha * r), _coords(I, aJ.z * r)]
    rows = []
    for blk in range(k if L.rank == 4 else 1):
        for c0, c1 in cols:
            row = [Fraction(0)] * L.rank
            row[2 * blk], row[2 * blk + 1] = c0, c1
            rows.append(row)
    L2 = LatticeModel.make(L.ambient, rows, name=f"{L.name}*h{h}", ideal=I)
    if L2.scale != L.scale:
        raise ValidationError("translated lattice changed scale")
    D2 = L2.disc
    # e = 1 mod exponent(D), 0 mod Nb^2
    ex = D.level * 2
    m2 = Nb * Nb
    e = (pow(m2, -1, ex) * m2) % (ex * m2)
    B1 = as_fraction_matrix(L.basis_matrix)
    B2i = inverse(as_fraction_matrix(L2.basis_matrix))
    cmap = np.zeros(order, dtype=np.int64)
    for i, mu in enumerate(D.coset_reps):
        amb = [sum((e * mu[a] * B1[a][j] for a in range(L.rank)), Fraction(0)) for j in range(L.rank)]
        x = [sum((amb[j] * B2i[j][c] for j in range(L.rank)), Fraction(0)) for c in range(L.rank)]
        cmap[i] = D2.index_of(x)
        if D2.q_values[cmap[i]] != D.q_values[i]:
            raise ArithmeticError("class translation does not preserve q")
    return ClassTranslation(L2, cmap)


def siegel_theta_22(L: LatticeModel, tau: complex, z: TubePoint, h: int = 0, G: RingClassGroup | None = None, R: float | None = None, tol: float = 1e-13) -> np.ndarray:
    """Siegel theta of the (2,2) lattice at the tube point z (no v-power; weight (1,1))."""
    if h and G is not None:
        tr = translate_by_class(L, G, h)
        return theta_sum(tr.lattice, tau, majorant_22(tr.lattice, z), tol, R)[tr.coset_map]
    return theta_sum(L, tau, majorant_22(L, z), tol, R)


def theta_11(L2: LatticeModel, tau: complex, t: float, h: int = 0, G: RingClassGroup | None = None, R: float | None = None, tol: float = 1e-13) -> np.ndarray:
    """Siegel theta of the (1,1) lattice along the geodesic; period 2 log eps1 in t."""
    if h and G is not None:
        tr = translate_by_class(L2, G, h)
        return theta_sum(tr.lattice, tau, majorant_11(tr.lattice, t), tol, R)[tr.coset_map]
    return theta_sum(L2, tau, majorant_11(L2, t), tol, R)


def unit_acts_on_cosets(L: LatticeModel, eps: KElt) -> np.ndarray:
    """Permutation of L.disc induced by x -> eps x (in each factor)."""
    I = L.ideal
    D = L.disc
    B = as_fraction_matrix(L.basis_matrix)
    Bi = inverse(B)
    perm = np.zeros(D.order, dtype=np.int64)
    for i, mu in enumerate(D.coset_reps):
        amb = [sum((mu[a] * B[a][j] for a in range(L.rank)), Fraction(0)) for j in range(L.rank)]
        new = []
        for blk in range(L.rank // 2):
            x = I.alpha * amb[2 * blk] + I.z * amb[2 * blk + 1]
            new.extend(_coords(I, eps * x))
        perm[i] = D.index_of([sum((new[j] * Bi[j][c] for j in range(L.rank)), Fraction(0)) for c in range(L.rank)])
    return perm


# -- geodesics -----------------------------------------------------------------------


@dataclass
class GeodesicSet:
    label: str
    form: tuple[int, int, int]
    endpoints: tuple[float, float]
    period: float
    kernel_power: int = 1
    classes: list[str] = field(default_factory=list)

    def endpoint_exact(self) -> tuple[tuple[Fraction, Fraction, int], tuple[Fraction, Fraction, int]]:
        """(p, q, Delta) with Z = p + q sqrt(Delta)."""
        a, b, c = self.form
        Dl = b * b - 4 * a * c
        return (Fraction(-b, 2 * a), Fraction(1, 2 * a), Dl), (Fraction(-b, 2 * a), Fraction(-1, 2 * a), Dl)


def geodesic_set(G: RingClassGroup, A: int, units: UnitData | None = None) -> GeodesicSet:
    units = units or fundamental_unit(G.field)
    f = ideal_norm_form(G.reps[A])
    a, b, c = f
    Dl = b * b - 4 * a * c
    r = math.sqrt(Dl)
    eps1 = norm_one_unit(units, G.field.d_K, G.conductor)
    period = 2 * math.log(eps1.embed()[0])
    from .qspace import lattice_from_level

    _, _, L2 = lattice_from_level(G.reps[A], 1)
    perm = unit_acts_on_cosets(L2, eps1)
    D = L2.disc
    k, p = 1, perm.copy()
    while not (np.array_equal(p, np.arange(D.order)) or np.array_equal(p, D.neg)):
        p = perm[p]
        k += 1
    return GeodesicSet(G.label_str(A), f, ((-b + r) / (2 * a), (-b - r) / (2 * a)), period, k, [G.label_str(i) for i in range(G.order)])


def geodesic_average(L2: LatticeModel, tau: complex, geo: GeodesicSet, n: int = 64, h: int = 0, G: RingClassGroup | None = None) -> np.ndarray:
    """(1/P) int_0^P theta_11(tau, t) dt over kernel_power periods (trapezoid; periodic integrand)."""
    P = geo.period * geo.kernel_power
    ts = np.arange(n) * P / n
    acc = sum(theta_11(L2, tau, float(t), h, G) for t in ts)
    return acc / n
