"""Regularized theta lift of weight-0 harmonic inputs against the (2,2) Siegel theta.

The truncated fundamental domain is split at height ``v0``.  Below it the pairing
is integrated by a Gauss-Legendre product rule; above it the u-integral is taken
exactly, leaving one exponential integral per lattice vector.  This avoids the
catastrophic cancellation of e^{2 pi m v} growth against theta decay.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy import special


from .eisenstein import KappaTable
from .qspace import DiscriminantGroup, LatticeModel, lattice_from_level
from .quadorder import RingClassCharacter, RingClassGroup, UnitData, ValidationError, fundamental_unit
from .theta import (
    GeodesicSet,
    TruncationError,
    TubePoint,
    _embedding_matrix,
    dual_points,
    majorant_22,
    translate_by_class,
)
from .weilrep import HarmonicMaassInput, VectorQExpansion


@dataclass
class LiftConfig:
    v0: float = 1.25
    nu: int = 28
    nv: int = 28
    tol: float = 1e-10
    s_probe: float = 1e-3
    quad_tol: float = 1e-6
    stability_tol: float = 1e-4


@dataclass
class LiftEvaluation:
    value: float
    A0: float
    T_grid: list[float]
    values: list[float]
    stability: float
    quad_error: float
    ct_fit: float | None = None

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "A0": self.A0,
            "T_grid": list(self.T_grid),
            "values": list(self.values),
            "stability": self.stability,
            "quad_error": self.quad_error,
            "ct_fit": self.ct_fit,
        }


# -- inputs ---------------------------------------------------------------------------


def j_coefficients(N: int) -> list[int]:
    """Coefficients c(-1), c(0), ..., c(N) of j - 744 (integer arithmetic)."""
    M = N + 2

    def sigma3(n):
        return sum(d**3 for d in range(1, n + 1) if n % d == 0)

    E4 = [1] + [240 * sigma3(n) for n in range(1, M + 1)]
    E4c = _mul(_mul(E4, E4, M), E4, M)
    # q^{-1} Delta = prod (1 - q^n)^24
    eta24 = [1] + [0] * M
    for n in range(1, M + 1):
        for _ in range(24):
            eta24 = [eta24[k] - (eta24[k - n] if k >= n else 0) for k in range(M + 1)]
    inv = [0] * (M + 1)
    inv[0] = 1
    for k in range(1, M + 1):
        inv[k] = -sum(eta24[i] * inv[k - i] for i in range(1, k + 1))
    j = _mul(E4c, inv, M)  # q * j
    j[1] -= 744
    return j[: N + 2]


def j2_coefficients(N: int) -> list[int]:
    """c(-2), ..., c(N) of (j - 744)^2 minus its constant term: q^{-2} + O(q)."""
    j = j_coefficients(N + 2)  # index k <-> exponent k - 1
    sq = _mul(j, j, N + 2)  # index k <-> exponent k - 2
    sq[2] = 0
    return sq[: N + 3]


def _mul(a, b, M):
    out = [0] * (M + 1)
    for i, x in enumerate(a[: M + 1]):
        if x:
            for k, y in enumerate(b[: M + 1 - i]):
                out[i + k] += x * y
    return out


def isotropic_subgroups(D: DiscriminantGroup) -> list[list[int]]:
    """All self-dual isotropic subgroups generated by isotropic elements (small groups)."""
    target = math.isqrt(D.order)
    if target * target != D.order:
        raise ValidationError("discriminant group order is not a square")
    iso = [i for i in range(D.order) if D.q_values[i] == 0]
    found: set[tuple[int, ...]] = set()

    def span(H, i):
        gen = set(H)
        frontier = list(H)
        while frontier:
            new = []
            for h in frontier:
                k = D.add(h, i)
                if k not in gen:
                    gen.add(k)
                    new.append(k)
            frontier = new
        return gen

    def grow(H):
        if len(H) == target:
            found.add(tuple(sorted(H)))
            return
        for i in iso:
            if i in H or any(D.bilinear(i, h) % 1 != 0 for h in H):
                continue
            G2 = span(H, i)
            if all(D.q_values[k] == 0 for k in G2) and len(G2) <= target:
                grow(G2)

    grow({0})
    if not found:
        raise ValidationError("no self-dual isotropic subgroup found")
    return [list(h) for h in sorted(found)]


def invariant_input(L: LatticeModel, kind: str = "j", scale: float = 1.0, N: int = 60, subgroup: int = 0) -> HarmonicMaassInput:
    """phi(tau) * 1_H for a self-dual isotropic H: modular of weight 0 for the dual Weil
    representation.  kind='j' uses phi = j - 744, 'j2' the q^{-2} + O(q) function,
    'const' uses phi = 1.
    """
    Dn = L.disc.negated()
    H = isotropic_subgroups(L.disc)[subgroup]
    coeffs = {}
    if kind == "j":
        cj = j_coefficients(N)
        for mu in H:
            for k, c in enumerate(cj):
                if c:
                    coeffs[(mu, k - 1)] = complex(scale * c)
    elif kind == "j2":
        cj = j2_coefficients(N)
        for mu in H:
            for k, c in enumerate(cj):
                if c:
                    coeffs[(mu, k - 2)] = complex(scale * c)
    elif kind == "const":
        for mu in H:
            coeffs[(mu, 0)] = complex(scale)
    else:
        raise ValidationError(f"unknown input kind {kind!r}")
    f = VectorQExpansion(Dn, 0, 1, coeffs)
    f.check_support()
    return HarmonicMaassInput(f)


def combine(*terms: tuple[float, HarmonicMaassInput]) -> HarmonicMaassInput:
    """Linear combination of inputs on the same discriminant form."""
    plus = None
    minus = []
    for lam, f in terms:
        p = f.plus.scaled(lam)
        plus = p if plus is None else plus + p
        minus.extend((mu, m, lam * c) for mu, m, c in f.minus)
    plus.coeffs = {k: c for k, c in plus.coeffs.items() if c != 0}
    return HarmonicMaassInput(plus, minus)


# -- evaluation pieces ----------------------------------------------------------------


def _check_input(f0: HarmonicMaassInput, L: LatticeModel) -> None:
    if f0.weight != 0:
        raise ValidationError("the lift takes weight-0 inputs")
    D = L.disc
    Df = f0.plus.disc
    if Df.order != D.order or any((Df.q_values[i] + D.q_values[i]) % 1 != 0 for i in range(D.order)):
        raise ValidationError("input must live on the negated discriminant form of the lattice")


def _eval_input(f0: HarmonicMaassInput, taus: np.ndarray) -> np.ndarray:
    """f0 at many tau: array (len(taus), |D|)."""
    mu, n, c = f0.plus.arrays()
    out = np.zeros((len(taus), f0.plus.disc.order), dtype=complex)
    if len(c):
        vals = c[None, :] * np.exp(2j * np.pi * np.outer(taus, n) / f0.plus.denom)
        for k in range(len(c)):
            out[:, mu[k]] += vals[:, k]
    for m_mu, m, cm in f0.minus:
        m = float(m)
        v = taus.imag
        x = 4 * math.pi * abs(m) * v
        g = np.exp(-x)  # Gamma(1, x) at weight 0
        out[:, m_mu] += cm * g * np.exp(2j * math.pi * m * taus)
    return out


def _lower_nodes(v0: float, nu: int, nv: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes tau and weights (including dv du / v^2) on {|u|<=1/2, |tau|>=1, v<=v0}."""
    xu, wu = np.polynomial.legendre.leggauss(nu)
    xv, wv = np.polynomial.legendre.leggauss(nv)
    taus, wts = [], []
    for a, wa in zip(xu, wu):
        u = 0.5 * a
        lo = math.sqrt(1 - u * u)
        half = 0.5 * (v0 - lo)
        for b, wb in zip(xv, wv):
            v = lo + half * (b + 1)
            taus.append(complex(u, v))
            wts.append(0.5 * wa * half * wb / (v * v))
    return np.array(taus), np.array(wts)


@dataclass
class _Points:
    idx: np.ndarray
    Q: np.ndarray
    P: np.ndarray


def _points(L: LatticeModel, z: TubePoint, B: float, h: int, G: RingClassGroup | None) -> _Points:
    if h and G is not None:
        tr = translate_by_class(L, G, h)
        idx, Q, P = dual_points(tr.lattice, majorant_22(tr.lattice, z), B)
        inv = np.empty_like(tr.coset_map)
        inv[tr.coset_map] = np.arange(len(tr.coset_map))
        return _Points(inv[idx], Q, P)
    idx, Q, P = dual_points(L, majorant_22(L, z), B)
    return _Points(idx, Q, P)


def _lower_integral(f0: HarmonicMaassInput, pts: _Points, taus: np.ndarray, wts: np.ndarray, s: float = 0.0) -> float:
    F = _eval_input(f0, taus)
    ph = np.exp(2j * np.pi * np.outer(taus.real, pts.Q) - 2 * np.pi * np.outer(taus.imag, pts.P))
    th = np.zeros((len(taus), F.shape[1]), dtype=complex)
    for k in np.unique(pts.idx):
        th[:, k] = ph[:, pts.idx == k].sum(axis=1)
    integrand = taus.imag * np.einsum("ij,ij->i", F, th)
    w = wts * taus.imag ** (-s) if s else wts
    return float(np.dot(w, integrand).real)


def _upper_terms(f0: HarmonicMaassInput, pts: _Points) -> tuple[np.ndarray, np.ndarray, float]:
    """(coefficient, exponent a) per lattice vector with constant mode c v e^{-a v}, plus c(0,0)."""
    den = f0.plus.denom
    minus = {}
    for mu, m, c in f0.minus:
        key = (mu, int(Fraction(m) * den))
        minus[key] = minus.get(key, 0) + c
    cs, As = [], []
    c00 = 0.0
    for i, Q, P in zip(pts.idx, pts.Q, pts.P):
        nn = -Q * den
        n = int(round(nn))
        if abs(nn - n) > 1e-6:
            continue
        cp = f0.plus.coeffs.get((int(i), n), 0)
        if cp:
            a = 2 * math.pi * (P - Q)
            if a < 1e-12 * max(1.0, P):
                if abs(P) < 1e-12:
                    c00 += float(np.real(cp))
                    continue
                raise ValidationError("tube point lies on the singular divisor of the input")
            cs.append(cp)
            As.append(a)
        cm = minus.get((int(i), n), 0)
        if cm:
            cs.append(cm)
            As.append(2 * math.pi * (P + Q))
    return np.array(cs, dtype=complex), np.array(As), c00


def _upper_bound(f0: HarmonicMaassInput, v0: float, tol: float) -> float:
    mins = [float(f0.plus.min_exponent())] + [float(m) for _, m, _ in f0.minus]
    qmax = max(0.0, -min(mins))
    B = qmax + (math.log(1 / tol) + 6) / (2 * math.pi * v0)
    top = max((n / f0.plus.denom for (_, n), c in f0.plus.coeffs.items() if c), default=0.0)
    if f0.plus.coeffs and top < B and any(n > 0 for (_, n) in f0.plus.coeffs):
        raise TruncationError(f"input coefficients end at {top}, need exponents up to {B:.2f}", B)
    return B


def zero_index(D: DiscriminantGroup) -> int:
    return D.index_of([0] * len(D.coset_reps[0]))


def reg_integral(
    f0: HarmonicMaassInput,
    L: LatticeModel,
    z: TubePoint,
    h: int = 0,
    G: RingClassGroup | None = None,
    T_grid=(8.0, 16.0),
    s_probe: float | None = None,
    cfg: LiftConfig | None = None,
    check: bool = True,
) -> LiftEvaluation:
    """Phi(f0, z, h): truncated integral over F_T minus A0 log T on a grid of heights."""
    cfg = cfg or LiftConfig()
    _check_input(f0, L)
    if not f0.plus.coeffs and not f0.minus:
        return LiftEvaluation(0.0, 0.0, list(T_grid), [0.0] * len(T_grid), 0.0, 0.0)
    v0 = cfg.v0
    B = _upper_bound(f0, v0, cfg.tol)
    # the lower region needs theta down to v = sqrt(3)/2
    Blow = max(B, (math.log(1 / cfg.tol) + 8) / (2 * math.pi * math.sqrt(3) / 2))
    pts = _points(L, z, Blow, h, G)
    taus, wts = _lower_nodes(v0, cfg.nu, cfg.nv)
    low = _lower_integral(f0, pts, taus, wts)
    quad_error = 0.0
    if check:
        t2, w2 = _lower_nodes(v0, cfg.nu + cfg.nu // 2, cfg.nv + cfg.nv // 2)
        quad_error = abs(_lower_integral(f0, pts, t2, w2) - low)
    keep = pts.P <= B
    up = _Points(pts.idx[keep], pts.Q[keep], pts.P[keep])
    cs, As, c00 = _upper_terms(f0, up)
    A0 = c00
    base = float(np.real(np.dot(cs, special.exp1(As * v0)))) if len(cs) else 0.0
    values = []
    for T in T_grid:
        tail = float(np.real(np.dot(cs, special.exp1(As * T)))) if len(cs) else 0.0
        values.append(low + base - tail + c00 * math.log(T / v0) - A0 * math.log(T))
    stability = abs(values[-1] - values[-2]) if len(values) > 1 else 0.0
    limit = low + base - c00 * math.log(v0)
    ct_fit = None
    if c00 != 0:
        sp = s_probe or cfg.s_probe
        ct_fit = _laurent_ct(f0, pts, taus, wts, cs, As, c00, v0, sp)
        quad_error = max(quad_error, abs(ct_fit - limit))
        value = ct_fit
    else:
        value = limit
    if quad_error > cfg.quad_tol:
        raise ValidationError(f"lower-region quadrature error {quad_error:.2e} above tolerance")
    return LiftEvaluation(value, A0, list(T_grid), values, stability, quad_error, ct_fit)


def _laurent_ct(f0, pts, taus, wts, cs, As, c00, v0, sp) -> float:
    """CT at s=0 of the v^{-s}-regularized integral from the symmetric pair s = +-sp."""

    def F(s):
        low = _lower_integral(f0, pts, taus, wts, s)
        up = sum(complex(c) * complex(mpmath.power(a, s) * mpmath.gammainc(-s, a * v0)) for c, a in zip(cs, As))
        return low + float(np.real(up)) + c00 * v0 ** (-s) / s

    return 0.5 * (F(sp) + F(-sp))


# -- geodesics ------------------------------------------------------------------------


def geodesic_point(t: float, t1: float = 0.0) -> TubePoint:
    """Split tube point: y1/y2 = e^t moves along the V2 geodesic, y1 y2 = e^{t1} fixes the V1 part."""
    return TubePoint(1j * math.exp((t + t1) / 2), 1j * math.exp((t1 - t) / 2))


def geodesic_sum(
    f0: HarmonicMaassInput,
    L: LatticeModel,
    geo: GeodesicSet,
    G: RingClassGroup,
    quad_n: int = 32,
    aut: int = 2,
    cfg: LiftConfig | None = None,
    t1: float = 0.0,
    per_class: bool = False,
):
    """Sum over classes h of the mean of Phi(f0, z(t), h) over the closed geodesic, / #Aut."""
    P = geo.period * geo.kernel_power
    ts = np.arange(quad_n) * P / quad_n
    parts = []
    for h in range(G.order):
        vals = [reg_integral(f0, L, geodesic_point(float(t), t1), h, G, cfg=cfg, check=False).value for t in ts]
        parts.append(float(np.mean(vals)) / aut)
    return parts if per_class else float(sum(parts))


def geodesic_convergence(f0, L, geo, G, ns=(16, 32, 64), cfg=None, t1: float = 0.0, aut: int = 2) -> dict:
    """Trapezoid values on nested grids (one evaluation pass) and the observed Richardson ratio."""
    nmax = max(ns)
    if any(nmax % n for n in ns):
        raise ValidationError("grid sizes must divide the largest one")
    P = geo.period * geo.kernel_power
    ts = np.arange(nmax) * P / nmax
    grid = np.array([[reg_integral(f0, L, geodesic_point(float(t), t1), h, G, cfg=cfg, check=False).value for t in ts] for h in range(G.order)])
    vals = [float(grid[:, :: nmax // n].mean(axis=1).sum()) / aut for n in ns]
    d1, d2 = abs(vals[0] - vals[1]), abs(vals[1] - vals[2])
    floor = 1e-11 * max(1.0, abs(vals[-1]))
    ratio = d1 / max(d2, floor)
    order = math.log2(ratio) if ratio > 0 else math.inf
    return {"values": vals, "diffs": [d1, d2], "ratio": ratio, "order": order, "converged": d2 <= max(floor, 1e-6)}


# -- constant-term pairing ------------------------------------------------------------


def a0_constant(f0: HarmonicMaassInput, L1: LatticeModel, split=None) -> float:
    """sum over mu and x in mu + L1 of c+(mu, -Q(x)); L1 positive definite unless only m = 0 occurs.

    ``split`` maps an L1 coset index to the input's coset index (identity by default).
    """
    coeffs = {k: c for k, c in f0.plus.coeffs.items() if c}
    if not coeffs:
        return 0.0
    den = f0.plus.denom
    needed = [Fraction(-n, den) for (_, n) in coeffs]
    if L1.signature[1] != 0:
        if any(m != 0 for m in needed):
            raise ValidationError("infinite support: indefinite lattice meets a nonzero exponent")
        z0 = zero_index(L1.disc)
        mu = z0 if split is None else split[z0]
        return float(np.real(coeffs.get((mu, 0), 0)))
    top = max(needed)
    if top < 0:
        return 0.0
    S = np.array(L1.scaled_gram, dtype=float)
    idx, Q, _ = dual_points(L1, S / 2, float(top) + 1e-9)
    tot = 0.0
    for i, q in zip(idx, Q):
        n = -q * den
        nr = int(round(n))
        if abs(n - nr) > 1e-8:
            continue
        mu = int(i) if split is None else int(split[int(i)])
        tot += float(np.real(coeffs.get((mu, nr), 0)))
    return tot


def orthogonal_split(L1: LatticeModel, L2: LatticeModel, L: LatticeModel) -> np.ndarray:
    """Index table [mu1, mu2] -> mu for L = L1 (+) L2 with concatenated bases."""
    D1, D2, D = L1.disc, L2.disc, L.disc
    if L.rank != L1.rank + L2.rank:
        raise ValidationError("rank mismatch in orthogonal splitting")
    s1, s2, s = L1.scale, L2.scale, L.scale
    out = np.zeros((D1.order, D2.order), dtype=np.int64)
    for i, a in enumerate(D1.coset_reps):
        for j, b in enumerate(D2.coset_reps):
            x = [Fraction(t) * s / s1 for t in a] + [Fraction(t) * s / s2 for t in b]
            try:
                out[i, j] = D.index_of(x)
            except Exception as exc:
                raise ValidationError(f"coset matching failed at ({i}, {j})") from exc
            if D.q_values[out[i, j]] != (D1.q_values[i] * s / s1 + D2.q_values[j] * s / s2) % 1:
                raise ValidationError(f"coset matching failed at ({i}, {j}): q mismatch")
    return out


def ct_pairing(f0_plus: VectorQExpansion, theta1: VectorQExpansion, kappa: KappaTable, split: np.ndarray) -> float:
    """sum c+_f0(mu1+mu2, -m) c_theta1(mu1, m1) kappa(mu2, m2) over m1 + m2 = m."""
    den = math.lcm(f0_plus.denom, theta1.denom, *(k[1].denominator for k in kappa.entries))
    f = {(mu, Fraction(n, f0_plus.denom)): c for (mu, n), c in f0_plus.coeffs.items() if c}
    t = {(mu, Fraction(n, theta1.denom)): c for (mu, n), c in theta1.coeffs.items() if c}
    k2 = {key: c for key, c in kappa.entries.items() if c}
    if not f or not t or not k2:
        return 0.0
    total = 0.0 + 0.0j
    for (mu1, m1), c1 in t.items():
        for (mu2, m2), c2 in k2.items():
            key = (int(split[mu1, mu2]), -(m1 + m2))
            cf = f.get(key)
            if cf:
                total += cf * c1 * c2
    return float(total.real)


def ct_pairing_direct(f0_plus: VectorQExpansion, theta1: VectorQExpansion, kappa: KappaTable, split: np.ndarray, v: float = 12.0, n: int = 256) -> float:
    """Constant Fourier mode in u of the triple product at height v (DFT oracle)."""
    den = math.lcm(f0_plus.denom, theta1.denom, *(k[1].denominator for k in kappa.entries))
    us = np.arange(n * den) / (n * den) * den  # u over one full period of the product
    taus = us + 1j * v
    D1, D2 = split.shape
    F = _eval_input(HarmonicMaassInput(f0_plus), taus)
    T1 = np.array([theta1.evaluate(t) for t in taus])
    E2 = np.zeros((len(taus), D2), dtype=complex)
    for (mu, m), c in kappa.entries.items():
        E2[:, mu] += c * np.exp(2j * np.pi * float(m) * taus)
    tot = np.zeros(len(taus), dtype=complex)
    for a in range(D1):
        for b in range(D2):
            tot += F[:, split[a, b]] * T1[:, a] * E2[:, b]
    return float(np.mean(tot).real)


# -- main formula ---------------------------------------------------------------------


@dataclass
class ClassInput:
    label: str
    f0: HarmonicMaassInput | None
    theta1: VectorQExpansion | None = None
    kappa: KappaTable | None = None
    split: np.ndarray | None = None
    geodesic: float | None = None


@dataclass
class MainFormulaReport:
    per_class: dict[str, tuple[float, float]]
    chi_sum: complex
    prefactor: float
    rhs: complex
    lhs: complex | None = None
    gap: float | None = None
    vol: float = 1.0

    def to_json(self) -> dict:
        return {
            "per_class": {k: {"ct_pairing": a, "geodesic_term": b} for k, (a, b) in self.per_class.items()},
            "chi_sum": [self.chi_sum.real, self.chi_sum.imag],
            "prefactor": self.prefactor,
            "rhs": [self.rhs.real, self.rhs.imag],
            "lhs": None if self.lhs is None else [self.lhs.real, self.lhs.imag],
            "gap": "not-computable" if self.gap is None else self.gap,
            "vol": self.vol,
        }


def main_prefactor(G: RingClassGroup, units: UnitData | None = None) -> float:
    """-sqrt(d_K) / (2 log eps_K h_K) with eps_K the Pell-4 unit."""
    F = G.field
    units = units or fundamental_unit(F)
    return -math.sqrt(F.d_K) / (2 * units.epsK_log * G.order)


def main_formula_rhs(
    family: list[ClassInput],
    chi: RingClassCharacter,
    G: RingClassGroup,
    units: UnitData | None = None,
    vol: float = 1.0,
    lhs: complex | None = None,
) -> MainFormulaReport:
    labels = [G.label_str(i) for i in range(G.order)]
    by_label = {c.label: c for c in family}
    missing = [lab for lab in labels if lab not in by_label]
    if missing:
        raise ValidationError(f"missing class input for {missing}")
    per = {}
    chi_sum = 0j
    for i, lab in enumerate(labels):
        ci = by_label[lab]
        ct = 0.0
        if ci.f0 is not None and ci.theta1 is not None and ci.kappa is not None and ci.split is not None:
            ct = ct_pairing(ci.f0.plus, ci.theta1, ci.kappa, ci.split)
        geo = float(ci.geodesic or 0.0)
        per[lab] = (ct, geo)
        chi_sum += complex(chi(i)) * (ct + vol / 2 * geo)
    pref = main_prefactor(G, units)
    rhs = pref * chi_sum
    gap = None if lhs is None else abs(rhs - lhs)
    return MainFormulaReport(per, chi_sum, pref, rhs, lhs, gap, vol)


# -- Green function diagnostics -------------------------------------------------------


def divisor_point(L: LatticeModel, mu: int, m: Fraction, search: float = 12.0) -> tuple[TubePoint, np.ndarray]:
    """A tube point whose positive plane contains some x in mu + L with Q(x) = m > 0."""
    if m <= 0:
        raise ValidationError("divisor data needs m > 0")
    E, Na = _embedding_matrix(L)
    idx, Q, P = dual_points(L, majorant_22(L, TubePoint(1j, 1j)), search)
    S = np.array(L.scaled_gram, dtype=float)
    Sinv = np.linalg.inv(S)
    cand = [k for k in range(len(idx)) if idx[k] == mu and abs(Q[k] - float(m)) < 1e-9]
    if not cand:
        raise ValidationError(f"no vector with Q = {m} in coset {mu} within the search box")
    k = min(cand, key=lambda c: P[c])
    # recover the lattice coordinates of that point
    from .theta import _dual_box, _snf_map  # noqa: F401

    Pw = Sinv.T @ majorant_22(L, TubePoint(1j, 1j)) @ Sinv
    w = _find_point(L, Pw, P[k], Q[k], mu)
    x = Sinv @ w  # lattice coordinates (rational)
    emb = x @ E  # (x1, x1', x2, x2')
    M = np.array([[emb[0], emb[2]], [emb[3], emb[1]]])
    Smat = M @ M.T / np.linalg.det(M)
    a, b, c = Smat[0, 0], Smat[0, 1], Smat[1, 1]
    return TubePoint(complex(b / c, 1 / c), 1j), x


def _find_point(L, Pw, P0, Q0, mu):
    from .theta import _dual_box, _snf_map

    S = np.array(L.scaled_gram, dtype=float)
    Sinv = np.linalg.inv(S)
    U, diag = _snf_map(L.scaled_gram)
    ranges = _dual_box(Pw, P0 + 1e-9)
    grids = np.meshgrid(*ranges, indexing="ij")
    W = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    Pv = np.einsum("ij,jk,ik->i", W, Pw, W)
    X = W @ Sinv.T
    Qv = 0.5 * np.einsum("ij,jk,ik->i", X, S, X)
    ok = np.where((np.abs(Pv - P0) < 1e-9) & (np.abs(Qv - Q0) < 1e-9))[0]
    for r in ok:
        ix = 0
        if len(diag):
            digs = (W[r] @ U.T) % np.array(diag)
            for kk, d in enumerate(diag):
                ix = ix * d + digs[kk]
        if ix == mu:
            return W[r].astype(float)
    raise ValidationError("lattice point lookup failed")


@dataclass
class GreenReport:
    slope: float
    slope_fit_residual: float
    laplacian: list[float]
    phi: list[float]
    eigen_target: float
    eigen_estimate: float | None
    laplacian_gap: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _laplacian_h(fn, z: TubePoint, h: float, c: float) -> float:
    tot = 0.0
    for j in (0, 1):
        zj = (z.z1, z.z2)[j]
        y = zj.imag
        hh = h * y
        acc = -4 * c
        for d in (hh, -hh, 1j * hh, -1j * hh):
            w = zj + d
            acc += fn(TubePoint(w, z.z2) if j == 0 else TubePoint(z.z1, w))
        tot += -y * y * acc / (hh * hh)
    return tot


def laplacian(fn, z: TubePoint, h: float = 0.02) -> float:
    """(Delta_1 + Delta_2) fn, Delta_j = -y_j^2 (d_x^2 + d_y^2): 5-point stencils at h and h/2,
    Richardson-combined to remove the h^2 term."""
    c = fn(z)
    a = _laplacian_h(fn, z, h, c)
    b = _laplacian_h(fn, z, h / 2, c)
    return (4 * b - a) / 3


def green_diagnostics(
    f0: HarmonicMaassInput,
    L: LatticeModel,
    divisor: tuple[int, Fraction] | None = None,
    points=(TubePoint(-0.4647 + 0.6683j, -0.4551 + 2.25j), TubePoint(-0.2112 + 2.0834j, -0.4798 + 0.9135j)),
    deltas=(4e-3, 2e-3, 1e-3, 5e-4),
    cfg: LiftConfig | None = None,
    h: float = 0.02,
) -> GreenReport:
    cfg = cfg or LiftConfig()

    def phi(z):
        return reg_integral(f0, L, z, cfg=cfg, check=False).value

    slope, resid = math.nan, math.nan
    if divisor is not None:
        z0, _ = divisor_point(L, *divisor)
        xs, ys = [], []
        for d in deltas:
            z = TubePoint(complex(z0.z1.real, z0.z1.imag * math.exp(d)), z0.z2)
            xs.append(math.log(d * d))
            ys.append(phi(z))
        A = np.vstack([xs, np.ones(len(xs))]).T
        coef, *_ = np.linalg.lstsq(A, np.array(ys), rcond=None)
        slope = float(coef[0])
        resid = float(np.abs(A @ coef - ys).max())
        if resid > 1e-3:
            raise ValidationError(f"log-slope fit unstable (residual {resid:.2e})")
    i0 = zero_index(L.disc)
    c00 = float(np.real(f0.c_plus(i0, 0)))
    target = c00 / 2
    laps, vals = [], []
    for z in points:
        laps.append(laplacian(phi, z, h))
        vals.append(phi(z))
    gaps = [abs(a - target * b) for a, b in zip(laps, vals)]
    est = None
    if c00 != 0:
        est = float(np.mean([a / b for a, b in zip(laps, vals)]))
        gap = abs(est - target)
    else:
        gap = max(gaps)
    return GreenReport(slope, resid, laps, vals, target, est, gap)


def class_lattice(G: RingClassGroup, A: int) -> LatticeModel:
    return lattice_from_level(G.reps[A], 1)[0]
