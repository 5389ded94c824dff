"""Vector-valued real-analytic Eisenstein series for the Weil representation.

Two evaluation paths:

* the gamma-sum over coprime pairs (c, d) in a box (absolutely convergent for Re s > 1);
* the Fourier side, where for each c the d-sum is done in closed form by Poisson
  summation and the c-sum is an Euler product of local Kloosterman-type factors
  times Dirichlet L-values.  This continues to every s where the L-values do.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import mpmath
import numpy as np
from scipy import special

from ._arith import factorint, primes_upto
from .qspace import DiscriminantGroup, LatticeModel
from .quadorder import ValidationError, kronecker_symbol
from .weilrep import VectorQExpansion, WeilRep, rho_of_gamma, weil_generators


class ContinuationError(ArithmeticError):
    pass


# -- L-functions of the quadratic character attached to the lattice -------------------


def lattice_character_modulus(L: LatticeModel) -> int:
    """chi(p) = kronecker(-det G, p) for the even (scaled) Gram matrix G of rank 2."""
    if L.rank != 2:
        raise ValidationError("rank-2 lattice expected")
    G = L.scaled_gram
    return -(G[0][0] * G[1][1] - G[0][1] * G[1][0])


def chi_value(delta: int, n: int) -> int:
    return int(kronecker_symbol(delta, n))


@lru_cache(maxsize=None)
def _character_table(delta: int) -> tuple[int, ...]:
    q = abs(delta)
    return tuple(chi_value(delta, a) for a in range(q))


@lru_cache(maxsize=4096)
def dirichlet_L_char(delta: int, s) -> complex:
    """L(s, (delta/.)) by Hurwitz zeta over one period (valid for every s != 1)."""
    if delta == 1:
        return complex(mpmath.zeta(s))
    return complex(mpmath.dirichlet(s, list(_character_table(delta))))


def completed_L(delta: int, s) -> complex:
    """Lambda(s) = |delta|^{s/2} pi^{-s/2} Gamma(s/2) L(s, chi) for an even character."""
    return complex(mpmath.power(abs(delta), s / 2) * mpmath.power(mpmath.pi, -s / 2) * mpmath.gamma(s / 2)) * dirichlet_L_char(delta, s)


# -- archimedean transforms ----------------------------------------------------------


def _F(a: float, m: float, v: float, scaled: bool = False) -> float:
    """int (t^2 + v^2)^{-a} e(-m t) dt (times e^{2 pi |m| v} when scaled)."""
    if m == 0:
        return math.sqrt(math.pi) * special.gamma(a - 0.5) / special.gamma(a) * v ** (1 - 2 * a)
    x = 2 * math.pi * abs(m) * v
    K = special.kve(a - 0.5, x) if scaled else special.kv(a - 0.5, x)
    return 2 * math.pi**a * abs(m) ** (a - 0.5) * v ** (0.5 - a) * K / special.gamma(a)


def _dF(a: float, m: float, v: float, scaled: bool = False) -> float:
    """d/dm of _F(a, m, v)."""
    if m == 0:
        return 0.0
    nu = a - 0.5
    C = 2 * math.pi**a * v**(-nu) / special.gamma(a)
    x = 2 * math.pi * abs(m) * v
    K = special.kve(nu - 1, x) if scaled else special.kv(nu - 1, x)
    return -math.copysign(1.0, m) * 2 * math.pi * v * C * abs(m) ** nu * K


def arch_transform(s: float, l: int, m: float, v: float, scaled: bool = False) -> complex:
    """int (t + iv)^{-l} |t + iv|^{l - s - 1} e(-m t) dt for l in {0, 2}.

    With ``scaled`` the result carries the factor e^{2 pi |m| v}.
    """
    sig = (s + 1) / 2
    if l == 0:
        return _F(sig, m, v, scaled)
    if l == 2:
        return _F(sig, m, v, scaled) - 2 * v * v * _F(sig + 1, m, v, scaled) + (v / math.pi) * _dF(sig + 1, m, v, scaled)
    raise ValidationError("weights 0 and 2 are supported")


# -- local data -----------------------------------------------------------------------


@dataclass
class EisensteinData:
    """Weil representation, cached rho(gamma)^{-1} e_0 columns and the character."""

    lattice: LatticeModel
    W: WeilRep
    delta: int
    _cols: dict = field(default_factory=dict, repr=False)
    _hcache: dict = field(default_factory=dict, repr=False)

    @property
    def disc(self) -> DiscriminantGroup:
        return self.W.disc

    @property
    def level(self) -> int:
        return self.disc.level

    def column(self, a: int, b: int, c: int, d: int) -> np.ndarray:
        """rho(gamma)^{-1} e_0; rho factors through SL2(Z/level) (even rank)."""
        N = self.level
        key = (a % N, b % N, c % N, d % N)
        col = self._cols.get(key)
        if col is None:
            R = rho_of_gamma(self.W, [[a, b], [c, d]])
            e0 = np.zeros(self.W.dim, dtype=complex)
            e0[0] = 1.0
            col = np.linalg.solve(R, e0)
            self._cols[key] = col
        return col

    def residue_columns(self, c: int) -> tuple[np.ndarray, np.ndarray]:
        """d0 in (Z/c)^x and the matrix of rho(gamma_{c,d0})^{-1} e_0 (rows)."""
        hit = self._hcache.get(c)
        if hit is not None:
            return hit
        ds, rows = [], []
        for d0 in range(c):
            if math.gcd(d0, c) != 1:
                continue
            a = pow(d0, -1, c) if c > 1 else 1
            b = (a * d0 - 1) // c
            ds.append(d0)
            rows.append(self.column(a, b, c, d0))
        out = (np.array(ds, dtype=float), np.array(rows))
        self._hcache[c] = out
        return out

    def H(self, c: int, nu: int, m: Fraction) -> complex:
        """sum_{d0 mod c} [rho(gamma_{c,d0})^{-1} e_0]_nu e(m d0 / c)."""
        ds, rows = self.residue_columns(c)
        ph = np.exp(2j * np.pi * float(m % c) * ds / c)
        return complex(np.dot(rows[:, nu], ph))

    def h(self, c: int, nu: int, m: Fraction) -> float:
        """sqrt|D| H_c: multiplicative in c and real for these lattices."""
        val = math.sqrt(self.disc.order) * self.H(c, nu, m)
        return val.real if abs(val.imag) < 1e-8 * max(1.0, abs(val)) else val


def eisenstein_data(L: LatticeModel) -> EisensteinData:
    W = weil_generators(L.disc)
    delta = lattice_character_modulus(L) if L.rank == 2 else 1
    return EisensteinData(L, W, delta)


def _local_factor(E: EisensteinData, p: int, nu: int, m: Fraction, w: float, kmin: int) -> complex:
    """sum_k h(p^k) p^{-kw}; terminating, or eventually geometric (m = 0)."""
    x = p ** (-w)
    vals = [1.0]
    k = 1
    while True:
        vals.append(E.h(p**k, nu, m))
        zero = 1e-8 * p ** (k / 2)
        if k >= kmin + 2:
            if abs(vals[-1]) < zero and abs(vals[-2]) < zero:
                return sum(v * x**j for j, v in enumerate(vals[:-2]))
            if k >= kmin + 3 and min(abs(t) for t in vals[-3:]) > zero:
                r1, r2 = vals[-2] / vals[-3], vals[-1] / vals[-2]
                if abs(r1 - r2) < 1e-7 * max(1, abs(r1)):
                    head = sum(v * x**j for j, v in enumerate(vals))
                    return head + vals[-1] * x ** (len(vals) - 1) * (r1 * x) / (1 - r1 * x)
        k += 1
        if p**k > 50000:
            raise ContinuationError(f"local series at p={p} neither terminates nor turns geometric")


def _vp(n: int, p: int) -> int:
    if n == 0:
        return 0
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def good_local_values(chi_p: int, p: int, v: int) -> list[int]:
    """h(p^k), k = 0..v+1, at a prime p not dividing 2|D| level with p^v || m."""
    vals = [1] + [chi_p**k * p ** (k - 1) * (p - 1) for k in range(1, v + 1)]
    vals.append(-(chi_p ** (v + 1)) * p**v)
    return vals


def dirichlet_Z(E: EisensteinData, nu: int, m: Fraction, w: float) -> complex:
    """sum_{c >= 1} H_c(nu, m) c^{-w}, continued via its Euler product."""
    chi = E.delta
    bad = set(factorint(2 * E.disc.order * E.level).keys())
    S = set(bad)
    if m != 0:
        S |= set(factorint(abs(m.numerator)).keys())
        S |= set(factorint(m.denominator).keys())
    S.discard(1)
    total = 1.0 + 0j
    for p in sorted(S):
        cp = chi_value(chi, p)
        x = p ** (-w)
        if p in bad:
            kmin = _vp(abs(m.numerator), p) + _vp(E.level, p)
            Fp = _local_factor(E, p, nu, m, w, kmin)
        else:
            Fp = sum(h * x**k for k, h in enumerate(good_local_values(cp, p, _vp(abs(m.numerator), p))))
        good = (1 - cp * x) if m != 0 else (1 - cp * x) / (1 - cp * p * x)
        total *= Fp / good
    if m != 0:
        glob = 1 / dirichlet_L_char(chi, w)
    else:
        glob = dirichlet_L_char(chi, w - 1) / dirichlet_L_char(chi, w)
    return total * glob / math.sqrt(E.disc.order)


# -- evaluation -------------------------------------------------------------------------


def _near_pole(s: float, l: int) -> bool:
    # Gamma(s/2)-type poles of the m = 0 transform cancel against L(s, chi) zeros
    return abs(s) < 1e-7 or abs(s + 2) < 1e-7


def fourier_coefficient(E: EisensteinData, nu: int, m: Fraction, s: float, l: int, v: float, scaled: bool = False) -> complex:
    """A(s, nu, m, v): E_nu(tau, s; l) = sum_m A(s, nu, m, v) e(m u).

    ``scaled`` multiplies by e^{2 pi |m| v} (avoids underflow at large heights).
    """
    if _near_pole(s, l):
        h = 1e-5
        return 0.5 * (fourier_coefficient(E, nu, m, s + h, l, v, scaled) + fourier_coefficient(E, nu, m, s - h, l, v, scaled))
    lead = v ** ((s + 1 - l) / 2)
    out = lead if (nu == 0 and m == 0) else 0.0
    if m == 0 and E.disc.q_values[nu] != 0:
        return out
    a = arch_transform(s, l, float(m), v, scaled)
    if a == 0:
        return out
    return out + lead * a * dirichlet_Z(E, nu, m, s + 1)


def mode_range(E: EisensteinData, nu: int, v: float, tol: float = 1e-15) -> list[Fraction]:
    """Exponents m in q(nu) + Z with |m| up to the exponential cutoff."""
    q0 = E.disc.q_values[nu]
    Mmax = max(2.0, -math.log(tol) / (2 * math.pi * v)) + 1
    lo = math.floor(-Mmax - q0)
    hi = math.ceil(Mmax - q0)
    return [q0 + k for k in range(lo, hi + 1) if abs(q0 + k) <= Mmax]


def eval_fourier(E: EisensteinData, tau: complex, s: float, l: int, tol: float = 1e-15) -> np.ndarray:
    u, v = tau.real, tau.imag
    out = np.zeros(E.disc.order, dtype=complex)
    for nu in range(E.disc.order):
        for m in mode_range(E, nu, v, tol):
            A = fourier_coefficient(E, nu, m, s, l, v)
            if A != 0:
                out[nu] += A * np.exp(2j * np.pi * float(m) * u)
    return out


@dataclass
class EisensteinEval:
    lattice: LatticeModel
    l: int
    s: complex
    tau: complex
    value: np.ndarray
    trunc_C: int
    est_error: float


def eval_eisenstein(L: LatticeModel, tau: complex, s: float, l: int, trunc_C: int, E: EisensteinData | None = None, estimate: bool = True) -> EisensteinEval:
    """Gamma-sum over coprime (c, d), |c|, |d| <= trunc_C, one matrix per +-pair."""
    if trunc_C > 0 and s.real <= 1:
        raise ValidationError("gamma-sum needs Re(s) > 1; use the Fourier-side evaluation")
    E = E or eisenstein_data(L)
    val = _gamma_sum(E, tau, s, l, trunc_C)
    err = 0.0
    if estimate and trunc_C > 0:
        half = _gamma_sum(E, tau, s, l, max(1, trunc_C // 2))
        # tail of sum |c tau + d|^{-(s+1)} scales like C^{1 - s}
        rate = 2.0 ** (1 - s.real)
        err = float(np.abs(val - half).max()) * rate / (1 - rate)
    return EisensteinEval(L, l, s, tau, val, trunc_C, err)


def _gamma_sum(E: EisensteinData, tau: complex, s, l: int, C: int) -> np.ndarray:
    v = tau.imag
    sig = (s + 1 - l) / 2
    out = np.zeros(E.disc.order, dtype=complex)
    out[0] = v**sig
    if C == 0:
        return out
    terms = []
    for c in range(1, C + 1):
        for d in range(-C, C + 1):
            if math.gcd(c, d) != 1:
                continue
            a = pow(d, -1, c) if c > 1 else 1
            b = (a * d - 1) // c
            j = c * tau + d
            w = j ** (-l) * (v / abs(j) ** 2) ** sig
            terms.append(w * E.column(a, b, c, d))
    # c = 0 contributes only the identity coset; d > 0 representative
    if terms:
        out += np.sum(np.array(terms), axis=0)
    return out


def fourier_coeffs(evaluator, v: float, denom: int, M_modes: int, check: bool = True, tol: float = 1e-8) -> np.ndarray:
    """DFT in u of samples evaluator(u + iv) on [0, denom); returns (modes, cosets) array.

    Row k holds the coefficient of e(k u / denom) for k in [-M/2, M/2).
    """
    def dft(M):
        us = np.arange(M) * denom / M
        vals = np.array([evaluator(complex(u, v)) for u in us])
        F = np.fft.fft(vals, axis=0) / M
        return np.fft.fftshift(F, axes=0)

    F = dft(M_modes)
    if check:
        F2 = dft(2 * M_modes)
        inner = F2[M_modes // 2 : M_modes // 2 + M_modes]
        if np.abs(inner - F).max() > tol * max(1.0, np.abs(F).max()):
            raise ContinuationError("DFT aliasing: doubling the sample count changed the coefficients")
    return F


# -- identities -----------------------------------------------------------------------


def completed_value(E: EisensteinData, tau: complex, s: float) -> np.ndarray:
    """E*(tau, s) = Lambda(s + 1, chi) E(tau, s; 0)."""
    return completed_L(E.delta, s + 1) * eval_fourier(E, tau, s, 0)


def completed_fe_residual(L2: LatticeModel, tau: complex, s: float, E: EisensteinData | None = None) -> float:
    E = E or eisenstein_data(L2)
    if L2.signature != (1, 1):
        raise ValidationError("signature (1,1) lattice expected")
    if s == 0:
        return 0.0
    a = completed_value(E, tau, s)
    b = completed_value(E, tau, -s)
    return float(np.abs(a - b).max() / max(1.0, np.abs(a).max()))


@dataclass
class Derivative:
    value: np.ndarray
    error: float


def richardson_derivative(fn, s0: float, step: float = 1e-3, tol: float = 1e-6) -> Derivative:
    """Central difference with one Richardson step (h, h/2)."""
    d1 = (np.asarray(fn(s0 + step)) - np.asarray(fn(s0 - step))) / (2 * step)
    h2 = step / 2
    d2 = (np.asarray(fn(s0 + h2)) - np.asarray(fn(s0 - h2))) / (2 * h2)
    rich = d2 + (d2 - d1) / 3
    err = float(np.abs(rich - d2).max())
    if err > tol * max(1.0, float(np.abs(rich).max())):
        raise ContinuationError(f"Richardson levels disagree by {err:.2e}")
    return Derivative(rich, err)


def derivative_in_s(L: LatticeModel, tau: complex, l: int, s0: float = 0.0, step: float = 1e-3, E: EisensteinData | None = None) -> Derivative:
    E = E or eisenstein_data(L)
    return richardson_derivative(lambda s: eval_fourier(E, tau, s, l), s0, step)


def lowering(fn, tau: complex, h: float = 1e-4) -> np.ndarray:
    """L_2 f = -2i v^2 d f / d tau-bar by central differences (fn maps tau to a vector)."""
    du = (np.asarray(fn(tau + h)) - np.asarray(fn(tau - h))) / (2 * h)
    dv = (np.asarray(fn(tau + 1j * h)) - np.asarray(fn(tau - 1j * h))) / (2 * h)
    dbar = 0.5 * (du + 1j * dv)
    return -2j * tau.imag**2 * dbar


def lowering_residual(L2: LatticeModel, tau: complex, s: float, E: EisensteinData | None = None, h: float = 1e-4) -> float:
    """|| L_2 E(tau, s; 2) - (s - 1)/2 E(tau, s; 0) ||."""
    E = E or eisenstein_data(L2)
    lhs = lowering(lambda t: eval_fourier(E, t, s, 2), tau, h)
    rhs = 0.5 * (s - 1) * eval_fourier(E, tau, s, 0)
    return float(np.abs(lhs - rhs).max())


# -- kappa -----------------------------------------------------------------------------


@dataclass
class KappaTable:
    lattice_key: str
    entries: dict[tuple[int, Fraction], float]
    v_grid: list[float]
    residuals: dict[tuple[int, Fraction], float] = field(default_factory=dict)
    log_coeff: float | None = None

    def to_json(self) -> dict:
        return {
            "lattice_key": self.lattice_key,
            "entries": [
                {"mu": mu, "m_num": m.numerator, "m_den": m.denominator, "kappa": k}
                for (mu, m), k in sorted(self.entries.items())
            ],
            "v_grid": list(self.v_grid),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KappaTable":
        ent = {(int(e["mu"]), Fraction(int(e["m_num"]), int(e["m_den"]))): float(e["kappa"]) for e in obj["entries"]}
        return cls(str(obj["lattice_key"]), ent, [float(v) for v in obj["v_grid"]])

    def write(self, path: Path) -> None:
        from .cache import atomic_write_text

        atomic_write_text(Path(path), json.dumps(self.to_json(), sort_keys=True))

    @classmethod
    def read(cls, path: Path) -> "KappaTable":
        return cls.from_json(json.loads(Path(path).read_text()))

    def holomorphic_part(self, disc: DiscriminantGroup, denom: int) -> VectorQExpansion:
        coeffs = {(mu, int(m * denom)): complex(k) for (mu, m), k in self.entries.items() if m >= 0 and k != 0 and (m * denom).denominator == 1}
        return VectorQExpansion(disc, 2, denom, coeffs)


def b_coefficient(E: EisensteinData, mu: int, m: Fraction, v: float, step: float = 1e-3) -> float:
    """Coefficient of e(m tau) e_mu in d/ds E(tau, s; 2) at s = 0 (so b = e^{2 pi m v} dA/ds)."""
    d = richardson_derivative(lambda s: np.array([fourier_coefficient(E, mu, m, s, 2, v, scaled=True)]), 0.0, step, tol=1e-5)
    return float((d.value[0] * math.exp(2 * math.pi * (float(m) - abs(float(m))) * v)).real)


def _aitken(b1: float, b2: float, b3: float) -> float:
    d1, d2 = b2 - b1, b3 - b2
    den = d2 - d1
    if abs(d2) < 1e-14 or abs(den) < 1e-300:
        return b3
    return b3 - d2 * d2 / den


def kappa_table(
    L2: LatticeModel,
    mu_m_list,
    v_grid=(4.0, 8.0, 16.0, 32.0),
    tol: float = 1e-4,
    E: EisensteinData | None = None,
    key: str | None = None,
    subtract_log: str = "auto",
) -> KappaTable:
    """kappa(mu, m) = lim_{v -> oo} b(mu, m, v) by Aitken extrapolation on a doubling grid.

    At (0, 0) a multiple a*log(v) is removed first: a = 1 for "always", none for
    "never"; "auto" fits a only when successive differences fail to shrink (the
    fitted value is kept in ``log_coeff``).
    """
    E = E or eisenstein_data(L2)
    vs = list(v_grid)
    if len(vs) < 3:
        raise ValidationError("need at least three heights")
    ent, res = {}, {}
    log_coeff = None
    for mu, m in mu_m_list:
        m = Fraction(m)
        seq = [b_coefficient(E, mu, m, v) for v in vs]
        if mu == 0 and m == 0 and subtract_log != "never":
            d1, d2 = seq[-2] - seq[-3], seq[-1] - seq[-2]
            if subtract_log == "always":
                a = 1.0
            elif abs(d2) > 0.8 * abs(d1) and abs(d2) > tol:
                a = d2 / math.log(vs[-1] / vs[-2])
            else:
                a = 0.0
            log_coeff = a
            seq = [b - a * math.log(v) for b, v in zip(seq, vs)]
        ext = [_aitken(*seq[i : i + 3]) for i in range(len(seq) - 2)]
        r = abs(ext[-1] - ext[-2]) if len(ext) >= 2 else abs(ext[-1] - seq[-1])
        if r > tol * max(1.0, abs(ext[-1])):
            raise ContinuationError(f"kappa({mu},{m}) does not stabilize: {seq}")
        ent[(mu, m)] = ext[-1]
        res[(mu, m)] = r
    return KappaTable(key or L2.name, ent, vs, res, log_coeff)


# -- Siegel-Weil ------------------------------------------------------------------------


@dataclass
class SiegelWeilReport:
    constant: float
    residual: float
    per_point: list[float]


def siegel_weil_residual(G, A: int, taus, quad_n: int = 64, E: EisensteinData | None = None) -> SiegelWeilReport:
    """Fit E(tau, 0; 0) = kappa * (class-averaged geodesic period of v^{1/2} theta) at taus[0]."""
    from .qspace import lattice_from_level
    from .theta import geodesic_average, geodesic_set

    _, _, L2 = lattice_from_level(G.reps[A], 1)
    E = E or eisenstein_data(L2)
    geo = geodesic_set(G, A)
    lhs, rhs = [], []
    for tau in taus:
        acc = np.zeros(L2.disc.order, dtype=complex)
        for h in range(G.order):
            acc += geodesic_average(L2, tau, geo, quad_n, h, G)
        lhs.append(math.sqrt(tau.imag) * acc / G.order)
        rhs.append(eval_fourier(E, tau, 0.0, 0))
    j = int(np.argmax(np.abs(lhs[0])))
    const = (rhs[0][j] / lhs[0][j]).real
    res = [float(np.abs(const * a - b).max() / np.abs(b).max()) for a, b in zip(lhs, rhs)]
    return SiegelWeilReport(const, max(res[1:]) if len(res) > 1 else 0.0, res)
