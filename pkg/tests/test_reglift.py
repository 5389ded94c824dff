import math
from fractions import Fraction
from itertools import product

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geogreen.eisenstein import KappaTable
from geogreen.qspace import lattice_from_gram
from geogreen.quadorder import ValidationError, characters, make_field, ring_class_group
from geogreen.theta import TubePoint, geodesic_set
from geogreen.weilrep import HarmonicMaassInput, VectorQExpansion
from geogreen.reglift import (
    ClassInput,
    a0_constant,
    class_lattice,
    combine,
    ct_pairing,
    ct_pairing_direct,
    divisor_point,
    geodesic_convergence,
    geodesic_point,
    green_diagnostics,
    invariant_input,
    isotropic_subgroups,
    j2_coefficients,
    j_coefficients,
    laplacian,
    main_formula_rhs,
    main_prefactor,
    orthogonal_split,
    reg_integral,
)

Z0 = TubePoint(-0.4647 + 0.6683j, -0.4551 + 2.25j)
EPS1 = (3 + math.sqrt(5)) / 2


@pytest.fixture(scope="module")
def L5(G5):
    return class_lattice(G5, 0)


@pytest.fixture(scope="module")
def fj(L5):
    return invariant_input(L5, "j")


# -- inputs ---------------------------------------------------------------------------


def test_j_coefficients_known():
    c = j_coefficients(3)
    assert c[:5] == [1, 0, 196884, 21493760, 864299970]


@pytest.mark.parametrize("tau", [1j, 0.1 + 1.2j, -0.3 + 0.9j])
def test_j_series_against_mpmath(tau):
    c = j_coefficients(40)
    q = complex(mpmath.exp(2j * mpmath.pi * tau))
    val = sum(ck * q ** (k - 1) for k, ck in enumerate(c))
    ref = complex(1728 * mpmath.kleinj(tau)) - 744
    assert abs(val - ref) < 1e-9 * abs(ref)
    c2 = j2_coefficients(40)
    val2 = sum(ck * q ** (k - 2) for k, ck in enumerate(c2))
    assert abs(val2 - (ref**2 - 393768)) < 1e-8 * abs(ref) ** 2


def test_isotropic_subgroups_by_enumeration(L5):
    D = L5.disc
    found = {tuple(h) for h in isotropic_subgroups(D)}
    brute = set()
    for i in range(1, D.order):
        cyc = {0}
        k = i
        while k not in cyc:
            cyc.add(k)
            k = D.add(k, i)
        if len(cyc) == 5 and all(D.q_values[x] == 0 for x in cyc):
            brute.add(tuple(sorted(cyc)))
    assert found == brute and len(found) == 2


def test_input_lives_on_negated_form(L5, fj):
    Df = fj.plus.disc
    assert all((Df.q_values[i] + L5.disc.q_values[i]) % 1 == 0 for i in range(L5.disc.order))
    with pytest.raises(ValidationError):
        invariant_input(L5, "weird")


# -- the regularized lift ---------------------------------------------------------------------


def test_stability_and_value(L5, fj):
    r = reg_integral(fj, L5, Z0)
    assert r.A0 == 0.0
    assert r.stability < 1e-4
    assert r.value == pytest.approx(-51.2333193, abs=1e-6)
    assert r.quad_error < 1e-8


def test_unit_invariance(L5, fj):
    a = reg_integral(fj, L5, Z0).value
    b = reg_integral(fj, L5, TubePoint(EPS1**2 * Z0.z1, Z0.z2)).value
    assert b == pytest.approx(a, abs=1e-8)


def test_zero_input(L5, fj):
    zero = combine((1.0, fj), (-1.0, fj))
    r = reg_integral(zero, L5, Z0)
    assert r.value == 0.0 and r.stability == 0.0


def test_linearity(L5, fj):
    fc = invariant_input(L5, "const")
    a = reg_integral(fj, L5, Z0).value
    b = reg_integral(fc, L5, Z0).value
    mix = reg_integral(combine((2.0, fj), (-3.0, fc)), L5, Z0).value
    # the constant input goes through the Laurent probe (accurate to ~1e-7)
    assert mix == pytest.approx(2 * a - 3 * b, abs=1e-6)


def test_constant_input_uses_laurent_probe(L5):
    f = invariant_input(L5, "const", scale=2.0)
    r = reg_integral(f, L5, Z0)
    assert r.A0 == 2.0 and r.ct_fit is not None
    assert r.value == pytest.approx(1.01265833, abs=1e-6)


def test_input_checks(L5, fj, lat5):
    with pytest.raises(ValidationError):
        reg_integral(HarmonicMaassInput(VectorQExpansion(fj.plus.disc, 2, 1, {})), L5, Z0)
    other = invariant_input(lattice_from_gram([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), "const")
    with pytest.raises(ValidationError):
        reg_integral(other, L5, Z0)


def test_point_on_divisor_is_refused(L5, fj):
    z, _ = divisor_point(L5, 0, Fraction(1))
    with pytest.raises(ValidationError, match="singular divisor"):
        reg_integral(fj, L5, z)


def test_geodesic_point_shape():
    z = geodesic_point(0.4, 0.65)
    assert z.z1.real == 0 and z.z2.real == 0
    assert z.z1.imag * z.z2.imag == pytest.approx(math.exp(0.65))
    assert z.z1.imag / z.z2.imag == pytest.approx(math.exp(0.4))


@pytest.mark.slow
def test_geodesic_convergence(G5, L5):
    geo = geodesic_set(G5, 0)
    f = invariant_input(L5, "j2")
    out = geodesic_convergence(f, L5, geo, G5, ns=(16, 32, 64), t1=0.65)
    assert out["converged"]
    assert out["values"][-1] == pytest.approx(-130.23597878665 / 2, abs=1e-8)


def test_geodesic_grid_sizes_checked(G5, L5, fj):
    with pytest.raises(ValidationError):
        geodesic_convergence(fj, L5, geodesic_set(G5, 0), G5, ns=(3, 4, 8))


# -- constant terms ---------------------------------------------------------------------


def _a2_input(coeffs):
    L1 = lattice_from_gram([[2, 1], [1, 2]])
    return L1, HarmonicMaassInput(VectorQExpansion(L1.disc.negated(), 0, 3, coeffs))


def a0_brute(L1, f, B=6):
    S = np.array(L1.scaled_gram, dtype=float)
    Sinv = [[Fraction(x).limit_denominator(100) for x in r] for r in np.linalg.inv(S)]
    tot = 0.0
    for w in product(range(-B, B + 1), repeat=2):
        x = [sum(Sinv[i][j] * w[j] for j in range(2)) for i in range(2)]
        Q = sum(x[i] * L1.scaled_gram[i][j] * x[j] for i in range(2) for j in range(2)) / 2
        mu = L1.disc.index_of([t % 1 for t in x])
        tot += f.plus.coefficient(mu, -Q).real
    return tot


def test_a0_against_brute():
    L1, f = _a2_input({(0, -3): 2.0, (0, 0): 0.5})
    iso = [i for i in range(3) if L1.disc.q_values[i] == Fraction(1, 3)]
    f.plus.coeffs[(iso[0], -1)] = 1.5
    f.plus.coeffs[(iso[0], -4)] = -1.0
    assert a0_constant(f, L1) == pytest.approx(a0_brute(L1, f), abs=1e-12)
    # six roots, the zero vector, three vectors each of Q = 1/3 and Q = 4/3 in the coset
    assert a0_constant(f, L1) == pytest.approx(2.0 * 6 + 0.5 + 1.5 * 3 - 1.0 * 3, abs=1e-12)


def test_a0_indefinite(lat5):
    L2 = lat5[2]
    f = HarmonicMaassInput(VectorQExpansion(L2.disc.negated(), 0, 1, {(0, 0): 3.0}))
    assert a0_constant(f, L2) == 3.0
    g = HarmonicMaassInput(VectorQExpansion(L2.disc.negated(), 0, 1, {(0, -1): 1.0}))
    with pytest.raises(ValidationError):
        a0_constant(g, L2)


@pytest.fixture(scope="module")
def split_setup():
    L1 = lattice_from_gram([[2, 1], [1, 2]])
    L2 = lattice_from_gram([[2]])
    L = lattice_from_gram([[2, 1, 0], [1, 2, 0], [0, 0, 2]])
    sp = orthogonal_split(L1, L2, L)
    return L1, L2, L, sp


def _random_triple(L1, L2, L, sp, seed):
    rng = np.random.default_rng(seed)
    theta = {}
    for mu in range(L1.disc.order):
        base = L1.disc.q_values[mu]
        for k in range(3):
            theta[(mu, int((base + k) * 3))] = float(rng.integers(-3, 4))
    kap = {}
    for mu in range(L2.disc.order):
        base = L2.disc.q_values[mu]
        for k in range(2):
            kap[(mu, base + k)] = float(rng.normal())
    fco = {}
    Dn = L.disc.negated()
    for a in range(L1.disc.order):
        for b in range(L2.disc.order):
            mu = int(sp[a, b])
            for n in range(-60, 1):
                if (Fraction(n, 12) - Dn.q_values[mu]) % 1 == 0:
                    fco[(mu, n)] = float(rng.integers(-5, 6))
    return (
        VectorQExpansion(Dn, 0, 12, fco),
        VectorQExpansion(L1.disc, 1, 3, theta),
        KappaTable("t", kap, [4.0, 8.0, 16.0]),
    )


def test_orthogonal_split_is_bijective(split_setup):
    L1, L2, L, sp = split_setup
    assert sorted(sp.ravel()) == list(range(L.disc.order))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ct_pairing_against_dft(split_setup, seed):
    L1, L2, L, sp = split_setup
    f, th, K = _random_triple(L1, L2, L, sp, seed)
    a = ct_pairing(f, th, K, sp)
    brute = sum(
        c1 * c2 * f.coefficient(int(sp[m1, m2]), -(Fraction(n1, 3) + e2)).real
        for (m1, n1), c1 in th.coeffs.items()
        for (m2, e2), c2 in K.entries.items()
    )
    assert a == pytest.approx(brute, abs=1e-12 * max(1.0, abs(a)))
    # low height keeps the e^{2 pi |m| v} growth of the input from swamping the mean
    b = ct_pairing_direct(f, th, K, sp, v=0.3, n=64)
    assert a == pytest.approx(b, abs=1e-8 * max(1.0, abs(a)))


@settings(max_examples=15)
@given(st.floats(-4, 4), st.floats(-4, 4))
def test_ct_pairing_is_linear_in_input(split_setup, x, y):
    L1, L2, L, sp = split_setup
    f, th, K = _random_triple(L1, L2, L, sp, 5)
    g, _, _ = _random_triple(L1, L2, L, sp, 6)
    lhs = ct_pairing(f.scaled(x) + g.scaled(y), th, K, sp)
    rhs = x * ct_pairing(f, th, K, sp) + y * ct_pairing(g, th, K, sp)
    assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)))


def test_orthogonal_split_rank_check(split_setup):
    L1, L2, L, _ = split_setup
    with pytest.raises(ValidationError):
        orthogonal_split(L1, L1, L)


# -- main formula -----------------------------------------------------------------------


def test_prefactor_value(G5):
    assert main_prefactor(G5) == pytest.approx(-math.sqrt(5) / (2 * math.log((3 + math.sqrt(5)) / 2)), rel=1e-14)
    assert main_prefactor(G5) == pytest.approx(-1.1616859, abs=1e-7)


def test_rhs_zero_and_missing_class():
    G = ring_class_group(make_field(10))
    chi = characters(G)[1]
    fam = [ClassInput(G.label_str(i), None) for i in range(G.order)]
    rep = main_formula_rhs(fam, chi, G)
    assert rep.rhs == 0 and rep.to_json()["gap"] == "not-computable"
    with pytest.raises(ValidationError, match="missing"):
        main_formula_rhs(fam[:1], chi, G)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_rhs_linear_in_geodesic_terms(a, b):
    G = ring_class_group(make_field(10))
    chi = characters(G)[1]
    fam = [ClassInput(G.label_str(0), None, geodesic=a), ClassInput(G.label_str(1), None, geodesic=b)]
    rep = main_formula_rhs(fam, chi, G, vol=1.0, lhs=0.0)
    expect = main_prefactor(G) * 0.5 * (a * chi(0) + b * chi(1))
    assert abs(rep.rhs - expect) < 1e-12 * (1 + abs(expect))
    assert rep.gap == pytest.approx(abs(expect), abs=1e-12)


# -- Green function behaviour -----------------------------------------------------------


def test_laplacian_of_known_functions():
    # Delta = -y^2 (dx^2 + dy^2) per variable: log y_1 -> 1, y_2 -> 0 ... y^s -> s(1-s) y^s
    fn = lambda z: math.log(z.z1.imag) + z.z2.imag ** 0.3
    z = TubePoint(0.2 + 1.3j, -0.1 + 0.7j)
    assert laplacian(fn, z) == pytest.approx(1.0 + 0.3 * 0.7 * 0.7**0.3, rel=1e-6)


def test_divisor_point_contains_vector(L5):
    z, x = divisor_point(L5, 0, Fraction(1))
    S = np.array(L5.scaled_gram, dtype=float)
    assert 0.5 * x @ S @ x == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        divisor_point(L5, 0, Fraction(0))


@pytest.mark.slow
def test_log_singularity_and_harmonicity(L5, fj):
    rep = green_diagnostics(fj, L5, divisor=(0, Fraction(1)), points=(Z0,))
    assert rep.slope == pytest.approx(-2.0, abs=1e-3)
    assert rep.eigen_target == 0.0
    assert abs(rep.laplacian[0]) < 1e-6
