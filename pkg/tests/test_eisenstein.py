import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from geogreen.eisenstein import (
    ContinuationError,
    KappaTable,
    b_coefficient,
    completed_fe_residual,
    completed_L,
    completed_value,
    derivative_in_s,
    dirichlet_L_char,
    eisenstein_data,
    eval_eisenstein,
    eval_fourier,
    fourier_coeffs,
    kappa_table,
    lowering,
    lowering_residual,
    richardson_derivative,
    siegel_weil_residual,
)
from geogreen.qspace import lattice_from_level
from geogreen.quadorder import ValidationError, make_field, ring_class_group

GRID = (0.13 + 1.05j, -0.31 + 0.82j, 0.42 + 1.6j)


@pytest.fixture(scope="module")
def E5(lat5):
    return eisenstein_data(lat5[2])


def L_oracle(delta, s, N=20000):
    """Direct partial sums (s > 1); the zeta case adds the integral tail N^{1-s}/(s-1)."""
    from sympy import kronecker_symbol

    head = math.fsum(int(kronecker_symbol(delta, n)) / n**s for n in range(1, N))
    return head + (N ** (1 - s) / (s - 1) - 0.5 * N**-s if delta == 1 else 0.0)


# -- Dirichlet L-values -------------------------------------------------------------------


def test_L_at_one_class_number_formula():
    # 2 log(golden ratio) / sqrt 5
    assert dirichlet_L_char(5, 1.0).real == pytest.approx(2 * math.log((1 + math.sqrt(5)) / 2) / math.sqrt(5), rel=1e-13)


@pytest.mark.parametrize("delta,s", [(5, 2.0), (8, 3.0), (13, 2.5), (1, 2.0)])
def test_L_against_partial_sums(delta, s):
    assert dirichlet_L_char(delta, s).real == pytest.approx(L_oracle(delta, s), abs=1e-6)


@given(st.floats(0.05, 0.95))
def test_completed_L_is_symmetric(s):
    for delta in (5, 8, 40):
        a, b = completed_L(delta, s), completed_L(delta, 1 - s)
        assert abs(a - b) < 1e-12 * abs(a)


# -- evaluation -------------------------------------------------------------------------


def test_gamma_sum_trivial_truncation(lat5, E5):
    tau = 0.2 + 1.3j
    r = eval_eisenstein(lat5[2], tau, 2.0, 0, 0, E5)
    expect = np.zeros(5, dtype=complex)
    expect[0] = 1.3 ** 1.5
    assert np.allclose(r.value, expect) and r.est_error == 0.0


def test_gamma_sum_needs_convergence(lat5):
    with pytest.raises(ValidationError):
        eval_eisenstein(lat5[2], 1j, 0.5, 0, 10)


def test_fourier_against_gamma_sum(lat5, E5):
    tau = GRID[0]
    four = eval_fourier(E5, tau, 3.0, 0)
    r = eval_eisenstein(lat5[2], tau, 3.0, 0, 80, E5)
    gap = np.abs(r.value - four).max()
    assert gap < 1e-6
    assert gap <= 2 * r.est_error


def test_S_transformation_at_s2(lat5, E5):
    from geogreen.weilrep import weil_generators

    W = weil_generators(lat5[2].disc, lat5[2].signature)
    tau = GRID[1]
    lhs = eval_fourier(E5, -1 / tau, 2.0, 0)
    rhs = W.rhoS @ eval_fourier(E5, tau, 2.0, 0)
    # weight 0 in one representation or its conjugate: E is symmetric under mu -> -mu
    assert np.allclose(lhs, rhs, atol=1e-11)


def test_T_periodicity(E5):
    tau = GRID[2]
    phase = np.exp(2j * np.pi * np.array([float(q) for q in E5.disc.q_values]))
    assert np.allclose(eval_fourier(E5, tau + 1, 0.3, 0), phase * eval_fourier(E5, tau, 0.3, 0), atol=1e-13)


@pytest.mark.parametrize("tau", GRID)
@pytest.mark.parametrize("s", [0.37, 0.8, -0.25])
def test_completed_fe(lat5, E5, tau, s):
    assert completed_fe_residual(lat5[2], tau, s, E5) < 1e-10


def test_fe_needs_11(lat5):
    with pytest.raises(ValidationError):
        completed_fe_residual(lat5[0], 1j, 0.3)


# -- derivative at s = 0 ---------------------------------------------------------------------


@pytest.mark.parametrize("tau", GRID)
def test_derivative_is_forced_by_completion(lat5, E5, tau):
    d = derivative_in_s(lat5[2], tau, 0, E=E5)
    val = eval_fourier(E5, tau, 0.0, 0)
    h = 1e-5
    lam = (completed_L(E5.delta, 1 + h) - completed_L(E5.delta, 1 - h)).real / (2 * h)
    pred = -lam / completed_L(E5.delta, 1.0).real * val
    assert np.allclose(d.value, pred, atol=1e-8)
    # so E'(tau, 0) is not zero
    assert np.abs(d.value).max() > 0.1


@pytest.mark.parametrize("tau", GRID)
def test_completed_derivative_vanishes(E5, tau):
    d = richardson_derivative(lambda s: completed_value(E5, tau, s), 0.0)
    assert np.abs(d.value).max() < 1e-9


def test_richardson_on_polynomial():
    d = richardson_derivative(lambda s: np.array([s**3 - 2 * s]), 0.5, step=1e-2, tol=1e-3)
    assert d.value[0] == pytest.approx(3 * 0.25 - 2, abs=1e-10)


def test_richardson_flags_noise():
    rng = np.random.default_rng(0)
    with pytest.raises(ContinuationError):
        richardson_derivative(lambda s: np.array([rng.normal()]), 0.0)


@pytest.mark.parametrize("s", [0.0, 0.4])
def test_lowering(lat5, E5, s):
    assert lowering_residual(lat5[2], GRID[0], s, E5) < 1e-6


def test_lowering_of_holomorphic_is_zero():
    assert np.abs(lowering(lambda t: np.array([np.exp(2j * np.pi * t)]), 0.1 + 0.9j)).max() < 1e-8


def test_weight_two_constant_term(E5):
    # at s = 0 the coherent constant term is 2 v^{-1/2}
    for v in (1.0, 3.0):
        f = eval_fourier(E5, complex(0, v), 0.0, 2)
        u = fourier_coeffs(lambda t: eval_fourier(E5, t, 0.0, 2), v, 5, 64)
        assert u[32, 0].real == pytest.approx(2 / math.sqrt(v), rel=1e-6)
        assert np.isfinite(f).all()


def test_fourier_coeffs_recovers_modes():
    fn = lambda t: np.array([np.exp(2j * np.pi * t) + 0.5 * np.exp(-4j * np.pi * t / 3)])
    F = fourier_coeffs(fn, 1.0, 3, 16)
    assert F[8 + 3, 0] * np.exp(2 * np.pi * 1.0) == pytest.approx(1.0, rel=1e-9)


def test_fourier_coeffs_detects_aliasing():
    fn = lambda t: np.array([np.exp(2j * np.pi * 9 * t)])
    with pytest.raises(ContinuationError):
        fourier_coeffs(fn, 0.01, 1, 8)


# -- kappa ---------------------------------------------------------------------------


def test_kappa_table(lat5, E5, tmp_path):
    K = kappa_table(lat5[2], [(0, 0), (0, 1), (1, Fraction(9, 5))], E=E5)
    assert K.log_coeff == 0.0
    assert abs(K.entries[(0, Fraction(0))]) < 1e-8
    assert K.entries[(0, Fraction(1))] == pytest.approx(56.3164, rel=1e-4)
    K.write(tmp_path / "k.json")
    back = KappaTable.read(tmp_path / "k.json")
    assert back.entries == K.entries
    g = K.holomorphic_part(E5.disc, 5)
    assert g.coefficient(0, Fraction(1)) == K.entries[(0, Fraction(1))]


def test_constant_term_derivative_is_a_pure_power(E5):
    b = [b_coefficient(E5, 0, Fraction(0), v) for v in (2.0, 8.0, 32.0)]
    assert b[1] / b[0] == pytest.approx(0.5, rel=1e-6)
    assert b[2] / b[1] == pytest.approx(0.5, rel=1e-6)


def test_kappa_forced_log_subtraction_fails(lat5, E5):
    with pytest.raises(ContinuationError):
        kappa_table(lat5[2], [(0, 0)], E=E5, subtract_log="always")


def test_kappa_needs_three_heights(lat5, E5):
    with pytest.raises(ValidationError):
        kappa_table(lat5[2], [(0, 1)], v_grid=(4, 8), E=E5)


def test_kappa_json_shape():
    K = KappaTable("x", {(0, Fraction(1, 5)): 1.5}, [4.0, 8.0, 16.0])
    obj = json.loads(json.dumps(K.to_json()))
    assert obj["entries"] == [{"mu": 0, "m_num": 1, "m_den": 5, "kappa": 1.5}]


# -- Siegel-Weil ------------------------------------------------------------------------


def test_siegel_weil_d5(G5):
    r = siegel_weil_residual(G5, 0, [0.1 + 1.0j, -0.2 + 0.8j, 0.3 + 1.3j])
    assert r.constant == pytest.approx(2.0, abs=1e-9)
    assert r.residual < 1e-9


@pytest.mark.slow
def test_siegel_weil_d40():
    G = ring_class_group(make_field(10))
    r = siegel_weil_residual(G, 0, [0.1 + 1.0j, -0.2 + 0.8j])
    assert r.constant == pytest.approx(2.0, abs=1e-9)
    assert r.residual < 1e-9
