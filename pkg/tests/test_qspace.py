import random
from collections import Counter
from fractions import Fraction
from itertools import product

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from geogreen._arith import det, squarefree_part
from geogreen.qspace import (
    LatticeModel,
    QuadraticSpaceModel,
    build_space,
    dual_and_discriminant,
    eichler_lattice,
    lattice_from_gram,
    lattice_from_level,
    minimal_even_scale,
    paper_basis_gram_qA,
    space_invariants,
    unary_lattice,
)
from geogreen.quadorder import ValidationError, make_field, ring_class_group

from .conftest import FIELD_LIST


def disc_brute(S):
    """Multiset of q-values on L^vee/L from S^{-1} k, k over a box of representatives."""
    M = sp.Matrix(S)
    Minv = M.inv()
    n = M.shape[0]
    d = abs(int(M.det()))
    seen = {}
    for k in product(range(d), repeat=n):
        v = Minv * sp.Matrix(k)
        key = tuple(sp.Rational(x) % 1 for x in v)
        if key not in seen:
            q = (sp.Matrix(key).T * M * sp.Matrix(key))[0] / 2
            seen[key] = Fraction(int(sp.fraction(q % 1)[0]), int(sp.fraction(q % 1)[1]))
    return Counter(seen.values())


def random_ideals(n, seed=7):
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        d = rng.choice(FIELD_LIST)
        F = make_field(d)
        G = ring_class_group(F, rng.choice([1, 1, 7]) if F.d_K % 7 else 1)
        out.append(rng.choice(G.reps))
    return out


# -- spaces ----------------------------------------------------------------------


def test_QA_entries_match_closed_form(G5):
    I = G5.reps[0]
    V = build_space(I, "QA")
    G = V.gram_matrix
    al, z = I.alpha, I.z
    assert G[0][0] == 2 * al.norm() / I.norm
    assert G[0][1] == (z * al.conj()).trace() / I.norm
    assert G[0][2] == 0
    assert V.signature == (2, 2)


def test_qA_paper_basis_entries(G5):
    I = G5.reps[0]
    P = paper_basis_gram_qA(I)
    assert P[0][1] == I.alpha * 0
    assert P[0][0] == (I.z * I.alpha) * (-2)


@pytest.mark.parametrize("I", random_ideals(20))
def test_spin_square_classes(I):
    d = squarefree_part(I.alpha.D)
    assert space_invariants(build_space(I, "qA")).square_class == d
    assert space_invariants(build_space(I, "QA")).square_class == 1
    assert space_invariants(build_space(I, "QA")).centre == "split"
    assert space_invariants(build_space(I, "qA")).centre == "field"


@pytest.mark.parametrize("I", random_ideals(8, seed=3))
def test_V2_is_negative_of_V1(I):
    g1 = build_space(I, "V1").gram_matrix
    g2 = build_space(I, "V2").gram_matrix
    assert g2 == [[-x for x in r] for r in g1]
    assert build_space(I, "V1").signature == (1, 1) == build_space(I, "V2").signature


def test_diagonal_square_class():
    V = QuadraticSpaceModel.from_gram([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1]])
    inv = space_invariants(V)
    assert inv.square_class == 1 and inv.delta_sq == Fraction(1, 16)


def test_space_errors(G5):
    with pytest.raises(ValidationError):
        QuadraticSpaceModel.from_gram([[1, 1], [1, 1]])
    with pytest.raises(ValidationError):
        QuadraticSpaceModel.from_gram([[1, 2], [0, 1]])
    with pytest.raises(ValidationError):
        QuadraticSpaceModel.from_gram([[2, 0], [0, 2]], expected=(1, 1))
    with pytest.raises(ValidationError):
        build_space(G5.reps[0], "xx")
    with pytest.raises(ValidationError):
        space_invariants(build_space(G5.reps[0], "V1"))


# -- lattices --------------------------------------------------------------------


def test_level_one_example(lat5):
    L, L1, L2 = lat5
    assert L.scale == 1
    assert L.disc.order == 25
    assert L2.disc.order == 5
    assert sorted(set(L2.disc.q_values)) == [Fraction(0), Fraction(1, 5), Fraction(4, 5)]
    assert disc_brute(L2.scaled_gram) == Counter(L2.disc.q_values)


def test_scale_minimality(lat5):
    L, _, _ = lat5
    with pytest.raises(ValidationError):
        LatticeModel.make(L.ambient, L.basis_matrix, scale=2 * L.scale)


@pytest.mark.parametrize("N", [1, 2, 3, 37])
def test_literal_model_is_level_independent(G5, N):
    L, L1, L2 = lattice_from_level(G5.reps[0], N)
    assert L.scale == N * N
    assert L.disc.order == 25
    assert L1.disc.order == L2.disc.order == 5


def test_unscaled_level_records(G5):
    L, _, _ = lattice_from_level(G5.reps[0], 37)
    assert L.level_unscaled() == Fraction(5, 1369)
    assert lattice_from_level(G5.reps[0], 1)[0].level_unscaled() == 5


@pytest.mark.parametrize("d,N", [(5, 37), (2, 11), (5, 14)])
def test_eichler_lattice(d, N):
    G = ring_class_group(make_field(d))
    E = eichler_lattice(G.reps[0], N)
    D = E.disc
    assert E.scaled_gram == [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, N], [0, 0, N, 0]]
    assert D.order == N * N
    # q(x, y) = xy/N: exactly 2N - 1 isotropic classes when N is prime
    if N in (37, 11):
        assert sum(q == 0 for q in D.q_values) == 2 * N - 1


def test_unimodular_and_hyperbolic():
    assert lattice_from_gram([[2, 1], [1, 2]]).disc.order == 3
    assert lattice_from_gram([[0, 1], [1, 0]]).disc.order == 1
    E8 = sp.Matrix(8, 8, lambda i, j: 2 if i == j else 0)
    for i in range(7):
        E8[i, i + 1] = E8[i + 1, i] = -1
    E8[7, 6] = E8[6, 7] = 0
    E8[4, 7] = E8[7, 4] = -1
    E8[7, 7] = 2
    assert lattice_from_gram(E8.tolist()).disc.order == 1


def test_A1_example():
    D = unary_lattice(1).disc
    assert D.invariant_factors == [2]
    assert D.q_values == [Fraction(0), Fraction(1, 4)]


def test_order_bound():
    L = lattice_from_gram([[2, 1], [1, 2000]])
    assert L.disc.order == 3999
    with pytest.raises(ValidationError):
        dual_and_discriminant(L, max_order=1000)


gram2 = st.tuples(st.integers(1, 12), st.integers(-12, 12), st.integers(-12, 12)).filter(
    lambda t: 4 * t[0] * t[2] - t[1] ** 2 != 0
)


@given(gram2)
def test_disc_order_is_det(t):
    a, b, c = t
    L = lattice_from_gram([[2 * a, b], [b, 2 * c]])
    S = L.scaled_gram
    assert L.disc.order == abs(S[0][0] * S[1][1] - S[0][1] ** 2)


@given(gram2)
def test_disc_matches_brute(t):
    a, b, c = t
    L = lattice_from_gram([[2 * a, b], [b, 2 * c]])
    if L.disc.order > 60:
        return
    assert Counter(L.disc.q_values) == disc_brute(L.scaled_gram)


@given(gram2)
def test_polarization_identity(t):
    a, b, c = t
    D = lattice_from_gram([[2 * a, b], [b, 2 * c]]).disc
    assert D.q_values[0] == 0
    n = min(D.order, 40)
    for i in range(n):
        for j in range(n):
            k = D.add(i, j)
            assert D.bilinear(i, j) == (D.q_values[k] - D.q_values[i] - D.q_values[j]) % 1


def test_polarization_rank4(lat5):
    D = lat5[0].disc
    for i in range(D.order):
        for j in range(D.order):
            assert D.bilinear(i, j) == (D.q_values[D.add(i, j)] - D.q_values[i] - D.q_values[j]) % 1


@given(st.lists(st.integers(-6, 6), min_size=3, max_size=3))
def test_minimal_even_scale(v):
    a, b, c = v
    if a == 0 and b == 0 and c == 0:
        return
    G = [[Fraction(a, 3), Fraction(b, 2)], [Fraction(b, 2), Fraction(c, 5)]]
    s = minimal_even_scale(G)
    S = [[x * s for x in r] for r in G]
    assert all(x.denominator == 1 for r in S for x in r) and all(S[i][i] % 2 == 0 for i in range(2))
    half = [[x * s / 2 for x in r] for r in G]
    assert not (all(x.denominator == 1 for r in half for x in r) and all(half[i][i] % 2 == 0 for i in range(2)))


def test_negated_group(lat5):
    D = lat5[2].disc
    Dn = D.negated()
    assert all((a + b) % 1 == 0 for a, b in zip(D.q_values, Dn.q_values))


def test_lattice_json(lat5):
    obj = lat5[2].to_json()
    assert obj["scale"] == [1, 1]
    assert obj["disc_group"]["factors"] == [5]
    assert len(obj["disc_group"]["cosets"]) == 5


def test_exact_det_helper():
    assert det([[Fraction(1, 2), 1], [3, 4]]) == -1
