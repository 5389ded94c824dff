"""Acceptance criteria 1-12, one PASS/FAIL line each.

Run with ``pytest -s tests/test_acceptance.py`` (or scripts/run_acceptance.py) to see
the lines as they are produced; the terminal summary repeats them.
"""
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from geogreen._arith import squarefree_part
from geogreen.eisenstein import (
    completed_fe_residual,
    derivative_in_s,
    eisenstein_data,
    lowering_residual,
    siegel_weil_residual,
)
from geogreen.lfunc import central_derivative, class_number_residual, dirichlet_L, fe_residual, rank_one_oracle, rankin_job
from geogreen.newform import KNOWN_CURVES, coefficients, level_split
from geogreen.qspace import build_space, eichler_lattice, lattice_from_level, space_invariants
from geogreen.quadorder import (
    ValidationError,
    characters,
    fundamental_unit,
    kronecker,
    make_field,
    ring_class_group,
)
from geogreen.reglift import ClassInput, green_diagnostics, invariant_input, main_formula_rhs, reg_integral
from geogreen.theta import TubePoint, class_rep_counts, divisor_eta_sum
from geogreen.weilrep import lift_newform, modularity_residual, weil_generators

FIELDS = (5, 2, 3, 13, 10, 229)  # d_K = 5, 8, 12, 13, 40, 229
RESULTS: dict[int, tuple[bool, float, str]] = {}


def record(k, ok, seconds, limit, detail):
    ok = bool(ok) and seconds < limit
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  ({seconds:.1f} s, limit {limit:.0f} s)  {detail}"
    RESULTS[k] = (ok, seconds, line)
    print("\n" + line)
    assert ok, line


def test_criterion_01_class_number_formula():
    t0 = time.time()
    worst = 0.0
    for d in FIELDS:
        F = make_field(d)
        h = ring_class_group(F).order
        U = fundamental_unit(F)
        val = dirichlet_L(F, 1).real * math.sqrt(F.d_K) / (2 * U.eps0_log)
        worst = max(worst, abs(val - h), class_number_residual(F))
    record(1, worst < 1e-6, time.time() - t0, 5, f"max residual {worst:.2e}")


def test_criterion_02_theta_identity():
    t0 = time.time()
    bad = 0
    for d in FIELDS:
        F = make_field(d)
        tables = class_rep_counts(ring_class_group(F), 500)
        for m in range(1, 501):
            bad += sum(t[m] for t in tables) != divisor_eta_sum(m, lambda n: kronecker(F, n))
    record(2, bad == 0, time.time() - t0, 10, f"{bad} mismatches over 6 fields x 500")


def test_criterion_03_square_classes():
    t0 = time.time()
    rng = random.Random(2024)
    bad = 0
    for _ in range(20):
        F = make_field(rng.choice(FIELDS))
        G = ring_class_group(F, 1 if F.d_K % 7 == 0 else rng.choice([1, 7]))
        I = rng.choice(G.reps)
        d = squarefree_part(F.d_K)
        bad += space_invariants(build_space(I, "qA")).square_class != d
        bad += space_invariants(build_space(I, "QA")).square_class != 1
    record(3, bad == 0, time.time() - t0, 1, f"{bad} wrong square classes in 20 ideals")


def test_criterion_04_weil_relations():
    t0 = time.time()
    worst, orders = 0.0, []
    for d, N in ((5, 37), (2, 11), (5, 14)):
        G = ring_class_group(make_field(d))
        for I in G.reps:
            cands = list(lattice_from_level(I, N)) + list(lattice_from_level(I, 1)) + [eichler_lattice(I, N)]
            for L in cands:
                try:
                    D = L.disc if abs(np.linalg.det(np.array(L.scaled_gram, dtype=float))) <= 400.5 else None
                except ValidationError:
                    D = None
                if D is None:
                    continue
                orders.append(D.order)
                worst = max(worst, max(weil_generators(D, L.signature).relation_residuals().values()))
    record(4, worst < 1e-12, time.time() - t0, 5, f"max residual {worst:.2e} over orders {sorted(set(orders))}")


def test_criterion_05_lift_modularity():
    t0 = time.time()
    E = KNOWN_CURVES["37a"]
    L = eichler_lattice(ring_class_group(make_field(5)).reps[0], 37)
    g = lift_newform(coefficients(E, 60 * 37), L, 37)
    taus = (0.11 + 0.93j, -0.27 + 1.1j, 0.35 + 0.8j, 0.04 + 1.31j, -0.42 + 0.97j)
    r = modularity_residual(g, weil_generators(L.disc, L.signature), taus)
    record(5, r < 1e-6, time.time() - t0, 30, f"S-residual {r:.2e} at 5 points")


def test_criterion_06_eisenstein_suite():
    t0 = time.time()
    fe = low = der = 0.0
    for d in (5, 2):
        L2 = lattice_from_level(ring_class_group(make_field(d)).reps[0], 1)[2]
        E = eisenstein_data(L2)
        for tau in (1j, 0.5 + 0.9j):
            for s in (0.2, 0.3, 0.5):
                fe = max(fe, completed_fe_residual(L2, tau, s, E))
                low = max(low, lowering_residual(L2, tau, s, E))
            der = max(der, float(np.abs(derivative_in_s(L2, tau, 0, E=E).value).max()))
    ok = fe < 1e-5 and low < 1e-5 and der < 1e-5
    record(6, ok, time.time() - t0, 120, f"FE {fe:.2e}, lowering {low:.2e}, ||E'(tau,0)|| {der:.3f}")


def test_criterion_07_siegel_weil():
    t0 = time.time()
    taus = [0.1 + 1.0j, -0.3 + 1.3j, 0.25 + 0.9j]
    consts, worst = [], 0.0
    for d in (5, 10):
        G = ring_class_group(make_field(d))
        for A in range(G.order):
            r = siegel_weil_residual(G, A, taus)
            consts.append(r.constant)
            worst = max(worst, r.residual)
    spread = max(consts) - min(consts)
    ok = worst < 1e-3 and spread < 1e-3
    record(7, ok, time.time() - t0, 120, f"constant {np.mean(consts):.9f}, spread {spread:.1e}, residual {worst:.1e}")


MATRIX = (("37a", 5), ("11a", 2))


@pytest.fixture(scope="module")
def jobs():
    out = []
    for label, d in MATRIX:
        E, F = KNOWN_CURVES[label], make_field(d)
        G = ring_class_group(F, 1, level=E.N)
        T = coefficients(E, 4000)
        split = level_split(E.N, F)
        out += [(label, F.d_K, k, split.ehh_holds, rankin_job(E, F, k, 1, T, G)) for k in range(G.order)]
    return out


def test_criterion_08_forced_vanishing(jobs):
    t0 = time.time()
    from geogreen.lfunc import completed_value

    vals = [abs(completed_value(J, 0.5)) for *_, ehh, J in jobs if ehh]
    ok = len(vals) > 0 and max(vals) < 1e-8
    record(8, ok, time.time() - t0, 60, f"{len(vals)} configurations, max |Lambda(1/2)| {max(vals):.1e}")


def test_criterion_09_rankin_fe(jobs):
    t0 = time.time()
    worst = max(fe_residual(J, s) for *_, J in jobs for s in (0.6, 0.75))
    record(9, worst < 1e-6, time.time() - t0, 120, f"{len(jobs)} jobs, max FE residual {worst:.1e}")


def test_criterion_10_rank_one_cross_check():
    t0 = time.time()
    E, F = KNOWN_CURVES["37a"], make_field(5)
    d = central_derivative(rankin_job(E, F)).derivative
    p = rank_one_oracle(E, F)["product"]
    gap = abs(d - p) / abs(p)
    record(10, gap < 1e-5, time.time() - t0, 120, f"Lambda' {d:.12f} vs product {p:.12f}, rel gap {gap:.1e}")


def test_criterion_11_regularized_lift():
    t0 = time.time()
    G = ring_class_group(make_field(5))
    L = lattice_from_level(G.reps[0], 1)[0]
    z = TubePoint(-0.4647 + 0.6683j, -0.4551 + 2.25j)
    # clearance-scanned points; j2 also sees the (dense) norm-2 divisor
    z2 = TubePoint(-0.0001 + 1.6182j, -0.2857 + 0.9583j)
    sj = reg_integral(invariant_input(L, "j"), L, z, 0, G, (8.0, 16.0)).stability
    sj2 = reg_integral(invariant_input(L, "j2"), L, z2, 0, G, (8.0, 16.0)).stability
    stab = max(sj, sj2)
    cusp = green_diagnostics(invariant_input(L, "j"), L, divisor=(0, Fraction(1)), points=(z,))
    const = green_diagnostics(invariant_input(L, "const", 2.0), L, points=(z,))
    gap = max(cusp.laplacian_gap, const.laplacian_gap)
    ok = stab < 1e-4 and abs(cusp.slope + 2) < 0.1 and gap < 5e-2
    record(
        11,
        ok,
        time.time() - t0,
        300,
        f"stability {sj:.1e} (j) / {sj2:.1e} (j2), slope {cusp.slope:.4f}, eigen gap {cusp.laplacian_gap:.1e} (cusp) / {const.laplacian_gap:.2f} (constant)",
    )


def test_criterion_12_main_formula_substitute():
    t0 = time.time()
    G = ring_class_group(make_field(10))
    chis = characters(G)
    a, b = 0.731, -1.204
    fam = lambda x, y: [ClassInput(G.label_str(0), None, geodesic=x), ClassInput(G.label_str(1), None, geodesic=y)]
    lin = abs(main_formula_rhs(fam(2 * a, 2 * b), chis[1], G).rhs - 2 * main_formula_rhs(fam(a, b), chis[1], G).rhs)
    # translating the family by the class group multiplies the character sum by chi(g)
    eq = abs(main_formula_rhs(fam(b, a), chis[1], G).rhs - complex(chis[1](1)) * main_formula_rhs(fam(a, b), chis[1], G).rhs)
    gapless = main_formula_rhs(fam(a, b), chis[0], G).gap is None
    own = lin < 1e-12 and eq < 1e-12 and gapless
    upstream = [k for k in range(6, 12) if k in RESULTS and not RESULTS[k][0]]
    missing = [k for k in range(6, 12) if k not in RESULTS]
    ok = own and not upstream and not missing
    why = f"rhs linearity {lin:.0e}, equivariance {eq:.0e}, gap not-computable {gapless}"
    if upstream or missing:
        why += f"; substitute criteria failing {upstream}" + (f", not run {missing}" if missing else "")
    record(12, ok, time.time() - t0, 60, why)
