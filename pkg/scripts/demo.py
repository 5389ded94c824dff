#!/usr/bin/env python3
"""Walk through Q(sqrt 5) and the curve 37a: units, class group, theta counts,
the Rankin-Selberg central derivative and one value of the regularized lift."""
import argparse

from geogreen.lfunc import central_derivative, rank_one_oracle, rankin_job
from geogreen.newform import KNOWN_CURVES, level_split
from geogreen.qspace import lattice_from_level
from geogreen.quadorder import fundamental_unit, make_field, ring_class_group
from geogreen.reglift import invariant_input, reg_integral
from geogreen.theta import TubePoint, class_rep_counts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--curve", default="37a", choices=sorted(KNOWN_CURVES))
    ap.add_argument("--skip-lift", action="store_true")
    args = ap.parse_args()

    F = make_field(args.d)
    U = fundamental_unit(F)
    G = ring_class_group(F)
    print(f"d_K = {F.d_K}, eps0 = {U.eps0} (norm {U.eps0_norm}), h = {G.order}")
    for t in class_rep_counts(G, 30):
        print(f"  r_{t.label}(1..30) = {[t[m] for m in range(1, 31)]}")

    E = KNOWN_CURVES[args.curve]
    split = level_split(E.N, F)
    print(f"{E.label}: N = {E.N}, root number {split.sign}, ersatz Heegner {split.ehh_holds}")
    r = central_derivative(rankin_job(E, F))
    print(f"  Lambda(1/2) = {r.value:.3e}, Lambda'(1/2) = {r.derivative:.12f}")
    if split.sign == -1:
        print(f"  rank-one product = {rank_one_oracle(E, F)['product']:.12f}")

    if not args.skip_lift:
        L = lattice_from_level(G.reps[0], 1)[0]
        z = TubePoint(-0.4647 + 0.6683j, -0.4551 + 2.25j)
        ev = reg_integral(invariant_input(L, "j"), L, z)
        print(f"Phi(j, z) = {ev.value:.9f} (T-stability {ev.stability:.1e})")


if __name__ == "__main__":
    main()
