"""Rotation displacement and red zones at desk scale.

For a rational angle, shows the two-lane displacement law over the
position tower, the ill-match densities per stage, and a red-zone
construction targeting a declared density.
"""

from fractions import Fraction

from circsys.coefficients import desk_plan
from circsys.locations import PointWindow, maturity
from circsys.rotation import (analyze_rotation, build_red_zones, delta_n,
                              displacement)
from circsys.systems import circular_sequence


def main():
    plan = desk_plan(kl=((2, 2),) * 3)
    seq = circular_sequence(plan, "01", [[(0, 1), (1, 0)]] * 3)
    beta = Fraction(5, 7)
    m = 3
    print(f"plan q tower: {[plan.q(n) for n in range(m + 1)]}")
    print(f"angle beta = {beta}, anchor stage m = {m}\n")

    for n in (1, 2):
        vals = {}
        for x in range(plan.q(m)):
            pw = PointWindow(seq, m, 0, x)
            if not maturity(pw, n).mature:
                continue
            d = displacement(beta, pw, n)
            if d.defined:
                vals.setdefault(d.lane, set()).add(d.value)
        st = analyze_rotation(plan, beta, m).stage(n)
        print(f"stage {n}: displacement values by lane {vals}")
        print(f"  lane densities {st.lane_L_count}/{plan.q(m)} vs "
              f"beta_{n} = {st.beta_n}")
        if m > n + 1:
            print(f"  ill density delta_{n} = {delta_n(beta, n, m, plan)}")

    rz = build_red_zones(beta, plan, m, Fraction(1, 4))
    print(f"\nred zones for target density {rz.target_density}:")
    for layer in rz.layers:
        print(f"  stage {layer.stage}: {len(layer.blocks)} blocks of "
              f"{layer.block_size} positions")
    print(f"achieved {rz.achieved_density}"
          + (" (shortfall)" if rz.shortfall else ""))


if __name__ == "__main__":
    main()
