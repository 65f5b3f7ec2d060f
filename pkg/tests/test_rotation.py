"""Rotation displacement, ill densities, and red zones."""

import csv
import io
import json
import random
from fractions import Fraction

import pytest

from circsys.coefficients import desk_plan
from circsys.locations import PointWindow, maturity
from circsys.rotation import (analyze_rotation, build_red_zones, delta_csv,
                              delta_n, delta_n_naive, delta_partial,
                              displacement, ill_at, match_class,
                              rotation_report_json)
from circsys.systems import circular_sequence

PLAN3 = desk_plan(kl=((2, 2), (2, 2), (2, 2)))


def circ3():
    prewords = [[(0, 1), (1, 0)], [(0, 1), (1, 0)], [(0, 1), (1, 0)]]
    return circular_sequence(PLAN3, "01", prewords)


class TestDisplacement:
    def test_zero_beta_zero_everywhere(self):
        seq = circ3()
        for x in range(0, PLAN3.q(3), 17):
            d = displacement(0, PointWindow(seq, 3, 0, x), 1)
            if d.defined:
                assert d.value == 0
                assert d.degenerate

    def test_two_value_law_with_gap_j1(self):
        seq = circ3()
        plan = seq.plan
        rng = random.Random(6)
        betas = [Fraction(rng.randrange(1, 48), 48) for _ in range(8)]
        for beta in betas:
            for n in (1, 2):
                q = plan.q(n)
                j1 = plan.j(n, 1)
                lanes = {}
                for x in range(plan.q(3)):
                    pw = PointWindow(seq, 3, 0, x)
                    if n < 3 and not maturity(pw, n).mature:
                        continue
                    d = displacement(beta, pw, n)
                    if d.defined:
                        lanes.setdefault(d.lane, set()).add(d.value)
                vals = set().union(*lanes.values())
                assert len(vals) <= 2
                if len(vals) == 2:
                    a, b = sorted(vals)
                    assert (b - a) % q in (j1 % q, (q - j1) % q)

    def test_lane_densities(self):
        seq = circ3()
        plan = seq.plan
        m = 3
        for beta in (Fraction(1, 3), Fraction(5, 7)):
            ana = analyze_rotation(plan, beta, m)
            for n in (1, 2):
                st = ana.stage(n)
                qm = plan.q(m)
                if st.degenerate:
                    continue
                want_L = st.beta_n
                got_L = Fraction(st.lane_L_count, qm)
                assert abs(got_L - want_L) <= Fraction(2 * plan.q(n), qm)


class TestDeltas:
    def test_structural_equals_naive(self):
        for beta in (Fraction(0), Fraction(1, 3), Fraction(5, 7),
                     Fraction(3, 16)):
            for n in (0, 1):
                assert delta_n(beta, n, 3, PLAN3) == \
                    delta_n_naive(beta, n, 3, PLAN3)

    def test_zero_beta_is_central(self):
        part = delta_partial(0, 2, 3, PLAN3)
        assert all(v == 0 for v in part.values)
        assert part.total == 0
        assert not part.finiteness_decidable

    def test_anchor_precondition(self):
        with pytest.raises(ValueError):
            delta_n(Fraction(1, 3), 2, 3, PLAN3)

    def test_ill_at_matches_mask_density(self):
        beta = Fraction(1, 3)
        n, m = 1, 3
        want = delta_n(beta, n, m, PLAN3)
        got = Fraction(sum(ill_at(beta, PLAN3, n, m, x)
                           for x in range(PLAN3.q(m))), PLAN3.q(m))
        assert got == want


class TestRedZones:
    def test_zone_members_reverify_and_disjoint(self):
        beta = Fraction(1, 3)
        rz = build_red_zones(beta, PLAN3, 3, Fraction(1, 2))
        claimed = set()
        for layer in rz.layers:
            pos = set(layer.positions().tolist())
            assert not pos & claimed
            claimed |= pos
            # block-formed
            for a in layer.blocks:
                assert set(range(a * layer.block_size,
                                 (a + 1) * layer.block_size)) <= pos
            for x in list(pos)[:64]:
                assert ill_at(beta, PLAN3, layer.stage, 3, x)
        assert rz.achieved_density == Fraction(len(claimed), PLAN3.q(3))
        if not rz.shortfall:
            assert rz.achieved_density >= rz.target_density

    def test_bad_delta_rejected(self):
        with pytest.raises(ValueError):
            build_red_zones(0, PLAN3, 3, Fraction(0))


class TestReports:
    def test_json_report_fields(self):
        doc = json.loads(rotation_report_json(PLAN3, Fraction(1, 3), 1, 3))
        assert doc["anchor"] == 3
        assert len(doc["delta"]) == 1
        assert doc["finiteness_decidable"] is False

    def test_csv_matches_delta(self):
        text = delta_csv(PLAN3, Fraction(1, 3), 2, 3)
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 2
        for row in rows:
            n = int(row["n"])
            want = delta_n(Fraction(1, 3), n, 3, PLAN3)
            assert Fraction(int(row["numerator"]),
                            int(row["denominator"])) == want
