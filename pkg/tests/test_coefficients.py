"""Staged coefficient arithmetic: recursions, indices, audits."""

import json
from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, settings, strategies as st

from circsys.coefficients import (PlanError, audit_plan, code_coefficients,
                                  desk_plan, desk_policy, dynamical_index,
                                  extend_plan, grow_plan, paper_floor_policy,
                                  plan_from_json, plan_to_json)

coprime_pq = st.integers(2, 400).flatmap(
    lambda q: st.tuples(
        st.sampled_from([p for p in range(1, q) if gcd(p, q) == 1]),
        st.just(q)))


class TestDynamicalIndex:
    @given(coprime_pq)
    def test_bijection(self, pq):
        p, q = pq
        js = [dynamical_index(p, q, i) for i in range(q)]
        assert sorted(js) == list(range(q))

    @given(coprime_pq)
    def test_reflection(self, pq):
        # q - j_i = j_{q-i} for i in (0, q)
        p, q = pq
        for i in range(1, q):
            assert q - dynamical_index(p, q, i) == \
                dynamical_index(p, q, q - i)

    def test_inverse_defining_property(self):
        for p, q in [(1, 4), (17, 64), (5, 12)]:
            for i in range(q):
                assert (p * dynamical_index(p, q, i)) % q == i


class TestRecursion:
    def test_desk_plan_qp(self):
        plan = desk_plan()
        assert [(plan.q(n), plan.p(n)) for n in range(3)] == \
            [(1, 0), (4, 1), (64, 17)]

    def test_q_recursion(self):
        plan = desk_plan(kl=((2, 2), (4, 2), (2, 4)))
        for n in range(plan.depth - 1):
            st_ = plan.stage(n)
            assert plan.q(n + 1) == st_.k * st_.l * plan.q(n) ** 2
            assert plan.p(n + 1) == \
                plan.p(n) * plan.q(n) * st_.k * st_.l + 1

    @given(st.lists(st.tuples(st.integers(2, 5), st.integers(2, 5)),
                    min_size=10, max_size=10))
    @settings(max_examples=25, deadline=None)
    def test_alpha_increments(self, kl):
        plan = desk_plan(kl=tuple(kl))
        for n in range(plan.depth - 1):
            assert plan.alpha(n + 1) - plan.alpha(n) == \
                Fraction(1, plan.q(n + 1))

    def test_p_q_stay_coprime(self):
        plan = desk_plan(kl=((3, 2), (2, 3), (2, 2)))
        for n in range(1, plan.depth):
            assert gcd(plan.p(n), plan.q(n)) == 1


class TestGrowth:
    def test_grow_matches_manual_extension(self):
        plan = grow_plan(3)
        manual = grow_plan(2)
        manual = extend_plan(manual, desk_policy())
        assert plan_to_json(plan) == plan_to_json(manual)

    def test_floor_policy_grows_faster(self):
        d = grow_plan(3, desk_policy())
        f = grow_plan(3, paper_floor_policy())
        assert f.stage(2).k >= d.stage(2).k

    def test_bad_recursion_rejected(self):
        doc = json.loads(plan_to_json(desk_plan()))
        doc["stages"][1]["q"] = str(int(doc["stages"][1]["q"]) + 1)
        with pytest.raises((PlanError, ValueError)):
            plan_from_json(json.dumps(doc))


class TestCodeCoefficients:
    def test_desk_values(self):
        plan = desk_plan(kl=((2, 2),) * 4)
        assert code_coefficients(plan, 3) == [0, 0, -1, -50]

    def test_growth_bound(self):
        plan = desk_plan(kl=((2, 2),) * 4)
        A = code_coefficients(plan, 3)
        for n in range(1, 4):
            assert abs(A[n]) < 2 * plan.q(n - 1) * plan.q(n)


class TestAudit:
    def test_desk_plan_audited_not_passing(self):
        # desk scale deliberately under-runs the growth floors; the audit
        # must say so rather than pass vacuously
        rep = audit_plan(desk_plan())
        assert not rep.ok()
        assert any(e.status == "pass" for e in rep.entries)

    def test_report_json_shape(self):
        rep = audit_plan(desk_plan())
        doc = json.loads(rep.to_json())
        assert all({"id", "status", "desk_waived"} <= set(e) for e in doc)


class TestSerialization:
    def test_round_trip(self):
        plan = desk_plan(kl=((3, 2), (2, 2)))
        again = plan_from_json(plan_to_json(plan))
        assert plan_to_json(again) == plan_to_json(plan)
        assert [again.q(n) for n in range(again.depth)] == \
            [plan.q(n) for n in range(plan.depth)]
