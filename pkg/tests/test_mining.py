from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

import pytest

from anonset.errors import DomainError, InputError
from anonset.mining import (
    DEFAULT_AM_WEIGHTS,
    EXACT,
    INCONCLUSIVE,
    N_N_N,
    N_ONE_ONE,
    NON_DEPOSITOR,
    NONE,
    ONE_ONE_ONE,
    APClaim,
    am_effect_on_h1,
    anonymity_points,
    classify_claimant,
    solve_multi_claim,
    solve_single_claim,
)

from .conftest import addr, deposit, withdrawal


def oracle_multi(deposit_blocks, claim, weight, withdrawal_blocks):
    """Exhaustive enumeration over withdrawal-event subsets."""
    if claim.ap % weight != 0:
        return set()
    deps = sorted(deposit_blocks)
    events = [b for b in withdrawal_blocks if b < claim.block]
    target = claim.ap // weight
    found = set()
    for combo in combinations(range(len(events)), len(deps)):
        blocks = sorted(events[i] for i in combo)
        if all(b > d for b, d in zip(blocks, deps)) and \
                sum(b - d for b, d in zip(blocks, deps)) == target:
            found.add(tuple(blocks))
    return found


def test_default_weight_table():
    assert DEFAULT_AM_WEIGHTS == {"0.1": 10, "1": 20, "10": 50, "100": 400}


class TestAnonymityPoints:
    def test_worked_scenario_totals_86000(self):
        # two weight-20 pairs with gaps 200 and 100, one weight-400 pair with gap 200
        points = anonymity_points(
            deposit_blocks={"1": [11_476_000, 11_476_100], "100": [11_476_000]},
            withdrawal_blocks={"1": [11_476_200, 11_476_200], "100": [11_476_200]},
            weights=DEFAULT_AM_WEIGHTS)
        assert points == 86_000

    def test_zero_elapsed_blocks(self):
        assert anonymity_points({"1": [5]}, {"1": [5]}, DEFAULT_AM_WEIGHTS) == 0

    def test_single_pair_by_hand(self):
        assert anonymity_points({"100": [10]}, {"100": [15]}, DEFAULT_AM_WEIGHTS) == 2_000

    def test_withdrawal_before_deposit_rejected(self):
        with pytest.raises(DomainError):
            anonymity_points({"1": [10]}, {"1": [9]}, DEFAULT_AM_WEIGHTS)

    def test_unpaired_counts_rejected(self):
        with pytest.raises(InputError):
            anonymity_points({"1": [10, 11]}, {"1": [12]}, DEFAULT_AM_WEIGHTS)

    def test_additive_across_pools_and_linear_in_weight(self):
        rng = random.Random(2)
        for _ in range(20):
            pools = {}
            for key in ("0.1", "1", "10"):
                deps = sorted(rng.sample(range(1, 500), 3))
                gaps = [rng.randrange(1, 50) for _ in deps]
                pools[key] = (deps, [d + g for d, g in zip(deps, gaps)])
            total = anonymity_points({k: v[0] for k, v in pools.items()},
                                     {k: v[1] for k, v in pools.items()},
                                     DEFAULT_AM_WEIGHTS)
            by_pool = sum(
                anonymity_points({k: pools[k][0]}, {k: pools[k][1]}, DEFAULT_AM_WEIGHTS)
                for k in pools)
            assert total == by_pool
            doubled = anonymity_points(
                {k: v[0] for k, v in pools.items()},
                {k: v[1] for k, v in pools.items()},
                {k: 2 * w for k, w in DEFAULT_AM_WEIGHTS.items()})
            assert doubled == 2 * total


class TestClassifyClaimant:
    def test_categories(self):
        a = addr("cl")
        claim = APClaim(recipient=a, block=100, ap=40)
        one = [deposit("P1", a, 5)]
        assert classify_claimant(a, one, [claim]) == ONE_ONE_ONE
        many = [deposit("P1", a, 5), deposit("P1", a, 6), deposit("P1", a, 7)]
        assert classify_claimant(a, many, [claim]) == N_ONE_ONE
        cross = [deposit("P1", a, 5), deposit("P10", a, 6)]
        assert classify_claimant(a, cross, [claim]) == N_N_N
        second = APClaim(recipient=a, block=120, ap=4)
        assert classify_claimant(a, one, [claim, second]) == N_N_N
        assert classify_claimant(a, [], [claim]) == NON_DEPOSITOR

    def test_requires_a_claim(self):
        with pytest.raises(InputError):
            classify_claimant(addr("cl"), [], [])


class TestSolveSingleClaim:
    def test_exact_recovery(self):
        claim = APClaim(recipient=addr("s1"), block=2_000, ap=2_000)
        sol = solve_single_claim(1_000, claim, 400, [990, 1_005, 1_200])
        assert sol.status == EXACT
        assert sol.solutions == ((1_005,),)
        assert sol.multiplicity == 1

    def test_indivisible_points(self):
        claim = APClaim(recipient=addr("s1"), block=2_000, ap=2_001)
        assert solve_single_claim(1_000, claim, 400, [1_005]).status == NONE

    def test_candidate_at_or_after_claim_rejected(self):
        claim = APClaim(recipient=addr("s1"), block=1_005, ap=2_000)
        assert solve_single_claim(1_000, claim, 400, [1_005]).status == NONE

    def test_no_withdrawal_in_block(self):
        claim = APClaim(recipient=addr("s1"), block=2_000, ap=2_000)
        assert solve_single_claim(1_000, claim, 400, [1_004, 1_006]).status == NONE

    def test_multiplicity_counts_shared_blocks(self):
        claim = APClaim(recipient=addr("s1"), block=2_000, ap=400)
        sol = solve_single_claim(1_000, claim, 400, [1_001, 1_001, 1_001])
        assert sol.status == EXACT
        assert sol.multiplicity == 3

    def test_recovered_pair_reproduces_points(self):
        rng = random.Random(9)
        for _ in range(100):
            t_d = rng.randrange(1, 10_000)
            gap = rng.randrange(1, 400)
            weight = rng.choice([10, 20, 50, 400])
            claim = APClaim(recipient=addr("s1"), block=t_d + gap + rng.randrange(1, 50),
                            ap=weight * gap)
            ws = sorted(rng.sample(range(1, 11_000), 15) + [t_d + gap])
            sol = solve_single_claim(t_d, claim, weight, ws)
            assert sol.status == EXACT
            (tw,) = sol.solutions[0]
            assert anonymity_points({"p": [t_d]}, {"p": [tw]}, {"p": weight}) == claim.ap


class TestSolveMultiClaim:
    def test_worked_pair(self):
        claim = APClaim(recipient=addr("m1"), block=300, ap=110)
        sol = solve_multi_claim([100, 200], claim, 1, [150, 260])
        assert sol.status == EXACT
        assert sol.solutions == ((150, 260),)

    def test_no_solution(self):
        claim = APClaim(recipient=addr("m1"), block=300, ap=111)
        assert solve_multi_claim([100, 200], claim, 1, [150, 260]).status == NONE

    def test_cap_marks_inconclusive(self):
        # target sits mid-range, so bounds cannot collapse the search
        claim = APClaim(recipient=addr("m1"), block=10_000, ap=174)
        sol = solve_multi_claim([1, 2, 3], claim, 1,
                                list(range(10, 110)), search_cap=10)
        assert sol.status == INCONCLUSIVE
        assert sol.explored <= 11

    def test_single_deposit_rejected(self):
        claim = APClaim(recipient=addr("m1"), block=300, ap=110)
        with pytest.raises(InputError):
            solve_multi_claim([100], claim, 1, [150])

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(31)
        for trial in range(120):
            u = rng.randrange(2, 5)
            deps = sorted(rng.sample(range(1, 80), u))
            n_wd = rng.randrange(u, 21)
            ws = sorted(rng.choice(range(1, 140)) for _ in range(n_wd))
            weight = rng.choice([1, 10, 20])
            claim_block = 200
            if trial % 3 == 0:
                # plant a feasible tuple so exact cases occur often
                planted = sorted(d + rng.randrange(1, 30) for d in deps)
                ws = sorted(ws + planted)
                ap = weight * sum(b - d for b, d in zip(planted, deps))
            else:
                ap = weight * rng.randrange(1, 200)
            claim = APClaim(recipient=addr("m2"), block=claim_block, ap=ap)
            sol = solve_multi_claim(deps, claim, weight, ws)
            expected = oracle_multi(deps, claim, weight, ws)
            assert sol.status != INCONCLUSIVE
            assert set(sol.solutions) == expected
            assert (sol.status == EXACT) == bool(expected)
            for tup in sol.solutions:
                points = anonymity_points({"p": deps}, {"p": list(tup)}, {"p": weight})
                assert points == claim.ap


class TestLaunchImpact:
    def test_more_reuse_after_launch_raises_linkability(self, p100):
        events = []
        # before launch: 4 depositors, 1 reuses fully
        for i in range(4):
            events.append(deposit("P100", addr(f"pre{i}"), 10 + i))
        events.append(withdrawal("P100", addr("pre0"), 20))
        # after launch: 4 depositors, 2 reuse fully
        for i in range(4):
            events.append(deposit("P100", addr(f"post{i}"), 110 + i))
        events.append(withdrawal("P100", addr("post0"), 120))
        events.append(withdrawal("P100", addr("post1"), 121))
        impact = am_effect_on_h1(p100, events, am_launch=100)
        assert impact.pre.r_adv == Fraction(4, 3) - 1
        assert impact.post.r_adv == Fraction(4, 2) - 1
        assert impact.post.r_adv > impact.pre.r_adv

    def test_identical_windows_agree_exactly(self, p100):
        events = []
        for base in (10, 110):
            for i in range(5):
                events.append(deposit("P100", addr(f"w{base}{i}"), base + i))
            events.append(withdrawal("P100", addr(f"w{base}0"), base + 9))
        impact = am_effect_on_h1(p100, events, am_launch=100)
        assert impact.pre.r_adv == impact.post.r_adv

    def test_launch_outside_range_rejected(self, p100, p100_events):
        with pytest.raises(InputError):
            am_effect_on_h1(p100, p100_events, am_launch=500)
