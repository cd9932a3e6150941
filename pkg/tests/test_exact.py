"""Tests for the exact metalevel solver and regret-based feedback."""

import itertools
import math

import pytest

from metaplan.beliefs import (
    TERMINATE,
    BeliefState,
    init_belief,
    inspect,
    rollout,
    termination_value,
)
from metaplan.envs import (
    EnvSpec,
    RewardAssignment,
    gen_feedback_demo,
    gen_increasing_variance,
    gen_tiny,
    gen_toy_two_goal,
)
from metaplan.dists import point
from metaplan.exact import (
    BELIEF_SPACE_CAP,
    FeedbackRecord,
    OracleSolution,
    belief_space_size,
    load_solution,
    optimal_feedback,
    save_solution,
    solve_exact,
)
from metaplan.policies import PolicyConfig, make_policy
from metaplan.search import search_selector


def all_instances(spec):
    """Every reward assignment with its probability."""
    nodes = [n for n in range(spec.node_count) if n != spec.root]
    atom_sets = [[(float(v), float(p))
                  for v, p in zip(spec.priors[n].support,
                                  spec.priors[n].probs)]
                 for n in nodes]
    for combo in itertools.product(*atom_sets):
        prob = math.prod(p for _, p in combo)
        values = {n: v for n, (v, _) in zip(nodes, combo)}
        yield RewardAssignment(values, seed=-1), prob


def expected_rr(policy, spec, hierarchical=False):
    total = 0.0
    for inst, prob in all_instances(spec):
        total += prob * rollout(policy, spec, inst,
                                hierarchical=hierarchical).rr
    return total


class TestFrozenValues:
    """Optimal V(init) of each tiny fixture, from the exact enumeration."""

    CASES = [(1, 74.0), (2, 0.0), (3, 4.0), (4, 23.0), (5, 36.125)]

    @pytest.mark.parametrize("index,expected", CASES)
    def test_v_init(self, index, expected):
        sol = solve_exact(gen_tiny(index))
        assert sol.v_init() == pytest.approx(expected, abs=1e-9)

    def test_feedback_env_value(self):
        sol = solve_exact(gen_feedback_demo())
        assert sol.v_init() == pytest.approx(22.8203125, abs=1e-6)

    def test_toy_first_move_prefers_lowest_goal(self):
        sol = solve_exact(gen_toy_two_goal())
        assert sol.policy[()] == inspect(1)

    def test_chain_terminates_immediately(self):
        sol = solve_exact(gen_tiny(2))
        assert sol.policy[()] is TERMINATE


class TestInvariants:
    @pytest.mark.parametrize("index", [1, 3, 4, 5])
    def test_bellman_consistency(self, index):
        e = gen_tiny(index)
        sol = solve_exact(e)
        for key, v in sol.value.items():
            qs = [qv for (k, _), qv in sol.q.items() if k == key]
            assert v == pytest.approx(max(qs), abs=1e-9)

    def test_termination_q_equals_termination_value(self):
        e = gen_tiny(4)
        sol = solve_exact(e)
        for key in sol.value:
            b = BeliefState(tuple(sorted(
                (n, sol.supports[n][i]) for n, i in key)))
            assert sol.q[(key, TERMINATE)] == pytest.approx(
                termination_value(b, e, "flat"), abs=1e-9)

    def test_deterministic(self):
        a = solve_exact(gen_tiny(5))
        b = solve_exact(gen_tiny(5))
        assert a.value == b.value and a.policy == b.policy


class TestDegenerateEnvs:
    def test_point_mass_env_terminates_with_best_path_sum(self):
        e = EnvSpec(4, 0, ((0, 1), (0, 2), (1, 3), (2, 3)),
                    {1: point(5.0), 2: point(-1.0), 3: point(2.0)},
                    (3,), 1.0, "allfixed")
        sol = solve_exact(e)
        assert sol.v_init() == 7.0
        assert sol.policy[()] is TERMINATE
        fb = optimal_feedback(init_belief(e), inspect(1), sol)
        assert fb.regret == pytest.approx(e.click_cost)
        assert not fb.is_optimal

    def test_unpayable_click_fee_means_never_inspect(self):
        import dataclasses
        e = dataclasses.replace(gen_toy_two_goal(), click_cost=1000.0)
        sol = solve_exact(e)
        assert all(c is TERMINATE for c in sol.policy.values())
        assert sol.v_init() == pytest.approx(50.0)

    def test_space_cap(self):
        e = gen_increasing_variance(2)
        assert belief_space_size(e) > BELIEF_SPACE_CAP
        with pytest.raises(ValueError, match="belief space"):
            solve_exact(e)


class TestDominance:
    """No policy can beat the oracle's V(init) in expectation."""

    def test_policies_bounded_by_oracle(self):
        for index in (1, 4, 5):
            e = gen_tiny(index)
            v = solve_exact(e).v_init()
            myopic = make_policy(PolicyConfig("greedy_flat"), e)
            assert expected_rr(myopic, e) <= v + 1e-9
            rand = make_policy(PolicyConfig("random", seed=0), e)
            assert expected_rr(rand, e) <= v + 1e-9
            asp = search_selector("BFS", 20.0, e)
            assert expected_rr(asp, e) <= v + 1e-9

    def test_oracle_policy_attains_its_value(self):
        e = gen_toy_two_goal()
        sol = solve_exact(e)

        def oracle_policy(b):
            return sol.policy[sol.key_for(b)]

        assert expected_rr(oracle_policy, e) == pytest.approx(sol.v_init(),
                                                              abs=1e-9)


class TestFeedback:
    def test_oracle_move_has_zero_regret(self):
        e = gen_toy_two_goal()
        sol = solve_exact(e)
        fb = optimal_feedback(init_belief(e), inspect(1), sol)
        assert fb == FeedbackRecord(True, inspect(1), 0.0, 0)

    def test_premature_termination_regret(self):
        e = gen_toy_two_goal()
        sol = solve_exact(e)
        fb = optimal_feedback(init_belief(e), TERMINATE, sol)
        assert fb.regret == pytest.approx(24.0)  # V 74 vs stop-now 50
        assert fb.penalty_ms == 12000
        low_k = optimal_feedback(init_belief(e), TERMINATE, sol,
                                 penalty_per_unit=10.0)
        assert low_k.penalty_ms == 240

    def test_wasted_click_regret_is_the_fee(self):
        e = gen_toy_two_goal()
        sol = solve_exact(e)
        b = BeliefState(((1, 100.0),), 1)
        fb = optimal_feedback(b, inspect(1), sol)  # re-click: pure waste
        assert fb.regret == pytest.approx(e.click_cost)

    def test_terminal_beliefs_grade_termination_optimal(self):
        e = gen_toy_two_goal()
        sol = solve_exact(e)
        b = BeliefState(((1, 100.0), (2, 0.0)), 2)
        fb = optimal_feedback(b, TERMINATE, sol)
        assert fb.is_optimal

    def test_value_outside_support_rejected(self):
        e = gen_toy_two_goal()
        sol = solve_exact(e)
        b = BeliefState(((1, 55.0),), 1)
        with pytest.raises(ValueError, match="support"):
            optimal_feedback(b, TERMINATE, sol)

    def test_fixed_node_observation_is_ignored_in_key(self):
        e = gen_feedback_demo()
        sol = solve_exact(e)
        b = BeliefState(((3, -3.0),), 1)  # node 3 carries a fixed value
        assert sol.key_for(b) == ()


class TestCache:
    def test_round_trip(self, tmp_path):
        e = gen_tiny(3)
        sol = solve_exact(e)
        path = tmp_path / "sol.bin"
        save_solution(sol, path)
        back = load_solution(path)
        assert back.value == sol.value
        assert back.policy == sol.policy
        assert back.env_hash == sol.env_hash

    def test_cache_dir_reuse(self, tmp_path):
        e = gen_tiny(4)
        a = solve_exact(e, cache_dir=tmp_path)
        files = list(tmp_path.glob("oracle_*.bin"))
        assert len(files) == 1
        b = solve_exact(e, cache_dir=tmp_path)
        assert a.value == b.value

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not an oracle cache")
        with pytest.raises(ValueError, match="header"):
            load_solution(path)

    def test_corrupt_cache_is_resolved(self, tmp_path):
        e = gen_tiny(3)
        solve_exact(e, cache_dir=tmp_path)
        victim = next(iter(tmp_path.glob("oracle_*.bin")))
        victim.write_bytes(b"garbage")
        sol = solve_exact(e, cache_dir=tmp_path)  # silently recomputes
        assert sol.v_init() == pytest.approx(4.0)

    def test_different_envs_do_not_collide(self, tmp_path):
        a = solve_exact(gen_tiny(3), cache_dir=tmp_path)
        b = solve_exact(gen_tiny(5), cache_dir=tmp_path)
        assert len(list(tmp_path.glob("oracle_*.bin"))) == 2
        assert a.v_init() != b.v_init()
