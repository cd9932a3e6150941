"""Tests for belief states, legal computations, and rollouts."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metaplan.beliefs import (
    GOAL_ACHIEVEMENT,
    GOAL_SETTING,
    SWITCH_GOAL,
    TERMINATE,
    BeliefState,
    Trace,
    available_computations,
    best_path,
    commit_goal,
    init_belief,
    inspect,
    observe,
    rollout,
    rr_score,
    termination_value,
)
from metaplan.envs import (
    enumerate_paths,
    gen_high_risk,
    gen_increasing_variance,
    gen_random_small,
    gen_tiny,
    gen_toy_two_goal,
    sample_instance,
)


class TestInit:
    def test_fresh_belief_is_blank(self):
        b = init_belief(gen_high_risk())
        assert b.observed == ()
        assert b.clicks_made == 0
        assert b.phase == "flat"

    def test_initial_phase_restricted(self):
        e = gen_toy_two_goal()
        assert init_belief(e, GOAL_SETTING).phase == GOAL_SETTING
        with pytest.raises(ValueError):
            init_belief(e, GOAL_ACHIEVEMENT)


class TestTerminationValue:
    def test_high_risk_worked_values(self):
        e = gen_high_risk()
        b = init_belief(e)
        # best prior route: 0 entry + 0 chains - 150 risk + 50 goal
        assert termination_value(b, e, "flat") == pytest.approx(-100.0)
        assert termination_value(b, e, "high") == pytest.approx(50.0)
        assert termination_value(b, e, "low", goal=15) == pytest.approx(-100.0)

    def test_zero_mean_env_is_zero_everywhere(self):
        e = gen_increasing_variance(2)
        b = init_belief(e)
        assert termination_value(b, e, "flat") == pytest.approx(0.0)
        assert termination_value(b, e, "high") == pytest.approx(0.0)
        assert termination_value(b, e, "low", goal=18) == pytest.approx(0.0)

    def test_high_level_uses_observed_goal_values(self):
        e = gen_toy_two_goal()
        b = BeliefState(((1, 30.0),))
        assert termination_value(b, e, "high") == pytest.approx(50.0)
        b = BeliefState(((1, 30.0), (2, 0.0)))
        assert termination_value(b, e, "high") == pytest.approx(30.0)

    def test_fully_observed_equals_true_max(self):
        e = gen_random_small(10, 3, 4)
        inst = sample_instance(e, 17)
        b = init_belief(e)
        for c in list(available_computations(b, e)):
            if c.kind == "inspect":
                b = observe(b, c, inst)
        true_best = max(inst.path_return(p) for p in enumerate_paths(e))
        assert termination_value(b, e, "flat") == pytest.approx(true_best)


class TestAvailable:
    def test_flat_counts(self):
        e5 = gen_increasing_variance(5)
        assert len(available_computations(init_belief(e5), e5)) == 91
        eh = gen_high_risk()  # 4 entry nodes are fixed, hence uninspectable
        assert len(available_computations(init_belief(eh), eh)) == 57

    def test_goal_setting_offers_goals_only(self):
        e = gen_high_risk()
        av = available_computations(init_belief(e, GOAL_SETTING), e)
        assert [c.node for c in av if c.kind == "inspect"] == [15, 30, 45, 60]
        assert av[-1] is TERMINATE

    def test_goal_achievement_offers_members_only(self):
        e = gen_high_risk()
        b = BeliefState((), 0, GOAL_ACHIEVEMENT, 15)
        nodes = {c.node for c in available_computations(b, e)
                 if c.kind == "inspect"}
        assert nodes == set(range(2, 16))  # entry node 1 is fixed, so absent

    def test_everything_observed_leaves_termination(self):
        e = gen_toy_two_goal()
        b = BeliefState(((1, 0.0), (2, 100.0)))
        assert available_computations(b, e) == [TERMINATE]


class TestObserve:
    def test_reveals_and_counts(self):
        e = gen_high_risk()
        inst = sample_instance(e, 0)
        b = observe(init_belief(e), inspect(8), inst)
        assert b.value_of(8) == inst.values[8]
        assert b.clicks_made == 1
        assert b.value_of(9) is None

    def test_two_observes_commute(self):
        e = gen_toy_two_goal()
        inst = sample_instance(e, 5)
        b = init_belief(e)
        ab = observe(observe(b, inspect(1), inst), inspect(2), inst)
        ba = observe(observe(b, inspect(2), inst), inspect(1), inst)
        assert ab == ba

    def test_rejects_reinspection(self):
        e = gen_toy_two_goal()
        inst = sample_instance(e, 0)
        b = observe(init_belief(e), inspect(1), inst)
        with pytest.raises(ValueError):
            observe(b, inspect(1), inst)

    def test_rejects_termination(self):
        e = gen_toy_two_goal()
        with pytest.raises(ValueError):
            observe(init_belief(e), TERMINATE, sample_instance(e, 0))

    def test_rejects_out_of_phase_inspection(self):
        e = gen_high_risk()
        b = init_belief(e, GOAL_SETTING)
        with pytest.raises(ValueError):
            observe(b, inspect(8), sample_instance(e, 0), spec=e)

    @given(st.integers(0, 50), st.integers(0, 50))
    @settings(max_examples=25, deadline=None)
    def test_observed_set_grows_monotonically(self, env_seed, inst_seed):
        e = gen_random_small(10, 3, env_seed)
        inst = sample_instance(e, inst_seed)
        b = init_belief(e)
        seen = 0
        for c in list(available_computations(b, e)):
            if c.kind != "inspect":
                continue
            b = observe(b, c, inst)
            assert len(b.observed) == seen + 1
            seen += 1


class TestBestPath:
    def test_tie_breaks_lexicographically(self):
        e = gen_toy_two_goal()
        assert best_path(init_belief(e), e) == (1,)

    def test_follows_observed_evidence(self):
        e = gen_toy_two_goal()
        b = BeliefState(((1, 0.0), (2, 100.0)))
        assert best_path(b, e) == (2,)

    def test_goal_restriction(self):
        e = gen_toy_two_goal()
        b = BeliefState(((1, 0.0), (2, 100.0)))
        assert best_path(b, e, restrict_goal=1) == (1,)

    def test_avoids_revealed_catastrophe(self):
        e = gen_high_risk()
        b = BeliefState(((8, -1500.0),))
        p = best_path(b, e)
        assert p[-1] != 15  # goal 15 sits behind the ruined node


class TestCommit:
    def test_commits_best_believed_route(self):
        e = gen_high_risk()
        b = BeliefState(((15, 100.0), (30, 100.0)), 2, GOAL_SETTING)
        assert commit_goal(b, e) == 15
        # catastrophe on goal 15's route flips the choice even though the
        # observed goal value itself still looks best
        b2 = BeliefState(((8, -1500.0), (15, 100.0), (30, 100.0)), 3,
                         GOAL_SETTING)
        assert commit_goal(b2, e) == 30
        # an unobserved goal's route (-100 prior) can beat a weak observed
        # one; the three-way tie among unobserved goals goes to the lowest id
        b3 = BeliefState(((30, 25.0),), 1, GOAL_SETTING)
        assert commit_goal(b3, e) == 15

    def test_tie_goes_to_lowest_goal_id(self):
        e = gen_toy_two_goal()
        assert commit_goal(init_belief(e, GOAL_SETTING), e) == 1


class TestRollout:
    def test_terminate_immediately(self):
        e = gen_high_risk()
        inst = sample_instance(e, 11)
        t = rollout(lambda b: TERMINATE, e, inst)
        assert t.clicks == 0
        assert t.rr == t.path_return == inst.path_return(t.path)
        assert t.path == best_path(init_belief(e), e)

    def test_inspect_everything(self):
        e = gen_tiny(4)
        inst = sample_instance(e, 2)

        def exhaustive(b):
            av = available_computations(b, e)
            return av[0] if av[0].kind == "inspect" else TERMINATE

        t = rollout(exhaustive, e, inst)
        assert t.clicks == 4
        assert t.path_return == max(inst.path_return(p)
                                    for p in enumerate_paths(e))
        assert t.rr == t.path_return - e.click_cost * 4

    def test_deterministic(self):
        e = gen_tiny(5)
        inst = sample_instance(e, 3)

        def one_click(b):
            av = available_computations(b, e)
            return av[0] if b.clicks_made == 0 else TERMINATE

        assert rollout(one_click, e, inst) == rollout(one_click, e, inst)

    def test_hierarchical_commit_and_restricted_routing(self):
        e = gen_toy_two_goal()
        inst = sample_instance(e, 1)
        t = rollout(lambda b: TERMINATE, e, inst, hierarchical=True)
        # no clicks: committed goal is the tie-break goal 1, route restricted
        assert t.path == (1,)
        assert t.clicks == 0
        assert t.switches == 0

    def test_switch_is_recorded(self):
        e = gen_toy_two_goal()
        inst = sample_instance(e, 1)
        state = {"switched": False}

        def switch_once(b):
            if b.phase == GOAL_SETTING:
                return TERMINATE
            if not state["switched"]:
                state["switched"] = True
                return SWITCH_GOAL
            return TERMINATE

        t = rollout(switch_once, e, inst, hierarchical=True)
        assert t.switches == 1
        kinds = [c["kind"] for c in t.computations]
        assert "switch" in kinds

    def test_illegal_computation_aborts(self):
        e = gen_toy_two_goal()
        inst = sample_instance(e, 0)
        with pytest.raises(RuntimeError, match="illegal"):
            rollout(lambda b: inspect(1), e, inst)  # re-inspects node 1

    def test_non_terminating_policy_aborts(self):
        e = gen_toy_two_goal()
        inst = sample_instance(e, 0)

        def ping_pong(b):
            return TERMINATE if b.phase == GOAL_SETTING else SWITCH_GOAL

        with pytest.raises(RuntimeError, match="budget"):
            rollout(ping_pong, e, inst, hierarchical=True)

    def test_commits_recorded_in_belief(self):
        e = gen_toy_two_goal()
        inst = sample_instance(e, 0)
        seen = []

        def spy(b):
            seen.append(b.commits)
            return TERMINATE

        rollout(spy, e, inst, hierarchical=True)
        assert seen[0] == ()
        assert seen[1] == (1,)


class TestTrace:
    def test_json_round_trip(self):
        e = gen_tiny(3)
        inst = sample_instance(e, 7)

        def two_clicks(b):
            av = available_computations(b, e)
            return av[0] if b.clicks_made < 2 else TERMINATE

        t = rollout(two_clicks, e, inst)
        assert Trace.from_json(t.to_json()) == t

    def test_rr_identity(self):
        assert rr_score(120.0, 8, 1.0) == 112.0
        assert rr_score(0.0, 3, 10.0) == -30.0
        assert rr_score(55.0, 0, 99.0) == 55.0
