from __future__ import annotations

import math
import random

import numpy as np
import pytest

from qcoach import learn, maze
from qcoach.learn import (
    ActionSource,
    EpisodeLog,
    Hyperparams,
    QTable,
    RewardSource,
    StepRecord,
    Teacher,
    TerminatedBy,
    VisitCounts,
)
from qcoach.maze import Action, GridPos, MazeConfig, StepEvent
from qcoach.rng import CountedRng

from conftest import bfs_shortest


def make_record(s=0, a=Action.DOWN, r=-1.0, s_next=1, done=False):
    return StepRecord(s, a, r, s_next, done, RewardSource.AUTOMATIC,
                      ActionSource.GREEDY, StepEvent.STEP)


# ---------------------------------------------------------------------------
# hyperparams
# ---------------------------------------------------------------------------

def test_hyperparam_defaults():
    hp = Hyperparams()
    assert (hp.alpha, hp.gamma, hp.epsilon) == (0.05, 0.9, 0.3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": 0.0},
        {"alpha": 1.5},
        {"gamma": 1.0},
        {"gamma": -0.1},
        {"epsilon": -0.01},
        {"epsilon": 1.01},
    ],
)
def test_hyperparam_ranges_enforced(kwargs):
    with pytest.raises(ValueError):
        Hyperparams(**kwargs)


# ---------------------------------------------------------------------------
# q_update
# ---------------------------------------------------------------------------

def test_update_from_zero_with_step_cost(config):
    # hand evaluation: 0 + 0.05 * (-1 + 0.9*0 - 0) = -0.05
    q = QTable.for_config(config)
    new = learn.q_update(q, make_record(r=-1.0), Hyperparams())
    assert new == pytest.approx(-0.05, abs=1e-15)


def test_update_terminal_bootstraps_zero(config):
    # hand evaluation: 0 + 0.05 * (30 + 0 - 0) = 1.5
    q = QTable.for_config(config)
    q.values[1] = 999.0  # must be ignored: terminal continuation is zero
    new = learn.q_update(q, make_record(r=30.0, done=True), Hyperparams())
    assert new == pytest.approx(1.5, abs=1e-15)


def test_update_with_zero_td_error_is_identity(config):
    q = QTable.for_config(config)
    q.values[0, Action.DOWN] = 4.0
    q.values[1] = 5.0
    rec = make_record(r=4.0 - 0.9 * 5.0)  # makes the target equal the entry
    assert learn.q_update(q, rec, Hyperparams()) == pytest.approx(4.0, abs=1e-12)


def test_update_touches_exactly_one_entry(config):
    q = QTable.for_config(config)
    before = q.values.copy()
    learn.q_update(q, make_record(), Hyperparams())
    diff = np.argwhere(q.values != before)
    assert diff.tolist() == [[0, int(Action.DOWN)]]


def test_update_rejects_non_finite():
    q = QTable(4)
    with pytest.raises(ValueError):
        learn.q_update(q, make_record(r=float("nan")), Hyperparams())


def test_update_matches_independent_formula():
    # two-implementation check over randomized tables, records and params
    rng = random.Random(12345)
    for _ in range(500):
        q = QTable(18)
        q.values = np.array(
            [[rng.uniform(-40, 40) for _ in range(4)] for _ in range(18)]
        )
        s, s_next = rng.randrange(18), rng.randrange(18)
        a = Action(rng.randrange(4))
        r = rng.uniform(-30, 30)
        done = rng.random() < 0.3
        hp = Hyperparams(
            alpha=rng.uniform(0.01, 1.0), gamma=rng.uniform(0.0, 0.99), epsilon=0.5
        )
        old = float(q.values[s, a])
        expected = old + hp.alpha * (
            r + hp.gamma * (0.0 if done else max(float(v) for v in q.values[s_next])) - old
        )
        rec = make_record(s=s, a=a, r=r, s_next=s_next, done=done)
        got = learn.q_update(q, rec, hp)
        assert math.isclose(got, expected, rel_tol=1e-12, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# select_action
# ---------------------------------------------------------------------------

def test_pure_argmax_when_epsilon_zero(config):
    q = QTable.for_config(config)
    q.values[0, Action.DOWN] = -0.05
    q.values[0, Action.RIGHT] = 1.5
    action, source = learn.select_action(
        q, 0, (Action.DOWN, Action.RIGHT), 0.0, CountedRng(0)
    )
    assert action is Action.RIGHT
    assert source is ActionSource.GREEDY


def test_full_exploration_is_uniform():
    q = QTable(18)
    rng = CountedRng(42)
    legal = (Action.UP, Action.DOWN, Action.LEFT, Action.RIGHT)
    hits = {a: 0 for a in legal}
    for _ in range(10_000):
        action, source = learn.select_action(q, 0, legal, 1.0, rng)
        assert source is ActionSource.EXPLORATORY
        hits[action] += 1
    for count in hits.values():
        assert 0.23 <= count / 10_000 <= 0.27


def test_greedy_tie_break_is_uniform():
    q = QTable(18)  # all zeros: a two-way tie everywhere
    rng = CountedRng(7)
    legal = (Action.DOWN, Action.RIGHT)
    hits = {a: 0 for a in legal}
    for _ in range(10_000):
        action, source = learn.select_action(q, 0, legal, 0.0, rng)
        assert source is ActionSource.GREEDY
        hits[action] += 1
    for count in hits.values():
        assert 0.47 <= count / 10_000 <= 0.53


def test_illegal_actions_never_selected():
    q = QTable(18)
    q.values[0, Action.UP] = 100.0  # juicy but masked
    rng = CountedRng(3)
    for _ in range(500):
        action, _ = learn.select_action(q, 0, (Action.DOWN, Action.RIGHT), 0.5, rng)
        assert action in (Action.DOWN, Action.RIGHT)


def test_empty_legal_set_rejected():
    with pytest.raises(ValueError):
        learn.select_action(QTable(18), 0, (), 0.0, CountedRng(0))


# ---------------------------------------------------------------------------
# value_iteration (the oracle)
# ---------------------------------------------------------------------------

def test_zero_discount_collapses_to_immediate_rewards(config):
    q = learn.value_iteration(config, gamma=0.0, tol=1e-10)
    for s in range(config.num_states):
        state = maze.index_to_state(s, config)
        if state.done:
            continue
        for action in maze.legal_actions(state, config):
            assert float(q.values[s, action]) == maze.step(state, action, config).reward


def test_oracle_greedy_trace_is_bfs_shortest(config):
    q = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    trace = learn.greedy_trace(q, config)
    shortest = bfs_shortest(config, config.start, config.treasure) + bfs_shortest(
        config, config.treasure, config.exit
    )
    assert len(trace) == shortest
    events = [outcome.event for _, _, outcome in trace]
    assert events.count(StepEvent.TREASURE_FOUND) == 1
    assert events[-1] is StepEvent.EXIT_REACHED
    # treasure strictly before exit
    assert events.index(StepEvent.TREASURE_FOUND) < len(events) - 1


def test_oracle_optimal_episode_score(config):
    # hand trace of the optimal path: -1 (step) +20 (treasure) -1 (step) +30 (exit)
    q = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    trace = learn.greedy_trace(q, config)
    assert sum(outcome.reward for _, _, outcome in trace) == 48.0


def test_bellman_residual_below_tol(config):
    q = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    assert learn.bellman_residual(q, config, 0.9) < 1e-8


def test_sweep_residuals_never_increase(config):
    q = QTable.for_config(config)
    transitions = learn._enumerate_transitions(config)
    legal = learn._legal_actions_by_state(config)
    residuals = [learn._sweep(q, transitions, legal, 0.9) for _ in range(60)]
    assert all(a >= b for a, b in zip(residuals, residuals[1:]))


def test_oracle_masked_entries_stay_zero(config):
    q = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    state = maze.index_to_state(0, config)  # corner: UP and LEFT masked
    legal = maze.legal_actions(state, config)
    for action in Action:
        if action not in legal:
            assert float(q.values[0, action]) == 0.0


def test_value_iteration_rejects_bad_params(config):
    with pytest.raises(ValueError):
        learn.value_iteration(config, gamma=1.0)
    with pytest.raises(ValueError):
        learn.value_iteration(config, gamma=0.9, tol=0.0)


# ---------------------------------------------------------------------------
# greedy_policy
# ---------------------------------------------------------------------------

def test_all_zero_table_prefers_first_legal_action(config):
    policy = learn.greedy_policy(QTable.for_config(config), config)
    for s, action in policy.items():
        state = maze.index_to_state(s, config)
        assert action == maze.legal_actions(state, config)[0]


def test_terminal_states_excluded_from_policy(config):
    policy = learn.greedy_policy(QTable.for_config(config), config)
    exit_cell = config.exit.row * config.width + config.exit.col
    assert exit_cell not in policy
    assert exit_cell + config.num_cells not in policy
    assert len(policy) == config.num_states - 2


def test_policy_of_oracle_traces_through_treasure(config):
    q = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    trace = learn.greedy_trace(q, config)
    visited = [state.pos for state, _, _ in trace] + [trace[-1][2].next.pos]
    assert config.treasure in visited
    assert visited[-1] == config.exit


# ---------------------------------------------------------------------------
# run_episode
# ---------------------------------------------------------------------------

def test_zero_epsilon_with_oracle_replays_optimal_path(config):
    q = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    counts = VisitCounts.for_config(config)
    hp = Hyperparams(alpha=0.05, gamma=0.9, epsilon=0.0)
    log = learn.run_episode(config, q.copy(), counts, hp, CountedRng(0))
    assert log.terminated_by is TerminatedBy.EXIT
    assert log.found_treasure
    assert len(log.records) == 4
    assert log.score == 48.0
    oracle_pairs = [(maze.state_index(s, config), a) for s, a, _ in learn.greedy_trace(q, config)]
    assert [(r.s, r.a) for r in log.records] == oracle_pairs


def test_step_cap_of_one_forces_single_record():
    config = MazeConfig(max_steps_per_episode=1)
    q = QTable.for_config(config)
    counts = VisitCounts.for_config(config)
    log = learn.run_episode(config, q, counts, Hyperparams(), CountedRng(1))
    assert len(log.records) == 1
    assert log.records[-1].done
    assert log.terminated_by is TerminatedBy.TIMEOUT


class FirstLegalTeacher(Teacher):
    def advise(self, s, legal, q):
        return legal[0]


def test_teacher_advice_takes_precedence_and_is_tagged():
    config = MazeConfig(max_steps_per_episode=20)
    q = QTable.for_config(config)
    counts = VisitCounts.for_config(config)
    log = learn.run_episode(config, q, counts, Hyperparams(), CountedRng(0), teacher=FirstLegalTeacher())
    assert log.records
    assert all(r.action_source is ActionSource.ADVISED for r in log.records)


class RewardDoubler(Teacher):
    def override_reward(self, s, a, auto_reward, s_next, done):
        return auto_reward * 2


def test_teacher_reward_override_is_tagged():
    config = MazeConfig(max_steps_per_episode=5)
    q = QTable.for_config(config)
    counts = VisitCounts.for_config(config)
    log = learn.run_episode(config, q, counts, Hyperparams(), CountedRng(0), teacher=RewardDoubler())
    assert all(r.reward_source is RewardSource.HUMAN_OVERRIDE for r in log.records)
    assert all(r.r in (-2.0, -20.0, 40.0, 60.0) for r in log.records)


def test_episode_bookkeeping_invariants(config):
    q = QTable.for_config(config)
    counts = VisitCounts.for_config(config)
    hp = Hyperparams()
    rng = CountedRng(99)
    logs = [learn.run_episode(config, q, counts, hp, rng, episode_index=i) for i in range(50)]
    # count conservation
    assert counts.total() == sum(len(log.records) for log in logs)
    for log in logs:
        assert log.score == pytest.approx(sum(r.r for r in log.records))
        assert log.records[-1].done
        for rec in log.records:
            # masking safety: the logged action was legal in its state
            state = maze.index_to_state(rec.s, config)
            assert rec.a in maze.legal_actions(state, config)
            # provenance totality
            assert rec.reward_source in RewardSource
            assert rec.action_source in ActionSource


def test_single_seed_learns_the_oracle_policy(config):
    # quick single-seed version of the convergence acceptance criterion
    oracle = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    trajectory_states = [maze.state_index(s, config) for s, _, _ in learn.greedy_trace(oracle, config)]
    hp = Hyperparams(alpha=0.05, gamma=0.9, epsilon=0.3)
    q = QTable.for_config(config)
    counts = VisitCounts.for_config(config)
    rng = CountedRng(0)
    for i in range(5000):
        learn.run_episode(config, q, counts, hp, rng, episode_index=i)
        if i % 25 == 24 and _agrees_on(trajectory_states, q, oracle, config):
            break
    assert _agrees_on(trajectory_states, q, oracle, config)


def _agrees_on(states, q, oracle, config):
    learned = learn.greedy_policy(q, config)
    target = learn.greedy_policy(oracle, config)
    return all(learned[s] == target[s] for s in states)


# ---------------------------------------------------------------------------
# rng determinism
# ---------------------------------------------------------------------------

def test_counted_rng_restores_by_draw_count():
    a = CountedRng(1234)
    for _ in range(137):
        a.uniform()
    b = CountedRng.from_state(a.state())
    assert [a.uniform() for _ in range(20)] == [b.uniform() for _ in range(20)]


def test_same_seed_same_episodes(config):
    hp = Hyperparams()

    def run():
        q = QTable.for_config(config)
        counts = VisitCounts.for_config(config)
        rng = CountedRng(77)
        return [learn.run_episode(config, q, counts, hp, rng, episode_index=i) for i in range(10)]

    first, second = run(), run()
    assert [log.records for log in first] == [log.records for log in second]


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def test_qtable_export_round_trip(tmp_path, config):
    q = learn.value_iteration(config, gamma=0.9, tol=1e-8)
    counts = VisitCounts.for_config(config)
    counts.increment(0, Action.DOWN)
    payload = learn.export_qtable(q, counts, Hyperparams(), config, seed=42)
    path = tmp_path / "oracle.json"
    learn.save_qtable(str(path), payload)
    loaded = learn.load_qtable(str(path))
    assert loaded["values"] == q.to_lists()
    assert loaded["visit_counts"][0][int(Action.DOWN)] == 1
    assert loaded["config_digest"] == config.digest()
    assert loaded["seed"] == 42


def test_qtable_export_version_checked(tmp_path, config):
    payload = learn.export_qtable(
        QTable.for_config(config), VisitCounts.for_config(config), Hyperparams(), config
    )
    payload["schema_version"] = 999
    path = tmp_path / "bad.json"
    learn.save_qtable(str(path), payload)
    with pytest.raises(ValueError, match="schema_version"):
        learn.load_qtable(str(path))


def test_learning_curve_csv(tmp_path, config):
    q = QTable.for_config(config)
    counts = VisitCounts.for_config(config)
    rng = CountedRng(5)
    logs = [learn.run_episode(config, q, counts, Hyperparams(), rng, episode_index=i) for i in range(3)]
    logs.append(EpisodeLog(episode_index=3, aborted=True))
    path = tmp_path / "curve.csv"
    learn.write_learning_curve(str(path), logs)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == ",".join(learn.CURVE_COLUMNS)
    assert len(lines) == 4  # header + 3 completed episodes; aborted skipped
