"""Value iteration, policy iteration, policy serialization."""

import json
import random
from fractions import Fraction

import numpy as np
import pytest

from obd.compiler import compile_model
from obd.dsl import parse_domain
from obd.solver import (
    SolverError,
    dump_policy,
    evaluate_policy,
    greedy_policy,
    load_policy,
    policy_iteration,
    policy_to_json,
    value_iteration,
)

import oracles


def _tiny(text, gamma=Fraction(9, 10)):
    return compile_model(parse_domain(text), gamma=gamma)


# ---------------------------------------------------------------------------
# Analytic checks


def test_geometric_series_single_state():
    """Self-loop paying 1 per tick at gamma 0.9 is worth exactly 10."""
    mdp = _tiny("""
        Variable x domain {v}
        ReqID g maintain x=v reward 1
        Init { x=v }
    """)
    vi = value_iteration(mdp)
    pi = policy_iteration(mdp)
    assert vi.values[0] == pytest.approx(10.0, abs=1e-4)
    assert pi.values[0] == pytest.approx(10.0, abs=1e-9)


def test_zero_rewards_mean_zero_values_and_noop(toy_model):
    stripped = toy_model.requirements[0]
    model = type(toy_model)(
        toy_model.variables, toy_model.actions, toy_model.events,
        (type(stripped)(stripped.name, stripped.kind, stripped.required,
                        stripped.activation, stripped.cancellation,
                        stripped.deadline, stripped.duration, 0),),
        toy_model.initial_state)
    # keep costs: every non-noop action has a strictly negative payoff,
    # so noop (free) is optimal everywhere and all values are zero
    mdp = compile_model(model)
    strategy = policy_iteration(mdp)
    assert np.allclose(strategy.values, 0.0, atol=1e-9)
    assert all(mdp.action_names[a] == "noop" for a in strategy.actions)


def test_constant_reward_shift():
    """A reward earned on every transition of every action adds the same
    geometric constant to every state value."""
    base = """
        Variable x
        Action a if !x effects <x prob 0.5>
        Init { !x }
    """
    bonus = base.replace("Init", "ReqID g maintain true reward 2\nInit")
    v0 = policy_iteration(_tiny(base)).values
    v1 = policy_iteration(_tiny(bonus)).values
    shift = 2.0 / (1.0 - 0.9)
    assert np.allclose(v1 - v0, shift, atol=1e-8)


# ---------------------------------------------------------------------------
# VI and PI agree


def _assert_agreement(mdp, atol=1e-5):
    vi = value_iteration(mdp)
    pi = policy_iteration(mdp)
    assert np.max(np.abs(vi.values - pi.values)) < atol
    assert np.array_equal(vi.actions, pi.actions)
    return vi, pi


def test_agreement_toy(toy_mdp):
    vi, pi = _assert_agreement(toy_mdp)
    assert vi.method == "value-iteration"
    assert pi.method == "policy-iteration"


def test_agreement_restaurant(restaurant_mdp):
    _assert_agreement(restaurant_mdp)


@pytest.mark.parametrize("seed", range(15))
def test_agreement_random_models(seed):
    model = oracles.random_model(random.Random(2000 + seed))
    _assert_agreement(compile_model(model))


# ---------------------------------------------------------------------------
# Optimality against exhaustive enumeration (tiny models)


def _small_models():
    texts = [
        """
        Variable x
        Action a if !x effects <x prob 0.7>
        Action b if x effects <!x>
        ReqID m achieve x if !x reward 10
        Init { !x }
        """,
        """
        Variable x
        Action a if !x effects <x prob 0.5> cost 2
        Event e if x occur prob 0.4 effects <!x>
        ReqID m maintain x reward 3
        Init { !x }
        """,
        """
        Variable s domain {a,b,c,d}
        Action right
            if s=a effects <s=b prob 0.9>
            if s=b effects <s=c prob 0.9>
            if s=c effects <s=d prob 0.9>
        Action reset if s=d || s=c effects <s=a> cost 1
        ReqID m achieve s=d reward 20
        Init { s=a }
        """,
    ]
    return [_tiny(t) for t in texts]


def test_optimal_against_exhaustive_enumeration():
    for mdp in _small_models():
        assert mdp.n_states <= 4
        assert mdp.n_actions <= 3
        best = oracles.exhaustive_optimal_values(mdp)
        for strategy in (value_iteration(mdp), policy_iteration(mdp)):
            assert np.max(np.abs(strategy.values - best)) < 1e-5, \
                strategy.method


def test_policy_evaluation_is_linear_solve(toy_mdp):
    strategy = policy_iteration(toy_mdp)
    values = evaluate_policy(toy_mdp, strategy.actions)
    n = toy_mdp.n_states
    gamma = float(toy_mdp.gamma)
    p = np.zeros((n, n))
    r = np.zeros(n)
    for s in range(n):
        name = toy_mdp.action_names[strategy.actions[s]]
        row = toy_mdp.transitions[name].row(s)
        for j, prob in row.items():
            p[s, j] = float(prob)
            r[s] += float(prob) * float(
                toy_mdp.rewards[name].get(s, j))
    direct = np.linalg.solve(np.eye(n) - gamma * p, r)
    assert np.allclose(values, direct, atol=1e-9)


def test_greedy_policy_reproduces_optimal(toy_mdp):
    strategy = value_iteration(toy_mdp)
    greedy = greedy_policy(toy_mdp, strategy.values)
    assert np.array_equal(greedy.actions, strategy.actions)


def test_value_iteration_residual_threshold(toy_mdp):
    eps = 1e-6
    strategy = value_iteration(toy_mdp, eps)
    gamma = float(toy_mdp.gamma)
    assert strategy.residual < eps * (1 - gamma) / (2 * gamma)
    assert strategy.iterations > 1


def test_reward_scaling_preserves_argmax(toy_model):
    """Multiplying the single requirement reward by 10 rescales values but
    cannot change which action is greedy (costs are zero here)."""
    free = tuple(
        type(a)(a.name, a.branches, 0) for a in toy_model.actions)
    req = toy_model.requirements[0]
    def with_reward(r):
        model = type(toy_model)(
            toy_model.variables, free, toy_model.events,
            (type(req)(req.name, req.kind, req.required, req.activation,
                       req.cancellation, req.deadline, req.duration, r),),
            toy_model.initial_state)
        return policy_iteration(compile_model(model))
    small = with_reward(10)
    large = with_reward(100)
    assert np.array_equal(small.actions, large.actions)
    assert np.allclose(large.values, 10 * small.values, atol=1e-6)


# ---------------------------------------------------------------------------
# Serialization


def test_policy_round_trip(toy_mdp):
    strategy = policy_iteration(toy_mdp)
    text = dump_policy(strategy, toy_mdp)
    assert text.startswith("obdpolicy/1\n")
    loaded = load_policy(text, toy_mdp)
    assert np.array_equal(loaded.actions, strategy.actions)
    assert np.allclose(loaded.values, strategy.values)
    assert dump_policy(loaded, toy_mdp) == text


def test_policy_json_mirror(toy_mdp):
    strategy = policy_iteration(toy_mdp)
    doc = json.loads(policy_to_json(strategy, toy_mdp))
    assert len(doc["states"]) == toy_mdp.n_states
    first = doc["states"][0]
    assert set(first) >= {"index", "action", "value"}
    assert first["action"] in toy_mdp.action_names


def test_load_policy_rejects_garbage(toy_mdp):
    with pytest.raises(SolverError):
        load_policy("bogus\n", toy_mdp)
