"""Process construction, validation, histories and inductive sums."""

import math

import numpy as np
import pytest

from vardp import (
    DecisionProcess,
    FeasibleHistory,
    build_doubling,
    build_subshift,
    extend_history,
    history_from_actions,
    inductive_sum,
    make_linear,
    make_log,
    validate,
)
from vardp.errors import DomainError, FeasibilityError

from util import random_table_process


def two_shift(discount=None):
    """Full shift on two symbols, uniform weights: f(x, a) = a."""
    return DecisionProcess.finite([[0, 1], [0, 1]], [[1.0, 1.0], [1.0, 1.0]],
                                  discount or make_linear(0.5))


class TestValidate:
    def test_full_shift_passes(self):
        assert validate(two_shift()).passed

    def test_empty_feasibility_rejected_at_construction(self):
        with pytest.raises(FeasibilityError):
            DecisionProcess.finite([[0, 1]], [[1.0, 1.0]], make_log(),
                                   feasible=[[False, False]])

    def test_unnormalized_weights_reported(self):
        p = DecisionProcess.finite([[0, 1], [0, 1]], [[1.0, 1.0], [1.0, 1.0]],
                                   make_log(), weights=[[0.6, 0.5], [0.5, 0.5]])
        rep = validate(p)
        assert not rep["weights-normalized"].passed
        assert rep["weights-normalized"].worst == pytest.approx(0.1)

    def test_random_processes_validate(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            assert validate(random_table_process(rng, full_feasible=False)).passed

    def test_grid_transition_range(self):
        p = build_doubling(32, lambda x: np.zeros_like(x))
        rep = validate(p)
        assert rep["transition-range"].passed


class TestHistories:
    def test_doubling_branches(self):
        p = build_doubling(64, lambda x: np.zeros_like(x))
        h = FeasibleHistory.start(0.3)
        h0 = extend_history(p, h, 0)
        assert h0.last_state == pytest.approx(0.15)
        h1 = extend_history(p, h, 1)
        assert h1.last_state == pytest.approx(0.65)

    def test_subshift_forbidden_symbol(self):
        # golden-mean-like: symbol 1 cannot be prepended when the word starts with 0
        adjacency = [[1, 1], [0, 1]]
        p = build_subshift(adjacency, np.zeros((2, 2)))
        h = FeasibleHistory.start(0)  # state = word (0,)
        with pytest.raises(FeasibilityError):
            extend_history(p, h, 1)

    def test_realized_states_chain(self):
        p = two_shift()
        h = history_from_actions(p, 0, [1, 0, 1])
        assert h.states == (0, 1, 0, 1)
        assert h.shifted().states == (1, 0, 1)


class TestInductiveSum:
    def test_geometric(self):
        p = two_shift(make_linear(0.5))
        h = history_from_actions(p, 0, [0, 0, 0])
        s = inductive_sum(p, h)
        assert s.value == pytest.approx(1.75, abs=1e-15)  # 1 + .5(1 + .5)

    def test_zero_reward(self):
        p = DecisionProcess.finite([[0, 1], [0, 1]], np.zeros((2, 2)), make_log())
        h = history_from_actions(p, 0, [1, 0, 1, 1])
        assert inductive_sum(p, h).value == 0.0

    def test_log_two_steps(self):
        p = two_shift(make_log())
        h = history_from_actions(p, 0, [0, 1])
        assert inductive_sum(p, h).value == pytest.approx(1.0 + math.log(2.0), abs=1e-14)

    def test_prefix_recursion(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            p = random_table_process(rng)
            acts = [int(rng.integers(0, p.n_actions)) for _ in range(6)]
            # keep the sequence feasible by projecting onto the feasible set
            h = FeasibleHistory.start(0)
            for a in acts:
                feas = p.feasible_actions(h.last_state)
                h = extend_history(p, h, int(feas[a % len(feas)]))
            full = inductive_sum(p, h).value
            head = p.reward_at(h.states[0], h.actions[0], shifted=True)
            tail = inductive_sum(p, h.shifted()).value
            assert full == pytest.approx(head + float(p.discount(tail)), abs=1e-12)

    def test_monotone_in_horizon_with_certified_gap(self):
        rng = np.random.default_rng(13)
        p = random_table_process(rng, n_states=3, n_actions=2)
        h = FeasibleHistory.start(0)
        values, tails = [], []
        for _ in range(30):
            feas = p.feasible_actions(h.last_state)
            h = extend_history(p, h, int(feas[0]))
            s = inductive_sum(p, h)
            values.append(s.value)
            tails.append(s.tail_bound)
        diffs = np.diff(values)
        assert (diffs >= -1e-12).all()
        # Cauchy: |S_{H+k} - S_H| <= gamma^H(K) for all k
        for i in range(len(values) - 1):
            assert abs(values[-1] - values[i]) <= tails[i] + 1e-12

    def test_negative_reward_engages_shift(self):
        p = DecisionProcess.finite([[0, 1], [0, 1]], [[-1.0, 0.5], [0.25, -0.5]],
                                   make_log())
        assert p.shift == pytest.approx(1.0)
        h = history_from_actions(p, 0, [0, 1])
        assert inductive_sum(p, h).value >= 0.0

    def test_domain_error_without_shift(self):
        with pytest.raises(DomainError):
            make_log()(np.array([-0.1, 0.5]))
