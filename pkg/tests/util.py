"""Shared fixtures and independent oracles for the test suite.

Oracles here deliberately avoid the package's own algorithms: cycle search
is exhaustive DFS enumeration, eigenvalues come from dense power iteration
on an explicitly assembled matrix, and scalar equations are bisected.
"""

from __future__ import annotations

import numpy as np

from vardp import DecisionProcess, make_linear, make_log, make_piecewise_linear, make_sqrt_root


def random_table_process(rng, n_states=None, n_actions=None, discount=None,
                         nonneg=True, full_feasible=True):
    """Fully random transition tables; may be multichain."""
    n = int(n_states if n_states is not None else rng.integers(2, 7))
    m = int(n_actions if n_actions is not None else rng.integers(2, 5))
    transitions = rng.integers(0, n, size=(n, m))
    rewards = rng.uniform(0.0 if nonneg else -1.0, 1.0, size=(n, m))
    if full_feasible:
        feasible = np.ones((n, m), dtype=bool)
    else:
        feasible = rng.uniform(size=(n, m)) < 0.7
        feasible[np.arange(n), rng.integers(0, m, size=n)] = True
    w = rng.uniform(0.2, 1.0, size=(n, m)) * feasible
    w /= w.sum(axis=1, keepdims=True)
    d = discount if discount is not None else make_log()
    return DecisionProcess.finite(transitions, rewards, d, feasible=feasible, weights=w)


def action_target_process(rng, n_states=None, n_actions=None, discount=None):
    """f(x, a) = a (mod states): single recurrent class, every state reaches it."""
    n = int(n_states if n_states is not None else rng.integers(2, 7))
    m = int(n_actions if n_actions is not None else rng.integers(2, 5))
    transitions = np.tile(np.arange(m) % n, (n, 1))
    rewards = rng.uniform(0.0, 1.0, size=(n, m))
    w = rng.uniform(0.2, 1.0, size=(n, m))
    w /= w.sum(axis=1, keepdims=True)
    d = discount if discount is not None else make_log()
    return DecisionProcess.finite(transitions, rewards, d, weights=w)


def random_discount(rng):
    k = rng.integers(0, 4)
    if k == 0:
        return make_linear(float(rng.uniform(0.2, 0.9)))
    if k == 1:
        return make_log()
    if k == 2:
        return make_sqrt_root(float(rng.uniform(1.5, 4.0)))
    return make_piecewise_linear(float(rng.uniform(0.2, 0.9)))


def enumerate_max_mean_cycle(p) -> float:
    """Exhaustive simple-cycle enumeration (fine for <= 8 states)."""
    n, m = p.size, p.n_actions
    best = -np.inf

    def walk(path, sums):
        nonlocal best
        x = path[-1]
        for a in range(m):
            if not p.feasible[x, a]:
                continue
            y = int(p.transition_table[x, a])
            w = float(p.reward[x, a])
            if y in path:
                i = path.index(y)
                best = max(best, (sums[-1] - sums[i] + w) / (len(path) - i))
            else:
                walk(path + [y], sums + [sums[-1] + w])

    for s in range(n):
        walk([s], [0.0])
    return best


def explicit_ruelle_matrix(p) -> np.ndarray:
    """L[x, y] = sum over actions a with f(x, a) = y of weights * e^u."""
    L = np.zeros((p.size, p.size))
    for x in range(p.size):
        for a in range(p.n_actions):
            if p.feasible[x, a]:
                L[x, int(p.transition_table[x, a])] += p.weights[x, a] * np.exp(p.reward[x, a])
    return L


def matrix_power_iteration(L: np.ndarray, tol=1e-12, max_iter=200_000):
    """Principal eigenpair of a nonnegative matrix via Collatz bracketing."""
    g = np.ones(L.shape[0])
    for _ in range(max_iter):
        lg = L @ g
        ratios = lg / g
        hi, lo = float(ratios.max()), float(ratios.min())
        g = lg / lg.max()
        if hi - lo <= tol * max(hi, 1e-300):
            return hi, g
    return hi, g


def bisect(fn, lo, hi, tol=1e-14, max_iter=200):
    """Root of a scalar monotone function by bisection."""
    flo, fhi = fn(lo), fn(hi)
    assert flo * fhi <= 0, "bisection bracket does not straddle a root"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)
