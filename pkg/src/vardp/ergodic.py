"""Holonomic-measure side of the ergodic value: independent finite-carrier
oracles and constructive maximizing orbits.

On a finite process the supremum of the mean reward over holonomic
measures is attained by a uniform measure on some directed cycle of the
action graph, so the maximum mean cycle (Karp's dynamic program) is an
exact oracle for the vanishing-discount value.  A greedy orbit driven by a
calibrated pair (ubar, h) realizes that value up to a telescoping boundary
term, and its empirical measure is holonomic up to O(1/K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, ParameterError, StructuralError
from .limits import subaction_residual
from .operators import ValueFunction, next_values
from .process import DecisionProcess, FeasibleHistory, FiniteSpace, GridSpace

TIGHT_EPS = 1e-9


@dataclass(frozen=True)
class Arc:
    src: int
    action: int
    dst: int
    weight: float


@dataclass(frozen=True)
class ActionGraph:
    """Finite weighted digraph (x) --a/u(x,a)--> (f(x,a))."""

    n_nodes: int
    arcs: tuple[Arc, ...]

    @classmethod
    def from_process(cls, p: DecisionProcess) -> "ActionGraph":
        if not isinstance(p.space, FiniteSpace):
            raise ParameterError("action graphs require the finite backend")
        arcs = [
            Arc(x, a, int(p.transition_table[x, a]), float(p.reward[x, a]))
            for x in range(p.size)
            for a in range(p.n_actions)
            if p.feasible[x, a]
        ]
        out_deg = np.zeros(p.size, dtype=int)
        for arc in arcs:
            out_deg[arc.src] += 1
        if (out_deg == 0).any():
            raise StructuralError(
                f"node {int(np.flatnonzero(out_deg == 0)[0])} has no outgoing arc")
        return cls(p.size, tuple(arcs))


@dataclass(frozen=True)
class MaxMeanCycle:
    """Karp value plus one cycle attaining it (weights from the raw reward)."""

    value: float
    cycle: tuple[Arc, ...]

    @property
    def cycle_mean(self) -> float:
        return sum(a.weight for a in self.cycle) / len(self.cycle)


def max_mean_cycle(g: ActionGraph) -> MaxMeanCycle:
    """Maximum mean arc-weight over directed cycles, with an achieving cycle.

    Karp's length-indexed dynamic program (virtual-source variant) gives the
    value; a tight-arc search under the induced potentials recovers a cycle
    whose arcs all sit on the optimum.
    """
    n, arcs = g.n_nodes, g.arcs
    if not arcs:
        raise StructuralError("graph has no arcs, hence no cycle")
    neg = -np.inf
    d = np.full((n + 1, n), neg)
    d[0, :] = 0.0
    src = np.array([a.src for a in arcs])
    dst = np.array([a.dst for a in arcs])
    wgt = np.array([a.weight for a in arcs])
    for k in range(1, n + 1):
        row = np.full(n, neg)
        cand = d[k - 1, src] + wgt
        np.maximum.at(row, dst, cand)
        d[k] = row

    best = neg
    for v in range(n):
        if d[n, v] == neg:
            continue
        ks = [k for k in range(n) if d[k, v] > neg]
        val = min((d[n, v] - d[k, v]) / (n - k) for k in ks)
        best = max(best, val)
    if best == neg:
        raise StructuralError("no directed cycle is reachable")

    # potentials for the shifted weights w - best: longest walks stabilize
    pi = np.zeros(n)
    for _ in range(n + 1):
        nxt = pi.copy()
        np.maximum.at(nxt, dst, pi[src] + (wgt - best))
        if np.array_equal(nxt, pi):
            break
        pi = nxt
    scale = TIGHT_EPS * (1.0 + float(np.abs(wgt).max())) * n
    tight = [a for a, s, t, w in zip(arcs, src, dst, wgt)
             if abs(pi[t] - pi[s] - (w - best)) <= scale]
    cycle = _find_cycle(n, tight)
    if cycle is None:
        raise StructuralError("tight subgraph unexpectedly acyclic; value may be inexact")
    return MaxMeanCycle(value=float(best), cycle=tuple(cycle))


def _find_cycle(n: int, arcs: list[Arc]) -> list[Arc] | None:
    """First directed cycle found by DFS over the given arcs."""
    out: dict[int, list[Arc]] = {}
    for a in arcs:
        out.setdefault(a.src, []).append(a)
    color: dict[int, int] = {}  # 1 on stack, 2 done
    for start in out:
        if color.get(start):
            continue
        stack_nodes = [start]
        stack_iters = [iter(out.get(start, []))]
        path: list[Arc] = []  # path[i] joins stack_nodes[i] -> stack_nodes[i+1]
        color[start] = 1
        while stack_nodes:
            advanced = False
            for arc in stack_iters[-1]:
                if color.get(arc.dst) == 1:
                    idx = stack_nodes.index(arc.dst)
                    return path[idx:] + [arc]
                if color.get(arc.dst) is None:
                    color[arc.dst] = 1
                    stack_nodes.append(arc.dst)
                    stack_iters.append(iter(out.get(arc.dst, [])))
                    path.append(arc)
                    advanced = True
                    break
            if not advanced:
                color[stack_nodes.pop()] = 2
                stack_iters.pop()
                if path:
                    path.pop()
    return None


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted atoms on (state, action) pairs; weights sum to one."""

    states: np.ndarray
    actions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = float(np.asarray(self.weights).sum())
        if abs(s - 1.0) > 1e-9:
            raise ParameterError(f"atom weights sum to {s:.12g}, expected 1")

    @classmethod
    def uniform_on_cycle(cls, cycle: tuple[Arc, ...]) -> "EmpiricalMeasure":
        k = len(cycle)
        return cls(np.array([a.src for a in cycle]),
                   np.array([a.action for a in cycle]),
                   np.full(k, 1.0 / k))

    def mean_reward(self, p: DecisionProcess) -> float:
        vals = [p.reward_at(s, a) for s, a in zip(self.states, self.actions)]
        return float(np.dot(self.weights, vals))

    def write_csv(self, path) -> None:
        """Dump atoms as state,action,weight rows."""
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state", "action", "weight"])
            for s, a, w in zip(self.states, self.actions, self.weights):
                writer.writerow([s, int(a), repr(float(w))])


def holonomy_defect(p: DecisionProcess, m: EmpiricalMeasure) -> float:
    """Worst discrete-differential integral over the spanning test set.

    Finite backend: indicators of each state (exact).  Grid backend: the
    nodal hat functions, evaluated through the interpolation rule.
    """
    if isinstance(p.space, FiniteSpace):
        acc = np.zeros(p.size)
        for s, a, w in zip(m.states, m.actions, m.weights):
            acc[p.step(s, int(a))] += w
            acc[int(s)] -= w
        return float(np.abs(acc).max())

    if isinstance(p.space, GridSpace):
        acc = np.zeros(p.size)
        xs = np.asarray(m.states, dtype=float)
        imgs = np.array([p.step(x, int(a)) for x, a in zip(xs, m.actions)])
        for pts, sign in ((imgs, 1.0), (xs, -1.0)):
            idx, wgt = p.space.interp_plan(pts)
            np.add.at(acc, idx.reshape(-1),
                      sign * (wgt * m.weights[:, None]).reshape(-1))
        return float(np.abs(acc).max())

    raise ParameterError("holonomy defect supports finite and grid backends")


def maximizing_orbit(p: DecisionProcess, h: ValueFunction, ubar: float,
                     start, length: int, tol: float = 1e-6
                     ) -> tuple[FeasibleHistory, EmpiricalMeasure]:
    """Greedy orbit a_i in argmax_a u(x_i, a) - ubar + h(f(x_i, a)).

    Refuses when (h, ubar) fail the calibrated equation within tol, since
    the telescoping guarantee mean >= ubar - 2 max|h| / K - tol rests on it.
    Ties go to the lowest action index.
    """
    if length < 1:
        raise ParameterError("orbit length must be >= 1")
    res = subaction_residual(p, h, ubar)
    if res > tol:
        raise CalibrationError(
            f"calibration residual {res:.3g} exceeds tol {tol:g}; "
            "refusing to certify a greedy orbit")

    states, actions = [], []
    if isinstance(p.space, FiniteSpace):
        scores = p.masked_reward - ubar + next_values(p, h)
        greedy = np.argmax(scores, axis=1)
        x = int(start)
        for _ in range(length):
            a = int(greedy[x])
            states.append(x)
            actions.append(a)
            x = p.step(x, a)
        final = x
    elif isinstance(p.space, GridSpace):
        x = float(start)
        acts = np.arange(p.n_actions)
        for _ in range(length):
            imgs = np.array([p.step(x, int(a)) for a in acts])
            rew = np.array([p.reward_at(x, int(a)) for a in acts])
            score = rew - ubar + h.at(imgs)
            a = int(np.argmax(score))
            states.append(x)
            actions.append(a)
            x = float(imgs[a])
        final = x
    else:
        raise ParameterError("maximizing orbits support finite and grid backends")

    hist = FeasibleHistory(states[0], tuple(actions), tuple(states) + (final,))
    meas = EmpiricalMeasure(np.array(states), np.array(actions),
                            np.full(length, 1.0 / length))
    return hist, meas


def cycle_calibrated_subaction(p: DecisionProcess, mmc: MaxMeanCycle
                               ) -> tuple[float, ValueFunction]:
    """Exact calibrated pair (ubar, h) on a finite process from an optimal cycle.

    ubar is the cycle mean; h(x) is the maximum (u - ubar)-weight over walks
    from x to a fixed node of the cycle (longest path; cycles contribute
    <= 0, so simple paths suffice).  Requires every state to reach the
    cycle, else no bounded calibrated function exists for this value.
    """
    if not isinstance(p.space, FiniteSpace):
        raise ParameterError("exact subactions require the finite backend")
    ubar = mmc.cycle_mean
    z = mmc.cycle[0].src
    n = p.size
    neg = -np.inf
    best = np.full(n, neg)
    best[z] = 0.0
    d = best.copy()
    for _ in range(n):
        shifted = np.where(p.feasible, p.reward - ubar, neg)
        nxt_vals = d[p.transition_table]
        d = np.max(shifted + np.where(p.feasible, nxt_vals, neg), axis=1)
        best = np.maximum(best, d)
    if not np.isfinite(best).all():
        unreachable = np.flatnonzero(~np.isfinite(best))
        raise StructuralError(
            f"states {unreachable.tolist()} cannot reach the optimal cycle; "
            "no bounded calibrated function exists")
    h = ValueFunction(best - best.max(), p.space)
    return float(ubar), h
