"""Sequential decision processes over finite and grid state spaces.

Two backends carry every computation:

* ``FiniteSpace(count)``: states are indices 0..count-1, transitions are
  index tables, everything is exact.
* ``GridSpace(nodes, periodic)``: states are the nodes i/nodes of [0, 1);
  transitions may land off-node and function values there are linearly
  interpolated (wrapping when periodic).  Feasibility is uniform on this
  backend: every action is available at every node.

``PairGridSpace`` is the grid product used by the regularity module; value
lookup there is barycentric on diagonal-split cells.  All three reduce to
one gather plan (indices + weights) so the operator sweeps share a single
code path.

Rewards may be negative.  Since discounts live on [0, inf), operations that
feed values into a discount use the shifted reward u + c with
c = max(0, -min u); the shift constant is recorded on the process and
un-applied by the reporting layers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .discounts import DiscountFunction, recursive_utility_bound
from .errors import FeasibilityError, ParameterError
from .reports import PropertyReport

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class FiniteSpace:
    count: int

    @property
    def size(self) -> int:
        return self.count

    def metric(self, i, j):
        """Index distance scaled into [0, 1]."""
        return np.abs(np.asarray(i, float) - np.asarray(j, float)) / self.count


@dataclass(frozen=True)
class GridSpace:
    nodes: int
    periodic: bool = True

    @property
    def size(self) -> int:
        return self.nodes

    @property
    def step(self) -> float:
        return 1.0 / self.nodes

    def points(self) -> np.ndarray:
        return np.arange(self.nodes) / self.nodes

    def metric(self, x, y):
        d = np.abs(np.asarray(x, float) - np.asarray(y, float))
        return np.minimum(d, 1.0 - d) if self.periodic else d

    def interp_plan(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Linear interpolation stencil: indices (..., 2) and weights (..., 2)."""
        pts = np.asarray(pts, dtype=float)
        pos = pts * self.nodes
        i0 = np.floor(pos).astype(np.int64)
        frac = pos - i0
        if self.periodic:
            i0 %= self.nodes
            i1 = (i0 + 1) % self.nodes
        else:
            i0 = np.clip(i0, 0, self.nodes - 1)
            i1 = np.minimum(i0 + 1, self.nodes - 1)
        idx = np.stack([i0, i1], axis=-1)
        wgt = np.stack([1.0 - frac, frac], axis=-1)
        return idx, wgt


@dataclass(frozen=True)
class PairGridSpace:
    """Product grid for joint processes; state (i, j) has flat index i*nodes + j.

    Interpolation is barycentric on cells split along the (1, 1) diagonal,
    not bilinear: a diagonal point (t, t) then reads only diagonal nodes,
    so functions vanishing on the diagonal keep an exactly zero diagonal,
    and 1d-interpolated oscillations stay dominated node-wise.
    """

    nodes: int
    periodic: bool = True

    @property
    def size(self) -> int:
        return self.nodes * self.nodes

    @property
    def axis(self) -> GridSpace:
        return GridSpace(self.nodes, self.periodic)

    def interp_plan(self, pts_x: np.ndarray, pts_y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Triangular stencil on the flattened pair index: (..., 3) each."""
        ax = self.axis
        ix, wx = ax.interp_plan(pts_x)
        iy, wy = ax.interp_plan(pts_y)
        u, v = wx[..., 1], wy[..., 1]  # fractional parts along each axis
        lower = u >= v  # triangle containing (frac_x >= frac_y)
        corner_a = ix[..., 0] * self.nodes + iy[..., 0]
        corner_c = ix[..., 1] * self.nodes + iy[..., 1]
        corner_b = np.where(lower,
                            ix[..., 1] * self.nodes + iy[..., 0],
                            ix[..., 0] * self.nodes + iy[..., 1])
        idx = np.stack([corner_a, corner_b, corner_c], axis=-1)
        wgt = np.stack([np.where(lower, 1.0 - u, 1.0 - v),
                        np.abs(u - v),
                        np.where(lower, v, u)], axis=-1)
        return idx, wgt


StateSpace = FiniteSpace | GridSpace | PairGridSpace


class DecisionProcess:
    """States, actions, feasibility, transition, reward, reference weights, discount.

    Immutable after construction; operator sweeps read the precomputed
    tables (``reward``, ``weights``, ``gather_idx``/``gather_wgt``) and never
    write back.  Construct through :meth:`finite` or :meth:`grid`.
    """

    def __init__(self, space: StateSpace, n_actions: int, feasible: np.ndarray,
                 reward: np.ndarray, weights: np.ndarray | None,
                 discount: DiscountFunction, *,
                 transition_table: np.ndarray | None = None,
                 transition_map: Callable | None = None,
                 reward_map: Callable | None = None,
                 next_points: np.ndarray | None = None,
                 action_labels: Sequence | None = None):
        size = space.size
        self.space = space
        self.n_actions = int(n_actions)
        self.action_labels = tuple(action_labels) if action_labels is not None \
            else tuple(range(self.n_actions))
        self.feasible = np.asarray(feasible, dtype=bool).reshape(size, self.n_actions)
        if not self.feasible.any(axis=1).all():
            bad = int(np.flatnonzero(~self.feasible.any(axis=1))[0])
            raise FeasibilityError(f"state {bad} has an empty feasible action set")
        self.reward = np.asarray(reward, dtype=float).reshape(size, self.n_actions)
        self.discount = discount
        self.transition_table = None
        self.transition_map = transition_map
        self.reward_map = reward_map
        self.next_points = next_points

        if transition_table is not None:
            tbl = np.asarray(transition_table, dtype=np.int64).reshape(size, self.n_actions)
            # infeasible entries are never read through the mask; park them on a self-loop
            tbl = np.where(self.feasible, tbl, np.arange(size)[:, None])
            self.transition_table = tbl
            self.gather_idx = tbl[..., None]
            self.gather_wgt = None
        elif isinstance(space, GridSpace):
            if next_points is None:
                raise ParameterError("grid process requires next_points or transition_map")
            self.gather_idx, self.gather_wgt = space.interp_plan(next_points)
        elif isinstance(space, PairGridSpace):
            if next_points is None or next_points.shape[-1] != 2:
                raise ParameterError("pair-grid process requires next_points of shape (..., 2)")
            self.gather_idx, self.gather_wgt = space.interp_plan(
                next_points[..., 0], next_points[..., 1])
        else:
            raise ParameterError("finite process requires a transition_table")

        if weights is None:
            w = self.feasible.astype(float)
            w /= w.sum(axis=1, keepdims=True)
        else:
            w = np.asarray(weights, dtype=float).reshape(size, self.n_actions)
        self.weights = w

        self.reward_min = float(self.reward[self.feasible].min())
        self.shift = max(0.0, -self.reward_min)
        # masked tables used by the operator sweeps
        self.shifted_reward = self.reward + self.shift
        neg_inf = np.float64(-np.inf)
        self.masked_shifted_reward = np.where(self.feasible, self.shifted_reward, neg_inf)
        self.masked_reward = np.where(self.feasible, self.reward, neg_inf)

    # -- constructors ------------------------------------------------------

    @classmethod
    def finite(cls, transitions, rewards, discount: DiscountFunction,
               feasible=None, weights=None, action_labels=None) -> "DecisionProcess":
        """Finite backend from (states x actions) tables."""
        rewards = np.asarray(rewards, dtype=float)
        n, m = rewards.shape
        transitions = np.asarray(transitions, dtype=np.int64)
        if transitions.shape != (n, m):
            raise ParameterError(
                f"transition table shape {transitions.shape} != reward shape {(n, m)}")
        if feasible is None:
            feasible = np.ones((n, m), dtype=bool)
        return cls(FiniteSpace(n), m, feasible, rewards, weights, discount,
                   transition_table=transitions, action_labels=action_labels)

    @classmethod
    def grid(cls, nodes: int, n_actions: int, transition: Callable, reward: Callable,
             discount: DiscountFunction, weights=None, periodic: bool = True,
             action_labels=None) -> "DecisionProcess":
        """Grid backend from callables transition(x, a) and reward(x, a).

        Both callables must be vectorized over the state argument.  Feasibility
        is uniform on this backend; per-state feasibility needs the finite one.
        """
        space = GridSpace(int(nodes), periodic)
        xs = space.points()
        nxt = np.stack([np.asarray(transition(xs, a), dtype=float)
                        for a in range(n_actions)], axis=1)
        rew = np.stack([np.asarray(reward(xs, a), dtype=float)
                        for a in range(n_actions)], axis=1)
        feas = np.ones((space.size, n_actions), dtype=bool)
        return cls(space, n_actions, feas, rew, weights, discount,
                   transition_map=transition, reward_map=reward,
                   next_points=nxt, action_labels=action_labels)

    # -- derived views -----------------------------------------------------

    def with_discount(self, discount: DiscountFunction) -> "DecisionProcess":
        """Same process under another discount; shares all tables."""
        clone = object.__new__(DecisionProcess)
        clone.__dict__.update(self.__dict__)
        clone.discount = discount
        return clone

    def with_weights(self, weights: np.ndarray) -> "DecisionProcess":
        return DecisionProcess(
            self.space, self.n_actions, self.feasible, self.reward,
            weights, self.discount,
            transition_table=self.transition_table, transition_map=self.transition_map,
            reward_map=self.reward_map, next_points=self.next_points,
            action_labels=self.action_labels)

    @property
    def size(self) -> int:
        return self.space.size

    def feasible_actions(self, state) -> np.ndarray:
        if isinstance(self.space, FiniteSpace):
            return np.flatnonzero(self.feasible[int(state)])
        return np.arange(self.n_actions)

    def step(self, state, action: int):
        """Exact one-step transition from an arbitrary state point."""
        a = int(action)
        if isinstance(self.space, FiniteSpace):
            return int(self.transition_table[int(state), a])
        return float(np.asarray(self.transition_map(np.asarray(state, float), a)))

    def reward_at(self, state, action: int, shifted: bool = False) -> float:
        """Reward at an arbitrary state point (exact, not interpolated)."""
        a = int(action)
        if isinstance(self.space, FiniteSpace):
            r = float(self.reward[int(state), a])
        elif self.reward_map is not None:
            r = float(np.asarray(self.reward_map(np.asarray(state, float), a)))
        else:
            raise ParameterError("process has no reward map for off-node evaluation")
        return r + self.shift if shifted else r

    def utility_bound(self) -> float:
        """Scalar bound for recursive utilities of the shifted reward."""
        sup = float(self.shifted_reward[self.feasible].max())
        return recursive_utility_bound(max(sup, 0.0), self.discount)


def validate(p: DecisionProcess) -> PropertyReport:
    """Structural checks: feasibility, weight normalization, transition range, rewards."""
    rep = PropertyReport()

    counts = p.feasible.sum(axis=1)
    worst = int(counts.min())
    rep.add("feasibility-nonempty", worst >= 1,
            f"min feasible actions per state = {worst}", float(worst))

    sums = (p.weights * p.feasible).sum(axis=1)
    err = float(np.abs(sums - 1.0).max())
    rep.add("weights-normalized", err <= WEIGHT_TOL,
            f"max |sum weights - 1| = {err:.3g}", err)
    off = float(np.abs(np.where(p.feasible, 0.0, p.weights)).max())
    rep.add("weights-supported", off <= WEIGHT_TOL,
            f"max weight off the feasible set = {off:.3g}", off)
    wmin = float(np.where(p.feasible, p.weights, 0.0).min())
    rep.add("weights-nonnegative", wmin >= -WEIGHT_TOL,
            f"min weight = {wmin:.3g}", wmin)

    if isinstance(p.space, FiniteSpace):
        tbl = p.transition_table[p.feasible]
        ok = bool(((tbl >= 0) & (tbl < p.size)).all())
        rep.add("transition-range", ok, "indices within 0..count-1")
    else:
        pts = p.next_points[p.feasible] if p.next_points is not None else np.empty(0)
        lo = float(pts.min()) if pts.size else 0.0
        hi = float(pts.max()) if pts.size else 0.0
        ok = pts.size == 0 or (lo >= 0.0 and hi < 1.0)
        rep.add("transition-range", ok, f"image range [{lo:.3g}, {hi:.3g}] within [0, 1)")

    finite = bool(np.isfinite(p.reward[p.feasible]).all())
    rep.add("reward-finite", finite, "all feasible rewards finite")
    return rep


@dataclass(frozen=True)
class FeasibleHistory:
    """A truncated feasible trajectory: origin, actions, realized states.

    ``states`` has one more entry than ``actions``; states[i+1] is the exact
    image of (states[i], actions[i]).
    """

    origin: int | float
    actions: tuple[int, ...]
    states: tuple

    @classmethod
    def start(cls, origin) -> "FeasibleHistory":
        return cls(origin, (), (origin,))

    @property
    def length(self) -> int:
        return len(self.actions)

    @property
    def last_state(self):
        return self.states[-1]

    def key(self) -> tuple:
        return (self.origin, self.actions)

    def shifted(self) -> "FeasibleHistory":
        """Drop the first (state, action) pair: the double left shift."""
        if not self.actions:
            raise ParameterError("cannot shift an empty history")
        return FeasibleHistory(self.states[1], self.actions[1:], self.states[1:])

    def prefix(self, n: int) -> "FeasibleHistory":
        if n > self.length:
            raise ParameterError(f"prefix length {n} exceeds history length {self.length}")
        return FeasibleHistory(self.origin, self.actions[:n], self.states[:n + 1])


def extend_history(p: DecisionProcess, h: FeasibleHistory, action: int) -> FeasibleHistory:
    """Append one feasible action and realize the new state."""
    a = int(action)
    if not 0 <= a < p.n_actions:
        raise FeasibilityError(f"action index {a} out of range 0..{p.n_actions - 1}")
    x = h.last_state
    if isinstance(p.space, FiniteSpace) and not p.feasible[int(x), a]:
        raise FeasibilityError(f"action {a} is not feasible at state {x}")
    nxt = p.step(x, a)
    return FeasibleHistory(h.origin, h.actions + (a,), h.states + (nxt,))


def history_from_actions(p: DecisionProcess, origin, actions: Sequence[int]) -> FeasibleHistory:
    h = FeasibleHistory.start(origin)
    for a in actions:
        h = extend_history(p, h, a)
    return h


@dataclass(frozen=True)
class InductiveSum:
    """Truncated star-sum together with its certified truncation tail."""

    value: float
    tail_bound: float


def inductive_sum(p: DecisionProcess, h: FeasibleHistory) -> InductiveSum:
    """Nested sum u0 + delta(u1 + delta(... + delta(u_{H-1}))) on the shifted reward.

    The tail bound is modulus^H(K) with K the scalar recursive-utility bound,
    certifying the distance to the infinite-horizon value of any feasible
    continuation.
    """
    if h.length < 1:
        raise ParameterError("inductive sum needs a history of length >= 1")
    s = 0.0
    for i in reversed(range(h.length)):
        u = p.reward_at(h.states[i], h.actions[i], shifted=True)
        s = u + float(p.discount(s))
    tail = p.discount.iterate_modulus(p.utility_bound(), h.length)
    return InductiveSum(value=float(s), tail_bound=float(tail))
