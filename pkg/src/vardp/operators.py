"""Bellman, discounted transfer, Ruelle and Koopman operators, plus the
generalized-contraction fixed-point engine.

One sweep evaluates all states against an immutable input function: the
gather plan on the process turns next-state lookups into a single fancy
index (finite) or an interpolation stencil (grid / pair grid).  The Bellman
and transfer operators work in the shifted-reward regime (values stay in
[0, inf), where the discount lives); the linear Ruelle operator needs no
discount and uses the raw reward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError
from .process import DecisionProcess, FeasibleHistory, FiniteSpace, GridSpace, PairGridSpace

RATIO_SLACK = 1e-9


@dataclass(frozen=True)
class ValueFunction:
    """A real vector over the state representation of a space."""

    values: np.ndarray
    space: object

    @classmethod
    def zeros(cls, space) -> "ValueFunction":
        return cls(np.zeros(space.size), space)

    @classmethod
    def constant(cls, space, c: float) -> "ValueFunction":
        return cls(np.full(space.size, float(c)), space)

    def at(self, points) -> np.ndarray:
        """Evaluate at arbitrary points of the underlying space."""
        if isinstance(self.space, FiniteSpace):
            return self.values[np.asarray(points, dtype=np.int64)]
        if isinstance(self.space, GridSpace):
            idx, wgt = self.space.interp_plan(np.asarray(points, dtype=float))
            return (self.values[idx] * wgt).sum(axis=-1)
        if isinstance(self.space, PairGridSpace):
            pts = np.asarray(points, dtype=float)
            idx, wgt = self.space.interp_plan(pts[..., 0], pts[..., 1])
            return (self.values[idx] * wgt).sum(axis=-1)
        raise ParameterError(f"unsupported space {self.space!r}")

    def sup_dist(self, other: "ValueFunction") -> float:
        return float(np.abs(self.values - other.values).max())

    def __len__(self) -> int:
        return len(self.values)


def next_values(p: DecisionProcess, v: ValueFunction) -> np.ndarray:
    """(states x actions) array of v evaluated at every transition image."""
    if p.gather_wgt is None:
        return v.values[p.gather_idx[..., 0]]
    return (v.values[p.gather_idx] * p.gather_wgt).sum(axis=-1)


def _discounted_continuation(p: DecisionProcess, v: ValueFunction) -> np.ndarray:
    nv = next_values(p, v)
    if float(nv.min()) < 0.0:
        raise DomainError(
            "continuation value below 0; apply the shift policy before iterating "
            f"(min = {float(nv.min()):g})")
    return np.asarray(p.discount.eval(nv), dtype=float)


def bellman_apply(p: DecisionProcess, v: ValueFunction) -> ValueFunction:
    """B(v)(x) = max over feasible a of u'(x,a) + delta(v(f(x,a)))."""
    scores = p.masked_shifted_reward + _discounted_continuation(p, v)
    return ValueFunction(scores.max(axis=1), v.space)


def transfer_apply(p: DecisionProcess, v: ValueFunction) -> ValueFunction:
    """P(v)(x) = ln sum_a weights(x,a) exp(u'(x,a) + delta(v(f(x,a)))).

    Stabilized by max subtraction; entries off the feasible set carry
    -inf scores and zero weights, so they drop out of the sum.
    """
    scores = p.masked_shifted_reward + _discounted_continuation(p, v)
    top = scores.max(axis=1)
    zs = (p.weights * np.exp(scores - top[:, None])).sum(axis=1)
    return ValueFunction(top + np.log(zs), v.space)


def ruelle_apply(p: DecisionProcess, g: ValueFunction) -> ValueFunction:
    """L(g)(x) = sum_a weights(x,a) e^{u(x,a)} g(f(x,a)) with the raw reward."""
    return ValueFunction((_ruelle_kernel(p) * next_values(p, g)).sum(axis=1), g.space)


def _ruelle_kernel(p: DecisionProcess) -> np.ndarray:
    k = getattr(p, "_ruelle_kernel_cache", None)
    if k is None:
        k = np.where(p.feasible, p.weights * np.exp(p.reward), 0.0)
        p._ruelle_kernel_cache = k
    return k


@dataclass(frozen=True)
class FixedPointResult:
    """Converged solution with its diagnostics.

    ``certified_bound`` is the a-priori contraction certificate
    modulus^n(D0), D0 being the first update's sup-norm; ``trace`` rows are
    (iteration, sup-norm update, certificate).
    """

    solution: ValueFunction
    iterations: int
    final_residual: float
    certified_bound: float
    max_contraction_ratio: float
    trace: list = field(default_factory=list, repr=False)


def fixed_point(apply: Callable, p: DecisionProcess, v0: ValueFunction | None = None,
                tol: float = 1e-10, max_iter: int = 200_000,
                keep_trace: bool = True) -> FixedPointResult:
    """Iterate v <- apply(p, v) until the sup-norm update drops to tol.

    The empirical ratios ||D_{k+1}|| / modulus(||D_k||) are tracked; for a
    genuine generalized contraction they stay <= 1 (up to roundoff), and the
    maximum observed ratio is reported for auditing.  Exceeding ``max_iter``
    raises ConvergenceError carrying the residual trace.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    v = v0 if v0 is not None else ValueFunction.zeros(p.space)
    modulus = p.discount.modulus
    trace: list[tuple[int, float, float]] = []
    cert = np.inf
    prev_delta = None
    max_ratio = 0.0
    for k in range(1, max_iter + 1):
        nv = apply(p, v)
        delta = nv.sup_dist(v)
        v = nv
        if prev_delta is None:
            cert = delta
        else:
            cert = float(modulus(cert))
            mprev = float(modulus(prev_delta))
            if mprev > 1e-300:
                max_ratio = max(max_ratio, delta / mprev)
        if keep_trace:
            trace.append((k, delta, cert))
        prev_delta = delta
        if delta <= tol:
            return FixedPointResult(v, k, delta, cert, max_ratio, trace)
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (last update {prev_delta:.3g}, "
        f"tol {tol:g})", trace=trace)


@dataclass(frozen=True)
class Policy:
    """Per-state action choice; ties go to the lowest action index."""

    choice: np.ndarray
    action_labels: tuple

    def label(self, state: int):
        return self.action_labels[int(self.choice[int(state)])]


def extract_policy(p: DecisionProcess, vstar: ValueFunction) -> Policy:
    """Greedy argmax of the Bellman right-hand side at a solved vstar."""
    scores = p.masked_shifted_reward + _discounted_continuation(p, vstar)
    return Policy(np.argmax(scores, axis=1), p.action_labels)


# -- Koopman operator on sampled histories ----------------------------------

HistoryFunction = Mapping[tuple, float]


def _aggregate(p: DecisionProcess, h: FeasibleHistory, continuation: float) -> float:
    u = p.reward_at(h.states[0], h.actions[0], shifted=True)
    return u + float(p.discount(continuation))


def koopman_apply(p: DecisionProcess, U: HistoryFunction,
                  histories: Iterable[FeasibleHistory]) -> dict[tuple, float]:
    """One Koopman sweep: K(U)(h) = u'(x0, a0) + delta(U(shifted h)).

    U must be defined on the shifts of every given history.
    """
    out: dict[tuple, float] = {}
    for h in histories:
        if h.length < 1:
            raise ParameterError("Koopman operator needs histories of length >= 1")
        shifted = h.shifted()
        try:
            cont = U[shifted.key()]
        except KeyError:
            raise ParameterError(
                f"history function is missing the shifted history {shifted.key()!r}")
        out[h.key()] = _aggregate(p, h, cont)
    return out


def suffix_closure(histories: Iterable[FeasibleHistory]) -> list[FeasibleHistory]:
    """All iterated shifts of the given histories, deduplicated by key."""
    seen: dict[tuple, FeasibleHistory] = {}
    for h in histories:
        g = h
        while True:
            seen.setdefault(g.key(), g)
            if g.length == 0:
                break
            g = g.shifted()
    return list(seen.values())


def koopman_iterate(p: DecisionProcess, histories: list[FeasibleHistory],
                    n: int) -> dict[tuple, float]:
    """K^n(0) on the sampled histories, swept over their suffix closure.

    Every history must have length >= n, since K^n(0) at a history reads n
    steps of its prefix.
    """
    short = [h for h in histories if h.length < n]
    if short:
        raise ParameterError(
            f"K^{n}(0) needs histories of length >= {n}; got length {short[0].length}")
    closure = suffix_closure(histories)
    values: dict[tuple, float] = {h.key(): 0.0 for h in closure}
    sweep = [h for h in closure if h.length >= 1]
    for _ in range(n):
        updates = koopman_apply(p, values, sweep)
        values.update(updates)
    return {h.key(): values[h.key()] for h in histories}


def ruelle_power_iteration(p: DecisionProcess, tol: float = 1e-10,
                           max_iter: int = 100_000, counting: bool = False
                           ) -> tuple[float, ValueFunction, int]:
    """Principal eigenpair of the (linear) Ruelle operator by power iteration.

    With ``counting=True`` the reference weights are dropped and each branch
    counts with weight one.  Convergence is declared when the Collatz
    bracket [min ratio, max ratio] tightens to relative ``tol``; returns
    (eigenvalue, eigenfunction normalized to sup 1, iterations).
    """
    g = ValueFunction.constant(p.space, 1.0)
    scale = float(p.n_actions) if counting else 1.0
    lam = 1.0
    for k in range(1, max_iter + 1):
        lg = ruelle_apply(p, g)
        if counting:
            lg = ValueFunction(lg.values * scale, lg.space)
        ratios = lg.values / g.values
        hi, lo = float(ratios.max()), float(ratios.min())
        lam = hi
        g = ValueFunction(lg.values / float(lg.values.max()), g.space)
        if hi - lo <= tol * max(abs(hi), 1e-300):
            return lam, g, k
    raise ConvergenceError(
        f"power iteration bracket did not tighten to {tol:g} in {max_iter} iterations "
        f"(last bracket width {hi - lo:.3g})")
