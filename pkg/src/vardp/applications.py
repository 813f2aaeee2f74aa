"""Builders for the three concrete settings: subshifts of finite type,
inverse branches of an expanding circle endomorphism, and iterated function
systems with place-dependent probabilities, plus the translation identity
tying the last two together.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Sequence

import numpy as np

from .discounts import DiscountFunction, make_family, make_log
from .errors import DomainError, FeasibilityError, ParameterError
from .limits import DEFAULT_SCHEDULE, eigenpair_limit
from .operators import ruelle_power_iteration
from .process import DecisionProcess
from .reports import PropertyReport


def build_subshift(adjacency, potential, discount: DiscountFunction | None = None,
                   depth: int = 1, transpose: bool = False,
                   weights=None) -> DecisionProcess:
    """Finite process for a subshift of finite type, truncated to cylinders.

    States are admissible words of length ``depth``; prepending a feasible
    symbol is the transition.  Symbol ``a`` is feasible at a word starting
    with x0 when adjacency[a, x0] == 1 (set ``transpose`` for the other
    orientation).  The potential sees the ``depth + 1`` known symbols of the
    new point: either a callable potential(word_tuple) or an array of shape
    (m,) * (depth + 1); higher-arity tables are rejected, not truncated.
    """
    c = np.asarray(adjacency)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ParameterError(f"adjacency must be square, got shape {c.shape}")
    m = c.shape[0]
    if transpose:
        c = c.T
    dead = np.flatnonzero(~(c != 0).any(axis=0))
    if dead.size:
        raise FeasibilityError(
            f"symbol {int(dead[0])} admits no predecessor (dead adjacency column)")
    if depth < 1:
        raise ParameterError("cylinder depth must be >= 1")

    if isinstance(potential, np.ndarray) or isinstance(potential, (list, tuple)):
        table = np.asarray(potential, dtype=float)
        if table.shape != (m,) * (depth + 1):
            raise ParameterError(
                f"potential table shape {table.shape} incompatible with depth {depth}; "
                f"expected {(m,) * (depth + 1)}; deeper potentials need a deeper cylinder")
        pot = lambda word: float(table[word])
    else:
        pot = lambda word: float(potential(word))

    def admissible(word: tuple[int, ...]) -> bool:
        return all(c[word[i], word[i + 1]] for i in range(len(word) - 1))

    words = [w for w in product(range(m), repeat=depth) if admissible(w)]
    if not words:
        raise FeasibilityError("no admissible cylinder of the requested depth")
    index = {w: i for i, w in enumerate(words)}

    n = len(words)
    feasible = np.zeros((n, m), dtype=bool)
    transitions = np.zeros((n, m), dtype=np.int64)
    rewards = np.zeros((n, m))
    for i, w in enumerate(words):
        for a in range(m):
            if not c[a, w[0]]:
                continue
            new_word = (a,) + w[:-1]
            if new_word not in index:
                continue
            feasible[i, a] = True
            transitions[i, a] = index[new_word]
            rewards[i, a] = pot((a,) + w)
    if not feasible.any(axis=1).all():
        bad = int(np.flatnonzero(~feasible.any(axis=1))[0])
        raise FeasibilityError(f"cylinder {words[bad]} admits no feasible symbol")

    d = discount if discount is not None else make_log()
    return DecisionProcess.finite(transitions, rewards, d,
                                  feasible=feasible, weights=weights,
                                  action_labels=tuple(range(m)))


def doubling_branches(x, a):
    """Inverse branches of the angle-doubling circle map."""
    x = np.asarray(x, dtype=float)
    return x / 2.0 + (0.5 if a else 0.0)


def build_doubling(nodes: int, potential: Callable,
                   discount: DiscountFunction | None = None,
                   periodic: bool = True) -> DecisionProcess:
    """Grid process for the doubling map: two inverse branches, uniform weights.

    The reward pulls the potential back through the chosen branch:
    u(x, a) = potential(f(x, a)); ``potential`` must be vectorized.  The
    default periodic grid models the circle, which is right for
    circle-continuous potentials; a potential with a wrap discontinuity
    (e.g. x itself) is only Lipschitz in the interval structure, so pass
    periodic=False to get interval interpolation and the matching
    regularity certificates.
    """
    if nodes < 8:
        raise ParameterError(f"need at least 8 grid nodes, got {nodes}")
    d = discount if discount is not None else make_log()
    reward = lambda x, a: potential(doubling_branches(x, a))
    return DecisionProcess.grid(nodes, 2, doubling_branches, reward, d,
                                periodic=periodic, action_labels=(0, 1))


def build_ifspdp(maps: Sequence[Callable], probs: Sequence[Callable], nodes: int,
                 discount: DiscountFunction | None = None,
                 periodic: bool = True) -> DecisionProcess:
    """Grid process for an IFS with place-dependent probabilities.

    Transitions are the maps, the reward is ln p_a(x); probabilities need
    not sum to one but must stay strictly positive on the grid.
    """
    if len(maps) != len(probs):
        raise ParameterError(f"{len(maps)} maps but {len(probs)} probability functions")
    if not maps:
        raise ParameterError("need at least one map")
    xs = np.arange(nodes) / nodes
    for a, pa in enumerate(probs):
        vals = np.asarray(pa(xs), dtype=float)
        if (vals <= 0.0).any():
            x_bad = float(xs[int(np.argmin(vals))])
            raise DomainError(
                f"probability function {a} is <= 0 at x={x_bad:g}; ln p is undefined")

    def transition(x, a):
        return maps[a](np.asarray(x, dtype=float))

    def reward(x, a):
        return np.log(np.asarray(probs[a](np.asarray(x, dtype=float)), dtype=float))

    d = discount if discount is not None else make_log()
    return DecisionProcess.grid(nodes, len(maps), transition, reward, d,
                                periodic=periodic)


def ifspdp_from_potential(nodes: int, potential: Callable,
                          discount: DiscountFunction | None = None) -> DecisionProcess:
    """The IFS equivalent of :func:`build_doubling`: p_a(x) = exp(potential(f(x,a)))."""
    maps = [lambda x: doubling_branches(x, 0), lambda x: doubling_branches(x, 1)]
    probs = [lambda x: np.exp(potential(doubling_branches(x, 0))),
             lambda x: np.exp(potential(doubling_branches(x, 1)))]
    return build_ifspdp(maps, probs, nodes, discount=discount, periodic=True)


def check_translation(nodes: int, potential: Callable, tol: float = 1e-3,
                      schedule=DEFAULT_SCHEDULE, family=None) -> PropertyReport:
    """Cross-check the endomorphism and IFS constructions of the same system.

    Runs the eigenpair limit through both builders (they must agree on the
    eigenvalue exponent and, up to normalization, on the eigenfunction), and
    checks the counting-measure identity: dropping the uniform reference
    weights multiplies the eigenvalue by the branch count, verified against
    an independent power iteration of the unweighted operator.
    """
    fam = family if family is not None else make_family("convex-combination-log")
    p_endo = build_doubling(nodes, potential)
    p_ifs = ifspdp_from_potential(nodes, potential)

    rep = PropertyReport()
    same_tables = (np.allclose(p_endo.reward, p_ifs.reward, atol=1e-12)
                   and np.allclose(p_endo.next_points, p_ifs.next_points, atol=1e-15))
    rep.add("same-process-tables", same_tables,
            "the two builders produce identical transition and reward tables")

    r_endo = eigenpair_limit(p_endo, fam, schedule=schedule, tol=tol)
    r_ifs = eigenpair_limit(p_ifs, fam, schedule=schedule, tol=tol)
    dk = abs(r_endo.limit_value - r_ifs.limit_value)
    rep.add("eigenvalue-exponent-match", dk <= tol,
            f"|k_endo - k_ifs| = {dk:.3g} (k = {r_endo.limit_value:.6g})", dk)
    dh = float(np.abs(r_endo.limit_function.values - r_ifs.limit_function.values).max())
    rep.add("eigenfunction-match", dh <= tol,
            f"sup |h_endo - h_ifs| after max-normalization = {dh:.3g}", dh)

    lam_count, _, iters = ruelle_power_iteration(p_endo, tol=min(tol, 1e-8) / 10,
                                                 counting=True)
    expected = p_endo.n_actions * float(np.exp(r_endo.limit_value))
    rel = abs(lam_count - expected) / expected
    rep.add("counting-measure-eigenvalue", rel <= tol,
            f"power iteration gives {lam_count:.8g} vs n * e^k = {expected:.8g} "
            f"(rel {rel:.3g}, {iters} iterations)", rel)
    return rep
