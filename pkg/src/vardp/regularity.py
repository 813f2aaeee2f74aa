"""Joint (paired-state) processes and the oscillation bounds they certify.

The joint process runs on X x X with reward |u(x,a) - u(y,a)| and the
*witness* of the base discount as its own discount.  Its Bellman fixed
point dominates the oscillations |v*(x) - v*(y)| of every fixed point of
the base process, giving computable Lipschitz certificates and a
separation test for degenerate rewards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discounts import DiscountFunction
from .errors import AssumptionError, NotContractiveError, ParameterError
from .operators import ValueFunction, bellman_apply, fixed_point
from .process import DecisionProcess, FiniteSpace, GridSpace, PairGridSpace
from .reports import PropertyReport

DEFAULT_PAIR_BUDGET = 66_000  # pair states; 256 x 256 fits


@dataclass(frozen=True)
class JointProcess:
    """A decision process over state pairs, plus bookkeeping for lookups."""

    process: DecisionProcess
    base: DecisionProcess

    @property
    def pair_count(self) -> int:
        return self.process.size

    def pair_index(self, i: int, j: int) -> int:
        if isinstance(self.process.space, FiniteSpace):
            n = self.base.size
        else:
            n = self.process.space.nodes
        return int(i) * n + int(j)


def _modulus_as_discount(d: DiscountFunction) -> DiscountFunction:
    """Promote the witness of d to a discount in its own right.

    Built-in witnesses are increasing, vanish at 0 and are their own
    witnesses; sampled sanity checks below guard custom constructions.
    """
    ts = np.array([0.1, 0.5, 1.0, 5.0, 20.0])
    vals = np.asarray(d.modulus(ts), dtype=float)
    if abs(float(d.modulus(0.0))) > 1e-12 or (np.diff(vals) < -1e-12).any() \
            or (vals >= ts).any():
        raise AssumptionError(
            f"modulus of {d.name!r} is not itself a variable discount "
            "(must vanish at 0, increase, and sit below the identity)")
    return DiscountFunction(name=f"modulus[{d.name}]", eval=d.modulus,
                            modulus=d.modulus, idempotent=True, subadditive=True)


def build_joint(p: DecisionProcess, pair_budget: int = DEFAULT_PAIR_BUDGET) -> JointProcess:
    """Pair the process with itself: reward |u(x,a) - u(y,a)|, discount = witness.

    Requires uniform feasibility (the pair follows the first coordinate's
    action set, which must match the second's).  On the grid backend the
    pair grid is coarsened to stay within ``pair_budget`` states.
    """
    gamma = _modulus_as_discount(p.discount)
    if isinstance(p.space, FiniteSpace):
        if not (p.feasible == p.feasible[0]).all():
            raise AssumptionError(
                "joint construction requires uniform feasibility across states")
        n, m = p.size, p.n_actions
        i = np.repeat(np.arange(n), n)
        j = np.tile(np.arange(n), n)
        u_hat = np.abs(p.reward[i] - p.reward[j])
        feas = p.feasible[i]
        trans = p.transition_table[i] * n + p.transition_table[j]
        joint = DecisionProcess(FiniteSpace(n * n), m, feas, u_hat, None, gamma,
                                transition_table=trans, action_labels=p.action_labels)
        return JointProcess(joint, p)

    if isinstance(p.space, GridSpace):
        nodes = p.space.nodes
        nc = nodes
        while nc * nc > pair_budget:
            nc //= 2
        if nc < 2:
            raise ParameterError(f"pair budget {pair_budget} leaves fewer than 2 nodes per axis")
        space = PairGridSpace(nc, p.space.periodic)
        xs = np.arange(nc) / nc
        i = np.repeat(np.arange(nc), nc)
        j = np.tile(np.arange(nc), nc)
        px, py = xs[i], xs[j]
        m = p.n_actions
        nxt = np.empty((nc * nc, m, 2))
        u_hat = np.empty((nc * nc, m))
        for a in range(m):
            fx = np.asarray(p.transition_map(px, a), dtype=float)
            fy = np.asarray(p.transition_map(py, a), dtype=float)
            nxt[:, a, 0], nxt[:, a, 1] = fx, fy
            ux = np.asarray(p.reward_map(px, a), dtype=float)
            uy = np.asarray(p.reward_map(py, a), dtype=float)
            u_hat[:, a] = np.abs(ux - uy)
        feas = np.ones((nc * nc, m), dtype=bool)
        joint = DecisionProcess(space, m, feas, u_hat, None, gamma,
                                next_points=nxt, action_labels=p.action_labels)
        return JointProcess(joint, p)

    raise ParameterError("joint construction supports finite and grid backends")


def vhat_solve(j: JointProcess, tol: float = 1e-10, max_iter: int = 400_000) -> ValueFunction:
    """Bellman fixed point of the joint process (the oscillation dominator)."""
    return fixed_point(bellman_apply, j.process, tol=tol, max_iter=max_iter,
                       keep_trace=False).solution


def _pair_values(j: JointProcess, vhat: ValueFunction) -> np.ndarray:
    n = int(round(np.sqrt(j.pair_count)))
    return vhat.values.reshape(n, n)


def _solution_at_pair_nodes(j: JointProcess, solution: ValueFunction) -> np.ndarray:
    """Base solution sampled at the (possibly coarsened) pair-grid axis."""
    if isinstance(j.process.space, FiniteSpace):
        return solution.values
    nc = j.process.space.nodes
    return solution.at(np.arange(nc) / nc)


def check_domination_bound(j: JointProcess, solution: ValueFunction,
                           vhat: ValueFunction, tol: float = 1e-10) -> PropertyReport:
    """Verify |sol(x) - sol(y)| <= vhat(x, y) + 2 tol over all represented pairs."""
    rep = PropertyReport()
    vals = _solution_at_pair_nodes(j, solution)
    osc = np.abs(vals[:, None] - vals[None, :])
    vh = _pair_values(j, vhat)
    margin = osc - vh
    worst = float(margin.max())
    i, k = np.unravel_index(int(np.argmax(margin)), margin.shape)
    rep.add("oscillation-dominated", worst <= 2 * tol,
            f"max |sol(x)-sol(y)| - vhat(x,y) = {worst:.3g} at pair ({i}, {k})", worst)
    return rep


def check_pseudometric(j: JointProcess, vhat: ValueFunction,
                       tol: float = 1e-10) -> PropertyReport:
    """Nonnegativity, zero diagonal and symmetry of the pair value."""
    rep = PropertyReport()
    vh = _pair_values(j, vhat)
    mn = float(vh.min())
    rep.add("nonnegative", mn >= -2 * tol, f"min vhat = {mn:.3g}", mn)
    dg = float(np.abs(np.diag(vh)).max())
    rep.add("zero-diagonal", dg <= 2 * tol, f"max |vhat(x,x)| = {dg:.3g}", dg)
    asym = float(np.abs(vh - vh.T).max())
    rep.add("symmetric", asym <= 2 * tol, f"max |vhat(x,y) - vhat(y,x)| = {asym:.3g}", asym)
    return rep


def transition_contraction(p: DecisionProcess) -> float:
    """sup_a Lip(f(., a)) estimated over consecutive grid nodes.

    Adjacency here means interior pairs (x_i, x_{i+1}) in the interval
    structure of [0, 1): with fixed branch labels the contraction holds for
    the interval distance, not across the periodic wrap.
    """
    if not isinstance(p.space, GridSpace):
        raise ParameterError("contraction estimate requires the grid backend")
    step = p.space.step
    lam = 0.0
    for a in range(p.n_actions):
        img = p.next_points[:, a]
        d = np.abs(np.diff(img))
        lam = max(lam, float(d.max()) / step)
    return lam


def reward_lipschitz(p: DecisionProcess) -> float:
    """max_a Lip(u(., a)) estimated over consecutive grid nodes."""
    if not isinstance(p.space, GridSpace):
        raise ParameterError("reward Lipschitz estimate requires the grid backend")
    step = p.space.step
    c = 0.0
    for a in range(p.n_actions):
        d = np.abs(np.diff(p.reward[:, a]))
        c = max(c, float(d.max()) / step)
    return c


def lipschitz_certificate(p: DecisionProcess, solution: ValueFunction) -> float:
    """Empirical Lipschitz constant of a solution over adjacent grid nodes.

    For a contractive transition (factor lam < 1) and C-Lipschitz reward the
    theory caps this at C / (1 - lam); callers compare against that bound
    plus interpolation slack.  Raises when the estimated lam is >= 1.
    """
    lam = transition_contraction(p)
    if lam >= 1.0:
        raise NotContractiveError(
            f"estimated transition contraction factor {lam:.6g} >= 1")
    if not isinstance(solution.space, GridSpace):
        raise ParameterError("certificate requires a grid value function")
    step = solution.space.step
    d = np.abs(np.diff(solution.values))
    return float(d.max()) / step


def lipschitz_bound(p: DecisionProcess, holder_alpha: float = 1.0) -> float:
    """Theoretical solution regularity bound Hol_a(u) / (1 - lam^a)."""
    lam = transition_contraction(p)
    if lam >= 1.0:
        raise NotContractiveError(
            f"estimated transition contraction factor {lam:.6g} >= 1")
    if not 0.0 < holder_alpha <= 1.0:
        raise ParameterError("Holder exponent must lie in (0, 1]")
    if holder_alpha == 1.0:
        c = reward_lipschitz(p)
        return c / (1.0 - lam)
    c = holder_constant(p, holder_alpha)
    return c / (1.0 - lam ** holder_alpha)


def holder_constant(p: DecisionProcess, alpha: float) -> float:
    """max_a Hol_alpha(u(., a)) estimated over adjacent grid nodes."""
    if not isinstance(p.space, GridSpace):
        raise ParameterError("Holder estimate requires the grid backend")
    step = p.space.step
    c = 0.0
    for a in range(p.n_actions):
        d = np.abs(np.diff(p.reward[:, a]))
        c = max(c, float(d.max()) / step ** alpha)
    return c


def uniform_bound_constant(j: JointProcess, vhat: ValueFunction) -> float:
    """C = max over pairs of vhat; the normalized solutions live in [-2C, 0]."""
    return float(vhat.values.max())


def check_separating(j: JointProcess, vhat: ValueFunction, pairs_sample: int = 2000,
                     tol: float = 1e-10, seed: int = 0) -> PropertyReport:
    """Scan off-diagonal pairs for vhat(x,y) = 0: witnesses of degenerate reward."""
    rep = PropertyReport()
    vh = _pair_values(j, vhat)
    n = vh.shape[0]
    iu = np.triu_indices(n, k=1)
    xs, ys = iu
    if xs.size > pairs_sample:
        rng = np.random.default_rng(seed)
        pick = rng.choice(xs.size, size=pairs_sample, replace=False)
        xs, ys = xs[pick], ys[pick]
    vals = vh[xs, ys]
    zeros = int((vals <= 2 * tol).sum())
    mn = float(vals.min()) if vals.size else 0.0
    rep.add("separating", zeros == 0,
            f"{zeros} of {vals.size} sampled off-diagonal pairs have vhat ~ 0 "
            f"(min = {mn:.3g})", mn)
    dg = float(np.abs(np.diag(vh)).max())
    rep.add("diagonal-zero", dg <= 2 * tol, f"max |vhat(x,x)| = {dg:.3g}", dg)
    return rep


def regularity_report(p: DecisionProcess, solutions: dict[str, ValueFunction],
                      tol: float = 1e-10, pair_budget: int = DEFAULT_PAIR_BUDGET,
                      lam: float | None = None,
                      reward_lip: float | None = None) -> dict:
    """JSON-able report: constants, certificates, pseudometric and domination checks.

    ``lam`` and ``reward_lip`` may be supplied analytically; otherwise they
    are estimated from node differences, and the report says which happened.
    """
    j = build_joint(p, pair_budget=pair_budget)
    vhat = vhat_solve(j, tol=tol)
    out: dict = {
        "pair_states": j.pair_count,
        "uniform_bound_constant": uniform_bound_constant(j, vhat),
        "pseudometric": check_pseudometric(j, vhat, tol=tol).as_dict(),
        "separating": check_separating(j, vhat, tol=tol).as_dict(),
        "domination": {},
    }
    for name, sol in solutions.items():
        out["domination"][name] = check_domination_bound(j, sol, vhat, tol=tol).as_dict()
    if isinstance(p.space, GridSpace):
        estimated = lam is None or reward_lip is None
        lam_val = lam if lam is not None else transition_contraction(p)
        lip_val = reward_lip if reward_lip is not None else reward_lipschitz(p)
        out["constants"] = {
            "transition_contraction": lam_val,
            "reward_lipschitz": lip_val,
            "constants_estimated": estimated,
        }
        if lam_val < 1.0:
            out["constants"]["solution_lipschitz_bound"] = lip_val / (1.0 - lam_val)
            out["certificates"] = {
                name: lipschitz_certificate(p, sol) for name, sol in solutions.items()
            }
    return out
