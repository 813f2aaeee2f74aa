"""Acceptance suite: one test per exit criterion, each printing a PASS/FAIL line.

Tolerances are pinned here and never loosened; every expected value comes
from an independent oracle (bisection, exhaustive enumeration, matrix power
iteration, telescoping identities) or a closed form.
"""

import math

import numpy as np
import pytest

from vardp import (
    ActionGraph,
    DecisionProcess,
    ValueFunction,
    bellman_apply,
    build_doubling,
    build_joint,
    check_domination_bound,
    cycle_calibrated_subaction,
    eigenpair_limit,
    extract_policy,
    fixed_point,
    history_from_actions,
    inductive_sum,
    koopman_iterate,
    lipschitz_certificate,
    make_family,
    make_linear,
    make_log,
    make_sqrt_root,
    max_mean_cycle,
    maximizing_orbit,
    ruelle_power_iteration,
    subaction_limit,
    transfer_apply,
    vhat_solve,
)
from vardp.limits import subaction_residual
from vardp.regularity import check_pseudometric, lipschitz_bound, transition_contraction

from util import (
    action_target_process,
    bisect,
    explicit_ruelle_matrix,
    matrix_power_iteration,
    random_discount,
    random_table_process,
)

LOG_FAMILY = make_family("convex-combination-log")
TAIL_SCHEDULE = (256, 512, 1024)
COS = lambda x: np.cos(2.0 * np.pi * np.asarray(x, dtype=float))


def criterion(number: int, failures: list, detail: str) -> None:
    status = "PASS" if not failures else "FAIL"
    print(f"[ACCEPTANCE] criterion {number}: {status} :: {detail}")
    assert not failures, f"criterion {number}: {failures}"


@pytest.fixture(scope="module")
def fifty_processes():
    rng = np.random.default_rng(12345)
    return [action_target_process(rng) for _ in range(50)]


@pytest.fixture(scope="module")
def fifty_subaction_runs(fifty_processes):
    return [subaction_limit(p, LOG_FAMILY, schedule=TAIL_SCHEDULE, tol=1e-3)
            for p in fifty_processes]


@pytest.fixture(scope="module")
def doubling256():
    return build_doubling(256, COS, discount=make_log())


@pytest.fixture(scope="module")
def doubling256_subaction(doubling256):
    return subaction_limit(doubling256, LOG_FAMILY,
                           schedule=(4, 16, 64, 256, 1024), tol=1e-2)


def test_criterion_1_closed_form_fixed_points():
    failures = []
    p = DecisionProcess.finite([[0, 1], [0, 1]], np.ones((2, 2)), make_linear(0.5))
    sol = fixed_point(bellman_apply, p, tol=1e-12).solution
    err_lin = float(np.abs(sol.values - 2.0).max())
    if err_lin > 1e-10:
        failures.append(f"linear(0.5) solution off by {err_lin:.3g}")

    root = bisect(lambda v: v - 1.0 - math.log1p(v), 0.0, 10.0)
    sol_log = fixed_point(bellman_apply, p.with_discount(make_log()),
                          tol=1e-12).solution
    err_log = float(np.abs(sol_log.values - root).max())
    if err_log > 1e-8:
        failures.append(f"log solution off the bisection root by {err_log:.3g}")
    criterion(1, failures,
              f"linear err {err_lin:.2e} (tol 1e-10), log err {err_log:.2e} (tol 1e-8)")


def test_criterion_2_contraction_certificate():
    failures = []
    rng = np.random.default_rng(777)
    worst = 0.0
    for d in (make_log(), make_sqrt_root(2.0)):
        p = build_doubling(64, COS, discount=d)
        for _ in range(100):
            v1 = ValueFunction(rng.uniform(0.0, 3.0, p.size), p.space)
            v2 = ValueFunction(rng.uniform(0.0, 3.0, p.size), p.space)
            bound = float(d.modulus(v1.sup_dist(v2)))
            for op in (bellman_apply, transfer_apply):
                gap = op(p, v1).sup_dist(op(p, v2)) - bound
                worst = max(worst, gap)
                if gap > 1e-12:
                    failures.append(f"{d.name}: sweep expanded by {gap:.3g}")
    criterion(2, failures, f"worst contraction slack {worst:.2e} (tol 1e-12)")


def test_criterion_3_ordering_suite():
    failures = []
    rng = np.random.default_rng(31415)
    tol = 1e-10
    for i in range(20):
        p = random_table_process(rng, discount=random_discount(rng),
                                 full_feasible=False)
        vstar = fixed_point(bellman_apply, p, tol=tol).solution
        wstar = fixed_point(transfer_apply, p, tol=tol).solution
        if not (wstar.values <= vstar.values + 2 * tol).all():
            failures.append(f"process {i}: transfer above max solution")

        pol = extract_policy(p, vstar)
        dirac = np.zeros((p.size, p.n_actions))
        dirac[np.arange(p.size), pol.choice] = 1.0
        wd = fixed_point(transfer_apply, p.with_weights(dirac), tol=tol).solution
        if wd.sup_dist(vstar) > 2 * tol:
            failures.append(f"process {i}: Dirac weights gap {wd.sup_dist(vstar):.3g}")

        lo = fixed_point(bellman_apply, p.with_discount(make_linear(0.4)), tol=tol).solution
        hi = fixed_point(bellman_apply, p.with_discount(make_linear(0.7)), tol=tol).solution
        if not (lo.values <= hi.values + 2 * tol).all():
            failures.append(f"process {i}: not monotone in the discount")

        v1 = ValueFunction(rng.uniform(0.0, 2.0, p.size), p.space)
        v2 = ValueFunction(v1.values + rng.uniform(0.0, 1.0, p.size), p.space)
        for op in (bellman_apply, transfer_apply):
            if not (op(p, v1).values <= op(p, v2).values + 1e-12).all():
                failures.append(f"process {i}: sweep not monotone in the argument")
    criterion(3, failures, "20 random finite processes, all four orderings (tol 1e-10)")


def test_criterion_4_sandwich_bounds(doubling256):
    failures = []
    slack = 1e-9
    rng = np.random.default_rng(2024)
    schedule = (4, 16, 64, 256, 1024)
    fam = LOG_FAMILY

    for i in range(3):
        p = action_target_process(rng)
        sup_shifted = float(p.shifted_reward.max())
        for runner in (subaction_limit, eigenpair_limit):
            res = runner(p, fam, schedule=schedule, tol=1e-2)
            for n, ub in zip(res.n_sequence, res.ubar_sequence):
                if not -slack <= ub <= sup_shifted + slack:
                    failures.append(f"finite {i} n={n}: value {ub:.3g} outside "
                                    f"[0, {sup_shifted:.3g}]")
        for n in schedule:
            member = fam.member(n)
            pn = p.with_discount(member)
            j = build_joint(pn)
            c_n = float(vhat_solve(j, tol=1e-10).values.max())
            for op in (bellman_apply, transfer_apply):
                v = fixed_point(op, pn, tol=1e-10, keep_trace=False).solution
                vbar = v.values - v.values.max()
                if vbar.min() < -2.0 * c_n - 1e-6 or vbar.max() > slack:
                    failures.append(
                        f"finite {i} n={n}: normalized range [{vbar.min():.3g}, "
                        f"{vbar.max():.3g}] outside [-2C, 0], C={c_n:.3g}")

    # grid side: analytic uniform bound C = Lip(u) * diam / (1 - lam)
    p = doubling256
    from vardp.regularity import reward_lipschitz
    lam = transition_contraction(p)
    c_uniform = reward_lipschitz(p) * 1.0 / (1.0 - lam)
    sup_shifted = float(p.shifted_reward.max())
    for runner in (subaction_limit, eigenpair_limit):
        res = runner(p, fam, schedule=schedule, tol=1e-2)
        for n, ub in zip(res.n_sequence, res.ubar_sequence):
            if not -slack <= ub <= sup_shifted + slack:
                failures.append(f"grid n={n}: value {ub:.3g} outside sandwich")
        member = fam.member(res.n_sequence[-1])
        pn = p.with_discount(member)
        v = fixed_point(bellman_apply if runner is subaction_limit else transfer_apply,
                        pn, tol=1e-8, keep_trace=False).solution
        vbar = v.values - v.values.max()
        if vbar.min() < -2.0 * c_uniform - 1e-6:
            failures.append(f"grid: normalized min {vbar.min():.3g} below -2C")
    criterion(4, failures,
              "0 <= M_n - delta_n(M_n) <= sup u' on every entry; "
              "normalized solutions within [-2C, 0]")


def test_criterion_5_ergodic_oracle_agreement(fifty_processes, fifty_subaction_runs):
    failures = []
    worst = 0.0
    for i, (p, res) in enumerate(zip(fifty_processes, fifty_subaction_runs)):
        oracle = max_mean_cycle(ActionGraph.from_process(p)).value
        err = abs(res.limit_value - oracle)
        worst = max(worst, err)
        if err > 1e-3:
            failures.append(f"process {i}: |ubar - cycle value| = {err:.3e}")
    criterion(5, failures,
              f"50 finite processes, worst |ubar - max mean cycle| = {worst:.2e} (tol 1e-3)")


def test_criterion_6_eigenpair_oracle_agreement(fifty_processes):
    failures = []
    worst_val, worst_fun = 0.0, 0.0
    for i, p in enumerate(fifty_processes):
        res = eigenpair_limit(p, LOG_FAMILY, schedule=TAIL_SCHEDULE, tol=1e-3)
        rho, gvec = matrix_power_iteration(explicit_ruelle_matrix(p))
        rel = abs(math.exp(res.limit_value) - rho) / rho
        worst_val = max(worst_val, rel)
        if rel > 1e-3:
            failures.append(f"process {i}: eigenvalue rel err {rel:.3e}")
        efun = np.exp(res.limit_function.values)
        efun /= efun.max()
        gvec = gvec / gvec.max()
        fun_err = float(np.abs(efun - gvec).max())
        worst_fun = max(worst_fun, fun_err)
        if fun_err > 1e-3:
            failures.append(f"process {i}: eigenfunction sup err {fun_err:.3e}")

    c = 0.3
    p = build_doubling(64, lambda x: np.full_like(np.asarray(x, float), c))
    res = eigenpair_limit(p, LOG_FAMILY, schedule=TAIL_SCHEDULE, tol=1e-3)
    k_err = abs(res.limit_value - c)
    if k_err > 1e-4:
        failures.append(f"doubling constant: k err {k_err:.3e}")
    lam_count, _, _ = ruelle_power_iteration(p, tol=1e-10, counting=True)
    count_rel = abs(lam_count - 2.0 * math.exp(c)) / (2.0 * math.exp(c))
    if count_rel > 1e-4:
        failures.append(f"counting eigenvalue rel err {count_rel:.3e}")
    criterion(6, failures,
              f"worst eigenvalue rel {worst_val:.2e}, eigenfunction sup {worst_fun:.2e} "
              f"(tol 1e-3); doubling k err {k_err:.2e}, counting rel {count_rel:.2e} (tol 1e-4)")


def test_criterion_7_regularity(doubling256):
    failures = []
    p = doubling256
    lam = transition_contraction(p)
    if abs(lam - 0.5) > 1e-12:
        failures.append(f"contraction factor {lam} != 1/2")
    bound = lipschitz_bound(p)  # C / (1 - lam) with C = 2 pi * lam
    grid_slack = 1e-6
    worst_cert = 0.0
    for n in (4, 16, 64, 256, 1024):
        pn = p.with_discount(LOG_FAMILY.member(n))
        v = fixed_point(bellman_apply, pn, tol=1e-8, keep_trace=False).solution
        cert = lipschitz_certificate(pn, v)
        worst_cert = max(worst_cert, cert)
        if cert > bound + grid_slack:
            failures.append(f"n={n}: certificate {cert:.4g} above bound {bound:.4g}")

    tol = 1e-8
    j = build_joint(p)
    vhat = vhat_solve(j, tol=tol)
    pseudo = check_pseudometric(j, vhat, tol=tol)
    if not pseudo.passed:
        failures.extend(c.detail for c in pseudo.failures())
    for op, name in ((bellman_apply, "max"), (transfer_apply, "log-average")):
        sol = fixed_point(op, p, tol=tol, keep_trace=False).solution
        rep = check_domination_bound(j, sol, vhat, tol=tol)
        if not rep.passed:
            failures.append(f"{name} solution not dominated: "
                            + rep["oscillation-dominated"].detail)
    criterion(7, failures,
              f"certificates <= {bound:.4g} (worst {worst_cert:.4g}); pair function "
              "nonnegative, symmetric, zero-diagonal, dominates both solutions")


def test_criterion_8_koopman_inductive_consistency():
    failures = []
    rng = np.random.default_rng(888)
    p = build_doubling(64, COS, discount=make_log())
    depth = 24
    histories = []
    for _ in range(20):
        origin = float(rng.uniform(0.0, 1.0))
        actions = [int(a) for a in rng.integers(0, 2, size=depth)]
        histories.append(history_from_actions(p, origin, actions))

    worst_eq, worst_gap = 0.0, 0.0
    k_bound = p.utility_bound()
    deep = koopman_iterate(p, histories, depth)
    for n in (1, 5, 12, 24):
        vals = koopman_iterate(p, histories, n)
        for h in histories:
            expect = inductive_sum(p, h.prefix(n)).value
            err = abs(vals[h.key()] - expect)
            worst_eq = max(worst_eq, err)
            if err > 1e-12:
                failures.append(f"K^{n}(0) != truncated sum (err {err:.2e})")
            allowed = (p.discount.iterate_modulus(k_bound, n)
                       + p.discount.iterate_modulus(k_bound, depth) + 1e-12)
            gap = abs(vals[h.key()] - deep[h.key()])
            worst_gap = max(worst_gap, gap - allowed)
            if gap > allowed:
                failures.append(f"K^{n}(0) gap {gap:.3g} above certificate {allowed:.3g}")
    criterion(8, failures,
              f"20 histories: iterates equal truncated sums to {worst_eq:.1e}; "
              "all tail gaps within the witness certificate")


def test_criterion_9_maximizing_orbit_bound():
    failures = []
    rng = np.random.default_rng(424242)
    length = 10_000
    worst = np.inf
    for i in range(20):
        p = action_target_process(rng)
        mmc = max_mean_cycle(ActionGraph.from_process(p))
        ubar, h = cycle_calibrated_subaction(p, mmc)
        _, meas = maximizing_orbit(p, h, ubar, start=int(rng.integers(p.size)),
                                   length=length, tol=1e-6)
        hmax = float(np.abs(h.values).max())
        margin = meas.mean_reward(p) - (ubar - 2.0 * hmax / length - 1e-6)
        worst = min(worst, margin)
        if margin < 0.0:
            failures.append(f"process {i}: mean below telescoping bound by {-margin:.3g}")
    criterion(9, failures,
              f"20 greedy orbits of length {length}; worst margin above bound {worst:.2e}")


def test_criterion_10_subaction_residuals(fifty_subaction_runs, doubling256_subaction):
    failures = []
    worst_finite = max(r.residual for r in fifty_subaction_runs)
    if worst_finite > 1e-3:
        failures.append(f"finite residual {worst_finite:.3e} above 1e-3")
    grid_res = doubling256_subaction.residual
    if grid_res > 1e-2:
        failures.append(f"grid residual {grid_res:.3e} above 1e-2")
    criterion(10, failures,
              f"finite worst residual {worst_finite:.2e} (tol 1e-3); "
              f"doubling-map residual {grid_res:.2e} (tol 1e-2)")
