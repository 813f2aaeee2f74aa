"""Vanishing-discount limits: ergodic value with calibrated subaction, and the
principal eigenpair of the linear transfer operator.

For each n in an increasing schedule the process is re-solved under the
family member delta_n, the running value M_n - delta_n(M_n) is recorded, and
the normalized solution v_n - M_n is kept.  The scheme accepts the last
schedule entry once the value tail is Cauchy; the reported limit value is
un-shifted (the shift constant enters additively, the normalized function is
shift-invariant).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discounts import (
    DiscountFamily,
    check_assumption_limits,
    family_deviation_from_isometry,
)
from .errors import AssumptionError, LimitUnstableError, ParameterError
from .operators import (
    FixedPointResult,
    ValueFunction,
    bellman_apply,
    fixed_point,
    next_values,
    transfer_apply,
)
from .process import DecisionProcess, FiniteSpace

__all__ = [
    "DEFAULT_SCHEDULE",
    "DiscountLimitResult",
    "LimitEntry",
    "check_assumption_limits",
    "eigen_residual",
    "eigenpair_limit",
    "subaction_limit",
    "subaction_residual",
]

DEFAULT_SCHEDULE = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)
CAUCHY_FACTOR = 10.0
CALIBRATION_DEVIATION = 0.1


@dataclass(frozen=True)
class LimitEntry:
    """Per-schedule diagnostics: one inner fixed-point solve."""

    n: int
    sup_value: float
    ubar: float
    iterations: int
    inner_residual: float


@dataclass(frozen=True)
class DiscountLimitResult:
    """Outcome of a vanishing-discount run.

    ``ubar_sequence`` holds the shifted-regime values M_n - delta_n(M_n)
    (each in [0, sup shifted reward]); ``limit_value`` is un-shifted.  The
    limit function is normalized to max 0.  ``residual`` measures the final
    equation: calibrated subaction for the Bellman route, relative eigen
    equation for the transfer route.
    """

    n_sequence: tuple[int, ...]
    ubar_sequence: tuple[float, ...]
    limit_value: float
    limit_function: ValueFunction
    residual: float
    cauchy_gap: float
    shift: float
    calibrated: bool
    assumption_deviation: float
    entries: tuple[LimitEntry, ...] = field(repr=False, default=())
    extrapolated_value: float | None = None


def _default_inner_tol(p: DecisionProcess) -> float:
    return 1e-9 if isinstance(p.space, FiniteSpace) else 1e-8


def _family_guard(p: DecisionProcess, fam: DiscountFamily, schedule) -> None:
    if len(schedule) < 2:
        raise ParameterError("schedule needs at least two entries for a Cauchy check")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ParameterError(f"schedule must be strictly increasing, got {schedule}")
    ts = np.array([0.25, 1.0, 5.0, 25.0])
    for n in (schedule[0], schedule[-1]):
        ev = np.asarray(fam.member(n).eval(ts), dtype=float)
        if (ev > ts + 1e-12).any():
            raise AssumptionError(
                f"family member {n} exceeds the identity at t={float(ts[np.argmax(ev - ts)]):g}; "
                "members must satisfy delta_n(t) <= t")


def _run_schedule(p: DecisionProcess, fam: DiscountFamily, schedule, apply,
                  inner_tol: float, max_iter: int):
    entries = []
    solutions: list[ValueFunction] = []
    for n in schedule:
        member = fam.member(n)
        pn = p.with_discount(member)
        res: FixedPointResult = fixed_point(apply, pn, tol=inner_tol,
                                            max_iter=max_iter, keep_trace=False)
        m = float(res.solution.values.max())
        ubar = m - float(member.eval(m))
        entries.append(LimitEntry(n, m, ubar, res.iterations, res.final_residual))
        solutions.append(res.solution)
    return entries, solutions


def _assemble(p, fam, schedule, entries, solutions, tol, residual_fn, extrapolate):
    ubars = tuple(e.ubar for e in entries)
    gap = abs(ubars[-1] - ubars[-2])
    if gap > CAUCHY_FACTOR * tol:
        raise LimitUnstableError(
            f"value sequence gap {gap:.3g} between n={schedule[-2]} and n={schedule[-1]} "
            f"exceeds {CAUCHY_FACTOR:g} * tol = {CAUCHY_FACTOR * tol:.3g}",
            sequence=list(ubars))
    last = solutions[-1]
    m_last = float(last.values.max())
    h = ValueFunction(last.values - m_last, last.space)
    limit_value = ubars[-1] - p.shift
    residual = residual_fn(p, h, limit_value)
    deviation = family_deviation_from_isometry(
        fam, schedule[-1], 1.0, np.linspace(0.0, 10.0, 256))
    extr = None
    if extrapolate:
        n1, n2 = schedule[-2], schedule[-1]
        extr = (ubars[-1] * n2 - ubars[-2] * n1) / (n2 - n1) - p.shift
    return DiscountLimitResult(
        n_sequence=tuple(schedule),
        ubar_sequence=ubars,
        limit_value=limit_value,
        limit_function=h,
        residual=residual,
        cauchy_gap=gap,
        shift=p.shift,
        calibrated=deviation <= CALIBRATION_DEVIATION,
        assumption_deviation=deviation,
        entries=tuple(entries),
        extrapolated_value=extr,
    )


def subaction_residual(p: DecisionProcess, h: ValueFunction, ubar: float) -> float:
    """sup_x | max_a (u(x,a) - ubar + h(f(x,a))) - h(x) | with the raw reward."""
    rhs = (p.masked_reward - ubar + next_values(p, h)).max(axis=1)
    return float(np.abs(rhs - h.values).max())


def eigen_residual(p: DecisionProcess, h: ValueFunction, k: float) -> float:
    """Relative residual of e^k e^h = sum_a weights e^u e^{h o f} (raw reward)."""
    rhs = (np.where(p.feasible, p.weights * np.exp(p.reward), 0.0)
           * np.exp(next_values(p, h))).sum(axis=1)
    lhs = np.exp(k + h.values)
    return float(np.abs(lhs - rhs).max() / np.exp(k))


def subaction_limit(p: DecisionProcess, fam: DiscountFamily,
                    schedule=DEFAULT_SCHEDULE, tol: float = 1e-4,
                    inner_tol: float | None = None, max_iter: int = 400_000,
                    extrapolate: bool = False) -> DiscountLimitResult:
    """Ergodic value and calibrated subaction from Bellman solutions.

    Solves the Bellman fixed point per schedule entry, tracks
    M_n - delta_n(M_n), and returns the last normalized solution once the
    value tail is Cauchy (gap <= 10 * tol between the last two entries).
    The residual field reports sup_x |max_a(u - ubar + h o f) - h|.
    """
    schedule = tuple(int(n) for n in schedule)
    _family_guard(p, fam, schedule)
    it = inner_tol if inner_tol is not None else _default_inner_tol(p)
    entries, sols = _run_schedule(p, fam, schedule, bellman_apply, it, max_iter)
    return _assemble(p, fam, schedule, entries, sols, tol, subaction_residual, extrapolate)


def eigenpair_limit(p: DecisionProcess, fam: DiscountFamily,
                    schedule=DEFAULT_SCHEDULE, tol: float = 1e-4,
                    inner_tol: float | None = None, max_iter: int = 400_000,
                    extrapolate: bool = False) -> DiscountLimitResult:
    """Principal eigenpair (e^k, e^h) of the linear transfer operator.

    Same scheme on the log-average operator's fixed points; ``limit_value``
    is the un-shifted k, so e^{limit_value} is the eigenvalue for the raw
    reward, and the residual is relative to e^k.
    """
    schedule = tuple(int(n) for n in schedule)
    _family_guard(p, fam, schedule)
    it = inner_tol if inner_tol is not None else _default_inner_tol(p)
    entries, sols = _run_schedule(p, fam, schedule, transfer_apply, it, max_iter)
    return _assemble(p, fam, schedule, entries, sols, tol, eigen_residual, extrapolate)
