"""Command handlers shared by the HTTP routes and the CLI.

Each handler turns a validated request into a Report.  Exit semantics the
CLI maps to process codes: status "ok" -> 0, "violation" -> 2; raised
errors -> 1.
"""

from __future__ import annotations

import datetime

import numpy as np

from .. import __version__
from ..config import discount_from_spec, family_from_spec, potential_from_spec, process_from_spec
from ..discounts import SampleSpec, check_assumption_limits, verify_discount, verify_family
from ..ergodic import ActionGraph, max_mean_cycle
from ..errors import ConfigError
from ..limits import DEFAULT_SCHEDULE, eigenpair_limit, subaction_limit
from ..operators import bellman_apply, fixed_point, koopman_iterate, transfer_apply
from ..process import FiniteSpace, GridSpace, history_from_actions, inductive_sum, validate
from ..regularity import regularity_report
from ..applications import check_translation
from .schemas import (
    CycleRequest,
    KoopmanRequest,
    LimitRequest,
    RegularityRequest,
    Report,
    SolveRequest,
    TranslationRequest,
    VerifyDiscountRequest,
)

DEFAULT_SOLVE_TOL = {"finite": 1e-10, "grid": 1e-8}
DEFAULT_LIMIT_TOL = 1e-4


def _meta() -> dict:
    return {
        "package": "vardp",
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _solve_tol(p, options) -> float:
    if options.tol is not None:
        return options.tol
    return DEFAULT_SOLVE_TOL["finite" if isinstance(p.space, FiniteSpace) else "grid"]


def _state_coordinates(p) -> list:
    if isinstance(p.space, GridSpace):
        return [float(x) for x in p.space.points()]
    return list(range(p.size))


def _report(command: str, req, *, status="ok", shift=0.0, outputs_shifted=False,
            results=None, diagnostics=None) -> Report:
    return Report(
        command=command,
        status=status,
        shift_constant=shift,
        outputs_shifted=outputs_shifted,
        results=results or {},
        diagnostics=diagnostics or {},
        inputs=req.model_dump(exclude_none=True),
        meta=None if req.options.no_meta else _meta(),
    )


def _solve(command: str, req: SolveRequest):
    operator = bellman_apply if command == "solve-bellman" else transfer_apply
    d = discount_from_spec(req.discount.model_dump(exclude_none=True))
    p = process_from_spec(req.process.model_dump(exclude_none=True), d)
    res = fixed_point(operator, p, tol=_solve_tol(p, req.options),
                      max_iter=req.options.max_iter)
    results = {
        "states": _state_coordinates(p),
        "values": [float(v) for v in res.solution.values],
        "sup_value": float(res.solution.values.max()),
        "iterations": res.iterations,
        "final_residual": res.final_residual,
        "certified_bound": res.certified_bound,
    }
    diagnostics = {
        "max_contraction_ratio": res.max_contraction_ratio,
        "trace": [[k, d_, c] for k, d_, c in res.trace],
        "validation": validate(p).as_dict(),
    }
    return _report(command, req, shift=p.shift, outputs_shifted=p.shift > 0,
                   results=results, diagnostics=diagnostics)


def handle_solve_bellman(req: SolveRequest) -> Report:
    return _solve("solve-bellman", req)


def handle_solve_transfer(req: SolveRequest) -> Report:
    return _solve("solve-transfer", req)


def handle_solve_koopman(req: KoopmanRequest) -> Report:
    d = discount_from_spec(req.discount.model_dump(exclude_none=True))
    p = process_from_spec(req.process.model_dump(exclude_none=True), d)
    histories = []
    for hs in req.histories:
        origin = int(hs.origin) if isinstance(p.space, FiniteSpace) else float(hs.origin)
        histories.append(history_from_actions(p, origin, hs.actions))
    if not histories:
        raise ConfigError("solve-koopman needs at least one history")
    depth = min(h.length for h in histories)
    values = koopman_iterate(p, histories, depth)
    rows = []
    for h in histories:
        s = inductive_sum(p, h.prefix(depth))
        rows.append({
            "origin": h.origin,
            "actions": list(h.actions),
            "value": values[h.key()],
            "tail_bound": s.tail_bound,
            "inductive_sum": s.value,
        })
    results = {"depth": depth, "histories": rows}
    return _report("solve-koopman", req, shift=p.shift, outputs_shifted=p.shift > 0,
                   results=results)


def _limit(command: str, req: LimitRequest):
    runner = subaction_limit if command == "limit-subaction" else eigenpair_limit
    fam = family_from_spec(req.family.model_dump(exclude_none=True))
    # the family supplies the per-index discount; the placeholder is replaced per entry
    d = fam.member(1)
    p = process_from_spec(req.process.model_dump(exclude_none=True), d)
    schedule = req.options.schedule or list(DEFAULT_SCHEDULE)
    tol = req.options.tol if req.options.tol is not None else DEFAULT_LIMIT_TOL
    res = runner(p, fam, schedule=schedule, tol=tol, max_iter=req.options.max_iter)
    results = {
        "states": _state_coordinates(p),
        "limit_value": res.limit_value,
        "limit_function": [float(v) for v in res.limit_function.values],
        "residual": res.residual,
        "cauchy_gap": res.cauchy_gap,
        "calibrated": res.calibrated,
        "assumption_deviation": res.assumption_deviation,
        "n_sequence": list(res.n_sequence),
        "ubar_sequence": [float(u) for u in res.ubar_sequence],
    }
    if command == "limit-eigenpair":
        results["eigenvalue"] = float(np.exp(res.limit_value))
    diagnostics = {
        "entries": [
            {"n": e.n, "sup_value": e.sup_value, "ubar": e.ubar,
             "iterations": e.iterations, "inner_residual": e.inner_residual}
            for e in res.entries
        ],
        "sup_estimate": "sup taken over represented states/nodes; "
                        "off-node values are interpolated",
    }
    return _report(command, req, shift=res.shift, outputs_shifted=False,
                   results=results, diagnostics=diagnostics)


def handle_limit_subaction(req: LimitRequest) -> Report:
    return _limit("limit-subaction", req)


def handle_limit_eigenpair(req: LimitRequest) -> Report:
    return _limit("limit-eigenpair", req)


def handle_verify_discount(req: VerifyDiscountRequest) -> Report:
    if (req.discount is None) == (req.family is None):
        raise ConfigError("verify-discount needs exactly one of 'discount' or 'family'")
    sp = SampleSpec(**req.samples.model_dump()) if req.samples else SampleSpec()
    results: dict = {}
    if req.discount is not None:
        d = discount_from_spec(req.discount.model_dump(exclude_none=True))
        rep = verify_discount(d, sp)
        results["discount"] = {"name": d.name, **rep.as_dict()}
        ok = rep.passed
    else:
        fam = family_from_spec(req.family.model_dump(exclude_none=True))
        rep = verify_family(fam, samples=sp)
        members = {f"member[{n}]": verify_discount(fam.member(n), sp).as_dict()
                   for n in (1, 2, 8)}
        assumption = check_assumption_limits(fam)
        results["family"] = {"kind": fam.kind, **rep.as_dict()}
        results["members"] = members
        results["assumption_limits"] = assumption.as_dict()
        ok = rep.passed and all(m["passed"] for m in members.values()) and assumption.passed
    return _report("verify-discount", req, status="ok" if ok else "violation",
                   results=results)


def handle_verify_regularity(req: RegularityRequest) -> Report:
    d = discount_from_spec(req.discount.model_dump(exclude_none=True))
    p = process_from_spec(req.process.model_dump(exclude_none=True), d)
    tol = _solve_tol(p, req.options)
    sols = {
        "bellman": fixed_point(bellman_apply, p, tol=tol,
                               max_iter=req.options.max_iter, keep_trace=False).solution,
        "transfer": fixed_point(transfer_apply, p, tol=tol,
                                max_iter=req.options.max_iter, keep_trace=False).solution,
    }
    rep = regularity_report(p, sols, tol=tol)
    gating = [rep["pseudometric"]["passed"]] + [d_["passed"] for d_ in rep["domination"].values()]
    status = "ok" if all(gating) else "violation"
    return _report("verify-regularity", req, status=status, shift=p.shift,
                   outputs_shifted=p.shift > 0, results=rep)


def handle_oracle_cycle(req: CycleRequest) -> Report:
    d = discount_from_spec({"kind": "log"})  # the graph ignores the discount
    p = process_from_spec(req.process.model_dump(exclude_none=True), d)
    graph = ActionGraph.from_process(p)
    mmc = max_mean_cycle(graph)
    results = {
        "value": mmc.value,
        "cycle_mean": mmc.cycle_mean,
        "cycle": [{"state": a.src, "action": a.action, "next": a.dst, "weight": a.weight}
                  for a in mmc.cycle],
    }
    return _report("oracle-cycle", req, results=results)


def handle_check_translation(req: TranslationRequest) -> Report:
    pot = potential_from_spec(req.potential)
    fam = family_from_spec(req.family.model_dump(exclude_none=True)) if req.family else None
    tol = req.options.tol if req.options.tol is not None else 1e-3
    schedule = req.options.schedule or DEFAULT_SCHEDULE
    rep = check_translation(req.nodes, pot, tol=tol, schedule=schedule, family=fam)
    return _report("check-translation", req,
                   status="ok" if rep.passed else "violation",
                   results=rep.as_dict())


COMMANDS = {
    "solve-bellman": (SolveRequest, handle_solve_bellman),
    "solve-transfer": (SolveRequest, handle_solve_transfer),
    "solve-koopman": (KoopmanRequest, handle_solve_koopman),
    "limit-subaction": (LimitRequest, handle_limit_subaction),
    "limit-eigenpair": (LimitRequest, handle_limit_eigenpair),
    "verify-discount": (VerifyDiscountRequest, handle_verify_discount),
    "verify-regularity": (RegularityRequest, handle_verify_regularity),
    "oracle-cycle": (CycleRequest, handle_oracle_cycle),
    "check-translation": (TranslationRequest, handle_check_translation),
}


def run_command(command: str, payload: dict) -> Report:
    """Validate a raw payload for ``command`` and run its handler."""
    if command not in COMMANDS:
        raise ConfigError(
            f"unknown command {command!r}; expected one of {sorted(COMMANDS)}")
    model, handler = COMMANDS[command]
    req = model.model_validate(payload)
    return handler(req)
