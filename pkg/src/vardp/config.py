"""Translate JSON-able config documents into solver objects.

One canonical schema (documented in the README) covers discounts, discount
families, potentials and processes; both the CLI and the service endpoints
funnel through these builders, so validation messages name config keys.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import applications
from .discounts import (
    DiscountFamily,
    DiscountFunction,
    make_family,
    make_linear,
    make_log,
    make_piecewise_linear,
    make_sqrt_root,
)
from .errors import ConfigError, VardpError
from .process import DecisionProcess


def discount_from_spec(spec: dict) -> DiscountFunction:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("discount spec must be an object with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "linear":
            return make_linear(float(spec.get("beta", 0.5)))
        if kind == "log":
            return make_log()
        if kind == "sqrt":
            return make_sqrt_root(float(spec.get("p", 2.0)))
        if kind == "piecewise-linear":
            return make_piecewise_linear(float(spec.get("beta", 0.5)))
    except VardpError as exc:
        raise ConfigError(f"discount: {exc}") from exc
    raise ConfigError(
        f"unknown discount kind {kind!r}; expected linear, log, sqrt or piecewise-linear")


def family_from_spec(spec: dict) -> DiscountFamily:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("family spec must be an object with a 'kind' key")
    kind = spec["kind"]
    try:
        return make_family(kind, beta=float(spec.get("beta", 0.5)),
                           p=float(spec.get("p", 2.0)))
    except VardpError as exc:
        raise ConfigError(f"family: {exc}") from exc


def potential_from_spec(spec: dict) -> Callable:
    """Named or tabulated potential on [0, 1); tabulated values interpolate."""
    if not isinstance(spec, dict):
        raise ConfigError("potential spec must be an object")
    if "values" in spec:
        vals = np.asarray(spec["values"], dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ConfigError("tabulated potential needs a flat list of >= 2 values")
        nodes = vals.size

        def tabulated(x):
            pos = np.asarray(x, dtype=float) * nodes
            i0 = np.floor(pos).astype(np.int64) % nodes
            frac = pos - np.floor(pos)
            return (1 - frac) * vals[i0] + frac * vals[(i0 + 1) % nodes]

        return tabulated
    name = spec.get("name")
    if name == "constant":
        c = float(spec.get("c", 0.0))
        return lambda x: np.full_like(np.asarray(x, dtype=float), c)
    if name == "linear":
        return lambda x: np.asarray(x, dtype=float)
    if name == "cosine":
        freq = float(spec.get("frequency", 1.0))
        amp = float(spec.get("amplitude", 1.0))
        return lambda x: amp * np.cos(2.0 * np.pi * freq * np.asarray(x, dtype=float))
    raise ConfigError(
        f"unknown potential {name!r}; expected constant, linear, cosine or tabulated values")


def _prob_from_spec(spec: dict) -> Callable:
    """Place-dependent probability: constant, tabulated, or exp of a potential."""
    if "name" in spec and spec["name"] == "exp-potential":
        inner = potential_from_spec(spec.get("potential", {}))
        scale = spec.get("map", None)
        if scale is not None:
            amap = _affine_map(scale)
            return lambda x: np.exp(inner(amap(np.asarray(x, dtype=float))))
        return lambda x: np.exp(inner(np.asarray(x, dtype=float)))
    base = potential_from_spec(spec)
    return base


def _affine_map(spec: dict) -> Callable:
    try:
        scale = float(spec["scale"])
        offset = float(spec.get("offset", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"affine map spec needs numeric 'scale' (and 'offset'): {exc}")
    return lambda x: scale * np.asarray(x, dtype=float) + offset


def process_from_spec(spec: dict, discount: DiscountFunction) -> DecisionProcess:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("process spec must be an object with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "finite":
            return _finite_from_spec(spec, discount)
        if kind == "doubling":
            pot = potential_from_spec(spec.get("potential", {"name": "constant"}))
            return applications.build_doubling(int(spec.get("nodes", 128)), pot,
                                               discount=discount)
        if kind == "subshift":
            if "adjacency" not in spec:
                raise ConfigError("subshift process needs an 'adjacency' matrix")
            pot = spec.get("potential")
            if isinstance(pot, dict) and "table" in pot:
                pot_arg = np.asarray(pot["table"], dtype=float)
            elif isinstance(pot, dict) and pot.get("name") == "constant":
                m = len(spec["adjacency"])
                depth = int(spec.get("depth", 1))
                pot_arg = np.full((m,) * (depth + 1), float(pot.get("c", 0.0)))
            else:
                raise ConfigError("subshift potential must be a table or constant")
            return applications.build_subshift(
                np.asarray(spec["adjacency"]), pot_arg, discount=discount,
                depth=int(spec.get("depth", 1)), transpose=bool(spec.get("transpose", False)))
        if kind == "ifs":
            maps = [_affine_map(ms) for ms in spec.get("maps", [])]
            probs = [_prob_from_spec(ps) for ps in spec.get("probs", [])]
            return applications.build_ifspdp(
                maps, probs, int(spec.get("nodes", 128)), discount=discount,
                periodic=bool(spec.get("periodic", True)))
    except ConfigError:
        raise
    except VardpError as exc:
        raise ConfigError(f"process: {exc}") from exc
    raise ConfigError(
        f"unknown process kind {kind!r}; expected finite, doubling, subshift or ifs")


def _finite_from_spec(spec: dict, discount: DiscountFunction) -> DecisionProcess:
    for key in ("transitions", "rewards"):
        if key not in spec:
            raise ConfigError(f"finite process needs a '{key}' table")
    rewards = np.asarray(spec["rewards"], dtype=float)
    transitions = np.asarray(spec["transitions"], dtype=np.int64)
    feasible = spec.get("feasible", "all")
    if isinstance(feasible, str):
        if feasible != "all":
            raise ConfigError(f"feasible must be a 0/1 table or 'all', got {feasible!r}")
        feas = None
    else:
        feas = np.asarray(feasible, dtype=bool)
    weights = spec.get("weights", "uniform")
    if isinstance(weights, str):
        if weights != "uniform":
            raise ConfigError(f"weights must be a table or 'uniform', got {weights!r}")
        w = None
    else:
        w = np.asarray(weights, dtype=float)
    try:
        return DecisionProcess.finite(transitions, rewards, discount,
                                      feasible=feas, weights=w)
    except VardpError as exc:
        raise ConfigError(f"finite process: {exc}") from exc
