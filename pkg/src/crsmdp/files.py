"""JSON model and policy files."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import (
    ConstraintKind,
    ConstraintSpec,
    MarkovPolicy,
    MdpModel,
    renormalize_transitions,
    validate_model,
)


class ModelFileError(ValueError):
    pass


def model_from_dict(doc: dict, renormalize: bool = True) -> MdpModel:
    try:
        states = list(doc["states"])
        actions = list(doc["actions"])
        P = np.array(doc["transitions"], dtype=float)
        if renormalize:
            P = renormalize_transitions(P)
        init = doc.get("initial_state", 0)
        if isinstance(init, str):
            if init not in states:
                raise ModelFileError(f"initial_state {init!r} is not a known state name")
            init = states.index(init)
        cons = []
        for i, c in enumerate(doc.get("constraints", [])):
            kind = ConstraintKind(c["kind"])
            cons.append(ConstraintSpec(kind, np.array(c["cost"], dtype=float), float(c["bound"]),
                                       c.get("horizon"), c.get("name", f"c{i}")))
        model = MdpModel(
            transitions=P,
            objective_cost=np.array(doc["objective_cost"], dtype=float),
            beta=float(doc["beta"]),
            gamma=float(doc["gamma"]),
            initial_state=int(init),
            constraints=tuple(cons),
            state_names=tuple(str(s) for s in states),
            action_names=tuple(str(a) for a in actions),
            cost_bound_override=doc.get("cost_bound"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFileError):
            raise
        raise ModelFileError(f"malformed model document: {exc}") from exc
    if model.transitions.shape[:2] != (len(states), len(actions)):
        raise ModelFileError("transitions do not match the declared states/actions")
    report = validate_model(model)
    if not report.ok:
        raise ModelFileError("invalid model: " + "; ".join(report.violations))
    return model


def model_to_dict(model: MdpModel) -> dict:
    m, n = model.num_states, model.num_actions
    doc = {
        "states": list(model.state_names or [f"s{i}" for i in range(m)]),
        "actions": list(model.action_names or [f"a{j}" for j in range(n)]),
        "transitions": model.transitions.tolist(),
        "beta": model.beta,
        "gamma": model.gamma,
        "initial_state": model.initial_state,
        "objective_cost": model.objective_cost.tolist(),
        "constraints": [],
    }
    for c in model.constraints:
        item = {"kind": c.kind.value, "cost": c.cost.tolist(), "bound": c.bound}
        if c.horizon is not None:
            item["horizon"] = c.horizon
        if c.name:
            item["name"] = c.name
        doc["constraints"].append(item)
    if model.cost_bound_override is not None:
        doc["cost_bound"] = model.cost_bound_override
    return doc


def load_model(path, renormalize: bool = True) -> MdpModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh), renormalize=renormalize)


def save_model(model: MdpModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def policy_from_dict(doc: dict) -> MarkovPolicy:
    """Accepts a policy object or a whole solve report carrying one."""
    if "policy" in doc and isinstance(doc["policy"], dict):
        doc = doc["policy"]
    try:
        return MarkovPolicy(tuple(np.array(r, dtype=float) for r in doc.get("rules", [])),
                            np.array(doc["tail"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise ModelFileError(f"malformed policy document: {exc}") from exc


def load_policy(path) -> MarkovPolicy:
    with open(path) as fh:
        return policy_from_dict(json.load(fh))
