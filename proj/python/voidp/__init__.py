"""Value-of-information observation selection on discrete chain models.

Documents are plain dicts in the voidp JSON formats (voidp-model/1,
voidp-reward/1, voidp-costs/1, ...).
"""

import json

from . import _voidp
from ._voidp import Error, InfeasibleInput, IoError, SchemaError, ValidationError

__all__ = [
    "Error", "InfeasibleInput", "IoError", "SchemaError", "SessionError", "ValidationError",
    "Sessions", "build_plan", "experiment", "load", "posterior", "realized_reward",
    "schedule", "select_subset", "total_objective", "validate",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def load(path):
    with open(path) as f:
        return json.load(f)


def validate(model):
    return _voidp.validate(_text(model))


def select_subset(model, rewards, costs, mode="smoothing"):
    return json.loads(_voidp.select_subset(_text(model), _text(rewards), _text(costs), mode))


def build_plan(model, rewards, costs, mode="smoothing"):
    return json.loads(_voidp.build_plan(_text(model), _text(rewards), _text(costs), mode))


def total_objective(model, rewards, costs, selected, mode="smoothing"):
    return _voidp.total_objective(_text(model), _text(rewards), _text(costs), list(selected), mode)


def posterior(model, evidence, index, mode="smoothing"):
    """evidence: iterable of (index, state) pairs."""
    return _voidp.posterior(_text(model), [tuple(e) for e in evidence], index, mode)


def realized_reward(plan, queried):
    return _voidp.realized_reward(_text(plan), [tuple(q) for q in queried])


def schedule(multi, costs, samples=0, seed=None):
    return json.loads(_voidp.schedule(_text(multi), [_text(c) for c in costs], samples, seed))


def experiment(model, rewards, costs, mode="filtering",
               methods=("uniform", "greedy", "optimal_subset", "optimal_plan"), k_min=0, k_max=None):
    if k_max is None:
        k_max = len(model["transitions"]) + 1 if isinstance(model, dict) else k_min
    return _voidp.experiment(_text(model), _text(rewards), _text(costs), mode, list(methods), k_min, k_max)


class SessionError(_voidp.SessionError):
    def __init__(self, message, code, field=None):
        super().__init__(message)
        self.code = code
        self.field = field


def _session_call(f, *args):
    try:
        return json.loads(f(*args))
    except _voidp.SessionError as e:
        err = json.loads(str(e))["error"]
        raise SessionError(err["message"], err["code"], err.get("field")) from None


class Sessions:
    """In-process version of the HTTP session protocol."""

    def __init__(self, seed=None):
        self._service = _voidp.SessionService(seed)

    def create(self, plan):
        return _session_call(self._service.create, json.dumps({"plan": plan}))

    def get(self, session_id):
        return _session_call(self._service.get, session_id)

    def answer(self, session_id, index, state):
        return _session_call(self._service.answer, session_id, json.dumps({"index": index, "state": state}))

    def remove(self, session_id):
        try:
            self._service.remove(session_id)
        except _voidp.SessionError as e:
            err = json.loads(str(e))["error"]
            raise SessionError(err["message"], err["code"], err.get("field")) from None

    def __len__(self):
        return len(self._service)
