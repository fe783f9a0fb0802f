"""Bundled demo problems, each paired with the result guaranteeing existence
on its horizon (``None`` when no guarantee applies)."""
import json
from importlib import resources

from ..expr import ProblemSpec, problem_from_dict

# name -> (guarantee kind, parameters)
GUARANTEES = {
    "logistic": ("logistic", {"alpha": 2.0}),
    "logistic_decreasing": ("logistic-opt", {}),
    "coupled_linear": ("coupled-linear", {}),
    "coupled_quadratic": ("quadratic", {"c0": 0.2}),
    "constant_coeff": ("explicit", {"a": 1.0, "b": 1.0, "c": 1.0, "d": 3.0}),
    "time_dependent": ("contraction", {"alpha": 0.5, "T_ref": 1.0}),
    "abs_max": ("contraction", {"alpha": 1.0, "T_ref": 1.0}),
    "lotka_volterra": (None, {}),
}


def names():
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir()
                  if p.name.endswith(".json"))


def path(name):
    return resources.files(__name__) / f"{name}.json"


def load(name) -> ProblemSpec:
    return problem_from_dict(json.loads(path(name).read_text()))
