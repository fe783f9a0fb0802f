"""Initial value problems for differential systems with running maxima.

Systems of the form x'(t) = f(t, x(t), m(t)) where each m_j(t) is the
maximum over [0, t] of a functional h_j of the state.
"""
from .errors import (EvalDomainError, GridMismatchError, MaxodeError, NonFiniteError,
                     ParseError, ProblemError)
from .expr import (Box, ProblemSpec, estimate_bound, estimate_lipschitz, evaluate,
                   load_problem, parse, problem_from_dict, to_string)

__all__ = ["EvalDomainError", "GridMismatchError", "MaxodeError", "NonFiniteError",
           "ParseError", "ProblemError", "Box", "ProblemSpec", "estimate_bound",
           "estimate_lipschitz", "evaluate", "load_problem", "parse", "problem_from_dict",
           "to_string"]

__version__ = "0.1.0"
