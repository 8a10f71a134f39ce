"""pbcmdp: compile probabilistic pBC+ action descriptions into MDPs.

Pipeline: :func:`parse_description` -> :func:`validate` -> :func:`translate`
(the LP^MLN program Tr(D, m)) -> stable models (:mod:`pbcmdp.engine`) ->
:func:`transition_system` -> :func:`build_mdp` -> :func:`solve_finite` /
:func:`solve_infinite`.  The decision-theoretic layer lives in
:mod:`pbcmdp.dtlpmln`.
"""

from .dtlpmln import DecisionProblem, evaluate_decision, meu
from .engine import enumerate_stable_models, expected_utility, query_probability, solve
from .lang import ActionDescription, ground_schematics, validate
from .mdp import (
    build_mdp,
    expected_total_reward,
    optimal_policy_via_lpmln,
    policy_value_via_lpmln,
    solve_finite,
    solve_infinite,
)
from .parser import ParseError, format_description, parse_description, parse_formula
from .transition import (
    check_assumptions,
    enumerate_actions,
    enumerate_states,
    transition_probability,
    transition_reward,
    transition_system,
)
from .translator import ProgramBuilder, translate

__version__ = "0.1.0"

__all__ = [
    "ActionDescription",
    "DecisionProblem",
    "ParseError",
    "ProgramBuilder",
    "build_mdp",
    "check_assumptions",
    "enumerate_actions",
    "enumerate_stable_models",
    "enumerate_states",
    "evaluate_decision",
    "expected_total_reward",
    "expected_utility",
    "format_description",
    "ground_schematics",
    "meu",
    "optimal_policy_via_lpmln",
    "parse_description",
    "parse_formula",
    "policy_value_via_lpmln",
    "query_probability",
    "solve",
    "solve_finite",
    "solve_infinite",
    "transition_probability",
    "transition_reward",
    "transition_system",
    "translate",
    "validate",
]
