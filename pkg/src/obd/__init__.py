"""Compile .obd domain descriptions into discounted-reward MDPs, solve them,
and evaluate the resulting reflex controllers in a discrete-time simulator."""

from obd.dsl import parse_domain, eval_formula, validate, DomainModel, ParseError
from obd.reqauto import build_automaton, RequirementAutomaton
from obd.compiler import compile_model, MdpModel, StateLimitError, CompileError
from obd.solver import value_iteration, policy_iteration, greedy_policy, Strategy
from obd.sim import run, step, ReflexController, ReplanningController, RandomController

__all__ = [
    "parse_domain",
    "eval_formula",
    "validate",
    "DomainModel",
    "ParseError",
    "build_automaton",
    "RequirementAutomaton",
    "compile_model",
    "MdpModel",
    "StateLimitError",
    "CompileError",
    "value_iteration",
    "policy_iteration",
    "greedy_policy",
    "Strategy",
    "run",
    "step",
    "ReflexController",
    "ReplanningController",
    "RandomController",
]
