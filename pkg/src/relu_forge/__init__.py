"""Constructive ReLU network synthesis with explicit error certificates."""
from .approximator import SamplingPlan, TargetFunction, build_approximant, certify, rate_sweep
from .fnn_core import ReluNetwork, deserialize, evaluate, serialize
from .modulus import ModulusOfContinuity

__all__ = [
    "ModulusOfContinuity", "ReluNetwork", "SamplingPlan", "TargetFunction", "build_approximant",
    "certify", "deserialize", "evaluate", "rate_sweep", "serialize",
]
