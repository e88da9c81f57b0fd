"""Numerical verification of weighted Hardy and Gagliardo-Nirenberg inequalities in Orlicz spaces."""

from .config import CampaignConfig
from .corpus import TestFunction, default_corpus
from .errors import (AssertionFailure, BracketFailure, ConfigError, Degenerate, DegenerateRatio,
                     DivisionByZero, MissingFit, NonConvergent, NotEligible, NotInSpace,
                     NotNFunctions, OrliczError, OutOfDomain, BadParams)
from .gn import ConstantLedger, build_ledger, run_gn, theta_minimize
from .hardy import classical_bound, fit_hardy_constants, muckenhoupt_check
from .measure import QuadratureSettings, WeightedMeasure, integrate, quad
from .nfunc import NFunction, conjugate, delta2_constant, simonenko_indices
from .norms import Channel, luxemburg_norm, modular
from .triple import YoungTriple, build_mf_triple, identity_triple, validate_Y

__version__ = "0.1.0"

__all__ = [
    "AssertionFailure", "BadParams", "BracketFailure", "CampaignConfig", "Channel", "ConfigError",
    "ConstantLedger", "Degenerate", "DegenerateRatio", "DivisionByZero", "MissingFit",
    "NFunction", "NonConvergent", "NotEligible", "NotInSpace", "NotNFunctions", "OrliczError",
    "OutOfDomain", "QuadratureSettings", "TestFunction", "WeightedMeasure", "YoungTriple",
    "build_ledger", "build_mf_triple", "classical_bound", "conjugate", "default_corpus",
    "delta2_constant", "fit_hardy_constants", "identity_triple", "integrate", "luxemburg_norm",
    "modular", "muckenhoupt_check", "quad", "run_gn", "simonenko_indices", "theta_minimize",
    "validate_Y",
]
