"""Exact symbolic engine for classical and quantum integrable hierarchies of double ramification type."""

from .coeff import GaussianRational, bernoulli
from .diffpoly import DiffPoly, LocalFunctional, Ring, TruncationPolicy, functional_equal, parse
from .operators import HamiltonianOperator, Metric, MiuraTransform
from .drtype import build_hierarchy, verify_dr_type, wdvv_check

__all__ = [
    "GaussianRational", "bernoulli", "DiffPoly", "LocalFunctional", "Ring", "TruncationPolicy",
    "functional_equal", "parse", "HamiltonianOperator", "Metric", "MiuraTransform",
    "build_hierarchy", "verify_dr_type", "wdvv_check",
]

__version__ = "0.1.0"
