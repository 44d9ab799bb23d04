"""Exchangeable random measures on the quarter plane: sampling from
function-tuple and multigraphex representations, certifying almost sure
local finiteness, and statistical checks of sampled windows."""

from .config import ConfigError, ModelConfig, load, loads
from .core import (AdjacencyMeasureWindow, Atom, Check, Classification, ConditionRecord, LineMass, Status, Verdict,
                   window_mass)
from .dsl import DomainError, DSLFunction, ParseError, UnboundVariableError, evaluate, parse, pretty_print
from .finiteness import (CertifyConfig, certify, certify_kallenberg, certify_multigraphex, poisson_linear_classify,
                         poisson_quadratic_classify, summability_oracle)
from .models import (DustSequence, KallenbergRep, LevelSetKernel, Multigraphex, PmfKernel, PoissonKernel,
                     StarIntensity, bernoulli_kernel, kallenberg_to_multigraphex)
from .poisson import ResourceLimitError
from .quadrature import Convergence, IntegralEstimate
from .rng import RngKey
from .sampler import CapExceeded, TruncationConfig, sample, sample_kallenberg, sample_multigraphex, truncation_error

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMeasureWindow", "Atom", "CapExceeded", "CertifyConfig", "Check", "Classification", "ConditionRecord",
    "ConfigError", "Convergence", "DSLFunction", "DomainError", "DustSequence", "IntegralEstimate", "KallenbergRep",
    "LevelSetKernel", "LineMass", "ModelConfig", "Multigraphex", "ParseError", "PmfKernel", "PoissonKernel",
    "ResourceLimitError", "RngKey", "StarIntensity", "Status", "TruncationConfig", "UnboundVariableError",
    "Verdict", "bernoulli_kernel", "certify", "certify_kallenberg", "certify_multigraphex", "evaluate",
    "kallenberg_to_multigraphex", "load", "loads", "parse", "poisson_linear_classify", "poisson_quadratic_classify",
    "pretty_print", "sample", "sample_kallenberg", "sample_multigraphex", "summability_oracle", "truncation_error",
    "window_mass",
]
