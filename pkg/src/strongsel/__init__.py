"""Sampling probabilities, diffusion limits and genealogies for multi-allele Wright-Fisher models under strong selection."""

from .core import MutationModel, PimModel, SelectionRegime, load_model, parse_model
from .sampling import (
    OracleResult,
    SamplingProbabilities,
    expansion_general,
    expansion_pim,
    mc_oracle,
    pim_quadrature_oracle,
    q0,
    truncated_system_oracle,
    two_allele_asymptotic,
    two_allele_exact,
)
from .estimators import (
    AsymptoticSamplingProbability,
    QuadratureSamplingProbability,
    TruncatedSystemSamplingProbability,
)

__version__ = "0.1.0"
SPEC_VERSION = "1"

__all__ = [
    "AsymptoticSamplingProbability",
    "MutationModel",
    "OracleResult",
    "PimModel",
    "QuadratureSamplingProbability",
    "SamplingProbabilities",
    "SelectionRegime",
    "TruncatedSystemSamplingProbability",
    "expansion_general",
    "expansion_pim",
    "load_model",
    "mc_oracle",
    "parse_model",
    "pim_quadrature_oracle",
    "q0",
    "truncated_system_oracle",
    "two_allele_asymptotic",
    "two_allele_exact",
]
