"""Coupled-cluster ground states read through a three-Hilbert-space lens."""

from .ccm_solver import (
    BraAmplitudes,
    ClusterAmplitudes,
    CcmSolution,
    SolverOptions,
    TruncationSet,
    assemble_bra,
    assemble_cluster,
    energy_functional,
    expectation,
    full_truncation,
    ket_residuals,
    similarity_transform,
    solve,
    solve_bra,
    solve_ket,
    sub_n_truncation,
)
from .config_space import ConfigurationBasis, MultiIndex, OperatorFamily, adjoint, build_operator_family
from .models import BUNDLED_MODELS, ModelInstance, ModelSpec, build_model, tensor_compose
from .ths import (
    Doublet,
    MetricOperator,
    ThsTriple,
    ccm_ths_dictionary_check,
    doublet_eigensolve,
    hermitian_map,
    metric_from_map,
    metric_from_spectrum,
    pi_symmetry_defect,
    quasi_hermiticity_defect,
    rehermitize,
)

__all__ = [
    "adjoint",
    "assemble_bra",
    "assemble_cluster",
    "BraAmplitudes",
    "build_model",
    "build_operator_family",
    "BUNDLED_MODELS",
    "ccm_ths_dictionary_check",
    "CcmSolution",
    "ClusterAmplitudes",
    "ConfigurationBasis",
    "Doublet",
    "doublet_eigensolve",
    "energy_functional",
    "expectation",
    "full_truncation",
    "hermitian_map",
    "ket_residuals",
    "metric_from_map",
    "metric_from_spectrum",
    "MetricOperator",
    "ModelInstance",
    "ModelSpec",
    "MultiIndex",
    "OperatorFamily",
    "pi_symmetry_defect",
    "quasi_hermiticity_defect",
    "rehermitize",
    "similarity_transform",
    "solve",
    "solve_bra",
    "solve_ket",
    "SolverOptions",
    "sub_n_truncation",
    "tensor_compose",
    "ThsTriple",
    "TruncationSet",
]

__version__ = "0.1.0"
