"""Material descriptions: tensors, graded fields and effective-tensor tables."""

from .fields import (
    MaterialField,
    RankDeficientError,
    attach_channel,
    fit_least_squares,
    fit_residual,
    sample_material,
)
from .table import PATTERN, EffectiveTensorTable, build_table, query_table
from .tensors import (
    POROUS_SILICA,
    TITANIUM,
    ElasticityTensor,
    IsotropicMaterial,
    bond_matrices,
    classify_symmetry,
    format_tensor,
    gibson_ashby,
    has_symmetry,
    isotropic_to_voigt,
    parse_tensor,
    porous,
    rotate_tensor,
    symmetry_details,
)

__all__ = [
    "MaterialField", "RankDeficientError", "attach_channel", "fit_least_squares", "fit_residual",
    "sample_material", "PATTERN", "EffectiveTensorTable", "build_table", "query_table",
    "POROUS_SILICA", "TITANIUM", "ElasticityTensor", "IsotropicMaterial", "bond_matrices",
    "classify_symmetry", "format_tensor", "gibson_ashby", "has_symmetry", "isotropic_to_voigt",
    "parse_tensor", "porous", "rotate_tensor", "symmetry_details",
]
