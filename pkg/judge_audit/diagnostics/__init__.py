from judge_audit.diagnostics.psychometric import (
    LoadingsMatrix,
    PsychometricReport,
    cronbach_alpha,
    cross_loading_ratio,
    extract_loadings,
    htmt,
    htmt_matrix,
    psychometric_validity,
    sigmoid_normalize_clr,
)
from judge_audit.diagnostics.schematic import (
    QuestionClusters,
    SchematicReport,
    cluster_questions,
    context_stability,
    fit_linear_schema,
    fit_polynomial_schema,
    schematic_adherence,
    weight_disparity,
    weight_entropy,
)
from judge_audit.diagnostics.score_cube import ScoreCube

__all__ = [
    "LoadingsMatrix",
    "PsychometricReport",
    "QuestionClusters",
    "SchematicReport",
    "ScoreCube",
    "cluster_questions",
    "context_stability",
    "cronbach_alpha",
    "cross_loading_ratio",
    "extract_loadings",
    "fit_linear_schema",
    "fit_polynomial_schema",
    "htmt",
    "htmt_matrix",
    "psychometric_validity",
    "schematic_adherence",
    "sigmoid_normalize_clr",
    "weight_disparity",
    "weight_entropy",
]
