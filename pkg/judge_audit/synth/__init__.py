from judge_audit.synth.generator import (
    GroundTruth,
    HtmtRegime,
    SyntheticConfig,
    analytic_r2,
    generate,
    load_synthetic_config,
    write_synthetic,
)

__all__ = [
    "GroundTruth",
    "HtmtRegime",
    "SyntheticConfig",
    "analytic_r2",
    "generate",
    "load_synthetic_config",
    "write_synthetic",
]
