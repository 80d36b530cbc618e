from judge_audit.storage.judgment_state import (
    JudgmentRecord,
    JudgmentSet,
    SampleMatrix,
    VerdictLabel,
)

__all__ = ["JudgmentRecord", "JudgmentSet", "SampleMatrix", "VerdictLabel"]
