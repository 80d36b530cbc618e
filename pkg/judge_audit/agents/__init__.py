from judge_audit.agents.judge_client import (
    EndpointConfig,
    load_endpoint,
    request_judgment,
    run_judgments,
)
from judge_audit.agents.judge_template import JudgmentTask, render_template

__all__ = [
    "EndpointConfig",
    "JudgmentTask",
    "load_endpoint",
    "render_template",
    "request_judgment",
    "run_judgments",
]
