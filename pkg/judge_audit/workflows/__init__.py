from judge_audit.workflows.audit import AuditReport, AuditWorkflow, run_audit
from judge_audit.workflows.markdown import render_markdown
from judge_audit.workflows.plot_data import emit_plot_data

__all__ = ["AuditReport", "AuditWorkflow", "emit_plot_data", "render_markdown", "run_audit"]
