"""Plot-ready CSVs derived from an audit report. No rendering happens here."""

from pathlib import Path
from typing import List

import pandas as pd

from judge_audit.diagnostics.schematic import weight_frame
from judge_audit.errors import InputError
from judge_audit.ranking.bradley_terry import leaderboard_frame
from judge_audit.ranking.collapse import collapse_frame
from judge_audit.storage.files import write_frame
from judge_audit.workflows.audit import AuditReport

VARIANCE_FILE = "variance_decomposition.csv"
CORRELATION_FILE = "correlation_matrix.csv"
LOADINGS_FILE = "loadings.csv"
COLLAPSE_FILE = "collapse.csv"
WEIGHTS_FILE = "schematic_weights.csv"
LEADERBOARD_FILE = "leaderboard.csv"

VARIANCE_COLUMNS = [
    "judge",
    "setting",
    "explained_linear",
    "explained_poly",
    "unexplained_percent",
]
CORRELATION_COLUMNS = ["factor_row", "factor_col", "rho", "p_value", "p_bonferroni"]
LOADINGS_COLUMNS = ["observed_factor", "latent_factor", "loading"]


def variance_frame(report: AuditReport) -> pd.DataFrame:
    """Percent of overall-verdict variance: linear part, extra from the quadratic terms, rest.

    The three columns sum to 100.
    """
    schematic = report.schematic
    judge = report.setting.judge or ",".join(report.judges)
    row = {
        "judge": judge,
        "setting": report.setting.name,
        "explained_linear": 100.0 * schematic.r2_linear,
        "explained_poly": 100.0 * (schematic.r2_schematic - schematic.r2_linear),
        "unexplained_percent": schematic.unexplained_percent,
    }
    return pd.DataFrame([row], columns=VARIANCE_COLUMNS)


def correlation_frame(report: AuditReport) -> pd.DataFrame:
    """Long form over every (row, col) factor pair, diagonal included."""
    corr = report.correlations
    rows = [
        {
            "factor_row": a,
            "factor_col": b,
            "rho": corr.values[i][j],
            "p_value": corr.p_values[i][j],
            "p_bonferroni": corr.corrected_p[i][j],
        }
        for i, a in enumerate(corr.names)
        for j, b in enumerate(corr.names)
    ]
    return pd.DataFrame(rows, columns=CORRELATION_COLUMNS)


def loadings_frame(report: AuditReport) -> pd.DataFrame:
    psychometric = report.psychometric
    k = len(psychometric.criteria)
    rows = [
        {
            "observed_factor": name,
            "latent_factor": f"latent_{j + 1}",
            "loading": psychometric.loadings[i][j],
        }
        for i, name in enumerate(psychometric.criteria)
        for j in range(k)
    ]
    return pd.DataFrame(rows, columns=LOADINGS_COLUMNS)


def _write(frame: pd.DataFrame, path: Path) -> Path:
    try:
        return write_frame(frame, path)
    except OSError as e:
        raise InputError(f"cannot write {path}: {e.strerror or e}") from e


def emit_plot_data(report: AuditReport, out_dir: str | Path) -> List[Path]:
    """Variance decomposition, correlation matrix, loadings and collapse CSVs."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise InputError(f"cannot create {out_dir}: {e.strerror or e}") from e
    return [
        _write(variance_frame(report), out_dir / VARIANCE_FILE),
        _write(correlation_frame(report), out_dir / CORRELATION_FILE),
        _write(loadings_frame(report), out_dir / LOADINGS_FILE),
        _write(collapse_frame(report.collapse), out_dir / COLLAPSE_FILE),
    ]


def emit_tables(report: AuditReport, out_dir: str | Path) -> List[Path]:
    """Per-factor schematic weights and the overall leaderboard."""
    out_dir = Path(out_dir)
    return [
        _write(weight_frame(report.schematic), out_dir / WEIGHTS_FILE),
        _write(leaderboard_frame(report.ranking), out_dir / LEADERBOARD_FILE),
    ]
