"""Markdown rendering of an audit report, one section per audit stage."""

from typing import Iterable, List, Optional, Sequence

from judge_audit.workflows.audit import AuditReport, IntervalReport


def _cell(value: object, digits: int = 3) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        if value != value:
            return "n/a"
        if value in (float("inf"), float("-inf")):
            return "∞" if value > 0 else "-∞"
        return f"{value:.{digits}f}"
    return str(value)


def _table(headers: Sequence[str], rows: Iterable[Sequence[object]]) -> List[str]:
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join("---" for _ in headers) + "|",
    ]
    lines.extend("| " + " | ".join(_cell(v) for v in row) + " |" for row in rows)
    return lines


def _interval(ci: Optional[IntervalReport]) -> str:
    if ci is None:
        return ""
    return f" ({ci.level:.0%} CI {ci.lower:.3f} to {ci.upper:.3f}, {ci.iterations} resamples)"


def render_markdown(report: AuditReport) -> str:
    """Human-readable summary of an audit report."""
    setting = report.setting
    schematic = report.schematic
    psychometric = report.psychometric
    lines = [
        f"# Judge audit: {setting.name}",
        "",
        f"- Input: `{report.input_name}` (sha256 `{report.input_digest[:12]}`)",
        f"- Judgments: {report.records}; models: {len(report.models)}; "
        f"judges: {', '.join(report.judges)}",
        f"- judge-audit {report.tool_version}",
        "",
        "## Schematic adherence",
        "",
    ]
    lines += _table(
        ["Judge", "Setting", "Linear R²", "Polynomial R²", "R² Improvement", "% Unexplained"],
        [
            [
                setting.judge or ", ".join(report.judges),
                setting.name,
                schematic.r2_linear,
                schematic.r2_polynomial,
                schematic.r2_improvement,
                _cell(schematic.unexplained_percent, 1),
            ]
        ],
    )
    lines += [
        "",
        f"Schematic R² {schematic.r2_schematic:.3f}{_interval(report.schematic_r2_ci)}; "
        f"sensitivity {schematic.sensitivity:.3f}.",
        f"Weight disparity {schematic.weight_disparity:.3f}, weight entropy "
        f"{schematic.weight_entropy:.3f}, context stability "
        f"{_cell(schematic.context_stability)} over {_cell(schematic.clusters)} clusters.",
        "",
        "## Psychometric validity",
        "",
    ]
    lines += _table(
        ["Criterion", "Cronbach α", "CLR", "CLR (normalized)"],
        [
            [name, psychometric.alpha[name], psychometric.clr_raw[name], psychometric.clr_norm[name]]
            for name in psychometric.criteria
        ],
    )
    lines += [
        "",
        f"Mean off-diagonal HTMT {psychometric.mean_htmt:.3f}. Unified validity "
        f"{psychometric.unified:.3f}; sensitivity {psychometric.sensitivity:.3f} Likert points "
        f"on a range of {psychometric.score_range:g}.",
        "",
        "## Factor correlations (Spearman)",
        "",
    ]
    corr = report.correlations
    lines += _table(["", *corr.names], [[a, *corr.values[i]] for i, a in enumerate(corr.names)])
    lines += [
        "",
        f"Mean off-diagonal ρ {_cell(corr.mean_off_diagonal)}"
        f"{_interval(corr.mean_off_diagonal_ci)}; Bonferroni family of {corr.tests} tests.",
        "",
        "## Deviation rates (%)",
        "",
    ]
    if report.deviation_rates:
        headers = list(report.deviation_rates[0])
        lines += _table(headers, [[row[h] for h in headers] for row in report.deviation_rates])
    lines += ["", "## Leaderboard", ""]
    ranking = report.ranking
    lines += _table(
        ["Model", "Rating", "ELO", "Win rate", "CI low", "CI high"],
        [
            [
                model,
                ranking.ratings[model],
                _cell(ranking.elo_display.get(model), 0),
                ranking.win_rates.get(model),
                *ranking.ci.get(model, (None, None)),
            ]
            for model in ranking.models()
        ],
    )
    collapse = report.collapse
    lines += [
        "",
        f"Baseline `{ranking.baseline}`"
        + (" (separated comparisons, ratings capped)" if ranking.separated else "")
        + ".",
        "",
        "## Rating collapse",
        "",
        f"Overall ratings regressed on factor ratings across {len(collapse.models)} models: "
        f"linear R² {collapse.r2_linear:.4f}, polynomial R² {_cell(collapse.r2_polynomial, 4)}, "
        f"{collapse.unexplained_percent:.2f}% unexplained, against "
        f"{schematic.unexplained_percent:.1f}% unexplained in the judgments themselves.",
        "",
    ]
    return "\n".join(lines)
