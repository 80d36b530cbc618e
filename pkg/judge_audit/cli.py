#!/usr/bin/env python3
"""
judge-audit - CLI Entry Point

Audits LLM-judged pairwise benchmarks: schematic adherence, psychometric validity,
factor correlations, deviation rates and Bradley-Terry ratings.
"""

from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterator, List, Optional

import pandas as pd
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from judge_audit import __version__
from judge_audit.agents.judge_client import load_endpoint, load_tasks, run_judgments
from judge_audit.config.logging_config import configure_logging
from judge_audit.config.setting_spec import SettingSpec, load_setting
from judge_audit.config.settings import LOG_LEVEL, OVERALL, RUBRIC_CRITERIA
from judge_audit.errors import AuditError, InputError
from judge_audit.judgments.deviations import deviation_rates
from judge_audit.ranking.bradley_terry import (
    RatingTable,
    bootstrap_ratings,
    fit_ratings,
    leaderboard_frame,
)
from judge_audit.ranking.collapse import CollapseReport, collapse_analysis, collapse_frame
from judge_audit.storage.files import canonical_json, load_judgments, write_atomic, write_frame
from judge_audit.synth.generator import (
    SyntheticConfig,
    generate,
    load_synthetic_config,
    truth_path,
    write_synthetic,
)
from judge_audit.workflows.audit import AuditReport, load_report, run_audit
from judge_audit.workflows.markdown import render_markdown
from judge_audit.workflows.plot_data import emit_plot_data, emit_tables

# Initialize
app = typer.Typer(help="Audit LLM-as-judge benchmark results.", no_args_is_help=True)
console = Console()


class OutputFormat(str, Enum):
    JSON = "json"
    MD = "md"


@dataclass
class CliState:
    seed: Optional[int] = None
    fmt: OutputFormat = OutputFormat.JSON
    jobs: int = 1


def _state(ctx: typer.Context) -> CliState:
    return ctx.obj if isinstance(ctx.obj, CliState) else CliState()


@contextmanager
def reported_errors() -> Iterator[None]:
    """Render expected failures as a panel and exit with the error's code."""
    try:
        yield
    except AuditError as e:
        title = f"❌ {type(e).__name__}"
        if e.stage:
            title += f" in stage '{e.stage}'"
        console.print(Panel.fit(f"[bold red]{e.message}[/bold red]", title=title))
        raise typer.Exit(code=e.exit_code)


def _criteria(option: Optional[str]) -> List[str]:
    if not option:
        return list(RUBRIC_CRITERIA)
    return [name.strip() for name in option.split(",") if name.strip()]


def _rates_table(rates: pd.DataFrame, title: str) -> Table:
    table = Table(title=title)
    for column in rates.columns:
        table.add_column(str(column), justify="left" if rates[column].dtype == object else "right")
    for row in rates.itertuples(index=False):
        table.add_row(*(f"{v:.2f}" if isinstance(v, float) else str(v) for v in row))
    return table


def _leaderboard_table(ratings: RatingTable, title: str) -> Table:
    table = Table(title=title)
    for column in ("Model", "Rating", "ELO", "Win rate", "CI"):
        table.add_column(column, justify="left" if column == "Model" else "right")
    for model in ratings.models():
        ci = ratings.ci.get(model)
        table.add_row(
            model,
            f"{ratings.ratings[model]:+.3f}",
            f"{ratings.elo_display[model]:.0f}",
            f"{ratings.win_rates[model]:.1%}",
            f"[{ci[0]:+.3f}, {ci[1]:+.3f}]" if ci else "",
        )
    return table


def _audit_summary(report: AuditReport) -> Panel:
    schematic, psychometric = report.schematic, report.psychometric
    collapse = report.collapse
    body = (
        f"[bold]Judgments:[/bold] {report.records} over {len(report.models)} models\n"
        f"[bold]Schematic R²:[/bold] {schematic.r2_schematic:.3f} "
        f"({schematic.unexplained_percent:.1f}% unexplained)\n"
        f"[bold]Weight disparity:[/bold] {schematic.weight_disparity:.3f}   "
        f"[bold]Context stability:[/bold] {schematic.context_stability}\n"
        f"[bold]Unified validity:[/bold] {psychometric.unified:.3f} "
        f"(sensitivity {psychometric.sensitivity:.3f})\n"
        f"[bold]Mean factor ρ:[/bold] {report.correlations.mean_off_diagonal}\n"
        f"[bold]Rating collapse:[/bold] {collapse.unexplained_percent:.2f}% unexplained"
    )
    return Panel(body, title=f"📊 {report.setting.name}")


def version_callback(value: bool) -> None:
    if value:
        console.print(f"judge-audit {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    ctx: typer.Context,
    seed: Optional[int] = typer.Option(None, help="Seed for imputation, bootstrap and synthesis."),
    fmt: OutputFormat = typer.Option(OutputFormat.JSON, "--format", help="Report format."),
    jobs: int = typer.Option(1, min=1, help="Parallel workers for resampling loops."),
    log_level: str = typer.Option(LOG_LEVEL, help="Logging level for stderr diagnostics."),
    version: bool = typer.Option(
        False, "--version", callback=version_callback, is_eager=True, help="Show the version."
    ),
):
    """Audit LLM-as-judge benchmark results."""
    configure_logging(log_level.upper())
    ctx.obj = CliState(seed=seed, fmt=fmt, jobs=jobs)


@app.command()
def ingest(
    ctx: typer.Context,
    data: Path = typer.Argument(..., help="Judgment file (.jsonl or .csv)."),
    criteria: Optional[str] = typer.Option(None, help="Comma-separated rubric criteria."),
):
    """Load a judgment file and print its deviation table"""
    state = _state(ctx)
    with reported_errors():
        judgment_set = load_judgments(data, criteria=_criteria(criteria))
        rates = deviation_rates(judgment_set)

    if state.fmt is OutputFormat.JSON:
        summary = {
            "records": len(judgment_set),
            "models": judgment_set.models(),
            "judges": judgment_set.judges(),
            "settings": judgment_set.settings(),
            "deviation_rates": rates.to_dict(orient="records"),
        }
        typer.echo(canonical_json(summary), nl=False)
        return
    console.print(
        Panel.fit(
            f"[bold]Records:[/bold] {len(judgment_set)}\n"
            f"[bold]Models:[/bold] {', '.join(judgment_set.models())}\n"
            f"[bold]Judges:[/bold] {', '.join(judgment_set.judges())}",
            title=f"📥 {data.name}",
        )
    )
    console.print(_rates_table(rates, "Deviation rates (%)"))


@app.command()
def audit(
    ctx: typer.Context,
    data: Path = typer.Argument(..., help="Judgment file (.jsonl or .csv)."),
    setting: Optional[Path] = typer.Option(None, help="Settings YAML; defaults apply if omitted."),
    out: Path = typer.Option(Path("reports"), help="Directory for the report files."),
    plot_data: bool = typer.Option(False, help="Also write plot-ready CSVs."),
):
    """Run the full audit pipeline on one judgment file"""
    state = _state(ctx)
    with reported_errors():
        spec = load_setting(setting) if setting else SettingSpec(name=data.stem)
        if state.seed is not None:
            spec = spec.model_copy(
                update={"metric": spec.metric.model_copy(update={"seed": state.seed})}
            )
        report = run_audit(spec, data, out_dir=out, jobs=state.jobs)
        report_path = out / report.file_name
        written = [report_path]
        if state.fmt is OutputFormat.MD:
            written.append(write_atomic(report_path.with_suffix(".md"), render_markdown(report)))
        if plot_data:
            written += emit_plot_data(report, out / report_path.stem)
            written += emit_tables(report, out / report_path.stem)

    console.print(_audit_summary(report))
    for path in written:
        console.print(f"[green]wrote[/green] {path}")


@app.command()
def rank(
    ctx: typer.Context,
    data: Path = typer.Argument(..., help="Judgment file (.jsonl or .csv)."),
    target: str = typer.Option(OVERALL, help="Verdict to rank on: overall or a criterion."),
    baseline: Optional[str] = typer.Option(None, help="Model anchored at rating 0."),
    drop_ties: bool = typer.Option(False, help="Discard ties instead of splitting them."),
    iterations: int = typer.Option(100, min=0, help="Bootstrap iterations; 0 skips intervals."),
    criteria: Optional[str] = typer.Option(None, help="Comma-separated rubric criteria."),
    out: Optional[Path] = typer.Option(None, help="Write the leaderboard (.csv or .json)."),
):
    """Fit Bradley-Terry ratings and print the leaderboard"""
    state = _state(ctx)
    with reported_errors():
        judgment_set = load_judgments(data, criteria=_criteria(criteria))
        if iterations == 0:
            ratings = fit_ratings(judgment_set, target, baseline, drop_ties)
        else:
            ratings = bootstrap_ratings(
                judgment_set,
                target,
                iterations=iterations,
                seed=state.seed or 0,
                baseline=baseline,
                drop_ties=drop_ties,
                jobs=state.jobs,
            )
        if out is not None:
            frame = leaderboard_frame(ratings)
            if out.suffix.lower() == ".csv":
                write_frame(frame, out)
            else:
                write_atomic(out, canonical_json(ratings))

    title = f"🏆 {target} ratings (baseline {ratings.baseline})"
    console.print(_leaderboard_table(ratings, title))
    if ratings.separated:
        console.print("[yellow]Some comparisons are one-sided; ratings are capped.[/yellow]")


def _print_collapse(report: CollapseReport) -> None:
    polynomial = "n/a" if report.r2_polynomial is None else f"{report.r2_polynomial:.4f}"
    console.print(
        Panel.fit(
            f"[bold]Models:[/bold] {len(report.models)}\n"
            f"[bold]Linear R²:[/bold] {report.r2_linear:.4f}\n"
            f"[bold]Polynomial R²:[/bold] {polynomial}\n"
            f"[bold]Unexplained:[/bold] {report.unexplained_percent:.2f}%",
            title="📉 Rating collapse",
        )
    )
    weights = Table(title="Factor weights")
    weights.add_column("Term")
    weights.add_column("Weight", justify="right")
    for name, value in report.linear_weights.items():
        weights.add_row(name, f"{value:+.4f}")
    console.print(weights)


@app.command()
def collapse(
    data: Path = typer.Argument(..., help="Judgment file (.jsonl or .csv)."),
    baseline: Optional[str] = typer.Option(None, help="Model anchored at rating 0."),
    drop_ties: bool = typer.Option(False, help="Discard ties instead of splitting them."),
    criteria: Optional[str] = typer.Option(None, help="Comma-separated rubric criteria."),
    out: Optional[Path] = typer.Option(None, help="Write the collapse data (.csv or .json)."),
):
    """Regress overall ratings on per-factor ratings"""
    with reported_errors():
        judgment_set = load_judgments(data, criteria=_criteria(criteria))
        report = collapse_analysis(judgment_set, baseline=baseline, drop_ties=drop_ties)
        if out is not None:
            if out.suffix.lower() == ".csv":
                write_frame(collapse_frame(report), out)
            else:
                write_atomic(out, canonical_json(report))
    _print_collapse(report)


@app.command()
def synth(
    ctx: typer.Context,
    out: Path = typer.Argument(..., help="Output JSONL; ground truth goes beside it."),
    config: Optional[Path] = typer.Option(None, help="Generator YAML; overrides the options."),
    k: int = typer.Option(len(RUBRIC_CRITERIA), help="Number of rubric factors."),
    questions: int = typer.Option(100, help="Questions per model pair."),
    models: int = typer.Option(8, help="Number of models."),
    latent_dim: Optional[int] = typer.Option(None, help="Latent traits behind the factors."),
    weights: Optional[str] = typer.Option(None, help="Comma-separated true factor weights."),
    noise_sigma: float = typer.Option(1.0, help="Standard deviation of overall-score noise."),
    series_share: float = typer.Option(0.0, help="Latent variance shared within a series."),
    missing_rate: float = typer.Option(0.0, help="Fraction of factor verdicts left out."),
):
    """Generate synthetic judgments with known ground truth"""
    state = _state(ctx)
    with reported_errors():
        if config is not None:
            synthetic = load_synthetic_config(config)
            if state.seed is not None:
                synthetic = synthetic.model_copy(update={"seed": state.seed})
        else:
            try:
                synthetic = SyntheticConfig(
                    k=k,
                    questions=questions,
                    models=models,
                    latent_dim=latent_dim,
                    true_weights=[float(w) for w in weights.split(",")] if weights else None,
                    noise_sigma=noise_sigma,
                    series_share=series_share,
                    missing_rate=missing_rate,
                    seed=state.seed or 0,
                )
            except (ValidationError, ValueError) as e:
                raise InputError(f"invalid generator options: {e}") from e
        judgment_set, truth = generate(synthetic)
        write_synthetic(judgment_set, truth, out)

    console.print(
        Panel.fit(
            f"[bold]Judgments:[/bold] {len(judgment_set)}\n"
            f"[bold]Analytic R²:[/bold] {truth.analytic_r2:.4f}\n"
            f"[bold]HTMT regime:[/bold] {truth.expected_htmt_regime.value}",
            title="🧪 Synthetic set",
        )
    )
    console.print(f"[green]wrote[/green] {out} and {truth_path(out)}")


@app.command("judge-run")
def judge_run(
    config: Path = typer.Option(..., help="Endpoint YAML."),
    tasks: Path = typer.Option(..., help="Tasks JSONL."),
    out: Path = typer.Option(..., help="Judgments JSONL, appended to."),
    criteria: Optional[str] = typer.Option(None, help="Comma-separated rubric criteria."),
):
    """Send judgment tasks to an OpenAI-compatible judge"""
    with reported_errors():
        endpoint = load_endpoint(config)
        summary = run_judgments(load_tasks(tasks), endpoint, out, criteria=_criteria(criteria))

    counter = summary.tokens
    console.print(
        Panel.fit(
            f"[bold]Written:[/bold] {summary.written}\n"
            f"[bold]Failed:[/bold] {len(summary.failed)}\n"
            f"[bold]Tokens:[/bold] {counter.prompt_tokens} prompt + "
            f"{counter.completion_tokens} completion = {counter.total_tokens}",
            title=f"⚖️ {endpoint.model}",
        )
    )
    if summary.failed:
        console.print(f"[red]Failed questions: {', '.join(summary.failed)}[/red]")
        raise typer.Exit(code=4)


@app.command()
def report(
    ctx: typer.Context,
    path: Path = typer.Argument(..., help="Audit report JSON."),
    out: Optional[Path] = typer.Option(None, help="Directory for rendered files."),
    plot_data: bool = typer.Option(False, help="Also write plot-ready CSVs."),
):
    """Render an existing audit report"""
    state = _state(ctx)
    with reported_errors():
        audit_report = load_report(path)
        markdown = render_markdown(audit_report)
        if out is None:
            if state.fmt is OutputFormat.MD:
                typer.echo(markdown, nl=False)
            else:
                typer.echo(canonical_json(audit_report), nl=False)
            written = []
        else:
            target = out / Path(audit_report.file_name).stem
            written = [write_atomic(out / f"{target.name}.md", markdown)]
            if plot_data:
                written += emit_plot_data(audit_report, target)
                written += emit_tables(audit_report, target)
    for written_path in written:
        console.print(f"[green]wrote[/green] {written_path}")
