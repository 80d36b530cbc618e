import json
from types import SimpleNamespace

import httpx
import openai
import pytest
from typer.testing import CliRunner

from judge_audit import __version__
from judge_audit.agents import judge_client
from judge_audit.agents.judge_template import JudgmentTask
from judge_audit.cli import app

runner = CliRunner()

REPLY = (
    "Correctness: ((A=B))\nCompleteness: ((B>A))\nSafety: ((A=B))\n"
    "Conciseness: ((A>B))\nStyle: ((A=B))\nMy final verdict is: [[B>A]]"
)


@pytest.fixture(scope="module")
def synthetic_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "synthetic.jsonl"
    result = runner.invoke(
        app,
        ["--seed", "5", "synth", str(path), "--questions", "40", "--series-share", "0.5"],
    )
    assert result.exit_code == 0, result.output
    return path


class TestTopLevel:
    def test_version(self):
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self):
        result = runner.invoke(app, ["--help"])
        for command in ("ingest", "audit", "rank", "collapse", "synth", "judge-run", "report"):
            assert command in result.output


class TestSynth:
    def test_writes_sidecar(self, synthetic_file):
        assert synthetic_file.with_suffix(".truth.json").exists()
        assert len(synthetic_file.read_text().splitlines()) == 40 * 7

    def test_invalid_options_exit_2(self, tmp_path):
        result = runner.invoke(app, ["synth", str(tmp_path / "x.jsonl"), "--latent-dim", "9"])
        assert result.exit_code == 2
        assert "invalid generator options" in result.output

    def test_config_file(self, tmp_path):
        config = tmp_path / "generator.yaml"
        config.write_text("questions: 5\nmodels: 3\n")
        out = tmp_path / "from-config.jsonl"
        result = runner.invoke(app, ["synth", str(out), "--config", str(config)])
        assert result.exit_code == 0, result.output
        assert len(out.read_text().splitlines()) == 10


class TestIngest:
    def test_json_summary(self, synthetic_file):
        result = runner.invoke(app, ["--log-level", "WARNING", "ingest", str(synthetic_file)])
        assert result.exit_code == 0, result.output
        summary = json.loads(result.stdout)
        assert summary["records"] == 280
        assert summary["judges"] == ["synthetic-judge"]

    def test_empty_file_exits_2(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        result = runner.invoke(app, ["ingest", str(path)])
        assert result.exit_code == 2
        assert "InputError" in result.output

    def test_markdown_mode(self, synthetic_file):
        result = runner.invoke(app, ["--format", "md", "ingest", str(synthetic_file)])
        assert result.exit_code == 0
        assert "Deviation rates" in result.output


class TestAuditAndReport:
    def test_audit_writes_report_and_plot_data(self, synthetic_file, tmp_path):
        setting = tmp_path / "setting.yaml"
        setting.write_text(
            "name: cli\nmetric:\n  imputations: 1\n  bootstrap_iterations: 0\n"
            "  rating_bootstrap_iterations: 0\n"
        )
        out = tmp_path / "reports"
        result = runner.invoke(
            app,
            [
                "--format",
                "md",
                "audit",
                str(synthetic_file),
                "--setting",
                str(setting),
                "--out",
                str(out),
                "--plot-data",
            ],
        )
        assert result.exit_code == 0, result.output
        reports = list(out.glob("audit-*-cli.json"))
        assert len(reports) == 1
        assert reports[0].with_suffix(".md").exists()
        assert (out / reports[0].stem / "correlation_matrix.csv").exists()

        rendered = runner.invoke(
            app, ["--log-level", "WARNING", "--format", "md", "report", str(reports[0])]
        )
        assert rendered.exit_code == 0
        assert "## Schematic adherence" in rendered.stdout

        rendered_dir = tmp_path / "rendered"
        written = runner.invoke(app, ["report", str(reports[0]), "--out", str(rendered_dir)])
        assert written.exit_code == 0
        assert (rendered_dir / f"{reports[0].stem}.md").exists()

    def test_missing_report(self, tmp_path):
        result = runner.invoke(app, ["report", str(tmp_path / "nope.json")])
        assert result.exit_code == 2


class TestRanking:
    def test_rank_writes_leaderboard(self, synthetic_file, tmp_path):
        out = tmp_path / "leaderboard.csv"
        result = runner.invoke(
            app, ["rank", str(synthetic_file), "--iterations", "10", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        header = out.read_text().splitlines()[0]
        assert header == "model,rating,elo_display,win_rate,ci_low,ci_high"

    def test_unknown_target(self, synthetic_file):
        result = runner.invoke(app, ["rank", str(synthetic_file), "--target", "Helpfulness"])
        assert result.exit_code == 2

    def test_collapse(self, synthetic_file, tmp_path):
        out = tmp_path / "collapse.csv"
        result = runner.invoke(app, ["collapse", str(synthetic_file), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.read_text().startswith("model,overall_rating,")

    def test_collapse_too_few_models_exits_3(self, tmp_path):
        path = tmp_path / "small.jsonl"
        runner.invoke(app, ["synth", str(path), "--questions", "10", "--models", "3"])
        result = runner.invoke(app, ["collapse", str(path)])
        assert result.exit_code == 3


class _ScriptedClient:
    """Replies to every request; times out on prompts containing ``fail_on``."""

    def __init__(self, fail_on: str = ""):
        self.fail_on = fail_on
        self.chat = SimpleNamespace(completions=SimpleNamespace(create=self.create))

    def create(self, **kwargs):
        if self.fail_on and self.fail_on in kwargs["messages"][1]["content"]:
            raise openai.APITimeoutError(request=httpx.Request("POST", "https://judge.test/v1"))
        message = SimpleNamespace(content=REPLY)
        usage = SimpleNamespace(prompt_tokens=100, completion_tokens=20)
        return SimpleNamespace(choices=[SimpleNamespace(message=message)], usage=usage)


class TestJudgeRun:
    @pytest.fixture
    def inputs(self, tmp_path):
        config = tmp_path / "endpoint.yaml"
        config.write_text("model: judge-small\nconcurrency: 2\nmax_retries: 0\n")
        tasks = tmp_path / "tasks.jsonl"
        rows = [
            JudgmentTask(
                question_id=f"q{i}",
                question_text=f"Question number {i}?",
                model_a="model-a",
                model_b="model-b",
                response_a="Answer A.",
                response_b="Answer B.",
                judge="judge-small",
                setting="cli",
            ).model_dump_json()
            for i in range(3)
        ]
        tasks.write_text("\n".join(rows) + "\n")
        return config, tasks, tmp_path / "judged.jsonl"

    def test_success(self, inputs, monkeypatch):
        config, tasks, out = inputs
        monkeypatch.setattr(judge_client, "make_client", lambda endpoint: _ScriptedClient())
        result = runner.invoke(
            app, ["judge-run", "--config", str(config), "--tasks", str(tasks), "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert len(out.read_text().splitlines()) == 3
        assert "360" in result.output

    def test_api_key_in_config_exits_2(self, inputs):
        config, tasks, out = inputs
        config.write_text("api_key: sk-secret\n")
        result = runner.invoke(
            app, ["judge-run", "--config", str(config), "--tasks", str(tasks), "--out", str(out)]
        )
        assert result.exit_code == 2
        assert not out.exists()

    def test_failed_task_exits_4(self, inputs, monkeypatch):
        config, tasks, out = inputs
        client = _ScriptedClient(fail_on="number 1?")
        monkeypatch.setattr(judge_client, "make_client", lambda endpoint: client)
        result = runner.invoke(
            app, ["judge-run", "--config", str(config), "--tasks", str(tasks), "--out", str(out)]
        )
        assert result.exit_code == 4
        assert "q1" in result.output
        assert len(out.read_text().splitlines()) == 2
