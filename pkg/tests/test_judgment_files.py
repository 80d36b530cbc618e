import json

import numpy as np
import pandas as pd
import pytest

from judge_audit.config.settings import OVERALL, RUBRIC_CRITERIA
from judge_audit.errors import InputError
from judge_audit.judgments.matrix import build_sample_matrix, without_deviations
from judge_audit.storage.files import (
    append_judgment,
    canonical_json,
    file_digest,
    load_judgments,
    write_atomic,
    write_judgments,
)
from judge_audit.storage.judgment_state import JudgmentSet, VerdictLabel


def _row(question_id="q1", overall="A=B", **factors):
    verdicts = {c: "A=B" for c in RUBRIC_CRITERIA}
    verdicts.update(factors)
    row = {
        "question_id": question_id,
        "model_a": "model-a",
        "model_b": "model-b",
        "judge": "judge-1",
        "setting": "setting1",
        "factor_verdicts": verdicts,
    }
    if overall is not None:
        row["overall_verdict"] = overall
    return row


class TestLoadJudgments:
    """JSONL and CSV readers."""

    def test_two_clean_rows(self, write_jsonl):
        path = write_jsonl([_row("q1"), _row("q2", overall="A>B")])
        judgment_set = load_judgments(path)
        assert len(judgment_set) == 2
        assert all(not r.deviation_flags for r in judgment_set.records)
        assert judgment_set.records[1].overall_verdict is VerdictLabel.BETTER_A

    def test_missing_overall_is_flagged_as_tie(self, write_jsonl):
        path = write_jsonl([_row(overall=None)])
        record = load_judgments(path).records[0]
        assert record.is_flagged(OVERALL)
        assert record.likert(OVERALL) == 3.0

    def test_unknown_criterion_names_valid_ones(self, write_jsonl):
        row = _row()
        row["factor_verdicts"]["Accuracy"] = "A>B"
        path = write_jsonl([row])
        with pytest.raises(InputError) as excinfo:
            load_judgments(path)
        message = str(excinfo.value)
        assert "Accuracy" in message
        assert all(name in message for name in RUBRIC_CRITERIA)

    def test_unreadable_verdict_falls_back_to_raw_text(self, write_jsonl):
        row = _row(Safety=None)
        row["raw_text"] = "Safety: ((B>>A))\nMy final verdict is: [[A=B]]"
        record = load_judgments(write_jsonl([row])).records[0]
        assert record.verdict("Safety") is VerdictLabel.MUCH_BETTER_B
        assert not record.deviation_flags

    def test_missing_provenance_field(self, write_jsonl):
        row = _row()
        del row["judge"]
        with pytest.raises(InputError, match="row 1: missing field 'judge'"):
            load_judgments(write_jsonl([row]))

    def test_malformed_json_reports_row(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text(json.dumps(_row()) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(InputError, match="row 2"):
            load_judgments(path)

    def test_empty_file_is_input_error(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(InputError):
            load_judgments(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="not found"):
            load_judgments(tmp_path / "absent.jsonl")

    def test_unknown_suffix(self, tmp_path):
        path = tmp_path / "judgments.txt"
        path.write_text("x", encoding="utf-8")
        with pytest.raises(InputError, match="cannot infer"):
            load_judgments(path)

    def test_csv_wide_format(self, tmp_path):
        frame = pd.DataFrame(
            [
                {
                    "question_id": "q1",
                    "model_a": "model-a",
                    "model_b": "model-b",
                    "judge": "judge-1",
                    "setting": "setting1",
                    **{c: "A>B" for c in RUBRIC_CRITERIA},
                    "overall": "B>>A",
                },
                {
                    "question_id": "q2",
                    "model_a": "model-a",
                    "model_b": "model-b",
                    "judge": "judge-1",
                    "setting": "setting1",
                    **{c: "A=B" for c in RUBRIC_CRITERIA},
                    "Style": "",
                    "overall": "A=B",
                },
            ]
        )
        path = tmp_path / "judgments.csv"
        frame.to_csv(path, index=False)
        judgment_set = load_judgments(path)
        assert judgment_set.records[0].overall_verdict is VerdictLabel.MUCH_BETTER_B
        assert judgment_set.records[1].deviation_flags == {"Style"}


class TestWriters:
    def test_write_then_load_preserves_flags(self, tmp_path, make_record):
        records = [
            make_record(question_id="q1", Safety=None),
            make_record(question_id="q2", overall=VerdictLabel.BETTER_B),
        ]
        path = write_judgments(records, tmp_path / "out.jsonl")
        loaded = load_judgments(path)
        assert loaded.records[0].deviation_flags == {"Safety"}
        assert loaded.records[1].overall_verdict is VerdictLabel.BETTER_B

    def test_append_writes_one_complete_line(self, tmp_path, make_record):
        path = tmp_path / "append.jsonl"
        with path.open("a", encoding="utf-8") as handle:
            append_judgment(make_record(question_id="q1"), handle)
            append_judgment(make_record(question_id="q2"), handle)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert [json.loads(line)["question_id"] for line in lines] == ["q1", "q2"]

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        target = write_atomic(tmp_path / "nested" / "report.json", "{}\n")
        assert target.read_text(encoding="utf-8") == "{}\n"
        assert [p.name for p in target.parent.iterdir()] == ["report.json"]

    def test_digest_changes_with_content(self, tmp_path):
        path = tmp_path / "data.jsonl"
        path.write_text("a\n", encoding="utf-8")
        first = file_digest(path)
        path.write_text("b\n", encoding="utf-8")
        assert file_digest(path) != first


class TestCanonicalJson:
    def test_sorted_keys_and_six_significant_digits(self):
        text = canonical_json({"b": 1.0 / 3.0, "a": [np.float64(2.0), None]})
        assert text == '{\n  "a": [\n    2.0,\n    null\n  ],\n  "b": 0.333333\n}\n'

    def test_non_finite_values(self):
        document = json.loads(canonical_json({"x": float("inf"), "y": float("nan")}))
        assert document == {"x": "inf", "y": None}


class TestSampleMatrix:
    def test_all_ties(self, make_record):
        judgment_set = JudgmentSet(records=[make_record(question_id="q1"), make_record("q2")])
        sample = build_sample_matrix(judgment_set)
        assert sample.factors.shape == (2, 5)
        assert np.all(sample.factors == 3.0)
        assert np.array_equal(sample.overall, [3.0, 3.0])

    def test_much_better_b_maps_to_five(self, make_record):
        record = make_record(Correctness=VerdictLabel.MUCH_BETTER_B)
        sample = build_sample_matrix(JudgmentSet(records=[record]))
        assert sample.factors[0, RUBRIC_CRITERIA.index("Correctness")] == 5.0

    def test_flagged_cell_reads_as_tie_and_is_not_imputed(self, make_record):
        record = make_record(Style=None)
        sample = build_sample_matrix(JudgmentSet(records=[record]))
        style = RUBRIC_CRITERIA.index("Style")
        assert sample.factors[0, style] == 3.0
        assert not sample.imputed_mask.any()
        assert sample.deviation_mask[0, style]

    def test_without_deviations_drops_flagged_rows(self, make_record):
        judgment_set = JudgmentSet(records=[make_record("q1", Style=None), make_record("q2")])
        kept = without_deviations(build_sample_matrix(judgment_set))
        assert kept.question_ids == ("q2",)

    def test_observation_ids_key_the_series(self, make_record):
        sample = build_sample_matrix(JudgmentSet(records=[make_record("q1")]))
        assert sample.observation_ids == ("model-a|model-b|judge-1",)

    def test_empty_set(self):
        with pytest.raises(InputError):
            build_sample_matrix(JudgmentSet(records=[]))
