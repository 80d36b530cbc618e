"""
File storage for judge-audit.

This module owns every byte that crosses the disk boundary:
- JSONL / CSV judgment readers and the JSONL writer
- canonical JSON (sorted keys, LF, floats at 6 significant digits)
- atomic writes and input digests
"""

import hashlib
import json
import logging
import math
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Mapping, Optional, Sequence, TextIO

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from judge_audit.config.settings import (
    MAX_INPUT_BYTES,
    OVERALL,
    RUBRIC_CRITERIA,
    SCORE_RANGE,
    SIGNIFICANT_DIGITS,
)
from judge_audit.errors import InputError
from judge_audit.judgments.verdicts import VerdictMarker, parse_verdict
from judge_audit.storage.judgment_state import JudgmentRecord, JudgmentSet, VerdictLabel

logger = logging.getLogger(__name__)

JudgmentFormat = Literal["jsonl", "csv"]

PROVENANCE_FIELDS = ("question_id", "model_a", "model_b", "judge", "setting")
CSV_OPTIONAL_COLUMNS = ("raw_text", "deviation_flags")
CSV_OVERALL_COLUMNS = ("overall", "overall_verdict")


def infer_format(path: Path) -> JudgmentFormat:
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise InputError(f"cannot infer judgment format from '{path.name}'; use .jsonl or .csv")


def _check_readable(path: Path) -> None:
    if not path.is_file():
        raise InputError(f"judgment file not found: {path}")
    size = path.stat().st_size
    if size > MAX_INPUT_BYTES:
        raise InputError(
            f"{path} is {size} bytes, above the {MAX_INPUT_BYTES}-byte limit; "
            "split the file or stream it in chunks with write_judgments"
        )


def _unknown_criterion(row_number: int, name: str, criteria: Sequence[str]) -> InputError:
    return InputError(
        f"row {row_number}: unknown criterion '{name}'; expected one of: {', '.join(criteria)}"
    )


def _resolve_verdict(
    stored: object,
    raw_text: Optional[str],
    marker: VerdictMarker,
    criterion: Optional[str] = None,
) -> Optional[VerdictLabel]:
    label = VerdictLabel.coerce(stored)
    if label is None and raw_text:
        label = parse_verdict(raw_text, marker, criterion)
    return label


def record_from_row(
    row: Mapping[str, Any], row_number: int, criteria: Sequence[str] = RUBRIC_CRITERIA
) -> JudgmentRecord:
    """Build a record from one stored row; absent or unreadable verdicts become deviations."""
    for name in PROVENANCE_FIELDS:
        value = row.get(name)
        if value is None or str(value) == "":
            raise InputError(f"row {row_number}: missing field '{name}'")

    raw_text = row.get("raw_text") or None
    stored_factors = row.get("factor_verdicts") or {}
    if not isinstance(stored_factors, Mapping):
        raise InputError(f"row {row_number}: field 'factor_verdicts' must be an object")
    for name in stored_factors:
        if name not in criteria:
            raise _unknown_criterion(row_number, str(name), criteria)

    factor_verdicts = {
        name: _resolve_verdict(
            stored_factors.get(name), raw_text, VerdictMarker.FACTOR_PARENS, name
        )
        for name in criteria
    }
    overall = _resolve_verdict(
        row.get("overall_verdict"), raw_text, VerdictMarker.OVERALL_BRACKETS
    )
    flags = row.get("deviation_flags") or []
    if isinstance(flags, str):
        flags = [f for f in flags.split(";") if f]

    try:
        return JudgmentRecord(
            question_id=str(row["question_id"]),
            model_a=str(row["model_a"]),
            model_b=str(row["model_b"]),
            judge=str(row["judge"]),
            setting=str(row["setting"]),
            factor_verdicts=factor_verdicts,
            overall_verdict=overall,
            deviation_flags=set(flags),
            raw_text=raw_text,
        )
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"]) or "record"
        raise InputError(f"row {row_number}: field '{field}': {error['msg']}") from e


def record_to_row(record: JudgmentRecord) -> Dict[str, Any]:
    return {
        "question_id": record.question_id,
        "model_a": record.model_a,
        "model_b": record.model_b,
        "judge": record.judge,
        "setting": record.setting,
        "factor_verdicts": {
            name: (verdict.value if verdict is not None else None)
            for name, verdict in record.factor_verdicts.items()
        },
        "overall_verdict": record.overall_verdict.value if record.overall_verdict else None,
        "deviation_flags": sorted(record.deviation_flags),
        "raw_text": record.raw_text,
    }


def _read_jsonl(path: Path, criteria: Sequence[str]) -> List[JudgmentRecord]:
    records = []
    with path.open("r", encoding="utf-8") as handle:
        for row_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise InputError(f"row {row_number}: malformed JSON: {e.msg}") from e
            if not isinstance(row, dict):
                raise InputError(f"row {row_number}: expected a JSON object")
            records.append(record_from_row(row, row_number, criteria))
    return records


def _read_csv(path: Path, criteria: Sequence[str]) -> List[JudgmentRecord]:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise InputError(f"{path} is empty") from e
    except pd.errors.ParserError as e:
        raise InputError(f"{path}: malformed CSV: {e}") from e

    known = set(PROVENANCE_FIELDS) | set(CSV_OPTIONAL_COLUMNS) | set(CSV_OVERALL_COLUMNS)
    for column in frame.columns:
        if column not in known and column not in criteria:
            raise _unknown_criterion(1, column, criteria)
    overall_column = next((c for c in CSV_OVERALL_COLUMNS if c in frame.columns), None)

    records = []
    # Header is row 1
    for offset, row in enumerate(frame.to_dict(orient="records"), start=2):
        stored = {
            **{name: row.get(name) for name in PROVENANCE_FIELDS},
            "factor_verdicts": {c: row[c] for c in criteria if c in row and row[c] != ""},
            "overall_verdict": row.get(overall_column) if overall_column else None,
            "raw_text": row.get("raw_text") or None,
            "deviation_flags": row.get("deviation_flags") or [],
        }
        records.append(record_from_row(stored, offset, criteria))
    return records


def load_judgments(
    path: str | Path,
    fmt: Optional[JudgmentFormat] = None,
    criteria: Sequence[str] = RUBRIC_CRITERIA,
    score_range: float = SCORE_RANGE,
) -> JudgmentSet:
    """Read a JSONL or CSV judgment file into a validated JudgmentSet."""
    path = Path(path)
    _check_readable(path)
    fmt = fmt or infer_format(path)
    try:
        records = _read_jsonl(path, criteria) if fmt == "jsonl" else _read_csv(path, criteria)
    except UnicodeDecodeError as e:
        raise InputError(f"{path} is not valid UTF-8: {e.reason}") from e
    if not records:
        raise InputError(f"{path} contains no judgment records")

    flagged = sum(len(r.deviation_flags) for r in records)
    logger.info("loaded %d judgments from %s (%d flagged fields)", len(records), path, flagged)
    return JudgmentSet(records=records, criteria=tuple(criteria), score_range=score_range)


def append_judgment(record: JudgmentRecord, handle: TextIO) -> None:
    """Write one record as a single complete line."""
    handle.write(json.dumps(record_to_row(record), ensure_ascii=False, sort_keys=True) + "\n")
    handle.flush()


def write_judgments(records: Iterable[JudgmentRecord], path: str | Path) -> Path:
    lines = [
        json.dumps(record_to_row(r), ensure_ascii=False, sort_keys=True) + "\n" for r in records
    ]
    return write_atomic(path, "".join(lines))


def _round_float(value: float) -> Any:
    if math.isnan(value):
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    rounded = float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if rounded == 0 else rounded


def canonicalize(value: Any) -> Any:
    """Reduce a report object to plain JSON types with deterministic floats."""
    if isinstance(value, BaseModel):
        return canonicalize(value.model_dump(mode="python"))
    if isinstance(value, Enum):
        return canonicalize(value.value)
    if isinstance(value, Mapping):
        return {str(k): canonicalize(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return [canonicalize(v) for v in sorted(value)]
    if isinstance(value, np.ndarray):
        return canonicalize(value.tolist())
    if isinstance(value, (list, tuple)):
        return [canonicalize(v) for v in value]
    if isinstance(value, np.generic):
        return canonicalize(value.item())
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return _round_float(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def canonical_json(value: Any) -> str:
    return json.dumps(canonicalize(value), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_atomic(path: str | Path, text: str) -> Path:
    """Write text through a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


def write_frame(frame: pd.DataFrame, path: str | Path) -> Path:
    text = frame.to_csv(index=False, lineterminator="\n", float_format=f"%.{SIGNIFICANT_DIGITS}g")
    return write_atomic(path, text)


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
