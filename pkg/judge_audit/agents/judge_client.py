"""OpenAI-compatible judge client.

The only networked code in the package. Requests are retried with exponential backoff on
timeouts, connection failures and server errors. Any 4xx status, rate limits included, is final.
Results are appended to a JSONL file by a single writer as tasks complete.
"""

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import openai
import yaml
from openai import OpenAI
from pydantic import BaseModel, Field, ValidationError

from judge_audit.agents.judge_template import JudgmentTask, render_messages
from judge_audit.config.settings import (
    API_KEY_ENV,
    JUDGE_BASE_URL,
    JUDGE_CONCURRENCY,
    JUDGE_MAX_PROMPT_TOKENS,
    JUDGE_MODEL,
    OVERALL,
    RUBRIC_CRITERIA,
)
from judge_audit.errors import InputError, JudgeRequestError
from judge_audit.judgments.verdicts import VerdictMarker, parse_verdict
from judge_audit.storage.files import append_judgment
from judge_audit.storage.judgment_state import JudgmentRecord

logger = logging.getLogger(__name__)

RETRYABLE_ERRORS = (
    openai.APITimeoutError,
    openai.APIConnectionError,
    openai.InternalServerError,
)


class EndpointConfig(BaseModel):
    base_url: str = JUDGE_BASE_URL
    model: str = JUDGE_MODEL
    api_key_env: str = API_KEY_ENV
    temperature: float = Field(default=0.0, ge=0)
    max_tokens: int = Field(default=4096, gt=0)
    max_retries: int = Field(default=3, ge=0)
    timeout: float = Field(default=120.0, gt=0)
    backoff_seconds: float = Field(default=1.0, ge=0)
    concurrency: int = Field(default=JUDGE_CONCURRENCY, ge=1)
    max_prompt_tokens: int = Field(default=JUDGE_MAX_PROMPT_TOKENS, gt=0)
    reasoning_enabled: bool = False
    # Provider-specific sampling options sent only when reasoning is enabled,
    # e.g. {"reasoning_effort": "high"} or {"extra_body": {"enable_thinking": true}}
    reasoning_params: Dict[str, Any] = Field(default_factory=dict)
    isolated_criteria: bool = False


def _validation_to_input_error(source: str, error: ValidationError) -> InputError:
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"]) or "document"
    return InputError(f"{source}: key '{key}': {first['msg']}")


def load_endpoint(path: str | Path) -> EndpointConfig:
    """Endpoint settings from YAML; the API key itself is never read from the file."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"endpoint config not found: {path}")
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise InputError(f"{path}: malformed YAML: {e}") from e
    if not isinstance(document, dict):
        raise InputError(f"{path}: expected a mapping at the top level")
    if "api_key" in document:
        raise InputError(f"{path}: key 'api_key' is not allowed; set api_key_env instead")
    try:
        return EndpointConfig(**document)
    except ValidationError as e:
        raise _validation_to_input_error(str(path), e) from e


def make_client(endpoint: EndpointConfig) -> OpenAI:
    api_key = os.getenv(endpoint.api_key_env)
    if not api_key:
        raise InputError(f"environment variable {endpoint.api_key_env} is not set")
    # Retries are handled here, not by the SDK
    return OpenAI(
        base_url=endpoint.base_url, api_key=api_key, timeout=endpoint.timeout, max_retries=0
    )


@dataclass
class TokenCounter:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    requests: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add(self, usage: Any) -> None:
        with self._lock:
            self.requests += 1
            if usage is None:
                return
            self.prompt_tokens += int(getattr(usage, "prompt_tokens", 0) or 0)
            self.completion_tokens += int(getattr(usage, "completion_tokens", 0) or 0)

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens


def _complete(
    client: OpenAI,
    endpoint: EndpointConfig,
    messages: List[Dict[str, str]],
    task: JudgmentTask,
    counter: Optional[TokenCounter],
    sleep: Callable[[float], None],
) -> str:
    extra = endpoint.reasoning_params if endpoint.reasoning_enabled else {}
    identity = f"question {task.question_id} ({task.model_a} vs {task.model_b})"
    for attempt in range(endpoint.max_retries + 1):
        try:
            response = client.chat.completions.create(
                model=endpoint.model,
                messages=messages,
                temperature=endpoint.temperature,
                max_tokens=endpoint.max_tokens,
                **extra,
            )
        except RETRYABLE_ERRORS as e:
            if attempt == endpoint.max_retries:
                raise JudgeRequestError(
                    f"{identity}: giving up after {attempt + 1} attempts: {e}"
                ) from e
            delay = endpoint.backoff_seconds * 2**attempt
            logger.warning("%s: %s, retrying in %.1fs", identity, type(e).__name__, delay)
            sleep(delay)
            continue
        except openai.APIStatusError as e:
            raise JudgeRequestError(f"{identity}: HTTP {e.status_code}: {e.message}") from e

        if counter is not None:
            counter.add(getattr(response, "usage", None))
        return response.choices[0].message.content or ""
    raise JudgeRequestError(f"{identity}: no attempts made")


def parse_judgment(
    task: JudgmentTask, text: str, criteria: Sequence[str] = RUBRIC_CRITERIA
) -> JudgmentRecord:
    """Record from a judge reply; verdicts that cannot be found become deviations."""
    return JudgmentRecord(
        question_id=task.question_id,
        model_a=task.model_a,
        model_b=task.model_b,
        judge=task.judge,
        setting=task.setting,
        factor_verdicts={
            name: parse_verdict(text, VerdictMarker.FACTOR_PARENS, name) for name in criteria
        },
        overall_verdict=parse_verdict(text, VerdictMarker.OVERALL_BRACKETS),
        raw_text=text,
    )


def request_judgment(
    task: JudgmentTask,
    endpoint: EndpointConfig,
    client: Optional[OpenAI] = None,
    counter: Optional[TokenCounter] = None,
    criteria: Sequence[str] = RUBRIC_CRITERIA,
    sleep: Callable[[float], None] = time.sleep,
) -> JudgmentRecord:
    """Judge one task, in a single pass or one prompt per field when isolated."""
    prompts = render_prompts(task, endpoint, criteria)
    client = client or make_client(endpoint)
    replies = [_complete(client, endpoint, m, task, counter, sleep) for m in prompts]
    return parse_judgment(task, "\n\n".join(replies), criteria)


def render_prompts(
    task: JudgmentTask, endpoint: EndpointConfig, criteria: Sequence[str] = RUBRIC_CRITERIA
) -> List[List[Dict[str, str]]]:
    """Every message list one task needs; raises InputError when a prompt is over budget."""
    if endpoint.isolated_criteria:
        fields = [*criteria, OVERALL]
        return [
            render_messages(
                task,
                criteria,
                endpoint.reasoning_enabled,
                criterion=name,
                max_tokens=endpoint.max_prompt_tokens,
            )
            for name in fields
        ]
    return [
        render_messages(
            task, criteria, endpoint.reasoning_enabled, max_tokens=endpoint.max_prompt_tokens
        )
    ]


def load_tasks(path: str | Path) -> List[JudgmentTask]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"task file not found: {path}")
    tasks = []
    with path.open("r", encoding="utf-8") as handle:
        for row_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                tasks.append(JudgmentTask(**json.loads(line)))
            except json.JSONDecodeError as e:
                raise InputError(f"row {row_number}: malformed JSON: {e.msg}") from e
            except ValidationError as e:
                raise _validation_to_input_error(f"row {row_number}", e) from e
    if not tasks:
        raise InputError(f"{path} contains no tasks")
    return tasks


@dataclass
class RunSummary:
    written: int
    failed: List[str]
    tokens: TokenCounter


def run_judgments(
    tasks: Iterable[JudgmentTask],
    endpoint: EndpointConfig,
    out_path: str | Path,
    client: Optional[OpenAI] = None,
    criteria: Sequence[str] = RUBRIC_CRITERIA,
    sleep: Callable[[float], None] = time.sleep,
) -> RunSummary:
    """Judge tasks with at most ``endpoint.concurrency`` requests in flight.

    Completed records are appended to ``out_path`` one full line at a time from this thread.
    Every prompt is checked against the token budget before the first request is sent. Failed
    tasks, over-budget ones included, are reported in the summary and never written.
    """
    client = client or make_client(endpoint)
    counter = TokenCounter()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    written, failed = 0, []

    runnable = []
    for task in tasks:
        try:
            render_prompts(task, endpoint, criteria)
        except InputError as e:
            logger.error("question %s skipped: %s", task.question_id, e)
            failed.append(task.question_id)
            continue
        runnable.append(task)

    with ThreadPoolExecutor(max_workers=endpoint.concurrency) as executor, out_path.open(
        "a", encoding="utf-8"
    ) as handle:
        futures = {
            executor.submit(
                request_judgment, task, endpoint, client, counter, criteria, sleep
            ): task
            for task in runnable
        }
        for future in as_completed(futures):
            task = futures[future]
            try:
                record = future.result()
            except (JudgeRequestError, InputError) as e:
                logger.error("%s", e)
                failed.append(task.question_id)
                continue
            append_judgment(record, handle)
            written += 1

    logger.info(
        "judged %d tasks (%d failed), %d tokens", written, len(failed), counter.total_tokens
    )
    return RunSummary(written=written, failed=failed, tokens=counter)
