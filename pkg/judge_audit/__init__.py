"""Reliability audits for LLM-judged benchmarks."""

__version__ = "0.1.0"
