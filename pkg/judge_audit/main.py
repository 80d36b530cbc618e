#!/usr/bin/env python3
"""
judge-audit - Main Entry Point

Run with: python -m judge_audit.main audit judgments.jsonl
"""

from judge_audit.cli import app

if __name__ == "__main__":
    app()
