"""Paths and commands shared across the test modules."""

import sys
from pathlib import Path

TESTS_DIR = Path(__file__).resolve().parent
FIXTURES = TESTS_DIR / "fixtures"
STUB_RUNNER = [sys.executable, str(TESTS_DIR / "stub_runner.py")]
