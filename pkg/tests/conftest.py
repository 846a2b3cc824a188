"""
Shared fixtures: frozen reference outputs under data/golden/.
"""
import os

import pytest

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), '..', 'data', 'golden')


@pytest.fixture
def golden():
    """Compare text with data/golden/<name>; a missing file is written once and the test skipped."""
    def check(name: str, text: str) -> None:
        path = os.path.join(GOLDEN_DIR, name)
        if not os.path.exists(path):
            os.makedirs(GOLDEN_DIR, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            pytest.skip(f"froze {name}; rerun to compare")
        with open(path, encoding="utf-8", newline="") as fh:
            assert fh.read() == text, f"output differs from data/golden/{name}"
    return check
