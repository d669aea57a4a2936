"""Shared test fixtures."""
from __future__ import annotations

import pytest

from gapprob.precision import DEFAULT_PRECISION, set_precision


@pytest.fixture(autouse=True)
def restore_precision():
    """Commands and presets change the global precision; undo after each test."""
    yield
    set_precision(DEFAULT_PRECISION)
