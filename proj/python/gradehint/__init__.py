"""Python access to the gradehint grading and analysis core."""

from __future__ import annotations

import json
import os
from typing import Iterable, Optional, Sequence

from . import _core
from ._core import GradehintError, estimate_tokens, hint_gate, request_parameters

__all__ = [
    "GradehintError",
    "analyze",
    "benjamini_hochberg",
    "estimate_tokens",
    "grade",
    "hint_gate",
    "load_bundle",
    "mann_whitney_u",
    "prompt_for",
    "request_parameters",
    "simulate",
]


def load_bundle(source: os.PathLike | str) -> list[dict]:
    """Assignments of a bundle directory or tar archive, sorted by id."""
    return json.loads(_core.load_bundle(os.fspath(source)))


def grade(bundle: os.PathLike | str, assignment_id: str, code: str) -> dict:
    """Grades `code` with the mock backend: outcome, score, feedback and fault."""
    return json.loads(_core.grade(os.fspath(bundle), assignment_id, code))


def prompt_for(bundle: os.PathLike | str, assignment_id: str, code: str, locale: str = "pl") -> Optional[dict]:
    """The hint prompt a failing submission would produce, or None if it passes."""
    text = _core.prompt_for(os.fspath(bundle), assignment_id, code, locale)
    return None if text is None else json.loads(text)


def mann_whitney_u(a: Sequence[float], b: Sequence[float], exact_max_total: int = 12) -> dict:
    return json.loads(_core.mann_whitney_u(list(a), list(b), exact_max_total))


def benjamini_hochberg(labeled: Iterable[tuple[str, float]], q: float = 0.05) -> list[dict]:
    return json.loads(_core.benjamini_hochberg(list(labeled), q))


def simulate(bundle: os.PathLike | str, log: os.PathLike | str | None = None, students: int = 20, seed: int = 1,
             max_attempts: int = 8) -> dict:
    """Runs a scripted cohort; writes the event log to `log` when given."""
    return json.loads(_core.simulate(os.fspath(bundle), None if log is None else os.fspath(log), students, seed,
                                     max_attempts))


def analyze(log: os.PathLike | str) -> dict[str, str]:
    """Report files computed from an event log, keyed by file name."""
    return dict(_core.analyze(os.fspath(log)))
