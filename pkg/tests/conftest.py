"""Shared loops and plants for the test-suite."""
from __future__ import annotations
import json
from pathlib import Path

import pytest

from dmkit.lti import FeedbackSign, LtiModel, TransferFunction

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "models"

SAT_A = 10.0


def tf(num, den) -> TransferFunction:
    return TransferFunction.of(num, den)


@pytest.fixture
def models_dir() -> Path:
    return MODELS


@pytest.fixture
def example1() -> LtiModel:
    """25 / (s^3 + 10 s^2 + 10 s + 10)."""
    return LtiModel(tf([25], [1, 10, 10, 10]))


@pytest.fixture
def bad_loop() -> LtiModel:
    data = json.loads((MODELS / "badL.json").read_text(encoding="utf-8"))
    body = data["model"]["tf"]
    return LtiModel(tf(body["num"], body["den"]))


@pytest.fixture
def example5() -> LtiModel:
    """6.25 (s+3)(s+5) / (s (s+1)^2 (s^2 + 0.18 s + 100))."""
    return LtiModel(tf([6.25, 50, 93.75], [1, 2.18, 101.36, 200.18, 100, 0]))


@pytest.fixture
def integrator() -> LtiModel:
    return LtiModel(tf([1], [1, 0]))


@pytest.fixture
def satellite_plant() -> LtiModel:
    a = SAT_A
    den = [1, 0, a * a]
    return LtiModel((
        (tf([1, -a * a], den), tf([a, a], den)),
        (tf([-a, -a], den), tf([1, -a * a], den)),
    ))


@pytest.fixture
def satellite_controller() -> LtiModel:
    """K = -I fed back positively, i.e. unity negative feedback."""
    return LtiModel(((tf([-1], [1]), tf([0], [1])),
                     (tf([0], [1]), tf([-1], [1]))), FeedbackSign.POSITIVE)


@pytest.fixture
def write_model(tmp_path):
    """Write a model-file dict to a temp file and return its path."""
    def _write(data: dict, name: str = "model.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)
    return _write
