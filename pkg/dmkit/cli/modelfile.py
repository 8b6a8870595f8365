"""
Model files: UTF-8 JSON descriptions of a loop, or of a plant and controller.

Format:
{
  "name":       "example1",                        (optional)
  "feedback":   "negative",                        (or "positive"; default negative)
  "model":      {"tf":  {"num": [25], "den": [1, 10, 10, 10]}},
  "controller": {"tfm": [[{"num": [-1], "den": [1]}, ...], ...]}   (optional)
}
A representation is exactly one of:
  {"tf":  {"num": [...], "den": [...]}}
  {"tfm": [[{"num": [...], "den": [...]}, ...], ...]}
  {"ss":  {"A": [[...]], "B": [[...]], "C": [[...]], "D": [[...]]}}

Without a controller "model" is the loop L and "feedback" its sign. With a
controller "model" is the plant P and "feedback" is the sign with which the
controller output is fed back (u = -K y for negative, u = +K y for positive).
"""
from __future__ import annotations
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from dmkit.exceptions import DmkitError, ModelFileError
from dmkit.lti import FeedbackSign, LtiModel, StateSpace, TransferFunction
from dmkit.multiloop import Points, loop_at_points

log = logging.getLogger(__name__)

REPRESENTATIONS = ("tf", "tfm", "ss")


@dataclass(frozen=True, eq=False)
class ModelFile:
    model: LtiModel
    controller: LtiModel | None
    feedback: FeedbackSign
    digest: str
    name: str = ""
    path: str = ""

    @property
    def has_controller(self) -> bool:
        return self.controller is not None

    def loop(self) -> LtiModel:
        """Negative-feedback loop L (at the plant input when a controller is given)."""
        if self.controller is None:
            return self.model
        return loop_at_points(self.model, self.controller, Points.INPUT)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _tf(block: Any, where: str) -> TransferFunction:
    if not isinstance(block, dict) or "num" not in block or "den" not in block:
        raise ModelFileError(f"{where}: expected an object with 'num' and 'den'")
    return TransferFunction.of(block["num"], block["den"])


def _representation(block: Any, where: str):
    if not isinstance(block, dict):
        raise ModelFileError(f"{where}: expected an object")
    present = [k for k in REPRESENTATIONS if k in block]
    if len(present) != 1:
        raise ModelFileError(
            f"{where}: exactly one of {', '.join(REPRESENTATIONS)} is required, got {present}")
    kind = present[0]
    body = block[kind]
    if kind == "tf":
        return _tf(body, f"{where}.tf")
    if kind == "tfm":
        if not isinstance(body, list) or not body or not all(isinstance(r, list) for r in body):
            raise ModelFileError(f"{where}.tfm: expected a nonempty list of rows")
        if any(len(r) != len(body[0]) for r in body):
            raise ModelFileError(f"{where}.tfm: rows have different lengths")
        return tuple(tuple(_tf(e, f"{where}.tfm[{i}][{j}]") for j, e in enumerate(row))
                     for i, row in enumerate(body))
    if not isinstance(body, dict) or any(k not in body for k in "ABCD"):
        raise ModelFileError(f"{where}.ss: expected matrices A, B, C and D")
    D = np.atleast_2d(np.asarray(body["D"], dtype=float))
    p, m = D.shape
    A = np.asarray(body["A"], dtype=float)
    n = A.shape[0] if A.size else 0
    B = np.asarray(body["B"], dtype=float).reshape(n, m)
    C = np.asarray(body["C"], dtype=float).reshape(p, n)
    return StateSpace(A.reshape(n, n), B, C, D)


def parse_model(data: dict[str, Any], digest: str = "", path: str = "") -> ModelFile:
    if not isinstance(data, dict) or "model" not in data:
        raise ModelFileError("model file needs a 'model' entry")
    try:
        sign = FeedbackSign(str(data.get("feedback", "negative")).lower())
    except ValueError:
        raise ModelFileError(f"feedback must be 'negative' or 'positive', got {data['feedback']!r}") from None
    try:
        rep = _representation(data["model"], "model")
        ctrl = data.get("controller")
        if ctrl is None:
            return ModelFile(LtiModel.ingest(rep, sign), None, sign, digest,
                             str(data.get("name", "")), path)
        K = LtiModel(_representation(ctrl, "controller"), sign)
        return ModelFile(LtiModel(rep), K, sign, digest, str(data.get("name", "")), path)
    except ModelFileError:
        raise
    except DmkitError as e:
        raise ModelFileError(f"invalid model: {e}") from e
    except (ValueError, TypeError) as e:
        raise ModelFileError(f"invalid model: {e}") from e


def load_model_file(path: str | Path) -> ModelFile:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ModelFileError(f"[modelfile] load failed: {e}") from e
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFileError(f"[modelfile] {path} is not valid UTF-8 JSON: {e}") from e
    digest = hashlib.sha256(raw).hexdigest()
    mf = parse_model(data, digest, str(path))
    log.debug("loaded %s: %r", path, mf.model)
    return mf
