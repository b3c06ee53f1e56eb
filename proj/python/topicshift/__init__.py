"""Python interface to the topic shift detection core."""

import json
import os

from ._topicshift import (
    Error,
    ParseError,
    ValidationError,
    __version__,
    build_label_target,
    build_topic_target,
    build_turn_target,
    combine_predictions,
    learning_rate_at,
    parse_generated_label,
    serialize_context,
)
from . import _topicshift as _core


def preprocess(dialogues, keyword_provider="frequency", srl_provider="heuristic", lenient=False):
    """Enrich canonical dialogues (dicts) and return example dicts."""
    records = [json.dumps(d, ensure_ascii=False) for d in dialogues]
    return [json.loads(r) for r in _core._preprocess(records, keyword_provider, srl_provider, lenient)]


def synthetic_corpus(dialogues=200, seed=7):
    return [json.loads(r) for r in _core._synthetic_corpus(dialogues, seed)]


def compute_metrics(predictions, golds):
    return json.loads(_core._compute_metrics(list(predictions), list(golds)))


def run_cli(*args):
    """Run a subcommand in-process; returns (exit_code, stdout, stderr)."""
    return _core._run_cli([os.fspath(a) if isinstance(a, os.PathLike) else str(a) for a in args])


class Detector:
    """A trained checkpoint ready for prediction."""

    def __init__(self, checkpoint):
        path = os.fspath(checkpoint)
        if os.path.isdir(path):
            path = os.path.join(path, "best.ckpt")
        self._impl = _core._Detector(path)

    @property
    def language(self):
        return self._impl.language

    def predict(self, context, response, fusion=None):
        return json.loads(self._impl.predict(list(context), response, fusion or ""))


__all__ = [
    "Detector",
    "Error",
    "ParseError",
    "ValidationError",
    "build_label_target",
    "build_topic_target",
    "build_turn_target",
    "combine_predictions",
    "compute_metrics",
    "learning_rate_at",
    "parse_generated_label",
    "preprocess",
    "run_cli",
    "serialize_context",
    "synthetic_corpus",
]
