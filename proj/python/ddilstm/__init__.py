"""Bi-LSTM classifiers for drug-drug interaction extraction.

Instances are plain dicts with the same fields as the JSON-lines instance
files written by ``ddi preprocess``.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, Sequence

from . import _core
from ._core import CorpusError, tokenize

__all__ = [
    "LABELS",
    "CorpusError",
    "CliError",
    "Model",
    "apply_filters",
    "cli",
    "evaluate",
    "mcnemar",
    "predict",
    "preprocess",
    "preprocess_xml",
    "read_instances",
    "tokenize",
    "train",
    "write_instances",
]

LABELS = ("advice", "effect", "mechanism", "int", "negative")


class CliError(RuntimeError):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def cli(*args: str) -> str:
    """Runs one ``ddi`` subcommand in-process and returns its stdout."""
    status, out, err = _core.run_cli([str(a) for a in args])
    if status != 0:
        raise CliError(status, err.strip())
    return out


def preprocess(path: str | os.PathLike) -> list[dict[str, Any]]:
    return json.loads(_core.preprocess(os.fspath(path)))


def preprocess_xml(xml: str) -> list[dict[str, Any]]:
    return json.loads(_core.preprocess_xml(xml))


def read_instances(path: str | os.PathLike) -> list[dict[str, Any]]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_instances(path: str | os.PathLike, instances: Iterable[dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            f.write(json.dumps(inst) + "\n")


def apply_filters(instances: Sequence[dict[str, Any]], mode: str = "train",
                  config: dict[str, Any] | None = None) -> dict[str, Any]:
    """Returns the filter report; ``report["surviving"]`` holds the kept instances."""
    return json.loads(_core.apply_filters(json.dumps(list(instances)), mode,
                                          json.dumps(config) if config else ""))


def evaluate(gold: Sequence[str], predicted: Sequence[str],
             reinserted: Sequence[str] = ()) -> dict[str, Any]:
    return json.loads(_core.evaluate(list(gold), list(predicted), list(reinserted)))


def mcnemar(b: int, c: int) -> dict[str, Any]:
    return json.loads(_core.mcnemar(b, c))


class Model:
    """A checkpoint loaded for inference."""

    def __init__(self, checkpoint: str | os.PathLike):
        self._model = _core.Model(os.fspath(checkpoint))
        self.config = json.loads(self._model.config_json())

    @property
    def vocabulary_size(self) -> int:
        return self._model.vocabulary_size

    def predict(self, instances: Sequence[dict[str, Any]], threads: int = 1) -> list[dict[str, Any]]:
        return json.loads(self._model.predict_json(json.dumps(list(instances)), threads))


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def train(instances: str | os.PathLike, output: str | os.PathLike, config: str | os.PathLike | None = None,
          **flags: Any) -> Model:
    """Trains through ``ddi train`` and returns the resulting checkpoint.

    ``flags`` map onto command-line flags, e.g. ``variant="joint", hidden=150``.
    """
    args = ["train", "-i", os.fspath(instances), "-o", os.fspath(output)]
    if config is not None:
        args += ["--config", os.fspath(config)]
    for key, value in flags.items():
        args += [_flag(key), str(value)]
    cli(*args)
    return Model(output)


def predict(checkpoint: str | os.PathLike, instances: Sequence[dict[str, Any]],
            threads: int = 1) -> list[dict[str, Any]]:
    return Model(checkpoint).predict(instances, threads)
