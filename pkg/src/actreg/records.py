"""Experiment records: one JSON file per training run.

A record captures everything needed to interpret a run: architecture
configuration, hyperparameters, final test metrics, activation energy,
measured energy (null when telemetry was unavailable), duration,
hardware descriptor, and the seed. Unknown keys found in a file are
preserved through a load/save round trip so logs from other tools can
flow through the analysis pipeline unchanged.

Filenames follow {arch}_{dataset}_h{hidden}[_g{glia}]_seed{seed}.json
and writes are atomic (write to a temp file, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ParseError, ValidationError

# Serialized names and required types of every documented field.
# "lambda" is the regularization weight; it is stored under that key
# but lives in the dataclass as "lam" because of the Python keyword.
_SCHEMA: dict[str, tuple[type, ...]] = {
    "architecture": (str,),
    "dataset": (str,),
    "hidden_dim": (int,),
    "input_dim": (int,),
    "output_dim": (int,),
    "glia_ratio": (float, int, type(None)),
    "activations": (list,),
    "lr": (float, int),
    "batch_size": (int,),
    "weight_decay": (float, int),
    "lambda": (float, int),
    "max_epochs": (int,),
    "patience": (int,),
    "epochs_run": (int,),
    "seed": (int,),
    "status": (str,),
    "test_accuracy": (float, int, type(None)),
    "test_loss": (float, int, type(None)),
    "activation_energy": (float, int, type(None)),
    "energy_mj_total": (float, int, type(None)),
    "energy_mj_per_correct": (float, int, type(None)),
    "training_duration_seconds": (float, int),
    "hardware": (str,),
    "param_count": (int,),
}

# The analysis pipeline can work with this subset, so externally
# produced logs missing optional fields still load.
_REQUIRED = ("architecture", "dataset", "seed", "test_accuracy")


@dataclass
class ExperimentRecord:
    architecture: str
    dataset: str
    hidden_dim: int = 0
    input_dim: int = 0
    output_dim: int = 0
    glia_ratio: float | None = None
    activations: list[str] = field(default_factory=list)
    lr: float = 0.0
    batch_size: int = 0
    weight_decay: float = 0.0
    lam: float = 0.0
    max_epochs: int = 0
    patience: int = 0
    epochs_run: int = 0
    seed: int = 0
    status: str = "ok"
    test_accuracy: float | None = None
    test_loss: float | None = None
    activation_energy: float | None = None
    energy_mj_total: float | None = None
    energy_mj_per_correct: float | None = None
    training_duration_seconds: float = 0.0
    hardware: str = ""
    param_count: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    def to_json_dict(self) -> dict[str, Any]:
        out = dict(self.extra)
        for f in fields(self):
            if f.name == "extra":
                continue
            key = "lambda" if f.name == "lam" else f.name
            out[key] = getattr(self, f.name)
        return out


def record_from_dict(raw: dict[str, Any]) -> ExperimentRecord:
    """Build a record from parsed JSON, preserving unknown keys.

    Raises ParseError when a required field is missing or any
    documented field has the wrong type.
    """
    if not isinstance(raw, dict):
        raise ParseError(f"record must be a JSON object, got {type(raw).__name__}")
    for key in _REQUIRED:
        if key not in raw:
            raise ParseError(f"missing required field {key!r}")
    known: dict[str, Any] = {}
    extra: dict[str, Any] = {}
    for key, value in raw.items():
        if key in _SCHEMA:
            if not isinstance(value, _SCHEMA[key]) or isinstance(value, bool):
                raise ParseError(f"field {key!r} has wrong type "
                                 f"{type(value).__name__}")
            known["lam" if key == "lambda" else key] = value
        else:
            extra[key] = value
    return ExperimentRecord(**known, extra=extra)


def validate_record(record: ExperimentRecord) -> None:
    """Check the full documented field list before persisting."""
    raw = record.to_json_dict()
    for key, types in _SCHEMA.items():
        if key not in raw:
            raise ValidationError(f"record is missing field {key!r}")
        if not isinstance(raw[key], types) or isinstance(raw[key], bool):
            raise ValidationError(f"record field {key!r} has wrong type "
                                  f"{type(raw[key]).__name__}")
    if record.status not in ("ok", "diverged"):
        raise ValidationError(f"unknown status {record.status!r}")
    for key in ("test_accuracy", "test_loss", "activation_energy",
                "energy_mj_total", "energy_mj_per_correct",
                "training_duration_seconds"):
        v = raw[key]
        if v is not None and not np.isfinite(v):
            raise ValidationError(f"record field {key!r} is non-finite")


def record_filename(record: ExperimentRecord) -> str:
    glia = ""
    if record.glia_ratio is not None:
        g = record.glia_ratio
        glia = f"_g{g:.1f}" if g == int(g) else f"_g{g:g}"
    return (f"{record.architecture}_{record.dataset}_h{record.hidden_dim}"
            f"{glia}_seed{record.seed}.json")


def save_record(record: ExperimentRecord, directory) -> Path:
    """Validate and atomically write a record; returns the final path."""
    validate_record(record)
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    final = d / record_filename(record)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(record.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, final)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return final


def load_record(path) -> ExperimentRecord:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from None
    try:
        return record_from_dict(raw)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_records(directory) -> tuple[list[ExperimentRecord], list[str]]:
    """Load every .json record under a directory.

    Malformed files are skipped; the second element lists one message
    per skipped file so callers can surface them.
    """
    d = Path(directory)
    if not d.is_dir():
        raise ValidationError(f"{directory} is not a directory")
    records: list[ExperimentRecord] = []
    issues: list[str] = []
    for path in sorted(d.glob("*.json")):
        try:
            records.append(load_record(path))
        except (ParseError, OSError) as exc:
            issues.append(str(exc))
    return records, issues
