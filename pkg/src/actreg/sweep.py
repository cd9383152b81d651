"""Regularization-weight sweep: train a grid, compare energies.

Each cell of the grid (one lam value, one seed) is an ordinary harness
run, so the lam = 0 baseline cells are bit-identical to plain training
under the same seeds. Per-lam aggregates are means over the seeds that
finished; failed cells are excluded and reported. Relative energy is a
cell's mean activation energy divided by the lam = 0 mean on the same
dataset.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .datasets import DatasetHandle
from .errors import ParseError, ValidationError
from .models import ModelSpec
from .records import ExperimentRecord
from .training import RunConfig, train


@dataclass(frozen=True)
class SweepCell:
    lam: float
    seed: int
    status: str
    accuracy: float | None
    activation_energy: float | None


@dataclass(frozen=True)
class SweepRow:
    lam: float
    mean_accuracy: float
    mean_energy: float
    relative_energy: float
    seeds_ok: int


@dataclass
class SweepReport:
    dataset: str
    architecture: str
    hidden_dim: int
    epochs: int
    seeds: list[int]
    cells: list[SweepCell] = field(default_factory=list)
    rows: list[SweepRow] = field(default_factory=list)
    failed: list[SweepCell] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return asdict(self)

    def render_table(self) -> str:
        """Aligned text table: one row per regularization weight."""
        headers = ["lambda", "accuracy_pct", "activation_energy", "relative_energy",
                   "seeds_ok"]
        lines = [headers]
        for row in self.rows:
            lines.append([f"{row.lam:g}", f"{row.mean_accuracy * 100:.2f}",
                          f"{row.mean_energy:.4g}", f"{row.relative_energy:.4f}",
                          str(row.seeds_ok)])
        widths = [max(len(line[i]) for line in lines) for i in range(len(headers))]
        rendered = []
        for k, line in enumerate(lines):
            rendered.append("  ".join(cell.rjust(w) for cell, w in zip(line, widths)))
            if k == 0:
                rendered.append("  ".join("-" * w for w in widths))
        return "\n".join(rendered)


def save_sweep(report: SweepReport, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(report.to_json_dict(), indent=2) + "\n",
                 encoding="utf-8")
    return p


def load_sweep(path) -> SweepReport:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        report = SweepReport(
            dataset=raw["dataset"], architecture=raw["architecture"],
            hidden_dim=raw["hidden_dim"], epochs=raw["epochs"],
            seeds=list(raw["seeds"]),
            cells=[SweepCell(**c) for c in raw["cells"]],
            rows=[SweepRow(**r) for r in raw["rows"]],
            failed=[SweepCell(**c) for c in raw["failed"]],
        )
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: not a sweep report: {exc}") from None
    return report


DEFAULT_LAMBDAS = (0.0, 1e-5, 1e-4, 1e-3, 1e-2)


def run_lambda_sweep(data: DatasetHandle, template: ModelSpec,
                     lambdas=DEFAULT_LAMBDAS, seeds=(42, 123, 456), *,
                     lr: float = 1e-3, batch_size: int = 128, epochs: int = 5,
                     weight_decay: float = 0.0,
                     records: list[ExperimentRecord] | None = None,
                     ) -> SweepReport:
    """Train every (lam, seed) cell and aggregate per lam.

    The grid must contain 0 so the relative-energy baseline exists.
    Diverged cells are dropped from the aggregates and listed in
    ``failed``. Pass a list as ``records`` to receive every cell's full
    experiment record.
    """
    lambdas = sorted(set(float(l) for l in lambdas))
    if not lambdas or lambdas[0] != 0.0:
        raise ValidationError("the lambda grid must include 0 for the baseline")
    if any(l < 0 or not np.isfinite(l) for l in lambdas):
        raise ValidationError("lambda values must be finite and >= 0")
    seeds = [int(s) for s in seeds]
    if not seeds or len(set(seeds)) != len(seeds):
        raise ValidationError("seeds must be nonempty and distinct")
    if template.input_dim != data.input_dim or template.output_dim != data.classes:
        template = replace(template, input_dim=data.input_dim,
                           output_dim=data.classes)

    report = SweepReport(dataset=data.name, architecture=template.arch,
                         hidden_dim=template.hidden_dim, epochs=epochs,
                         seeds=seeds)
    by_lam: dict[float, list[SweepCell]] = {l: [] for l in lambdas}
    for lam in lambdas:
        for seed in seeds:
            config = RunConfig(model=template, lr=lr, batch_size=batch_size,
                               max_epochs=epochs, patience=epochs,
                               weight_decay=weight_decay, lam=lam, seed=seed)
            _, record = train(config, data)
            if records is not None:
                records.append(record)
            cell = SweepCell(lam=lam, seed=seed, status=record.status,
                             accuracy=record.test_accuracy,
                             activation_energy=record.activation_energy)
            report.cells.append(cell)
            if record.status == "ok":
                by_lam[lam].append(cell)
            else:
                report.failed.append(cell)

    baseline_cells = by_lam[0.0]
    if not baseline_cells:
        raise ValidationError("every lam = 0 baseline cell failed; no reference "
                              "energy to compare against")
    baseline_energy = float(np.mean([c.activation_energy for c in baseline_cells]))
    if baseline_energy <= 0:
        raise ValidationError("baseline activation energy is zero; relative "
                              "energies are undefined")
    for lam in lambdas:
        ok = by_lam[lam]
        if not ok:
            continue
        mean_acc = float(np.mean([c.accuracy for c in ok]))
        mean_energy = float(np.mean([c.activation_energy for c in ok]))
        report.rows.append(SweepRow(lam=lam, mean_accuracy=mean_acc,
                                    mean_energy=mean_energy,
                                    relative_energy=mean_energy / baseline_energy,
                                    seeds_ok=len(ok)))
    return report
