"""Command-line interface.

Subcommands: run (train once and persist a record), sweep (train a
regularization-weight grid), gradcheck (finite-difference verification
of the whole zoo), analyze (statistics over a record directory), and
report (render summary tables).

Exit codes: 0 success, 1 validation or configuration error, 2 runtime
divergence or a failed numerical check, 3 I/O or parse failure.

Settings resolve in precedence order: built-in defaults, then the
config file, then the ACTREG_SEED environment variable (seed only),
then explicit flags.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import analyze_records, parameter_count_table
from .datasets import DatasetHandle, load_idx_dataset, synth_blobs
from .errors import NonFiniteError, ParseError, ValidationError
from .models import ModelSpec, build_model, forward_traced
from .objective import activation_energy, regularized_loss
from .records import load_records, save_record
from .rng import make_generator
from .sweep import DEFAULT_LAMBDAS, load_sweep, run_lambda_sweep, save_sweep
from .tensor import grad_check, softmax_cross_entropy
from .training import RunConfig, train

SEED_ENV = "ACTREG_SEED"

# Config-file keys, their types, and run defaults. Flags use the same
# names with dashes; the telemetry pair keeps its dotted form in files.
_DEFAULTS: dict[str, object] = {
    "arch": "mlp", "hidden_dim": 64, "glia_ratio": None, "dense_dim": 128,
    "conv_channels": (8, 16), "dataset": "synth", "dataset_name": None,
    "data_dir": None, "classes": 4, "feature_dim": 32, "per_class": 250,
    "separation": 1.0, "dataset_seed": 7, "lr": 1e-3, "batch_size": 32,
    "max_epochs": 50, "patience": 10, "weight_decay": 1e-5, "lambda": 0.0,
    "seed": 42, "val_fraction": 0.1, "records_dir": "records",
    "telemetry.command": None, "telemetry.hz": 1.0,
}

_TYPES: dict[str, object] = {
    "arch": str, "hidden_dim": int, "glia_ratio": float, "dense_dim": int,
    "conv_channels": "int_pair", "dataset": str, "dataset_name": str,
    "data_dir": str, "classes": int, "feature_dim": int, "per_class": int,
    "separation": float, "dataset_seed": int, "lr": float, "batch_size": int,
    "max_epochs": int, "patience": int, "weight_decay": float, "lambda": float,
    "seed": int, "val_fraction": float, "records_dir": str,
    "telemetry.command": str, "telemetry.hz": float,
}


def _coerce(key: str, raw: str):
    kind = _TYPES[key]
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "int_pair":
            parts = [int(p) for p in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("expected two integers")
            return tuple(parts)
    except ValueError as exc:
        raise ValidationError(f"config key {key!r}: {exc}") from None
    return raw


def parse_config(path) -> dict[str, object]:
    """Read a flat ``key = value`` config file; # starts a comment."""
    settings: dict[str, object] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ValidationError(f"unknown config key {key!r} "
                                  f"(line {lineno})")
        settings[key] = _coerce(key, value)
    return settings


def _resolve_settings(args: argparse.Namespace) -> dict[str, object]:
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        settings.update(parse_config(args.config))
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            settings["seed"] = int(env_seed)
        except ValueError:
            raise ValidationError(f"{SEED_ENV} must be an integer, "
                                  f"got {env_seed!r}") from None
    for key in _TYPES:
        flag = key.replace(".", "_")
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = value
    return settings


def _make_dataset(s: dict[str, object]) -> DatasetHandle:
    if s["dataset"] == "synth":
        return synth_blobs(s["classes"], s["feature_dim"], s["per_class"],
                           s["separation"], s["dataset_seed"],
                           name=s["dataset_name"] or "synth")
    if s["dataset"] in ("mnist", "idx"):
        if not s["data_dir"]:
            raise ValidationError("data_dir is required for IDX datasets")
        return load_idx_dataset(s["data_dir"],
                                name=s["dataset_name"] or str(s["dataset"]))
    raise ValidationError(f"unknown dataset {s['dataset']!r}; expected "
                          f"synth, mnist, or idx")


def _make_spec(s: dict[str, object], data: DatasetHandle) -> ModelSpec:
    glia = s["glia_ratio"]
    if s["arch"] == "bimodal" and glia is None:
        glia = 1.0
    return ModelSpec(s["arch"], data.input_dim, s["hidden_dim"], data.classes,
                     glia_ratio=glia if s["arch"] == "bimodal" else None,
                     conv_channels=tuple(s["conv_channels"]),
                     dense_dim=s["dense_dim"])


def _add_setting_flags(p: argparse.ArgumentParser, keys) -> None:
    for key in keys:
        kind = _TYPES[key]
        flag = "--" + key.replace(".", "-").replace("_", "-")
        dest = key.replace(".", "_")
        if kind in (int, float):
            p.add_argument(flag, dest=dest, type=kind, default=None)
        elif kind == "int_pair":
            p.add_argument(flag, dest=dest, default=None,
                           type=lambda raw: _coerce("conv_channels", raw))
        else:
            p.add_argument(flag, dest=dest, default=None)


def cmd_run(args: argparse.Namespace) -> int:
    s = _resolve_settings(args)
    data = _make_dataset(s)
    spec = _make_spec(s, data)
    config = RunConfig(model=spec, lr=s["lr"], batch_size=s["batch_size"],
                       max_epochs=s["max_epochs"], patience=s["patience"],
                       weight_decay=s["weight_decay"], lam=s["lambda"],
                       seed=s["seed"], val_fraction=s["val_fraction"],
                       telemetry_command=s["telemetry.command"],
                       telemetry_hz=s["telemetry.hz"])
    _, record = train(config, data)
    path = save_record(record, s["records_dir"])
    if record.status != "ok":
        print(f"run diverged after {record.epochs_run} epochs; record: {path}",
              file=sys.stderr)
        return 2
    acc = record.test_accuracy * 100
    epc = ("-" if record.energy_mj_per_correct is None
           else f"{record.energy_mj_per_correct:.3f}")
    print(f"{record.architecture} on {record.dataset}: accuracy {acc:.2f}%, "
          f"test loss {record.test_loss:.4f}, activation energy "
          f"{record.activation_energy:.4g}, energy/correct {epc} mJ, "
          f"{record.epochs_run} epochs")
    print(f"record: {path}")
    return 0


def _parse_floats(raw: str) -> list[float]:
    try:
        return [float(p) for p in raw.split(",") if p.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad number list {raw!r}: {exc}") from None


def _parse_ints(raw: str) -> list[int]:
    try:
        return [int(p) for p in raw.split(",") if p.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad integer list {raw!r}: {exc}") from None


def cmd_sweep(args: argparse.Namespace) -> int:
    s = _resolve_settings(args)
    data = _make_dataset(s)
    template = _make_spec(s, data)
    lambdas = _parse_floats(args.lambdas) if args.lambdas else DEFAULT_LAMBDAS
    seeds = _parse_ints(args.seeds) if args.seeds else [42, 123, 456]
    cell_records = [] if args.records_dir_out else None
    report = run_lambda_sweep(
        data, template, lambdas, seeds, lr=s["lr"],
        batch_size=s["batch_size"], epochs=args.epochs,
        weight_decay=s["weight_decay"], records=cell_records)
    print(report.render_table())
    if report.failed:
        print(f"{len(report.failed)} cell(s) diverged and were excluded",
              file=sys.stderr)
    if args.out:
        path = save_sweep(report, args.out)
        print(f"sweep report: {path}")
    if cell_records:
        # one subdirectory per lambda: the record filename itself only
        # carries arch/dataset/width/seed, so cells would collide
        for record in cell_records:
            save_record(record, Path(args.records_dir_out) / f"lam_{record.lam:g}")
        print(f"cell records: {args.records_dir_out}")
    return 0


GRADCHECK_LAMBDAS = (0.0, 1e-3, 1e-1)


def gradcheck_zoo(input_dim: int = 16, hidden_dim: int = 12,
                  output_dim: int = 4, batch: int = 4,
                  lambdas=GRADCHECK_LAMBDAS, perturbation: float = 1e-6,
                  seed: int = 7) -> list[tuple[str, float, float]]:
    """Finite-difference check of every architecture at desk scale.

    Returns (architecture, lam, max relative error) triples covering
    the full objective: cross-entropy plus lam times the energy term.
    """
    gen = make_generator(seed)
    x = gen.normal(size=(batch, input_dim))
    y = gen.integers(0, output_dim, size=batch)
    specs = [
        ModelSpec("bimodal", input_dim, hidden_dim, output_dim, glia_ratio=1.0),
        ModelSpec("physics", input_dim, hidden_dim, output_dim),
        ModelSpec("mlp", input_dim, hidden_dim, output_dim),
        ModelSpec("cnn", input_dim, hidden_dim, output_dim,
                  conv_channels=(4, 8), dense_dim=16),
    ]
    results = []
    for spec in specs:
        for lam in lambdas:
            model = build_model(spec, gen)
            def loss_fn():
                trace = forward_traced(model, x)
                ce = softmax_cross_entropy(trace.logits, y)
                return regularized_loss(ce, activation_energy(trace), lam)
            err = grad_check(loss_fn, model.parameters(),
                             perturbation=perturbation, rng=gen)
            results.append((spec.arch, lam, err))
    return results


def cmd_gradcheck(args: argparse.Namespace) -> int:
    results = gradcheck_zoo(args.input_dim, args.hidden_dim, args.output_dim,
                            args.batch, _parse_floats(args.lambdas),
                            args.perturbation, args.seed)
    worst = 0.0
    for arch, lam, err in results:
        ok = "ok" if err < args.threshold else "FAIL"
        print(f"{arch:8s} lambda={lam:<8g} max rel err {err:.3e}  {ok}")
        worst = max(worst, err)
    print(f"worst relative error {worst:.3e} (threshold {args.threshold:g})")
    return 0 if worst < args.threshold else 2


def cmd_analyze(args: argparse.Namespace) -> int:
    records, issues = load_records(args.records)
    for issue in issues:
        print(f"warning: skipped {issue}", file=sys.stderr)
    tables = analyze_records(records, response=args.response)
    print("\n\n".join(t.to_text() for t in tables))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for t in tables:
            stem = "".join(c if c.isalnum() else "_" for c in t.title).strip("_")
            (out / f"{stem}.csv").write_text(t.to_csv(), encoding="utf-8")
        (out / "summary.txt").write_text(
            "\n\n".join(t.to_text() for t in tables) + "\n", encoding="utf-8")
        print(f"tables written to {out}", file=sys.stderr)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    if args.kind == "params":
        print(parameter_count_table(args.hidden_dim).to_text())
        return 0
    if args.kind == "sweep":
        if not args.infile:
            raise ValidationError("report sweep needs --in FILE")
        report = load_sweep(args.infile)
        print(f"{report.architecture} on {report.dataset}, "
              f"{report.epochs} epochs, seeds {report.seeds}")
        print(report.render_table())
        return 0
    # anova
    if not args.records:
        raise ValidationError("report anova needs --records DIR")
    records, issues = load_records(args.records)
    for issue in issues:
        print(f"warning: skipped {issue}", file=sys.stderr)
    tables = analyze_records(records, response=args.response)
    print(tables[0].to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actreg",
        description="Energy-regularized classifier training and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="train one model and persist its record")
    p_run.add_argument("--config", default=None, help="key = value settings file")
    _add_setting_flags(p_run, _TYPES)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="train a lambda grid and summarize")
    p_sweep.add_argument("--config", default=None)
    p_sweep.add_argument("--lambdas", default=None,
                         help="comma-separated grid, must include 0")
    p_sweep.add_argument("--seeds", default=None, help="comma-separated seeds")
    p_sweep.add_argument("--epochs", type=int, default=5)
    p_sweep.add_argument("--out", default=None, help="write the report JSON here")
    p_sweep.add_argument("--records-dir-out", default=None,
                         help="also save every cell's experiment record")
    _add_setting_flags(p_sweep, [k for k in _TYPES
                                 if k not in ("max_epochs", "patience")])
    p_sweep.set_defaults(func=cmd_sweep)

    p_grad = sub.add_parser("gradcheck",
                            help="finite-difference check of the model zoo")
    p_grad.add_argument("--input-dim", type=int, default=16)
    p_grad.add_argument("--hidden-dim", type=int, default=12)
    p_grad.add_argument("--output-dim", type=int, default=4)
    p_grad.add_argument("--batch", type=int, default=4)
    p_grad.add_argument("--lambdas", default="0,1e-3,1e-1")
    p_grad.add_argument("--perturbation", type=float, default=1e-6)
    p_grad.add_argument("--threshold", type=float, default=1e-4)
    p_grad.add_argument("--seed", type=int, default=7)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_an = sub.add_parser("analyze", help="statistics over a record directory")
    p_an.add_argument("--records", required=True)
    p_an.add_argument("--response", default="test_accuracy")
    p_an.add_argument("--out-dir", default=None,
                      help="write CSV tables and a text summary here")
    p_an.set_defaults(func=cmd_analyze)

    p_rep = sub.add_parser("report", help="render summary tables")
    p_rep.add_argument("kind", choices=("params", "sweep", "anova"))
    p_rep.add_argument("--hidden-dim", type=int, default=1024)
    p_rep.add_argument("--in", dest="infile", default=None)
    p_rep.add_argument("--records", default=None)
    p_rep.add_argument("--response", default="test_accuracy")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
