"""Experiment records: JSON round-trips, filenames, atomic persistence."""

import json
import os

import pytest

from actreg.errors import ParseError, ValidationError
from actreg.records import (ExperimentRecord, load_record, load_records,
                            record_filename, record_from_dict, save_record,
                            validate_record)


def _record(**overrides):
    base = dict(
        architecture="bimodal", dataset="synth", hidden_dim=64, input_dim=32,
        output_dim=4, glia_ratio=1.0, activations=["relu", "tanh"], lr=1e-3,
        batch_size=32, weight_decay=1e-5, lam=0.01, max_epochs=50, patience=10,
        epochs_run=23, seed=42, status="ok", test_accuracy=0.925,
        test_loss=0.31, activation_energy=512.5, energy_mj_total=1234.0,
        energy_mj_per_correct=3.4, training_duration_seconds=12.25,
        hardware="x86_64;Linux;3.10;2.2", param_count=12345)
    base.update(overrides)
    return ExperimentRecord(**base)


def test_round_trip_is_lossless():
    rec = _record()
    back = record_from_dict(rec.to_json_dict())
    assert back == rec


def test_lambda_key_serialization():
    d = _record(lam=0.125).to_json_dict()
    assert d["lambda"] == 0.125
    assert "lam" not in d
    assert record_from_dict(d).lam == 0.125


def test_unknown_keys_survive_round_trip():
    d = _record().to_json_dict()
    d["collector_version"] = "0.9"
    d["室温_c"] = 21.5
    rec = record_from_dict(d)
    assert rec.extra == {"collector_version": "0.9", "室温_c": 21.5}
    again = rec.to_json_dict()
    assert again["collector_version"] == "0.9"
    assert record_from_dict(again) == rec


def test_required_fields_enforced():
    d = _record().to_json_dict()
    del d["test_accuracy"]
    with pytest.raises(ParseError, match="test_accuracy"):
        record_from_dict(d)
    with pytest.raises(ParseError):
        record_from_dict({"architecture": "mlp"})


def test_type_errors_are_reported():
    d = _record().to_json_dict()
    d["seed"] = "forty-two"
    with pytest.raises(ParseError, match="seed"):
        record_from_dict(d)
    d = _record().to_json_dict()
    d["seed"] = True  # bool is not an acceptable integer
    with pytest.raises(ParseError, match="seed"):
        record_from_dict(d)


def test_validate_rejects_bad_status_and_nonfinite():
    with pytest.raises(ValidationError, match="status"):
        validate_record(_record(status="exploded"))
    with pytest.raises(ValidationError):
        validate_record(_record(test_accuracy=float("nan")))
    # a diverged run carries null metrics and must be acceptable
    validate_record(_record(status="diverged", test_accuracy=None,
                            test_loss=None, activation_energy=None,
                            energy_mj_total=None, energy_mj_per_correct=None))


def test_filename_pattern():
    assert record_filename(_record()) == "bimodal_synth_h64_g1.0_seed42.json"
    plain = _record(architecture="mlp", glia_ratio=None)
    assert record_filename(plain) == "mlp_synth_h64_seed42.json"
    frac = _record(glia_ratio=0.25)
    assert record_filename(frac) == "bimodal_synth_h64_g0.25_seed42.json"


def test_save_and_load(tmp_path):
    rec = _record()
    path = save_record(rec, tmp_path / "records")
    assert path.name == record_filename(rec)
    assert load_record(path) == rec
    # file is valid, human-readable json
    raw = json.loads(path.read_text())
    assert raw["lambda"] == rec.lam


def test_save_leaves_no_temp_files_behind(tmp_path):
    save_record(_record(), tmp_path)
    save_record(_record(seed=43), tmp_path)
    names = sorted(os.listdir(tmp_path))
    assert names == ["bimodal_synth_h64_g1.0_seed42.json",
                     "bimodal_synth_h64_g1.0_seed43.json"]


def test_save_refuses_invalid_record(tmp_path):
    with pytest.raises(ValidationError):
        save_record(_record(status="weird"), tmp_path)
    assert os.listdir(tmp_path) == []


def test_load_records_skips_malformed(tmp_path):
    save_record(_record(seed=1), tmp_path)
    save_record(_record(seed=2), tmp_path)
    (tmp_path / "broken.json").write_text("{not json")
    (tmp_path / "incomplete.json").write_text('{"architecture": "mlp"}')
    records, issues = load_records(tmp_path)
    assert len(records) == 2
    assert len(issues) == 2
    assert any("broken.json" in msg for msg in issues)
    assert any("incomplete.json" in msg for msg in issues)


def test_load_records_requires_directory(tmp_path):
    with pytest.raises(ValidationError):
        load_records(tmp_path / "missing")
