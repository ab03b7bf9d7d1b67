import json

import pytest

from hmmsnn.errors import FormatError
from hmmsnn.persistence import (
    dumps_models,
    loads_models,
    parse_config_text,
    read_manifest,
    write_config,
    read_config,
    write_manifest,
)
from hmmsnn.synthetic import make_sequence
from hmmsnn.training import TrainConfig, train_models, with_log_priors


@pytest.fixture(scope="module")
def saved():
    cfg = TrainConfig.synthetic(iterations=2)
    models = train_models({"ABCD": [make_sequence("ABCD", 0)], "DCBA": [make_sequence("DCBA", 1)]}, cfg)
    models = with_log_priors(models, [0.0, -1.0 / 3.0])
    return models, cfg, dumps_models(models, cfg, "synthetic")


def test_round_trip_is_byte_identical(saved):
    models, cfg, text = saved
    back, cfg2, kind = loads_models(text)
    assert kind == "synthetic" and cfg2 == cfg
    assert dumps_models(back, cfg2, kind) == text
    for a, b in zip(models, back):
        assert a.label == b.label and a.log_prior == b.log_prior and a.emission == b.emission
        assert all(x == y for x, y in zip(a.states, b.states))


def test_file_is_plain_json_with_full_precision(saved):
    _, _, text = saved
    doc = json.loads(text)
    assert doc["format_version"] == 1
    w = doc["models"][0]["states"][0]["weights"]
    assert len(w) == 8 and len(w[0]) == 80
    assert doc["models"][1]["log_prior"] == -1.0 / 3.0


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d.update(format_version=2), "format_version"),
        (lambda d: d.update(kind="audio"), "kind"),
        (lambda d: d.pop("config"), "config"),
        (lambda d: d.update(models=[]), "no class models"),
        (lambda d: d["models"][0]["states"][0].update(K=7), "K=7"),
        (lambda d: d["models"][0].pop("emission"), "emission"),
        (lambda d: d["config"].update(P="four"), "P"),
    ],
)
def test_bad_model_files(saved, mutate, message):
    doc = json.loads(saved[2])
    mutate(doc)
    with pytest.raises(FormatError, match=message):
        loads_models(json.dumps(doc))


def test_not_json():
    with pytest.raises(FormatError):
        loads_models("format_version 1")


def test_config_text(tmp_path):
    parsed = parse_config_text("# comment\nP = 3\n\nemission=normalized  # trailing\n")
    assert parsed == {"P": "3", "emission": "normalized"}
    with pytest.raises(FormatError, match="line 1|:1:"):
        parse_config_text("P 3")
    cfg = TrainConfig.speech(eta0=0.25)
    write_config(cfg, tmp_path / "c.cfg")
    assert TrainConfig.from_dict(read_config(tmp_path / "c.cfg")) == cfg


def test_manifest_round_trip(tmp_path):
    write_manifest(tmp_path, "speech", [{"label": "one", "file": "a.wav", "seed": 3}], words=["one"])
    kind, items, doc = read_manifest(tmp_path)
    assert kind == "speech" and doc["words"] == ["one"]
    assert items[0]["file"] == str(tmp_path / "a.wav") and items[0]["seed"] == 3


@pytest.mark.parametrize(
    "text", ["{", '{"kind": "video", "items": []}', '{"kind": "speech"}', '{"kind": "speech", "items": [{"file": "x"}]}']
)
def test_bad_manifests(tmp_path, text):
    (tmp_path / "manifest.json").write_text(text)
    with pytest.raises(FormatError):
        read_manifest(tmp_path)


def test_missing_manifest(tmp_path):
    with pytest.raises(FormatError):
        read_manifest(tmp_path)
