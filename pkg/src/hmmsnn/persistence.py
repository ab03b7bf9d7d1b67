"""
On-disk formats: model files, flat config files and data manifests.

Model files are JSON. Floats are written with ``repr`` so every value
round-trips exactly and save -> load -> save is byte-identical. Numeric
arrays are kept on one line each to keep files diff-able.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from hmmsnn.errors import FormatError, InvalidInputError
from hmmsnn.hmm import HMMModel
from hmmsnn.training import TrainConfig
from hmmsnn.wta import WTANetwork

FORMAT_VERSION = 1
KINDS = ("synthetic", "speech")


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    if not np.isfinite(f):
        raise FormatError(f"cannot store non-finite value {f}")
    return repr(f)


def _emit(obj, indent=0):
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad} {json.dumps(k)}: {_emit(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(isinstance(x, (int, float, np.number)) and not isinstance(x, bool) for x in obj):
            return "[" + ", ".join(_num(x) for x in obj) + "]"
        if not obj:
            return "[]"
        items = [f"{pad} {_emit(x, indent + 1)}" for x in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    return _num(obj)


def network_to_dict(net: WTANetwork) -> dict:
    return {
        "N": net.num_inputs,
        "K": net.num_outputs,
        "eta0": net.eta0,
        "fire_counts": net.fire_counts,
        "bias": net.bias,
        "weights": [row for row in net.weights],
    }


def network_from_dict(d: dict) -> WTANetwork:
    try:
        w = np.array(d["weights"], dtype=np.float64)
        net = WTANetwork(w, d["bias"], d["fire_counts"], d["eta0"])
        n, k = int(d["N"]), int(d["K"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed network record: {exc}") from None
    if (net.num_inputs, net.num_outputs) != (n, k):
        raise FormatError(f"network declares N={n}, K={k} but weights are {w.shape}")
    return net


def model_to_dict(model: HMMModel) -> dict:
    return {
        "label": model.label,
        "self_prob": model.self_prob,
        "advance_prob": model.advance_prob,
        "initial_prob": model.initial_prob,
        "emission": model.emission,
        "log_prior": model.log_prior,
        "states": [network_to_dict(s) for s in model.states],
    }


def model_from_dict(d: dict) -> HMMModel:
    try:
        return HMMModel(
            str(d["label"]),
            [network_from_dict(s) for s in d["states"]],
            self_prob=float(d["self_prob"]),
            advance_prob=float(d["advance_prob"]),
            initial_prob=float(d["initial_prob"]),
            emission=str(d["emission"]),
            log_prior=float(d["log_prior"]),
        )
    except KeyError as exc:
        raise FormatError(f"model record missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise FormatError(f"malformed model record: {exc}") from None


def dumps_models(models, config: TrainConfig, kind: str) -> str:
    if kind not in KINDS:
        raise InvalidInputError(f"kind must be one of {KINDS}")
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": config.as_dict(),
        "models": [model_to_dict(m) for m in models],
    }
    return _emit(doc) + "\n"


def save_models(path, models, config: TrainConfig, kind: str) -> None:
    Path(path).write_text(dumps_models(models, config, kind))


def loads_models(text: str):
    """Parse a model file; returns ``(models, config, kind)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FormatError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(
            f"unsupported model format_version {version!r} (this build reads {FORMAT_VERSION})"
        )
    kind = doc.get("kind")
    if kind not in KINDS:
        raise FormatError(f"unknown model kind {kind!r}")
    try:
        config = TrainConfig.from_dict(doc["config"])
        models = [model_from_dict(m) for m in doc["models"]]
    except KeyError as exc:
        raise FormatError(f"model file missing field {exc}") from None
    except InvalidInputError as exc:
        raise FormatError(f"model file: {exc}") from None
    if not models:
        raise FormatError("model file holds no class models")
    return models, config, kind


def load_models(path):
    return loads_models(Path(path).read_text())


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def read_config(path) -> dict:
    return parse_config_text(Path(path).read_text(), str(path))


def write_config(config: TrainConfig, path) -> None:
    lines = [f"{k} = {v if isinstance(v, str) else _num(v)}" for k, v in config.as_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


MANIFEST = "manifest.json"


def write_manifest(directory, kind: str, items, **extra) -> Path:
    """``items`` are dicts with at least ``label`` and ``file``."""
    path = Path(directory) / MANIFEST
    doc = {"kind": kind, **extra, "items": list(items)}
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def read_manifest(directory):
    """Returns ``(kind, items, doc)``; file paths are resolved against the directory."""
    directory = Path(directory)
    path = directory / MANIFEST if directory.is_dir() else directory
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise FormatError(f"no data manifest at {path}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    kind = doc.get("kind")
    if kind not in KINDS:
        raise FormatError(f"{path}: unknown data kind {kind!r}")
    items = doc.get("items")
    if not isinstance(items, list):
        raise FormatError(f"{path}: 'items' must be a list")
    base = path.parent
    resolved = []
    for i, it in enumerate(items):
        if "label" not in it or "file" not in it:
            raise FormatError(f"{path}: item {i} needs 'label' and 'file'")
        resolved.append({**it, "file": str(base / it["file"])})
    return kind, resolved, doc
