"""JSON model container.  Floats are written with ``repr`` precision, so a
save/load round trip is bit-exact."""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

import numpy as np

from .model import Hyper, RegressorModel, Widths, buffer_shapes, param_shapes
from .prep import PrepConfig

FORMAT = "epiplan-regressor"
VERSION = 1


class ModelFileError(ValueError):
    pass


class CorruptModelError(ModelFileError):
    pass


class ModelVersionError(ModelFileError):
    pass


class ModelShapeError(ModelFileError):
    pass


def _pack(arrays: dict) -> dict:
    return {k: {"shape": list(v.shape), "values": v.ravel().tolist()} for k, v in arrays.items()}


def model_to_dict(model: RegressorModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        **model.config(),
        "params": _pack(model.params),
        "bn_running_stats": _pack(model.buffers),
    }


def save_model(model: RegressorModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n", encoding="utf-8")


def _unpack(blob: dict, expected: dict, what: str) -> dict:
    if set(blob) != set(expected):
        missing = sorted(set(expected) - set(blob))
        extra = sorted(set(blob) - set(expected))
        raise ModelShapeError(f"{what}: missing {missing}, unexpected {extra}")
    out = {}
    for name, shape in expected.items():
        entry = blob[name]
        if tuple(entry["shape"]) != tuple(shape):
            raise ModelShapeError(f"{name}: stored shape {entry['shape']} != expected {list(shape)}")
        values = np.asarray(entry["values"], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise ModelShapeError(f"{name}: {values.size} values for shape {list(shape)}")
        out[name] = values.reshape(shape)
    return out


def _build(cls, data: dict):
    names = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in data.items() if k in names})


def model_from_dict(data: dict) -> RegressorModel:
    if not isinstance(data, dict) or data.get("format") != FORMAT:
        raise CorruptModelError("not a regressor model file")
    if data.get("version") != VERSION:
        raise ModelVersionError(f"model version {data.get('version')} != supported {VERSION}")
    try:
        widths = _build(Widths, data["widths"])
        hyper = _build(Hyper, data["hyper"])
        prep = _build(PrepConfig, data["prep"])
        encoding = dict(data["encoding"])
        params = _unpack(data["params"], param_shapes(widths), "params")
        buffers = _unpack(data["bn_running_stats"], buffer_shapes(widths), "running stats")
    except (KeyError, TypeError) as exc:
        raise CorruptModelError(f"malformed model file: {exc}") from None
    return RegressorModel(widths, hyper, prep, encoding, params, buffers)


def load_model(path) -> RegressorModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModelError(f"{path}: cannot decode model file ({exc})") from None
    return model_from_dict(data)
