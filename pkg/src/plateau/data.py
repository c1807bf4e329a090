"""JSON data files: ``{"hyper": {...}, "arrays": {...}}``."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .runtime.store import build_layouts, coerce_hyper


@dataclass
class DataFile:
    hyper: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"hyper": _plain(self.hyper), "arrays": _plain(self.arrays)}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":")) + "\n"


def parse_data(text: str) -> DataFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"data file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) - {"hyper", "arrays"}:
        raise DataError('data file must be an object with "hyper" and "arrays"')
    hyper, arrays = doc.get("hyper", {}), doc.get("arrays", {})
    if not isinstance(hyper, dict) or not isinstance(arrays, dict):
        raise DataError('"hyper" and "arrays" must be objects')
    for k, v in arrays.items():
        if not isinstance(v, list):
            raise DataError(f"array {k} must be a flat list")
    return DataFile(hyper, arrays)


def read_data(path) -> DataFile:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_data(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc.strerror}") from None


def write_data(path, data: DataFile) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(data.to_json()))


def check_data(model, data: DataFile, observed) -> None:
    """Every hyperparameter present; every observed array present with the
    length its plates imply."""
    hyper = coerce_hyper(model, data.hyper)
    layouts = build_layouts(model, hyper)
    for name in model.var_order:
        if name in observed and name not in data.arrays:
            raise DataError(f"missing array for observed variable {name}")
        if name in data.arrays:
            expected = int(np.prod(layouts[name].shape))
            got = len(data.arrays[name])
            if got != expected:
                raise DataError(f"{name}: expected {expected} values, got {got}")
    for name in data.arrays:
        if name not in model.vars:
            raise DataError(f"array {name} is not a random variable of the model")
