"""Experiment configuration: JSON schema, validation and defaults.

A config file is one JSON object::

    {
      "experiment": "tabular",
      "seed": 42,
      "output_dir": "runs/classical",
      "tabular": {"csv_path": "heart_disease.csv", "kernel": "rbf"}
    }

Every field not given takes the default declared on the dataclasses below.
Unknown keys are rejected with a did-you-mean hint.
"""

from __future__ import annotations

import dataclasses
import difflib
import json
import typing
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import ConfigError

TABULAR = "tabular"
IMAGE = "image"
CLASSICAL_KERNELS = ("rbf", "linear", "poly")
KERNELS = CLASSICAL_KERNELS + ("quantum",)


def _opt(default=None, **constraints):
    return field(default=default, metadata=constraints)


def _list(default, **constraints):
    return field(default_factory=lambda: list(default), metadata=constraints)


@dataclass
class FeatureMapConfig:
    kind: str = _opt("angle", choices=("angle", "zz"))
    n_qubits: Optional[int] = _opt(None, min=1, max=20)
    n_layers: Optional[int] = _opt(None, min=1)
    max_qubits: int = _opt(10, min=1, max=20)
    # multiplies the [0, pi]-scaled features before encoding; 1.0 = full range
    bandwidth: float = _opt(0.1, gt=0, max=1.0)


@dataclass
class TabularConfig:
    csv_path: Optional[str] = _opt(None, required=True)
    label_column: str = "HeartDiseaseorAttack"
    class_names: list[str] = _list(["No Heart Disease", "Heart Disease"], length=2)
    train_per_class: int = _opt(500, min=1)
    test_per_class: int = _opt(500, min=1)
    kernel: str = _opt("rbf", choices=KERNELS)
    C: float = _opt(1.0, gt=0)
    tol: float = _opt(1e-3, gt=0)
    max_passes: int = _opt(10, min=1)
    max_sweeps: int = _opt(10_000, min=1)
    gamma: Optional[float] = _opt(None, gt=0)
    degree: int = _opt(3, min=1)
    coef0: float = 0.0
    feature_map: FeatureMapConfig = field(default_factory=FeatureMapConfig)
    gram_cache_dir: Optional[str] = None
    export_gram: bool = False
    memory_cap_mb: int = _opt(1024, min=1)


@dataclass
class QuanvConfig:
    depth: int = _opt(2, min=0)
    seed: int = 42
    stride: int = _opt(2, min=1)


@dataclass
class ImageConfig:
    root: Optional[str] = _opt(None, required=True)
    resolution: int = _opt(28, min=2)
    train_cap: Optional[int] = _opt(None, min=1)
    test_cap: Optional[int] = _opt(None, min=1)
    compare: bool = True
    use_quanv: bool = True
    quanv: QuanvConfig = field(default_factory=QuanvConfig)
    lr: float = _opt(0.01, min=0)
    epochs: int = _opt(10, min=1)
    batch_size: int = _opt(4, min=1)
    output_width: int = _opt(2, min=2)
    hidden: list[int] = _list([], item_min=1)
    cache_dir: Optional[str] = None


@dataclass
class ExperimentConfig:
    experiment: str = _opt(None, required=True, choices=(TABULAR, IMAGE))
    seed: int = 42
    output_dir: str = "runs/latest"
    threads: int = _opt(1, min=1)
    tabular: Optional[TabularConfig] = None
    image: Optional[ImageConfig] = None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


class _Collector:
    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def add(self, path, message):
        self.errors.append((path, message))


def _type_name(tp) -> str:
    return getattr(tp, "__name__", str(tp))


def _coerce(value, tp, path, errs: _Collector):
    """Check ``value`` against the annotation ``tp``; return the coerced value."""
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, args[0], path, errs)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            errs.add(path, f"expected an object, got {type(value).__name__}")
            return None
        return _build(tp, value, path, errs)
    if origin is list:
        (item_tp,) = typing.get_args(tp)
        if not isinstance(value, list):
            errs.add(path, f"expected a list, got {type(value).__name__}")
            return None
        return [_coerce(v, item_tp, f"{path}[{k}]", errs) for k, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            errs.add(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            errs.add(path, f"expected an integer, got {value!r}")
            return None
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errs.add(path, f"expected a number, got {value!r}")
            return None
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            errs.add(path, f"expected a string, got {value!r}")
            return None
        return value
    errs.add(path, f"unsupported type {_type_name(tp)}")
    return None


def _check_constraints(value, meta, path, errs: _Collector):
    if value is None:
        return
    if "choices" in meta and value not in meta["choices"]:
        errs.add(path, f"must be one of {list(meta['choices'])}, got {value!r}")
    if "min" in meta and value < meta["min"]:
        errs.add(path, f"must be >= {meta['min']}, got {value!r}")
    if "max" in meta and value > meta["max"]:
        errs.add(path, f"must be <= {meta['max']}, got {value!r}")
    if "gt" in meta and not value > meta["gt"]:
        errs.add(path, f"must be > {meta['gt']}, got {value!r}")
    if "length" in meta and len(value) != meta["length"]:
        errs.add(path, f"must have exactly {meta['length']} entries, got {len(value)}")
    if "item_min" in meta:
        for k, v in enumerate(value):
            if v is not None and v < meta["item_min"]:
                errs.add(f"{path}[{k}]", f"must be >= {meta['item_min']}, got {v!r}")


def _build(cls, raw: dict, prefix: str, errs: _Collector):
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in fields:
            path = f"{prefix}.{key}" if prefix else key
            close = difflib.get_close_matches(key, list(fields), n=1, cutoff=0.6)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            errs.add(path, f"unknown key {key!r}{hint}")
    kwargs = {}
    for name, f in fields.items():
        path = f"{prefix}.{name}" if prefix else name
        if name in raw:
            value = _coerce(raw[name], hints[name], path, errs)
            _check_constraints(value, f.metadata, path, errs)
            kwargs[name] = value
        elif f.metadata.get("required"):
            errs.add(path, "required field is missing")
    return cls(**kwargs)


def validate_dict(raw: Any) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", field="<root>")
    errs = _Collector()
    cfg = _build(ExperimentConfig, raw, "", errs)
    if cfg is not None and not errs.errors:
        if cfg.experiment == TABULAR:
            if cfg.tabular is None:
                errs.add("tabular", "required section for a tabular experiment")
            if cfg.image is not None:
                errs.add("image", "only one experiment kind per run; drop this section")
        elif cfg.experiment == IMAGE:
            if cfg.image is None:
                errs.add("image", "required section for an image experiment")
            if cfg.tabular is not None:
                errs.add("tabular", "only one experiment kind per run; drop this section")
    if errs.errors:
        lines = [f"{path}: {msg}" for path, msg in errs.errors]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines), field=errs.errors[0][0])
    return cfg


def validate_config(text: str) -> ExperimentConfig:
    """Parse JSON config text, validate every field and fill defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno}, "
                          f"column {exc.colno}", field=f"line {exc.lineno}") from None
    return validate_dict(raw)


def apply_override(raw: dict, assignment: str) -> None:
    """Apply ``dotted.path=value`` to a raw config dict; value is JSON if it parses."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key=value", field=assignment)
    key, text = assignment.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    parts = key.strip().split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r}: {part!r} is not a section", field=key)
    node[parts[-1]] = value
