"""One JSON config for every command, loaded into the nested parameter dataclasses."""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .modular.pipeline import PipelineParams
from .synthgen.generate import SynthConfig


@dataclass(frozen=True)
class PidConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    pipeline: PipelineParams = field(default_factory=PipelineParams)
    templates_dir: str | None = None
    structural_box: float = 32.0
    set_name: str = "train"
    iou_thr: float = 0.5
    min_giou: float | None = None

    @property
    def patch_size(self) -> tuple[int, int] | None:
        return self.pipeline.patch_size


def _tupleize(v: Any) -> Any:
    if isinstance(v, list):
        return tuple(_tupleize(x) for x in v)
    return v


def from_dict(cls: type, data: dict[str, Any]) -> Any:
    """Build dataclass ``cls`` from a (partial) mapping; absent keys keep their defaults."""
    if not isinstance(data, dict):
        raise ValueError(f"{cls.__name__}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValueError(f"{cls.__name__}: unknown keys {unknown}")
    kwargs = {}
    for name, value in data.items():
        hint = hints[name]
        if dataclasses.is_dataclass(hint):
            kwargs[name] = from_dict(hint, value)
        else:
            kwargs[name] = _tupleize(value)
    return cls(**kwargs)


def to_dict(cfg: Any) -> dict[str, Any]:
    return dataclasses.asdict(cfg)


def merge(base: dict[str, Any], over: dict[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for k, v in over.items():
        out[k] = merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> PidConfig:
    """Defaults, then the JSON file (if any), then ``overrides``, merged key by key."""
    data: dict[str, Any] = {}
    if path is not None:
        data = json.loads(Path(path).read_text())
    if overrides:
        data = merge(data, overrides)
    return from_dict(PidConfig, data)
