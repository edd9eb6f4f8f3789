"""Experiment configs, result records and output files."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import subprocess
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .walks import ConfigError, StepDistribution, check_nonelementary

SCHEMA_VERSION = 1
MODELS = ("tree", "f2z2")
ESTIMATORS = ("drift", "tail", "persistence", "hitting", "decay", "translation",
              "tracking", "midpoint", "strips")

_STEP = {
    "type": "object",
    "required": ["support"],
    "properties": {
        "support": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["word", "p"],
                "properties": {"word": {"type": "string"}, "p": {"type": "number", "exclusiveMinimum": 0}},
                "additionalProperties": False,
            },
        }
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["estimator", "seed", "trials"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {"enum": list(MODELS)},
        "rank": {"type": "integer", "minimum": 1, "maximum": 26},
        "step": _STEP,
        "estimator": {"enum": list(ESTIMATORS)},
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
    },
    "additionalProperties": False,
}

# per-estimator required parameters (all integers unless noted)
PARAM_SCHEMAS = {
    "drift": {"required": ["n"]},
    "tail": {"required": ["ns", "L"]},
    "persistence": {"required": ["n"]},
    "hitting": {"required": ["horizon", "base", "center", "R"]},
    "decay": {"required": ["r1", "r2"]},
    "translation": {"required": ["n", "L"]},
    "tracking": {"required": ["n"]},
    "midpoint": {"required": ["n"]},
    "strips": {"required": ["n", "K", "R", "v"]},
}

NONELEMENTARY_REQUIRED = {"drift", "persistence", "tracking", "strips"}


@dataclass(frozen=True)
class ExperimentConfig:
    estimator: str
    seed: int
    trials: int
    step: StepDistribution
    params: dict = field(default_factory=dict)
    model: str = "tree"
    rank: int = 2
    output: Optional[str] = None

    def canonical(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "model": self.model,
            "rank": self.rank,
            "step": self.step.to_json(),
            "estimator": self.estimator,
            "params": self.params,
            "seed": self.seed,
            "trials": self.trials,
        }

    def digest(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def load_config(obj: dict, seed: Optional[int] = None) -> ExperimentConfig:
    """Validate a config dict; raises ConfigError with the schema message."""
    try:
        jsonschema.validate(obj, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    est = obj["estimator"]
    params = dict(obj.get("params", {}))
    missing = [k for k in PARAM_SCHEMAS[est]["required"] if k not in params]
    if missing:
        raise ConfigError(f"params: estimator {est!r} needs {', '.join(missing)}")
    model = obj.get("model", "tree")
    rank = obj.get("rank", 2)
    step = (StepDistribution.from_json(obj["step"], central=model == "f2z2")
            if "step" in obj else StepDistribution.uniform(rank))
    if model == "f2z2" and est not in ("drift", "tail", "translation"):
        raise ConfigError(f"estimator {est!r} is not available on the f2z2 model")
    if est in NONELEMENTARY_REQUIRED and not params.get("allow_elementary", False):
        if not check_nonelementary(step, int(params.get("search_len", 3))):
            raise ConfigError(f"estimator {est!r} needs a non-elementary step distribution")
    return ExperimentConfig(est, obj["seed"] if seed is None else seed, obj["trials"], step,
                            params, model, rank, obj.get("output"))


def read_config(path: str | os.PathLike, seed: Optional[int] = None) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return load_config(obj, seed)


# ------------------------------------------------------------ records and files


def version_string() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from . import __version__

    return __version__


@dataclass
class ResultRecord:
    config_digest: str
    version: str
    estimator: str
    payload: dict
    wall_clock: float
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x: Any):
    if hasattr(x, "item"):
        return x.item()
    if hasattr(x, "tolist"):
        return x.tolist()
    if hasattr(x, "numerator"):
        return float(x)
    return str(x)


def fmt(x: Any) -> str:
    """CSV cell: floats with 12 significant digits, everything else as text."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float) or (hasattr(x, "dtype") and getattr(x.dtype, "kind", "") == "f"):
        return f"{float(x):.12g}"
    if hasattr(x, "numerator") and not isinstance(x, int):
        return f"{float(x):.12g}"
    return str(x)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
