"""Model files (TOML) and small output helpers."""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .errors import ConfigError
from .model import StateSpaceModel, validate_model


def _matrix(value: Any, name: str) -> np.ndarray:
    """Row-major nested list to a 2-d array; ragged input is rejected."""
    if isinstance(value, (int, float)):
        return np.array([[float(value)]])
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a non-empty array")
    if all(isinstance(v, (int, float)) for v in value):
        return np.array([value], dtype=float)
    if not all(isinstance(r, list) for r in value):
        raise ConfigError(f"{name} mixes numbers and rows")
    widths = {len(r) for r in value}
    if len(widths) != 1:
        raise ConfigError(f"{name} is ragged (row lengths {sorted(widths)})")
    for r in value:
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in r):
            raise ConfigError(f"{name} has non-numeric entries")
    return np.array(value, dtype=float)


def parse_model(data: dict) -> Tuple[StateSpaceModel, float]:
    """Build a validated model and the sampling distance from a parsed TOML table."""
    missing = [k for k in ("A", "B", "C", "sigma_L") if k not in data]
    if missing:
        raise ConfigError(f"model file lacks keys: {', '.join(missing)}")
    A = _matrix(data["A"], "A")
    B = data["B"]
    # a flat B list is a column when A has more than one row
    if isinstance(B, list) and B and all(isinstance(v, (int, float)) for v in B) and len(B) == A.shape[0] > 1:
        B = np.array(B, dtype=float)[:, None]
    else:
        B = _matrix(B, "B")
    C = _matrix(data["C"], "C")
    S = _matrix(data["sigma_L"], "sigma_L")
    delta = float(data.get("delta", 1.0))
    if not delta > 0:
        raise ConfigError("delta must be positive")
    return validate_model(A, B, C, S), delta


def load_model(path) -> Tuple[StateSpaceModel, float]:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_model(data.get("model", data))


def model_to_toml(model: StateSpaceModel, delta: float = 1.0) -> str:
    def arr(M):
        return "[" + ", ".join("[" + ", ".join(repr(float(x)) for x in row) + "]" for row in M) + "]"
    return (f"A = {arr(model.A)}\nB = {arr(model.B)}\nC = {arr(model.C)}\n"
            f"sigma_L = {arr(model.sigma_L)}\ndelta = {float(delta)!r}\n")


def config_fingerprint(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def header_lines(meta: dict) -> str:
    """Comment header with version and fingerprint for every output file."""
    meta = {"library_version": __version__, **meta}
    meta.setdefault("config_fingerprint", config_fingerprint(meta))
    return "".join(f"# {k}: {v}\n" for k, v in meta.items())


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
