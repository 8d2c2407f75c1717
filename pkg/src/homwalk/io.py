"""Loading measures, subgroup specs and matrices from JSON files.

A path of the form ``bundled:<name>`` refers to a file shipped in
``homwalk/data``.  Parse and validation failures raise :class:`ConfigError`
with ``path:line:column`` diagnostics where available.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Union

import numpy as np

from .exceptions import ConfigError, HomwalkError
from .group import FiniteMeasure, make_measure
from .subgroup import SubgroupSpec, UnipotentPart

PathLike = Union[str, Path]
BUNDLED_PREFIX = "bundled:"
_KINDS = ("measures", "specs", "experiments")


def bundled_names(kind: str) -> list[str]:
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    folder = resources.files("homwalk") / "data" / kind
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def _read_text(path: PathLike, kind: str) -> tuple[str, str]:
    path = str(path)
    if path.startswith(BUNDLED_PREFIX):
        name = path[len(BUNDLED_PREFIX) :]
        res = resources.files("homwalk") / "data" / kind / f"{name}.json"
        if not res.is_file():
            raise ConfigError(f"{path}: no bundled {kind[:-1]} named {name!r}; available: {bundled_names(kind)}")
        return res.read_text(encoding="utf-8"), path
    try:
        return Path(path).read_text(encoding="utf-8"), path
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read file ({exc.strerror})") from exc


def load_json(path: PathLike, kind: str = "measures") -> Any:
    text, label = _read_text(path, kind)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{label}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc


def _field(obj: dict, key: str, label: str):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError(f"{label}: missing field {key!r}")
    return obj[key]


def measure_from_dict(obj: dict, label: str = "<measure>") -> FiniteMeasure:
    atoms = _field(obj, "atoms", label)
    if not isinstance(atoms, list):
        raise ConfigError(f"{label}: 'atoms' must be a list")
    pairs = []
    for i, atom in enumerate(atoms):
        pairs.append((_field(atom, "weight", f"{label}: atom {i}"), _field(atom, "matrix", f"{label}: atom {i}")))
    try:
        mu = make_measure(pairs)
    except (HomwalkError, ValueError, TypeError) as exc:
        raise ConfigError(f"{label}: {exc}") from exc
    if "dim" in obj and obj["dim"] != mu.dim:
        raise ConfigError(f"{label}: 'dim' is {obj['dim']} but the matrices are {mu.dim}x{mu.dim}")
    return mu


def spec_from_dict(obj: dict, label: str = "<spec>") -> SubgroupSpec:
    dim = _field(obj, "dim", label)
    basis = obj.get("a_prime_basis", [])
    part = obj.get("unipotent_part", "full")
    try:
        arr = np.asarray(basis, dtype=float).reshape(-1, int(dim))
        return SubgroupSpec(int(dim), arr, UnipotentPart(part))
    except (HomwalkError, ValueError, TypeError) as exc:
        raise ConfigError(f"{label}: {exc}") from exc


def load_measure(path: PathLike) -> FiniteMeasure:
    return measure_from_dict(load_json(path, "measures"), str(path))


def load_spec(path: PathLike) -> SubgroupSpec:
    return spec_from_dict(load_json(path, "specs"), str(path))


def load_experiment(path: PathLike) -> dict:
    obj = load_json(path, "experiments")
    for key in ("measure", "spec"):
        _field(obj, key, str(path))
    return obj


def load_matrix(path: PathLike) -> np.ndarray:
    """A square matrix from JSON (a nested list, or an object with a ``matrix`` field)."""
    obj = load_json(path)
    if isinstance(obj, dict):
        obj = _field(obj, "matrix", str(path))
    try:
        m = np.asarray(obj, dtype=float)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: matrix entries must be numbers") from exc
    if m.ndim != 2:
        raise ConfigError(f"{path}: expected a 2-D matrix, got shape {m.shape}")
    return m
