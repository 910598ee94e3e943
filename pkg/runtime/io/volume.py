"""Label volume files: ``<stem>.labels`` + ``<stem>.json``.

``.labels`` holds nx·ny·nz unsigned bytes in C order (i slowest, k fastest)
with 1-based type labels; the JSON header carries dims, K, neighborhood,
seed, sweeps and, when known, the generating (alpha, B, lambda).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from contracts.errors import SchemaError
from contracts.lattice import LabelVolume, LatticeSpec, MRFParams, Neighborhood
from contracts.observation import ObservationSet
from runtime.io.atomic import atomic_write_bytes, atomic_write_text

VOLUME_FORMAT = "depthkit.volume/1"

VOLUME_HEADER_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "format": {"const": VOLUME_FORMAT},
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 3, "maxItems": 3},
        "K": {"type": "integer", "minimum": 2, "maximum": 255},
        "neighborhood": {"enum": [n.value for n in Neighborhood]},
        "seed": {"type": ["integer", "null"]},
        "sweeps": {"type": "integer", "minimum": 0},
        "alpha": {"type": "array", "items": {"type": "number"}},
        "B": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "lambda": {"type": "number", "minimum": 0},
        "command": {"type": "string"},
        "config_hash": {"type": "string"},
    },
    "required": ["format", "dims", "K", "neighborhood", "seed", "sweeps"],
}


def volume_paths(path: str | Path) -> tuple[Path, Path]:
    """(labels file, header file) for a volume path given with or without suffix."""
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".labels", ".json") else p
    return stem.with_name(stem.name + ".labels"), stem.with_name(stem.name + ".json")


def write_volume(
    path: str | Path,
    volume: LabelVolume,
    params: MRFParams | None = None,
    command: str = "",
    config_hash: str = "",
) -> Path:
    """Write both files atomically; returns the ``.labels`` path."""
    if volume.K > 255:
        raise SchemaError("volume files store labels as bytes; K must be <= 255")
    labels_path, header_path = volume_paths(path)
    header: dict[str, Any] = {
        "format": VOLUME_FORMAT,
        "dims": list(volume.spec.dims),
        "K": volume.K,
        "neighborhood": volume.spec.neighborhood.value,
        "seed": volume.seed,
        "sweeps": volume.sweeps,
        "command": command,
        "config_hash": config_hash,
    }
    if params is not None:
        header["alpha"] = list(params.alpha)
        header["B"] = [list(row) for row in params.B]
        header["lambda"] = params.lam
    atomic_write_bytes(labels_path, (volume.flat + 1).astype(np.uint8).tobytes(order="C"))
    atomic_write_text(header_path, json.dumps(header, indent=2, sort_keys=True) + "\n")
    return labels_path


def read_volume(path: str | Path) -> tuple[LabelVolume, MRFParams | None]:
    """Read a volume and, if recorded, its generating parameters."""
    labels_path, header_path = volume_paths(path)
    if not header_path.exists() or not labels_path.exists():
        raise SchemaError(f"volume files not found for {path}")
    header = json.loads(header_path.read_text(encoding="utf-8"))
    try:
        jsonschema.validate(header, VOLUME_HEADER_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{header_path}: {exc.message}") from exc

    dims = tuple(header["dims"])
    raw = np.frombuffer(labels_path.read_bytes(), dtype=np.uint8)
    if raw.size != int(np.prod(dims)):
        raise SchemaError(f"{labels_path}: {raw.size} labels, expected {int(np.prod(dims))}")
    if raw.size and (raw.min() < 1 or raw.max() > header["K"]):
        raise SchemaError(f"{labels_path}: labels outside 1..{header['K']}")
    spec = LatticeSpec(dims=dims, neighborhood=Neighborhood(header["neighborhood"]))
    volume = LabelVolume(
        spec=spec,
        labels=(raw.astype(np.int64) - 1).reshape(dims),
        K=header["K"],
        seed=header["seed"],
        sweeps=header["sweeps"],
    )
    params = None
    if "alpha" in header and "B" in header:
        params = MRFParams.from_arrays(
            np.asarray(header["alpha"], dtype=float),
            np.asarray(header["B"], dtype=float),
            header.get("lambda", 0.0),
        )
    return volume, params


def observation_row(obs: ObservationSet) -> dict[str, Any]:
    """One ``observations`` table row; plane depths joined with ``;``."""
    return {
        "geometry": obs.geometry.value,
        "seed": obs.seed,
        "budget": obs.budget,
        "delta_z": obs.delta_z,
        "plane_zs": ";".join(str(z) for z in obs.plane_zs),
    }


def observation_from_row(row: Any, dims: tuple[int, int, int]) -> ObservationSet:
    """Inverse of :func:`observation_row` for a volume of shape *dims*."""

    def _opt_int(value: Any) -> int | None:
        if value is None or (isinstance(value, float) and np.isnan(value)):
            return None
        return int(value)

    zs_raw = "" if row["plane_zs"] is None or isinstance(row["plane_zs"], float) else str(row["plane_zs"])
    try:
        return ObservationSet(
            geometry=row["geometry"],
            dims=dims,
            plane_zs=tuple(int(z) for z in zs_raw.split(";") if z),
            delta_z=_opt_int(row["delta_z"]),
            budget=int(row["budget"]),
            seed=_opt_int(row["seed"]),
        )
    except ValueError as exc:
        raise SchemaError(f"observation row does not fit a {dims} volume: {exc}") from exc
