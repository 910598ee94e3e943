"""Versioned tidy CSV tables with JSON sidecars.

Every table written here starts with ``#schema=<name>/<version>`` and is
accompanied by ``<file>.json``::

    {"schema": ..., "schema_version": ..., "command": ..., "seed": ...,
     "config_hash": ..., "rows": ..., "warning": ...}

Readers reject a mismatched schema line. Files without one (external inputs)
are accepted if the required columns are present.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import jsonschema
import pandas as pd

from contracts.errors import SchemaError
from runtime.io.atomic import atomic_write_text

SCHEMA_PREFIX = "#schema="


@dataclass(frozen=True)
class TableSchema:
    name: str
    version: int
    columns: tuple[str, ...]
    optional: tuple[str, ...] = ()
    text_columns: frozenset[str] = field(default_factory=frozenset)

    @property
    def tag(self) -> str:
        return f"{self.name}/{self.version}"


_TEXT = frozenset({"cell_id", "type", "true_volume_id", "members", "target", "partner", "geometry", "query", "key", "provenance", "offset", "seed", "volume", "first", "second", "metric", "plane_zs"})


def _schema(name: str, columns: str, optional: str = "") -> TableSchema:
    cols = tuple(columns.split(","))
    opt = tuple(optional.split(",")) if optional else ()
    return TableSchema(name, 1, cols, opt, _TEXT & frozenset(cols + opt))


SCHEMAS: dict[str, TableSchema] = {
    s.name: s
    for s in (
        _schema("cells", "cell_id,x,y,z,area,type,section", "true_volume_id,ref_x,ref_y,ref_z"),
        _schema("points", "cell_id,x,y,z,z_lo,z_hi,type,provenance,chain_len", "members,clamped"),
        _schema("observations", "volume,geometry,seed,budget,delta_z,plane_zs"),
        _schema("recovery", "geometry,seed,budget,mae_alpha,rmse_alpha,mae_B,rmse_B", "converged,plane_zs"),
        _schema("recovery_summary", "geometry,n_trials,median_mae_alpha,median_mae_B,iqr_mae_B,var_mae_B,var_mae_B_by_position"),
        _schema("sign_tests", "first,second,metric,n_pairs,n_first_larger,p_value"),
        _schema("abundance", "type,fraction"),
        _schema("detectability", "type,M,k,trials,fraction"),
        _schema("enrichment", "section,target,partner,z_score,observed,null_mean,null_std,radius,n_permutations,degenerate_null"),
        _schema("stability", "target,partner,section,z_score"),
        _schema("stability_summary", "target,radius,partner,n_sections,iqr,frac_abs_z_gt_2,undefined_spread"),
        _schema("coverage", "delta_z,offset,sc_frac,lc_frac,captured_frac,missed_frac,loc_mean,loc_std", "n_cross_sections,captured,missed,total,link_errors,loc_n,loc_p50,loc_p90,loc_max"),
        _schema("localization_hist", "delta_z,bin_lo,bin_hi,count"),
        _schema("structures", "structure_id,n_members,members,axis_x,axis_y,axis_z,origin_x,origin_y,origin_z,extent_lo,extent_hi"),
        _schema("planar_components", "section,components"),
        _schema("distances", "query,cell_id,d2d,d3d,no_section_target"),
        _schema("profile", "structure_id,bin,arc_lo,arc_hi,arc_coord,count,key,value"),
    )
}

SIDECAR_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "schema": {"type": "string"},
        "schema_version": {"type": "integer", "minimum": 1},
        "command": {"type": "string"},
        "seed": {"type": ["integer", "null"]},
        "config_hash": {"type": "string"},
        "rows": {"type": "integer", "minimum": 0},
        "warning": {"type": ["string", "null"]},
        "extra": {"type": "object"},
    },
    "required": ["schema", "schema_version", "command", "seed", "config_hash", "rows"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class RunStamp:
    """What every sidecar records about the run that produced a table."""

    command: str
    seed: int | None
    config_hash: str


def sidecar_path(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def write_table(
    path: str | Path,
    schema: str,
    rows: Iterable[Mapping[str, Any]],
    stamp: RunStamp,
    warning: str | None = None,
    extra: Mapping[str, Any] | None = None,
) -> Path:
    """Write rows (column order from the schema) plus the sidecar, both atomically."""
    spec = SCHEMAS[schema]
    rows = list(rows)
    present = [c for c in spec.optional if any(c in r for r in rows)]
    columns = list(spec.columns) + present
    for n, r in enumerate(rows):
        missing = [c for c in spec.columns if c not in r]
        if missing:
            raise SchemaError(f"{schema} row {n} lacks column {missing[0]!r}", column=missing[0])
    # object dtype keeps ints exact and writes None as an empty field
    frame = pd.DataFrame(rows, columns=columns, dtype=object)
    buf = io.StringIO()
    buf.write(f"{SCHEMA_PREFIX}{spec.tag}\n")
    frame.to_csv(buf, index=False, lineterminator="\n")
    out = atomic_write_text(path, buf.getvalue())

    sidecar: dict[str, Any] = {
        "schema": spec.name,
        "schema_version": spec.version,
        "command": stamp.command,
        "seed": stamp.seed,
        "config_hash": stamp.config_hash,
        "rows": len(rows),
    }
    if warning is not None:
        sidecar["warning"] = warning
    if extra:
        sidecar["extra"] = dict(extra)
    jsonschema.validate(sidecar, SIDECAR_SCHEMA)
    atomic_write_text(sidecar_path(out), json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return out


def read_table(path: str | Path, schema: str) -> pd.DataFrame:
    """Read a table, checking its schema line (if any) and required columns."""
    spec = SCHEMAS[schema]
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"{schema} file not found: {p}")
    with p.open("r", encoding="utf-8") as f:
        first = f.readline().strip()
    skip = 0
    if first.startswith(SCHEMA_PREFIX):
        tag = first[len(SCHEMA_PREFIX):]
        if tag != spec.tag:
            raise SchemaError(f"{p}: expected schema {spec.tag}, found {tag}")
        skip = 1
    dtypes = {c: str for c in spec.text_columns}
    frame = pd.read_csv(
        p, skiprows=skip, dtype=dtypes, keep_default_na=False, na_values=[""], float_precision="round_trip"
    )
    for c in spec.columns:
        if c not in frame.columns:
            raise SchemaError(f"{p}: missing required column {c!r}", column=c)
    return frame


def read_sidecar(path: str | Path) -> dict[str, Any]:
    """Load and validate the sidecar of a table."""
    p = sidecar_path(path)
    if not p.exists():
        raise SchemaError(f"sidecar not found: {p}")
    data = json.loads(p.read_text(encoding="utf-8"))
    try:
        jsonschema.validate(data, SIDECAR_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{p}: {exc.message}") from exc
    return data
