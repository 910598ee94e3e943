"""Unit tests for versioned tables, volume files and cell / point CSVs."""

from __future__ import annotations

import json

import numpy as np
import pytest

from contracts.cells import CellRecord, Point3D, Provenance, SectionTable
from contracts.errors import SchemaError
from contracts.evaluation import ReferenceCell
from contracts.lattice import LabelVolume, LatticeSpec, MRFParams, Neighborhood
from contracts.observation import Geometry
from runtime.evaluation import slice_spheres
from runtime.io.cells import read_cells, read_points, read_reference, write_cells, write_points
from runtime.io.tables import RunStamp, read_sidecar, read_table, sidecar_path, write_table
from runtime.io.volume import observation_from_row, observation_row, read_volume, volume_paths, write_volume
from runtime.sampling import sample_independent_planes, sample_serial_stack

STAMP = RunStamp(command="test", seed=7, config_hash="abc123")


def _section(index: int, z: float, rows: list[tuple[str, float, float, str]]) -> SectionTable:
    cells = tuple(
        CellRecord(cell_id=cid, x=x, y=y, z=z, area=2.5, type_label=t, section_index=index)
        for cid, x, y, t in rows
    )
    return SectionTable(section_index=index, z=z, cells=cells)


# ── tables ──────────────────────────────────────────────────────────


class TestTables:
    def test_schema_line_and_sidecar(self, tmp_path) -> None:
        path = write_table(tmp_path / "abundance.csv", "abundance", [{"type": "A", "fraction": 0.25}], STAMP)
        lines = path.read_text().splitlines()
        assert lines[0] == "#schema=abundance/1"
        assert lines[1] == "type,fraction"
        side = read_sidecar(path)
        assert side == {
            "schema": "abundance",
            "schema_version": 1,
            "command": "test",
            "seed": 7,
            "config_hash": "abc123",
            "rows": 1,
        }

    def test_warning_and_extra_recorded(self, tmp_path) -> None:
        path = write_table(
            tmp_path / "t.csv", "abundance", [], STAMP, warning="careful", extra={"skipped": [1, 2]}
        )
        side = json.loads(sidecar_path(path).read_text())
        assert side["warning"] == "careful"
        assert side["extra"] == {"skipped": [1, 2]}
        assert side["rows"] == 0

    def test_missing_required_column(self, tmp_path) -> None:
        with pytest.raises(SchemaError) as info:
            write_table(tmp_path / "t.csv", "abundance", [{"type": "A"}], STAMP)
        assert info.value.column == "fraction"

    def test_round_trip_keeps_text_columns(self, tmp_path) -> None:
        path = write_table(
            tmp_path / "d.csv", "detectability", [{"type": "007", "M": 3, "k": 1, "trials": 10, "fraction": 0.1}], STAMP
        )
        frame = read_table(path, "detectability")
        assert frame.loc[0, "type"] == "007"
        assert frame.loc[0, "fraction"] == 0.1

    def test_wrong_schema_line(self, tmp_path) -> None:
        path = write_table(tmp_path / "a.csv", "abundance", [{"type": "A", "fraction": 1.0}], STAMP)
        with pytest.raises(SchemaError):
            read_table(path, "detectability")

    def test_external_file_without_schema_line(self, tmp_path) -> None:
        path = tmp_path / "ext.csv"
        path.write_text("type,fraction,note\nA,0.5,x\n")
        assert list(read_table(path, "abundance")["type"]) == ["A"]

    def test_external_file_missing_column(self, tmp_path) -> None:
        path = tmp_path / "ext.csv"
        path.write_text("type\nA\n")
        with pytest.raises(SchemaError) as info:
            read_table(path, "abundance")
        assert info.value.column == "fraction"

    def test_tampered_sidecar(self, tmp_path) -> None:
        path = write_table(tmp_path / "a.csv", "abundance", [], STAMP)
        sidecar_path(path).write_text(json.dumps({"schema": "abundance"}))
        with pytest.raises(SchemaError):
            read_sidecar(path)

    def test_no_temp_files_left(self, tmp_path) -> None:
        write_table(tmp_path / "a.csv", "abundance", [{"type": "A", "fraction": 1.0}], STAMP)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["a.csv", "a.csv.json"]


# ── volumes ─────────────────────────────────────────────────────────


class TestVolumeFiles:
    def _volume(self) -> LabelVolume:
        labels = np.arange(24).reshape(2, 3, 4) % 3
        return LabelVolume(
            spec=LatticeSpec(dims=(2, 3, 4), neighborhood=Neighborhood.N6), labels=labels, K=3, seed=11, sweeps=5
        )

    def test_round_trip_with_params(self, tmp_path) -> None:
        vol = self._volume()
        params = MRFParams.from_arrays(np.array([0.5, -0.5, 0.0]), np.eye(3) * 0.3, lam=0.01)
        labels_path = write_volume(tmp_path / "vol_000", vol, params, command="simulate", config_hash="h")
        assert labels_path.name == "vol_000.labels"
        back, back_params = read_volume(labels_path)
        assert np.array_equal(back.labels, vol.labels)
        assert back.spec == vol.spec
        assert (back.seed, back.sweeps) == (11, 5)
        assert back_params == params

    def test_byte_layout(self, tmp_path) -> None:
        labels_path = write_volume(tmp_path / "v", self._volume())
        raw = labels_path.read_bytes()
        assert len(raw) == 24
        # 1-based labels, k fastest
        assert list(raw[:4]) == [1, 2, 3, 1]

    def test_paths_accept_either_suffix(self, tmp_path) -> None:
        assert volume_paths(tmp_path / "v.json") == volume_paths(tmp_path / "v.labels") == volume_paths(tmp_path / "v")

    def test_truncated_labels(self, tmp_path) -> None:
        labels_path = write_volume(tmp_path / "v", self._volume())
        labels_path.write_bytes(labels_path.read_bytes()[:-1])
        with pytest.raises(SchemaError):
            read_volume(labels_path)

    def test_label_out_of_range(self, tmp_path) -> None:
        labels_path = write_volume(tmp_path / "v", self._volume())
        labels_path.write_bytes(bytes([9]) + labels_path.read_bytes()[1:])
        with pytest.raises(SchemaError):
            read_volume(labels_path)

    def test_missing_files(self, tmp_path) -> None:
        with pytest.raises(SchemaError):
            read_volume(tmp_path / "nope")

    def test_observation_rows(self) -> None:
        vol = LabelVolume(spec=LatticeSpec(dims=(3, 3, 8)), labels=np.zeros((3, 3, 8), dtype=int), K=2)
        for obs in (sample_independent_planes(vol, 3, seed=4), sample_serial_stack(vol, 1, 2, 3)):
            row = observation_row(obs)
            assert observation_from_row(row, (3, 3, 8)) == obs

    def test_observation_row_wrong_dims(self) -> None:
        vol = LabelVolume(spec=LatticeSpec(dims=(3, 3, 8)), labels=np.zeros((3, 3, 8), dtype=int), K=2)
        row = observation_row(sample_serial_stack(vol, 4, 2, 2))
        assert row["geometry"] == Geometry.SERIAL_3D.value
        with pytest.raises(SchemaError):
            observation_from_row(row, (3, 3, 4))


# ── cells and points ────────────────────────────────────────────────


class TestCellTables:
    def test_write_then_read(self, tmp_path) -> None:
        sections = [
            _section(0, 0.0, [("b", 1.0, 2.0, "T1"), ("a", 0.5, 0.25, "T2")]),
            _section(3, 6.0, [("c", 4.0, 4.0, "T1")]),
        ]
        path = write_cells(tmp_path / "cells.csv", sections, STAMP)
        back = read_cells(path)
        assert [s.section_index for s in back] == [0, 3]
        assert [c.cell_id for c in back[0].cells] == ["a", "b"]
        assert back[1].z == 6.0
        assert back[0].cells[0].type_label == "T2"

    def test_duplicate_ids(self, tmp_path) -> None:
        path = tmp_path / "cells.csv"
        path.write_text("cell_id,x,y,z,area,type,section\nc,0,0,0,1,A,0\nc,1,1,0,1,A,0\n")
        with pytest.raises(SchemaError):
            read_cells(path)

    def test_section_at_two_depths(self, tmp_path) -> None:
        path = tmp_path / "cells.csv"
        path.write_text("cell_id,x,y,z,area,type,section\nc,0,0,0,1,A,0\nd,1,1,2,1,A,0\n")
        with pytest.raises(SchemaError) as info:
            read_cells(path)
        assert info.value.column == "z"

    def test_bad_row(self, tmp_path) -> None:
        path = tmp_path / "cells.csv"
        path.write_text("cell_id,x,y,z,area,type,section\nc,0,0,0,-1,A,0\n")
        with pytest.raises(SchemaError):
            read_cells(path)

    def test_reference_columns(self, tmp_path) -> None:
        ref = slice_spheres(
            [ReferenceCell(true_volume_id="s1", type_label="A", x=1.0, y=2.0, z=5.2, radius=3.0)], 1.0, 10.0
        )
        path = write_cells(tmp_path / "ref.csv", ref.sections, STAMP, reference=ref.cells)
        frame = read_table(path, "cells")
        assert {"true_volume_id", "ref_x", "ref_y", "ref_z"} <= set(frame.columns)
        back = read_reference(path, base_dz=1.0)
        assert back.cells["s1"].z == 5.2
        assert back.n_unique == 1

    def test_reference_needs_true_ids(self, tmp_path) -> None:
        path = write_cells(tmp_path / "c.csv", [_section(0, 0.0, [("a", 0, 0, "A")])], STAMP)
        with pytest.raises(SchemaError):
            read_reference(path, base_dz=1.0)

    def test_points(self, tmp_path) -> None:
        points = [
            Point3D(
                cell_id="a", x=1.0, y=2.0, z=3.25, type_label="T", provenance=Provenance.SC,
                z_lo=2.0, z_hi=4.0, chain_len=2, member_ids=("a", "b"), clamped=True,
            ),
            Point3D(cell_id="c", x=0.0, y=0.0, z=1.0, type_label="T", provenance=Provenance.LC, z_lo=0.5, z_hi=1.5),
        ]
        back = read_points(write_points(tmp_path / "points.csv", points, STAMP))
        assert back[0] == points[0]
        assert back[1].member_ids == ()
        assert not back[1].clamped
