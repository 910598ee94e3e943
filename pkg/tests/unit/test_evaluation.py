"""Unit tests for dense-reference evaluation of reconstructions."""

from __future__ import annotations

import math

import numpy as np
import pytest

from contracts.cells import CellChain, CellRecord, SectionTable
from contracts.errors import InvalidInputError
from contracts.evaluation import ReferenceCell
from contracts.experiment import RadiusDist
from runtime.evaluation import (
    attribute_chain,
    default_offsets,
    evaluate,
    localization_histogram,
    reference_from_sections,
    reference_ids,
    slice_spheres,
    subsample_stack,
    synth_sphere_stack,
)


# ── helpers ─────────────────────────────────────────────────────────


def _sphere(vid: str, x: float, z: float, R: float, t: str = "A") -> ReferenceCell:
    return ReferenceCell(true_volume_id=vid, type_label=t, x=x, y=0.0, z=z, radius=R)


def _separated() -> list[ReferenceCell]:
    return [_sphere("p", 0.0, 20.0, 5.0), _sphere("q", 30.0, 19.5, 5.0), _sphere("r", 60.0, 21.25, 5.0)]


def _member(cid: str, area: float, z: float) -> CellRecord:
    return CellRecord(cell_id=cid, x=0, y=0, z=z, area=area, type_label="A", section_index=int(z))


# ── reference stacks ────────────────────────────────────────────────


class TestSliceSpheres:
    def test_strict_intersection(self) -> None:
        ref = slice_spheres([_sphere("s", 0.0, 5.0, 3.0)], base_dz=2.0, depth=10.0)
        assert [s.z for s in ref.sections] == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
        hit = [s.z for s in ref.sections if s.cells]
        assert hit == [4.0, 6.0]
        assert ref.sections[2].cells[0].area == pytest.approx(8 * math.pi)
        assert ref.sections[2].cells[0].true_volume_id == "s"

    def test_radius_required(self) -> None:
        with pytest.raises(InvalidInputError):
            slice_spheres([ReferenceCell(true_volume_id="s", type_label="A", x=0, y=0, z=0)], 1.0, 2.0)

    def test_reference_from_sections_recovers_centre(self) -> None:
        sliced = slice_spheres([_sphere("s", 3.0, 7.3, 4.0)], base_dz=1.0, depth=15.0)
        ref = reference_from_sections(sliced.sections, base_dz=1.0)
        cell = ref.cells["s"]
        assert cell.z == pytest.approx(7.3, abs=1e-9)
        assert cell.x == pytest.approx(3.0)

    def test_reference_needs_true_ids(self) -> None:
        section = SectionTable(section_index=0, z=0.0, cells=(_member("c", 1.0, 0.0),))
        with pytest.raises(InvalidInputError):
            reference_from_sections([section], base_dz=1.0)


class TestSynthSphereStack:
    TYPES = {"small": RadiusDist(mean=2.0, sd=0.5, weight=2.0), "large": RadiusDist(mean=6.0, sd=1.0)}

    def test_deterministic_and_non_overlapping(self) -> None:
        a = synth_sphere_stack(80, self.TYPES, (100.0, 100.0, 30.0), 2.0, seed=5)
        b = synth_sphere_stack(80, self.TYPES, (100.0, 100.0, 30.0), 2.0, seed=5)
        assert a == b
        cells = list(a.cells.values())
        assert len(cells) == 80
        for i, c in enumerate(cells):
            for d in cells[i + 1:]:
                gap = math.dist((c.x, c.y, c.z), (d.x, d.y, d.z))
                assert gap >= c.radius + d.radius - 1e-9

    def test_impossible_packing_raises(self) -> None:
        with pytest.raises(InvalidInputError):
            synth_sphere_stack(50, {"big": RadiusDist(mean=10.0)}, (10.0, 10.0, 10.0), 1.0, seed=0, max_tries=20)


# ── subsampling ─────────────────────────────────────────────────────


class TestSubsample:
    def test_offsets_select_residues(self) -> None:
        ref = slice_spheres(_separated(), base_dz=1.0, depth=40.0)
        zs = [s.z for s in subsample_stack(ref, delta_z=4.0, offset=1.0)]
        assert zs == [1.0 + 4 * n for n in range(10)]
        assert all(c.true_volume_id is None for s in subsample_stack(ref, 4.0) for c in s.cells)

    def test_default_offsets(self) -> None:
        ref = slice_spheres(_separated(), base_dz=2.0, depth=40.0)
        assert default_offsets(ref, 6.0) == [0.0, 2.0, 4.0]

    @pytest.mark.parametrize("delta_z,offset", [(3.0, 0.0), (4.0, 4.0), (4.0, 1.0)])
    def test_bad_spacing(self, delta_z: float, offset: float) -> None:
        ref = slice_spheres(_separated(), base_dz=2.0, depth=40.0)
        with pytest.raises(InvalidInputError):
            subsample_stack(ref, delta_z, offset)


# ── scoring ─────────────────────────────────────────────────────────


class TestAttributeChain:
    def test_majority(self) -> None:
        members = (_member("a", 1.0, 0), _member("b", 1.0, 1), _member("c", 9.0, 2))
        chain = CellChain(members=members, link_costs=(0.0, 0.0))
        assert attribute_chain(chain, {"a": "x", "b": "x", "c": "y"}) == ("x", True)

    def test_tie_goes_to_largest_area(self) -> None:
        members = (_member("a", 1.0, 0), _member("b", 4.0, 1))
        chain = CellChain(members=members, link_costs=(0.0,))
        assert attribute_chain(chain, {"a": "x", "b": "y"}) == ("y", True)

    def test_pure_chain(self) -> None:
        chain = CellChain(members=(_member("a", 1.0, 0),))
        assert attribute_chain(chain, {"a": "x"}) == ("x", False)


class TestEvaluate:
    def test_separated_spheres_localize_exactly(self) -> None:
        ref = slice_spheres(_separated(), base_dz=1.0, depth=40.0)
        reports = evaluate(ref, delta_z=4.0, min_count=1)
        assert [r.offset for r in reports] == [0.0, 1.0, 2.0, 3.0, None]
        for r in reports[:-1]:
            assert r.captured_unique == 3
            assert r.missed_unique == 0
            assert r.sc_fraction == 1.0
            assert r.link_errors == 0
            assert r.localization.n == 3
            assert r.localization.max == pytest.approx(0.0, abs=1e-9)
        pooled = reports[-1]
        assert pooled.total_unique == 12
        assert pooled.captured_fraction == 1.0
        assert pooled.localization.n == 12

    def test_small_cell_missed_at_some_offsets(self) -> None:
        spheres = _separated() + [_sphere("tiny", 90.0, 10.5, 0.8)]
        ref = slice_spheres(spheres, base_dz=1.0, depth=40.0)
        assert reference_ids(ref) == {"p", "q", "r", "tiny"}
        reports = evaluate(ref, delta_z=4.0, offsets=[0.0, 2.0], min_count=1)
        # tiny only reaches planes 10 and 11
        assert reports[0].missed_unique == 1
        assert reports[1].missed_unique == 0
        assert reports[-1].missed_fraction == pytest.approx(1 / 8)

    def test_coarser_spacing_captures_less(self) -> None:
        types = {"small": RadiusDist(mean=2.0, sd=0.5, weight=2.0), "large": RadiusDist(mean=6.0, sd=1.0)}
        ref = synth_sphere_stack(300, types, (200.0, 200.0, 40.0), 2.0, seed=7)
        pooled = {dz: evaluate(ref, dz)[-1] for dz in (2.0, 4.0, 6.0, 8.0, 10.0)}
        captured = [pooled[dz].captured_fraction for dz in sorted(pooled)]
        assert all(a >= b for a, b in zip(captured, captured[1:]))
        assert pooled[2.0].sc_fraction > pooled[10.0].sc_fraction
        assert pooled[2.0].captured_fraction == 1.0

    @pytest.mark.parametrize("seed", [7, 11, 13])
    def test_spacing_trend_with_large_cells(self, seed: int) -> None:
        # every radius >= 4, so the finest spacing cuts each cell at least twice
        types = {
            "small": RadiusDist(mean=4.5, sd=0.5, min=4.0, weight=2.0),
            "large": RadiusDist(mean=6.0, sd=1.0, min=4.0),
        }
        ref = synth_sphere_stack(300, types, (200.0, 200.0, 40.0), 2.0, seed=seed)
        spacings = (2.0, 4.0, 6.0, 8.0, 10.0)
        pooled = [evaluate(ref, dz)[-1] for dz in spacings]
        sc = [r.sc_fraction for r in pooled]
        missed = [r.missed_fraction for r in pooled]
        assert all(a > b for a, b in zip(sc, sc[1:])), sc
        assert all(a <= b for a, b in zip(missed, missed[1:])), missed
        assert missed[-1] > missed[0]
        median_radius = float(np.median([c.radius for c in ref.cells.values()]))
        assert pooled[1].localization.mean < 0.5 * median_radius
        assert pooled[0].captured_fraction == 1.0


class TestLocalizationHistogram:
    def test_bins(self) -> None:
        assert localization_histogram(np.array([0.1, 0.5, 1.2]), 0.5) == [
            (0.0, 0.5, 1),
            (0.5, 1.0, 1),
            (1.0, 1.5, 1),
        ]

    def test_empty(self) -> None:
        assert localization_histogram(np.empty(0), 1.0) == []

    def test_bad_width(self) -> None:
        with pytest.raises(InvalidInputError):
            localization_histogram(np.array([1.0]), 0.0)
