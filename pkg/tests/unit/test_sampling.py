"""Unit tests for matched-budget sampling geometries and restricted neighborhoods."""

from __future__ import annotations

import numpy as np
import pytest

from contracts.errors import ContractViolation, InvalidBudgetError
from contracts.lattice import LabelVolume, LatticeSpec, Neighborhood
from contracts.observation import Geometry
from runtime.mrf.lattice import neighbor_sites
from runtime.rng import make_rng
from runtime.sampling import (
    observed_neighbor_counts,
    restricted_neighbors,
    sample_full_volume,
    sample_independent_planes,
    sample_random_serial_stack,
    sample_serial_stack,
)


def _volume(dims: tuple[int, int, int] = (4, 3, 12), K: int = 3, seed: int = 0) -> LabelVolume:
    spec = LatticeSpec(dims=dims, neighborhood=Neighborhood.N26)
    return LabelVolume(spec=spec, labels=make_rng(seed).integers(0, K, size=dims), K=K)


class TestIndependentPlanes:
    def test_distinct_sorted_one_per_bin(self) -> None:
        vol = _volume()
        obs = sample_independent_planes(vol, 4, seed=3)
        assert obs.geometry == Geometry.INDEPENDENT_2D
        assert len(obs.plane_zs) == 4
        assert list(obs.plane_zs) == sorted(set(obs.plane_zs))
        for n, z in enumerate(obs.plane_zs):
            assert 3 * n <= z < 3 * (n + 1)

    def test_budget_counts_voxels(self) -> None:
        obs = sample_independent_planes(_volume(), 5, seed=1)
        assert obs.budget == 5 * 4 * 3
        assert obs.observed_sites.shape == (obs.budget, 3)

    def test_deterministic(self) -> None:
        vol = _volume()
        assert sample_independent_planes(vol, 6, 9).plane_zs == sample_independent_planes(vol, 6, 9).plane_zs

    def test_all_planes(self) -> None:
        obs = sample_independent_planes(_volume(), 12, seed=0)
        assert obs.plane_zs == tuple(range(12))

    @pytest.mark.parametrize("M", [0, 13])
    def test_bad_budget(self, M: int) -> None:
        with pytest.raises(InvalidBudgetError):
            sample_independent_planes(_volume(), M, seed=0)


class TestSerialStack:
    def test_planes_step_by_delta_z(self) -> None:
        obs = sample_serial_stack(_volume(), z0=2, delta_z=3, count=4)
        assert obs.plane_zs == (2, 5, 8, 11)
        assert obs.delta_z == 3
        assert obs.budget == 4 * 12

    def test_overflow_raises(self) -> None:
        with pytest.raises(InvalidBudgetError):
            sample_serial_stack(_volume(), z0=3, delta_z=3, count=4)

    def test_random_offset_fits(self) -> None:
        vol = _volume()
        for seed in range(20):
            obs = sample_random_serial_stack(vol, delta_z=2, count=5, seed=seed)
            assert obs.plane_zs[-1] < 12
            assert obs.seed == seed

    def test_random_offset_deterministic(self) -> None:
        vol = _volume()
        assert sample_random_serial_stack(vol, 1, 6, 4) == sample_random_serial_stack(vol, 1, 6, 4)

    def test_full_volume(self) -> None:
        obs = sample_full_volume(_volume())
        assert obs.geometry == Geometry.FULL_VOLUME
        assert obs.budget == 4 * 3 * 12


class TestRestrictedNeighbors:
    def test_independent_planes_stay_in_plane(self) -> None:
        vol = _volume()
        obs = sample_independent_planes(vol, 12, seed=0)
        nbs = restricted_neighbors(obs, vol.spec, (1, 1, 5))
        assert nbs
        assert all(nb[2] == 5 for nb in nbs)
        assert len(nbs) == 8

    def test_contiguous_serial_keeps_cross_plane_edges(self) -> None:
        vol = _volume()
        obs = sample_serial_stack(vol, z0=4, delta_z=1, count=3)
        nbs = restricted_neighbors(obs, vol.spec, (1, 1, 5))
        assert len(nbs) == 26

    def test_spaced_serial_loses_cross_plane_edges(self) -> None:
        vol = _volume()
        obs = sample_serial_stack(vol, z0=0, delta_z=2, count=6)
        nbs = restricted_neighbors(obs, vol.spec, (1, 1, 4))
        assert all(nb[2] == 4 for nb in nbs)

    def test_full_volume_is_unrestricted(self) -> None:
        vol = _volume()
        obs = sample_full_volume(vol)
        site = (0, 2, 11)
        assert restricted_neighbors(obs, vol.spec, site) == neighbor_sites(vol.spec, site)

    def test_unobserved_site_raises(self) -> None:
        vol = _volume()
        obs = sample_serial_stack(vol, z0=0, delta_z=2, count=2)
        with pytest.raises(ContractViolation):
            restricted_neighbors(obs, vol.spec, (0, 0, 1))

    def test_counts_match_neighbor_lists(self) -> None:
        vol = _volume(seed=4)
        for obs in (
            sample_independent_planes(vol, 4, seed=2),
            sample_serial_stack(vol, z0=1, delta_z=1, count=4),
            sample_serial_stack(vol, z0=0, delta_z=3, count=4),
        ):
            x, C = observed_neighbor_counts(obs, vol.spec, vol.labels, vol.K)
            sites = obs.observed_sites
            assert x.shape == (obs.budget,) and C.shape == (obs.budget, vol.K)
            for n in range(0, obs.budget, 7):
                site = tuple(int(v) for v in sites[n])
                assert x[n] == vol.labels[site]
                expected = np.zeros(vol.K, dtype=int)
                for nb in restricted_neighbors(obs, vol.spec, site):
                    expected[vol.labels[nb]] += 1
                assert np.array_equal(C[n], expected)
