"""Unit tests for the Gibbs sampler and the regime presets."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.stats import chisquare

from contracts.errors import InvalidInputError
from contracts.experiment import Regime
from contracts.lattice import LabelVolume, LatticeSpec, MRFParams, Neighborhood
from runtime.mrf.gibbs import gibbs_sample, gibbs_trace
from runtime.mrf.lattice import log_unnormalized_density, same_label_fraction
from runtime.mrf.regimes import regime_params


# ── helpers ─────────────────────────────────────────────────────────


def _exact_distribution(spec: LatticeSpec, params: MRFParams) -> np.ndarray:
    """Probabilities of every configuration, indexed by sum(label_i * K**i) over raveled sites."""
    n = spec.n_sites
    logs = np.empty(params.K**n)
    for labels in itertools.product(range(params.K), repeat=n):
        vol = LabelVolume(spec=spec, labels=np.array(labels).reshape(spec.dims), K=params.K)
        code = sum(a * params.K**i for i, a in enumerate(labels))
        logs[code] = log_unnormalized_density(vol, params)
    p = np.exp(logs - logs.max())
    return p / p.sum()


def _codes(trace: np.ndarray, K: int) -> np.ndarray:
    return (trace * K ** np.arange(trace.shape[1])).sum(axis=1)


# ── determinism and contracts ───────────────────────────────────────


class TestGibbsSample:
    def test_same_seed_same_volume(self) -> None:
        spec = LatticeSpec(dims=(5, 4, 3))
        params = regime_params(Regime.CLUSTERED, 3)
        a = gibbs_sample(spec, params, 4, seed=42)
        b = gibbs_sample(spec, params, 4, seed=42)
        assert np.array_equal(a.labels, b.labels)
        assert a.seed == 42 and a.sweeps == 4

    def test_different_seeds_differ(self) -> None:
        spec = LatticeSpec(dims=(6, 6, 6))
        params = regime_params(Regime.WELL_MIXED, 3)
        a = gibbs_sample(spec, params, 2, seed=1)
        b = gibbs_sample(spec, params, 2, seed=2)
        assert not np.array_equal(a.labels, b.labels)

    def test_checkerboard_deterministic(self) -> None:
        spec = LatticeSpec(dims=(5, 5, 5), neighborhood=Neighborhood.N6)
        params = regime_params(Regime.CLUSTERED, 2)
        a = gibbs_sample(spec, params, 3, seed=8)
        b = gibbs_sample(spec, params, 3, seed=8)
        assert np.array_equal(a.labels, b.labels)

    def test_zero_sweeps_with_init_returns_init(self) -> None:
        spec = LatticeSpec(dims=(2, 2, 2))
        init = LabelVolume(spec=spec, labels=np.ones((2, 2, 2), dtype=int), K=2)
        out = gibbs_sample(spec, regime_params(Regime.WELL_MIXED, 2), 0, seed=0, init=init)
        assert out is init

    def test_negative_sweeps_raise(self) -> None:
        with pytest.raises(InvalidInputError):
            gibbs_sample(LatticeSpec(dims=(2, 2, 2)), regime_params(Regime.WELL_MIXED, 2), -1, seed=0)

    def test_init_must_match(self) -> None:
        spec = LatticeSpec(dims=(2, 2, 2))
        init = LabelVolume(spec=LatticeSpec(dims=(3, 2, 2)), labels=np.zeros((3, 2, 2), dtype=int), K=2)
        with pytest.raises(InvalidInputError):
            gibbs_sample(spec, regime_params(Regime.WELL_MIXED, 2), 1, seed=0, init=init)

    def test_labels_in_range(self) -> None:
        vol = gibbs_sample(LatticeSpec(dims=(4, 4, 4)), regime_params(Regime.RARE_LOCALIZED, 4), 3, seed=5)
        assert vol.labels.min() >= 0 and vol.labels.max() < 4

    def test_cohesion_clusters(self) -> None:
        spec = LatticeSpec(dims=(10, 10, 10))
        B = np.zeros((3, 3))
        np.fill_diagonal(B, 0.4)
        sticky = gibbs_sample(spec, MRFParams.from_arrays(np.zeros(3), B), 30, seed=3)
        mixed = gibbs_sample(spec, regime_params(Regime.WELL_MIXED, 3), 30, seed=3)
        assert same_label_fraction(sticky) > 0.5
        assert 0.30 < same_label_fraction(mixed) < 0.37


class TestGibbsTrace:
    def test_shape(self) -> None:
        spec = LatticeSpec(dims=(2, 3, 1))
        trace = gibbs_trace(spec, regime_params(Regime.WELL_MIXED, 2), 10, seed=0, thin=3)
        assert trace.shape == (3, 6)

    def test_last_record_is_final_state(self) -> None:
        spec = LatticeSpec(dims=(3, 3, 2))
        params = regime_params(Regime.CLUSTERED, 3)
        trace = gibbs_trace(spec, params, 6, seed=17, thin=2)
        final = gibbs_sample(spec, params, 6, seed=17)
        assert np.array_equal(trace[-1], final.flat)

    def test_thin_must_be_positive(self) -> None:
        with pytest.raises(InvalidInputError):
            gibbs_trace(LatticeSpec(dims=(1, 1, 1)), regime_params(Regime.WELL_MIXED, 2), 1, seed=0, thin=0)


# ── exact small-lattice check ───────────────────────────────────────


@pytest.mark.slow
class TestExactDistribution:
    PARAMS = MRFParams.from_arrays(np.array([0.2, 0.0]), np.array([[0.4, -0.3], [-0.3, 0.1]]))

    def test_raster_sampler_matches_enumeration(self) -> None:
        spec = LatticeSpec(dims=(2, 2, 1), neighborhood=Neighborhood.N26)
        burn = 100
        trace = gibbs_trace(spec, self.PARAMS, (200_000 + burn) * 5, seed=2024, thin=5)[burn:]
        observed = np.bincount(_codes(trace, 2), minlength=16)
        expected = _exact_distribution(spec, self.PARAMS) * observed.sum()
        assert observed.sum() == 200_000
        assert chisquare(observed, expected).pvalue > 0.001

    def test_checkerboard_sampler_matches_enumeration(self) -> None:
        spec = LatticeSpec(dims=(2, 2, 1), neighborhood=Neighborhood.N6)
        burn = 50
        trace = gibbs_trace(spec, self.PARAMS, (20_000 + burn) * 2, seed=99, thin=2)[burn:]
        observed = np.bincount(_codes(trace, 2), minlength=16)
        expected = _exact_distribution(spec, self.PARAMS) * observed.sum()
        assert chisquare(observed, expected).pvalue > 0.001
