"""Preset (alpha, B) regimes for synthetic tissue.

Couplings are scaled for the 26-neighborhood, where a site sums B over up to
26 neighbors; values around 0.1 already give visibly clustered domains.
"""

from __future__ import annotations

import numpy as np

from contracts.experiment import Regime
from contracts.lattice import MRFParams


def well_mixed(K: int) -> MRFParams:
    """Equal prevalence, no interactions: i.i.d. labels."""
    return MRFParams.from_arrays(np.zeros(K), np.zeros((K, K)))


def clustered(K: int, cohesion: float = 0.12, repulsion: float = -0.03) -> MRFParams:
    """Equal prevalence with self-cohesion on the diagonal and mild cross-type repulsion."""
    B = np.full((K, K), repulsion)
    np.fill_diagonal(B, cohesion)
    return MRFParams.from_arrays(np.zeros(K), B)


def rare_localized(K: int, rare_alpha: float = -1.5, rare_cohesion: float = 0.15) -> MRFParams:
    """Type 0 is rare and strongly self-clustered; the rest are mildly cohesive."""
    alpha = np.zeros(K)
    alpha[0] = rare_alpha
    B = np.full((K, K), -0.02)
    np.fill_diagonal(B, 0.06)
    B[0, 0] = rare_cohesion
    return MRFParams.from_arrays(alpha, B)


_PRESETS = {
    Regime.WELL_MIXED: well_mixed,
    Regime.CLUSTERED: clustered,
    Regime.RARE_LOCALIZED: rare_localized,
}


def regime_params(regime: Regime, K: int) -> MRFParams:
    return _PRESETS[regime](K)
