"""Pairwise MRF on a 3D lattice: neighborhoods, site conditionals and the Gibbs exponent.

Free boundaries throughout: neighborhoods are clipped at the volume faces,
never wrapped.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from contracts.errors import ContractViolation, InvalidInputError
from contracts.lattice import LabelVolume, LatticeSpec, MRFParams, Neighborhood

Site = tuple[int, int, int]


# ── Neighborhoods ───────────────────────────────────────────────────


@lru_cache(maxsize=None)
def _offsets(neighborhood: Neighborhood) -> tuple[Site, ...]:
    if neighborhood == Neighborhood.N6:
        return ((-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1))
    return tuple(o for o in product((-1, 0, 1), repeat=3) if o != (0, 0, 0))


def neighbor_offsets(neighborhood: Neighborhood, *, in_plane_only: bool = False) -> np.ndarray:
    """(n, 3) array of neighbor offsets; ``in_plane_only`` keeps dz == 0."""
    offs = [o for o in _offsets(neighborhood) if not in_plane_only or o[2] == 0]
    return np.array(offs, dtype=np.int64).reshape(-1, 3)


def half_offsets(neighborhood: Neighborhood) -> np.ndarray:
    """Offsets that are lexicographically positive, so each undirected edge appears once."""
    return np.array([o for o in _offsets(neighborhood) if o > (0, 0, 0)], dtype=np.int64)


def neighbor_sites(spec: LatticeSpec, site: Site) -> list[Site]:
    """All in-bounds lattice neighbors of *site* under ``spec.neighborhood``."""
    if not spec.contains(site):
        raise ContractViolation(f"site {site} outside dims {spec.dims}")
    i, j, k = site
    out: list[Site] = []
    for di, dj, dk in _offsets(spec.neighborhood):
        nb = (i + di, j + dj, k + dk)
        if spec.contains(nb):
            out.append(nb)
    return out


def _pair_slices(
    dims: tuple[int, ...], offset: np.ndarray | tuple[int, int, int]
) -> tuple[tuple[slice, ...], tuple[slice, ...]]:
    """Slices (site, neighbor) such that ``neighbor = site + offset`` for every aligned pair."""
    site_sl, nb_sl = [], []
    for n, o in zip(dims, offset):
        o = int(o)
        if o >= 0:
            site_sl.append(slice(0, max(n - o, 0)))
            nb_sl.append(slice(o, n))
        else:
            site_sl.append(slice(-o, n))
            nb_sl.append(slice(0, max(n + o, 0)))
    return tuple(site_sl), tuple(nb_sl)


def neighbor_label_counts(
    labels: np.ndarray,
    K: int,
    offsets: np.ndarray,
    observed: np.ndarray | None = None,
) -> np.ndarray:
    """Per-site counts of neighbor labels, shape ``labels.shape + (K,)``.

    Only neighbors where ``observed`` is True contribute when a mask is given.
    """
    onehot = np.eye(K, dtype=np.int64)[labels]
    if observed is not None:
        onehot = onehot * observed[..., None]
    counts = np.zeros(labels.shape + (K,), dtype=np.int64)
    for off in offsets:
        site_sl, nb_sl = _pair_slices(labels.shape, off)
        counts[site_sl] += onehot[nb_sl]
    return counts


# ── Conditionals ────────────────────────────────────────────────────


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max-subtraction."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def conditional_logits(counts: np.ndarray, params: MRFParams) -> np.ndarray:
    """``alpha_a + sum_b B[a, b] * counts_b`` for every site (last axis = type)."""
    return params.alpha_array + counts @ params.B_array.T


def _check_K(volume: LabelVolume, params: MRFParams) -> None:
    if params.K != volume.K:
        raise InvalidInputError(f"params.K={params.K} but volume has K={volume.K}")


def conditional_distribution(
    volume: LabelVolume, site: Site, params: MRFParams
) -> np.ndarray:
    """p(x_site = a | neighbors) for a = 0..K-1."""
    _check_K(volume, params)
    counts = np.zeros(params.K, dtype=np.int64)
    for nb in neighbor_sites(volume.spec, site):
        counts[volume.labels[nb]] += 1
    return softmax_rows(conditional_logits(counts[None, :], params))[0]


def log_unnormalized_density(volume: LabelVolume, params: MRFParams) -> float:
    """``sum_i alpha[x_i] + sum_{(i,j) in E} B[x_i, x_j]``, each edge counted once."""
    _check_K(volume, params)
    labels = volume.labels
    alpha, B = params.alpha_array, params.B_array
    total = float(alpha[labels].sum())
    for off in half_offsets(volume.spec.neighborhood):
        site_sl, nb_sl = _pair_slices(labels.shape, off)
        total += float(B[labels[site_sl], labels[nb_sl]].sum())
    return total


# ── Diagnostics ─────────────────────────────────────────────────────


def same_label_fraction(volume: LabelVolume) -> float:
    """Fraction of (directed) neighbor pairs whose labels agree."""
    labels = volume.labels
    same = 0
    total = 0
    for off in half_offsets(volume.spec.neighborhood):
        site_sl, nb_sl = _pair_slices(labels.shape, off)
        a, b = labels[site_sl], labels[nb_sl]
        same += int((a == b).sum())
        total += a.size
    return same / total if total else 0.0
