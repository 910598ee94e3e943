"""Single-site Gibbs sampling of the lattice MRF.

Schedules:
- N26: sequential raster sweep (i-major, k fastest), one numba kernel call per chunk.
- N6: two-colour checkerboard; each colour class is resampled in one vectorised step.

Randomness: one PCG64 stream per call. The initial labels (if random) are drawn
first, then one uniform per site per sweep in raster order, so the result is a
pure function of (spec, params, sweeps, seed, init).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from contracts.errors import InvalidInputError
from contracts.lattice import LabelVolume, LatticeSpec, MRFParams, Neighborhood
from runtime.mrf.lattice import (
    conditional_logits,
    neighbor_label_counts,
    neighbor_offsets,
    softmax_rows,
)
from runtime.rng import make_rng

_UNIFORMS_PER_CHUNK = 1 << 22


@njit(cache=True)
def _raster_sweeps(labels, alpha, B, offsets, uniforms, trace, thin):  # pragma: no cover - jitted
    nx, ny, nz = labels.shape
    K = alpha.shape[0]
    n_off = offsets.shape[0]
    logits = np.empty(K)
    probs = np.empty(K)
    n_records = 0
    for s in range(uniforms.shape[0]):
        idx = 0
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    for a in range(K):
                        logits[a] = alpha[a]
                    for o in range(n_off):
                        ii = i + offsets[o, 0]
                        jj = j + offsets[o, 1]
                        kk = k + offsets[o, 2]
                        if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz:
                            b = labels[ii, jj, kk]
                            for a in range(K):
                                logits[a] += B[a, b]
                    m = logits[0]
                    for a in range(1, K):
                        if logits[a] > m:
                            m = logits[a]
                    total = 0.0
                    for a in range(K):
                        probs[a] = np.exp(logits[a] - m)
                        total += probs[a]
                    u = uniforms[s, idx] * total
                    acc = 0.0
                    new = K - 1
                    for a in range(K):
                        acc += probs[a]
                        if u < acc:
                            new = a
                            break
                    labels[i, j, k] = new
                    idx += 1
        if trace.shape[0] > 0 and (s + 1) % thin == 0:
            trace[n_records, :] = labels.ravel()
            n_records += 1
    return n_records


def _initial_labels(
    spec: LatticeSpec, params: MRFParams, rng: np.random.Generator, init: LabelVolume | None
) -> np.ndarray:
    if init is None:
        return rng.integers(0, params.K, size=spec.dims, dtype=np.int64)
    if init.spec != spec or init.K != params.K:
        raise InvalidInputError("initial volume does not match spec/params")
    return np.array(init.labels, dtype=np.int64, copy=True)


def _checkerboard_sweep(
    labels: np.ndarray, params: MRFParams, offsets: np.ndarray, colour: np.ndarray, u: np.ndarray
) -> None:
    for c in (0, 1):
        counts = neighbor_label_counts(labels, params.K, offsets)
        probs = softmax_rows(conditional_logits(counts, params))
        cum = np.cumsum(probs, axis=-1)
        draw = (cum < (u * cum[..., -1])[..., None]).sum(axis=-1)
        draw = np.minimum(draw, params.K - 1)
        sel = colour == c
        labels[sel] = draw[sel]


def _run_chain(
    spec: LatticeSpec,
    params: MRFParams,
    sweeps: int,
    rng: np.random.Generator,
    labels: np.ndarray,
    thin: int = 0,
) -> np.ndarray:
    """Advance *labels* in place; return the recorded trace (empty if ``thin == 0``)."""
    n_sites = spec.n_sites
    n_records = sweeps // thin if thin else 0
    trace = np.zeros((n_records, n_sites), dtype=np.int64)
    offsets = neighbor_offsets(spec.neighborhood)
    alpha, B = params.alpha_array, params.B_array

    if spec.neighborhood == Neighborhood.N6:
        ii, jj, kk = np.indices(spec.dims)
        colour = (ii + jj + kk) % 2
        rec = 0
        for s in range(sweeps):
            u = rng.random(spec.dims)
            _checkerboard_sweep(labels, params, offsets, colour, u)
            if thin and (s + 1) % thin == 0:
                trace[rec] = labels.ravel()
                rec += 1
        return trace

    chunk = max(1, _UNIFORMS_PER_CHUNK // n_sites)
    if thin:
        chunk = max(thin, (chunk // thin) * thin)
    done = 0
    rec = 0
    while done < sweeps:
        n = min(chunk, sweeps - done)
        uniforms = rng.random((n, n_sites))
        sub = trace[rec:] if thin else trace
        rec += _raster_sweeps(labels, alpha, B, offsets, uniforms, sub, thin or 1)
        done += n
    return trace


def gibbs_sample(
    spec: LatticeSpec,
    params: MRFParams,
    sweeps: int,
    seed: int,
    init: LabelVolume | None = None,
) -> LabelVolume:
    """Run ``sweeps`` full-lattice Gibbs sweeps and return the final volume.

    ``init=None`` starts from i.i.d. uniform labels; otherwise from a copy of *init*.
    """
    if sweeps < 0:
        raise InvalidInputError("sweeps must be >= 0")
    if sweeps == 0 and init is not None:
        return init
    rng = make_rng(seed)
    labels = _initial_labels(spec, params, rng, init)
    _run_chain(spec, params, sweeps, rng, labels)
    return LabelVolume(spec=spec, labels=labels, K=params.K, seed=seed, sweeps=sweeps)


def gibbs_trace(
    spec: LatticeSpec,
    params: MRFParams,
    sweeps: int,
    seed: int,
    init: LabelVolume | None = None,
    thin: int = 1,
) -> np.ndarray:
    """States of one chain after every *thin* sweeps, shape ``(sweeps // thin, n_sites)``."""
    if thin < 1:
        raise InvalidInputError("thin must be >= 1")
    rng = make_rng(seed)
    labels = _initial_labels(spec, params, rng, init)
    return _run_chain(spec, params, sweeps, rng, labels, thin=thin)
