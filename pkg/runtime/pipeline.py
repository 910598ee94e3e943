"""Subcommand bodies for the depthkit CLI.

Each stage reads its inputs from the config (or from earlier stages' outputs
under ``output.dir``), writes its primary outputs atomically with sidecars,
and records run events in the JSONL run log. Primary outputs depend only on
the validated config; timestamps and run ids live in the run log alone.
"""

from __future__ import annotations

import json
import uuid
from pathlib import Path
from typing import Any, Callable

import numpy as np

from contracts.audit import RunEntry, RunEvent
from contracts.cells import SectionTable
from contracts.errors import ConfigError, DepthkitError, InvalidInputError
from contracts.estimation import GeometrySummary, RecoveryReport
from contracts.evaluation import CoverageReport, ReferenceStack
from contracts.experiment import ExperimentConfig
from contracts.lattice import LabelVolume, LatticeSpec, MRFParams
from contracts.observation import Geometry
from runtime.advisory import advise, render_text
from runtime.audit.logger import JsonlRunLogger
from runtime.config_loader import config_hash
from runtime.estimation.mple import fit
from runtime.estimation.study import (
    draw_observation,
    draw_seed,
    paired_sign_test,
    score_fit,
    summarize,
)
from runtime.evaluation import evaluate_all, localization_histogram, synth_sphere_stack
from runtime.io.atomic import atomic_write_text
from runtime.io.cells import read_cells, read_points, read_reference, write_cells, write_points
from runtime.io.tables import RunStamp, read_table, write_table
from runtime.io.volume import observation_from_row, observation_row, read_volume, write_volume
from runtime.matching import compute_size_stats, reconstruct
from runtime.mrf.gibbs import gibbs_sample
from runtime.mrf.regimes import regime_params
from runtime.rng import child_seeds, substream
from runtime.stats import (
    abundance,
    detectability,
    neighborhood_enrichment,
    section_stability_profile,
    sections_from_volume,
)
from runtime.structures import (
    along_structure_profile,
    build_structures,
    compare_distances,
    count_planar_components,
    default_link_radius,
)

COMMANDS = ("simulate", "sample", "estimate", "stats", "reconstruct", "evaluate", "structures", "advise")

# fixed sub-stream index per randomized stage
_STREAM = {"stats": 1, "evaluate": 2}


class Pipeline:
    """One CLI invocation: a command run against a validated config."""

    def __init__(self, config: ExperimentConfig, command: str, out_dir: str | Path | None = None) -> None:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        self.config = config
        self.command = command
        self.config_hash = config_hash(config)
        self.out = Path(out_dir or config.output.dir)
        self.run_id = uuid.uuid4().hex
        self.logger = JsonlRunLogger(self.out / config.output.run_log)
        self.artifacts: list[Path] = []
        self.warnings: list[str] = []
        self.summary: str | None = None  # human-readable result some commands print

    @property
    def master_seed(self) -> int:
        return self.config.experiment.master_seed

    def stage_seed(self, stage: str) -> int:
        return int(substream(self.master_seed, _STREAM[stage]).integers(2**62))

    def stamp(self, seed: int | None = None) -> RunStamp:
        return RunStamp(
            command=self.command,
            seed=self.master_seed if seed is None else seed,
            config_hash=self.config_hash,
        )

    def path(self, name: str) -> Path:
        return self.out / name

    def log(self, event: RunEvent, **detail: Any) -> None:
        self.logger.log(
            RunEntry(
                run_id=self.run_id,
                event=event,
                command=self.command,
                config_hash=self.config_hash,
                seed=self.master_seed,
                detail=detail,
            )
        )

    def record(self, path: Path, **detail: Any) -> Path:
        self.artifacts.append(path)
        self.log(RunEvent.ARTIFACT_WRITE, path=str(path), **detail)
        return path

    def warn(self, message: str, **detail: Any) -> None:
        self.warnings.append(message)
        self.log(RunEvent.FIT_WARNING, message=message, **detail)

    def done(self, **detail: Any) -> None:
        self.log(RunEvent.STAGE_DONE, stage=self.command, **detail)

    def run(self) -> list[Path]:
        self.log(RunEvent.RUN_START, out_dir=str(self.out))
        try:
            STAGES[self.command](self)
        except DepthkitError as exc:
            self.log(RunEvent.RUN_ERROR, error=type(exc).__name__, message=str(exc))
            raise
        self.log(RunEvent.RUN_END, artifacts=len(self.artifacts), warnings=len(self.warnings))
        return self.artifacts


def run_pipeline(config: ExperimentConfig, command: str, out_dir: str | Path | None = None) -> Pipeline:
    """Run *command* and return the finished pipeline (artifacts, warnings, summary)."""
    pipeline = Pipeline(config, command, out_dir)
    pipeline.run()
    return pipeline


# ── Simulation / sampling / estimation ──────────────────────────────


def _truth(config: ExperimentConfig) -> tuple[LatticeSpec, MRFParams]:
    sim = config.simulation
    if sim is None:
        raise ConfigError("this command needs a 'simulation' block")
    spec = LatticeSpec(dims=sim.dims, neighborhood=sim.neighborhood)
    if sim.alpha is not None and sim.B is not None:
        params = MRFParams.from_arrays(np.asarray(sim.alpha), np.asarray(sim.B))
    else:
        params = regime_params(sim.regime, sim.K)
    return spec, params


def volume_seeds(config: ExperimentConfig) -> list[int]:
    """Explicit simulation seeds, or ``n_volumes`` children of the master seed."""
    sim = config.simulation
    if sim is None:
        raise ConfigError("this command needs a 'simulation' block")
    if sim.seeds is not None:
        return list(sim.seeds)
    return child_seeds(config.experiment.master_seed, sim.n_volumes)


def _load_volumes(p: Pipeline) -> list[tuple[str, LabelVolume, MRFParams | None]]:
    folder = p.path("volumes")
    paths = sorted(folder.glob("vol_*.labels"))
    if not paths:
        raise InvalidInputError(f"no volumes under {folder}; run 'simulate' first")
    out = []
    for path in paths:
        volume, params = read_volume(path)
        out.append((path.stem, volume, params))
    return out


def stage_simulate(p: Pipeline) -> None:
    spec, params = _truth(p.config)
    sweeps = p.config.simulation.sweeps
    seeds = volume_seeds(p.config)
    for n, seed in enumerate(seeds):
        volume = gibbs_sample(spec, params, sweeps, seed)
        path = write_volume(p.path("volumes") / f"vol_{n:03d}", volume, params, p.command, p.config_hash)
        p.record(path, seed=seed, sweeps=sweeps)
    p.done(volumes=len(seeds))


def stage_sample(p: Pipeline) -> None:
    sampling = p.config.sampling
    rows = []
    for name, volume, _ in _load_volumes(p):
        if volume.seed is None:
            raise InvalidInputError(f"volume {name} has no seed to derive sampling seeds from")
        for geometry in sampling.geometries:
            repeats = 1 if geometry == Geometry.FULL_VOLUME else sampling.positions_per_seed
            for position in range(repeats):
                seed = draw_seed(volume.seed, geometry, position)
                obs = draw_observation(volume, geometry, sampling.planes, sampling.delta_z, seed)
                rows.append({"volume": name, **observation_row(obs)})
    p.record(write_table(p.path("observations.csv"), "observations", rows, p.stamp()), rows=len(rows))
    p.done(observations=len(rows))


def _recovery_row(r: RecoveryReport) -> dict[str, Any]:
    return {
        "geometry": r.geometry.value if r.geometry else "",
        "seed": r.seed,
        "budget": r.budget,
        "mae_alpha": r.mae_alpha,
        "rmse_alpha": r.rmse_alpha,
        "mae_B": r.mae_B,
        "rmse_B": r.rmse_B,
        "converged": r.converged,
        "plane_zs": ";".join(str(z) for z in r.plane_zs),
    }


def stage_estimate(p: Pipeline) -> None:
    frame = read_table(p.path("observations.csv"), "observations")
    volumes = {name: (volume, params) for name, volume, params in _load_volumes(p)}
    reports: list[RecoveryReport] = []
    for row in frame.to_dict("records"):
        name = row["volume"]
        if name not in volumes:
            raise InvalidInputError(f"observations refer to unknown volume {name}")
        volume, truth = volumes[name]
        if truth is None:
            raise InvalidInputError(f"volume {name} records no generating parameters to score against")
        obs = observation_from_row(row, volume.spec.dims)
        result = fit(obs, volume, truth.K, p.config.estimation)
        if not result.converged:
            p.warn(result.warning, volume=name, geometry=obs.geometry.value, seed=obs.seed)
        reports.append(score_fit(result, truth, obs, volume.seed))

    n_bad = sum(1 for r in reports if not r.converged)
    warning = f"{n_bad} of {len(reports)} fits did not converge" if n_bad else None
    rows = [_recovery_row(r) for r in reports]
    p.record(write_table(p.path("recovery.csv"), "recovery", rows, p.stamp(), warning=warning), rows=len(rows))

    summaries = summarize(reports)
    p.record(
        write_table(
            p.path("recovery_summary.csv"),
            "recovery_summary",
            [s.model_dump(mode="json") for s in summaries],
            p.stamp(),
            warning=warning,
        ),
        rows=len(summaries),
    )
    present = {r.geometry for r in reports}
    tests = [
        paired_sign_test(reports, first, second, "mae_B")
        for first, second in (
            (Geometry.INDEPENDENT_2D, Geometry.SERIAL_3D),
            (Geometry.SERIAL_3D, Geometry.FULL_VOLUME),
        )
        if first in present and second in present
    ]
    p.record(
        write_table(p.path("sign_tests.csv"), "sign_tests", [t.model_dump(mode="json") for t in tests], p.stamp()),
        rows=len(tests),
    )
    p.done(fits=len(reports), not_converged=n_bad)


# ── Section statistics ──────────────────────────────────────────────


def _stats_sections(p: Pipeline) -> list[SectionTable]:
    if p.config.stats.cells is not None:
        return read_cells(p.config.stats.cells)
    name, volume, _ = _load_volumes(p)[0]
    p.log(RunEvent.STAGE_DONE, stage="sections_from_volume", volume=name)
    return sections_from_volume(volume)


def stage_stats(p: Pipeline) -> None:
    cfg = p.config.stats
    sections = _stats_sections(p)
    cells = [c for s in sections for c in s.cells]
    seed = p.stage_seed("stats")
    stamp = p.stamp(seed)

    fractions = abundance(cells)
    p.record(
        write_table(
            p.path("abundance.csv"),
            "abundance",
            [{"type": t, "fraction": f} for t, f in fractions.items()],
            stamp,
        ),
        rows=len(fractions),
    )

    M = min(cfg.M, len(sections))
    warning = f"M={cfg.M} exceeds the {len(sections)} available sections; used M={M}" if M < cfg.M else None
    if warning:
        p.warn(warning)
    det = [detectability(sections, t, M, cfg.k, cfg.trials, seed) for t in fractions]
    p.record(
        write_table(
            p.path("detectability.csv"),
            "detectability",
            [{"type": d.type_label, "M": d.M, "k": d.k, "trials": d.trials, "fraction": d.fraction} for d in det],
            stamp,
            warning=warning,
        ),
        rows=len(det),
    )

    targets = [cfg.target_type] if cfg.target_type is not None else list(fractions)
    partners = list(fractions)
    enrichment_rows = []
    for target in targets:
        for section in sections:
            run = neighborhood_enrichment(section, target, cfg.radius, cfg.n_permutations, seed, partners)
            enrichment_rows += [
                {
                    "section": r.section_index,
                    "target": r.target_type,
                    "partner": r.partner_type,
                    "z_score": r.z_score,
                    "observed": r.observed_count,
                    "null_mean": r.null_mean,
                    "null_std": r.null_std,
                    "radius": r.radius,
                    "n_permutations": r.n_permutations,
                    "degenerate_null": r.degenerate_null,
                }
                for r in run.results
            ]
    p.record(write_table(p.path("enrichment.csv"), "enrichment", enrichment_rows, stamp), rows=len(enrichment_rows))

    per_section = []
    summary = []
    for target in targets:
        profile = section_stability_profile(sections, target, cfg.radius, cfg.n_permutations, seed)
        for ps in profile.partners:
            per_section += [
                {"target": target, "partner": ps.partner_type, "section": s, "z_score": z}
                for s, z in zip(ps.section_indices, ps.z_scores)
            ]
            summary.append(
                {
                    "target": target,
                    "radius": profile.radius,
                    "partner": ps.partner_type,
                    "n_sections": len(ps.z_scores),
                    "iqr": ps.iqr,
                    "frac_abs_z_gt_2": ps.frac_abs_z_gt_2,
                    "undefined_spread": profile.undefined_spread,
                }
            )
    p.record(write_table(p.path("stability.csv"), "stability", per_section, stamp), rows=len(per_section))
    p.record(
        write_table(p.path("stability_summary.csv"), "stability_summary", summary, stamp),
        rows=len(summary),
    )
    p.done(sections=len(sections), cells=len(cells), targets=len(targets))


# ── Reconstruction ──────────────────────────────────────────────────


def infer_delta_z(sections: list[SectionTable]) -> float:
    """Median spacing between consecutive section depths."""
    zs = sorted({s.z for s in sections})
    if len(zs) < 2:
        raise InvalidInputError("cannot infer delta_z from fewer than two sections; set matching.delta_z")
    return float(np.median(np.diff(zs)))


def _matching_sections(p: Pipeline, path: str | None) -> list[SectionTable]:
    if path is None:
        raise ConfigError(f"'{p.command}' needs a cell table (matching.cells)")
    return read_cells(path)


def stage_reconstruct(p: Pipeline) -> None:
    cfg = p.config.matching
    sections = _matching_sections(p, cfg.cells)
    delta_z = cfg.delta_z or infer_delta_z(sections)
    rec = reconstruct(sections, delta_z, cfg.kappa, cfg.min_type_count, cfg.split_long_chains)

    low = sorted(t for t, s in rec.stats.per_type.items() if s.low_confidence)
    warning = f"pooled size statistics used for low-count types: {', '.join(low)}" if low else None
    if warning:
        p.warn(warning)
    p.record(write_points(p.path("points.csv"), rec.points, p.stamp()), rows=len(rec.points), warning=warning)

    if cfg.write_matches:
        payload = {
            "command": p.command,
            "config_hash": p.config_hash,
            "delta_z": delta_z,
            "matches": [m.model_dump(mode="json") for m in rec.matches],
        }
        path = atomic_write_text(p.path("matches.json"), json.dumps(payload, indent=2, sort_keys=True) + "\n")
        p.record(path, pairs=sum(len(m.pairs) for m in rec.matches))
    p.done(delta_z=delta_z, chains=len(rec.chains), shared=rec.n_shared, split=rec.n_split)


# ── Reconstruction evaluation ───────────────────────────────────────


def _reference(p: Pipeline) -> ReferenceStack:
    cfg = p.config.evaluation
    if cfg is None:
        raise ConfigError("'evaluate' needs an 'evaluation' block")
    if cfg.reference is not None:
        return read_reference(cfg.reference, cfg.base_dz)
    syn = cfg.synthetic
    ref = synth_sphere_stack(
        syn.n_cells, syn.types, syn.volume_dims, cfg.base_dz or syn.base_dz, p.stage_seed("evaluate"), syn.max_tries
    )
    path = write_cells(p.path("reference_cells.csv"), ref.sections, p.stamp(p.stage_seed("evaluate")), ref.cells)
    p.record(path, rows=sum(len(s.cells) for s in ref.sections))
    return ref


def _coverage_row(report: CoverageReport, offset: str) -> dict[str, Any]:
    loc = report.localization
    return {
        "delta_z": report.delta_z,
        "offset": offset,
        "sc_frac": report.sc_fraction,
        "lc_frac": report.lc_fraction,
        "captured_frac": report.captured_fraction,
        "missed_frac": report.missed_fraction,
        "loc_mean": loc.mean,
        "loc_std": loc.std,
        "n_cross_sections": report.n_cross_sections,
        "captured": report.captured_unique,
        "missed": report.missed_unique,
        "total": report.total_unique,
        "link_errors": report.link_errors,
        "loc_n": loc.n,
        "loc_p50": loc.p50,
        "loc_p90": loc.p90,
        "loc_max": loc.max,
    }


def stage_evaluate(p: Pipeline) -> None:
    cfg = p.config.evaluation
    match = p.config.matching
    ref = _reference(p)
    coverage = []
    hist = []
    for delta_z in cfg.delta_zs:
        evaluations = evaluate_all(ref, delta_z, cfg.offsets, match.kappa, match.min_type_count, match.split_long_chains)
        for e in evaluations:
            offset = "pooled" if e.report.offset is None else f"{e.report.offset:g}"
            coverage.append(_coverage_row(e.report, offset))
        hist += [
            {"delta_z": delta_z, "bin_lo": lo, "bin_hi": hi, "count": n}
            for lo, hi, n in localization_histogram(evaluations[-1].errors, cfg.hist_bin_width)
        ]
    p.record(write_table(p.path("coverage.csv"), "coverage", coverage, p.stamp()), rows=len(coverage))
    p.record(write_table(p.path("localization_hist.csv"), "localization_hist", hist, p.stamp()), rows=len(hist))
    p.done(reference_ids=ref.n_unique, delta_zs=len(cfg.delta_zs))


# ── Structures ──────────────────────────────────────────────────────


def stage_structures(p: Pipeline) -> None:
    cfg = p.config.structures
    cloud_path = Path(cfg.cloud) if cfg.cloud else p.path("points.csv")
    cloud = read_points(cloud_path)
    sections = _matching_sections(p, cfg.cells or p.config.matching.cells)
    stamp = p.stamp()

    if cfg.link_radius is not None:
        link_radius = cfg.link_radius
    else:
        stats = compute_size_stats((c for s in sections for c in s.cells), p.config.matching.min_type_count)
        link_radius = default_link_radius(cfg.type_filter, {t: s.radius for t, s in stats.per_type.items()})

    structures = build_structures(cloud, cfg.type_filter, link_radius)
    p.record(
        write_table(
            p.path("structures.csv"),
            "structures",
            [
                {
                    "structure_id": s.structure_id,
                    "n_members": len(s.member_ids),
                    "members": ";".join(s.member_ids),
                    "axis_x": s.axis[0],
                    "axis_y": s.axis[1],
                    "axis_z": s.axis[2],
                    "origin_x": s.origin[0],
                    "origin_y": s.origin[1],
                    "origin_z": s.origin[2],
                    "extent_lo": s.extent[0],
                    "extent_hi": s.extent[1],
                }
                for s in structures
            ],
            stamp,
            extra={"link_radius": link_radius},
        ),
        rows=len(structures),
    )

    planar = count_planar_components(sections, cfg.type_filter, link_radius)
    p.record(
        write_table(
            p.path("planar_components.csv"),
            "planar_components",
            [{"section": k, "components": n} for k, n in planar.items()],
            stamp,
        ),
        rows=len(planar),
    )

    if cfg.source_type is not None:
        comparison = compare_distances(cloud, sections, cfg.source_type, cfg.target_type, structures)
        rows = [
            {"query": comparison.query, **c.model_dump(mode="json")}
            for c in comparison.cells
        ]
        p.record(write_table(p.path("distances.csv"), "distances", rows, stamp), rows=len(rows))

    profile_rows = []
    skipped = 0
    for s in structures:
        if len(s.member_ids) < 3 or not s.extent[1] > s.extent[0]:
            skipped += 1
            continue
        for b in along_structure_profile(s, cloud, cfg.band_radius, cfg.bins, cfg.value):
            profile_rows += [
                {
                    "structure_id": b.structure_id,
                    "bin": b.bin,
                    "arc_lo": b.arc_lo,
                    "arc_hi": b.arc_hi,
                    "arc_coord": b.arc_coord,
                    "count": b.count,
                    "key": key,
                    "value": value,
                }
                for key, value in sorted(b.values.items())
            ]
    p.record(
        write_table(
            p.path("profile.csv"),
            "profile",
            profile_rows,
            stamp,
            extra={"skipped_structures": skipped} if skipped else None,
        ),
        rows=len(profile_rows),
    )
    p.done(structures=len(structures), link_radius=link_radius)


# ── Advisory ────────────────────────────────────────────────────────


def _input(p: Pipeline, given: str | None, default: str) -> Path | None:
    if given is not None:
        return Path(given)
    path = p.path(default)
    return path if path.exists() else None


def _summaries(path: Path | None) -> list[GeometrySummary]:
    if path is None:
        return []
    return [
        GeometrySummary(
            geometry=Geometry(row["geometry"]),
            n_trials=int(row["n_trials"]),
            median_mae_alpha=float(row["median_mae_alpha"]),
            median_mae_B=float(row["median_mae_B"]),
            iqr_mae_B=float(row["iqr_mae_B"]),
            var_mae_B=float(row["var_mae_B"]),
            var_mae_B_by_position=float(row["var_mae_B_by_position"]),
        )
        for row in read_table(path, "recovery_summary").to_dict("records")
    ]


def _iqrs(path: Path | None) -> list[float]:
    if path is None:
        return []
    frame = read_table(path, "stability_summary")
    return [float(v) for v in frame["iqr"].dropna()]


def stage_advise(p: Pipeline) -> None:
    cfg = p.config.advise
    report = advise(
        _summaries(_input(p, cfg.recovery, "recovery_summary.csv")),
        _iqrs(_input(p, cfg.stability, "stability_summary.csv")),
        cfg,
    )
    payload = {"command": p.command, "config_hash": p.config_hash, **report.model_dump(mode="json")}
    path = atomic_write_text(p.path("advisory.json"), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    p.record(path, status=report.status)
    p.summary = render_text(report)
    p.done(status=report.status)


STAGES: dict[str, Callable[[Pipeline], None]] = {
    "simulate": stage_simulate,
    "sample": stage_sample,
    "estimate": stage_estimate,
    "stats": stage_stats,
    "reconstruct": stage_reconstruct,
    "evaluate": stage_evaluate,
    "structures": stage_structures,
    "advise": stage_advise,
}
