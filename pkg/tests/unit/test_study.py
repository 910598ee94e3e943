"""Unit tests for the matched-budget recovery study and its summaries."""

from __future__ import annotations

import pytest

from contracts.estimation import MPLEConfig, RecoveryReport
from contracts.experiment import Regime
from contracts.lattice import LatticeSpec
from contracts.observation import Geometry
from runtime.estimation.study import draw_seed, paired_sign_test, run_recovery_study, summarize
from runtime.mrf.regimes import regime_params


def _report(geometry: Geometry, seed: int, mae_B: float, mae_alpha: float = 0.1) -> RecoveryReport:
    return RecoveryReport(
        geometry=geometry, seed=seed, mae_alpha=mae_alpha, rmse_alpha=mae_alpha, mae_B=mae_B, rmse_B=mae_B
    )


# ── seeds ───────────────────────────────────────────────────────────


class TestDrawSeed:
    def test_deterministic(self) -> None:
        assert draw_seed(5, Geometry.SERIAL_3D, 0) == draw_seed(5, Geometry.SERIAL_3D, 0)

    def test_streams_are_distinct(self) -> None:
        seeds = {
            draw_seed(5, Geometry.SERIAL_3D, 0),
            draw_seed(5, Geometry.SERIAL_3D, 1),
            draw_seed(5, Geometry.INDEPENDENT_2D, 0),
            draw_seed(6, Geometry.SERIAL_3D, 0),
        }
        assert len(seeds) == 4


# ── sign test ───────────────────────────────────────────────────────


class TestPairedSignTest:
    def test_all_first_larger(self) -> None:
        reports = []
        for seed in range(6):
            reports.append(_report(Geometry.INDEPENDENT_2D, seed, 0.5))
            reports.append(_report(Geometry.SERIAL_3D, seed, 0.2))
        t = paired_sign_test(reports, Geometry.INDEPENDENT_2D, Geometry.SERIAL_3D, "mae_B")
        assert t.n_pairs == 6
        assert t.n_first_larger == 6
        assert t.p_value == pytest.approx(0.015625)

    def test_ties_are_dropped(self) -> None:
        reports = [
            _report(Geometry.INDEPENDENT_2D, 0, 0.3),
            _report(Geometry.SERIAL_3D, 0, 0.3),
            _report(Geometry.INDEPENDENT_2D, 1, 0.4),
            _report(Geometry.SERIAL_3D, 1, 0.1),
        ]
        t = paired_sign_test(reports, Geometry.INDEPENDENT_2D, Geometry.SERIAL_3D, "mae_B")
        assert t.n_pairs == 1
        assert t.p_value == pytest.approx(0.5)

    def test_no_pairs(self) -> None:
        t = paired_sign_test([_report(Geometry.SERIAL_3D, 0, 0.1)], Geometry.INDEPENDENT_2D, Geometry.SERIAL_3D, "mae_B")
        assert t.n_pairs == 0
        assert t.p_value == 1.0

    def test_repeated_positions_are_averaged(self) -> None:
        reports = [
            _report(Geometry.INDEPENDENT_2D, 0, 0.1),
            _report(Geometry.INDEPENDENT_2D, 0, 0.7),
            _report(Geometry.FULL_VOLUME, 0, 0.35),
        ]
        t = paired_sign_test(reports, Geometry.INDEPENDENT_2D, Geometry.FULL_VOLUME, "mae_B")
        assert t.n_first_larger == 1


# ── summaries ───────────────────────────────────────────────────────


class TestSummarize:
    def test_medians_and_order(self) -> None:
        reports = [
            _report(Geometry.INDEPENDENT_2D, 0, 0.2),
            _report(Geometry.INDEPENDENT_2D, 1, 0.4),
            _report(Geometry.INDEPENDENT_2D, 2, 0.9),
            _report(Geometry.FULL_VOLUME, 0, 0.05),
        ]
        out = summarize(reports)
        assert [s.geometry for s in out] == [Geometry.FULL_VOLUME, Geometry.INDEPENDENT_2D]
        indep = out[1]
        assert indep.n_trials == 3
        assert indep.median_mae_B == pytest.approx(0.4)
        assert indep.var_mae_B_by_position == 0.0

    def test_within_seed_variance(self) -> None:
        reports = [_report(Geometry.SERIAL_3D, 0, 0.2), _report(Geometry.SERIAL_3D, 0, 0.4)]
        (s,) = summarize(reports)
        assert s.var_mae_B_by_position == pytest.approx(0.01)
        assert s.var_mae_B == 0.0

    def test_empty(self) -> None:
        assert summarize([]) == []


# ── study ───────────────────────────────────────────────────────────


class TestRunRecoveryStudy:
    def _run(self, **kwargs):
        return run_recovery_study(
            LatticeSpec(dims=(6, 6, 6)),
            regime_params(Regime.CLUSTERED, 3),
            [1, 2],
            sweeps=3,
            planes=3,
            config=MPLEConfig(max_iters=50),
            **kwargs,
        )

    def test_report_counts(self) -> None:
        result = self._run(positions_per_seed=2)
        counts = {g: sum(1 for r in result.reports if r.geometry == g) for g in Geometry}
        assert counts[Geometry.FULL_VOLUME] == 2
        assert counts[Geometry.SERIAL_3D] == 4
        assert counts[Geometry.INDEPENDENT_2D] == 4
        assert len(result.summaries) == 3
        assert len(result.sign_tests) == 2

    def test_matched_budget(self) -> None:
        result = self._run()
        for r in result.reports:
            if r.geometry == Geometry.FULL_VOLUME:
                assert r.budget == 216
                assert r.plane_zs == ()
            else:
                assert r.budget == 3 * 36
                assert len(r.plane_zs) == 3

    def test_deterministic(self) -> None:
        assert self._run().reports == self._run().reports

    def test_on_fit_callback(self) -> None:
        seen = []
        self._run(geometries=[Geometry.FULL_VOLUME], on_fit=lambda report, result: seen.append(result.converged))
        assert len(seen) == 2
