"""Detection chain: projectors, Born probabilities, and the Monte Carlo."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from ces.detection import (
    BASIS_LABELS,
    DetectorParams,
    MeasurementSetting,
    _event_cumulatives,
    _simulate_batch,
    analyzer_projectors,
    basis_projectors,
    outcome_probabilities,
    simulate_counts,
    simulate_tomography_dataset,
)
from ces.errors import DataError, ValidationError
from ces.qcore import KET_D, KET_H
from ces.rng import BATCH_SIZE, iter_batches
from conftest import dephased_singlet, singlet_dm

IDEAL = DetectorParams()


class TestAnalyzerProjectors:
    def test_zero_degrees_is_horizontal(self):
        p_up, _ = analyzer_projectors(0.0)
        np.testing.assert_allclose(p_up, np.outer(KET_H, KET_H.conj()), atol=1e-15)

    def test_45_degrees_is_diagonal(self):
        p_up, _ = analyzer_projectors(45.0)
        np.testing.assert_allclose(p_up, np.outer(KET_D, KET_D.conj()), atol=1e-15)
        overlap_h = KET_H.conj() @ KET_D
        overlap_v = (KET_D - overlap_h * KET_H)  # remainder along V
        assert abs(overlap_h) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert np.linalg.norm(overlap_v) == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 10.0, 22.5, 45.0, 67.5, 133.0])
    def test_completeness_and_orthogonality(self, theta):
        p_up, p_down = analyzer_projectors(theta)
        np.testing.assert_array_equal(p_up + p_down, np.eye(2))
        assert np.real(np.trace(p_up)) == pytest.approx(1.0, abs=1e-12)
        assert np.real(np.trace(p_down)) == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(p_up @ p_down)) <= 1e-12


class TestOutcomeProbabilities:
    def test_singlet_anticorrelated_at_equal_angles(self):
        for angle in (0.0, 30.0, 45.0):
            p_uu, p_ud, p_du, p_dd = outcome_probabilities(
                singlet_dm(), MeasurementSetting(angle, angle)
            )
            assert p_uu == pytest.approx(0.0, abs=1e-12)
            assert p_dd == pytest.approx(0.0, abs=1e-12)
            assert p_ud == pytest.approx(0.5, abs=1e-12)
            assert p_du == pytest.approx(0.5, abs=1e-12)

    def test_maximally_mixed_uniform(self):
        probs = outcome_probabilities(np.eye(4) / 4.0, MeasurementSetting(17.0, 61.0))
        np.testing.assert_allclose(probs, [0.25] * 4, atol=1e-12)

    def test_singlet_cos_rule(self):
        p_uu, p_ud, p_du, p_dd = outcome_probabilities(
            singlet_dm(), MeasurementSetting(0.0, 22.5)
        )
        e = p_dd + p_uu - p_ud - p_du
        assert e == pytest.approx(-math.cos(math.radians(45.0)), abs=1e-12)

    def test_probabilities_sum_to_one(self, rng):
        from conftest import random_density

        for _ in range(10):
            probs = outcome_probabilities(
                random_density(rng, 4), MeasurementSetting(rng.uniform(0, 180), rng.uniform(0, 180))
            )
            assert sum(probs) == pytest.approx(1.0, abs=1e-10)

    def test_invalid_state_rejected(self):
        with pytest.raises(ValidationError):
            outcome_probabilities(0.5 * np.eye(4), MeasurementSetting(0, 0))


class TestSimulateCounts:
    def test_singlet_parallel_analyzers(self):
        n = 1_000_000
        rec = simulate_counts(singlet_dm(), MeasurementSetting(0, 0), n, IDEAL, seed=7)
        total = rec.total
        # Diagonal cells are exactly zero in probability.
        assert rec.n_uu / total < 0.003
        assert rec.n_dd / total < 0.003
        # Routing keeps half the sequences; 0.002 is 4 binomial sigma.
        assert total / n == pytest.approx(0.5, abs=0.002)

    def test_zero_efficiency(self):
        rec = simulate_counts(
            singlet_dm(),
            MeasurementSetting(0, 45),
            5000,
            DetectorParams(eta_det=0.0, dark_rate=0.3),
            seed=3,
        )
        assert rec.total == 0
        assert rec.n_discarded == 5000

    def test_chsh_close_to_analytic(self):
        # ~1e4 coincidences per setting must land within 0.05 of analytic S.
        from ces.bell import analytic_chsh, chsh_from_counts
        from ces.protocol import final_state, noise_for_fidelity_werner

        rho = final_state(noise_for_fidelity_werner(0.902), 0.0)
        quad = (0.0, 45.0, 22.5, -22.5)
        settings = [(0.0, 22.5), (0.0, -22.5), (45.0, 22.5), (45.0, -22.5)]
        records = [
            simulate_counts(rho, MeasurementSetting(*s), 20_000, IDEAL, seed=100 + i)
            for i, s in enumerate(settings)
        ]
        assert min(rec.total for rec in records) > 9000
        result = chsh_from_counts(records, quad)
        assert abs(result.s_value - analytic_chsh(rho, quad).s_value) < 0.05

    def test_accounting_is_exact(self):
        det = DetectorParams(eta_det=0.37, dark_rate=0.02, window_fraction=0.65)
        n = 123_457
        rec = simulate_counts(dephased_singlet(0.8), MeasurementSetting(10, 70), n, det, seed=21)
        assert rec.total + rec.n_discarded == n

    def test_fixed_seed_bit_identical(self):
        kwargs = dict(
            rho=dephased_singlet(0.9),
            setting=MeasurementSetting(5.0, 40.0),
            n_sequences=70_000,
            det=DetectorParams(eta_det=0.5, dark_rate=0.01),
            seed=99,
        )
        a = simulate_counts(**kwargs)
        b = simulate_counts(**kwargs)
        assert a == b

    def test_scheduling_independence(self):
        # Any execution plan over the fixed logical batches gives the same
        # counts: serial order, reversed order, and a thread pool must agree.
        rho = dephased_singlet(0.85)
        det = DetectorParams(eta_det=0.4, dark_rate=0.005)
        setting = MeasurementSetting(12.0, 57.0)
        n = 3 * BATCH_SIZE + 1234
        seed = 31337
        reference = simulate_counts(rho, setting, n, det, seed)

        cums = _event_cumulatives(
            rho, analyzer_projectors(setting.alpha_deg), analyzer_projectors(setting.beta_deg)
        )
        batches = list(iter_batches(n))

        def run_plan(plan, workers=None):
            counts = np.zeros((2, 2), dtype=np.int64)
            discarded = 0
            if workers:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(
                        pool.map(lambda b: _simulate_batch(cums, det, seed, (), b[0], b[1]), plan)
                    )
            else:
                results = [_simulate_batch(cums, det, seed, (), b[0], b[1]) for b in plan]
            for c, d in results:
                counts += c
                discarded += d
            return counts, discarded

        for plan, workers in ((batches, None), (batches[::-1], None), (batches, 4)):
            counts, discarded = run_plan(plan, workers)
            assert counts[0, 0] == reference.n_uu
            assert counts[0, 1] == reference.n_ud
            assert counts[1, 0] == reference.n_du
            assert counts[1, 1] == reference.n_dd
            assert discarded == reference.n_discarded

    def test_frequencies_converge_to_born_rule(self):
        # 5-sigma binomial agreement per cell at 1e5+ coincidences.
        states = [singlet_dm(), np.eye(4) / 4.0, dephased_singlet(0.7)]
        setting = MeasurementSetting(15.0, 75.0)
        for idx, rho in enumerate(states):
            rec = simulate_counts(rho, setting, 400_000, IDEAL, seed=555 + idx)
            probs = outcome_probabilities(rho, setting)
            total = rec.total
            assert total >= 100_000
            for cell, p in zip(rec.counts(), probs):
                sigma = math.sqrt(max(p * (1 - p) * total, 1.0))
                assert abs(cell - p * total) <= 5.0 * sigma

    def test_dark_rate_degrades_correlation(self):
        from ces.bell import correlation_from_counts

        magnitudes = []
        for i, dark in enumerate((0.0, 0.02, 0.05, 0.1, 0.2)):
            rec = simulate_counts(
                singlet_dm(),
                MeasurementSetting(0, 0),
                400_000,
                DetectorParams(eta_det=1.0, dark_rate=dark),
                seed=777,
            )
            magnitudes.append(abs(correlation_from_counts(rec).value))
        assert all(a > b for a, b in zip(magnitudes, magnitudes[1:]))

    def test_rejects_bad_sequence_count(self):
        with pytest.raises(DataError):
            simulate_counts(singlet_dm(), MeasurementSetting(0, 0), 0, IDEAL, seed=1)


class TestWindowModel:
    def test_window_cuts_rate_by_acceptance_factor(self):
        det_full = DetectorParams(eta_det=1.0, window_fraction=1.0)
        det_cut = DetectorParams(eta_det=1.0, window_fraction=0.4)
        n = 400_000
        full = simulate_counts(singlet_dm(), MeasurementSetting(0, 0), n, det_full, seed=8)
        cut = simulate_counts(singlet_dm(), MeasurementSetting(0, 0), n, det_cut, seed=8)
        assert cut.total / full.total == pytest.approx(0.4, abs=0.01)

    def test_late_depolarization_only_hits_late_photons(self):
        # With the window at the late boundary, accepted photons are clean.
        det = DetectorParams(eta_det=1.0, window_fraction=0.4, late_emission_error=1.0)
        rec = simulate_counts(singlet_dm(), MeasurementSetting(0, 0), 200_000, det, seed=9)
        assert (rec.n_uu + rec.n_dd) / rec.total < 0.003


class TestTomographyDatasetSimulation:
    def test_singlet_anticorrelated_in_every_basis(self):
        ds = simulate_tomography_dataset(singlet_dm(), 100_000, IDEAL, seed=12)
        for label_a, label_b, rec in ds.records:
            if label_a == label_b:
                assert (rec.n_uu + rec.n_dd) / rec.total < 0.01

    def test_maximally_mixed_uniform_cells(self):
        n = 100_000
        ds = simulate_tomography_dataset(np.eye(4) / 4.0, n, IDEAL, seed=13)
        for _, _, rec in ds.records:
            total = rec.total
            sigma = math.sqrt(0.25 * 0.75 * total)
            for cell in rec.counts():
                assert abs(cell - 0.25 * total) <= 3.5 * sigma

    def test_nine_distinct_bases(self):
        ds = simulate_tomography_dataset(singlet_dm(), 100, IDEAL, seed=14)
        pairs = ds.basis_pairs()
        assert len(pairs) == 9
        assert len(set(pairs)) == 9
        assert {a for a, _ in pairs} == set(BASIS_LABELS)

    def test_round_trip_through_reconstruction(self):
        from ces.qcore import trace_distance
        from ces.tomography import mle_reconstruct

        rho = dephased_singlet(0.83)
        ds = simulate_tomography_dataset(rho, 200_000, IDEAL, seed=15)
        fit = mle_reconstruct(ds)
        assert trace_distance(fit.rho, rho) < 0.02

    def test_basis_projector_completeness(self):
        for label in BASIS_LABELS:
            p_up, p_down = basis_projectors(label)
            np.testing.assert_array_equal(p_up + p_down, np.eye(2))


class TestSettingNormalization:
    def test_angles_stored_modulo_180(self):
        s = MeasurementSetting(190.0, -22.5)
        assert s.alpha_deg == pytest.approx(10.0)
        assert s.beta_deg == pytest.approx(157.5)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            MeasurementSetting(float("nan"), 0.0)

    def test_projectors_periodic(self):
        a = analyzer_projectors(30.0)
        b = analyzer_projectors(210.0)
        np.testing.assert_allclose(a[0], b[0], atol=1e-12)
