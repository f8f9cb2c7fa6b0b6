"""Gaussian lifetime fitting."""

from __future__ import annotations

import numpy as np
import pytest

from ces.errors import DataError
from ces.lifetime import fit_lifetime

GRID = np.array([0.8, 2.0, 4.0, 6.0, 8.0, 10.0])


def decay(n0, tau, dt):
    return n0 * np.exp(-((dt / tau) ** 2))


class TestNoiselessRecovery:
    def test_exact_round_trip(self):
        values = decay(0.434, 5.7, GRID)
        fit = fit_lifetime(GRID, values, kind="N")
        assert fit.converged
        assert fit.n0 == pytest.approx(0.434, rel=1e-6)
        assert fit.tau_e_us == pytest.approx(5.7, rel=1e-6)
        assert fit.residual_rms < 1e-9

    def test_log_negativity_inputs_converted_exactly(self):
        n_values = decay(0.434, 5.7, GRID)
        en_values = np.log2(2.0 * n_values + 1.0)
        fit = fit_lifetime(GRID, en_values, kind="EN")
        assert fit.n0 == pytest.approx(0.434, rel=1e-6)
        assert fit.tau_e_us == pytest.approx(5.7, rel=1e-6)

    def test_mixed_kinds_per_point(self):
        n_values = decay(0.4, 5.0, GRID)
        kinds = np.array(["N", "EN", "N", "EN", "N", "N"], dtype=object)
        values = n_values.copy()
        values[1] = np.log2(2 * n_values[1] + 1)
        values[3] = np.log2(2 * n_values[3] + 1)
        fit = fit_lifetime(GRID, values, kind=kinds)
        assert fit.tau_e_us == pytest.approx(5.0, rel=1e-6)


class TestNoisyRecovery:
    def test_tau_unbiased_under_noise(self):
        # 200 repetitions of 5% multiplicative noise: the mean fitted tau
        # stays within 2% of the truth.
        rng = np.random.default_rng(808)
        taus = []
        truth = decay(0.434, 5.7, GRID)
        for _ in range(200):
            noisy = truth * (1.0 + 0.05 * rng.normal(size=GRID.size))
            taus.append(fit_lifetime(GRID, noisy, kind="N").tau_e_us)
        assert np.mean(taus) == pytest.approx(5.7, rel=0.02)

    def test_weighted_fit_uses_sigma(self):
        rng = np.random.default_rng(809)
        truth = decay(0.4, 5.7, GRID)
        sigma = np.full(GRID.size, 0.01)
        noisy = truth + sigma * rng.normal(size=GRID.size)
        fit = fit_lifetime(GRID, noisy, kind="N", sigma=sigma)
        assert fit.converged
        # Parameter covariance from the weighted Jacobian is sane.
        assert fit.covariance.shape == (2, 2)
        assert fit.covariance[1, 1] > 0.0
        assert abs(fit.tau_e_us - 5.7) < 5.0 * np.sqrt(fit.covariance[1, 1])


class TestValidation:
    def test_insufficient_points(self):
        with pytest.raises(DataError):
            fit_lifetime(np.array([0.0, 1.0]), np.array([0.4, 0.3]))

    def test_negative_time_rejected(self):
        with pytest.raises(DataError):
            fit_lifetime(np.array([-1.0, 1.0, 2.0]), np.array([0.4, 0.3, 0.2]))

    def test_unknown_kind_rejected(self):
        with pytest.raises(DataError):
            fit_lifetime(GRID, decay(0.4, 5.0, GRID), kind="X")

    def test_bad_sigma_rejected(self):
        with pytest.raises(DataError):
            fit_lifetime(GRID, decay(0.4, 5.0, GRID), sigma=np.zeros(GRID.size))


class TestModelConsistency:
    def test_fit_evaluates_model_at_parameters(self):
        values = decay(0.3, 4.2, GRID)
        fit = fit_lifetime(GRID, values, kind="N")
        np.testing.assert_allclose(fit.model(GRID), values, atol=1e-9)
