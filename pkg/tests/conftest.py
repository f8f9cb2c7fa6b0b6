"""Shared state generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from ces.qcore import SINGLET_KET


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_density(rng: np.random.Generator, dim: int = 4, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m)


def random_pure(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_hermitian(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + g.conj().T)


def singlet_dm() -> np.ndarray:
    return np.outer(SINGLET_KET, SINGLET_KET.conj())


def dephased_singlet(v: float) -> np.ndarray:
    """Photon-pair singlet with its coherence scaled by v (sigma basis)."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = rho[2, 2] = 0.5
    rho[1, 2] = rho[2, 1] = -0.5 * v
    return rho


def werner(p: float) -> np.ndarray:
    return p * singlet_dm() + (1.0 - p) * np.eye(4) / 4.0


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20210905)
