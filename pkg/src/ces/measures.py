"""Entanglement figures of merit for two-qubit density matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bell import max_chsh_from_state
from .qcore import (
    SINGLET_KET,
    partial_transpose,
    require_valid_density,
    tensor,
)

# Spin-flip Pauli for the concurrence: the standard y matrix written in the
# computational basis, which is also the basis the conjugation acts in.
# (This is not the same operator as the polarization-frame sigma_y, whose
# eigenbasis R/L coincides with the computational one.)
_FLIP_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])


@dataclass(frozen=True)
class EntanglementReport:
    """All measures evaluated on the same state."""

    fidelity_singlet: float
    concurrence: float
    eof: float
    negativity: float
    log_negativity: float
    s_max: float


def fidelity_singlet(rho) -> float:
    """Overlap <Psi-|rho|Psi-> with the two-photon singlet."""
    mat = require_valid_density(rho)
    value = float(np.real(SINGLET_KET.conj() @ mat @ SINGLET_KET))
    return min(max(value, 0.0), 1.0)


def concurrence(rho) -> float:
    """Two-qubit concurrence.

    C = max(0, l1 - l2 - l3 - l4) where the l_i are the descending square
    roots of the eigenvalues of rho (sy x sy) rho* (sy x sy), with the
    conjugate taken in the computational product basis.  The l_i are
    evaluated as the singular values of sqrt(rho) (sy x sy) sqrt(rho)*,
    which avoids square-rooting noisy zero eigenvalues of the product.
    """
    mat = require_valid_density(rho)
    flip = tensor(_FLIP_Y, _FLIP_Y)
    w, v = np.linalg.eigh(mat)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lams = np.linalg.svd(root @ flip @ root.conj(), compute_uv=False)
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))


def _binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def entanglement_of_formation(rho) -> float:
    """E_F = h((1 + sqrt(1 - C^2))/2), monotone in the concurrence."""
    return eof_from_concurrence(concurrence(rho))


def eof_from_concurrence(c: float) -> float:
    c = min(max(c, 0.0), 1.0)
    return _binary_entropy(0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - c * c))))


def log_negativity(rho) -> tuple[float, float]:
    """Negativity and logarithmic negativity.

    N is the absolute sum of the negative eigenvalues of the partial
    transpose; E_N = log2(2N + 1).
    """
    mat = require_valid_density(rho)
    eigs = np.linalg.eigvalsh(partial_transpose(mat, 1))
    negativity = float(-np.sum(eigs[eigs < 0.0]))
    return negativity, math.log2(2.0 * negativity + 1.0)


def report(rho) -> EntanglementReport:
    """Evaluate every measure, including the inferred CHSH maximum."""
    negativity, e_n = log_negativity(rho)
    return EntanglementReport(
        fidelity_singlet=fidelity_singlet(rho),
        concurrence=concurrence(rho),
        eof=entanglement_of_formation(rho),
        negativity=negativity,
        log_negativity=e_n,
        s_max=max_chsh_from_state(rho).s_value,
    )
