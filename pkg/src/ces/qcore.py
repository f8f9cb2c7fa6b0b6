"""Exact dense linear algebra on small Hilbert spaces (dim <= 8).

Every other module builds on the basis conventions fixed here:

* photonic qubit: ``|0> = |sigma+>``, ``|1> = |sigma->``
* two-photon product ordering: ``{++, +-, -+, --}``
* atomic qubit: ``|0> = |1,-1>``, ``|1> = |1,+1>``
* linear polarization: ``|H> = (|s+> + |s->)/sqrt(2)`` and
  ``|V> = -i(|s+> - |s->)/sqrt(2)``, which makes the ideal photon pair the
  standard linear-polarization singlet (up to a global phase) so that the
  two-analyzer correlation is ``E(a, b) = -cos 2(a - b)``
* diagonal basis ``|D> = (|H> + |V>)/sqrt(2)``, ``|A> = (|H> - |V>)/sqrt(2)``
* circular basis ``|R> = (|H> + i|V>)/sqrt(2)``, ``|L> = (|H> - i|V>)/sqrt(2)``
  (with the conventions above, R/L coincide with sigma+/sigma-)

States are immutable after construction and all functions are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
MIN_EIGENVALUE_TOL = -1e-9

_SQRT2 = np.sqrt(2.0)

# Single-qubit kets in the sigma+/sigma- computational basis.
KET_SP = np.array([1.0, 0.0], dtype=complex)
KET_SM = np.array([0.0, 1.0], dtype=complex)
KET_H = (KET_SP + KET_SM) / _SQRT2
KET_V = -1j * (KET_SP - KET_SM) / _SQRT2
KET_D = (KET_H + KET_V) / _SQRT2
KET_A = (KET_H - KET_V) / _SQRT2
KET_R = (KET_H + 1j * KET_V) / _SQRT2
KET_L = (KET_H - 1j * KET_V) / _SQRT2

#: Two-photon singlet ket (|s+ s-> - |s- s+>)/sqrt(2).
SINGLET_KET = (np.kron(KET_SP, KET_SM) - np.kron(KET_SM, KET_SP)) / _SQRT2

IDENTITY_2 = np.eye(2, dtype=complex)
IDENTITY_4 = np.eye(4, dtype=complex)


def _projector(ket: np.ndarray) -> np.ndarray:
    return np.outer(ket, ket.conj())


# Polarization Bloch frame: x = D/A, y = R/L, z = H/V.  This is the frame in
# which analyzer rotations by an angle a sweep the z-x great circle.
PAULI_X = _projector(KET_D) - _projector(KET_A)
PAULI_Y = _projector(KET_R) - _projector(KET_L)
PAULI_Z = _projector(KET_H) - _projector(KET_V)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class StateVector:
    """Pure state of a dim-dimensional system (a ket)."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes) -> None:
        arr = np.array(amplitudes, dtype=complex).reshape(-1)
        if arr.size == 0:
            raise DimensionError("state vector must have positive dimension")
        self.amplitudes = _freeze(arr)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n)

    def density(self) -> "DensityMatrix":
        """Outer product |psi><psi| of the normalized ket."""
        psi = self.normalize().amplitudes
        return DensityMatrix(np.outer(psi, psi.conj()))

    def __repr__(self) -> str:
        return f"StateVector(dim={self.dim})"


class DensityMatrix:
    """Density operator stored as a dense complex matrix.

    Construction only checks the shape; physicality (Hermiticity, unit trace,
    positivity) is reported by :func:`validate_density` so that diagnostic
    paths (e.g. linear-inversion tomography) can hold unphysical matrices and
    flag them instead of failing.
    """

    __slots__ = ("matrix",)

    def __init__(self, entries) -> None:
        arr = np.array(entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {arr.shape}")
        self.matrix = _freeze(arr)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix":
        return StateVector(ket).density()

    # JSON wire form used by every CLI subcommand:
    # {"dim": d, "re": [d*d row-major], "im": [d*d row-major]}

    def to_json_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": [float(x) for x in self.matrix.real.reshape(-1)],
            "im": [float(x) for x in self.matrix.imag.reshape(-1)],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DensityMatrix":
        try:
            dim = int(obj["dim"])
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed density-matrix JSON: {exc}") from exc
        if re.size != dim * dim or im.size != dim * dim:
            raise ValidationError(
                f"density-matrix JSON needs {dim * dim} entries per part, "
                f"got re={re.size}, im={im.size}"
            )
        return cls((re + 1j * im).reshape(dim, dim))

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim}, trace={self.trace().real:.6f})"


def as_matrix(rho) -> np.ndarray:
    """Coerce a DensityMatrix, StateVector, or array into a square ndarray."""
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    if isinstance(rho, StateVector):
        return rho.density().matrix
    arr = np.asarray(rho, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def tensor(a, b) -> np.ndarray:
    """Kronecker product with this package's subsystem ordering (a is the
    slower-varying index)."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_transpose(rho, subsystem: int) -> np.ndarray:
    """Transpose one tensor factor of a two-qubit operator.

    The result is Hermitian and trace-preserving but may be non-positive;
    its negative eigenvalues feed the negativity.  Only dim-4 (qubit x qubit)
    operators are supported.
    """
    mat = as_matrix(rho)
    if mat.shape != (4, 4):
        raise DimensionError(f"partial transpose requires a 4x4 matrix, got {mat.shape}")
    if subsystem not in (0, 1):
        raise DimensionError(f"subsystem must be 0 or 1, got {subsystem}")
    blocks = mat.reshape(2, 2, 2, 2)  # (row A, row B, col A, col B)
    if subsystem == 0:
        out = blocks.transpose(2, 1, 0, 3)
    else:
        out = blocks.transpose(0, 3, 2, 1)
    return out.reshape(4, 4)


_PARTIAL_TRACE_SPLITS = {4: (2, 2), 8: (2, 4)}


def partial_trace(rho, traced_subsystem: int, dims: tuple[int, int] | None = None) -> DensityMatrix:
    """Trace out one factor of a bipartite state.

    ``dims`` gives the (dim A, dim B) factorization; when omitted it defaults
    to (2, 2) for dim 4 and (2, 4) for dim 8 (atom x photon pair).
    """
    mat = as_matrix(rho)
    d = mat.shape[0]
    if dims is None:
        if d not in _PARTIAL_TRACE_SPLITS:
            raise DimensionError(f"cannot infer a bipartite split for dim {d}")
        dims = _PARTIAL_TRACE_SPLITS[d]
    da, db = dims
    if da * db != d:
        raise DimensionError(f"split {dims} does not factor dim {d}")
    if traced_subsystem not in (0, 1):
        raise DimensionError(f"traced_subsystem must be 0 or 1, got {traced_subsystem}")
    blocks = mat.reshape(da, db, da, db)
    if traced_subsystem == 0:
        reduced = np.einsum("abad->bd", blocks)
    else:
        reduced = np.einsum("abcb->ac", blocks)
    return DensityMatrix(reduced)


def eig_hermitian(m, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns real eigenvalues sorted in descending order and the matching
    eigenvector columns.  Raises ValidationError if the input is not
    Hermitian within ``tol``.
    """
    mat = as_matrix(m)
    defect = float(np.max(np.abs(mat - mat.conj().T)))
    if defect > tol:
        raise ValidationError(f"matrix is not Hermitian: max defect {defect:.3e} > {tol:.1e}")
    w, v = np.linalg.eigh(mat)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


@dataclass(frozen=True)
class DensityDiagnostics:
    """Report produced by :func:`validate_density`."""

    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    hermitian_ok: bool
    trace_ok: bool
    psd_ok: bool

    @property
    def passed(self) -> bool:
        return self.hermitian_ok and self.trace_ok and self.psd_ok

    def describe(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"{status}: hermiticity defect {self.hermiticity_defect:.2e}, "
            f"trace defect {self.trace_defect:.2e}, "
            f"min eigenvalue {self.min_eigenvalue:.2e}"
        )


def validate_density(rho) -> DensityDiagnostics:
    """Diagnose how far a matrix is from being a valid density operator."""
    mat = as_matrix(rho)
    herm = float(np.max(np.abs(mat - mat.conj().T)))
    tr = float(abs(np.trace(mat) - 1.0))
    # Eigenvalues of the Hermitian part; for near-Hermitian input this is the
    # spectrum up to the reported defect.
    sym = 0.5 * (mat + mat.conj().T)
    min_eig = float(np.min(np.linalg.eigvalsh(sym)))
    return DensityDiagnostics(
        hermiticity_defect=herm,
        trace_defect=tr,
        min_eigenvalue=min_eig,
        hermitian_ok=herm <= HERMITICITY_TOL,
        trace_ok=tr <= TRACE_TOL,
        psd_ok=min_eig >= MIN_EIGENVALUE_TOL,
    )


def require_valid_density(rho) -> np.ndarray:
    """Return the underlying matrix, raising ValidationError if unphysical."""
    diag = validate_density(rho)
    if not diag.passed:
        raise ValidationError(f"invalid density matrix ({diag.describe()})")
    return as_matrix(rho)


def trace_distance(a, b) -> float:
    """Trace distance (1/2) ||a - b||_1 between two Hermitian matrices."""
    diff = as_matrix(a) - as_matrix(b)
    eigs = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.sum(np.abs(eigs)))


def correlation_matrix(rho) -> np.ndarray:
    """3x3 two-qubit correlation matrix T_kl = tr(rho sigma_k x sigma_l).

    Pauli axes follow the polarization Bloch frame (x = D/A, y = R/L,
    z = H/V).
    """
    mat = as_matrix(rho)
    if mat.shape != (4, 4):
        raise DimensionError(f"correlation matrix requires a 4x4 state, got {mat.shape}")
    t = np.empty((3, 3), dtype=float)
    for k, sk in enumerate(PAULIS):
        for l, sl in enumerate(PAULIS):
            t[k, l] = float(np.real(np.trace(mat @ tensor(sk, sl))))
    return t
