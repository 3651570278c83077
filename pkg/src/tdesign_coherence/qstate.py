"""Density matrices, spectra, entropies and symmetric-subspace moments.

All logarithms are natural, so entropies are in nats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10
CLAMP_TOL = 1e-8

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)


class InvalidStateError(ValueError):
    """Raised when a matrix is not a valid density matrix."""


def _clamp_eigenvalues(evals: np.ndarray) -> np.ndarray:
    if np.any(evals < -CLAMP_TOL) or np.any(evals > 1 + CLAMP_TOL):
        raise InvalidStateError(f"eigenvalues out of [0, 1] beyond {CLAMP_TOL}: {evals}")
    return np.clip(evals, 0.0, 1.0)


@dataclass(frozen=True)
class DensityMatrix:
    """A validated d x d density matrix.

    Validation runs once on construction; every operation afterwards trusts
    the stored matrix.
    """

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidStateError(f"expected a square matrix, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
            raise InvalidStateError("matrix is not Hermitian")
        if abs(np.trace(m) - 1) > TRACE_TOL:
            raise InvalidStateError(f"trace {np.trace(m).real:.15g} differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self._eigh[0].min() < -PSD_TOL:
            raise InvalidStateError("matrix is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _eigh(self):
        evals, evecs = np.linalg.eigh(self.matrix)
        recon = (evecs * evals) @ evecs.conj().T
        if np.abs(recon - self.matrix).max() > RECONSTRUCTION_TOL:
            raise InvalidStateError("eigendecomposition residual too large")
        return evals, evecs

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted descending, clamped to [0, 1]."""
        evals = _clamp_eigenvalues(self._eigh[0][::-1].copy())
        evals.setflags(write=False)
        return evals

    def conjugate(self, unitary: np.ndarray) -> DensityMatrix:
        """Return U rho U^dagger."""
        u = np.asarray(unitary)
        out = u @ self.matrix @ u.conj().T
        return DensityMatrix(0.5 * (out + out.conj().T))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim) / dim)

    @classmethod
    def from_pure(cls, psi) -> DensityMatrix:
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_spectrum(cls, eigenvalues, unitary=None) -> DensityMatrix:
        evals = np.asarray(eigenvalues, dtype=np.float64)
        if unitary is None:
            return cls(np.diag(evals).astype(np.complex128))
        u = np.asarray(unitary)
        m = (u * evals) @ u.conj().T
        return cls(0.5 * (m + m.conj().T))


@dataclass(frozen=True)
class BlochSpec:
    """A qubit given by its minimal eigenvalue and a Bloch direction."""

    lam: float
    direction: tuple[float, float, float]

    def __post_init__(self):
        n = np.asarray(self.direction, dtype=np.float64)
        if n.shape != (3,):
            raise ValueError("Bloch direction must be a 3-vector")
        if abs(np.linalg.norm(n) - 1) > 1e-12:
            raise ValueError(f"Bloch direction {tuple(n)} is not unit length")
        if not 0 <= self.lam <= 0.5:
            raise ValueError(f"lambda={self.lam} outside [0, 1/2]")
        object.__setattr__(self, "direction", tuple(float(x) for x in n))


def spectrum(rho: DensityMatrix) -> np.ndarray:
    return rho.eigenvalues


def entropy_of_spectrum(evals) -> np.ndarray:
    """-sum p ln p along the last axis, with 0 ln 0 = 0."""
    p = np.asarray(evals, dtype=np.float64)
    safe = np.where(p > 0, p, 1.0)
    return -np.sum(p * np.log(safe), axis=-1)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return float(entropy_of_spectrum(rho.eigenvalues))


def power_sums(rho: DensityMatrix, t: int) -> np.ndarray:
    """Return [tr(rho), tr(rho^2), ..., tr(rho^t)]."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    evals = rho.eigenvalues
    return np.array([np.sum(evals**k) for k in range(1, t + 1)])


def complete_homogeneous(evals, smax: int) -> np.ndarray:
    """h_0..h_smax of the eigenvalues along the last axis.

    Uses s h_s = sum_{k=1}^s p_k h_{s-k} with power sums p_k. Output has the
    degree as its last axis.
    """
    lam = np.asarray(evals, dtype=np.float64)
    p = np.stack([np.sum(lam**k, axis=-1) for k in range(1, smax + 1)], axis=-1)
    h = np.zeros(lam.shape[:-1] + (smax + 1,))
    h[..., 0] = 1.0
    for s in range(1, smax + 1):
        acc = np.zeros(lam.shape[:-1])
        for k in range(1, s + 1):
            acc = acc + p[..., k - 1] * h[..., s - k]
        h[..., s] = acc / s
    return h


def symmetric_moment(rho: DensityMatrix, s: int) -> float:
    """tr(rho^{(x)s} P_sym), the complete homogeneous polynomial h_s of the spectrum."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    return float(complete_homogeneous(rho.eigenvalues, s)[s])


def qubit_from_bloch(spec: BlochSpec) -> DensityMatrix:
    r = (1 - 2 * spec.lam) * np.asarray(spec.direction)
    m = 0.5 * (np.eye(2) + np.einsum("i,ijk->jk", r, PAULI))
    return DensityMatrix(m)


def load_state(path) -> DensityMatrix:
    data = json.loads(Path(path).read_text())
    try:
        d = int(data["dim"])
        re = np.asarray(data["re"], dtype=np.float64)
        im = np.asarray(data["im"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidStateError(f"malformed density-matrix file: {exc}") from exc
    if re.shape != (d, d) or im.shape != (d, d):
        raise InvalidStateError(f"entries do not match dim={d}")
    return DensityMatrix(re + 1j * im)


def save_state(rho: DensityMatrix, path) -> None:
    data = {
        "dim": rho.dim,
        "re": rho.matrix.real.tolist(),
        "im": rho.matrix.imag.tolist(),
    }
    Path(path).write_text(json.dumps(data))
