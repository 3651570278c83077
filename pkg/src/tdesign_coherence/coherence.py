"""Outcome statistics and relative entropy of coherence for rank-one design POVMs."""
from __future__ import annotations

import numpy as np

from .design import DesignPovm
from .qstate import DensityMatrix, InvalidStateError, entropy_of_spectrum, von_neumann_entropy

NEGATIVITY_TOL = 1e-12


def povm_probabilities(povm: DesignPovm, matrices: np.ndarray) -> np.ndarray:
    """p_j = (d/ell) <phi_j|rho|phi_j> for a single matrix or a stack of them.

    The outcome index is the last axis of the result.
    """
    m = np.asarray(matrices)
    if m.shape[-1] != povm.dim:
        raise ValueError(f"dimension mismatch: POVM d={povm.dim}, state d={m.shape[-1]}")
    v = povm.vectors
    p = povm.weight * np.einsum("ki,...ij,kj->...k", v.conj(), m, v).real
    if p.min() < -NEGATIVITY_TOL:
        raise InvalidStateError(f"negative outcome probability {p.min():.3e}")
    return np.clip(p, 0.0, 1.0)


def outcome_probabilities(povm: DesignPovm, rho: DensityMatrix) -> np.ndarray:
    return povm_probabilities(povm, rho.matrix)


def shannon_entropy(dist) -> float:
    return float(entropy_of_spectrum(dist))


def coherence(povm: DesignPovm, rho: DensityMatrix) -> float:
    """C_1 = H(outcomes) - S(rho), in nats.

    This is the coherence of the Naimark dilation, written directly on the
    original space.
    """
    return shannon_entropy(outcome_probabilities(povm, rho)) - von_neumann_entropy(rho)


def average_coherence(povms, rho: DensityMatrix) -> float:
    povms = list(povms)
    if not povms:
        raise ValueError("need at least one POVM")
    return sum(coherence(p, rho) for p in povms) / len(povms)
