"""Quantum-information figures of merit between Fock-basis density matrices.

Fidelity, trace distance, Helstrom error bound (equal priors), and von Neumann
entropy in bits. Matrix square roots go through eigendecompositions with
eigenvalues clipped at zero, which is the standard stabilization for
near-positive-semidefinite reconstructions.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .fock import CutoffMismatchError, FockDensityMatrix, mean_photon

#: Eigenvalues of nominally PSD inputs may dip this far below zero before we refuse.
PSD_TOL = 1e-8

#: Eigenvalues below this contribute nothing to the entropy (0 log 0 = 0).
ENTROPY_EIGVAL_FLOOR = 1e-14


class NotPositiveSemidefiniteError(ValueError):
    """Input matrix has an eigenvalue below the accepted -1e-8 tolerance."""


def _checked_eigh(rho: FockDensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose, clipping negative eigenvalues within tolerance to 0."""
    vals, vecs = np.linalg.eigh(rho.entries)
    if vals[0] < -PSD_TOL:
        raise NotPositiveSemidefiniteError(
            f"matrix has eigenvalue {vals[0]:.3e} below -{PSD_TOL:.0e}"
        )
    return np.clip(vals, 0.0, None), vecs


def _require_same_cutoff(a: FockDensityMatrix, b: FockDensityMatrix) -> None:
    if a.cutoff != b.cutoff:
        raise CutoffMismatchError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")


def fidelity(a: FockDensityMatrix, b: FockDensityMatrix) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(b) a sqrt(b)))^2``.

    Symmetric in its arguments and equal to 1 iff the states are identical.
    For a pure state it reduces to the overlap with the other state.
    """
    _require_same_cutoff(a, b)
    _checked_eigh(a)
    vals_b, vecs_b = _checked_eigh(b)
    sqrt_b = (vecs_b * np.sqrt(vals_b)) @ vecs_b.conj().T
    inner = sqrt_b @ a.entries @ sqrt_b
    inner = 0.5 * (inner + inner.conj().T)
    vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    # square roots of near-zero eigenvalues can push the sum past 1 by ~1e-8
    return min(float(np.sum(np.sqrt(vals)) ** 2), 1.0)


def trace_distance(a: FockDensityMatrix, b: FockDensityMatrix) -> float:
    """``(1/2) ||a - b||_1``: half the sum of |eigenvalues| of the difference."""
    _require_same_cutoff(a, b)
    vals = np.linalg.eigvalsh(a.entries - b.entries)
    return float(0.5 * np.sum(np.abs(vals)))


def helstrom_error(a: FockDensityMatrix, b: FockDensityMatrix) -> float:
    """Minimum error probability for discriminating ``a`` from ``b``.

    Equal priors: ``1/2 - (1/4) ||a - b||_1``. 0.5 for identical states
    (indistinguishable), 0 for orthogonal ones.
    """
    return 0.5 - 0.5 * trace_distance(a, b)


def von_neumann_entropy(rho: FockDensityMatrix) -> float:
    """Entropy ``-sum_i lambda_i log2(lambda_i)`` in bits; 0 for pure states."""
    vals, _ = _checked_eigh(rho)
    vals = vals[vals > ENTROPY_EIGVAL_FLOOR]
    return float(-np.sum(vals * np.log2(vals)))


def thermal_entropy(nbar: float) -> float:
    """Closed-form entropy of a thermal state in bits.

    ``(nbar+1) log2(nbar+1) - nbar log2(nbar)``; the maximum entropy of any
    state with the given mean photon number.
    """
    if nbar < 0.0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    if nbar == 0.0:
        return 0.0
    return (nbar + 1.0) * math.log2(nbar + 1.0) - nbar * math.log2(nbar)


def nbar_for_entropy(entropy_bits: float, bracket: tuple[float, float] = (1e-6, 50.0)) -> float:
    """Invert :func:`thermal_entropy` by root finding on the closed form."""
    if entropy_bits <= 0.0:
        return 0.0
    return float(brentq(lambda nb: thermal_entropy(nb) - entropy_bits, *bracket))


def compare(a: FockDensityMatrix, b: FockDensityMatrix) -> dict:
    """Full metric report between two states, ready for JSON export."""
    return {
        "fidelity": fidelity(a, b),
        "trace_distance": trace_distance(a, b),
        "helstrom_error": helstrom_error(a, b),
        "entropy_a": von_neumann_entropy(a),
        "entropy_b": von_neumann_entropy(b),
        "mean_photon_a": mean_photon(a),
        "mean_photon_b": mean_photon(b),
    }
