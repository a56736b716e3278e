"""Fock-basis representations of coherent, thermal, and mixed optical states.

Everything downstream (constellation shaping, homodyne simulation, tomography,
metrics) works on the two value types defined here: ``PureStateVector`` for
coherent states and ``FockDensityMatrix`` for everything else. Both are
immutable after construction and validate their own matrix invariants, so a
state that reaches the rest of the toolkit is guaranteed Hermitian, positive
semidefinite, and normalized up to a declared truncation budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

TWO_PI = 2.0 * math.pi

#: Fock cutoff used for state engineering (thermal tail mass < 1e-5 at nbar = 2).
DEFAULT_CUTOFF = 30

#: Default truncation-mass budget for constructed states. Sized so the default
#: engineering cutoff holds every thermal state up to nbar = 2 (tail 3.5e-6).
DEFAULT_TAIL_TOL = 1e-5

# Hard validation tolerances for constructed density matrices.
HERMITICITY_TOL = 1e-12
PSD_EIGVAL_FLOOR = -1e-10
TRACE_EXCESS_TOL = 1e-12


class TruncationError(ValueError):
    """Raised when the chosen Fock cutoff discards more mass than allowed."""


class CutoffMismatchError(ValueError):
    """Raised when an operation combines states with different cutoffs."""


def wrap_phase(phase: float) -> float:
    """Wrap an angle in radians into [0, 2*pi)."""
    wrapped = math.fmod(phase, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    # fmod can round back up to the period itself for tiny negative inputs
    return 0.0 if wrapped >= TWO_PI else wrapped


@dataclass(frozen=True)
class ComplexAmplitude:
    """Polar form of a coherent-state amplitude: magnitude >= 0, phase in [0, 2*pi)."""

    magnitude: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.magnitude < 0.0:
            raise ValueError(f"magnitude must be >= 0, got {self.magnitude}")
        object.__setattr__(self, "phase", wrap_phase(self.phase))

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexAmplitude":
        return cls(abs(z), math.atan2(z.imag, z.real))

    @property
    def value(self) -> complex:
        return self.magnitude * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True, eq=False)
class PureStateVector:
    """Fock-basis coefficient vector of a pure state, truncated at ``cutoff``.

    Coefficient ``n`` is the overlap with the number state ``|n>``. The squared
    norm may fall short of 1 by the truncation mass accepted at construction,
    and is never above 1 (beyond rounding).
    """

    cutoff: int
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")
        coeffs = np.asarray(self.coefficients, dtype=np.complex128)
        if coeffs.shape != (self.cutoff + 1,):
            raise ValueError(
                f"coefficients must have shape ({self.cutoff + 1},), got {coeffs.shape}"
            )
        norm_sq = float(np.vdot(coeffs, coeffs).real)
        if norm_sq > 1.0 + TRACE_EXCESS_TOL:
            raise ValueError(f"squared norm {norm_sq} exceeds 1")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.coefficients, self.coefficients).real)


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Complex matrix of number-basis elements ``<m|rho|n>`` up to ``cutoff``.

    ``trace_tol`` is the truncation-mass budget the matrix was built under:
    the trace must lie in [1 - trace_tol, 1 + 1e-12]. Construction validates
    Hermiticity and positive semidefiniteness; traces are never silently
    renormalized (use :func:`normalize` explicitly).
    """

    cutoff: int
    entries: np.ndarray = field(repr=False)
    trace_tol: float = 0.05

    def __post_init__(self) -> None:
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")
        rho = np.asarray(self.entries, dtype=np.complex128)
        dim = self.cutoff + 1
        if rho.shape != (dim, dim):
            raise ValueError(f"entries must have shape ({dim}, {dim}), got {rho.shape}")
        asym = float(np.max(np.abs(rho - rho.conj().T)))
        if asym > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian: max |rho - rho^dag| = {asym:.3e}")
        min_eig = float(np.linalg.eigvalsh(rho)[0])
        if min_eig < PSD_EIGVAL_FLOOR:
            raise ValueError(f"matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")
        tr = float(rho.trace().real)
        if tr > 1.0 + TRACE_EXCESS_TOL or tr < 1.0 - self.trace_tol:
            raise ValueError(
                f"trace {tr} outside [1 - {self.trace_tol}, 1 + {TRACE_EXCESS_TOL}]"
            )
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    @property
    def trace(self) -> float:
        return float(self.entries.trace().real)


def coherent_pure(
    alpha: ComplexAmplitude, cutoff: int, tail_tol: float = DEFAULT_TAIL_TOL
) -> PureStateVector:
    """Truncated coherent state ``|alpha>`` in the Fock basis.

    Coefficient ``n`` is ``|alpha|^n e^{i n theta} e^{-|alpha|^2 / 2} / sqrt(n!)``,
    evaluated in log space so no factorial is ever formed directly.

    Raises:
        TruncationError: if the Poisson mass beyond ``cutoff`` exceeds ``tail_tol``.
    """
    if cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    n = np.arange(cutoff + 1)
    if alpha.magnitude == 0.0:
        coeffs = np.zeros(cutoff + 1, dtype=np.complex128)
        coeffs[0] = 1.0
        return PureStateVector(cutoff, coeffs)
    log_mag = n * math.log(alpha.magnitude) - 0.5 * alpha.magnitude**2 - 0.5 * gammaln(n + 1)
    coeffs = np.exp(log_mag) * np.exp(1j * alpha.phase * n)
    tail = 1.0 - float(np.vdot(coeffs, coeffs).real)
    if tail > tail_tol:
        raise TruncationError(
            f"coherent state |alpha|^2 = {alpha.magnitude ** 2:.4g} loses mass "
            f"{tail:.3e} beyond cutoff {cutoff} (budget {tail_tol:.1e})"
        )
    return PureStateVector(cutoff, coeffs)


def thermal(nbar: float, cutoff: int, tail_tol: float = DEFAULT_TAIL_TOL) -> FockDensityMatrix:
    """Thermal state with mean photon number ``nbar``: Bose-Einstein diagonal.

    Diagonal entry ``n`` is ``nbar^n / (nbar + 1)^(n + 1)``; all off-diagonal
    entries are exactly zero.

    Raises:
        TruncationError: if the geometric tail ``(nbar/(nbar+1))^(cutoff+1)``
            exceeds ``tail_tol``.
    """
    if nbar < 0.0:
        raise ValueError(f"nbar must be >= 0, got {nbar}")
    if cutoff < 0:
        raise ValueError(f"cutoff must be >= 0, got {cutoff}")
    diag = np.zeros(cutoff + 1)
    if nbar == 0.0:
        diag[0] = 1.0
        tail = 0.0
    else:
        n = np.arange(cutoff + 1)
        diag = np.exp(n * math.log(nbar) - (n + 1) * math.log(nbar + 1.0))
        tail = (nbar / (nbar + 1.0)) ** (cutoff + 1)
        if tail > tail_tol:
            raise TruncationError(
                f"thermal state nbar = {nbar} has tail mass {tail:.3e} beyond "
                f"cutoff {cutoff} (budget {tail_tol:.1e})"
            )
    return FockDensityMatrix(cutoff, np.diag(diag).astype(np.complex128), trace_tol=tail + 1e-12)


def mix(components: list[tuple[float, PureStateVector]]) -> FockDensityMatrix:
    """Statistical mixture ``sum_i p_i |psi_i><psi_i|`` of pure states.

    Weights must be nonnegative and sum to 1 within 1e-12; all states must
    share one cutoff. The result is Hermitian and PSD by construction, and its
    trace equals the weighted sum of the input norms (short of 1 only by the
    truncation mass the inputs carried).
    """
    if not components:
        raise ValueError("mixture needs at least one component")
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights < 0.0):
        raise ValueError("mixture weights must be >= 0")
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"mixture weights must sum to 1 within 1e-12, got {total!r}")
    cutoff = components[0][1].cutoff
    for _, psi in components:
        if psi.cutoff != cutoff:
            raise CutoffMismatchError(
                f"all states must share one cutoff, got {psi.cutoff} and {cutoff}"
            )
    # rho = A^T conj(A) with rows sqrt(p_i) psi_i, PSD by construction
    stacked = np.stack([psi.coefficients for _, psi in components])
    scaled = np.sqrt(weights)[:, None] * stacked
    rho = scaled.T @ scaled.conj()
    rho = 0.5 * (rho + rho.conj().T)
    deficit = 1.0 - float(np.sum(weights * np.array([psi.norm_sq for _, psi in components])))
    return FockDensityMatrix(cutoff, rho, trace_tol=max(deficit, 0.0) + 1e-9)


def mean_photon(rho: FockDensityMatrix) -> float:
    """Expected photon number ``sum_n n rho_nn``."""
    n = np.arange(rho.cutoff + 1)
    return float(np.sum(n * np.diag(rho.entries).real))


def purity(rho: FockDensityMatrix) -> float:
    """``Tr(rho^2)``; 1 for pure states, 1/dim for the maximally mixed state."""
    return float(np.trace(rho.entries @ rho.entries).real)


def normalize(rho: FockDensityMatrix) -> FockDensityMatrix:
    """Rescale to unit trace. Truncated states are never renormalized implicitly."""
    tr = rho.trace
    if tr <= 0.0:
        raise ValueError(f"cannot normalize matrix with trace {tr}")
    return FockDensityMatrix(rho.cutoff, rho.entries / tr, trace_tol=1e-12)


# ---------------------------------------------------------------------------
# Serialization: JSON object and (row, col, re, im) CSV flattening, both
# bit-exact round trips at full double precision.
# ---------------------------------------------------------------------------


def density_to_json(rho: FockDensityMatrix) -> dict:
    return {
        "cutoff": rho.cutoff,
        "entries_real": rho.entries.real.tolist(),
        "entries_imag": rho.entries.imag.tolist(),
    }


def density_from_json(obj: dict, trace_tol: float = 0.05) -> FockDensityMatrix:
    entries = np.asarray(obj["entries_real"], dtype=float) + 1j * np.asarray(
        obj["entries_imag"], dtype=float
    )
    return FockDensityMatrix(int(obj["cutoff"]), entries, trace_tol=trace_tol)


def density_to_csv(rho: FockDensityMatrix) -> str:
    lines = ["row,col,re,im"]
    for m in range(rho.dim):
        for n in range(rho.dim):
            z = rho.entries[m, n]
            lines.append(f"{m},{n},{z.real:.17g},{z.imag:.17g}")
    return "\n".join(lines) + "\n"


def density_from_csv(text: str, trace_tol: float = 0.05) -> FockDensityMatrix:
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not rows or rows[0] != "row,col,re,im":
        raise ValueError("expected CSV header 'row,col,re,im'")
    cells = [ln.split(",") for ln in rows[1:]]
    dim = max(int(c[0]) for c in cells) + 1
    entries = np.zeros((dim, dim), dtype=np.complex128)
    for m, n, re, im in cells:
        entries[int(m), int(n)] = complex(float(re), float(im))
    return FockDensityMatrix(dim - 1, entries, trace_tol=trace_tol)
