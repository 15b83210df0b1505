"""Concurrence, entanglement of formation and the PPT test for two qubits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import eigvalsh, matrix_sqrt_psd, partial_transpose
from .states import BellDiagonal, DensityMatrix, PureState, spin_flip, spin_flip_vector
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class ConcurrenceReport:
    lambdas: tuple[float, float, float, float]
    concurrence: float


@dataclass(frozen=True)
class SeparabilityVerdict:
    separable: bool
    min_pt_eigenvalue: float


def _density(rho, tol: Tolerances) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho, tol)


def r_matrix_eigenvalues(rho, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Eigenvalues of R = sqrt(sqrt(rho) rho~ sqrt(rho)), descending."""
    rho = _density(rho, tol)
    s = matrix_sqrt_psd(rho.m, tol)
    r2 = s @ spin_flip(rho) @ s
    vals = eigvalsh(0.5 * (r2 + r2.conj().T), tol)
    # the eigenvalues of R are the square roots of those of R^2
    return np.sqrt(np.clip(vals, 0.0, None))


def concurrence(rho, tol: Tolerances = DEFAULT) -> ConcurrenceReport:
    lam = r_matrix_eigenvalues(rho, tol)
    c = max(0.0, float(lam[0] - lam[1] - lam[2] - lam[3]))
    return ConcurrenceReport(tuple(float(x) for x in lam), min(c, 1.0))


def concurrence_bd(bd: BellDiagonal) -> float:
    """Closed form max(0, 2 max p_i - 1) for Bell-diagonal states."""
    return max(0.0, 2.0 * max(bd.p) - 1.0)


def pure_concurrence(psi) -> float:
    """|<psi|psi~>| for a normalized two-qubit vector."""
    v = psi.v if isinstance(psi, PureState) else PureState(psi).v
    return float(abs(np.vdot(v, spin_flip_vector(v))))


def binary_entropy(x: float, base: float = math.e) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    h = -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)
    return h / math.log(base)


def formation_from_concurrence(c: float, base: float = math.e) -> float:
    c = min(max(c, 0.0), 1.0)
    return binary_entropy(0.5 + 0.5 * math.sqrt(1.0 - c * c), base)


def entanglement_of_formation(rho, tol: Tolerances = DEFAULT, base: float = math.e) -> float:
    """Entanglement of formation; natural log by default, ``base=2`` for ebits."""
    return formation_from_concurrence(concurrence(rho, tol).concurrence, base)


def is_separable(rho, tol: Tolerances = DEFAULT) -> SeparabilityVerdict:
    """Peres-Horodecki test, exact for two qubits."""
    rho = _density(rho, tol)
    m = float(eigvalsh(partial_transpose(rho.m), tol)[-1])
    return SeparabilityVerdict(m >= -tol.psd, m)
