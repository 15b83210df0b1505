"""Two-qubit states: validated density matrices, Bell basis, Bell-diagonal states.

Basis ordering is |00>, |01>, |10>, |11> (up-up, up-down, down-up, down-down).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidProbabilities, InvalidState
from .linalg import SYSY, as_matrix, as_vector, dagger, hermitian_eigen, hermiticity_defect, outer
from .tolerances import DEFAULT, Tolerances

TRACE_TOL = 1e-10
NORM_TOL = 1e-10
PROB_SUM_TOL = 1e-12
BD_EXACT_TOL = 1e-10

_S = 1 / np.sqrt(2)
# rows are psi_1..psi_4: |00>+|11>, |00>-|11>, |01>+|10>, |01>-|10>, normalized
BELL = np.array(
    [
        [_S, 0, 0, _S],
        [_S, 0, 0, -_S],
        [0, _S, _S, 0],
        [0, _S, -_S, 0],
    ],
    dtype=complex,
)
BELL.setflags(write=False)


class DensityMatrix:
    """A 4x4 Hermitian, unit-trace, positive semidefinite matrix.

    The stored matrix is the Hermitian part of the input and is read-only.
    Validation uses ``tol.herm`` and ``tol.psd``; the trace must be 1 within
    1e-10.
    """

    __slots__ = ("m", "eigenvalues")

    def __init__(self, m, tol: Tolerances = DEFAULT):
        if isinstance(m, DensityMatrix):
            m = m.m
        try:
            a = as_matrix(m, 4)
        except ValueError as exc:
            raise InvalidState(str(exc)) from None
        defect = hermiticity_defect(a)
        if defect > tol.herm:
            raise InvalidState(f"density matrix is not Hermitian (defect {defect:.3e})")
        a = 0.5 * (a + dagger(a))
        tr = float(np.real(np.trace(a)))
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"density matrix trace is {tr!r}, expected 1")
        vals = hermitian_eigen(a, tol)[0]
        if vals[-1] < -tol.psd:
            raise InvalidState(f"density matrix has negative eigenvalue {vals[-1]:.3e}")
        a.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "m", a)
        object.__setattr__(self, "eigenvalues", vals)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self):
        return f"DensityMatrix(eigenvalues={np.round(self.eigenvalues, 12).tolist()})"

    def __array__(self, dtype=None, copy=None):
        return self.m if dtype is None else self.m.astype(dtype)

    @property
    def rank(self) -> int:
        return int(np.sum(self.eigenvalues > 1e-9))

    @classmethod
    def from_pure(cls, psi: PureState | np.ndarray, tol: Tolerances = DEFAULT) -> DensityMatrix:
        v = psi.v if isinstance(psi, PureState) else as_vector(psi, 4)
        return cls(outer(v), tol)


@dataclass(frozen=True)
class BellDiagonal:
    """Probabilities (p1, p2, p3, p4) over the Bell basis."""

    p: tuple[float, float, float, float]

    def __post_init__(self):
        try:
            p = tuple(float(x) for x in self.p)
        except (TypeError, ValueError):
            raise InvalidProbabilities(f"probabilities must be four reals, got {self.p!r}") from None
        if len(p) != 4 or not all(np.isfinite(p)):
            raise InvalidProbabilities(f"need four finite probabilities, got {self.p!r}")
        if any(x < 0.0 or x > 1.0 for x in p):
            raise InvalidProbabilities(f"probabilities must lie in [0, 1], got {p}")
        if abs(sum(p) - 1.0) > PROB_SUM_TOL:
            raise InvalidProbabilities(f"probabilities sum to {sum(p)!r}, expected 1")
        object.__setattr__(self, "p", p)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.p)

    @property
    def dominant(self) -> int:
        """0-based index of the largest probability (first one on ties)."""
        return int(np.argmax(self.p))

    @property
    def rank(self) -> int:
        return sum(1 for x in self.p if x > 0.0)


@dataclass(frozen=True, eq=False)
class PureState:
    """A unit vector in C^4."""

    v: np.ndarray

    def __post_init__(self):
        try:
            v = as_vector(self.v, 4)
        except ValueError as exc:
            raise InvalidState(str(exc)) from None
        n = np.linalg.norm(v)
        if abs(n - 1.0) > NORM_TOL:
            raise InvalidState(f"pure state has norm {n!r}, expected 1")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @classmethod
    def normalized(cls, v) -> PureState:
        v = np.asarray(v, dtype=complex)
        return cls(v / np.linalg.norm(v))

    def projector(self) -> np.ndarray:
        return outer(self.v)


def bell_basis() -> list[PureState]:
    return [PureState(row.copy()) for row in BELL]


def bd_matrix(p) -> np.ndarray:
    """sum_i p_i |psi_i><psi_i| as a bare array (no validation)."""
    p = np.asarray(p, dtype=float)
    return (BELL.T * p) @ np.conj(BELL)


def bd_to_density(bd: BellDiagonal, tol: Tolerances = DEFAULT) -> DensityMatrix:
    if not isinstance(bd, BellDiagonal):
        bd = BellDiagonal(tuple(bd))
    return DensityMatrix(bd_matrix(bd.p), tol)


def bell_components(rho) -> np.ndarray:
    """Matrix of rho in the Bell basis, <psi_i|rho|psi_j>."""
    m = rho.m if isinstance(rho, DensityMatrix) else as_matrix(rho, 4)
    return np.conj(BELL) @ m @ BELL.T


def density_to_bd(rho: DensityMatrix) -> tuple[BellDiagonal, bool]:
    """Bell-basis populations of ``rho`` and whether ``rho`` is Bell-diagonal.

    The flag is true when every off-diagonal Bell-basis entry is below 1e-10.
    """
    comp = bell_components(rho)
    p = np.clip(np.real(np.diag(comp)), 0.0, 1.0)
    p = p / p.sum()
    off = comp - np.diag(np.diag(comp))
    exact = bool(np.max(np.abs(off)) < BD_EXACT_TOL)
    return BellDiagonal(tuple(p)), exact


def spin_flip(rho) -> np.ndarray:
    """(sigma_y x sigma_y) rho* (sigma_y x sigma_y) in the computational basis."""
    m = rho.m if isinstance(rho, DensityMatrix) else as_matrix(rho, 4)
    return SYSY @ np.conj(m) @ SYSY


def spin_flip_vector(v) -> np.ndarray:
    """(sigma_y x sigma_y) |v*>."""
    v = v.v if isinstance(v, PureState) else as_vector(v, 4)
    return SYSY @ np.conj(v)


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_bd(
    seed=None,
    region: Literal["any", "entangled"] = "any",
    rank: int | None = None,
) -> BellDiagonal:
    """Uniform sample from the Bell-diagonal simplex.

    Parameters
    ----------
    seed : int, numpy Generator or None
        Passing a Generator advances it; an int gives a fresh, reproducible
        stream.
    region : {"any", "entangled"}
        ``"entangled"`` rejection-samples until p1 > 1/2.
    rank : int, optional
        Restrict to a face of the simplex with exactly ``rank`` nonzero
        probabilities (2, 3 or 4). For ``"entangled"`` the face always
        contains p1; the other zero positions are chosen at random.
    """
    rng = _generator(seed)
    if region not in ("any", "entangled"):
        raise ValueError(f"unknown region {region!r}")
    if rank is not None and rank not in (1, 2, 3, 4):
        raise ValueError(f"rank must be 1..4, got {rank}")
    while True:
        if rank is None or rank == 4:
            p = rng.dirichlet(np.ones(4))
        else:
            if region == "entangled":
                support = [0] + sorted(rng.choice([1, 2, 3], size=rank - 1, replace=False).tolist())
            else:
                support = sorted(rng.choice(4, size=rank, replace=False).tolist())
            p = np.zeros(4)
            p[support] = rng.dirichlet(np.ones(rank))
        if region == "any" or p[0] > 0.5:
            p = p / p.sum()
            return BellDiagonal(tuple(float(x) for x in p))
