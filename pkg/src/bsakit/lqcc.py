"""Local filtering maps and their action on states and decompositions.

A map is M = A (x) B with A = U_A f_A and B = U_B f_B, where each
filtration is f = mu (I + a m.sigma). A state transforms as

    rho -> M rho M^dagger / Tr(M rho M^dagger),

and an L-S decomposition is carried along term by term: the separable part,
the pure part and every product state of the ensemble are pushed through M
and re-weighted by how much trace they keep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entanglement import concurrence
from .errors import Annihilated, CertificateFailed, InvalidMap, NotEntangled, NotInvertible
from .linalg import I2, PAULI, SX, SY, SZ, as_matrix, dagger, kron, max_abs, restricted_inverse, unitary_defect
from .lsd import LsDecomposition, OptimalityCertificate, certify
from .states import DensityMatrix, PureState
from .tolerances import DEFAULT, Tolerances

UNIT_TOL = 1e-12
# (I x G_k) maps the singlet onto Bell state k up to phase, so A (x) G_k A G_k^dagger
# leaves Bell state k invariant just as A (x) A leaves the singlet
SINGLET_TO_BELL = (SY, SX, SZ, I2)
UNITARY_TOL = 1e-10
SAME_MAP_TOL = 1e-10


@dataclass(frozen=True)
class Filtration:
    """f = mu (I + a m.sigma); invertible iff |a| < 1."""

    mu: float
    a: float
    m: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        mu, a = float(self.mu), float(self.a)
        m = tuple(float(x) for x in self.m)
        if not (math.isfinite(mu) and mu > 0):
            raise InvalidMap(f"filtration mu must be positive, got {self.mu!r}")
        if not (math.isfinite(a) and abs(a) <= 1.0):
            raise InvalidMap(f"filtration a must satisfy |a| <= 1, got {self.a!r}")
        if len(m) != 3 or abs(math.sqrt(sum(x * x for x in m)) - 1.0) > UNIT_TOL:
            raise InvalidMap(f"filtration direction must be a unit 3-vector, got {self.m!r}")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "m", m)

    @property
    def determinant(self) -> float:
        return self.mu * self.mu * (1.0 - self.a * self.a)


def _m_dot_sigma(m) -> np.ndarray:
    return sum(c * s for c, s in zip(m, PAULI))


def filtration_matrix(f: Filtration) -> np.ndarray:
    return f.mu * (I2 + f.a * _m_dot_sigma(f.m))


def _rotate(u: np.ndarray, m) -> tuple[float, float, float]:
    # U (m.sigma) U^dagger = (R m).sigma, components read off by traces
    h = u @ _m_dot_sigma(m) @ dagger(u)
    r = [0.5 * float(np.real(np.trace(s @ h))) for s in PAULI]
    n = math.sqrt(sum(x * x for x in r))
    return tuple(x / n for x in r)


@dataclass(frozen=True, eq=False)
class LqccMap:
    """A (x) B with A = U_A f_A and B = U_B f_B."""

    u_a: np.ndarray
    u_b: np.ndarray
    f_a: Filtration
    f_b: Filtration

    def __post_init__(self):
        for name in ("u_a", "u_b"):
            try:
                u = as_matrix(getattr(self, name), 2)
            except ValueError as exc:
                raise InvalidMap(f"{name}: {exc}") from None
            defect = unitary_defect(u)
            if defect > UNITARY_TOL:
                raise InvalidMap(f"{name} is not unitary (defect {defect:.3e})")
            u.setflags(write=False)
            object.__setattr__(self, name, u)

    @classmethod
    def identity(cls) -> LqccMap:
        f = Filtration(1.0, 0.0)
        return cls(I2, I2, f, f)

    @property
    def a_op(self) -> np.ndarray:
        return self.u_a @ filtration_matrix(self.f_a)

    @property
    def b_op(self) -> np.ndarray:
        return self.u_b @ filtration_matrix(self.f_b)

    @property
    def operator(self) -> np.ndarray:
        return kron(self.a_op, self.b_op)

    @property
    def kill_factor(self) -> float:
        """mu^2 nu^2 (1 - a^2)(1 - b^2) = |det A det B|."""
        return self.f_a.determinant * self.f_b.determinant

    def is_invertible(self, tol: Tolerances = DEFAULT) -> bool:
        return abs(self.f_a.a) < 1.0 - tol.rank and abs(self.f_b.a) < 1.0 - tol.rank

    def symmetric(self, tol: float = SAME_MAP_TOL) -> bool:
        """True when A = B entrywise within ``tol``."""
        return max_abs(self.a_op - self.b_op) <= tol

    def fixes(self, v, tol: float = SAME_MAP_TOL) -> bool:
        """True when M v is a multiple of v (relative defect within ``tol``)."""
        v = np.asarray(getattr(v, "v", v), dtype=complex)
        mv = self.operator @ v
        n = np.linalg.norm(mv)
        return bool(n > 0 and np.linalg.norm(mv - np.vdot(v, mv) / np.vdot(v, v) * v) <= tol * n)

    @classmethod
    def fixing(cls, k: int, u: np.ndarray, f: Filtration) -> LqccMap:
        """A = U f on Alice's side and the partner B that keeps Bell state ``k`` (0-based) fixed.

        B = G_k A G_k^dagger, which is A itself for the singlet (k = 3).
        """
        g = SINGLET_TO_BELL[k]
        return cls(u, g @ u @ dagger(g), f, Filtration(f.mu, f.a, _rotate(g, f.m)))

    def inverse(self, tol: Tolerances = DEFAULT) -> LqccMap:
        """The map (A^-1) (x) (B^-1), again in unitary-times-filtration form.

        f^-1 = (I - a m.sigma) / (mu (1 - a^2)) and U f^-1 U^dagger only
        rotates the direction m, so A^-1 = U_A^dagger f'_A.
        """
        if not self.is_invertible(tol):
            raise NotInvertible(f"filtration strengths a={self.f_a.a!r}, b={self.f_b.a!r} are not invertible")

        def inv(u, f):
            return Filtration(1.0 / (f.mu * (1.0 - f.a * f.a)), f.a, _rotate(u, [-x for x in f.m]))

        return LqccMap(dagger(self.u_a), dagger(self.u_b), inv(self.u_a, self.f_a), inv(self.u_b, self.f_b))


def _matrix(rho) -> np.ndarray:
    return rho.m if isinstance(rho, DensityMatrix) else as_matrix(rho, 4)


def success_probability(lmap: LqccMap, rho) -> float:
    m = lmap.operator
    return float(np.real(np.trace(m @ _matrix(rho) @ dagger(m))))


def apply_lqcc(lmap: LqccMap, rho, tol: Tolerances = DEFAULT) -> tuple[DensityMatrix, float]:
    """Filter ``rho``; returns the normalized output and Tr(M rho M^dagger).

    Raises :class:`Annihilated` when the trace is at or below ``tol.rank``.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho, tol)
    m = lmap.operator
    out = m @ rho.m @ dagger(m)
    t = float(np.real(np.trace(out)))
    if t <= tol.rank:
        raise Annihilated(f"map annihilates the state (trace {t:.3e})")
    return DensityMatrix(out / t, tol), t


def concurrence_transform_check(lmap: LqccMap, rho, tol: Tolerances = DEFAULT) -> tuple[float, float]:
    """Predicted and measured concurrence of the filtered state.

    The prediction is C' = mu^2 nu^2 (1 - a^2)(1 - b^2) C / Tr(M rho M^dagger).
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho, tol)
    out, t = apply_lqcc(lmap, rho, tol)
    predicted = lmap.kill_factor * concurrence(rho, tol).concurrence / t
    return float(predicted), concurrence(out, tol).concurrence


def transport_decomposition(lmap: LqccMap, d: LsDecomposition, tol: Tolerances = DEFAULT) -> LsDecomposition:
    """Carry an L-S decomposition through the map.

    With T = Tr(M rho M^dagger) and T_s = Tr(M rho_sep M^dagger):
    lam' = lam T_s / T, psi' = M psi normalized, and each product state
    z_a goes to M z_a normalized with weight w_a |M z_a|^2 / T_s.

    Raises :class:`NotInvertible` for |a| or |b| at or above 1 - tol.rank.
    """
    if not lmap.is_invertible(tol):
        raise NotInvertible(f"filtration strengths a={lmap.f_a.a!r}, b={lmap.f_b.a!r} are not invertible")
    m = lmap.operator
    kept = []
    for w, z in d.ensemble:
        mz = m @ z.v
        kept.append((w * float(np.real(np.vdot(mz, mz))), mz))
    t_sep = sum(k for k, _ in kept)
    ensemble = tuple((k / t_sep, PureState.normalized(mz)) for k, mz in kept)
    psi = None
    t_psi = 0.0
    if d.psi is not None:
        mp = m @ d.psi.v
        t_psi = float(np.real(np.vdot(mp, mp)))
        psi = PureState.normalized(mp)
    t = d.lam * t_sep + (1.0 - d.lam) * t_psi
    lam = d.lam * t_sep / t
    return LsDecomposition(lam, ensemble, psi, None, None, d.source_rank)


def _pullback(lmap: LqccMap, d: LsDecomposition, t: float, tol: Tolerances):
    # <z'|rho'_a^-1|z'> = T <M^-1 z'|rho_a^-1|M^-1 z'> on the source side
    minv = lmap.inverse(tol).operator
    rest = 1.0 - d.lam

    def pull(labels, z):
        w = d.lam * sum(d.ensemble[i - 1][0] for i in labels)
        src = d.ensemble[labels[0] - 1][1].v
        rinv = restricted_inverse([(w, src), (rest, d.psi.v)], tol)
        y = minv @ z
        return t * float(np.real(np.vdot(y, rinv @ y)))

    return pull


def verify_transported_optimality(
    lmap: LqccMap, d: LsDecomposition, tol: Tolerances = DEFAULT, strict: bool = True
) -> OptimalityCertificate:
    """Maximality certificate of the transported decomposition.

    Singles and pairs are evaluated on the filtered state exactly as for a
    Bell-diagonal source; each single is also recomputed on the source side
    through the inverse map (residual ``pullback``). For a rank-deficient
    source the certificate is judged only when A = B within 1e-10, or when
    the map sends psi to a multiple of itself; otherwise it is returned with
    ``judged=False`` and the cross terms in each pair's ``info``. A = B fixes
    only the singlet, so with another Bell state dominant the A = B case is
    judged and generally fails.

    Raises :class:`CertificateFailed` (``strict``) on a judged failure.
    """
    if d.psi is None:
        raise NotEntangled("decomposition has no entangled part to certify")
    rank = d.source_rank if d.source_rank is not None else int(np.linalg.matrix_rank(d.reconstruct(), 1e-9))
    moved = transport_decomposition(lmap, d, tol)
    judged = rank == 4 or lmap.symmetric() or lmap.fixes(d.psi)
    t = success_probability(lmap, d.reconstruct())
    cert = certify(
        moved.lam, moved.ensemble, moved.psi.v, rank, tol, gamma=False, judged=judged, pull=_pullback(lmap, d, t, tol)
    )
    if strict and judged and not cert.passed:
        where, val = cert.worst()
        raise CertificateFailed(f"transported certificate failed at {where} (residual {val:.3e})", cert)
    return cert


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-random 2x2 unitary (QR of a complex Gaussian with phase fix)."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_filtration(rng: np.random.Generator, a_max: float = 0.95) -> Filtration:
    m = rng.standard_normal(3)
    m /= np.linalg.norm(m)
    return Filtration(float(rng.uniform(0.5, 2.0)), float(rng.uniform(-a_max, a_max)), tuple(m))


def random_map(seed=None, a_max: float = 0.95, symmetric: bool = False, fixing: int | None = None) -> LqccMap:
    """Random invertible map with |a|, |b| <= ``a_max``.

    ``symmetric`` gives A = B; ``fixing=k`` gives the partner of A that
    leaves Bell state k invariant (see :meth:`LqccMap.fixing`).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u_a, f_a = random_unitary(rng), random_filtration(rng, a_max)
    if symmetric:
        return LqccMap(u_a, u_a, f_a, f_a)
    if fixing is not None:
        return LqccMap.fixing(fixing, u_a, f_a)
    return LqccMap(u_a, random_unitary(rng), f_a, random_filtration(rng, a_max))
