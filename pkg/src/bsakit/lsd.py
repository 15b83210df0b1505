"""Optimal Lewenstein-Sanpera decomposition of Bell-diagonal states.

For a Bell-diagonal state whose largest weight p_k exceeds 1/2 the optimal
split is

    rho = lam * rho_sep + (1 - lam) |psi_k><psi_k|,   lam = 2 (1 - p_k),

with rho_sep the Bell-diagonal state on the separable boundary
(p'_k = 1/2, p'_i = p_i / lam). rho_sep is written as an equal-weight
mixture of four product states built from Wootters' x-vectors, and the
decomposition is certified by checking that every single weight and every
pair of weights of that ensemble is maximal.

All constructions are done in the canonical frame where psi_1 carries the
largest weight; states with another dominant Bell state are mapped there by
a local unitary from ``FRAMES`` and mapped back afterwards.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .entanglement import pure_concurrence
from .errors import CertificateFailed, DegeneratePair, DependentSet, NotEntangled, NotOnBoundary, PureInput
from .linalg import (
    I2,
    SX,
    SZ,
    dual_basis,
    gram_determinant,
    kron,
    outer,
    range_pinv,
    restricted_inverse,
)
from .states import BELL, BellDiagonal, PureState, spin_flip_vector
from .tolerances import DEFAULT, Tolerances

BOUNDARY_TOL = 1e-9
PURE_TOL = 1e-12
SAME_RAY_TOL = 1e-9

# Wootters' unitary for the Bell-diagonal tau matrix diag(-p1, p2, p3, -p4)
U_BD = np.diag([1j, 1, 1, 1j])
# sign pattern of z_alpha on x_1..x_4
Z_SIGNS = np.array([[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]])
# theta_1 = 0 and a common quarter turn on the rest; on the boundary this
# closes sum_j exp(2i theta_j) lambda_j = 0 and gives product z's
PRODUCT_PHASES = (0.0, -math.pi / 2, -math.pi / 2, -math.pi / 2)

# local unitaries (acting on qubit B) permuting the Bell basis; FRAMES[k]
# sends psi_1 to +-psi_{k+1}
FRAMES = tuple(kron(I2, g) for g in (I2, SZ, SX, SX @ SZ))


def _frame_permutation(v: np.ndarray) -> tuple[int, ...]:
    img = np.abs(np.conj(BELL) @ v @ BELL.T)
    return tuple(int(np.argmax(img[:, i])) for i in range(4))


# FRAME_PERMS[k][i] = j where FRAMES[k] psi_i = +-psi_j
FRAME_PERMS = tuple(_frame_permutation(v) for v in FRAMES)


def canonical_probabilities(p, k: int) -> np.ndarray:
    """Probabilities seen in the frame where Bell state k becomes psi_1."""
    p = np.asarray(p, dtype=float)
    return p[list(FRAME_PERMS[k])]


@dataclass(frozen=True, eq=False)
class XVectors:
    """Wootters' x-vectors of a Bell-diagonal state.

    ``tau`` is the matrix <v_i|v~_j> of the subnormalized eigenvectors,
    ``u`` the unitary bringing it to diag(lambdas).
    """

    xs: tuple[np.ndarray, ...]
    lambdas: tuple[float, float, float, float]
    tau: np.ndarray
    u: np.ndarray


def build_x_vectors(bd: BellDiagonal) -> XVectors:
    """x-vectors with <x_i|x~_j> = lambda_i delta_ij.

    The lambdas keep the Bell labelling, lambda_i = p_i; they are descending
    only when the probabilities are.
    """
    p = np.asarray(bd.p, dtype=float)
    vs = [math.sqrt(pi) * BELL[i] for i, pi in enumerate(p)]
    tau = np.array([[np.vdot(vi, spin_flip_vector(vj)) for vj in vs] for vi in vs])
    xs = tuple(sum(np.conj(U_BD[i, j]) * vs[j] for j in range(4)) for i in range(4))
    lam = np.real(np.diag(U_BD @ tau @ U_BD.T))
    return XVectors(xs, tuple(float(x) for x in lam), tau, U_BD.copy())


def closing_phases(lambdas) -> tuple[float, float, float, float]:
    """Phases theta_j with sum_j exp(2 i theta_j) lambda_j = 0.

    Exists iff the largest lambda is at most the sum of the others (the
    four lambdas close a quadrilateral).
    """
    l1, l2, l3, l4 = (float(x) for x in lambdas)
    if 2 * max(l1, l2, l3, l4) > l1 + l2 + l3 + l4 + BOUNDARY_TOL:
        raise NotOnBoundary(f"no closing phases for lambdas {lambdas}")
    r = max(abs(l1 - l4), abs(l2 - l3))
    # w = l1 + l4 e^{ia} with |w| = r, then l2 e^{ib} + l3 e^{ic} = -w
    if l1 * l4 > 0:
        ca = (r * r - l1 * l1 - l4 * l4) / (2 * l1 * l4)
        a = math.acos(min(1.0, max(-1.0, ca)))
    else:
        a = 0.0
    u = -(l1 + l4 * complex(math.cos(a), math.sin(a)))
    beta = math.atan2(u.imag, u.real) if abs(u) > 0 else 0.0
    if l2 * abs(u) > 0:
        cb = (l2 * l2 + abs(u) ** 2 - l3 * l3) / (2 * l2 * abs(u))
        b = beta + math.acos(min(1.0, max(-1.0, cb)))
    else:
        b = 0.0
    rest = u - l2 * complex(math.cos(b), math.sin(b))
    c = math.atan2(rest.imag, rest.real) if l3 > 0 else 0.0
    return (0.0, b / 2, c / 2, a / 2)


def z_vectors(xv: XVectors, thetas=PRODUCT_PHASES) -> list[np.ndarray]:
    """Subnormalized product vectors z_alpha = 1/2 sum_j s_alpha_j e^{i theta_j} x_j."""
    ph = np.exp(1j * np.asarray(thetas))
    return [0.5 * sum(Z_SIGNS[a, j] * ph[j] * xv.xs[j] for j in range(4)) for a in range(4)]


def _ensemble_from(bd: BellDiagonal, thetas, k: int) -> tuple[tuple[float, PureState], ...]:
    pc = canonical_probabilities(bd.p, k)
    zs = z_vectors(build_x_vectors(BellDiagonal(tuple(pc))), thetas)
    out = []
    for z in zs:
        w = float(np.vdot(z, z).real)
        out.append((w, PureState.normalized(FRAMES[k] @ z)))
    return tuple(out)


def build_product_ensemble(
    boundary_bd: BellDiagonal, dominant: int | None = None
) -> tuple[tuple[float, PureState], ...]:
    """Four equal-weight product states mixing to a boundary Bell-diagonal state.

    Parameters
    ----------
    boundary_bd : BellDiagonal
        Must satisfy 2 max(p) - 1 = 0 within 1e-9.
    dominant : int, optional
        0-based index of the Bell state playing the role of psi_1. Needed
        when two probabilities equal 1/2; defaults to the first maximum.

    Returns
    -------
    tuple of (weight, PureState)
        Normalized product states with weights 1/4. On rank-2 boundary
        states the four vectors coincide in pairs.
    """
    p = boundary_bd.p
    gap = 2 * max(p) - 1
    if abs(gap) > BOUNDARY_TOL:
        raise NotOnBoundary(f"state is not on the separable boundary (2 max p - 1 = {gap:.3e})")
    k = boundary_bd.dominant if dominant is None else dominant
    if abs(p[k] - 0.5) > BOUNDARY_TOL:
        raise NotOnBoundary(f"p[{k}] = {p[k]!r} is not the boundary weight 1/2")
    return _ensemble_from(boundary_bd, PRODUCT_PHASES, k)


@dataclass(frozen=True, eq=False)
class LsDecomposition:
    """rho = lam * sum_a w_a |z_a><z_a| + (1 - lam) |psi><psi|.

    ``p_prime`` and ``source`` are set for Bell-diagonal decompositions and
    left ``None`` after a local filtering. ``psi`` is ``None`` only for a
    separable input decomposed with ``allow_separable=True``.
    """

    lam: float
    ensemble: tuple[tuple[float, PureState], ...]
    psi: PureState | None
    p_prime: BellDiagonal | None = None
    source: BellDiagonal | None = None
    source_rank: int | None = None

    @property
    def dominant(self) -> int | None:
        return None if self.source is None else self.source.dominant

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.ensemble])

    def rho_sep(self) -> np.ndarray:
        return sum(w * z.projector() for w, z in self.ensemble)

    def reconstruct(self) -> np.ndarray:
        out = self.lam * self.rho_sep()
        if self.psi is not None:
            out = out + (1.0 - self.lam) * self.psi.projector()
        return out

    def average_concurrence(self) -> float:
        if self.psi is None:
            return 0.0
        return (1.0 - self.lam) * pure_concurrence(self.psi)


def ls_decompose_bd(
    bd: BellDiagonal, tol: Tolerances = DEFAULT, allow_separable: bool = False
) -> LsDecomposition:
    """Optimal L-S decomposition of a Bell-diagonal state.

    Raises
    ------
    NotEntangled
        max p <= 1/2, unless ``allow_separable`` (then lam = 1, no pure part,
        and the ensemble uses phases closing the lambda quadrilateral).
    PureInput
        max p = 1; a pure state has nothing to decompose.
    """
    p = np.asarray(bd.p, dtype=float)
    k = bd.dominant
    # weights too small to count towards the rank are dropped outright;
    # keeping them leaves near-coincident z's that no route handles well
    rank = int(np.sum(p > tol.rank))
    p = np.where(p > tol.rank, p, 0.0)
    p = p / p.sum()
    pk = p[k]
    if pk >= 1.0 - PURE_TOL:
        raise PureInput(f"Bell state {k + 1} is pure (p = {pk!r})")
    if pk <= 0.5:
        if not allow_separable:
            raise NotEntangled(f"state is separable: max p = {pk!r} <= 1/2")
        pc = canonical_probabilities(p, k)
        ens = _ensemble_from(BellDiagonal(tuple(p)), closing_phases(pc), k)
        return LsDecomposition(1.0, ens, None, bd, bd, rank)
    lam = 2.0 * (1.0 - pk)
    pp = p / lam
    pp[k] = 0.5
    boundary = BellDiagonal(tuple(float(x) for x in pp))
    psi = PureState(FRAMES[k] @ BELL[0])
    return LsDecomposition(lam, build_product_ensemble(boundary, k), psi, boundary, bd, rank)


# ---------------------------------------------------------------------------
# Wronskians


def _subnormalized(d: LsDecomposition) -> list[np.ndarray]:
    return [math.sqrt(w) * z.v for w, z in d.ensemble]


def wronskian_checks(bd: BellDiagonal, tol: Tolerances = DEFAULT) -> dict[tuple[int, ...], float]:
    """Gram determinants of psi with one or two of the subnormalized z's.

    Keys are 1-based: ``(a,)`` for {psi, z_a}, ``(a, b)`` for {psi, z_a, z_b}.
    """
    d = bd if isinstance(bd, LsDecomposition) else ls_decompose_bd(bd, tol)
    zs = _subnormalized(d)
    psi = d.psi.v
    out: dict[tuple[int, ...], float] = {}
    for a in range(4):
        out[(a + 1,)] = gram_determinant([psi, zs[a]])
    for a, b in itertools.combinations(range(4), 2):
        out[(a + 1, b + 1)] = gram_determinant([psi, zs[a], zs[b]])
    return out


def wronskian_closed_form(p_prime: BellDiagonal, dominant: int | None = None) -> dict[tuple[int, ...], float]:
    """Closed-form Wronskians on a boundary state, keyed like :func:`wronskian_checks`."""
    k = p_prime.dominant if dominant is None else dominant
    pc = canonical_probabilities(p_prime.p, k)
    w = {(a,): 1.0 / 8.0 for a in range(1, 5)}
    for pair, i in (((1, 2), 1), ((3, 4), 1), ((1, 3), 2), ((2, 4), 2), ((1, 4), 3), ((2, 3), 3)):
        w[pair] = pc[i] * (1 - 2 * pc[i]) / 8.0
    return w


# ---------------------------------------------------------------------------
# certificates

BRANCHES = {4: "full_rank", 3: "one_zero", 2: "two_zero"}


@dataclass(frozen=True)
class SingleCheck:
    """Maximality of one (merged) ensemble weight; labels are 1-based."""

    alpha: tuple[int, ...]
    weight: float
    residuals: dict
    ok: bool


@dataclass(frozen=True)
class PairCheck:
    """Maximality of a pair of weights.

    ``route`` is ``"dual"`` when psi, z_a, z_b are independent (three-term
    restricted inverse), ``"gamma"`` for the closed-form two-dimensional
    inverse of a Bell-diagonal source, ``"direct"`` for the numerically
    inverted two-dimensional block of a transported decomposition.
    ``residuals`` are judged against the tolerance, ``info`` is reported only.
    """

    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    route: str
    residuals: dict
    ok: bool
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class OptimalityCertificate:
    single: tuple[SingleCheck, ...]
    pair: tuple[PairCheck, ...]
    rank: int
    branch: str
    tol: float
    judged: bool = True

    @property
    def passed(self) -> bool | None:
        """All residuals within tolerance; ``None`` when the checks are report-only."""
        if not self.judged:
            return None
        return all(c.ok for c in self.single) and all(c.ok for c in self.pair)

    @property
    def max_residual(self) -> float:
        vals = [abs(v) for c in self.single + self.pair for v in c.residuals.values()]
        return max(vals) if vals else 0.0

    def worst(self) -> tuple[str, float]:
        best = ("", 0.0)
        for c in self.single + self.pair:
            label = (
                f"single{c.alpha}" if isinstance(c, SingleCheck) else f"pair{c.alpha}x{c.beta}/{c.route}"
            )
            for k, v in c.residuals.items():
                if abs(v) >= abs(best[1]):
                    best = (f"{label}:{k}", v)
        return best


def maximal_pair_weights(b11: float, b22: float, b12: complex, tol: Tolerances = DEFAULT) -> tuple[float, float]:
    """Maximal pair weights from inverse matrix elements.

    ``b_ij = <psi_i|rho^-1|psi_j>`` for normalized psi_1, psi_2 in the range.
    """
    b11, b22 = float(np.real(b11)), float(np.real(b22))
    c = abs(b12)
    det = b11 * b22 - c * c
    if abs(det) < tol.rank:
        raise DegeneratePair(f"pair determinant {det:.3e} below {tol.rank:g}")
    return (b22 - c) / det, (b11 - c) / det


def gamma_elements(l_a: float, l_b: float, lam: float) -> tuple[float, float, float]:
    """Closed-form <z_a|rho_ab^-1|z_a>, <z_b|..|z_b>, <z_a|..|z_b> on a dependent pair.

    Works with unnormalized z's of squared norm 1/4 and weights
    ``l_a``, ``l_b`` per such z (psi = i sqrt2 (z_a + z_b)).
    """
    s = 2.0 * (1.0 - lam)
    g = l_a * l_b + s * (l_a + l_b)
    return (l_b + s) / g, (l_a + s) / g, -s / g


def _merge(ens: list[tuple[float, np.ndarray]]) -> list[tuple[tuple[int, ...], float, np.ndarray]]:
    labels: list[list[int]] = []
    weights: list[float] = []
    vecs: list[np.ndarray] = []
    for i, (w, v) in enumerate(ens, start=1):
        for g, u in enumerate(vecs):
            if abs(abs(np.vdot(u, v)) - 1.0) < SAME_RAY_TOL:
                labels[g].append(i)
                weights[g] += w
                break
        else:
            labels.append([i])
            weights.append(w)
            vecs.append(v)
    return [(tuple(lbl), w, v) for lbl, w, v in zip(labels, weights, vecs)]


def _single(label, weight, z, psi, rest, tol, pull=None) -> SingleCheck:
    rinv = restricted_inverse([(weight, z), (rest, psi)], tol)
    val = float(np.real(np.vdot(z, rinv @ z)))
    res = {"inverse": val * weight - 1.0}
    if pull is not None:
        ref = pull(label, z)
        res["pullback"] = (val - ref) / val
    return SingleCheck(label, weight, res, all(abs(v) < tol.cert for v in res.values()))


def _pair_dual(la, lb, wa, wb, za, zb, psi, rest, tol) -> PairCheck:
    rinv = restricted_inverse([(wa, za), (wb, zb), (rest, psi)], tol)
    res = {
        "alpha": float(np.real(np.vdot(za, rinv @ za))) * wa - 1.0,
        "beta": float(np.real(np.vdot(zb, rinv @ zb))) * wb - 1.0,
        "cross": float(abs(np.vdot(za, rinv @ zb))) * math.sqrt(wa * wb),
    }
    return PairCheck(la, lb, "dual", res, all(abs(v) < tol.cert for v in res.values()))


def _pair_dependent(la, lb, wa, wb, za, zb, psi, rest, lam, tol, gamma: bool) -> PairCheck:
    # psi must lie in span(z_a, z_b) for this route
    duals = dual_basis([za, zb], tol)
    ca, cb = (np.vdot(d, psi) for d in duals)
    res = {"span": float(np.linalg.norm(psi - ca * za - cb * zb))}
    # rephase z_b so psi has coefficients of equal phase on both rays; the
    # projectors are unchanged and the signed cross element becomes comparable
    if abs(ca) > 0 and abs(cb) > 0:
        zb = zb * (cb / abs(cb)) / (ca / abs(ca))
    block = wa * outer(za) + wb * outer(zb) + rest * outer(psi)
    pinv = range_pinv(block, tol)
    b11 = np.vdot(za, pinv @ za)
    b22 = np.vdot(zb, pinv @ zb)
    b12 = np.vdot(za, pinv @ zb)
    try:
        ea, eb = maximal_pair_weights(b11, b22, b12, tol)
        res["pair_alpha"] = ea / wa - 1.0
        res["pair_beta"] = eb / wb - 1.0
    except DegeneratePair:
        res["pair_alpha"] = res["pair_beta"] = math.inf
    info = {"cross": float(abs(b12)) * math.sqrt(wa * wb)}
    if gamma:
        # the closed form is written for z's of squared norm 1/4, so its weights are 4x ours
        g11, g22, g12 = gamma_elements(4 * wa, 4 * wb, lam)
        scale = max(abs(g11), abs(g22))
        res["gamma_aa"] = float(abs(b11 / 4 - g11)) / scale
        res["gamma_bb"] = float(abs(b22 / 4 - g22)) / scale
        res["gamma_ab"] = float(abs(b12 / 4 - g12)) / scale
        info["gamma"] = (g11, g22, g12)
    ok = all(abs(v) < tol.cert for v in res.values())
    return PairCheck(la, lb, "gamma" if gamma else "direct", res, ok, info)


def certify(
    lam: float,
    ensemble,
    psi: np.ndarray,
    rank: int,
    tol: Tolerances = DEFAULT,
    gamma: bool = True,
    judged: bool = True,
    pull=None,
) -> OptimalityCertificate:
    """Single and pair maximality of ``rho = sum_a lam w_a P_a + (1-lam) P_psi``.

    Weights inside rho are ``lam * w_a``; repeated ensemble rays are merged
    first. ``pull``, when given, maps ``(labels, z)`` to a reference value
    for <z|rho_a^-1|z> computed another way; ``labels`` are the 1-based
    ensemble indices merged into ``z``.
    """
    rest = 1.0 - lam
    groups = _merge([(lam * w, z.v if isinstance(z, PureState) else z) for w, z in ensemble])
    singles = tuple(_single(lbl, w, z, psi, rest, tol, pull) for lbl, w, z in groups)
    pairs = []
    for (la, wa, za), (lb, wb, zb) in itertools.combinations(groups, 2):
        det = gram_determinant([psi, za, zb])
        if det > tol.rank:
            try:
                pairs.append(_pair_dual(la, lb, wa, wb, za, zb, psi, rest, tol))
                continue
            except DependentSet:
                pass
        pairs.append(_pair_dependent(la, lb, wa, wb, za, zb, psi, rest, lam, tol, gamma))
    return OptimalityCertificate(
        singles, tuple(pairs), rank, BRANCHES.get(rank, f"rank_{rank}"), tol.cert, judged
    )


def verify_optimality(d: LsDecomposition, tol: Tolerances = DEFAULT, strict: bool = True) -> OptimalityCertificate:
    """Certificate for a Bell-diagonal decomposition.

    Raises :class:`CertificateFailed` (``strict``) when any residual is at or
    above ``tol.cert``.
    """
    if d.psi is None:
        raise NotEntangled("decomposition has no entangled part to certify")
    rank = d.source_rank if d.source_rank is not None else int(np.linalg.matrix_rank(d.reconstruct(), 1e-9))
    cert = certify(d.lam, d.ensemble, d.psi.v, rank, tol, gamma=True)
    if strict and not cert.passed:
        where, val = cert.worst()
        raise CertificateFailed(f"optimality certificate failed at {where} (residual {val:.3e})", cert)
    return cert


def reconstruction_error(d: LsDecomposition, rho) -> float:
    m = rho.m if hasattr(rho, "m") else np.asarray(rho)
    return float(np.max(np.abs(d.reconstruct() - m)))

