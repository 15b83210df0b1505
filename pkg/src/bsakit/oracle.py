"""Brute-force search for the best separable approximation.

Independent of the constructive decomposition: it only knows that a split
rho = lam sigma + (1 - lam) |psi><psi| is admissible when sigma is PSD and
PPT (separable for two qubits), and maximizes lam over psi by multi-start
Nelder-Mead. Spectra here come from ``numpy.linalg``, not the Jacobi
solver used elsewhere, so agreement between the two is a real cross-check.

For a fixed psi write t = 1 - lam. sigma is PSD iff t <= 1/<psi|rho^+|psi>
(and psi lies in the range of rho), and PPT iff g(t) >= 0 with
g(t) = min eig(PT(rho) - t PT(|psi><psi|)). g is concave, so the PPT set in
t is an interval and its left end gives the largest lam for that psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import Infeasible, NotEntangled
from .states import DensityMatrix, PureState
from .tolerances import DEFAULT, Tolerances

SWEEP_POINTS = 17
SECTION_POINTS = 12
SECTION_ROUNDS = 8
DEFAULT_RESTARTS = 32
DEFAULT_BUDGET = 8000
MIN_BUDGET = 1000
AGREE_TOL = 1e-6
PEAK_ROUNDS = 16
PEAK_REL = 1e-3
PENALTY = 1000.0
RESTART_SHARE = 0.5
POLISH_ROUND = 200
POLISH_STEP = 0.1
POLISH_SHRINK = 0.3
POLISH_MIN_STEP = 1e-6
# accepted PPT margin, as a fraction of tol.psd; leaves room for the
# post-hoc re-check at tol.psd / 10
FLOOR_FRACTION = 0.05


@dataclass(frozen=True, eq=False)
class OracleResult:
    best_lambda: float
    best_psi: PureState
    evaluations: int
    converged: bool


def _pt(m: np.ndarray) -> np.ndarray:
    # partial transpose on qubit B, batched over leading axes
    lead = m.shape[:-2]
    return m.reshape(*lead, 2, 2, 2, 2).swapaxes(-1, -3).reshape(*lead, 4, 4)


def _sigma(rho: np.ndarray, lam: float, psi: np.ndarray) -> np.ndarray:
    return (rho - (1.0 - lam) * np.outer(psi, np.conj(psi))) / lam


def feasibility(rho, lam: float, psi, tol: Tolerances = DEFAULT) -> bool:
    """Whether (rho - (1 - lam)|psi><psi|)/lam is PSD and PPT within ``tol.psd``."""
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lam must lie in (0, 1], got {lam!r}")
    m = rho.m if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    v = psi.v if isinstance(psi, PureState) else np.asarray(psi, dtype=complex)
    s = _sigma(m, lam, v)
    s = 0.5 * (s + s.conj().T)
    if np.linalg.eigvalsh(s)[0] < -tol.psd:
        return False
    return bool(np.linalg.eigvalsh(_pt(s))[0] >= -tol.psd)


def _amplitudes(x: np.ndarray, r: int) -> np.ndarray:
    """Unit vector in C^r from r-1 hyperspherical angles and r-1 phases."""
    angles, phases = x[: r - 1], x[r - 1 :]
    mags = np.empty(r)
    s = 1.0
    for i, t in enumerate(angles):
        mags[i] = s * math.cos(t)
        s *= math.sin(t)
    mags[r - 1] = s
    return mags * np.exp(1j * np.concatenate(([0.0], phases)))


class _Problem:
    def __init__(self, rho: np.ndarray, tol: Tolerances):
        vals, vecs = np.linalg.eigh(rho)
        keep = vals > tol.psd
        self.basis = vecs[:, keep]
        self.inv_vals = 1.0 / vals[keep]
        self.r = int(np.sum(keep))
        self.pt_rho = _pt(rho)
        pvals, pvecs = np.linalg.eigh(self.pt_rho)
        # eigenspace of the most negative eigenvalue of PT(rho)
        self.neg = pvecs[:, pvals < pvals[0] + tol.psd]
        self.floor = -FLOOR_FRACTION * tol.psd
        self.evaluations = 0

    def psi(self, x) -> np.ndarray:
        return self.basis @ _amplitudes(np.asarray(x), self.r)

    def _g(self, ts: np.ndarray, pt_p: np.ndarray) -> np.ndarray:
        # PPT margin of sigma itself, i.e. divided by lam = 1 - t; still
        # quasi-concave in t, so the bracketing below stays valid
        g = np.linalg.eigvalsh(self.pt_rho[None] - ts[:, None, None] * pt_p[None])[:, 0]
        return g / np.maximum(1.0 - ts, 1e-300)

    def _peak(self, ts, g, pt_p) -> tuple[float, float]:
        # g is unimodal: keep the two cells around the best sample and refine,
        # stopping once the bracket is small next to the violation itself
        for _ in range(PEAK_ROUNDS):
            j = int(np.argmax(g))
            lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, len(ts) - 1)]
            if g[j] < self.floor and hi - lo < PEAK_REL * -g[j]:
                break
            ts = np.linspace(lo, hi, SECTION_POINTS + 2)
            g = self._g(ts, pt_p)
        j = int(np.argmax(g))
        return float(ts[j]), float(g[j])

    def _left_root(self, lo, hi, pt_p) -> float:
        # g(lo) < floor <= g(hi); return a feasible t within the final cell
        for _ in range(SECTION_ROUNDS):
            tt = np.linspace(lo, hi, SECTION_POINTS + 2)
            j = int(np.nonzero(self._g(tt, pt_p) >= self.floor)[0][0])
            lo, hi = tt[j - 1], tt[j]
        return float(hi)

    def inner(self, x) -> tuple[float, float]:
        """Largest admissible lam along psi(x) and the PPT violation.

        Returns ``(lam, 0)`` when feasible; otherwise ``(1 - t_peak, g_peak)``
        with g_peak < 0 the best PPT margin over the PSD bracket.
        """
        c = _amplitudes(np.asarray(x), self.r)
        t_psd = min(1.0, 1.0 / float(np.sum(self.inv_vals * np.abs(c) ** 2)))
        psi = self.basis @ c
        pt_p = _pt(np.outer(psi, np.conj(psi)))
        ts = np.linspace(0.0, t_psd, SWEEP_POINTS)
        g = self._g(ts, pt_p)
        ok = np.nonzero(g >= self.floor)[0]
        if ok.size:
            k = int(ok[0])
            if k == 0:
                return 1.0, 0.0
            return 1.0 - self._left_root(ts[k - 1], ts[k], pt_p), 0.0
        t_hat, g_hat = self._peak(ts, g, pt_p)
        if g_hat >= self.floor:
            return 1.0 - self._left_root(0.0, t_hat, pt_p), 0.0
        return 1.0 - t_hat, g_hat

    def objective(self, x) -> float:
        self.evaluations += 1
        lam, g_hat = self.inner(x)
        if g_hat >= 0.0:
            return -lam
        # exact penalty, continuous across the feasibility boundary; the
        # slope term only acts while g still falls from t = 0, where the
        # other two are constant in psi
        psi = self.psi(x)
        pt_p = _pt(np.outer(psi, np.conj(psi)))
        slope = float(np.linalg.eigvalsh(self.neg.conj().T @ pt_p @ self.neg)[-1])
        return -lam - PENALTY * g_hat + max(0.0, slope)


def bsa_search(
    rho,
    budget: int = DEFAULT_BUDGET,
    seed=0,
    restarts: int = DEFAULT_RESTARTS,
    tol: Tolerances = DEFAULT,
) -> OracleResult:
    """Largest lam with rho = lam sigma + (1 - lam)|psi><psi|, sigma PSD and PPT.

    Parameters
    ----------
    rho : DensityMatrix or array_like
        Entangled two-qubit state.
    budget : int
        Objective evaluations allowed, at least 1000. Half is split evenly
        over the restarts, the rest polishes the best of them (polishing
        stops early once it no longer improves).
    seed : int or numpy Generator
        Fixes the starting simplices; the result is deterministic in it.
    restarts : int

    Returns
    -------
    OracleResult
        ``converged`` is true when at least two restarts, before polishing,
        already reach the final lam within 1e-6.

    Raises
    ------
    NotEntangled
        ``rho`` passes the PPT test (the answer would be lam = 1).
    Infeasible
        No restart found an admissible lam > 0.
    """
    if budget < MIN_BUDGET:
        raise ValueError(f"budget must be at least {MIN_BUDGET}, got {budget}")
    if restarts < 1:
        raise ValueError(f"restarts must be positive, got {restarts}")
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho, tol)
    m = np.array(rho.m)
    if np.linalg.eigvalsh(_pt(m))[0] >= -tol.psd:
        raise NotEntangled("state has a positive partial transpose")
    prob = _Problem(m, tol)
    if prob.r == 1:
        # a pure state leaves no room for a separable part
        return OracleResult(0.0, PureState.normalized(prob.basis[:, 0]), 0, True)

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = 2 * (prob.r - 1)
    starts = rng.uniform(0.0, 2.0 * math.pi, size=(restarts, n))
    # half the budget for independent restarts, the rest for polishing
    per = max(int(budget * RESTART_SHARE) // restarts, n + 2)
    opts = {"xatol": 1e-13, "fatol": 1e-15}
    finals = []
    for x0 in starts:
        res = minimize(prob.objective, x0, method="Nelder-Mead", options={"maxfev": per, **opts})
        finals.append((float(res.fun), res.x))
    order = sorted(range(restarts), key=lambda i: finals[i][0])
    f_best, x = finals[order[0]]
    # Nelder-Mead stalls on the kink where the PSD and PPT limits meet;
    # fresh, shrinking simplices around the incumbent get it moving again
    step = POLISH_STEP
    while prob.evaluations < budget:
        simplex = np.vstack([x] + [x + step * e for e in np.eye(n)])
        left = budget - prob.evaluations
        res = minimize(
            prob.objective,
            x,
            method="Nelder-Mead",
            options={"maxfev": min(left, POLISH_ROUND), "initial_simplex": simplex, **opts},
        )
        improved = res.fun < f_best
        if improved:
            f_best, x = float(res.fun), res.x
        elif step <= POLISH_MIN_STEP:
            break
        step = max(step * POLISH_SHRINK, POLISH_MIN_STEP)
    lam, g_hat = prob.inner(x)
    if not (g_hat >= 0.0 and lam > 0.0):
        raise Infeasible("no admissible split with lam > 0 was found")
    psi = prob.psi(x)
    # soundness: re-check at a tightened tolerance, backing off if needed
    tight = tol.scaled(0.1)
    step = 1e-12
    while not feasibility(m, lam, psi, tight):
        lam -= step
        step *= 4.0
        if lam <= 0.0:
            raise Infeasible("best split failed the post-hoc feasibility check")
    agree = sum(1 for f, _ in finals if -f >= lam - AGREE_TOL)
    return OracleResult(float(lam), PureState.normalized(psi), prob.evaluations, agree >= 2)
