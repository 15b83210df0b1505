"""Dense complex linear algebra for 2x2 and 4x4 operators.

Matrices and vectors are plain ``numpy`` arrays of dtype ``complex128``;
the helpers here validate shape and finiteness and then work on them.
The Hermitian eigensolver is a cyclic Jacobi iteration written on Python
complex scalars, which at these sizes is both faster and more predictable
than calling into LAPACK for every 4x4 product.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .errors import DependentSet, NoConvergence, NotHermitian, NotPsd
from .tolerances import DEFAULT, Tolerances

DIMS = (2, 4)
MAX_SWEEPS = 100

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SX, SY, SZ)
SYSY = np.kron(SY, SY)


def as_matrix(m, dim: int | None = None) -> np.ndarray:
    """Coerce ``m`` to a finite square complex matrix of size 2 or 4."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in DIMS:
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def as_vector(v, dim: int | None = None) -> np.ndarray:
    a = np.array(v, dtype=complex).reshape(-1)
    if a.shape[0] not in DIMS:
        raise ValueError(f"expected a vector of length 2 or 4, got {a.shape[0]}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"expected a vector of length {dim}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def outer(u: np.ndarray, v: np.ndarray | None = None) -> np.ndarray:
    """|u><v| (|u><u| when ``v`` is omitted)."""
    v = u if v is None else v
    return np.outer(u, np.conj(v))


def max_abs(m) -> float:
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def hermiticity_defect(m: np.ndarray) -> float:
    return max_abs(m - dagger(m))


def check_hermitian(m: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    defect = hermiticity_defect(m)
    if defect > tol.herm:
        raise NotHermitian(f"matrix is not Hermitian (max |m - m^dagger| = {defect:.3e})")
    return 0.5 * (m + dagger(m))


def _jacobi(a: list[list[complex]], n: int) -> tuple[list[float], list[list[complex]]]:
    """Cyclic complex Jacobi on a Hermitian matrix given as nested lists.

    Returns the diagonal after convergence and the accumulated unitary
    (columns are eigenvectors). ``a`` is overwritten.
    """
    v = [[1.0 + 0j if i == j else 0j for j in range(n)] for i in range(n)]
    scale = math.sqrt(sum(abs(a[i][j]) ** 2 for i in range(n) for j in range(n)))
    if scale == 0.0:
        return [0.0] * n, v
    for _ in range(MAX_SWEEPS):
        off = math.sqrt(sum(abs(a[i][j]) ** 2 for i in range(n) for j in range(n) if i != j))
        if off <= 1e-17 * scale:
            return [a[i][i].real for i in range(n)], v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                g = abs(apq)
                if g <= 1e-300 or g <= 1e-18 * scale:
                    continue
                ph = apq / g
                theta = (a[q][q].real - a[p][p].real) / (2.0 * g)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                phc = ph.conjugate()
                # rotation J on (p, q): [[c, s], [-s*conj(ph), c*conj(ph)]]
                jpp, jpq, jqp, jqq = c, s, -s * phc, c * phc
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = akp * jpp + akq * jqp
                    a[k][q] = akp * jpq + akq * jqq
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = vkp * jpp + vkq * jqp
                    v[k][q] = vkp * jpq + vkq * jqq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = jpp * apk + jqp.conjugate() * aqk
                    a[q][k] = jpq * apk + jqq.conjugate() * aqk
                a[p][q] = a[q][p] = 0j
                a[p][p] = complex(a[p][p].real, 0.0)
                a[q][q] = complex(a[q][q].real, 0.0)
    raise NoConvergence(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")


def hermitian_eigen(m, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian 2x2 or 4x4 matrix.

    Parameters
    ----------
    m : array_like
        Hermitian matrix; checked against ``tol.herm``.
    tol : Tolerances

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real, sorted descending. Ties keep the order in which the sweep
        left them.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns, ``m @ vecs[:, i] == vals[i] * vecs[:, i]``.

    Raises
    ------
    NotHermitian, NoConvergence
    """
    h = check_hermitian(as_matrix(m), tol)
    n = h.shape[0]
    vals, vecs = _jacobi(h.tolist(), n)
    order = sorted(range(n), key=lambda i: -vals[i])
    evals = np.array([vals[i] for i in order])
    evecs = np.array(vecs, dtype=complex)[:, order]
    return evals, evecs


def eigvalsh(m, tol: Tolerances = DEFAULT) -> np.ndarray:
    return hermitian_eigen(m, tol)[0]


def matrix_sqrt_psd(m, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Principal square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``(-tol.psd, 0)`` are treated as rounding noise and
    clamped to zero; anything more negative raises :class:`NotPsd`.
    """
    vals, vecs = hermitian_eigen(m, tol)
    if vals[-1] < -tol.psd:
        raise NotPsd(f"matrix has eigenvalue {vals[-1]:.3e} < -{tol.psd:g}")
    roots = np.sqrt(np.clip(vals, 0.0, None))
    s = (vecs * roots) @ dagger(vecs)
    return 0.5 * (s + dagger(s))


def kron(a, b) -> np.ndarray:
    """A (x) B for two 2x2 operators, basis order |00>, |01>, |10>, |11>."""
    return np.kron(as_matrix(a, 2), as_matrix(b, 2))


def partial_transpose(m) -> np.ndarray:
    """Transpose on the second qubit of a 4x4 operator."""
    a = as_matrix(m, 4)
    return a.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def gram(vs: Sequence[np.ndarray]) -> np.ndarray:
    """G_ij = <v_i|v_j>."""
    mat = np.array(vs, dtype=complex)
    return np.conj(mat) @ mat.T


def gram_determinant(vs: Sequence[np.ndarray]) -> float:
    """Gram determinant; zero exactly when the vectors are dependent."""
    return float(np.real(np.linalg.det(gram(vs))))


def _inverse_pd(g: np.ndarray, tol: Tolerances) -> np.ndarray:
    # Gram matrices are Hermitian PD once independence is established
    vals, vecs = hermitian_eigen(g, tol) if g.shape[0] in DIMS else np.linalg.eigh(g)
    return (vecs / vals) @ dagger(vecs)


def dual_basis(vs: Iterable, tol: Tolerances = DEFAULT) -> list[np.ndarray]:
    """Dual vectors with <dual_i|v_j> = delta_ij, lying in span(vs).

    Raises :class:`DependentSet` when the Gram determinant is below
    ``tol.rank``.
    """
    vecs = [as_vector(v) for v in vs]
    if not vecs:
        return []
    if len(vecs) > vecs[0].shape[0]:
        raise DependentSet(f"{len(vecs)} vectors in dimension {vecs[0].shape[0]}")
    g = gram(vecs)
    det = float(np.real(np.linalg.det(g)))
    if abs(det) < tol.rank:
        raise DependentSet(f"Gram determinant {det:.3e} below {tol.rank:g}")
    # V = QR gives duals Q R^-dagger; going through G^-1 instead would
    # square the condition number of V
    q, r = np.linalg.qr(np.array(vecs).T)
    duals = q @ dagger(np.linalg.inv(r))
    return list(duals.T)


def span_inverse(coeffs, vs: Sequence, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Inverse on span(vs) of M = sum_ij a_ij |v_i><v_j|.

    Expanded on the dual basis: M^{-1} = sum_ij (a^{-1})_ij |dual_i><dual_j|.
    """
    a = np.array(coeffs, dtype=complex)
    duals = np.array(dual_basis(vs, tol))
    b = np.linalg.inv(a)
    return duals.T @ b @ np.conj(duals)


def restricted_inverse(terms: Iterable[tuple[float, np.ndarray]], tol: Tolerances = DEFAULT) -> np.ndarray:
    """Inverse on the span of M = sum_i w_i |v_i><v_i|, all w_i > 0."""
    terms = list(terms)
    weights = [float(w) for w, _ in terms]
    if any(not w > 0 for w in weights):
        raise ValueError(f"weights must be positive, got {weights}")
    duals = dual_basis([v for _, v in terms], tol)
    out = np.zeros((duals[0].shape[0],) * 2, dtype=complex)
    for w, d in zip(weights, duals):
        out += outer(d) / w
    return out


def range_pinv(m, tol: Tolerances = DEFAULT, cutoff: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian PSD matrix via its eigenvectors.

    Eigenvalues at or below ``cutoff`` (default ``1e3 * tol.psd``) are
    treated as the kernel.
    """
    cutoff = 1e3 * tol.psd if cutoff is None else cutoff
    vals, vecs = hermitian_eigen(m, tol)
    keep = vals > cutoff
    sub = vecs[:, keep]
    return (sub / vals[keep]) @ dagger(sub)


def unitary_defect(u) -> float:
    u = as_matrix(u)
    return max_abs(dagger(u) @ u - np.eye(u.shape[0]))
