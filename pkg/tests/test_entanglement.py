import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import bd_states, density_matrices

from bsakit.entanglement import (
    binary_entropy,
    concurrence,
    concurrence_bd,
    entanglement_of_formation,
    formation_from_concurrence,
    is_separable,
    pure_concurrence,
    r_matrix_eigenvalues,
)
from bsakit.linalg import kron, outer, partial_transpose
from bsakit.states import BELL, bd_matrix, bd_to_density


def _wootters_numpy(m):
    """Concurrence through the non-Hermitian product rho rho~, numpy only."""
    yy = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
    ev = np.linalg.eigvals(m @ yy @ m.conj() @ yy)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


class TestConcurrence:
    @pytest.mark.parametrize("i", range(4))
    def test_bell_states(self, i):
        rep = concurrence(outer(BELL[i]))
        assert rep.concurrence == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(rep.lambdas, [1, 0, 0, 0], atol=1e-6)

    def test_maximally_mixed(self):
        assert concurrence(np.eye(4) / 4).concurrence == 0.0

    def test_werner_threshold(self):
        # p |singlet><singlet| + (1-p) I/4 has C = max(0, (3p-1)/2)
        for p in (0.2, 1 / 3, 0.5, 0.9):
            m = p * outer(BELL[3]) + (1 - p) * np.eye(4) / 4
            assert concurrence(m).concurrence == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-9)

    @given(bd_states())
    def test_bd_closed_form(self, bd):
        assert concurrence(bd_to_density(bd)).concurrence == pytest.approx(concurrence_bd(bd), abs=1e-8)

    @given(density_matrices())
    def test_against_nonhermitian_route(self, m):
        assert concurrence(m).concurrence == pytest.approx(_wootters_numpy(m), abs=1e-6)

    @given(density_matrices())
    def test_range_and_order(self, m):
        rep = concurrence(m)
        assert 0.0 <= rep.concurrence <= 1.0
        assert all(a >= b - 1e-12 for a, b in zip(rep.lambdas, rep.lambdas[1:]))

    @given(density_matrices(), st.integers(0, 3))
    def test_local_unitary_invariance(self, m, seed):
        rng = np.random.default_rng(seed)
        qs = [np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))[0] for _ in range(2)]
        u = kron(*qs)
        assert concurrence(u @ m @ u.conj().T).concurrence == pytest.approx(concurrence(m).concurrence, abs=1e-6)

    def test_r_eigenvalues_descending(self):
        lam = r_matrix_eigenvalues(bd_matrix([0.7, 0.2, 0.1, 0.0]))
        np.testing.assert_allclose(lam, [0.7, 0.2, 0.1, 0.0], atol=1e-7)


class TestPureConcurrence:
    @given(st.complex_numbers(max_magnitude=1), st.complex_numbers(max_magnitude=1))
    def test_two_term(self, a, d):
        if abs(a) + abs(d) < 1e-3:
            return
        v = np.array([a, 0, 0, d]) / math.hypot(abs(a), abs(d))
        n = abs(a) ** 2 + abs(d) ** 2
        assert pure_concurrence(v) == pytest.approx(2 * abs(a * d) / n, abs=1e-12)

    def test_product(self):
        assert pure_concurrence(np.kron([1, 0], [0.6, 0.8])) == pytest.approx(0.0, abs=1e-15)

    def test_matches_mixed_route(self, rng):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        v /= np.linalg.norm(v)
        assert pure_concurrence(v) == pytest.approx(concurrence(outer(v)).concurrence, abs=1e-6)


class TestFormation:
    def test_endpoints(self):
        assert formation_from_concurrence(0.0) == 0.0
        assert formation_from_concurrence(1.0) == pytest.approx(math.log(2), abs=1e-15)
        assert formation_from_concurrence(1.0, base=2) == pytest.approx(1.0, abs=1e-15)

    def test_entropy(self):
        assert binary_entropy(0.5, 2) == pytest.approx(1.0)
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(0.25) == pytest.approx(-(0.25 * math.log(0.25) + 0.75 * math.log(0.75)))

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone(self, a, b):
        a, b = sorted((a, b))
        assert formation_from_concurrence(a) <= formation_from_concurrence(b) + 1e-15

    def test_singlet(self):
        assert entanglement_of_formation(outer(BELL[3]), base=2) == pytest.approx(1.0, abs=1e-9)


class TestSeparability:
    def test_singlet(self):
        v = is_separable(outer(BELL[3]))
        assert not v.separable
        assert v.min_pt_eigenvalue == pytest.approx(-0.5, abs=1e-12)

    def test_product(self):
        assert is_separable(np.diag([1.0, 0, 0, 0])).separable

    def test_boundary_is_separable(self):
        assert is_separable(bd_matrix([0.5, 0.5, 0, 0])).separable

    @given(bd_states())
    def test_bd_rule(self, bd):
        v = is_separable(bd_to_density(bd))
        if max(bd.p) > 0.5 + 1e-9:
            assert not v.separable
        elif max(bd.p) < 0.5 - 1e-9:
            assert v.separable
        # min PT eigenvalue of a BD state is 1/2 - max p
        assert v.min_pt_eigenvalue == pytest.approx(0.5 - max(bd.p), abs=1e-12)

    @given(density_matrices())
    def test_agrees_with_concurrence(self, m):
        # for two qubits, NPT <=> C > 0
        v = is_separable(m)
        c = concurrence(m).concurrence
        if v.min_pt_eigenvalue < -1e-7:
            assert c > 0
        if c > 1e-6:
            assert not v.separable

    def test_against_numpy_pt(self):
        m = bd_matrix([0.6, 0.3, 0.1, 0.0])
        r = m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
        np.testing.assert_allclose(partial_transpose(m), r, atol=1e-15)
