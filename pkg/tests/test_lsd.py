import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import bd_states, entangled_bd_states

from bsakit.entanglement import concurrence_bd, pure_concurrence
from bsakit.errors import CertificateFailed, DegeneratePair, NotEntangled, NotOnBoundary, PureInput
from bsakit.linalg import outer
from bsakit.lsd import (
    FRAMES,
    build_product_ensemble,
    build_x_vectors,
    canonical_probabilities,
    closing_phases,
    maximal_pair_weights,
    gamma_elements,
    ls_decompose_bd,
    reconstruction_error,
    verify_optimality,
    wronskian_checks,
    wronskian_closed_form,
)
from bsakit.states import BELL, BellDiagonal, PureState, bd_matrix, spin_flip_vector


def _reduced_purity(v):
    """Tr(rho_A^2) of a pure two-qubit vector; 1 exactly for product states."""
    m = np.asarray(v).reshape(2, 2)
    ra = m @ m.conj().T
    return float(np.real(np.trace(ra @ ra)))


def _max_weight_bisection(rho, z, iters=200):
    """Largest w with rho - w |z><z| >= 0, by bisection on numpy eigenvalues."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.linalg.eigvalsh(rho - mid * outer(z))[0] >= -1e-15:
            lo = mid
        else:
            hi = mid
    return lo


class TestDecomposition:
    def test_hand_worked(self):
        d = ls_decompose_bd(BellDiagonal((0.7, 0.2, 0.1, 0.0)))
        assert d.lam == pytest.approx(0.6, abs=1e-15)
        np.testing.assert_allclose(d.p_prime.p, [0.5, 1 / 3, 1 / 6, 0.0], atol=1e-15)
        np.testing.assert_allclose(np.abs(np.vdot(d.psi.v, BELL[0])), 1.0, atol=1e-15)

    def test_singlet_dominant(self):
        d = ls_decompose_bd(BellDiagonal((0.1, 0.1, 0.1, 0.7)))
        assert d.dominant == 3
        assert abs(np.vdot(d.psi.v, BELL[3])) == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(d.p_prime.p, [1 / 6, 1 / 6, 1 / 6, 0.5], atol=1e-15)

    def test_rejections(self):
        with pytest.raises(NotEntangled):
            ls_decompose_bd(BellDiagonal((0.5, 0.5, 0, 0)))
        with pytest.raises(NotEntangled):
            ls_decompose_bd(BellDiagonal((0.25,) * 4))
        with pytest.raises(PureInput):
            ls_decompose_bd(BellDiagonal((0, 0, 1, 0)))

    @given(entangled_bd_states())
    def test_reconstruction_and_products(self, bd):
        d = ls_decompose_bd(bd)
        assert d.lam == pytest.approx(2 * (1 - max(bd.p)), abs=1e-12)
        assert reconstruction_error(d, bd_matrix(bd.p)) < 1e-10
        for w, z in d.ensemble:
            assert w == pytest.approx(0.25, abs=1e-12)
            assert _reduced_purity(z.v) == pytest.approx(1.0, abs=1e-10)
            assert pure_concurrence(z) < 1e-8
        np.testing.assert_allclose(d.rho_sep(), bd_matrix(d.p_prime.p), atol=1e-10)

    @given(entangled_bd_states())
    def test_average_concurrence_equals_concurrence(self, bd):
        d = ls_decompose_bd(bd)
        assert d.average_concurrence() == pytest.approx(concurrence_bd(bd), abs=1e-10)

    @given(bd_states())
    def test_separable_inputs_with_flag(self, bd):
        if max(bd.p) > 0.5:
            return
        d = ls_decompose_bd(bd, allow_separable=True)
        assert d.lam == 1.0 and d.psi is None
        assert reconstruction_error(d, bd_matrix(bd.p)) < 1e-9
        for _, z in d.ensemble:
            assert _reduced_purity(z.v) == pytest.approx(1.0, abs=1e-9)


class TestProductEnsemble:
    def test_requires_boundary(self):
        with pytest.raises(NotOnBoundary):
            build_product_ensemble(BellDiagonal((0.6, 0.2, 0.1, 0.1)))
        with pytest.raises(NotOnBoundary):
            build_product_ensemble(BellDiagonal((0.5, 0.3, 0.2, 0.0)), dominant=1)

    @pytest.mark.parametrize("k", [0, 1])
    def test_two_halves_either_frame(self, k):
        ens = build_product_ensemble(BellDiagonal((0.5, 0.5, 0, 0)), dominant=k)
        rho = sum(w * z.projector() for w, z in ens)
        np.testing.assert_allclose(rho, bd_matrix([0.5, 0.5, 0, 0]), atol=1e-12)

    def test_frames_map_psi1_to_each_bell_state(self):
        for k, f in enumerate(FRAMES):
            assert abs(np.vdot(BELL[k], f @ BELL[0])) == pytest.approx(1.0, abs=1e-15)

    def test_canonical_probabilities(self):
        np.testing.assert_allclose(canonical_probabilities([0.1, 0.2, 0.3, 0.4], 0), [0.1, 0.2, 0.3, 0.4])
        pc = canonical_probabilities([0.1, 0.2, 0.3, 0.4], 3)
        assert pc[0] == 0.4
        assert sorted(pc) == [0.1, 0.2, 0.3, 0.4]


class TestXVectors:
    @given(bd_states())
    def test_tilde_orthogonality(self, bd):
        xv = build_x_vectors(bd)
        g = np.array([[np.vdot(xi, spin_flip_vector(xj)) for xj in xv.xs] for xi in xv.xs])
        np.testing.assert_allclose(g, np.diag(xv.lambdas), atol=1e-12)
        np.testing.assert_allclose(xv.lambdas, bd.p, atol=1e-14)
        # they still resolve rho
        np.testing.assert_allclose(sum(outer(x) for x in xv.xs), bd_matrix(bd.p), atol=1e-12)


class TestClosingPhases:
    @given(bd_states())
    def test_closes(self, bd):
        lam = np.array(bd.p)
        if 2 * lam.max() > lam.sum():
            with pytest.raises(NotOnBoundary):
                closing_phases(lam)
            return
        th = np.array(closing_phases(lam))
        assert abs(np.sum(np.exp(2j * th) * lam)) < 1e-9


class TestWronskians:
    def test_hand_value(self):
        w = wronskian_closed_form(BellDiagonal((0.5, 1 / 6, 1 / 6, 1 / 6)))
        assert w[(1, 2)] == pytest.approx(1 / 72, abs=1e-16)
        assert w[(1,)] == 1 / 8

    @given(entangled_bd_states())
    def test_closed_form_matches_gram(self, bd):
        d = ls_decompose_bd(bd)
        got = wronskian_checks(d)
        want = wronskian_closed_form(d.p_prime, d.dominant)
        for key in want:
            assert got[key] == pytest.approx(want[key], abs=1e-10), key

    def test_gram_against_numpy_det(self):
        d = ls_decompose_bd(BellDiagonal((0.6, 0.25, 0.1, 0.05)))
        zs = [math.sqrt(w) * z.v for w, z in d.ensemble]
        for a, b in itertools.combinations(range(4), 2):
            vs = np.array([d.psi.v, zs[a], zs[b]])
            det = np.linalg.det(vs.conj() @ vs.T).real
            assert wronskian_checks(d)[(a + 1, b + 1)] == pytest.approx(det, abs=1e-12)


class TestPairAlgebra:
    def test_maximal_pair_weights_hand_values(self):
        assert maximal_pair_weights(2, 2, 0) == pytest.approx((0.5, 0.5))
        assert maximal_pair_weights(3, 2, 1) == pytest.approx((0.2, 0.4))
        with pytest.raises(DegeneratePair):
            maximal_pair_weights(1, 1, 1)

    @given(st.floats(0.05, 2), st.floats(0.05, 2), st.floats(0.01, 0.99))
    def test_gamma_against_numeric_inverse(self, la, lb, lam):
        # z_a, z_b orthogonal with squared norm 1/4, psi = i sqrt2 (z_a + z_b)
        za = np.array([0.5, 0, 0, 0], dtype=complex)
        zb = np.array([0, 0.5, 0, 0], dtype=complex)
        psi = 1j * math.sqrt(2) * (za + zb)
        m = la * outer(za) + lb * outer(zb) + (1 - lam) * outer(psi)
        inv = np.linalg.pinv(m, rcond=1e-12)
        g11, g22, g12 = gamma_elements(la, lb, lam)
        assert np.vdot(za, inv @ za).real == pytest.approx(g11, rel=1e-9)
        assert np.vdot(zb, inv @ zb).real == pytest.approx(g22, rel=1e-9)
        assert np.vdot(za, inv @ zb).real == pytest.approx(g12, rel=1e-9)


class TestCertificate:
    @given(entangled_bd_states())
    def test_passes_all_ranks(self, bd):
        cert = verify_optimality(ls_decompose_bd(bd))
        assert cert.passed, cert.worst()

    @pytest.mark.parametrize("eps", [1e-6, 1e-7, 1e-8, 4e-9])
    def test_near_degenerate_weights(self, eps):
        # a tiny but nonzero weight leaves two product vectors at angle ~sqrt(eps);
        # rounding in the dual route then grows like machine epsilon / eps
        bd = BellDiagonal((0.6, 0.0, 0.4 - eps, eps))
        d = ls_decompose_bd(bd)
        assert reconstruction_error(d, bd_matrix(bd.p)) < 1e-12
        cert = verify_optimality(d, strict=False)
        assert cert.max_residual < 1e-15 / eps
        if eps >= 1e-7:
            assert cert.passed

    def test_weights_below_rank_tolerance_are_dropped(self):
        bd = BellDiagonal((0.75, 5.5e-17, 0.0, 0.25 - 5.5e-17))
        d = ls_decompose_bd(bd)
        assert d.source_rank == 2
        assert verify_optimality(d).passed
        assert reconstruction_error(d, bd_matrix(bd.p)) < 1e-15

    @pytest.mark.parametrize("rank,branch", [(4, "full_rank"), (3, "one_zero"), (2, "two_zero")])
    def test_branch_names(self, rank, branch):
        p = {4: (0.6, 0.2, 0.1, 0.1), 3: (0.6, 0.3, 0.1, 0.0), 2: (0.6, 0.4, 0.0, 0.0)}[rank]
        assert verify_optimality(ls_decompose_bd(BellDiagonal(p))).branch == branch

    def test_single_weights_match_bisection(self):
        bd = BellDiagonal((0.55, 0.2, 0.15, 0.1))
        d = ls_decompose_bd(bd)
        for w, z in d.ensemble:
            rho_a = d.lam * w * z.projector() + (1 - d.lam) * d.psi.projector()
            # largest weight of z removable from rho_alpha restricted to span{z, psi}
            basis = np.linalg.qr(np.array([z.v, d.psi.v]).T)[0]
            small = basis.conj().T @ rho_a @ basis
            zs = basis.conj().T @ z.v
            assert _max_weight_bisection(small, zs) == pytest.approx(d.lam * w, abs=1e-10)

    def test_strict_failure_raises(self):
        # wrong entangled component on a rank-3 source; the dependent pair exposes it
        d = ls_decompose_bd(BellDiagonal((0.6, 0.3, 0.1, 0.0)))
        wrong = type(d)(d.lam, d.ensemble, PureState(BELL[1].copy()), d.p_prime, d.source, d.source_rank)
        with pytest.raises(CertificateFailed) as err:
            verify_optimality(wrong)
        assert err.value.certificate.passed is False
        assert verify_optimality(wrong, strict=False).max_residual > 1e-8

    def test_independent_checks_are_exact_by_construction(self):
        # with psi, z_a, z_b independent the restricted inverse is the dual basis,
        # so the full-rank checks hold for any weights; only dependent pairs bite
        d = ls_decompose_bd(BellDiagonal((0.6, 0.2, 0.1, 0.1)))
        bumped = type(d)(d.lam * 1.01, d.ensemble, d.psi, d.p_prime, d.source, d.source_rank)
        cert = verify_optimality(bumped, strict=False)
        assert cert.passed
        assert all(c.route == "dual" for c in cert.pair)
