import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caqr.core import DimensionError, gen_cond_matrix, CondSpec, rng_for
from caqr.counters import FlopCounter
from caqr.householder import (
    EPS,
    apply_q,
    apply_qt,
    apply_qt_structured,
    explicit_q,
    factor_t,
    form_t,
    house_gen,
    qr_blocked,
    qr_recursive,
    qr_stacked_triangles,
    qr_triangle_on_rect,
    qr_unblocked,
)

from oracles import dense_qr_r, ortho_defect, sign_normalize


class TestHouseGen:
    def test_already_reduced_positive(self):
        v, tau, beta = house_gen(np.array([2.5, 0.0, 0.0]))
        assert tau == 0.0
        assert beta == 2.5

    def test_hand_example(self):
        # x = (3, 4): beta = -5, v = (1, 0.5), tau = 1.6
        x = np.array([3.0, 4.0])
        v, tau, beta = house_gen(x)
        assert beta == -5.0
        assert np.allclose(v, [1.0, 0.5])
        assert abs(tau - 1.6) < 1e-15
        y = x - tau * v * (v @ x)
        assert np.allclose(y, [-5.0, 0.0], atol=1e-14)

    def test_zero_vector(self):
        v, tau, beta = house_gen(np.zeros(2))
        assert tau == 0.0 and beta == 0.0

    def test_negative_aligned(self):
        # (a, 0) with a < 0 still flips to a nonnegative beta
        v, tau, beta = house_gen(np.array([-3.0, 0.0]))
        assert beta == 3.0 and tau == 2.0

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_reflector_properties(self, xs):
        x = np.array(xs)
        v, tau, beta = house_gen(x)
        assert v[0] == 1.0
        # orthogonality relation tau (2 - tau ||v||^2) = 0
        rel = tau * (2.0 - tau * (v @ v))
        assert abs(rel) <= 1e-13 * max(1.0, abs(tau))
        y = x - tau * v * (v @ x)
        scale = np.linalg.norm(x)
        assert abs(y[0] - beta) <= 1e-13 * max(1.0, scale)
        assert np.all(np.abs(y[1:]) <= 1e-13 * max(1.0, scale))


class TestUnblocked:
    def test_identity(self):
        f, R = qr_unblocked(np.eye(4))
        assert np.array_equal(R, np.eye(4))
        assert np.all(f.tau == 0.0)

    def test_triangular_input_unchanged(self):
        rng = rng_for(3)
        A = np.triu(rng.standard_normal((5, 5)))
        np.fill_diagonal(A, np.abs(np.diag(A)) + 1.0)
        f, R = qr_unblocked(A)
        assert np.array_equal(R, A)
        assert np.all(f.tau == 0.0)

    def test_reconstruction(self):
        A = rng_for(7).standard_normal((6, 3))
        f, R = qr_unblocked(A)
        Q = explicit_q(f)
        assert np.linalg.norm(A - Q @ R) <= 1e-14 * np.linalg.norm(A)

    def test_rejects_wide(self):
        with pytest.raises(DimensionError):
            qr_unblocked(np.ones((2, 3)))


class TestBlockedRecursive:
    def test_single_panel_equals_unblocked(self):
        A = rng_for(11).standard_normal((12, 5))
        _, R1 = qr_unblocked(A)
        _, R2 = qr_blocked(A, nb=5)
        assert np.max(np.abs(R1 - R2)) <= 10 * EPS * np.max(np.abs(R1))

    def test_nb1_bitwise_equal(self):
        A = rng_for(12).standard_normal((16, 6))
        _, R1 = qr_unblocked(A)
        _, R2 = qr_blocked(A, nb=1)
        assert np.array_equal(R1, R2)

    def test_backward_error_64x16(self):
        A = rng_for(13).standard_normal((64, 16))
        f, R = qr_blocked(A, nb=4)
        Q = explicit_q(f)
        assert np.linalg.norm(A - Q @ R) <= 1e-14 * np.linalg.norm(A)

    def test_recursive_width1_base(self):
        A = rng_for(14).standard_normal((7, 1))
        _, R1 = qr_unblocked(A)
        _, R2 = qr_recursive(A, min_width=1)
        assert np.array_equal(R1, R2)

    def test_recursive_matches_unblocked(self):
        A = rng_for(15).standard_normal((32, 8))
        _, R1 = qr_unblocked(A)
        _, R2 = qr_recursive(A, min_width=2)
        tol = 10 * EPS * np.linalg.norm(A)
        assert np.max(np.abs(sign_normalize(R1) - sign_normalize(R2))) <= tol

    def test_recursive_no_split_equals_blocked(self):
        A = rng_for(16).standard_normal((20, 6))
        _, R1 = qr_blocked(A, nb=6)
        _, R2 = qr_recursive(A, min_width=6)
        assert np.array_equal(R1, R2)


class TestFormT:
    def test_single_column(self):
        A = rng_for(20).standard_normal((5, 1))
        f, _ = qr_unblocked(A)
        T = form_t(f.Y, f.tau)
        assert T.shape == (1, 1) and T[0, 0] == f.tau[0]

    def test_all_tau_zero(self):
        T = form_t(np.eye(4), np.zeros(4))
        assert np.array_equal(T, np.zeros((4, 4)))

    def test_probe_agreement(self):
        A = rng_for(21).standard_normal((8, 3))
        f, _ = qr_unblocked(A)
        T = form_t(f.Y, f.tau)
        x = rng_for(22).standard_normal((8, 1))
        via_t = x - f.Y @ (T @ (f.Y.T @ x))
        via_reflectors = apply_q(f, x)
        assert np.max(np.abs(via_t - via_reflectors)) <= 1e-13 * np.linalg.norm(x)

    def test_yt_orthogonal(self):
        A = rng_for(23).standard_normal((10, 4))
        f, _ = qr_unblocked(A)
        T = factor_t(f)
        Q = np.eye(10) - f.Y @ T @ f.Y.T
        assert np.linalg.norm(Q.T @ Q - np.eye(10)) <= 100 * 4 * EPS


class TestStackedTriangles:
    def test_identity_over_zero(self):
        f, R = qr_stacked_triangles([np.eye(4), np.zeros((4, 4))])
        assert np.array_equal(R, np.eye(4))
        assert np.all(f.tau == 0.0)

    def test_matches_dense_oracle(self):
        rng = rng_for(30)
        R0 = np.triu(rng.standard_normal((5, 5)))
        f, R = qr_stacked_triangles([R0, R0])
        oracle = dense_qr_r(np.vstack([R0, R0]))
        assert np.max(np.abs(sign_normalize(R) - oracle)) <= 1e-13 * np.max(np.abs(oracle))

    def test_rejects_non_triangular(self):
        with pytest.raises(DimensionError):
            qr_stacked_triangles([np.ones((3, 3)), np.eye(3)])

    def test_y_sparsity_exact(self):
        rng = rng_for(31)
        R0 = np.triu(rng.standard_normal((6, 6)))
        R1 = np.triu(rng.standard_normal((6, 6)))
        f, _ = qr_stacked_triangles([R0, R1])
        n = 6
        # top block is exactly the identity, lower block keeps the
        # triangular profile with exact zeros outside it
        assert np.array_equal(f.Y[:n][~np.eye(n, dtype=bool)], np.zeros(n * n - n))
        assert np.array_equal(np.diag(f.Y[:n]), np.ones(n))
        assert np.all(np.tril(f.Y[n:], -1) == 0.0)

    def test_flop_ratio_approaches_one_fifth(self):
        ratios = []
        for n in (20, 40, 80):
            rng = rng_for(100 + n)
            R0 = np.triu(rng.standard_normal((n, n)))
            R1 = np.triu(rng.standard_normal((n, n)))
            cs = FlopCounter()
            qr_stacked_triangles([R0, R1], cs)
            cd = FlopCounter()
            qr_unblocked(np.vstack([R0, R1]), cd)
            ratios.append(cs.flops / cd.flops)
        assert ratios[0] > ratios[1] > ratios[2]
        assert 0.17 <= ratios[2] <= 0.23

    def test_flop_savings_monotone_in_q(self):
        n = 24
        rng = rng_for(32)
        tris = [np.triu(rng.standard_normal((n, n))) for _ in range(4)]
        per_row = []
        for q in (2, 3, 4):
            c = FlopCounter()
            qr_stacked_triangles(tris[:q], c)
            cd = FlopCounter()
            qr_unblocked(np.vstack(tris[:q]), cd)
            per_row.append(c.flops / cd.flops)
        # savings ratio stays well below 1 and does not degrade with q
        assert all(r < 0.5 for r in per_row)

    def test_three_stacked_correct(self):
        rng = rng_for(33)
        tris = [np.triu(rng.standard_normal((4, 4))) for _ in range(3)]
        f, R = qr_stacked_triangles(tris)
        oracle = dense_qr_r(np.vstack(tris))
        assert np.max(np.abs(sign_normalize(R) - oracle)) <= 1e-13


class TestTriangleOnRect:
    def test_zero_rectangle(self):
        rng = rng_for(40)
        R = np.triu(rng.standard_normal((4, 4)))
        np.fill_diagonal(R, np.abs(np.diag(R)) + 0.5)
        f, R2 = qr_triangle_on_rect(R, np.zeros((3, 4)))
        assert np.array_equal(R2, R)
        assert np.all(f.tau == 0.0)

    def test_zero_triangle(self):
        B = rng_for(41).standard_normal((6, 3))
        _, R2 = qr_triangle_on_rect(np.zeros((3, 3)), B)
        oracle = dense_qr_r(B)
        assert np.max(np.abs(sign_normalize(R2) - oracle)) <= 1e-13 * np.max(np.abs(oracle))

    def test_matches_dense_oracle(self):
        rng = rng_for(42)
        R = np.triu(rng.standard_normal((5, 5)))
        B = rng.standard_normal((7, 5))
        _, R2 = qr_triangle_on_rect(R, B)
        oracle = dense_qr_r(np.vstack([R, B]))
        assert np.max(np.abs(sign_normalize(R2) - oracle)) <= 1e-13 * np.max(np.abs(oracle))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            qr_triangle_on_rect(np.eye(3), np.ones((2, 4)))


class TestStructuredApply:
    def test_identity_factor_passthrough(self):
        n = 3
        f, _ = qr_stacked_triangles([np.eye(n), np.zeros((n, n))])
        T = factor_t(f)
        C0 = rng_for(50).standard_normal((n, 2))
        C1 = rng_for(51).standard_normal((n, 2))
        H0, H1 = apply_qt_structured(f, T, C0, C1)
        assert np.array_equal(H0, C0) and np.array_equal(H1, C1)

    def test_qt_times_q_is_identity(self):
        rng = rng_for(52)
        n = 4
        R0 = np.triu(rng.standard_normal((n, n)))
        R1 = np.triu(rng.standard_normal((n, n)))
        f, _ = qr_stacked_triangles([R0, R1])
        T = factor_t(f)
        Q = explicit_q(f, thin=False)
        H0, H1 = apply_qt_structured(f, T, Q[:n], Q[n:])
        QtQ = np.vstack([H0, H1])
        assert np.linalg.norm(QtQ - np.eye(2 * n)[:, : 2 * n]) <= 100 * n * EPS * 10

    def test_matches_dense_apply(self):
        rng = rng_for(53)
        n = 4
        R0 = np.triu(rng.standard_normal((n, n)))
        R1 = np.triu(rng.standard_normal((n, n)))
        f, _ = qr_stacked_triangles([R0, R1])
        T = factor_t(f)
        C = rng.standard_normal((2 * n, 3))
        H0, H1 = apply_qt_structured(f, T, C[:n], C[n:])
        ref = apply_qt(f, C)
        assert np.max(np.abs(np.vstack([H0, H1]) - ref)) <= 1e-13 * np.linalg.norm(C)

    def test_triangle_on_rect_apply(self):
        rng = rng_for(54)
        R = np.triu(rng.standard_normal((3, 3)))
        B = rng.standard_normal((5, 3))
        f, _ = qr_triangle_on_rect(R, B)
        T = factor_t(f)
        C = rng.standard_normal((8, 2))
        H0, H1 = apply_qt_structured(f, T, C[:3], C[3:])
        ref = apply_qt(f, C)
        assert np.max(np.abs(np.vstack([H0, H1]) - ref)) <= 1e-13 * np.linalg.norm(C)


class TestApplyExplicit:
    def test_explicit_q_identity(self):
        f, _ = qr_unblocked(np.eye(5))
        Q = explicit_q(f)
        assert np.array_equal(Q, np.eye(5))

    def test_round_trip(self):
        A = rng_for(60).standard_normal((12, 4))
        f, _ = qr_unblocked(A)
        x = rng_for(61).standard_normal((12, 2))
        back = apply_qt(f, apply_q(f, x))
        assert np.max(np.abs(back - x)) <= 100 * 4 * EPS * np.linalg.norm(x)

    def test_orthonormal_columns(self):
        A = rng_for(62).standard_normal((50, 5))
        f, _ = qr_unblocked(A)
        Q = explicit_q(f)
        assert ortho_defect(Q) <= 100 * 5 * EPS


@pytest.mark.parametrize("variant", ["unblocked", "blocked", "recursive"])
@pytest.mark.parametrize("m,n", [(16, 4), (64, 16), (512, 64)])
def test_backward_error_sweep(variant, m, n):
    A = gen_cond_matrix(CondSpec(m, n, kappa=1e3, seed=m + n))
    if variant == "unblocked":
        f, R = qr_unblocked(A)
    elif variant == "blocked":
        f, R = qr_blocked(A, nb=max(1, n // 4))
    else:
        f, R = qr_recursive(A, min_width=4)
    Q = explicit_q(f)
    assert np.linalg.norm(A - Q @ R) <= 50 * EPS * np.sqrt(m * n) * np.linalg.norm(A)
    assert ortho_defect(Q) <= 100 * n * EPS


@pytest.mark.parametrize("kappa", [1e3, 1e6, 1e9, 1e12])
def test_orthogonality_independent_of_cond(kappa):
    A = gen_cond_matrix(CondSpec(80, 10, kappa=kappa, seed=9))
    f, _ = qr_unblocked(A)
    assert ortho_defect(explicit_q(f)) <= 100 * 10 * EPS


def test_r_uniqueness_across_variants():
    A = gen_cond_matrix(CondSpec(48, 12, kappa=100.0, seed=77))
    spectral = np.linalg.svd(A, compute_uv=False)[0]
    rs = [
        qr_unblocked(A)[1],
        qr_blocked(A, nb=3)[1],
        qr_recursive(A, min_width=2)[1],
    ]
    base = sign_normalize(rs[0])
    for R in rs[1:]:
        assert np.max(np.abs(sign_normalize(R) - base)) <= 1000 * EPS * spectral


def test_flop_counter_matches_formula():
    # dense QR flops ~ 2 m n^2 - (2/3) n^3 at m = 200 n
    n = 16
    m = 200 * n
    A = rng_for(90).standard_normal((m, n))
    c = FlopCounter()
    qr_unblocked(A, c)
    model = 2 * m * n**2 - (2 / 3) * n**3
    assert abs(c.flops - model) <= 0.05 * model
    assert c.divs > 0
