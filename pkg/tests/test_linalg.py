"""Dense kernels checked against closed forms and independent recomputations."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from lrsprune.linalg import (
    as_matrix,
    frobenius_norm,
    l1_norm,
    matmul,
    nuclear_norm,
    spectral_norm,
    svd,
)

small_dims = st.integers(min_value=1, max_value=12)
finite_entries = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, width=64)


def small_matrices():
    return small_dims.flatmap(
        lambda m: small_dims.flatmap(
            lambda n: hnp.arrays(np.float64, (m, n), elements=finite_entries)
        )
    )


class TestAsMatrix:
    def test_coerces_nested_lists(self):
        m = as_matrix([[1, 2], [3, 4]])
        assert m.dtype == np.float64
        assert m.flags["C_CONTIGUOUS"]
        assert m.shape == (2, 2)

    def test_rejects_wrong_ndim(self):
        with pytest.raises(ValueError):
            as_matrix([1.0, 2.0])
        with pytest.raises(ValueError):
            as_matrix(np.zeros((2, 2, 2)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            as_matrix([[1.0, np.nan]])
        with pytest.raises(ValueError):
            as_matrix([[np.inf, 0.0]])


class TestSvd:
    def test_identity_singular_values(self):
        f = svd(np.eye(3))
        np.testing.assert_allclose(f.sigma, [1.0, 1.0, 1.0], rtol=0, atol=1e-14)
        np.testing.assert_allclose((f.u * f.sigma) @ f.v.T, np.eye(3), atol=1e-14)

    def test_diagonal_singular_values_descend(self):
        f = svd(np.diag([3.0, 2.0, 1.0]))
        np.testing.assert_allclose(f.sigma, [3.0, 2.0, 1.0], rtol=0, atol=1e-14)
        assert f.rank == 3

    def test_reconstruction_random(self, rng):
        a = rng.standard_normal((8, 5))
        f = svd(a)
        assert frobenius_norm((f.u * f.sigma) @ f.v.T - a) < 1e-9

    def test_sign_convention_positive_anchor(self, rng):
        a = rng.standard_normal((7, 4))
        f = svd(a)
        anchors = np.max(np.abs(f.u), axis=0)
        picked = f.u[np.argmax(np.abs(f.u), axis=0), np.arange(f.u.shape[1])]
        np.testing.assert_allclose(picked, anchors)

    def test_bit_determinism(self, rng):
        a = rng.standard_normal((9, 6))
        f1, f2 = svd(a), svd(a)
        assert f1.u.tobytes() == f2.u.tobytes()
        assert f1.sigma.tobytes() == f2.sigma.tobytes()
        assert f1.v.tobytes() == f2.v.tobytes()

    def test_large_reconstruction(self):
        a = np.random.default_rng(7).standard_normal((256, 256))
        f = svd(a)
        err = frobenius_norm((f.u * f.sigma) @ f.v.T - a)
        assert err <= 1e-8 * frobenius_norm(a)

    @given(a=small_matrices())
    def test_reconstruction_property(self, a):
        f = svd(a)
        scale = max(1.0, frobenius_norm(a))
        assert frobenius_norm((f.u * f.sigma) @ f.v.T - a) <= 1e-8 * scale
        assert np.all(f.sigma >= 0.0)
        assert np.all(np.diff(f.sigma) <= 1e-12 * scale)

    @given(a=small_matrices())
    def test_left_factor_orthonormal(self, a):
        f = svd(a)
        gram = f.u.T @ f.u
        np.testing.assert_allclose(gram, np.eye(gram.shape[0]), atol=1e-8)


class TestFrobeniusNorm:
    def test_zero(self):
        assert frobenius_norm(np.zeros((3, 5))) == 0.0

    def test_three_four_five(self):
        assert frobenius_norm([[3.0, 4.0]]) == 5.0

    def test_against_scalar_sum(self, rng):
        a = rng.standard_normal((6, 6))
        oracle = math.sqrt(sum(float(x) ** 2 for x in a.ravel()))
        assert frobenius_norm(a) == pytest.approx(oracle, rel=1e-12)


class TestL1Norm:
    def test_zero(self):
        assert l1_norm(np.zeros((2, 2))) == 0.0

    def test_hand_value(self):
        assert l1_norm([[1.0, -2.0], [3.0, -4.0]]) == 10.0

    def test_against_scalar_sum(self, rng):
        a = rng.standard_normal((5, 7))
        oracle = sum(abs(float(x)) for x in a.ravel())
        assert l1_norm(a) == pytest.approx(oracle, rel=1e-12)


class TestNuclearNorm:
    def test_diagonal(self):
        assert nuclear_norm(np.diag([3.0, 2.0, 1.0])) == pytest.approx(6.0, abs=1e-12)

    def test_rank_one_closed_form(self, rng):
        x = rng.standard_normal(6)
        y = rng.standard_normal(4)
        a = np.outer(x, y)
        oracle = np.linalg.norm(x) * np.linalg.norm(y)
        assert nuclear_norm(a) == pytest.approx(oracle, rel=1e-10)

    def test_against_gram_eigenvalues(self, rng):
        a = rng.standard_normal((5, 4))
        eig = np.linalg.eigvalsh(a.T @ a)
        oracle = float(np.sqrt(np.clip(eig, 0.0, None)).sum())
        assert nuclear_norm(a) == pytest.approx(oracle, rel=1e-8)


class TestMatmul:
    def test_identity(self, rng):
        a = rng.standard_normal((4, 6))
        np.testing.assert_array_equal(matmul(np.eye(4), a), a)

    def test_zero(self, rng):
        a = rng.standard_normal((4, 6))
        np.testing.assert_array_equal(matmul(a, np.zeros((6, 3))), np.zeros((4, 3)))

    def test_inner_dimension_check(self):
        with pytest.raises(ValueError):
            matmul(np.zeros((2, 3)), np.zeros((4, 2)))

    def test_against_triple_loop(self, rng):
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((4, 2))
        oracle = np.zeros((3, 2))
        for i in range(3):
            for j in range(2):
                for k in range(4):
                    oracle[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(matmul(a, b), oracle, atol=1e-12)


class TestSpectralNorm:
    def test_zero(self):
        assert spectral_norm(np.zeros((4, 3))) == 0.0

    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 2.0, 1.0])) == pytest.approx(3.0, rel=1e-9)

    def test_rank_one_closed_form(self, rng):
        x = rng.standard_normal(10)
        y = rng.standard_normal(8)
        oracle = np.linalg.norm(x) * np.linalg.norm(y)
        assert spectral_norm(np.outer(x, y)) == pytest.approx(oracle, rel=1e-8)

    def test_against_svd_tall_and_wide(self, rng):
        a = rng.standard_normal((6, 4))
        top = float(np.linalg.svd(a, compute_uv=False)[0])
        assert spectral_norm(a) == pytest.approx(top, rel=1e-8)
        assert spectral_norm(a.T) == pytest.approx(top, rel=1e-8)


@given(a=small_matrices())
def test_norm_ordering(a):
    scale = max(1.0, frobenius_norm(a))
    nuc, fro, top = nuclear_norm(a), frobenius_norm(a), spectral_norm(a)
    assert nuc + 1e-9 * scale >= fro
    assert fro + 1e-9 * scale >= top
    assert top >= 0.0
