import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfsim.linalg import dagger, expm, is_hermitian, is_unitary, kron, \
    unvectorize, vectorize


def rand_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def rand_unitary(rng, n):
    q, r = np.linalg.qr(rand_complex(rng, (n, n)))
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


class TestKron:
    def test_identity(self):
        assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_diagonal(self):
        out = kron(np.diag([1, 2]), np.diag([3, 4]))
        assert np.array_equal(out, np.diag([3, 4, 6, 8]).astype(complex))

    def test_index_formula_oracle(self):
        # (A kron B)[i*p+k, j*q+l] = A[i,j] * B[k,l]
        rng = np.random.default_rng(1)
        a = rand_complex(rng, (3, 3))
        b = rand_complex(rng, (3, 3))
        out = kron(a, b)
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    for l in range(3):
                        assert abs(out[i * 3 + k, j * 3 + l]
                                   - a[i, j] * b[k, l]) < 1e-15

    def test_associativity(self):
        rng = np.random.default_rng(2)
        a, b, c = (rand_complex(rng, (2, 3)) for _ in range(3))
        lhs, rhs = kron(kron(a, b), c), kron(a, kron(b, c))
        assert np.abs(lhs - rhs).max() < 1e-15 * np.abs(lhs).max()


class TestExpm:
    def test_zero(self):
        assert np.allclose(expm(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_diagonal_closed_form(self):
        out = expm(np.diag([1j * np.pi, 0.0]))
        assert np.abs(out - np.diag([-1.0, 1.0])).max() < 1e-14

    def test_rabi_oracle(self):
        # two-level drive: excited population (Om^2/W^2) sin^2(W t / 2)
        om, det, t = 1.3, 0.7, 2.1
        h = 0.5 * det * np.diag([1.0, -1.0]) \
            + 0.5 * om * np.array([[0, 1], [1, 0]])
        u = expm(-1j * t * h)
        w = np.hypot(om, det)
        expected = (om / w) ** 2 * np.sin(0.5 * w * t) ** 2
        assert abs(abs(u[1, 0]) ** 2 - expected) < 1e-10

    def test_inverse_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            a = rand_complex(rng, (4, 4))
            a *= 5.0 / np.linalg.norm(a, 2)
            assert np.abs(expm(a) @ expm(-a) - np.eye(4)).max() < 1e-10

    def test_skew_hermitian_gives_unitary(self):
        rng = np.random.default_rng(4)
        h = rand_complex(rng, (5, 5))
        h = h + dagger(h)
        assert is_unitary(expm(-1j * h), tol=1e-10)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            expm(np.ones((2, 3)))

    def test_hermitian_fast_path(self):
        rng = np.random.default_rng(5)
        h = rand_complex(rng, (4, 4))
        h = h + dagger(h)
        assert np.abs(expm(h, hermitian=True) - expm(h)).max() < 1e-11


class TestVectorize:
    def test_identity_pattern(self):
        assert np.array_equal(vectorize(np.eye(2)), np.array([1, 0, 0, 1.0]))

    def test_round_trip(self):
        rng = np.random.default_rng(6)
        rho = rand_complex(rng, (4, 4))
        assert np.array_equal(unvectorize(vectorize(rho)), rho)

    def test_conjugation_identity(self):
        # vec(U rho U^dag) = (conj(U) kron U) vec(rho), column stacking
        rng = np.random.default_rng(7)
        u = rand_unitary(rng, 3)
        rho = rand_complex(rng, (3, 3))
        lhs = vectorize(u @ rho @ dagger(u))
        rhs = kron(u.conj(), u) @ vectorize(rho)
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_dimension_errors(self):
        with pytest.raises(ValueError):
            vectorize(np.ones((2, 3)))
        with pytest.raises(ValueError):
            unvectorize(np.ones(5))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_expm_unitary_property(seed):
    rng = np.random.default_rng(seed)
    h = rand_complex(rng, (3, 3))
    h = (h + dagger(h)) * 2.0
    assert is_unitary(expm(-1j * h), tol=1e-10)


def test_hermitian_predicate():
    assert is_hermitian(np.diag([1.0, 2.0]))
    assert not is_hermitian(np.array([[0, 1], [0, 0]]))
