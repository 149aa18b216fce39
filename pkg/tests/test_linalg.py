import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_density, random_unitary
from qcoalg import linalg
from qcoalg.errors import ShapeError, ValidationError
from qcoalg.quantum import SQUARE_WALK_UNITARY

S = 1 / math.sqrt(2)


def test_dagger_is_conjugate_transpose():
    m = np.array([[1, 2j], [3, 4 - 1j]])
    assert np.array_equal(linalg.dagger(m), np.array([[1, 3], [-2j, 4 + 1j]]))


def test_dagger_of_row_is_column():
    assert linalg.dagger(np.array([[1j, 2]])).shape == (2, 1)


def test_mat_mul_square_walk_on_first_vertex():
    e0 = np.array([[1], [0], [0], [0]])
    out = linalg.mat_mul(SQUARE_WALK_UNITARY, e0)
    assert np.allclose(out.ravel(), [0, S, S, 0], atol=1e-15)


def test_mat_mul_shape_mismatch():
    with pytest.raises(ShapeError):
        linalg.mat_mul(np.eye(2), np.eye(3))


def test_mat_mul_associative(rng):
    a, b, c = (random_unitary(rng, 4) for _ in range(3))
    lhs = linalg.mat_mul(linalg.mat_mul(a, b), c)
    rhs = linalg.mat_mul(a, linalg.mat_mul(b, c))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_trace_values():
    assert linalg.trace(np.eye(3)) == 3
    assert linalg.trace([[1, 5], [7, 1j]]) == 1 + 1j


def test_trace_needs_square():
    with pytest.raises(ShapeError):
        linalg.trace(np.ones((2, 3)))


def test_results_are_read_only():
    out = linalg.dagger(np.eye(2))
    with pytest.raises(ValueError):
        out[0, 0] = 5


def test_as_unitary_rejects_non_unitary_with_deviation():
    with pytest.raises(ValidationError, match="unitarity deviation"):
        linalg.as_unitary([[1, 1], [0, 1]])


def test_as_unitary_honours_tolerance():
    u = np.eye(2) + 1e-7
    with pytest.raises(ValidationError):
        linalg.as_unitary(u)
    assert linalg.as_unitary(u, tol=1e-5).shape == (2, 2)


def test_effect_and_density_validation():
    linalg.as_effect(np.diag([0.0, 0.3, 1.0]))
    with pytest.raises(ValidationError):
        linalg.as_effect(np.diag([1.2, 0.0]))
    with pytest.raises(ValidationError):
        linalg.as_effect([[0, 1], [0, 0]])
    linalg.as_density(np.diag([0.25, 0.75]))
    with pytest.raises(ValidationError):
        linalg.as_density(np.diag([0.5, 0.6]))
    with pytest.raises(ValidationError):
        linalg.as_density(np.diag([1.5, -0.5]))


def test_conjugate_by_basis_projector():
    rho = np.diag([1, 0, 0, 0]).astype(complex)
    out = linalg.conjugate_by(rho, SQUARE_WALK_UNITARY)
    assert np.allclose(np.diag(out).real, [0, 0.5, 0.5, 0], atol=1e-15)


def test_conjugate_by_preserves_trace_and_hermiticity(rng):
    for d in (1, 2, 5):
        rho = random_density(rng, d)
        out = linalg.conjugate_by(rho, random_unitary(rng, d))
        assert abs(linalg.trace(out) - 1) < 1e-12
        assert linalg.hermitian_deviation(out) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 16), st.integers(0, 2**32 - 1))
def test_eig_hermitian_reconstructs(d, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (g + g.conj().T) / 2
    w, v = linalg.eig_hermitian(h)
    assert np.all(np.diff(w) >= -1e-12)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) <= 1e-9


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        linalg.eig_hermitian([[0, 1], [0, 0]])


def test_real_rank_examples():
    assert linalg.real_rank([]) == 0
    assert linalg.real_rank([[1, 2, 3], [2, 4, 6]]) == 1
    assert linalg.real_rank(np.eye(4)) == 4
    assert linalg.real_rank([[1, 0], [0, 1e-12]]) == 1


def test_real_rank_of_low_rank_product(rng):
    a = rng.normal(size=(7, 3)) @ rng.normal(size=(3, 9))
    assert linalg.real_rank(a) == 3


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_real_rank_invariant_under_permutation_and_scaling(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 5))
    a = rng.normal(size=(6, k)) @ rng.normal(size=(k, 5))
    perm = rng.permutation(6)
    scale = rng.uniform(0.5, 2.0, size=(6, 1))
    assert linalg.real_rank(a[perm] * scale) == linalg.real_rank(a) == k


def test_matrix_json_roundtrip(rng):
    u = random_unitary(rng, 3)
    obj = linalg.matrix_to_json(u)
    assert obj["rows"] == obj["cols"] == 3
    assert np.array_equal(linalg.matrix_from_json(obj), u)


@pytest.mark.parametrize(
    "bad",
    [
        {"rows": 2, "cols": 2, "entries": [[1, 0]] * 3},
        {"rows": 1, "cols": 1, "entries": [[1]]},
        {"rows": 1, "cols": 1, "entries": [["x", 0]]},
        {"cols": 1, "entries": [[1, 0]]},
    ],
)
def test_matrix_json_rejects_malformed(bad):
    with pytest.raises(ValidationError):
        linalg.matrix_from_json(bad)
