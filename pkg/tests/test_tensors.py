import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from framefields import tensors

from conftest import random_mb_params, random_tetra_params

finite = st.floats(min_value=-10, max_value=10, allow_nan=False,
                   allow_infinity=False)


def q_arrays(n):
    return arrays(np.float64, (tensors.N_COMP[n],), elements=finite)


@pytest.mark.parametrize("n,lam2,mu,m", [(2, 9 / 8, 3 / 4, 2),
                                         (3, 32 / 27, 8 / 9, 7)])
def test_constants(n, lam2, mu, m):
    assert tensors.LAMBDA_SQ[n] == pytest.approx(lam2, abs=0)
    assert tensors.MU_BOUNDARY[n] == pytest.approx(mu, abs=0)
    assert tensors.N_COMP[n] == m
    # m = n(n+4)(n-1)/6 unique monomials
    assert m == n * (n + 4) * (n - 1) // 6


@pytest.mark.parametrize("n", [2, 3])
def test_basis_tensors_are_admissible(n):
    for b in tensors.BASIS[n]:
        assert np.allclose(b, np.swapaxes(b, 0, 1))
        assert np.allclose(b, np.swapaxes(b, 1, 2))
        assert np.allclose(np.einsum("ijj->i", b), 0.0, atol=1e-15)


@given(q=q_arrays(3))
@settings(max_examples=50, deadline=None)
def test_params_round_trip_3(q):
    full = tensors.full_tensor(q, 3)
    assert np.array_equal(tensors.params_from_full(full, 3), q)


@given(q=q_arrays(2))
@settings(max_examples=50, deadline=None)
def test_params_round_trip_2(q):
    full = tensors.full_tensor(q, 2)
    assert np.array_equal(tensors.params_from_full(full, 2), q)


@pytest.mark.parametrize("n", [2, 3])
def test_project_is_identity_on_admissible(n, rng):
    q = rng.standard_normal((5, tensors.N_COMP[n]))
    full = tensors.full_tensor(q, n)
    assert np.allclose(tensors.project(full, n), q, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_project_lands_in_admissible_space(n, rng):
    a = rng.standard_normal((4, n, n, n))
    p = tensors.full_tensor(tensors.project(a, n), n)
    assert np.allclose(p, np.swapaxes(p, -1, -2), atol=1e-12)
    assert np.allclose(np.einsum("...ijj->...i", p), 0.0, atol=1e-12)
    # projection is idempotent
    assert np.allclose(tensors.project(p, n),
                       tensors.project(a, n), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_variety_gram_and_potential(n, rng):
    maker = random_mb_params if n == 2 else random_tetra_params
    q = maker(rng, size=20)
    g = tensors.gram(q, n)
    assert np.allclose(g, tensors.LAMBDA_SQ[n] * np.eye(n), atol=1e-12)
    assert np.max(tensors.potential_w(q, n)) < 1e-24
    assert np.max(np.abs(tensors.grad_w(q, n))) < 1e-11


@pytest.mark.parametrize("n", [2, 3])
def test_potential_at_zero(n):
    w0 = {2: 2.0 * (9.0 / 8.0) ** 2, 3: 3.0 * (32.0 / 27.0) ** 2}[n]
    assert tensors.potential_w(np.zeros(tensors.N_COMP[n]), n) == \
        pytest.approx(w0, rel=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_grad_w_matches_finite_differences(n, rng):
    m = tensors.N_COMP[n]
    for _ in range(10):
        q = rng.standard_normal(m)
        g = tensors.grad_w(q, n)
        h = 1e-6
        for p in range(m):
            e = np.zeros(m)
            e[p] = h
            fd = (tensors.potential_w(q + e, n)
                  - tensors.potential_w(q - e, n)) / (2 * h)
            assert g[p] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_boundary_v_zero_when_normal_in_frame(rng):
    from framefields import frames
    for _ in range(10):
        rot = frames.random_rotation(3, rng)
        fr = frames.frame_from_rotation(rot, 3)
        q = frames.tensor_from_frame(fr.vectors)
        for v in fr.vectors:
            assert tensors.boundary_v(q, v, 3) < 1e-24


def test_boundary_v_positive_off_frame(rng):
    q = random_tetra_params(rng)
    # a direction far from all four frame vectors
    nu = np.array([1.0, 0.0, 0.0])
    vals = [tensors.boundary_v(tensors.rotate(q, r, 3), nu, 3)
            for r in (np.eye(3),)]
    assert tensors.boundary_v(np.zeros(7), nu, 3) == \
        pytest.approx(0.5 * (8.0 / 9.0) ** 2, rel=1e-14)
    assert all(v >= 0 for v in vals)


def test_grad_boundary_v_matches_finite_differences(rng):
    nu = rng.standard_normal(3)
    nu /= np.linalg.norm(nu)
    q = rng.standard_normal(7)
    g = tensors.grad_boundary_v(q, nu, 3)
    h = 1e-6
    for p in range(7):
        e = np.zeros(7)
        e[p] = h
        fd = (tensors.boundary_v(q + e, nu, 3)
              - tensors.boundary_v(q - e, nu, 3)) / (2 * h)
        assert g[p] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_boundary_v_rejects_non_unit(rng):
    with pytest.raises(ValueError):
        tensors.boundary_v(np.zeros(7), np.array([1.0, 1.0, 0.0]), 3)


@pytest.mark.parametrize("n", [2, 3])
def test_rotation_equivariance(n, rng):
    from framefields import frames
    maker = random_mb_params if n == 2 else random_tetra_params
    q = maker(rng)
    r = frames.random_rotation(n, rng)
    qr = tensors.rotate(q, r, n)
    # W and the gram spectrum are rotation invariant
    assert tensors.potential_w(qr, n) == pytest.approx(
        float(tensors.potential_w(q, n)), abs=1e-12)
    assert np.allclose(tensors.gram(qr, n),
                       r @ tensors.gram(q, n) @ r.T, atol=1e-12)
    # composition
    r2 = frames.random_rotation(n, rng)
    assert np.allclose(tensors.rotate(qr, r2, n),
                       tensors.rotate(q, r2 @ r, n), atol=1e-12)


def test_block_sum_identity_on_variety(rng):
    q = random_tetra_params(rng, size=10)
    assert tensors.block_sum_check(q, 3) < 1e-12
    # off-variety tensors violate the identity
    assert tensors.block_sum_check(1.7 * q, 3) > 1e-2


@pytest.mark.parametrize("n", [2, 3])
def test_frobenius_norm_matches_full_tensor(n, rng):
    q = rng.standard_normal(tensors.N_COMP[n])
    full = tensors.full_tensor(q, n)
    assert tensors.frobenius_norm(q, n) == pytest.approx(
        np.sqrt(np.sum(full * full)), rel=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_orthonormal_coordinates(n, rng):
    # the c-coordinates carry the Frobenius metric to the euclidean one
    q = rng.standard_normal(tensors.N_COMP[n])
    c = tensors.C_FROM_Q[n] @ q
    assert np.linalg.norm(c) == pytest.approx(
        float(tensors.frobenius_norm(q, n)), rel=1e-13)
    assert np.allclose(tensors.Q_FROM_C[n] @ c, q, atol=1e-12)
    gram_ortho = np.einsum("mij,pij->mp", tensors.ORTHO_MAT[n],
                           tensors.ORTHO_MAT[n])
    assert np.allclose(gram_ortho, np.eye(tensors.N_COMP[n]), atol=1e-12)


def test_contract_vec_symmetric_traceless(rng):
    q = rng.standard_normal(7)
    v = rng.standard_normal(3)
    eta = tensors.contract_vec(q, v, 3)
    assert np.allclose(eta, eta.T, atol=1e-14)
    assert abs(np.trace(eta)) < 1e-13
