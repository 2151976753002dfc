"""Symmetric traceless third-order tensors in 2 and 3 dimensions.

A tensor Q in H_trace(n,3) (fully symmetric, every index-pair contraction
zero) is stored by its unique monomials:

    n=3: q = (Q111, Q112, Q113, Q122, Q123, Q222, Q223)   (7 reals)
    n=2: q = (Q111, Q112)                                 (2 reals)

All functions below are vectorized over leading axes, so ``q`` may have shape
``(..., 7)`` or ``(..., 2)``.  The "matrix view" of a tensor is the n x n^2
flattening with entry (i, (j-1)n + k) = Q_ijk.
"""

from __future__ import annotations

import numpy as np

# number of unique monomials: n(n+4)(n-1)/6
N_COMP = {2: 2, 3: 7}

# QQ^T = lambda_n^2 I on the frame variety, lambda_n^2 = (n+1)(n^2-1)/n^3
LAMBDA_SQ = {2: 9.0 / 8.0, 3: 32.0 / 27.0}

# double contraction with a frame vector: Q (nu x nu) = mu_n nu
MU_BOUNDARY = {2: 3.0 / 4.0, 3: 8.0 / 9.0}


def _build_basis3() -> np.ndarray:
    """The 7 parameter basis tensors E_m with Q(q) = sum_m q_m E_m."""
    basis = np.zeros((7, 3, 3, 3))

    def put(m, idx, val):
        i, j, k = idx
        for p in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
            basis[m][p] = val

    put(0, (0, 0, 0), 1.0)
    put(1, (0, 0, 1), 1.0)
    put(2, (0, 0, 2), 1.0)
    put(3, (0, 1, 1), 1.0)
    put(4, (0, 1, 2), 1.0)
    put(5, (1, 1, 1), 1.0)
    put(6, (1, 1, 2), 1.0)
    # trace closure: Q022 = -q1-q4, Q122 = -q2-q6, Q222 = -q3-q7
    for m, idx in ((0, (0, 2, 2)), (3, (0, 2, 2)), (1, (1, 2, 2)), (5, (1, 2, 2))):
        put(m, idx, basis[m][idx] - 1.0)
    basis[2][2, 2, 2] -= 1.0
    basis[6][2, 2, 2] -= 1.0
    return basis


def _build_basis2() -> np.ndarray:
    basis = np.zeros((2, 2, 2, 2))
    for p in ((0, 0, 0),):
        basis[0][p] = 1.0
    for p in ((0, 0, 1), (0, 1, 0), (1, 0, 0)):
        basis[1][p] = 1.0
    for p in ((0, 1, 1), (1, 0, 1), (1, 1, 0)):
        basis[0][p] = -1.0
    basis[1][1, 1, 1] = -1.0
    return basis


BASIS = {2: _build_basis2(), 3: _build_basis3()}
# matrix views of the basis tensors, shape (m, n, n^2)
BASIS_MAT = {n: BASIS[n].reshape(N_COMP[n], n, n * n) for n in (2, 3)}

# Gram matrix of the parameter basis (Frobenius inner products); the
# parametrization is not orthonormal for n=3.
GRAM_BASIS = {
    n: np.einsum("aijk,bijk->ab", BASIS[n], BASIS[n]) for n in (2, 3)
}
# c = C_FROM_Q q gives coordinates in an orthonormal basis of H_trace(n,3)
_CHOL = {n: np.linalg.cholesky(GRAM_BASIS[n]) for n in (2, 3)}
C_FROM_Q = {n: _CHOL[n].T.copy() for n in (2, 3)}
Q_FROM_C = {n: np.linalg.inv(_CHOL[n].T) for n in (2, 3)}
# matrix views of the orthonormal basis, shape (m, n, n^2)
ORTHO_MAT = {
    n: np.einsum("am,aij->mij", Q_FROM_C[n], BASIS_MAT[n]) for n in (2, 3)
}


def ncomp_for(n: int) -> int:
    if n not in N_COMP:
        raise ValueError(f"n must be 2 or 3, got {n}")
    return N_COMP[n]


def full_tensor(q: np.ndarray, n: int) -> np.ndarray:
    """Reconstruct the full n x n x n array from minimal parameters."""
    ncomp_for(n)
    q = np.asarray(q, dtype=float)
    return np.einsum("...m,mijk->...ijk", q, BASIS[n])


def params_from_full(full: np.ndarray, n: int) -> np.ndarray:
    """Extract minimal parameters (assumes input already in H_trace(n,3))."""
    ncomp_for(n)
    full = np.asarray(full, dtype=float)
    if n == 2:
        return np.stack([full[..., 0, 0, 0], full[..., 0, 0, 1]], axis=-1)
    return np.stack(
        [
            full[..., 0, 0, 0],
            full[..., 0, 0, 1],
            full[..., 0, 0, 2],
            full[..., 0, 1, 1],
            full[..., 0, 1, 2],
            full[..., 1, 1, 1],
            full[..., 1, 1, 2],
        ],
        axis=-1,
    )


def matrix_view(q: np.ndarray, n: int) -> np.ndarray:
    """The n x n^2 flattened matrix, entry (i, (j-1)n+k) = Q_ijk."""
    q = np.asarray(q, dtype=float)
    return np.einsum("...m,mia->...ia", q, BASIS_MAT[n])


def project(full: np.ndarray, n: int) -> np.ndarray:
    """Orthogonal (Frobenius) projection of an n^3 array onto H_trace(n,3).

    Returns minimal parameters.  Symmetrizes over index permutations, then
    removes the delta part so every contraction vanishes.
    """
    ncomp_for(n)
    a = np.asarray(full, dtype=float)
    sym = (
        a
        + np.swapaxes(a, -1, -2)
        + np.swapaxes(a, -2, -3)
        + np.swapaxes(np.swapaxes(a, -2, -3), -1, -2)
        + np.swapaxes(np.swapaxes(a, -1, -2), -2, -3)
        + np.swapaxes(np.swapaxes(a, -1, -3), -1, -2)
    ) / 6.0
    w = np.einsum("...ijj->...i", sym) / (n + 2)
    eye = np.eye(n)
    delta_part = (
        np.einsum("ij,...k->...ijk", eye, w)
        + np.einsum("jk,...i->...ijk", eye, w)
        + np.einsum("ik,...j->...ijk", eye, w)
    )
    return params_from_full(sym - delta_part, n)


def contract_vec(q: np.ndarray, v: np.ndarray, n: int = 3) -> np.ndarray:
    """eta_Q(v): the symmetric traceless matrix (sum_i Q_ijk v_i)_jk."""
    full = full_tensor(q, n)
    return np.einsum("...ijk,...i->...jk", full, np.asarray(v, dtype=float))


def gram(q: np.ndarray, n: int) -> np.ndarray:
    """QQ^T of the matrix view; (lambda_n^2) I on the frame variety."""
    m = matrix_view(q, n)
    return np.einsum("...ia,...ja->...ij", m, m)


def potential_w(q: np.ndarray, n: int) -> np.ndarray:
    """W(Q) = || QQ^T - lambda_n^2 I ||_F^2 (no 1/2 prefactor)."""
    g = gram(q, n) - LAMBDA_SQ[n] * np.eye(n)
    return np.einsum("...ij,...ij->...", g, g)


def grad_w(q: np.ndarray, n: int) -> np.ndarray:
    """Partials dW/dq_m of potential_w in the minimal parametrization."""
    m = matrix_view(q, n)
    g = np.einsum("...ia,...ja->...ij", m, m) - LAMBDA_SQ[n] * np.eye(n)
    gm = 4.0 * np.einsum("...ij,...ja->...ia", g, m)
    return np.einsum("...ia,mia->...m", gm, BASIS_MAT[n])


def boundary_v(q: np.ndarray, nu: np.ndarray, n: int = 3) -> np.ndarray:
    """V(Q, nu) = 1/2 | Q(nu x nu) - mu_n nu |^2 (normal-containment penalty)."""
    nu = np.asarray(nu, dtype=float)
    _check_unit(nu)
    r = _bv_residual(q, nu, n)
    return 0.5 * np.einsum("...i,...i->...", r, r)


def grad_boundary_v(q: np.ndarray, nu: np.ndarray, n: int = 3) -> np.ndarray:
    """Partials dV/dq_m in the minimal parametrization."""
    nu = np.asarray(nu, dtype=float)
    _check_unit(nu)
    r = _bv_residual(q, nu, n)
    xnu = np.einsum("...j,...k->...jk", nu, nu).reshape(nu.shape[:-1] + (n * n,))
    bx = np.einsum("mia,...a->...mi", BASIS_MAT[n], xnu)
    return np.einsum("...i,...mi->...m", r, bx)


def _bv_residual(q, nu, n):
    xnu = np.einsum("...j,...k->...jk", nu, nu).reshape(nu.shape[:-1] + (n * n,))
    m = matrix_view(q, n)
    return np.einsum("...ia,...a->...i", m, xnu) - MU_BOUNDARY[n] * nu


def _check_unit(nu, tol=1e-12):
    nrm2 = np.einsum("...i,...i->...", nu, nu)
    if not np.allclose(nrm2, 1.0, rtol=0.0, atol=2e-12 + tol):
        raise ValueError("nu must be a unit vector")


def block_sum_check(q: np.ndarray, n: int = 3) -> float:
    """max_i || sum_j Q_j Q_i Q_j - (lambda^2/2) Q_i ||_F (variety diagnostic)."""
    full = full_tensor(q, n)  # full[..., i, :, :] is the block Q_i
    alpha = LAMBDA_SQ[n]
    s = np.einsum("...jab,...ibc,...jcd->...iad", full, full, full)
    res = s - 0.5 * alpha * full
    return float(np.max(np.sqrt(np.einsum("...iab,...iab->...i", res, res))))


def rotate(q: np.ndarray, r: np.ndarray, n: int = 3) -> np.ndarray:
    """Push a tensor forward by a rotation: Q'_ijk = R_ip R_jq R_kr Q_pqr."""
    full = full_tensor(q, n)
    rot = np.einsum("...ip,...jq,...kr,...pqr->...ijk", r, r, r, full)
    return params_from_full(rot, n)


def frobenius_norm(q: np.ndarray, n: int) -> np.ndarray:
    """Tensor Frobenius norm |Q| (not the plain euclidean norm of q)."""
    g = GRAM_BASIS[n]
    q = np.asarray(q, dtype=float)
    return np.sqrt(np.einsum("...a,ab,...b->...", q, g, q))
