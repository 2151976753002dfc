"""n+1-hedral frames, the simplex matrix C_n, and eigenvector-eigentensor pairs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensors

_MAX_N = 16

# canonical tetrahedron on cube vertices (rows)
V0 = np.array(
    [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
) / np.sqrt(3.0)

# canonical tetrahedron containing e3 (rows)
U0 = np.array(
    [
        [0.0, 0.0, 1.0],
        [np.sqrt(8.0 / 9.0), 0.0, -1.0 / 3.0],
        [-np.sqrt(2.0 / 9.0), np.sqrt(2.0 / 3.0), -1.0 / 3.0],
        [-np.sqrt(2.0 / 9.0), -np.sqrt(2.0 / 3.0), -1.0 / 3.0],
    ]
)

# rotation taking the cube-vertex tetrahedron {v0} onto {u0}
R0 = (1.0 / np.sqrt(24.0)) * np.array(
    [
        [4.0, -2.0, -2.0],
        [0.0, 2.0 * np.sqrt(3.0), -2.0 * np.sqrt(3.0)],
        [np.sqrt(8.0), np.sqrt(8.0), np.sqrt(8.0)],
    ]
)


def build_simplex_matrix(n: int) -> np.ndarray:
    """C_n, n x (n+1), columns a regular simplex frame; C C^T = ((n+1)/n) I."""
    if not (2 <= n <= _MAX_N):
        raise ValueError(f"n must be in [2, {_MAX_N}], got {n}")
    c = np.array(
        [
            [np.sqrt(3.0) / 2.0, -np.sqrt(3.0) / 2.0, 0.0],
            [-0.5, -0.5, 1.0],
        ]
    )
    for m in range(2, n):
        top = np.hstack(
            [np.sqrt((m + 1) ** 2 - 1.0) / (m + 1) * c, np.zeros((m, 1))]
        )
        bottom = np.hstack([np.full((1, m + 1), -1.0 / (m + 1)), [[1.0]]])
        c = np.vstack([top, bottom])
    return c


@dataclass(frozen=True)
class Frame:
    """n+1 unit vectors (rows) in R^n with <u^j,u^k> = -1/n + ((n+1)/n) d_jk."""

    vectors: np.ndarray

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    def check(self, tol: float = 1e-12) -> None:
        u = self.vectors
        n = self.n
        target = -np.ones((n + 1, n + 1)) / n + (n + 1) / n * np.eye(n + 1)
        if np.max(np.abs(u @ u.T - target)) > 100 * tol + 1e-10:
            raise ValueError("frame inner products violate n+1-hedral symmetry")


def frame_from_rotation(r: np.ndarray, n: int) -> Frame:
    r = np.asarray(r, dtype=float)
    if np.max(np.abs(r.T @ r - np.eye(n))) > 1e-10 or np.linalg.det(r) < 0:
        raise ValueError("r must be a rotation matrix")
    return Frame((r @ build_simplex_matrix(n)).T)


def rotation_from_frame(frame: Frame) -> np.ndarray:
    """R = (n/(n+1)) A C^T with A the frame column matrix; R C = A."""
    n = frame.n
    a = frame.vectors.T
    return (n / (n + 1)) * a @ build_simplex_matrix(n).T


def tensor_from_frame(vectors: np.ndarray) -> np.ndarray:
    """Q_ijk = sum_l u^l_i u^l_j u^l_k, in minimal parameters.

    ``vectors``: (..., n+1, n) frame rows; vectorized over leading axes.
    """
    u = np.asarray(vectors, dtype=float)
    n = u.shape[-1]
    full = np.einsum("...li,...lj,...lk->...ijk", u, u, u)
    return tensors.params_from_full(full, n)


def random_rotation(n: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Haar-distributed element of SO(n); quaternion sampling for n=3."""
    rng = np.random.default_rng(rng)
    if n == 3:
        from . import quat

        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        return quat.rotation_of(q)
    z = rng.standard_normal((n, n))
    qmat, rmat = np.linalg.qr(z)
    qmat = qmat * np.sign(np.diag(rmat))
    if np.linalg.det(qmat) < 0:
        qmat[:, -1] = -qmat[:, -1]
    return qmat


@dataclass(frozen=True)
class EigenPairSet:
    """Pairs (f^k, B^k) with sum_j <f^k,e^j> Q_j = lambda_k B^k."""

    vectors: np.ndarray  # (n, n), columns f^k
    tensors: np.ndarray  # (n, n, n), tensors[k] = B^k
    values: np.ndarray  # (n,) singular values lambda_k


def eigenpairs(q: np.ndarray, n: int) -> EigenPairSet:
    g = tensors.gram(q, n)
    vals, vecs = np.linalg.eigh(g)
    if np.min(vals) <= 1e-14:
        raise ValueError("QQ^T is rank deficient; eigenpairs undefined")
    lam = np.sqrt(vals)
    blocks = tensors.full_tensor(q, n)  # blocks[i] = Q_i
    b = np.einsum("jk,jab->kab", vecs, blocks) / lam[:, None, None]
    return EigenPairSet(vectors=vecs, tensors=b, values=lam)


def reconstruct_from_eigenpairs(pairs: EigenPairSet) -> np.ndarray:
    """Inverse of eigenpairs: Q_i = sum_k lambda_k <f^k,e^i> B^k."""
    n = pairs.vectors.shape[0]
    full = np.einsum("k,ik,kab->iab", pairs.values, pairs.vectors, pairs.tensors)
    return tensors.params_from_full(full, n)
