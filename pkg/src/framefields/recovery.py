"""Pointwise recovery of MB / tetrahedral frames from on-variety tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensors
from .frames import Frame

DEFAULT_TOL = 1e-6


class RecoveryError(ValueError):
    pass


@dataclass(frozen=True)
class RecoveryResult:
    frame: Frame
    residual: float  # ||gram(Q) - lambda^2 I||_F of the input
    maximizer_values: np.ndarray | None = None  # mu at each frame vector (n=3)
    theta: float | None = None  # frame angle in [0, 2pi/3) (n=2)


def _icosahedral_seeds() -> np.ndarray:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = []
    for a, b in ((1.0, phi), (-1.0, phi), (1.0, -phi), (-1.0, -phi)):
        verts += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    verts = np.array(verts)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    # face centers = normalized sums of vertex triples at mutual distance 2/phi...
    # cheaper: all triples of vertices with pairwise dot = 1/sqrt(5) * phi ~ max
    d = verts @ verts.T
    cut = np.max(d[d < 0.999]) - 1e-9
    faces = []
    nv = len(verts)
    for i in range(nv):
        for j in range(i + 1, nv):
            if d[i, j] < cut:
                continue
            for k in range(j + 1, nv):
                if d[i, k] > cut and d[j, k] > cut:
                    faces.append(verts[i] + verts[j] + verts[k])
    faces = np.array(faces)
    faces /= np.linalg.norm(faces, axis=1, keepdims=True)
    return np.vstack([verts, faces])


SEEDS = _icosahedral_seeds()


def mu_coeffs(q: np.ndarray) -> np.ndarray:
    """c_ijk = tr(Q_i Q_j Q_k), fully symmetric; mu(b) = (1/3) c_ijk b_i b_j b_k."""
    blocks = tensors.full_tensor(q, 3)
    return np.einsum("...iab,...jbc,...kca->...ijk", blocks, blocks, blocks)


def mu(q: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Determinant functional mu_Q(b) = det(sum_j b_j Q_j)."""
    eta = tensors.contract_vec(q, b, 3)
    return np.linalg.det(eta)


def _maximize_mu_batch(c: np.ndarray, newton_iters: int = 6,
                       power_iters: int = 25,
                       seeds: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """All-seed local maximization of (1/3) c:bbb on S^2, batched.

    c: (N,3,3,3). Returns (b, grad_norm) of shape (N,S,3), (N,S).
    Optional per-tensor seeds (N,S,3) replace the global seed set.
    """
    n_t = c.shape[0]
    if seeds is None:
        b = np.broadcast_to(SEEDS, (n_t,) + SEEDS.shape).copy()
    else:
        b = np.array(seeds, dtype=float)
    # matmul-friendly views of c: (jk)->i and (k)->(ij) contractions
    c_jk_i = np.swapaxes(c.reshape(n_t, 3, 9), -1, -2)  # (N, 9, 3)
    c_k_ij = np.swapaxes(c.reshape(n_t, 9, 3), -1, -2)  # (N, 3, 9)

    def grad_mu(b):
        bb = (b[..., :, None] * b[..., None, :]).reshape(b.shape[:-1] + (9,))
        return bb @ c_jk_i  # (N, S, 3): c_ijk b_j b_k

    tau = 2.0 * np.sqrt(np.einsum("nijk,nijk->n", c, c))[:, None, None] + 1e-30
    for _ in range(power_iters):
        b = grad_mu(b) + tau * b
        b /= np.linalg.norm(b, axis=-1, keepdims=True)
    # Newton polish on the Lagrange system g(b) = lam b, |b| = 1
    eye = np.eye(3)
    for _ in range(newton_iters):
        g = grad_mu(b)
        lam = np.einsum("nsi,nsi->ns", b, g)
        cb = (b @ c_k_ij).reshape(b.shape[:-1] + (3, 3))  # c_ijk b_k
        m = 2.0 * cb - lam[..., None, None] * eye
        jac = np.zeros(b.shape[:2] + (4, 4))
        jac[..., :3, :3] = m
        jac[..., :3, 3] = -b
        jac[..., 3, :3] = b
        rhs = np.concatenate(
            [g - lam[..., None] * b,
             0.5 * (np.einsum("nsi,nsi->ns", b, b) - 1.0)[..., None]],
            axis=-1,
        )
        try:
            step = np.linalg.solve(jac, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(
                jac.reshape(-1, 4, 4), rhs.reshape(-1, 4), rcond=None
            )[0].reshape(rhs.shape)
        dn = np.linalg.norm(step[..., :3], axis=-1, keepdims=True)
        step = step * np.minimum(1.0, 0.5 / (dn + 1e-30))
        b = b - step[..., :3]
        b /= np.linalg.norm(b, axis=-1, keepdims=True)
    g = grad_mu(b)
    lam = np.einsum("nsi,nsi->ns", b, g)
    grad_norm = np.linalg.norm(g - lam[..., None] * b, axis=-1)
    return b, grad_norm


def _dedupe_top4(b: np.ndarray, vals: np.ndarray, grad_norm: np.ndarray,
                 ang_tol: float = 0.1):
    """Per-tensor: keep the four largest distinct maximizers."""
    order = np.argsort(-vals)
    picked = []
    cos_tol = np.cos(ang_tol)
    for s in order:
        if grad_norm[s] > 1e-9:
            continue
        d = b[s]
        if any(np.dot(d, p) > cos_tol for p in picked):
            continue
        picked.append(d)
        if len(picked) == 4:
            break
    if len(picked) < 4:
        raise RecoveryError("fewer than 4 distinct maximizers of mu found")
    return np.array(picked)


def recover_tetra_batch(qs: np.ndarray, tol: float = DEFAULT_TOL):
    """Vectorized tetrahedral recovery.

    qs: (N,7) on-variety tensors. Returns (frames (N,4,3), mu_values (N,4),
    residuals (N,)).
    """
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    g = tensors.gram(qs, 3) - tensors.LAMBDA_SQ[3] * np.eye(3)
    residuals = np.sqrt(np.einsum("...ij,...ij->...", g, g))
    if np.max(residuals) > tol:
        raise RecoveryError(
            f"tensor is off the variety (residual {np.max(residuals):.3g} > tol {tol:.3g})"
        )
    proj = qs
    if np.max(residuals) > 1e-12:
        proj = project_to_variety(qs)
    c = mu_coeffs(proj)
    b, grad_norm = _maximize_mu_batch(c)
    vals = np.einsum("nijk,nsi,nsj,nsk->ns", c, b, b, b) / 3.0
    n_t = qs.shape[0]
    out_frames = np.empty((n_t, 4, 3))
    out_vals = np.empty((n_t, 4))
    for t in range(n_t):
        picked = _dedupe_top4(b[t], vals[t], grad_norm[t])
        # canonical order: lexicographic by components
        idx = np.lexsort(picked.T[::-1])
        out_frames[t] = picked[idx]
        out_vals[t] = np.einsum(
            "ijk,si,sj,sk->s", c[t], out_frames[t], out_frames[t], out_frames[t]
        ) / 3.0
    return out_frames, out_vals, residuals


def track_tetra_batch(qs: np.ndarray, seed_frames: np.ndarray,
                      tol: float = DEFAULT_TOL) -> np.ndarray:
    """Recovery warm-started from nearby known frames (4 seeds per tensor).

    qs: (N,7) on-variety tensors, seed_frames: (N,4,3) approximate frames
    (e.g. from a coarser sampling of the same path). Much cheaper than the
    all-seed search; raises RecoveryError if any tensor fails to yield four
    distinct converged maximizers, in which case the caller should fall back
    to recover_tetra_batch.
    """
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    g = tensors.gram(qs, 3) - tensors.LAMBDA_SQ[3] * np.eye(3)
    residuals = np.sqrt(np.einsum("...ij,...ij->...", g, g))
    if np.max(residuals) > tol:
        raise RecoveryError(
            f"tensor is off the variety (residual {np.max(residuals):.3g} > tol {tol:.3g})"
        )
    proj = qs
    if np.max(residuals) > 1e-12:
        proj = project_to_variety(qs)
    c = mu_coeffs(proj)
    b, grad_norm = _maximize_mu_batch(c, newton_iters=5, power_iters=2,
                                      seeds=seed_frames)
    if np.max(grad_norm) > 1e-9:
        raise RecoveryError("warm-started maximization did not converge")
    dots = np.einsum("nsi,nti->nst", b, b)
    iu = np.triu_indices(b.shape[1], k=1)
    off = dots[:, iu[0], iu[1]]
    if np.max(off) > np.cos(0.1):
        raise RecoveryError("warm-started maximizers collapsed onto each other")
    vals = np.einsum("nijk,nsi,nsj,nsk->ns", c, b, b, b) / 3.0
    # every global maximizer of an on-variety tensor attains 128/729
    if np.min(vals) < 0.9 * (128.0 / 729.0):
        raise RecoveryError("warm-started maximization found a non-maximizer")
    return b


def recover_tetrahedron(q: np.ndarray, tol: float = DEFAULT_TOL) -> RecoveryResult:
    fr, vals, res = recover_tetra_batch(np.asarray(q, dtype=float)[None], tol)
    frame = Frame(fr[0])
    frame.check()
    return RecoveryResult(frame=frame, residual=float(res[0]),
                          maximizer_values=vals[0])


def recover_mb(q: np.ndarray, tol: float = DEFAULT_TOL) -> RecoveryResult:
    q = np.asarray(q, dtype=float)
    g = tensors.gram(q, 2) - tensors.LAMBDA_SQ[2] * np.eye(2)
    residual = float(np.sqrt(np.sum(g * g)))
    if residual > tol:
        raise RecoveryError(
            f"tensor is off the variety (residual {residual:.3g} > tol {tol:.3g})"
        )
    theta = np.arctan2(q[1], q[0]) / 3.0
    theta %= 2.0 * np.pi / 3.0
    angles = theta + 2.0 * np.pi * np.arange(3) / 3.0
    vecs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    return RecoveryResult(frame=Frame(vecs), residual=residual, theta=float(theta))


def project_to_variety(qs: np.ndarray, max_steps: int = 15) -> np.ndarray:
    """Gauss-Newton steps toward gram(Q) = lambda^2 I (min-norm updates)."""
    qs = np.array(np.atleast_2d(qs), dtype=float)
    iu = np.triu_indices(3)
    for _ in range(max_steps):
        m = tensors.matrix_view(qs, 3)
        g = np.einsum("...ia,...ja->...ij", m, m) - tensors.LAMBDA_SQ[3] * np.eye(3)
        r = g[..., iu[0], iu[1]]
        if np.max(np.abs(r)) < 1e-12:
            break
        # d gram / d q_m = E_m M^T + M E_m^T
        jfull = np.einsum("mia,nja->nmij", tensors.BASIS_MAT[3], m)
        jfull = jfull + np.swapaxes(jfull, -1, -2)
        jac = jfull[..., iu[0], iu[1]]  # (N, 7, 6) -> deriv axis first
        jac = np.swapaxes(jac, -1, -2)  # (N, 6, 7)
        for t in range(qs.shape[0]):
            # rank-deficient at non-generic variety points: truncate tiny
            # singular values so the min-norm step stays bounded
            step, *_ = np.linalg.lstsq(jac[t], r[t], rcond=1e-8)
            qs[t] -= step
    m = tensors.matrix_view(qs, 3)
    g = np.einsum("...ia,...ja->...ij", m, m) - tensors.LAMBDA_SQ[3] * np.eye(3)
    if np.max(np.abs(g)) > 1e-10:
        raise RecoveryError("projection toward the variety did not converge")
    return qs


def validate_critical_structure(q: np.ndarray, b: np.ndarray) -> dict:
    """Diagnostics at a critical point of mu: eigen relation + Lagrange residual."""
    b = np.asarray(b, dtype=float)
    eta = tensors.contract_vec(q, b, 3)
    eta_b = eta @ b
    gamma = float(b @ eta_b)
    c = mu_coeffs(q)
    grad = np.einsum("ijk,j,k->i", c, b, b)
    lam = float(b @ grad)
    return {
        "eigen_residual": float(np.linalg.norm(eta_b - gamma * b)),
        "gamma": gamma,
        "lagrange_residual": float(np.linalg.norm(grad - lam * b)),
        "mu": float(mu(q, b)),
    }
