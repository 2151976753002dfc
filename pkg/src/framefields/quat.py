"""Unit quaternions, the binary tetrahedral group 2T, the tensor embedding
T(q), homotopy-class generators, and loop classification."""

from __future__ import annotations

import numpy as np

from . import frames, recovery, tensors

# quaternions stored as (w, x, y, z); 2T components are in {0, +-1, +-1/2},
# all exactly representable, so group arithmetic is exact in floats.

ONE = np.array([1.0, 0.0, 0.0, 0.0])
I = np.array([0.0, 1.0, 0.0, 0.0])
J = np.array([0.0, 0.0, 1.0, 0.0])
K = np.array([0.0, 0.0, 0.0, 1.0])
S = np.array([0.5, 0.5, 0.5, 0.5])
T_GEN = np.array([0.5, 0.5, 0.5, -0.5])


def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    w1, x1, y1, z1 = (p[..., i] for i in range(4))
    w2, x2, y2, z2 = (q[..., i] for i in range(4))
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def qconj(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def _build_group() -> np.ndarray:
    g = [ONE, -ONE, I, -I, J, -J, K, -K]
    for sw in (0.5, -0.5):
        for sx in (0.5, -0.5):
            for sy in (0.5, -0.5):
                for sz in (0.5, -0.5):
                    g.append(np.array([sw, sx, sy, sz]))
    return np.array(g)


GROUP = _build_group()  # the 24 elements of 2T


def group_index(q: np.ndarray, tol: float = 1e-9) -> int:
    d = np.linalg.norm(GROUP - np.asarray(q, dtype=float), axis=1)
    k = int(np.argmin(d))
    if d[k] > tol:
        raise ValueError("quaternion is not a 2T element")
    return k


def _build_classes() -> list[np.ndarray]:
    """Conjugacy classes as arrays of group indices (orbit computation)."""
    seen = set()
    classes = []
    for k in range(24):
        if k in seen:
            continue
        orbit = set()
        for h in GROUP:
            c = qmul(qmul(h, GROUP[k]), qconj(h))
            orbit.add(group_index(c))
        seen |= orbit
        classes.append(np.array(sorted(orbit)))
    return classes


CLASSES = _build_classes()

# index-level group structure: Cayley table, inverses, class index per element
CAYLEY = np.array(
    [[group_index(qmul(GROUP[a], GROUP[b])) for b in range(24)] for a in range(24)]
)
INVERSE = np.array([group_index(qconj(GROUP[a])) for a in range(24)])
CLASS_OF_INDEX = np.empty(24, dtype=int)
for _ci, _cls in enumerate(CLASSES):
    CLASS_OF_INDEX[_cls] = _ci

_CLASS_REPS = {
    "1": ONE,
    "-1": -ONE,
    "ijk": I,
    "s": S,
    "s^-1": qconj(S),
    "s^2": qmul(S, S),
    "s^-2": qconj(qmul(S, S)),
}

CLASS_LABELS = {}
for _label, _rep in _CLASS_REPS.items():
    _k = group_index(_rep)
    for _ci, _cls in enumerate(CLASSES):
        if _k in _cls:
            CLASS_LABELS[_ci] = _label


def class_of(q: np.ndarray, tol: float = 0.1) -> str:
    """Conjugacy-class label of a (near-)2T quaternion, snapped within tol."""
    q = np.asarray(q, dtype=float)
    d = np.linalg.norm(GROUP - q, axis=1)
    k = int(np.argmin(d))
    if d[k] > tol:
        raise ValueError(f"quaternion is {d[k]:.3g} from 2T (snap tol {tol})")
    for ci, cls in enumerate(CLASSES):
        if k in cls:
            return CLASS_LABELS[ci]
    raise AssertionError("unreachable")


def rotation_of(q: np.ndarray) -> np.ndarray:
    """R_q with R_q v = q v q^-1 on pure quaternions; R_q = R_{-q}."""
    q = np.asarray(q, dtype=float)
    a, b, c, d = (q[..., i] for i in range(4))
    row0 = np.stack([a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (a * c + b * d)], axis=-1)
    row1 = np.stack([2 * (a * d + b * c), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)], axis=-1)
    row2 = np.stack([2 * (b * d - a * c), 2 * (a * b + c * d), a * a + d * d - b * b - c * c], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def permutation_of(g: np.ndarray) -> tuple[int, int, int, int]:
    """The A4 image: R_g v0^j = v0^(sigma(j)); returns sigma as a tuple."""
    r = rotation_of(g)
    rotated = frames.V0 @ r.T
    sigma = []
    for v in rotated:
        d = np.linalg.norm(frames.V0 - v, axis=1)
        k = int(np.argmin(d))
        if d[k] > 1e-9:
            raise ValueError("g does not stabilize the standard tetrahedron")
        sigma.append(k)
    return tuple(sigma)


def tetra_tensor(q: np.ndarray) -> np.ndarray:
    """T(q) = sum_l (R_q v0^l)^(x3), in minimal parameters; constant on q·2T."""
    r = rotation_of(q)
    u = np.einsum("...ij,lj->...li", r, frames.V0)
    return frames.tensor_from_frame(u)


def geodesic_generator(sigma: np.ndarray, t) -> np.ndarray:
    """Constant-speed geodesic G_sigma: [0,1] -> S^3 from 1 to sigma."""
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-12) or np.any(t > 1.0 + 1e-12):
        raise ValueError("t must be in [0, 1]")
    sigma = np.asarray(sigma, dtype=float)
    w = sigma[0]
    out = np.zeros(t.shape + (4,))
    if w >= 1.0 - 1e-14:
        out[..., 0] = 1.0
        return out
    if w <= -1.0 + 1e-14:
        out[..., 0] = np.cos(np.pi * t)
        out[..., 1] = np.sin(np.pi * t)
        return out
    s_ang = np.arctan2(np.sqrt(1.0 - w * w), w)
    axis = sigma[1:] / np.sqrt(1.0 - w * w)
    out[..., 0] = np.cos(s_ang * t)
    out[..., 1:] = np.sin(s_ang * t)[..., None] * axis
    return out


def mobius(a: complex, z) -> np.ndarray:
    """Disk automorphism mu_a(z) = (z - a)/(1 - conj(a) z), mu_a(a) = 0."""
    if abs(a) >= 1.0:
        raise ValueError("|a| must be < 1")
    z = np.asarray(z, dtype=complex)
    return (z - a) / (1.0 - np.conj(a) * z)


def annulus_map(alpha, beta, rho: float, z, clamp: bool = False) -> np.ndarray:
    """F_{alpha,beta}(r e^{i theta}) = G_beta((1-r)/(1-rho)) G_alpha(theta/2pi).

    Defined on the annulus rho <= |z| <= 1; with clamp=True the radial
    parameter is clamped to [0,1] so the map extends inside the excised disk
    (used only for seeding fields).
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must be in (0, 1)")
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if not clamp and (np.any(r < rho - 1e-12) or np.any(r > 1.0 + 1e-12)):
        raise ValueError("z outside the annulus")
    theta = np.mod(np.angle(z), 2.0 * np.pi)
    s = (1.0 - r) / (1.0 - rho)
    if clamp:
        s = np.clip(s, 0.0, 1.0)
    return qmul(
        geodesic_generator(np.asarray(beta, dtype=float), s),
        geodesic_generator(np.asarray(alpha, dtype=float), theta / (2.0 * np.pi)),
    )


def multi_defect_field(defects, z, rho: float = 0.25, clamp: bool = False) -> np.ndarray:
    """q(z) = prod_j F_{alpha_j, beta_j}(mu_{a_j}(z)); outer class alpha_1...alpha_k.

    ``defects`` is a list of (a_j, alpha_j, beta_j) with distinct centers a_j
    in the open disk.
    """
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape + (4,))
    out[..., 0] = 1.0
    centers = [a for a, _, _ in defects]
    for i, a in enumerate(centers):
        for b in centers[i + 1 :]:
            if abs(complex(a) - complex(b)) < 1e-12:
                raise ValueError("defect centers must be distinct")
    for a, alpha, beta in defects:
        out = qmul(out, annulus_map(alpha, beta, rho, mobius(a, z), clamp=clamp))
    return out


def quaternions_from_rotations(r: np.ndarray) -> np.ndarray:
    """Batch rotation-matrix -> quaternion (sign arbitrary)."""
    from scipy.spatial.transform import Rotation

    xyzw = Rotation.from_matrix(r).as_quat()
    xyzw = np.atleast_2d(xyzw)
    return np.concatenate([xyzw[:, 3:4], xyzw[:, :3]], axis=1)


class LiftError(ValueError):
    pass


def classify_loop(loop_tensors: np.ndarray, tol: float = recovery.DEFAULT_TOL,
                  snap_tol: float = 0.1) -> str:
    """Free homotopy class of a closed loop of on-variety tensors.

    Recovers frames pointwise, converts to rotations, and lifts continuously
    to S^3: each relative step is snapped to its nearest 2T element (valid
    while steps stay under pi/6, since distinct 2T rotations are 2pi/3
    apart), and the deck transformation of the lift is conjugate to the
    inverse of the ordered product of the snapped steps. ``snap_tol`` bounds
    the residual accepted when identifying the final class representative.
    """
    qs = np.atleast_2d(np.asarray(loop_tensors, dtype=float))
    n = qs.shape[0]
    # full all-seed recovery on a coarse subsample, then warm-started tracking
    # of every sample from the nearest coarse frame (falls back to full
    # recovery if tracking fails anywhere)
    stride = max(1, n // 16)
    coarse = np.arange(0, n, stride)
    if stride == 1:
        fr, _, _ = recovery.recover_tetra_batch(qs, tol=tol)
    else:
        cfr, _, _ = recovery.recover_tetra_batch(qs[coarse], tol=tol)
        nearest = np.minimum(np.round(np.arange(n) / stride).astype(int),
                             len(coarse) - 1)
        try:
            fr = recovery.track_tetra_batch(qs, cfr[nearest], tol=tol)
        except recovery.RecoveryError:
            fr, _, _ = recovery.recover_tetra_batch(qs, tol=tol)
    # R = (3/4) A V0^T maps the cube-vertex base tetrahedron (the one the
    # embedding T(q) rotates) onto the recovered frame, for any column order;
    # odd orders give det -1 and are repaired by a swap.
    a = np.swapaxes(fr, -1, -2)  # (N, 3, 4)
    r = 0.75 * np.einsum("nij,jk->nik", a, frames.V0)
    neg = np.linalg.det(r) < 0
    if np.any(neg):
        fr_fix = fr.copy()
        fr_fix[neg, 0], fr_fix[neg, 1] = fr[neg, 1], fr[neg, 0]
        a = np.swapaxes(fr_fix, -1, -2)
        r = 0.75 * np.einsum("nij,jk->nik", a, frames.V0)
    raw = quaternions_from_rotations(r)
    # Relative step r_i = raw_{i-1}^-1 raw_i sits near a unique 2T element
    # m_i (2T is closed under negation, so the raw sign ambiguity is
    # absorbed); the continuous lift's deck transformation is conjugate to
    # (m_1 ... m_N)^-1, computed on group indices.
    rel = qmul(qconj(raw), np.roll(raw, -1, axis=0))
    dots = rel @ GROUP.T
    k = np.argmax(dots, axis=1)
    best = dots[np.arange(len(rel)), k]
    ang = 2.0 * np.arccos(np.minimum(1.0, best))
    worst = float(np.max(ang))
    if worst >= np.pi / 6.0:
        raise LiftError(
            f"loop sampling too coarse: step rotation angle {worst:.3f} >= pi/6"
        )
    total = 0  # identity index
    for m in k:
        total = CAYLEY[total, m]
    return CLASS_LABELS[int(CLASS_OF_INDEX[INVERSE[total]])]
