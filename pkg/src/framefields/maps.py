"""Analytic frame-valued maps: the 2D disk escape map (no interior
singularity, normal on the boundary) and the 3D ball map with a single
boundary point singularity at the north pole."""

from __future__ import annotations

import numpy as np

from . import frames


def _frame_from_f(f1: np.ndarray, f2: np.ndarray, f3: np.ndarray) -> np.ndarray:
    """Tetrahedral frame a^1..a^4 from an orthonormal triple f^1,f^2,f^3."""
    s2, s6 = np.sqrt(2.0), np.sqrt(6.0)
    a1 = f1
    a2 = -f1 / 3.0 + (2.0 * s2 / 3.0) * f2
    a3 = -f1 / 3.0 - (s2 / 3.0) * f2 + (s6 / 3.0) * f3
    a4 = -f1 / 3.0 - (s2 / 3.0) * f2 - (s6 / 3.0) * f3
    return np.stack([a1, a2, a3, a4], axis=-2)


def disk_escape_frame(r: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Escape-map frame on the unit disk; a^1 = outward normal at r=1."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cr, sr = np.cos(np.pi * r / 2.0), np.sin(np.pi * r / 2.0)
    zeros = np.zeros_like(ct)
    er = np.stack([ct, st, zeros], axis=-1)
    eth = np.stack([-st, ct, zeros], axis=-1)
    e3 = np.stack([zeros, zeros, np.ones_like(ct)], axis=-1)
    tilt = cr[..., None] * er - sr[..., None] * e3
    f1 = sr[..., None] * er + cr[..., None] * e3
    f2 = ct[..., None] * tilt - st[..., None] * eth
    f3 = st[..., None] * tilt + ct[..., None] * eth
    # f1 escapes from e3 at the center to the outward normal at r=1; f2, f3
    # span its orthogonal complement.
    return _frame_from_f(f1, f2, f3)


def disk_escape_tensor(r, theta) -> np.ndarray:
    return frames.tensor_from_frame(disk_escape_frame(r, theta))


def ball_escape_frame(x: np.ndarray) -> np.ndarray:
    """Frame on the unit ball, singular only at the north pole (0,0,1);
    a^1(x) = x on the boundary sphere."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    m = 1.0 - x3
    den = x1 * x1 + x2 * x2 + m * m
    if np.any(den < 1e-30):
        raise ValueError("map is singular at the north pole")
    f1 = np.stack([2 * x1 * m, 2 * x2 * m, x1 * x1 + x2 * x2 - m * m], axis=-1) / den[..., None]
    f2 = np.stack([-x1 * x1 + x2 * x2 + m * m, -2 * x1 * x2, 2 * x1 * m], axis=-1) / den[..., None]
    f3 = np.stack([2 * x1 * x2, -(x1 * x1 - x2 * x2 + m * m), -2 * x2 * m], axis=-1) / den[..., None]
    return _frame_from_f(f1, f2, f3)


def ball_escape_tensor(x) -> np.ndarray:
    return frames.tensor_from_frame(ball_escape_frame(x))
