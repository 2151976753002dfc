import numpy as np
import pytest

from framefields import frames, maps, tensors


def test_disk_frame_is_admissible(rng):
    r = rng.uniform(0, 1, 40)
    th = rng.uniform(0, 2 * np.pi, 40)
    fr = maps.disk_escape_frame(r, th)
    assert fr.shape == (40, 4, 3)
    for v in fr:
        frames.Frame(v).check()
    q = maps.disk_escape_tensor(r, th)
    assert np.max(tensors.potential_w(q, 3)) < 1e-22


def test_disk_frame_center_and_boundary():
    # at the center the escape direction is vertical, independent of theta
    fr0 = maps.disk_escape_frame(np.zeros(4), np.linspace(0, 5, 4))
    assert np.allclose(fr0[:, 0], [0.0, 0.0, 1.0], atol=1e-12)
    # at r=1 the first frame vector is the outward in-plane normal
    th = np.linspace(0, 2 * np.pi, 9)
    fr1 = maps.disk_escape_frame(np.ones_like(th), th)
    nu = np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=-1)
    assert np.allclose(fr1[:, 0], nu, atol=1e-12)
    # so the boundary alignment energy vanishes there
    q = maps.disk_escape_tensor(np.ones_like(th), th)
    for k in range(len(th)):
        assert tensors.boundary_v(q[k], nu[k], 3) < 1e-22


def test_disk_tensor_single_valued_in_theta():
    q0 = maps.disk_escape_tensor(np.array(0.5), np.array(0.3))
    q1 = maps.disk_escape_tensor(np.array(0.5), np.array(0.3 + 2 * np.pi))
    assert np.allclose(q0, q1, atol=1e-12)


def test_ball_frame_is_admissible(rng):
    x = rng.standard_normal((50, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x *= rng.uniform(0.1, 1.0, (50, 1))
    fr = maps.ball_escape_frame(x)
    for v in fr:
        frames.Frame(v).check()
    q = maps.ball_escape_tensor(x)
    assert np.max(tensors.potential_w(q, 3)) < 1e-22


def test_ball_frame_contains_normal_on_sphere(rng):
    x = rng.standard_normal((30, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    x = x[x[:, 2] < 0.99]  # stay away from the singular pole
    fr = maps.ball_escape_frame(x)
    assert np.allclose(fr[:, 0], x, atol=1e-12)
    q = maps.ball_escape_tensor(x)
    for k in range(len(x)):
        assert tensors.boundary_v(q[k], x[k], 3) < 1e-22


def test_ball_frame_singular_at_north_pole():
    with pytest.raises(ValueError):
        maps.ball_escape_frame(np.array([0.0, 0.0, 1.0]))
