import numpy as np
import pytest

from framefields import frames, quat, recovery, tensors

from conftest import random_mb_params, random_tetra_params


def test_recover_tetra_round_trip(rng):
    for _ in range(20):
        r = frames.random_rotation(3, rng)
        fr = frames.frame_from_rotation(r, 3)
        q = frames.tensor_from_frame(fr.vectors)
        res = recovery.recover_tetrahedron(q)
        # recovered directions match the original frame as a set
        dots = res.frame.vectors @ fr.vectors.T
        assert np.allclose(np.sort(np.max(dots, axis=1)), 1.0, atol=1e-8)
        assert res.residual < 1e-10


def test_recovered_mu_values(rng):
    q = random_tetra_params(rng)
    res = recovery.recover_tetrahedron(q)
    assert np.allclose(res.maximizer_values, 128.0 / 729.0, atol=1e-12)


def test_recover_mb_round_trip(rng):
    for _ in range(20):
        th = rng.uniform(0, 2 * np.pi)
        q = 0.75 * np.array([np.cos(3 * th), np.sin(3 * th)])
        res = recovery.recover_mb(q)
        # one recovered direction equals the generating one
        dots = res.frame.vectors @ np.array([np.cos(th), np.sin(th)])
        assert np.max(dots) == pytest.approx(1.0, abs=1e-12)
        res.frame.check()


def test_off_variety_raises(rng):
    q = 0.5 * random_tetra_params(rng)
    with pytest.raises(recovery.RecoveryError):
        recovery.recover_tetrahedron(q)
    with pytest.raises(recovery.RecoveryError):
        recovery.recover_mb(np.array([0.3, 0.1]))


def test_batch_recovery_matches_scalar(rng):
    qs = random_tetra_params(rng, size=8)
    fr, vals, res = recovery.recover_tetra_batch(qs)
    assert fr.shape == (8, 4, 3)
    assert np.max(res) < 1e-10
    for t in range(8):
        single = recovery.recover_tetrahedron(qs[t])
        assert np.allclose(fr[t], single.frame.vectors, atol=1e-9)


def test_track_batch_follows_path(rng):
    # smooth rotation path; track from the exact frames of a coarse start
    ts = np.linspace(0.0, 1.0, 30)
    sig = quat.geodesic_generator(quat.S, ts)
    qs = quat.tetra_tensor(sig)
    fr0, _, _ = recovery.recover_tetra_batch(qs[:1])
    seeds = np.repeat(fr0, len(ts), axis=0)
    # seeds from t=0 are close enough for the first half of the path
    tracked = recovery.track_tetra_batch(qs[:10], seeds[:10])
    ref, _, _ = recovery.recover_tetra_batch(qs[:10])
    for t in range(10):
        dots = tracked[t] @ ref[t].T
        assert np.allclose(np.sort(np.max(dots, axis=1)), 1.0, atol=1e-8)


def test_project_to_variety(rng):
    q = random_tetra_params(rng, size=5)
    q_off = q + 1e-4 * rng.standard_normal(q.shape)
    proj = recovery.project_to_variety(q_off)
    g = tensors.gram(proj, 3)
    assert np.max(np.abs(g - tensors.LAMBDA_SQ[3] * np.eye(3))) < 1e-10
    # the projection is a small correction, not a jump
    assert np.max(np.linalg.norm(proj - q_off, axis=-1)) < 1e-3
    # larger perturbations just need more Gauss-Newton steps
    far = q + 1e-2 * rng.standard_normal(q.shape)
    proj = recovery.project_to_variety(far, max_steps=12)
    g = tensors.gram(proj, 3)
    assert np.max(np.abs(g - tensors.LAMBDA_SQ[3] * np.eye(3))) < 1e-10


def test_project_to_variety_fails_far_away():
    with pytest.raises(recovery.RecoveryError):
        recovery.project_to_variety(np.zeros((1, 7)), max_steps=5)


def test_validate_critical_structure(rng):
    q = random_tetra_params(rng)
    fr, _, _ = recovery.recover_tetra_batch(q[None])
    for b in fr[0]:
        d = recovery.validate_critical_structure(q, b)
        assert d["eigen_residual"] < 1e-8
        assert d["lagrange_residual"] < 1e-8
        assert d["mu"] == pytest.approx(128.0 / 729.0, abs=1e-10)
        assert d["gamma"] > 0


def test_mu_matches_cubic_coefficients(rng):
    # mu(b) = det(sum_j b_j Q_j) = (1/3) c_ijk b_i b_j b_k
    q = random_tetra_params(rng)
    c = recovery.mu_coeffs(q)
    for _ in range(5):
        b = rng.standard_normal(3)
        b /= np.linalg.norm(b)
        cubic = np.einsum("ijk,i,j,k->", c, b, b, b) / 3.0
        assert recovery.mu(q, b) == pytest.approx(cubic, rel=1e-12, abs=1e-14)
