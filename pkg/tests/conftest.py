import numpy as np
import pytest

from framefields import frames, quat


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240201)


def random_tetra_params(rng, size=None):
    """On-variety tetrahedral tensors from Haar-random rotations."""
    if size is None:
        rot = frames.random_rotation(3, rng)
        return frames.tensor_from_frame(frames.frame_from_rotation(rot, 3).vectors)
    qs = rng.standard_normal((size, 4))
    qs /= np.linalg.norm(qs, axis=1, keepdims=True)
    return quat.tetra_tensor(qs)


def random_mb_params(rng, size=None):
    th = rng.uniform(0.0, 2.0 * np.pi, size=size)
    return 0.75 * np.stack([np.cos(3 * th), np.sin(3 * th)], axis=-1)
