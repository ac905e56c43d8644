import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MAX_COND = 10.0


def random_coframes(rng, n, max_cond=MAX_COND):
    """Positively oriented coframes with bounded condition number (rejection sampling)."""
    out = []
    while len(out) < n:
        e = rng.standard_normal((max(n, 64), 4, 4))
        e = e[np.linalg.cond(e) < max_cond]
        flip = np.linalg.det(e) < 0
        e[flip, 0] *= -1
        out.extend(e)
    return np.array(out[:n])


def random_rotations(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, 3, 3)))
    q = q * np.sign(np.einsum("...ii->...i", r))[..., None, :]
    q[np.linalg.det(q) < 0, :, 0] *= -1
    return q


finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


@st.composite
def coframes(draw):
    """Single well-conditioned coframe with det e > 0."""
    e = draw(arrays(np.float64, (4, 4), elements=finite))
    e = np.eye(4) * 2.0 + e
    if np.linalg.cond(e) > 50:
        e = np.eye(4) + 0.1 * e
    if np.linalg.det(e) < 0:
        e[0] *= -1
    return e


@st.composite
def rotations(draw):
    v = draw(arrays(np.float64, (3,), elements=st.floats(-3.0, 3.0)))
    from scipy.spatial.transform import Rotation
    return Rotation.from_rotvec(v).as_matrix()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
