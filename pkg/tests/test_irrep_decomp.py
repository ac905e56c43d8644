import numpy as np
import pytest
from hypothesis import given

from conftest import coframes, random_coframes
from sigma_forge import geometries, pipeline
from sigma_forge.irrep_decomp import (axial_matrix, axial_vector, embed_h, extract_components, j1_apply,
                                      j1_inverse, j1_project, j2_apply, j2_project)
from sigma_forge.su2_structure import canonical_sigma, sigma_from_coframe, urbantke_metric


def _setup(e):
    s = sigma_from_coframe(e)
    return s, urbantke_metric(s)[0]


def _xi_field(s, xi):
    return np.einsum("...a,...iam->...im", xi, s)


def _two_form_basis():
    """Basis of E-valued 2-forms: 3 x 6 elements."""
    out = []
    for i in range(3):
        for a in range(4):
            for b in range(a + 1, 4):
                t = np.zeros((3, 4, 4))
                t[i, a, b], t[i, b, a] = 1.0, -1.0
                out.append(t)
    return np.array(out)


def _rank(vectors, tol=1e-9):
    sv = np.linalg.svd(vectors.reshape(len(vectors), -1), compute_uv=False)
    return int(np.sum(sv > tol * sv[0])) if sv[0] > tol else 0


# ------------------------------------------------------------ J1


@given(coframes())
def test_xi_generated_is_eigenvalue_two(e):
    s, g = _setup(e)
    a = _xi_field(s, np.array([0.3, -1.2, 0.7, 2.0]))
    np.testing.assert_allclose(j1_apply(s, g, a), 2 * a, atol=1e-10 * np.abs(a).max())
    a4, a8 = j1_project(s, g, a)
    assert np.abs(a8).max() < 1e-10 * np.abs(a).max()


def test_j1_minimal_polynomial_batch(rng):
    e = random_coframes(rng, 1000)
    s, g = _setup(e)
    a = rng.standard_normal((1000, 3, 4))
    ja = j1_apply(s, g, a)
    assert np.abs(j1_apply(s, g, ja) - 2 * a - ja).max() < 1e-11


@given(coframes())
def test_j1_projection(e):
    s, g = _setup(e)
    a = np.random.default_rng(3).standard_normal((3, 4))
    a4, a8 = j1_project(s, g, a)
    # a8 is formed as a - a4, so the sum is exact up to one rounding
    np.testing.assert_allclose(a4 + a8, a, rtol=0, atol=2 * np.finfo(float).eps * np.abs([a, a4, a8]).max())
    np.testing.assert_allclose(j1_apply(s, g, a4), 2 * a4, atol=1e-10)
    np.testing.assert_allclose(j1_apply(s, g, a8), -a8, atol=1e-10)
    # distinct eigenspaces are orthogonal in the inner product a^i_m b^i_n g^mn
    inner = np.einsum("im,in,mn->", a4, a8, g.g_inv)
    assert abs(inner) < 1e-9 * max(1.0, np.abs(a).max() ** 2 * np.abs(g.g_inv).max())


def test_j1_zero_and_inverse(rng):
    s, g = _setup(np.eye(4))
    np.testing.assert_array_equal(j1_apply(s, g, np.zeros((3, 4))), 0.0)
    a4, a8 = j1_project(s, g, np.zeros((3, 4)))
    assert not a4.any() and not a8.any()
    a = rng.standard_normal((3, 4))
    np.testing.assert_allclose(j1_inverse(s, g, j1_apply(s, g, a)), a, atol=1e-13)


def test_j1_ranks():
    s, g = _setup(np.eye(4) + 0.1 * np.arange(16).reshape(4, 4) / 16)
    basis = np.eye(12).reshape(12, 3, 4)
    a4, a8 = j1_project(s, g, basis)
    assert (_rank(a4), _rank(a8)) == (4, 8)


# ------------------------------------------------------------ J2


def test_sigma_is_eigenvalue_two():
    s, g = _setup(np.eye(4))
    np.testing.assert_allclose(j2_apply(s, g, s), 2 * s, atol=1e-15)
    parts = j2_project(s, g, s)
    np.testing.assert_allclose(parts.b1, s, atol=1e-14)
    for p in (parts.b3, parts.b5, parts.b9):
        assert np.abs(p).max() < 1e-14


@given(coframes())
def test_j2_eigenvectors(e):
    s, g = _setup(e)
    rng = np.random.default_rng(5)
    m = axial_matrix(rng.standard_normal(3))
    b_axial = np.einsum("ij,jmn->imn", m, s)
    np.testing.assert_allclose(j2_apply(s, g, b_axial), b_axial, atol=1e-10 * np.abs(b_axial).max())
    h = rng.standard_normal((4, 4))
    h = h + h.T
    # traceless with respect to g: h^a_a = 0
    h = h - g.g * np.einsum("ab,ab->", h, g.g_inv) / 4.0
    b_h = embed_h(s, g, h)
    assert np.abs(j2_apply(s, g, b_h)).max() < 1e-10 * max(1.0, np.abs(b_h).max())
    np.testing.assert_allclose(j2_apply(s, g, s), 2 * s, atol=1e-10 * np.abs(s).max())


def test_j2_minimal_polynomial_batch(rng):
    e = random_coframes(rng, 1000)
    s, g = _setup(e)
    b = rng.standard_normal((1000, 3, 4, 4))
    b = b - np.swapaxes(b, -1, -2)
    j = lambda x: j2_apply(s, g, x)
    jb = j(b)
    poly = j(j(j(jb))) - 2 * j(j(jb)) - j(jb) + 2 * jb   # J(J-2)(J-1)(J+1) = J^4 - 2J^3 - J^2 + 2J
    assert np.abs(poly).max() < 1e-11 * max(1.0, np.abs(b).max())


@given(coframes())
def test_j2_projectors(e):
    s, g = _setup(e)
    b = np.random.default_rng(2).standard_normal((3, 4, 4))
    b = b - np.swapaxes(b, -1, -2)
    parts = j2_project(s, g, b)
    np.testing.assert_allclose(sum(parts), b, atol=1e-12 * max(1.0, np.abs(b).max()))
    scale = max(1.0, np.abs(b).max()) * max(1.0, np.abs(g.g_inv).max() * np.abs(s).max()) ** 3
    for lam, part in zip((2, 1, -1, 0), parts):
        np.testing.assert_allclose(j2_apply(s, g, part), lam * part, atol=1e-11 * scale)
        # idempotence and mutual annihilation
        again = j2_project(s, g, part)
        for lam2, p2 in zip((2, 1, -1, 0), again):
            target = part if lam2 == lam else 0.0
            np.testing.assert_allclose(p2, target, atol=1e-10 * scale)


def test_j2_ranks():
    s, g = _setup(np.eye(4) + 0.1 * np.sin(np.arange(16)).reshape(4, 4))
    parts = j2_project(s, g, _two_form_basis())
    assert tuple(_rank(p) for p in parts) == (1, 3, 5, 9)


def test_round_s4_curvature_has_no_s2plus_part():
    geom = geometries.round_s4()
    f = pipeline.windowed(geom, geom.chart(16), (8, 8, 8, 8))[0]
    c = pipeline.center
    s, ff = c(f.s), c(f.f)
    g = urbantke_metric(s)[0]
    parts = j2_project(s, g, ff)
    assert np.abs(parts.b3).max() < 1e-10 * np.abs(ff).max()


# ------------------------------------------------------------ irreducible contractions


def test_extract_components_of_sigma():
    s, g = _setup(np.eye(4))
    comp = extract_components(s, g, s)
    assert comp.scalar1 == pytest.approx(12.0)
    assert np.abs(comp.sym5).max() < 1e-14
    assert np.abs(comp.vec3).max() < 1e-14


def test_extract_components_of_zero():
    s, g = _setup(np.eye(4))
    comp = extract_components(s, g, np.zeros((3, 4, 4)))
    for arr in (comp.sym5, comp.vec3, comp.scalar1, comp.asd9):
        assert not np.any(arr)


@given(coframes())
def test_vec3_recovers_axial_vector(e):
    s, g = _setup(e)
    v = np.array([0.4, -1.1, 2.3])
    b = np.einsum("ij,jmn->imn", axial_matrix(v), s)
    np.testing.assert_allclose(extract_components(s, g, b).vec3, -8.0 * v, atol=1e-10)


def test_axial_roundtrip(rng):
    v = rng.standard_normal(3)
    np.testing.assert_allclose(axial_vector(axial_matrix(v)), v)
    np.testing.assert_allclose(axial_matrix(v) @ np.array([1.0, 2, 3]), np.cross(v, [1.0, 2, 3]))


@given(coframes())
def test_asd9_matches_projector(e):
    s, g = _setup(e)
    b = np.random.default_rng(9).standard_normal((3, 4, 4))
    b = b - np.swapaxes(b, -1, -2)
    comp = extract_components(s, g, b)
    b9 = j2_project(s, g, b).b9
    np.testing.assert_allclose(comp.asd9, b9, atol=1e-10 * max(1.0, np.abs(b).max()) * np.abs(g.g_inv).max() ** 2
                               * np.abs(s).max() ** 2)
