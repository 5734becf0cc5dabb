from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rda.basis import dim_poly, exponents, monomials
from rda.mesh import gen_tet_mesh, gen_tri_mesh
from rda.patch import ElementPatch, build_patch, build_patches, default_threshold
from rda.recon import (
    UnisolvenceError,
    build_operator,
    evaluate,
    lambda_estimate,
    local_fit,
)

SQUARE = ((-1.0, 1.0), (-1.0, 1.0))


def kkt_fit(V, values):
    """Dense Lagrange-multiplier solve of min |V c - v|^2 s.t. V[0] c = v[0].

    Augmented form in (residual, c, multiplier) to avoid squaring cond(V).
    """
    n, nb = V.shape
    K = np.zeros((n + nb + 1, n + nb + 1))
    K[:n, :n] = np.eye(n)
    K[:n, n:n + nb] = V
    K[n:n + nb, :n] = V.T
    K[n:n + nb, -1] = V[0]
    K[-1, n:n + nb] = V[0]
    rhs = np.concatenate([values, np.zeros(nb), [values[0]]])
    return np.linalg.solve(K, rhs)[n:n + nb]


def operator(mesh, m, threshold=None):
    thr = threshold or default_threshold(m, mesh.dim, mesh.kind)
    return build_operator(mesh, build_patches(mesh, thr), m)


def test_constant_values():
    mesh = gen_tri_mesh(SQUARE, 6)
    for m in range(5):
        p = build_patch(mesh, 20, default_threshold(max(m, 1), 2, "tri"))
        fit = local_fit(p, m, np.full(len(p), 7.0), mesh)
        np.testing.assert_allclose(fit.coeffs, [7.0] + [0.0] * (dim_poly(m, 2) - 1), atol=1e-12)


def test_linear_values_reproduced():
    mesh = gen_tri_mesh(SQUARE, 6)
    rng = np.random.default_rng(1)
    q = lambda x: 1 + 2 * x[..., 0] + 3 * x[..., 1]
    for m in (1, 2, 3):
        p = build_patch(mesh, 31, default_threshold(m, 2, "tri"))
        fit = local_fit(p, m, q(p.collocation), mesh)
        lo, hi = p.collocation.min(axis=0), p.collocation.max(axis=0)
        x = rng.uniform(lo, hi, size=(10, 2))
        np.testing.assert_allclose(fit(x), q(x), atol=1e-12)


def test_toy_kkt():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    mesh = SimpleNamespace(dim=2, barycenters=pts, diameters=np.ones(4))
    patch = ElementPatch(owner=0, members=np.arange(4), collocation=pts, depth=1)
    values = np.array([0.0, 1.0, 2.0, 4.0])
    fit = local_fit(patch, 1, values, mesh)
    expected = kkt_fit(monomials(pts, pts[0], 1.0, 1), values)
    np.testing.assert_allclose(fit.coeffs, expected, atol=1e-12)
    assert fit.coeffs[0] == 0.0


@pytest.mark.parametrize("seed", range(50))
def test_kkt_oracle_random_patches(seed):
    rng = np.random.default_rng(seed)
    dim = 2 if seed % 2 else 3
    m = int(rng.integers(1, 4 if dim == 3 else 5))
    n_pts = dim_poly(m, dim) + int(rng.integers(2, 12))
    pts = rng.uniform(-1, 1, size=(n_pts, dim))
    mesh = SimpleNamespace(dim=dim, barycenters=pts, diameters=np.full(n_pts, 0.7))
    patch = ElementPatch(owner=0, members=np.arange(n_pts), collocation=pts, depth=1)
    values = rng.normal(size=n_pts)
    fit = local_fit(patch, m, values, mesh)
    expected = kkt_fit(monomials(pts, pts[0], 0.7, m), values)
    np.testing.assert_allclose(fit.coeffs, expected, rtol=1e-10, atol=1e-10)


def test_rank_deficient_patch():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    mesh = SimpleNamespace(dim=2, barycenters=pts, diameters=np.ones(4))
    patch = ElementPatch(owner=0, members=np.arange(4), collocation=pts, depth=1)
    with pytest.raises(UnisolvenceError, match="element 0"):
        local_fit(patch, 1, np.arange(4.0), mesh)
    fit = local_fit(patch, 1, np.arange(4.0), mesh, allow_fallback=True)
    np.testing.assert_allclose(fit.coeffs, [0.0, 1.0, 0.0], atol=1e-12)


def test_operator_degree_zero_is_identity():
    mesh = gen_tri_mesh(SQUARE, 4)
    op = build_operator(mesh, build_patches(mesh, 8), 0)
    assert op.R.shape == (32, 32)
    assert abs(op.R - np.eye(32)).max() == 0


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_operator_reproduces_constants(m):
    mesh = gen_tri_mesh(SQUARE, 6)
    op = operator(mesh, m)
    C = op.coefficients(np.ones(mesh.n_elements))
    expected = np.zeros_like(C)
    expected[:, 0] = 1
    np.testing.assert_allclose(C, expected, atol=1e-12)


def test_operator_full_rank():
    mesh = gen_tri_mesh(SQUARE, 4)
    op = operator(mesh, 2)
    assert op.R.shape == (32 * 6, 32)
    assert np.linalg.matrix_rank(op.R.toarray()) == 32


@pytest.mark.parametrize("mesh,m", [(gen_tri_mesh(SQUARE, 5), 3), (gen_tet_mesh(((0, 1),) * 3, 2), 2)])
def test_operator_matches_local_fits(mesh, m):
    op = operator(mesh, m)
    rng = np.random.default_rng(0)
    v = rng.normal(size=mesh.n_elements)
    C = op.coefficients(v)
    for k in range(0, mesh.n_elements, 7):
        p = op.patches.patch(mesh, k)
        np.testing.assert_allclose(C[k], local_fit(p, m, v[p.members], mesh).coeffs,
                                   rtol=1e-11, atol=1e-11)


def test_support_property():
    mesh = gen_tri_mesh(SQUARE, 6)
    op = operator(mesh, 2)
    for j in (0, 17, 40):
        expected = [k for k in range(mesh.n_elements) if j in op.patches.members_of(k)]
        np.testing.assert_array_equal(op.support(j), expected)
        col = op.R[:, j].toarray().reshape(mesh.n_elements, op.nb)
        nonzero = np.flatnonzero(np.abs(col).max(axis=1) > 0)
        assert set(nonzero) <= set(expected)
        outside = [k for k in range(mesh.n_elements) if k not in expected][0]
        e = np.zeros(mesh.n_elements)
        e[j] = 1
        assert evaluate(op, mesh, e, outside, mesh.barycenters[outside]) == 0.0


def test_evaluate_at_barycenters():
    mesh = gen_tri_mesh(SQUARE, 20)
    op = operator(mesh, 2)
    u = lambda x: np.sin(2 * np.pi * (x[..., 0] + x[..., 1])) * np.sin(2 * np.pi * x[..., 1])
    v = u(mesh.barycenters)
    C = op.coefficients(v)
    # the constant coefficient is the value at the barycenter
    assert np.max(np.abs(C[:, 0] - v)) == 0.0
    for k in (0, 123, 799):
        assert evaluate(op, mesh, v, k, mesh.barycenters[k]) == v[k]


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_polynomial_reproduction(m):
    mesh = gen_tri_mesh(SQUARE, 6)
    op = operator(mesh, m)
    for alpha in exponents(m, 2):
        q = lambda x: x[..., 0] ** alpha[0] * x[..., 1] ** alpha[1]
        C = op.coefficients(q(mesh.barycenters))
        for k in (0, 13, 50):
            x = mesh.vertices[mesh.elements[k]]
            np.testing.assert_allclose(evaluate(op, mesh, q(mesh.barycenters), k, x), q(x),
                                       atol=1e-10)
        assert C.shape == (mesh.n_elements, op.nb)


def test_unisolvence_error_names_element(tmp_path):
    path = tmp_path / "strip.poly"
    path.write_text("POLYMESH 2\n8 3\n0 0\n1 0\n2 0\n3 0\n0 1\n1 1\n2 1\n3 1\n"
                    "4 0 1 5 4\n4 1 2 6 5\n4 2 3 7 6\n")
    from rda.mesh import import_poly_mesh

    mesh = import_poly_mesh(path)
    with pytest.raises(UnisolvenceError) as info:
        build_operator(mesh, build_patches(mesh, 3), 1)
    assert info.value.element == 0
    with pytest.warns(UserWarning):
        op = build_operator(mesh, build_patches(mesh, 3), 1, allow_fallback=True)
    assert op.fallback_used and not op.rank_ok.any()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    mesh = gen_tri_mesh(SQUARE, 4)
    op = operator(mesh, 2)
    rng = np.random.default_rng(seed)
    v, w = rng.normal(size=(2, mesh.n_elements))
    np.testing.assert_allclose(op.R @ (a * v + b * w), a * (op.R @ v) + b * (op.R @ w),
                               atol=1e-12)


def test_lambda_degree_zero():
    mesh = gen_tri_mesh(SQUARE, 10)
    p = build_patch(mesh, 55, 8)
    assert lambda_estimate(p, 0, mesh) == pytest.approx(1.0)


def test_lambda_on_collocation_points():
    mesh = gen_tri_mesh(SQUARE, 10)
    p = build_patch(mesh, 55, 8)
    assert lambda_estimate(p, 1, mesh, samples=p.collocation) == pytest.approx(1.0)


def test_lambda_random_sampling_oracle():
    mesh = gen_tri_mesh(SQUARE, 10)
    k = int(np.argmin(np.linalg.norm(mesh.barycenters, axis=1)))
    p = build_patch(mesh, k, 10)
    lam = lambda_estimate(p, 2, mesh)
    assert 1.0 <= lam < 10.0
    from rda.recon import default_samples

    S = default_samples(mesh, p)
    c, h = mesh.barycenters[k], mesh.diameters[k]
    EI = monomials(p.collocation, c, h, 2)
    ES = monomials(S, c, h, 2)
    coeffs = np.random.default_rng(3).normal(size=(10_000, 6))
    ratio = np.abs(coeffs @ ES.T).max(axis=1) / np.abs(coeffs @ EI.T).max(axis=1)
    assert ratio.max() <= lam * (1 + 1e-8)


def test_lambda_rank_deficient():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    mesh = SimpleNamespace(dim=2, barycenters=pts, diameters=np.ones(3))
    p = ElementPatch(owner=0, members=np.arange(3), collocation=pts, depth=1)
    assert lambda_estimate(p, 1, mesh, samples=pts) == np.inf
