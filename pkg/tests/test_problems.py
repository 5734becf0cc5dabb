import numpy as np
import pytest

from rda.problems import get_problem, problem_names

NAMES = ["example1", "example2", "example3", "example4", "example5", "example6", "example7",
         "manufactured:0", "manufactured:1", "manufactured:3", "poly4"]


def sample(prob, n=20, seed=0):
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in prob.domain])
    hi = np.array([b[1] for b in prob.domain])
    return rng.uniform(lo, hi, size=(n, prob.dim))


def fd_gradient(fn, x, eps=1e-5):
    g = np.empty_like(x)
    for i in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[i] = eps
        g[:, i] = (fn(x + e) - fn(x - e)) / (2 * eps)
    return g


@pytest.mark.parametrize("name", NAMES)
def test_gradient_matches_finite_differences(name):
    prob = get_problem(name)
    x = sample(prob)
    np.testing.assert_allclose(prob.grad_exact(x), fd_gradient(prob.u_exact, x),
                               rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("name", NAMES)
def test_source_matches_finite_differences(name):
    prob = get_problem(name)
    x = sample(prob)
    eps = 1e-5
    A = prob.coefficient(x)
    div = np.zeros(len(x))
    for i in range(prob.dim):
        e = np.zeros(prob.dim)
        e[i] = eps
        flux_p = np.einsum("nij,nj->ni", A, prob.grad_exact(x + e))
        flux_m = np.einsum("nij,nj->ni", A, prob.grad_exact(x - e))
        div += (flux_p[:, i] - flux_m[:, i]) / (2 * eps)
    scale = max(1.0, np.abs(prob.f(x)).max())
    np.testing.assert_allclose(prob.f(x), -div, atol=1e-5 * scale)


def test_boundary_data_is_exact_solution():
    prob = get_problem("example5")
    x = sample(prob)
    np.testing.assert_array_equal(prob.g(x), prob.u_exact(x))


def test_example_domains_and_coefficients():
    assert get_problem("example1").domain == ((-1.0, 1.0), (-1.0, 1.0))
    assert get_problem("example2").dim == 3
    np.testing.assert_array_equal(get_problem("example6").A, np.diag([3.0, 0.1]))
    assert get_problem("example4", theta=1, mu=20).theta == 1
    assert get_problem("example4", mu=20).mu == 20


def test_example1_formula():
    u = get_problem("example1").u_exact
    x = np.array([[0.3, -0.2]])
    expected = np.sin(2 * np.pi * 0.1) * np.sin(2 * np.pi * -0.2) + 0.09 * -0.2
    assert u(x)[0] == pytest.approx(expected, rel=1e-14)


def test_manufactured_3d():
    prob = get_problem("manufactured:2", dim=3)
    assert prob.dim == 3 and len(prob.domain) == 3


@pytest.mark.parametrize("name,dim", [("nope", None), ("manufactured:x", None),
                                      ("manufactured:-1", None), ("example2", 2)])
def test_bad_names(name, dim):
    with pytest.raises(ValueError):
        get_problem(name, dim=dim)


def test_problem_names():
    names = problem_names()
    assert "example1" in names and "manufactured:<k>" in names
