"""Built-in test problems with closed-form solutions.

Each problem is ``-div(A grad u) = f`` with Dirichlet data ``g = u``.  Source
terms are worked out by hand; the tests compare them against finite
differences of ``u``.
"""
import numpy as np

from .dgcore import EllipticProblem

TWO_PI = 2.0 * np.pi
SQUARE = ((-1.0, 1.0), (-1.0, 1.0))
CUBE = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))


def _xy(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def _trig_wave():
    def parts(x):
        X, Y = _xy(x)
        return (np.sin(TWO_PI * (X + Y)), np.cos(TWO_PI * (X + Y)),
                np.sin(TWO_PI * Y), np.cos(TWO_PI * Y), X, Y)

    def u(x):
        s, _, S, _, X, Y = parts(x)
        return s * S + X ** 2 * Y

    def grad(x):
        s, c, S, C, X, Y = parts(x)
        return np.stack([TWO_PI * c * S + 2 * X * Y,
                         TWO_PI * (c * S + s * C) + X ** 2], axis=-1)

    def f(x):
        s, c, S, C, _, Y = parts(x)
        return 3 * TWO_PI ** 2 * s * S - 2 * TWO_PI ** 2 * c * C - 2 * Y

    return u, grad, f


def _exp_sin():
    def u(x):
        X, Y = _xy(x)
        return np.exp(X ** 2 + Y ** 2) * np.sin(X * Y)

    def grad(x):
        X, Y = _xy(x)
        E, sn, cs = np.exp(X ** 2 + Y ** 2), np.sin(X * Y), np.cos(X * Y)
        return np.stack([E * (2 * X * sn + Y * cs), E * (2 * Y * sn + X * cs)], axis=-1)

    def f(x):
        X, Y = _xy(x)
        E, sn, cs = np.exp(X ** 2 + Y ** 2), np.sin(X * Y), np.cos(X * Y)
        return -E * ((3 * X ** 2 + 3 * Y ** 2 + 4) * sn + 8 * X * Y * cs)

    return u, grad, f


ANISO = np.diag([3.0, 0.1])


def _aniso():
    def u(x):
        X, Y = _xy(x)
        return np.sin(X / 3) + np.cos(10 * Y)

    def grad(x):
        X, Y = _xy(x)
        return np.stack([np.cos(X / 3) / 3, -10 * np.sin(10 * Y)], axis=-1)

    def f(x):
        X, Y = _xy(x)
        return np.sin(X / 3) / 3 + 10 * np.cos(10 * Y)

    return u, grad, f


def _sin_sum():
    def u(x):
        return np.sin(np.asarray(x, dtype=float).sum(axis=-1))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.repeat(np.cos(x.sum(axis=-1))[..., None], 3, axis=-1)

    def f(x):
        return 3 * np.sin(np.asarray(x, dtype=float).sum(axis=-1))

    return u, grad, f


def _power(k, dim, A):
    """``u = (1 + a . x)^k``: a polynomial of degree ``k``."""
    a = np.array([0.3, -0.7, 0.5][:dim])
    aAa = float(a @ A @ a)

    def u(x):
        return (1 + np.asarray(x, dtype=float) @ a) ** k

    def grad(x):
        t = 1 + np.asarray(x, dtype=float) @ a
        return (k * t ** (k - 1))[..., None] * a if k else np.zeros(t.shape + (dim,))

    def f(x):
        t = 1 + np.asarray(x, dtype=float) @ a
        return -k * (k - 1) * aAa * t ** (k - 2) if k >= 2 else np.zeros_like(t)

    return u, grad, f


_BUILTIN = {
    "example1": (2, SQUARE, np.eye(2), _trig_wave),
    "example2": (3, CUBE, np.eye(3), _sin_sum),
    "example5": (2, SQUARE, np.eye(2), _exp_sin),
    "example6": (2, SQUARE, ANISO, _aniso),
}
_ALIASES = {"example3": "example1", "example4": "example1", "example7": "example2"}


def problem_names():
    return sorted(set(_BUILTIN) | set(_ALIASES)) + ["manufactured:<k>"]


def get_problem(name, theta=-1, mu=15.0, dim=None):
    """Look up a problem by id.

    ``manufactured:<k>`` (or ``poly<k>``) is the degree-``k`` polynomial
    ``(1 + a . x)^k`` with ``A = I`` on the unit square or cube (``dim``
    defaults to 2).
    """
    key = name.lower()
    if key.startswith("manufactured") or key.startswith("poly"):
        tail = key.split(":", 1)[1] if ":" in key else key[4:] if key.startswith("poly") else ""
        try:
            k = int(tail)
        except ValueError:
            raise ValueError(f"manufactured problem needs a degree, e.g. 'manufactured:2' ({name!r})") from None
        if k < 0:
            raise ValueError("polynomial degree must be >= 0")
        d = 2 if dim is None else dim
        A = np.eye(d)
        u, grad, f = _power(k, d, A)
        domain = CUBE[:d] if d == 3 else ((0.0, 1.0), (0.0, 1.0))
        return EllipticProblem(d, A, f, u, u, grad, theta=theta, mu=mu, name=f"manufactured:{k}",
                               domain=domain)
    key = _ALIASES.get(key, key)
    if key not in _BUILTIN:
        raise ValueError(f"unknown problem {name!r}; choose from {problem_names()}")
    d, domain, A, make = _BUILTIN[key]
    if dim is not None and dim != d:
        raise ValueError(f"{name} is a {d}D problem (got dim={dim})")
    u, grad, f = make()
    return EllipticProblem(d, A, f, u, u, grad, theta=theta, mu=mu, name=name.lower(),
                           domain=domain)
