"""Scaled, centered monomials ``((x - x_K) / h_K)^alpha`` in graded order."""
from functools import lru_cache
from math import comb

import numpy as np


def dim_poly(m, d):
    return comb(m + d, d)


@lru_cache(maxsize=None)
def _exponents(m, d):
    out = []
    for deg in range(m + 1):
        if d == 2:
            for j in range(deg + 1):
                out.append((deg - j, j))
        else:
            for i in range(deg, -1, -1):
                for j in range(deg - i, -1, -1):
                    out.append((i, j, deg - i - j))
    return np.array(out, dtype=np.int64).reshape(-1, d)


def exponents(m, d):
    """Exponent table of shape ``(dim P_m, d)``; row 0 is the constant."""
    return _exponents(m, d)


def _powers(t, m):
    # t: (..., d) -> (..., d, m + 1)
    P = np.empty(t.shape + (m + 1,))
    P[..., 0] = 1.0
    for k in range(1, m + 1):
        P[..., k] = P[..., k - 1] * t
    return P


def monomials(x, center, scale, m):
    """Evaluate the basis at points ``x`` (``(..., d)``) -> ``(..., nb)``.

    ``center`` and ``scale`` broadcast against the leading axes of ``x``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    t = (x - center) / np.asarray(scale)[..., None]
    P = _powers(t, m)
    E = exponents(m, d)
    out = P[..., 0, E[:, 0]]
    for i in range(1, d):
        out = out * P[..., i, E[:, i]]
    return out


def monomial_grads(x, center, scale, m):
    """Gradients of the basis at ``x``: shape ``(..., nb, d)``."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    scale = np.asarray(scale, dtype=float)
    t = (x - center) / scale[..., None]
    P = _powers(t, m)
    E = exponents(m, d)
    vals = [P[..., i, E[:, i]] for i in range(d)]
    grads = []
    for i in range(d):
        em1 = np.maximum(E[:, i] - 1, 0)
        g = E[:, i] * P[..., i, em1]
        for j in range(d):
            if j != i:
                g = g * vals[j]
        grads.append(g / scale[..., None])
    return np.stack(grads, axis=-1)
