"""Chebyshev collocation grids, differentiation matrices and barycentric interpolation."""

import numpy as np


def cheb_grid(N, a, b):
    """Chebyshev-Gauss-Lobatto nodes on [a, b] (increasing) and the first-derivative matrix.

    N is the polynomial degree; N+1 nodes are returned.  The matrix is the
    standard spectral differentiation matrix with the negative-sum trick on
    the diagonal.
    """
    if N < 1:
        raise ValueError("need N >= 1")
    n = np.arange(N + 1)
    x = np.cos(np.pi * n / N)
    c = np.hstack([2.0, np.ones(N - 1), 2.0]) * (-1.0) ** n
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    # flip to increasing order and map [-1,1] -> [a,b]
    x = x[::-1]
    D = D[::-1, ::-1]
    nodes = a + (b - a) * (x + 1.0) / 2.0
    return nodes, D * (2.0 / (b - a))


def barycentric_weights(nodes):
    """Barycentric weights for an arbitrary (small) node set."""
    nodes = np.asarray(nodes)
    w = np.ones(len(nodes))
    for j in range(len(nodes)):
        d = nodes[j] - np.delete(nodes, j)
        w[j] = 1.0 / np.prod(d)
    return w


def barycentric_eval(nodes, values, x):
    """Evaluate the interpolating polynomial through (nodes, values) at points x.

    Stable second-form barycentric formula; exact at the nodes.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values)
    w = barycentric_weights(nodes)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=values.dtype)
    for i, xi in enumerate(x):
        diff = xi - nodes
        hit = np.nonzero(diff == 0.0)[0]
        if hit.size:
            out[i] = values[hit[0]]
            continue
        t = w / diff
        out[i] = (t @ values) / t.sum()
    return out if out.shape != (1,) else out[0]
