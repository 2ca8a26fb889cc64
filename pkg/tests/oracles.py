"""Independent reference computations used by the tests.

Nothing here shares code with the package beyond plain numpy.
"""

import numpy as np


def swap_matrix(i, j, c):
    K = np.zeros((c, c))
    for r in range(c):
        src = j if r == i else i if r == j else r
        K[r, src] = 1.0
    return K


def brute_force_M(T, priors):
    """sum_i pi_i sum_j T_ij K_{i->j}^T with every K materialized."""
    c = len(priors)
    M = np.zeros((c, c))
    for i in range(c):
        for j in range(c):
            M += priors[i] * T[i][j] * swap_matrix(i, j, c).T
    return M


def naive_risk_loop(W, X, Y):
    return sum(float(np.sum((y - W.T @ x) ** 2)) for x, y in zip(X, Y)) / len(X)


def finite_difference_gradient(f, W, h=1e-6):
    G = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += h
        Wm[idx] -= h
        G[idx] = (f(Wp) - f(Wm)) / (2 * h)
    return G


def random_instance(rng, n_max=1000, d_max=20, c_max=10):
    n = int(rng.integers(1, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    c = int(rng.integers(2, c_max + 1))
    X = rng.normal(size=(n, d)) * rng.uniform(0.1, 3.0)
    classes = rng.integers(0, c, n)
    W = rng.normal(size=(d, c))
    return X, classes, c, W


def random_stochastic(rng, c):
    return rng.dirichlet(np.ones(c) * rng.uniform(0.2, 3.0), size=c)
