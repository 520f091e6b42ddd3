import numpy as np
import pytest

from fairprop.graph import build_graph


def random_graph(rng, n_max=30, p=0.3):
    """Random undirected graph with at least one edge."""
    n = int(rng.integers(2, n_max + 1))
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
    ]
    if not edges:
        edges = [(0, 1)]
    return build_graph(n, edges)


def dense_normalized_adjacency(n, edges):
    """Independent dense-matrix construction of D^{-1/2} (A + I) D^{-1/2}."""
    A = np.zeros((n, n))
    for i, j in edges:
        A[i, j] = 1.0
        A[j, i] = 1.0
    A_hat = A + np.eye(n)
    d_inv_sqrt = 1.0 / np.sqrt(A_hat.sum(axis=1))
    return d_inv_sqrt[:, None] * A_hat * d_inv_sqrt[None, :]


def finite_diff(f, x, step=1e-5):
    """Central finite differences of scalar-valued f at x, elementwise."""
    g = np.zeros_like(x, dtype=np.float64)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xp[idx] += step
        xm = x.copy()
        xm[idx] -= step
        g[idx] = (f(xp) - f(xm)) / (2.0 * step)
    return g


def assert_close_rel(actual, expected, rtol, afloor=1e-9):
    """Relative comparison with an absolute floor for near-zero entries."""
    actual = np.asarray(actual, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    diff = np.abs(actual - expected)
    tol = np.maximum(afloor, rtol * np.abs(expected))
    worst = (diff - tol).max()
    assert worst <= 0.0, (
        f"worst excess {worst:.3e}; max abs diff {diff.max():.3e}, rtol {rtol}"
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
