"""Independent brute-force references used by the test suite.

These are deliberately written as plain per-element summations, sharing no
code with the library paths they check.
"""

import math

import numpy as np


def mdct_direct(windowed_block, num_lines):
    """O(N^2) forward MDCT of one already-windowed block of 2M samples."""
    m = num_lines
    x = np.asarray(windowed_block, dtype=np.float64)
    assert x.shape == (2 * m,)
    out = np.empty(m)
    n = np.arange(2 * m)
    for k in range(m):
        out[k] = np.sum(x * np.cos(math.pi / m * (n + 0.5 + m / 2.0) * (k + 0.5)))
    return out


def imdct_direct(lines, num_lines):
    """O(N^2) inverse MDCT producing 2M samples (unwindowed)."""
    m = num_lines
    X = np.asarray(lines, dtype=np.float64)
    assert X.shape == (m,)
    out = np.empty(2 * m)
    k = np.arange(m)
    for n in range(2 * m):
        out[n] = (2.0 / m) * np.sum(X * np.cos(math.pi / m * (n + 0.5 + m / 2.0) * (k + 0.5)))
    return out


def laplace_nll(mu, s, y):
    """Scalar negative log-likelihood of a Laplacian, evaluated longhand."""
    return math.log(2.0 * s) + abs(mu - y) / s
