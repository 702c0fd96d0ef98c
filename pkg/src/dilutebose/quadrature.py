"""Composite Gauss-Legendre rules and deterministic reductions."""

import math

import numpy as np
from numpy.polynomial.legendre import leggauss


def gauss_panels(edges, n=20):
    """Nodes and weights of an n-point Gauss-Legendre rule on each panel.

    Parameters
    ----------
    edges : array_like
        Strictly increasing panel boundaries.
    n : int
        Nodes per panel.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must be strictly increasing")
    x, w = leggauss(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def det_sum(values):
    """Correctly rounded sum; independent of evaluation order, so bit-stable."""
    return math.fsum(np.asarray(values, dtype=float).ravel())


def angular_average(vhat, p, r, n=32):
    """(1/2) int_{-1}^{1} vhat(|p - r|) dmu for all pairs of radii.

    Returns an array of shape ``(len(p), len(r))``.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    mu, w = leggauss(n)
    pp = p[:, None] ** 2 + r[None, :] ** 2
    pr = 2.0 * p[:, None] * r[None, :]
    out = np.zeros(pp.shape)
    for m, wm in zip(mu, w):
        out += wm * vhat(np.sqrt(np.maximum(pp - m * pr, 0.0)))
    return 0.5 * out
