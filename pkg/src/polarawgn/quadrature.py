"""Composite Gauss-Legendre panel quadrature shared by the numeric modules."""

import math
from functools import lru_cache

import numpy as np


class NumericFailure(RuntimeError):
    """A numeric procedure failed to converge to its requested accuracy."""


@lru_cache(maxsize=8)
def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_grid(lo: float, hi: float, max_width: float, order: int = 16):
    """Nodes and weights of Gauss-Legendre panels covering [lo, hi].

    Panels are equal-width and never wider than ``max_width``.
    """
    if hi <= lo:
        raise ValueError(f"empty integration range [{lo}, {hi}]")
    k = max(1, math.ceil((hi - lo) / max_width))
    edges = np.linspace(lo, hi, k + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    halves = 0.5 * (edges[1:] - edges[:-1])
    x, w = _gl_nodes(order)
    nodes = (centers[:, None] + halves[:, None] * x[None, :]).ravel()
    weights = (halves[:, None] * w[None, :]).ravel()
    return nodes, weights


def cell_grid(edges, order: int = 16):
    """Gauss-Legendre nodes/weights with one panel per cell given by ``edges``."""
    edges = np.asarray(edges, dtype=np.float64)
    centers = 0.5 * (edges[:-1] + edges[1:])
    halves = 0.5 * (edges[1:] - edges[:-1])
    x, w = _gl_nodes(order)
    nodes = (centers[:, None] + halves[:, None] * x[None, :]).ravel()
    weights = (halves[:, None] * w[None, :]).ravel()
    return nodes, weights
