"""Binary polarization transform: the m-fold Kronecker power of [[1,0],[1,1]].

The transform is applied as a row vector times the matrix, with no
bit-reversal permutation anywhere: the output index order is the plain
Kronecker-power order, and the matrix is its own inverse over GF(2).
"""

import numpy as np


def _check_power_of_two(n: int) -> None:
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"word length must be a positive power of two, got {n}")


def transform_rows(u: np.ndarray) -> np.ndarray:
    """Apply the transform to each row of a (..., n) array of bits.

    No validation; internal fast path. Returns a fresh uint8 array.
    """
    x = np.array(u, dtype=np.uint8, copy=True)
    n = x.shape[-1]
    t = 1
    while t < n:
        # butterfly over the bit index of weight t: positions k (bit clear)
        # absorb positions k+t (bit set)
        v = x.reshape(x.shape[:-1] + (n // (2 * t), 2, t))
        v[..., 0, :] ^= v[..., 1, :]
        t <<= 1
    return x


def polar_transform(u) -> np.ndarray:
    """Multiply a length-n bit word by the polarization matrix over GF(2).

    n must be a power of two. Runs as log2(n) in-place butterfly stages,
    equivalent to the explicit Kronecker-power matrix product.
    """
    u = np.asarray(u)
    if u.ndim != 1:
        raise ValueError("expected a one-dimensional bit word")
    _check_power_of_two(u.shape[0])
    if not np.isin(u, (0, 1)).all():
        raise ValueError("word elements must be 0 or 1")
    return transform_rows(u)


def polar_inverse(x) -> np.ndarray:
    """Inverse transform; identical to polar_transform (the matrix is an involution)."""
    return polar_transform(x)
