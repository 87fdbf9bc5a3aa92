"""The unit-noise additive Gaussian channel and its per-level binary views.

Transmitted amplitudes are observed through y = x + z with z standard
normal. Viewing the m label bits of the constellation as m users of a
binary-input multiple-access channel, each level i sees the channel
conditioned on the bits of levels 1..i-1 at the same symbol; level LLRs
and per-level mutual informations are computed against that conditioning.
"""

import math
from typing import NamedTuple

import numpy as np

from .constellation import Constellation, symbol_prior
from .quadrature import NumericFailure, panel_grid

LLR_CLAMP = 60.0

_TAIL = 10.0          # integration range extends this far beyond the extreme amplitudes
_PANEL_WIDTH = 0.25
_MAX_REFINEMENTS = 6
_LOG2_2PIE = math.log2(2.0 * math.pi * math.e)


class LevelContext(NamedTuple):
    """Conditioning state of one symbol at one level: bits of earlier levels."""

    level: int
    prev_bits: tuple


def transmit(symbols, rng: np.random.Generator) -> np.ndarray:
    """Send amplitudes through the channel: y_k = x_k + z_k, z_k iid standard normal.

    Deterministic given the generator state.
    """
    x = np.asarray(symbols, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("transmit requires finite symbol amplitudes")
    return x + rng.standard_normal(x.shape)


def channel_capacity(power: float) -> float:
    """Capacity 0.5*log2(1+P) in bits per channel use."""
    if power < 0:
        raise ValueError(f"power must be nonnegative, got {power}")
    return 0.5 * math.log2(1.0 + power)


def _coset_split(c: Constellation, level: int):
    """Amplitudes grouped as (prefix value, bit value, coset member)."""
    return c.amplitudes.reshape(2 ** (level - 1), 2, 2 ** (c.m - level))


def level_llr(y: float, ctx: LevelContext, c: Constellation) -> float:
    """Log-likelihood ratio of bit ``ctx.level`` at one received sample.

    log of [sum of N(y; a, 1) over labels extending ctx with bit 0] over
    [the same sum with bit 1], evaluated with max-subtraction in the log
    domain and clamped to +/-LLR_CLAMP.
    """
    i = ctx.level
    if not 1 <= i <= c.m:
        raise ValueError(f"level must lie in 1..{c.m}, got {i}")
    if len(ctx.prev_bits) != i - 1:
        raise ValueError(f"expected {i - 1} conditioning bits, got {len(ctx.prev_bits)}")
    prefix = 0
    for b in ctx.prev_bits:
        prefix = (prefix << 1) | int(b)
    groups = _coset_split(c, i)[prefix]  # (2, coset_size)
    e = -0.5 * (y - groups) ** 2
    mx = e.max(axis=1, keepdims=True)
    lse = mx[:, 0] + np.log(np.exp(e - mx).sum(axis=1))
    return float(np.clip(lse[0] - lse[1], -LLR_CLAMP, LLR_CLAMP))


def _density_matrix(nodes: np.ndarray, amps: np.ndarray) -> np.ndarray:
    d = nodes[:, None] - amps[None, :]
    return np.exp(-0.5 * d * d) / math.sqrt(2.0 * math.pi)


def _entropy_bits(weights: np.ndarray, density: np.ndarray) -> float:
    # differential entropy -int p log2 p for p given on the quadrature grid
    p = density
    term = np.where(p > 0.0, p * np.log2(p, where=p > 0.0, out=np.zeros_like(p)), 0.0)
    return float(-(weights * term).sum())


def _grid_for(c: Constellation, halving: int):
    lo = float(c.amplitudes.min()) - _TAIL
    hi = float(c.amplitudes.max()) + _TAIL
    return panel_grid(lo, hi, _PANEL_WIDTH / 2**halving)


def mutual_information(c: Constellation) -> float:
    """I(X;Y) in bits for amplitudes drawn from the constellation prior.

    Composite Gauss-Legendre quadrature over the output density, panels
    refined until two successive evaluations agree within 1e-6 bits.
    """
    prior = symbol_prior(c)
    amps = np.array(sorted(prior))
    probs = np.array([prior[a] for a in amps])
    prev = None
    for halving in range(_MAX_REFINEMENTS):
        nodes, weights = _grid_for(c, halving)
        py = _density_matrix(nodes, amps) @ probs
        value = _entropy_bits(weights, py) - 0.5 * _LOG2_2PIE
        if prev is not None and abs(value - prev) <= 1e-6:
            return max(value, 0.0)
        prev = value
    raise NumericFailure("mutual information quadrature did not stabilize to 1e-6 bits")


def level_mutual_information(c: Constellation, level: int) -> float:
    """Conditional mutual information of bit ``level`` given all earlier levels' bits.

    Exact average over the 2^(level-1) equiprobable prefixes, one
    quadrature grid shared by every coset density.
    """
    if not 1 <= level <= c.m:
        raise ValueError(f"level must lie in 1..{c.m}, got {level}")
    n_prefix = 2 ** (level - 1)
    coset = 2 ** (c.m - level)
    prev = None
    for halving in range(_MAX_REFINEMENTS):
        nodes, weights = _grid_for(c, halving)
        dens = _density_matrix(nodes, c.amplitudes)  # (grid, n) in label order
        blocks = dens.reshape(len(nodes), n_prefix, 2, coset).mean(axis=3)
        value = 0.0
        for p in range(n_prefix):
            q0 = blocks[:, p, 0]
            q1 = blocks[:, p, 1]
            mix = 0.5 * (q0 + q1)
            value += _entropy_bits(weights, mix) - 0.5 * (
                _entropy_bits(weights, q0) + _entropy_bits(weights, q1)
            )
        value /= n_prefix
        if prev is not None and abs(value - prev) <= 1e-6:
            return value
        prev = value
    raise NumericFailure("level mutual information quadrature did not stabilize")
