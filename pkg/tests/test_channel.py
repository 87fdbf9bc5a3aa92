import math

import numpy as np
import pytest
from scipy import integrate

from polarawgn import (
    LLR_CLAMP,
    LevelContext,
    build_constellation,
    channel_capacity,
    level_llr,
    level_mutual_information,
    mutual_information,
    transmit,
)
from polarawgn.constellation import Constellation


class ZeroNoise:
    """Stub generator whose normal draws are all zero."""

    def standard_normal(self, shape):
        return np.zeros(shape)


def synthetic(amplitudes, power=1.0):
    amps = np.asarray(amplitudes, dtype=np.float64)
    n = len(amps)
    return Constellation(
        n=n, m=n.bit_length() - 1, power=power, gamma=0.0,
        shaping_variance=power, amplitudes=amps, negative_origin=None,
    )


# ---------------------------------------------------------------- transmit


def test_transmit_zero_noise_stub():
    x = np.array([0.3, -1.2, 4.0])
    assert np.array_equal(transmit(x, ZeroNoise()), x)


def test_transmit_noise_moments():
    rng = np.random.default_rng(2024)
    x = np.zeros(1_000_000)
    z = transmit(x, rng) - x
    assert abs(z.mean()) <= 4e-3
    assert abs(z.var() - 1.0) <= 0.006


def test_transmit_rejects_non_finite():
    with pytest.raises(ValueError):
        transmit([math.inf], np.random.default_rng(0))


# ---------------------------------------------------------------- capacity


def test_capacity_values():
    assert channel_capacity(1.0) == 0.5
    assert channel_capacity(3.0) == 1.0
    assert channel_capacity(0.0) == 0.0
    with pytest.raises(ValueError):
        channel_capacity(-0.5)


# ---------------------------------------------------------------- level llr


def test_level_llr_symmetry_at_origin():
    c = build_constellation(4, 1.0, 0.0)
    assert level_llr(0.0, LevelContext(1, ()), c) == 0.0


def test_level_llr_two_term_ratio():
    # at n=4 and level 2 each coset holds a single point, so the value is a
    # plain density ratio
    c = build_constellation(4, 1.0, 0.0)
    y = 0.34
    a = float(c.amplitudes[1])
    expected = -0.5 * y * y + 0.5 * (y - a) ** 2
    assert abs(level_llr(y, LevelContext(2, (0,)), c) - expected) < 1e-12
    b = float(c.amplitudes[3])
    expected = -0.5 * (y - 0.0) ** 2 + 0.5 * (y - b) ** 2
    assert abs(level_llr(y, LevelContext(2, (1,)), c) - expected) < 1e-12


def test_level_llr_sign_flips_with_y():
    c = build_constellation(4, 1.0, 0.0)
    for y in (0.1, 0.7, 2.3):
        assert level_llr(-y, LevelContext(1, ()), c) == pytest.approx(
            -level_llr(y, LevelContext(1, ()), c), abs=1e-12
        )


def test_level_llr_saturates_at_clamp():
    c = build_constellation(8, 100.0, 0.0)
    assert level_llr(1e3, LevelContext(1, ()), c) == -LLR_CLAMP
    assert level_llr(-1e3, LevelContext(1, ()), c) == LLR_CLAMP


def test_level_llr_validates_context():
    c = build_constellation(4, 1.0, 0.0)
    with pytest.raises(ValueError):
        level_llr(0.0, LevelContext(3, (0, 0)), c)
    with pytest.raises(ValueError):
        level_llr(0.0, LevelContext(2, ()), c)


def test_level_llr_agrees_with_compiled_path():
    from polarawgn import kernels

    assert kernels.LLR_CLAMP == LLR_CLAMP
    c = build_constellation(16, 1.0, 0.0)
    rng = np.random.default_rng(8)
    dens = np.empty((16, 16))
    out = np.empty(16)
    for _ in range(20):
        y = rng.standard_normal(16) * 1.5
        kernels.density_table(y, np.ascontiguousarray(c.amplitudes), dens)
        for level in range(1, c.m + 1):
            prefixes = rng.integers(0, 2 ** (level - 1), 16)
            kernels.coset_llrs(dens, prefixes, c.m, level, out)
            for k in (0, 5, 11):
                bits = tuple(
                    (int(prefixes[k]) >> (level - 2 - j)) & 1 for j in range(level - 1)
                )
                ref = level_llr(float(y[k]), LevelContext(level, bits), c)
                assert abs(out[k] - ref) < 1e-10


# ---------------------------------------------------------------- mutual information


def test_mi_degenerate_constellation_is_zero():
    c = synthetic([0.0, 0.0, 0.0, 0.0])
    assert mutual_information(c) == 0.0


def test_mi_binary_antipodal_matches_monte_carlo():
    c = synthetic([-1.0, 1.0])
    value = mutual_information(c)
    rng = np.random.default_rng(11)
    x = rng.choice([-1.0, 1.0], size=10_000_000)
    y = x + rng.standard_normal(x.shape)
    # I = E[log2 p(y|x) - log2 p(y)]
    py_x = np.exp(-0.5 * (y - x) ** 2)
    py = 0.5 * (np.exp(-0.5 * (y - 1) ** 2) + np.exp(-0.5 * (y + 1) ** 2))
    samples = np.log2(py_x / py)
    mc = samples.mean()
    stderr = samples.std() / math.sqrt(len(samples))
    assert abs(value - mc) <= 3 * stderr


def test_mi_increases_with_power():
    vals = [mutual_information(build_constellation(64, P, 0.0)) for P in (0.5, 1.0, 2.0)]
    assert vals[0] < vals[1] < vals[2]


def test_mi_below_capacity():
    for n, P in ((16, 1.0), (64, 4.0)):
        c = build_constellation(n, P, 0.0)
        assert 0.0 < mutual_information(c) < channel_capacity(P)


def test_chain_rule():
    for n in (4, 16, 64):
        c = build_constellation(n, 1.0, 0.0)
        total = mutual_information(c)
        levels = [level_mutual_information(c, i) for i in range(1, c.m + 1)]
        assert all(0.0 <= v <= 1.0 for v in levels)
        assert abs(sum(levels) - total) <= 1e-3


def test_level_mi_against_quad_oracle():
    c = build_constellation(4, 1.0, 0.0)

    def oracle(level):
        m, n_prefix = c.m, 2 ** (level - 1)
        coset = 2 ** (c.m - level)
        total = 0.0
        for p in range(n_prefix):
            base = p << (m - level + 1)
            a0 = c.amplitudes[base : base + coset]
            a1 = c.amplitudes[base + coset : base + 2 * coset]

            def dens(y, amps):
                return float(
                    np.mean(np.exp(-0.5 * (y - amps) ** 2)) / math.sqrt(2 * math.pi)
                )

            def integrand(y):
                q0, q1 = dens(y, a0), dens(y, a1)
                mix = 0.5 * (q0 + q1)
                out = 0.0
                if q0 > 0:
                    out += 0.5 * q0 * math.log2(q0 / mix)
                if q1 > 0:
                    out += 0.5 * q1 * math.log2(q1 / mix)
                return out

            val, _ = integrate.quad(integrand, -12, 12, limit=200)
            total += val / n_prefix
        return total

    for level in (1, 2):
        assert abs(level_mutual_information(c, level) - oracle(level)) < 1e-5


def test_level_mi_validates_level():
    c = build_constellation(4, 1.0, 0.0)
    with pytest.raises(ValueError):
        level_mutual_information(c, 0)
    with pytest.raises(ValueError):
        level_mutual_information(c, 3)
