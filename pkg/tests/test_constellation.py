import json
import math

import numpy as np
import pytest
from scipy.special import erfc, ndtri

from polarawgn import (
    BETA,
    build_constellation,
    gaussian_quantile,
    outage_probability_bound,
    quantize,
    symbol_prior,
)
from polarawgn.constellation import (
    constellation_from_json,
    constellation_to_json,
)


def normal_cdf(t, variance=1.0):
    return 0.5 * erfc(-t / math.sqrt(2.0 * variance))


# ---------------------------------------------------------------- quantile


def test_quantile_median_is_exactly_zero():
    assert gaussian_quantile(0.5, 1.0) == 0.0
    assert gaussian_quantile(0.5, 17.3) == 0.0


def test_quantile_known_values():
    assert abs(gaussian_quantile(0.975, 1.0) - 1.959963984540054) < 1e-9
    assert abs(gaussian_quantile(0.25, 4.0) - (-1.3489795003921636)) < 1e-9
    # scaling property against the unit-variance evaluation
    assert abs(gaussian_quantile(0.25, 4.0) + 2 * gaussian_quantile(0.75, 1.0)) < 1e-12


def test_quantile_cdf_residual_below_tolerance():
    for p in np.concatenate([np.linspace(1e-5, 1 - 1e-5, 401), [1 / 4096, 1 - 1 / 4096]]):
        t = gaussian_quantile(float(p), 2.5)
        assert abs(normal_cdf(t, 2.5) - p) <= 1e-12


def test_quantile_odd_symmetry():
    for p in (0.01, 0.1, 0.3, 0.499, 1 / 1024):
        assert abs(gaussian_quantile(p, 1.0) + gaussian_quantile(1 - p, 1.0)) <= 1e-12


def test_quantile_matches_scipy_reference():
    ps = np.linspace(1e-6, 1 - 1e-6, 999)
    mine = np.array([gaussian_quantile(float(p), 1.0) for p in ps])
    assert np.max(np.abs(mine - ndtri(ps))) < 1e-11


def test_quantile_rejects_bad_arguments():
    for p in (0.0, 1.0, -0.3, 1.7):
        with pytest.raises(ValueError):
            gaussian_quantile(p, 1.0)
    with pytest.raises(ValueError):
        gaussian_quantile(0.3, 0.0)


# ---------------------------------------------------------------- build


def test_reference_four_point_constellation():
    c = build_constellation(4, 1.0, 0.0)
    assert abs(c.shaping_variance - 0.25478332449471874) < 1e-15
    a = 0.3404558918804913
    assert np.allclose(c.amplitudes, [0.0, -a, 0.0, a], atol=1e-14)
    assert c.negative_origin == 0
    # independent recomputation of the quantile
    ref = math.sqrt(c.shaping_variance) * ndtri(0.25)
    assert abs(c.amplitudes[1] - ref) < 1e-12


def test_shaping_variance_formula():
    for n, P, g in [(8, 0.5, 0.0), (64, 4.0, 0.5), (256, 1.0, 0.8)]:
        c = build_constellation(n, P, g)
        assert abs(c.shaping_variance - P * (1 - n ** (-(1 - g) / BETA))) < 1e-14


def test_labels_are_a_bijection_with_two_origins():
    for n in (4, 16, 128):
        c = build_constellation(n, 1.0, 0.0)
        assert len(c.amplitudes) == n
        zero_labels = np.flatnonzero(c.amplitudes == 0.0)
        assert zero_labels.tolist() == [0, n // 2]
        # the nonzero amplitudes are all distinct
        nonzero = c.amplitudes[c.amplitudes != 0.0]
        assert len(np.unique(nonzero)) == n - 2


def test_point_set_symmetric_about_zero():
    c = build_constellation(32, 2.0, 0.3)
    assert np.array_equal(np.sort(c.amplitudes), np.sort(-c.amplitudes))


def test_quantile_positions_match_definition():
    c = build_constellation(16, 1.0, 0.5)
    for ell in range(1, 16):
        assert abs(normal_cdf(c.amplitudes[ell], c.shaping_variance) - ell / 16) <= 1e-12


def test_power_conditions_hold():
    for n in (4, 32, 256):
        for P in (0.5, 1.0, 4.0):
            for g in (0.0, 0.5, 0.8):
                c = build_constellation(n, P, g)
                mean_sq = float(np.mean(c.amplitudes**2))
                assert mean_sq <= P * (1 - n ** (-(1 - g) / BETA))
                assert float(np.sum(c.distinct_amplitudes**2)) / n <= P


def test_build_rejects_bad_arguments():
    with pytest.raises(ValueError):
        build_constellation(2, 1.0, 0.0)
    with pytest.raises(ValueError):
        build_constellation(100, 1.0, 0.0)
    with pytest.raises(ValueError):
        build_constellation(16, 0.0, 0.0)
    with pytest.raises(ValueError):
        build_constellation(16, 1.0, 1.0)


# ---------------------------------------------------------------- quantize


def test_quantize_reference_points():
    c = build_constellation(4, 1.0, 0.0)
    a = c.amplitudes[3]
    assert quantize(0.0, c) == 0.0
    assert quantize(0.2, c) == 0.0
    assert quantize(0.5, c) == a
    assert quantize(-10.0, c) == -a
    assert quantize(a, c) == a


def test_quantize_never_grows_magnitude():
    c = build_constellation(64, 1.0, 0.0)
    x = np.random.default_rng(3).normal(0.0, math.sqrt(c.shaping_variance), 100_000)
    g = quantize(x, c)
    assert np.all(np.abs(g) <= np.abs(x))
    assert set(np.unique(g)) <= set(c.distinct_amplitudes)


def test_quantize_idempotent_and_monotone():
    c = build_constellation(16, 1.0, 0.0)
    x = np.linspace(-3, 3, 2001)
    g = quantize(x, c)
    assert np.array_equal(quantize(g, c), g)
    assert np.all(np.diff(g) >= 0)


def test_quantize_rejects_non_finite():
    c = build_constellation(4, 1.0, 0.0)
    with pytest.raises(ValueError):
        quantize(math.inf, c)
    with pytest.raises(ValueError):
        quantize(math.nan, c)


# ---------------------------------------------------------------- prior


def test_symbol_prior_mass():
    c = build_constellation(8, 1.0, 0.0)
    prior = symbol_prior(c)
    assert len(prior) == 7
    assert abs(sum(prior.values()) - 1.0) < 1e-15
    assert prior[0.0] == 2 / 8
    assert sum(1 for v in prior.values() if v == 1 / 8) == 6


def test_symbol_prior_four_points():
    c = build_constellation(4, 1.0, 0.0)
    prior = symbol_prior(c)
    assert prior[0.0] == 0.5
    a = float(c.amplitudes[3])
    assert prior[a] == 0.25 and prior[-a] == 0.25


# ---------------------------------------------------------------- outage bound


def test_outage_bound_value():
    expected = math.exp(3.0 - 256 ** (0.5 - 1.0 / BETA))
    got = outage_probability_bound(256, 0.0)
    assert got == expected
    assert abs(got - 0.144485) < 1e-6


def test_outage_bound_monotone_decreasing():
    vals = [outage_probability_bound(n, 0.0) for n in (64, 128, 256, 512, 1024, 4096)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_outage_bound_near_gamma_one():
    # as gamma approaches 1 the exponent approaches sqrt(n)
    got = outage_probability_bound(1024, 0.999)
    ref = math.exp(3.0 - 1024 ** (0.5 - 0.001 / BETA))
    assert got == ref
    assert abs(got - math.exp(3.0) * math.exp(-math.sqrt(1024))) / got < 0.05


def test_outage_bound_caps_trivial_values():
    with pytest.warns(UserWarning):
        assert outage_probability_bound(4, 0.0) == 1.0


# ---------------------------------------------------------------- serialization


def test_json_round_trip_is_exact():
    c = build_constellation(32, 2.5, 0.4)
    text = constellation_to_json(c)
    back = constellation_from_json(text)
    assert back.n == c.n and back.m == c.m
    assert back.power == c.power and back.gamma == c.gamma
    assert back.shaping_variance == c.shaping_variance
    assert np.array_equal(back.amplitudes, c.amplitudes)
    assert back.negative_origin == c.negative_origin


def test_json_document_shape():
    c = build_constellation(4, 1.0, 0.0)
    obj = json.loads(constellation_to_json(c))
    assert set(obj) == {"n", "m", "P", "gamma", "shaping_variance", "points"}
    assert len(obj["points"]) == 4
    assert sum(1 for p in obj["points"] if p["negative_origin"]) == 1
    assert {p["label_bits"] for p in obj["points"]} == {"00", "01", "10", "11"}


def test_json_rejects_duplicate_labels():
    c = build_constellation(4, 1.0, 0.0)
    obj = json.loads(constellation_to_json(c))
    obj["points"][1]["label_bits"] = "00"
    with pytest.raises(ValueError):
        constellation_from_json(json.dumps(obj))
