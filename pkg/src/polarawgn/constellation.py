"""Gaussian-quantile constellations with a duplicated origin.

A size-n constellation places its n-1 distinct amplitudes at the ell/n
quantiles of a centered Gaussian whose variance is shrunk below the power
budget by the shaping schedule P*(1 - n^{-(1-gamma)/beta}); one extra label
(the negative origin) duplicates amplitude zero so that labels are exactly
the 2^m binary words of m = log2(n) levels and the label distribution is
uniform while the induced real-amplitude distribution puts mass 2/n at 0.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

BETA = 4.714  # scaling constant of the shaping schedule and selection thresholds

_SQRT2 = math.sqrt(2.0)


def _std_normal_cdf(t):
    return 0.5 * erfc(-np.asarray(t, dtype=np.float64) / _SQRT2)


def _rational_guess(p):
    # Abramowitz & Stegun 26.2.23 lower-tail approximation, |error| < 4.5e-4.
    t = np.sqrt(-2.0 * np.log(p))
    num = 2.515517 + t * (0.802853 + t * 0.010328)
    den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))
    return -(t - num / den)


def _std_normal_quantile_lower(p):
    """Quantile for p in (0, 0.5]: A&S initial guess refined by bisection on erfc."""
    p = np.asarray(p, dtype=np.float64)
    guess = _rational_guess(p)
    lo = guess - 0.01
    hi = guess + 0.01
    # widen the rare bracket failures to a range covering every double in (0,1)
    bad = (_std_normal_cdf(lo) > p) | (_std_normal_cdf(hi) < p)
    if np.any(bad):
        lo = np.where(bad, -42.0, lo)
        hi = np.where(bad, 0.0, hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = _std_normal_cdf(mid) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def standard_normal_quantile(p):
    """Vectorized inverse cdf of the standard normal, odd-symmetric by construction."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    lower = p < 0.5
    upper = p > 0.5
    if np.any(lower):
        out[lower] = _std_normal_quantile_lower(p[lower])
    if np.any(upper):
        out[upper] = -_std_normal_quantile_lower(1.0 - p[upper])
    return out


def gaussian_quantile(p: float, variance: float = 1.0) -> float:
    """Inverse cdf of N(0, variance), accurate to 1e-12 in cdf value.

    Bisection on a complementary-error-function evaluation of the cdf,
    bracketed by a fast rational approximation.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"probability must lie strictly inside (0, 1), got {p}")
    if variance <= 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    return float(math.sqrt(variance) * standard_normal_quantile(np.float64(p)))


@dataclass(frozen=True)
class Constellation:
    """Immutable label-to-amplitude map plus its shaping parameters.

    ``amplitudes[label]`` is the real amplitude of each of the n labels;
    label value ell in 1..n-1 (natural binary, most significant bit =
    level 1) sits at the ell/n Gaussian quantile, and label
    ``negative_origin`` is the duplicated origin with amplitude 0.
    """

    n: int
    m: int
    power: float
    gamma: float
    shaping_variance: float
    amplitudes: np.ndarray = field(repr=False)
    negative_origin: int | None = 0

    def __post_init__(self):
        self.amplitudes.setflags(write=False)

    @property
    def distinct_amplitudes(self) -> np.ndarray:
        """The n-1 distinct reals in ascending order (origin included once)."""
        return self.amplitudes[1:]

    def label_bits(self, label: int) -> str:
        return format(label, f"0{self.m}b")


def build_constellation(n: int, power: float, gamma: float) -> Constellation:
    """Build the size-n constellation for power budget ``power`` and shaping knob gamma.

    Parameters
    ----------
    n : power of two, at least 4.
    power : positive symbol-energy budget.
    gamma : shaping exponent knob in [0, 1); larger gamma shrinks the
        shaping variance less aggressively.

    The distinct amplitudes are the ell/n quantiles, ell = 1..n-1, of
    N(0, power*(1 - n^{-(1-gamma)/beta})); the set is exactly symmetric
    about 0 and its mean square under uniform labels stays below the
    shaping variance.
    """
    if n < 4 or (n & (n - 1)) != 0:
        raise ValueError(f"constellation size must be a power of two >= 4, got {n}")
    if power <= 0:
        raise ValueError(f"power budget must be positive, got {power}")
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    m = n.bit_length() - 1
    variance = power * (1.0 - n ** (-(1.0 - gamma) / BETA))
    sigma = math.sqrt(variance)
    half = np.arange(1, n // 2) / n
    lower = sigma * _std_normal_quantile_lower(half)
    amps = np.empty(n, dtype=np.float64)
    amps[0] = 0.0  # negative origin
    amps[1 : n // 2] = lower
    amps[n // 2] = 0.0
    amps[n // 2 + 1 :] = -lower[::-1]  # mirror: exact symmetry about 0
    return Constellation(
        n=n, m=m, power=float(power), gamma=float(gamma),
        shaping_variance=variance, amplitudes=amps, negative_origin=0,
    )


def quantize(x, c: Constellation):
    """Quantize reals toward zero onto the constellation's distinct amplitudes.

    Nonnegative inputs map to the largest amplitude not exceeding them,
    negative inputs to the smallest amplitude not below them; inputs
    beyond the outermost points clamp to those points. The result never
    exceeds the input in magnitude and is never the duplicated origin.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("quantize requires finite inputs")
    pts = c.distinct_amplitudes
    top = len(pts) - 1
    right = np.clip(np.searchsorted(pts, arr, side="right") - 1, 0, top)
    left = np.clip(np.searchsorted(pts, arr, side="left"), 0, top)
    idx = np.where(arr >= 0, right, left)
    out = pts[idx]
    if np.ndim(x) == 0:
        return float(out)
    return out


def symbol_prior(c: Constellation) -> dict:
    """Map each distinct amplitude to its probability under uniform labels."""
    values, counts = np.unique(c.amplitudes, return_counts=True)
    return {float(v): cnt / c.n for v, cnt in zip(values, counts)}


def outage_probability_bound(n: int, gamma: float) -> float:
    """Upper bound e^3 * exp(-n^{1/2-(1-gamma)/beta}) on the power-outage probability.

    Values at or above 1 are trivially true and reported as 1 with a warning.
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two, got {n}")
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    exponent = 0.5 - (1.0 - gamma) / BETA
    if exponent <= 0.0:
        warnings.warn("outage bound exponent is nonpositive; bound is trivial")
        return 1.0
    value = math.exp(3.0 - n**exponent)
    if value >= 1.0:
        warnings.warn(f"outage bound {value:.4g} >= 1 at n={n}; reporting trivial bound")
        return 1.0
    return value


def constellation_to_json(c: Constellation) -> str:
    """Serialize with amplitudes printed to 17 significant digits."""
    points = ",".join(
        '{"label_bits":"%s","amplitude":%s,"negative_origin":%s}'
        % (c.label_bits(lbl), format(c.amplitudes[lbl], ".17g"),
           "true" if lbl == c.negative_origin else "false")
        for lbl in range(c.n)
    )
    return (
        '{"n":%d,"m":%d,"P":%s,"gamma":%s,"shaping_variance":%s,"points":[%s]}'
        % (c.n, c.m, format(c.power, ".17g"), format(c.gamma, ".17g"),
           format(c.shaping_variance, ".17g"), points)
    )


def constellation_from_json(text_or_obj) -> Constellation:
    obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
    n = int(obj["n"])
    m = int(obj["m"])
    amps = np.zeros(n, dtype=np.float64)
    neg_origin = None
    seen = set()
    for pt in obj["points"]:
        lbl = int(pt["label_bits"], 2)
        if lbl in seen:
            raise ValueError(f"duplicate label {pt['label_bits']} in constellation document")
        seen.add(lbl)
        amps[lbl] = float(pt["amplitude"])
        if pt["negative_origin"]:
            if neg_origin is not None:
                raise ValueError("more than one negative-origin point")
            neg_origin = lbl
    if len(seen) != n:
        raise ValueError("constellation document does not cover all labels")
    return Constellation(
        n=n, m=m, power=float(obj["P"]), gamma=float(obj["gamma"]),
        shaping_variance=float(obj["shaping_variance"]), amplitudes=amps,
        negative_origin=neg_origin,
    )
