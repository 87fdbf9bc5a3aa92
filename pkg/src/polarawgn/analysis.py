"""Numeric bound checks and gap-to-capacity experiments.

All logarithms here are base 2; the quantization coefficient has one
term stated in bits divided by log2(e), which a unit test cross-checks
against the equivalent natural-log form.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import channel_capacity, mutual_information
from .constellation import BETA, build_constellation, quantize
from .construction import md_threshold
from .quadrature import cell_grid, panel_grid


@dataclass
class GapPoint:
    """Gap-to-capacity measurements at one block length."""

    n: int
    rate: float                # nan when no simulation backs this point
    empirical_error: float     # nan when no simulation backs this point
    capacity_gap_rate: float   # C(P) - rate
    capacity_gap_mi: float     # C(P) - I(X;Y) of the built constellation


def quantization_bound_coefficient(power: float) -> float:
    """Coefficient P^2 + 4P + (4P/log2(e)) * (1 + log2(sqrt(P/2pi)))."""
    if power <= 0:
        raise ValueError(f"power must be positive, got {power}")
    log2e = math.log2(math.e)
    return power**2 + 4.0 * power + (4.0 * power / log2e) * (
        1.0 + math.log2(math.sqrt(power / (2.0 * math.pi)))
    )


def quantization_bound_check(n: int, power: float, gamma: float,
                             order: int = 24):
    """Compare the quantizer's mean-square error against its closed-form bound.

    lhs: quadrature of integral s(x) * (x - g(x))^2 dx where s is the
    shaping density and g the toward-zero quantizer; rhs:
    coefficient * log2(n) / n^{2(1-gamma)/beta}. Requires n >= 64.
    """
    if n < 64:
        raise ValueError(f"bound check requires n >= 64, got {n}")
    c = build_constellation(n, power, gamma)
    sigma = math.sqrt(c.shaping_variance)
    pts = c.distinct_amplitudes
    tail = 14.0 * sigma
    # one panel per quantizer cell keeps the integrand smooth inside each panel
    interior_nodes, interior_w = cell_grid(pts, order=order)
    lo_nodes, lo_w = panel_grid(-tail, float(pts[0]), 0.25 * sigma, order=order)
    hi_nodes, hi_w = panel_grid(float(pts[-1]), tail, 0.25 * sigma, order=order)
    nodes = np.concatenate([lo_nodes, interior_nodes, hi_nodes])
    weights = np.concatenate([lo_w, interior_w, hi_w])
    g = quantize(nodes, c)
    dens = np.exp(-0.5 * nodes * nodes / c.shaping_variance) / (
        sigma * math.sqrt(2.0 * math.pi)
    )
    lhs = float(np.sum(weights * dens * (nodes - g) ** 2))
    rhs = quantization_bound_coefficient(power) * math.log2(n) / (
        n ** (2.0 * (1.0 - gamma) / BETA)
    )
    return lhs, rhs, lhs <= rhs


def scaling_fit(points, which: str = "mi"):
    """Least squares of log2(gap) on log2(n): returns (mu_hat, slope, r2)."""
    if which not in ("rate", "mi"):
        raise ValueError(f"fit target must be 'rate' or 'mi', got {which!r}")
    if len(points) < 3:
        raise ValueError("scaling fit needs at least 3 points")
    gaps = np.array([
        p.capacity_gap_rate if which == "rate" else p.capacity_gap_mi for p in points
    ])
    ns = np.array([p.n for p in points], dtype=np.float64)
    if not np.all(gaps > 0):
        raise ValueError("scaling fit requires strictly positive gaps")
    x = np.log2(ns)
    y = np.log2(gaps)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    mu_hat = -1.0 / slope if slope != 0 else math.inf
    return mu_hat, float(slope), r2


def md_envelope(n: int, gamma: float):
    """The two n-dependent factors of the moderate-deviations tradeoff.

    gap_term = log2(n) / n^{(1-gamma)/beta}; error_term =
    (n*log2(n) + e^3) times the selection threshold. Unknown universal
    constants are set to 1.
    """
    lo = 1.0 / (1.0 + BETA)
    if not (lo < gamma < 1.0):
        raise ValueError(f"gamma must lie in ({lo:.5f}, 1), got {gamma}")
    gap_term = math.log2(n) / (n ** ((1.0 - gamma) / BETA))
    error_term = (n * math.log2(n) + math.exp(3.0)) * md_threshold(n, gamma)
    return gap_term, error_term


def capacity_gap_table(n_list, power: float, gamma: float,
                       sim_results: dict = None) -> list:
    """GapPoints for each n: constellation mutual-information gaps, plus
    simulated rate/error when ``sim_results`` maps n to (rate, error)."""
    cap = channel_capacity(power)
    points = []
    for n in n_list:
        c = build_constellation(n, power, gamma)
        mi = mutual_information(c)
        rate, err = (sim_results or {}).get(n, (math.nan, math.nan))
        points.append(GapPoint(
            n=n, rate=rate, empirical_error=err,
            capacity_gap_rate=cap - rate, capacity_gap_mi=cap - mi,
        ))
    return points


_GAP_HEADER = "n,P,gamma,capacity,mi,gap_mi,rate,gap_rate,err,bound_lhs,bound_rhs"


def gaps_to_csv(points, power: float, gamma: float, path: str,
                with_bounds: bool = True) -> None:
    cap = channel_capacity(power)
    lines = [_GAP_HEADER]
    for p in points:
        if with_bounds and p.n >= 64:
            lhs, rhs, _ = quantization_bound_check(p.n, power, gamma)
        else:
            lhs, rhs = math.nan, math.nan
        mi = cap - p.capacity_gap_mi
        lines.append(
            f"{p.n},{power:.17g},{gamma:.17g},{cap:.17g},{mi:.17g},"
            f"{p.capacity_gap_mi:.17g},{p.rate:.17g},{p.capacity_gap_rate:.17g},"
            f"{p.empirical_error:.17g},{lhs:.17g},{rhs:.17g}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
