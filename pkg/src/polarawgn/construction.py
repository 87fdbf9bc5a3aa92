"""Bit-channel reliability estimation and information-set selection.

Reliabilities are the conditional Bhattacharyya parameters of the m*n
synthesized bit-channels, estimated by genie-aided Monte Carlo: every
trial transmits fresh uniform inputs, then replays successive
cancellation per level with true past bits, recording the posterior
sample 2*sqrt(p0*p1) at each position. Each sample lies in [0,1] and the
sample mean is an unbiased estimate, so no rare-event machinery is
needed. Trials are sharded in fixed-size chunks whose randomness is keyed
by (seed, purpose, level, trial); worker count never changes the result.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .constellation import BETA, Constellation
from .transform import transform_rows

TRIAL_CHUNK = 256


@dataclass
class ReliabilityTable:
    """Per (level, index) Bhattacharyya estimates with sampling metadata."""

    n: int
    m: int
    z_mean: np.ndarray      # (m, n) in [0, 1]
    z_stderr: np.ndarray    # (m, n)
    samples: int
    genie_errors: np.ndarray  # (m, n) integer counts

    def __post_init__(self):
        if self.z_mean.shape != (self.m, self.n):
            raise ValueError("z_mean shape does not match (m, n)")
        if np.any(self.z_mean < 0) or np.any(self.z_mean > 1):
            raise ValueError("z_mean entries must lie in [0, 1]")


@dataclass
class InfoSets:
    """Per-level information index sets plus the rule that produced them."""

    n: int
    m: int
    sets: list              # m arrays of sorted 0-based indices
    rule: str               # "SE" | "MD" | "rate-targeted"
    threshold: float
    gamma: float | None = None

    @property
    def rate(self) -> float:
        return sum(len(s) for s in self.sets) / self.n

    def masks(self) -> np.ndarray:
        """(m, n) uint8 matrix with 1 at information positions."""
        out = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, s in enumerate(self.sets):
            out[i, s] = 1
        return out


def _labels_from_level_words(x_words: np.ndarray) -> np.ndarray:
    """Pack per-level transmitted bits (m, n) into label values, level 1 = MSB."""
    m = x_words.shape[0]
    labels = np.zeros(x_words.shape[1], dtype=np.int64)
    for i in range(m):
        labels = (labels << 1) | x_words[i].astype(np.int64)
    return labels


def _trial_noise(seed: int, t: int, n: int) -> np.ndarray:
    return rng.derive_rng(seed, rng.CONSTRUCT_NOISE, t).standard_normal(n)


def _construction_chunk(c: Constellation, t0: int, t1: int, seed: int):
    n, m = c.n, c.m
    scr = kernels.make_scratch(n, m)
    amps = np.ascontiguousarray(c.amplitudes)
    z_trial = np.empty((m, n), dtype=np.float64)
    err_trial = np.empty((m, n), dtype=np.uint8)
    sum_z = np.zeros((m, n), dtype=np.float64)
    sum_z2 = np.zeros((m, n), dtype=np.float64)
    errs = np.zeros((m, n), dtype=np.int64)
    for t in range(t0, t1):
        u = np.empty((m, n), dtype=np.uint8)
        for i in range(m):
            u[i] = rng.derive_rng(seed, rng.CONSTRUCT_BITS, i + 1, t).integers(0, 2, n, dtype=np.uint8)
        x = transform_rows(u)
        labels = _labels_from_level_words(x)
        y = amps[labels] + _trial_noise(seed, t, n)
        kernels.genie_trial(
            y, amps, labels, u, m,
            scr["dens"], scr["chan"], scr["L"], scr["XL"], scr["XC"],
            scr["prefixes"], scr["u_scr"], scr["x_scr"], scr["dummy_mask"],
            z_trial, err_trial,
        )
        sum_z += z_trial
        sum_z2 += z_trial * z_trial
        errs += err_trial
    return sum_z, sum_z2, errs


def _discrete_chunk(llr_table: np.ndarray, cum_rows: np.ndarray, n: int,
                    t0: int, t1: int, seed: int):
    depth = n.bit_length()  # m + 1 rows of SC scratch
    L = np.empty((depth, n), dtype=np.float64)
    XL = np.zeros((depth, n), dtype=np.uint8)
    XC = np.zeros((depth, n), dtype=np.uint8)
    u_scr = np.empty(n, dtype=np.uint8)
    x_scr = np.empty(n, dtype=np.uint8)
    dummy = np.zeros(n, dtype=np.uint8)
    z_trial = np.empty(n, dtype=np.float64)
    err_trial = np.empty(n, dtype=np.uint8)
    sum_z = np.zeros(n, dtype=np.float64)
    sum_z2 = np.zeros(n, dtype=np.float64)
    errs = np.zeros(n, dtype=np.int64)
    for t in range(t0, t1):
        u = rng.derive_rng(seed, rng.CONSTRUCT_BITS, 1, t).integers(0, 2, n, dtype=np.uint8)
        x = transform_rows(u)
        r = rng.derive_rng(seed, rng.CONSTRUCT_NOISE, t).random(n)
        y0 = np.searchsorted(cum_rows[0], r, side="right")
        y1 = np.searchsorted(cum_rows[1], r, side="right")
        y = np.where(x == 0, y0, y1)
        chan = llr_table[y]  # the output LLR does not depend on the sent bit
        kernels.sc_pass(chan, kernels.MODE_GENIE, u, dummy, u_scr, x_scr,
                        z_trial, err_trial, L, XL, XC)
        sum_z += z_trial
        sum_z2 += z_trial * z_trial
        errs += err_trial
    return sum_z, sum_z2, errs


def _run_chunks(worker, static_args, trials: int, workers: int):
    ranges = [(t0, min(t0 + TRIAL_CHUNK, trials)) for t0 in range(0, trials, TRIAL_CHUNK)]
    if workers <= 1 or len(ranges) == 1:
        parts = [worker(*static_args, t0, t1) for t0, t1 in ranges]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(worker, *static_args, t0, t1) for t0, t1 in ranges]
            parts = [f.result() for f in futs]  # fixed chunk order
    sum_z = sum(p[0] for p in parts)
    sum_z2 = sum(p[1] for p in parts)
    errs = sum(p[2] for p in parts)
    return sum_z, sum_z2, errs


def _awgn_worker(c, seed, t0, t1):
    return _construction_chunk(c, t0, t1, seed)


def _discrete_worker(llr_table, cum_rows, n, seed, t0, t1):
    return _discrete_chunk(llr_table, cum_rows, n, t0, t1, seed)


def _finish_table(n, m, sum_z, sum_z2, errs, trials) -> ReliabilityTable:
    mean = sum_z / trials
    if trials > 1:
        var = np.maximum(sum_z2 - trials * mean * mean, 0.0) / (trials - 1)
        stderr = np.sqrt(var / trials)
    else:
        stderr = np.zeros_like(mean)
    return ReliabilityTable(
        n=n, m=m, z_mean=np.clip(mean, 0.0, 1.0), z_stderr=stderr,
        samples=trials, genie_errors=errs,
    )


def estimate_reliability(c: Constellation, trials: int, seed: int,
                         workers: int = 1) -> ReliabilityTable:
    """Genie-aided Monte Carlo reliabilities of all m*n bit-channels.

    Each trial draws every level's input word uniformly, maps the
    transformed words through the constellation labels, transmits over
    the unit-noise channel, and replays SC per level with true feedback,
    accumulating the posterior samples. Deterministic given (seed,
    trials) for any worker count.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    sum_z, sum_z2, errs = _run_chunks(_awgn_worker, (c, seed), trials, workers)
    return _finish_table(c.n, c.m, sum_z, sum_z2, errs, trials)


def estimate_reliability_discrete(channel: np.ndarray, n: int, trials: int, seed: int,
                                  workers: int = 1) -> ReliabilityTable:
    """Single-level Monte Carlo reliabilities over a binary-input discrete channel.

    ``channel`` is a (2, q) row-stochastic matrix W[y|x]. Used to check the
    estimator against exact enumeration on small instances.
    """
    W = _validated_channel(channel)
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"block length must be a power of two, got {n}")
    with np.errstate(divide="ignore"):
        llr = np.log(W[0]) - np.log(W[1])
    llr_table = np.clip(np.nan_to_num(llr, nan=0.0, posinf=kernels.LLR_CLAMP,
                                      neginf=-kernels.LLR_CLAMP),
                        -kernels.LLR_CLAMP, kernels.LLR_CLAMP)
    cum_rows = np.cumsum(W, axis=1)
    cum_rows[:, -1] = 1.0  # guard rounding so sampling always lands in range
    sum_z, sum_z2, errs = _run_chunks(_discrete_worker, (llr_table, cum_rows, n, seed),
                                      trials, workers)
    return _finish_table(n, 1, sum_z.reshape(1, n), sum_z2.reshape(1, n),
                         errs.reshape(1, n), trials)


def _validated_channel(channel: np.ndarray) -> np.ndarray:
    W = np.asarray(channel, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != 2:
        raise ValueError("channel must be a (2, q) probability table")
    if np.any(W < 0):
        raise ValueError("channel probabilities must be nonnegative")
    if np.max(np.abs(W.sum(axis=1) - 1.0)) > 1e-12:
        raise ValueError("channel rows must each sum to 1 within 1e-12")
    return W


_ENUM_LIMIT = 1 << 26


def exact_reliability_bmc(channel: np.ndarray, n: int) -> np.ndarray:
    """Exact Bhattacharyya parameters of the n synthesized bit-channels.

    Full enumeration over inputs and output strings of a binary-input
    discrete channel under uniform inputs; n at most 8.
    """
    W = _validated_channel(channel)
    if n < 1 or (n & (n - 1)) != 0 or n > 8:
        raise ValueError(f"block length must be a power of two <= 8, got {n}")
    q = W.shape[1]
    if (2**n) * (q**n) > _ENUM_LIMIT:
        raise ValueError(
            f"enumeration size 2^{n} * {q}^{n} exceeds the supported bound {_ENUM_LIMIT}"
        )
    # joint[u, y] = 2^-n * prod_k W[x_k, y_k] with x = transform(u),
    # u and y read as base-2 / base-q strings, first symbol most significant.
    us = np.arange(2**n, dtype=np.int64)
    u_bits = (us[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    x_bits = transform_rows(u_bits.astype(np.uint8)).astype(np.int64)
    joint = np.full((2**n, 1), 2.0**-n)
    for k in range(n):
        joint = joint[:, :, None] * W[x_bits[:, k], None, :]
        joint = joint.reshape(2**n, -1)
    z = np.empty(n, dtype=np.float64)
    for k in range(1, n + 1):
        grouped = joint.reshape(2**k, 2 ** (n - k), -1).sum(axis=1)
        pairs = grouped.reshape(2 ** (k - 1), 2, -1)
        z[k - 1] = 2.0 * np.sqrt(pairs[:, 0, :] * pairs[:, 1, :]).sum()
    return z


def binary_entropy(x: float) -> float:
    """Entropy in bits of a Bernoulli(x) variable."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def binary_entropy_inv(y: float) -> float:
    """Inverse of the binary entropy on [0, 1/2], bisected to 1e-12."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"argument must lie in [0, 1], got {y}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi)


def md_threshold(n: int, gamma: float) -> float:
    """Moderate-deviations selection threshold 2^{-n^{gamma*h2inv((gamma*beta+gamma-1)/(gamma*beta))}}."""
    lo = 1.0 / (1.0 + BETA)
    if not (lo < gamma < 1.0):
        raise ValueError(f"gamma must lie in ({lo:.5f}, 1), got {gamma}")
    inner = (gamma * BETA + gamma - 1.0) / (gamma * BETA)
    expo = gamma * binary_entropy_inv(inner)
    return 2.0 ** (-(n**expo))


def _sets_from_mask(mask: np.ndarray) -> list:
    return [np.flatnonzero(row) for row in mask]


def select_info_sets_se(table: ReliabilityTable, se_exponent: float = 4.0) -> InfoSets:
    """Keep indices whose estimated reliability parameter is at most n^-se_exponent."""
    threshold = float(table.n) ** (-se_exponent)
    mask = table.z_mean <= threshold
    return InfoSets(n=table.n, m=table.m, sets=_sets_from_mask(mask),
                    rule="SE", threshold=threshold)


def select_info_sets_md(table: ReliabilityTable, gamma: float) -> InfoSets:
    """Keep indices below the moderate-deviations threshold for the given gamma."""
    threshold = md_threshold(table.n, gamma)
    mask = table.z_mean <= threshold
    return InfoSets(n=table.n, m=table.m, sets=_sets_from_mask(mask),
                    rule="MD", threshold=threshold, gamma=gamma)


def _flat_order(table: ReliabilityTable):
    """All (level, index) pairs sorted by (z, level, index) ascending."""
    m, n = table.m, table.n
    lvl = np.repeat(np.arange(m), n)
    idx = np.tile(np.arange(n), m)
    z = table.z_mean.ravel()
    order = np.lexsort((idx, lvl, z))
    return lvl[order], idx[order], z[order]


def _sets_from_count(table: ReliabilityTable, count: int, rule: str) -> InfoSets:
    lvl, idx, z = _flat_order(table)
    mask = np.zeros((table.m, table.n), dtype=bool)
    mask[lvl[:count], idx[:count]] = True
    threshold = float(z[count - 1]) if count > 0 else 0.0
    return InfoSets(n=table.n, m=table.m, sets=_sets_from_mask(mask),
                    rule=rule, threshold=threshold)


def select_info_sets_rate(table: ReliabilityTable, target_rate: float) -> InfoSets:
    """Pick the floor(target_rate*n) most reliable indices overall.

    Ties break by (level, index) ascending; target_rate in bits per
    channel use, between 0 and m.
    """
    if not 0.0 <= target_rate <= table.m:
        raise ValueError(f"target rate must lie in [0, {table.m}], got {target_rate}")
    count = min(int(math.floor(target_rate * table.n)), table.m * table.n)
    return _sets_from_count(table, count, "rate-targeted")


def select_info_sets_union(table: ReliabilityTable, target: float = 1e-3) -> InfoSets:
    """Largest rate-targeted selection whose reliability sum stays within target."""
    if target < 0:
        raise ValueError("target must be nonnegative")
    _, _, z = _flat_order(table)
    count = int(np.searchsorted(np.cumsum(z), target, side="right"))
    return _sets_from_count(table, count, "rate-targeted")


def union_bound(table: ReliabilityTable, sets: InfoSets):
    """Sum of selected reliability estimates, plus a +3 stderr conservative variant."""
    if sets.n != table.n or sets.m != table.m:
        raise ValueError("info sets do not match the table dimensions")
    plain = 0.0
    conservative = 0.0
    for i, s in enumerate(sets.sets):
        plain += float(table.z_mean[i, s].sum())
        conservative += float((table.z_mean[i, s] + 3.0 * table.z_stderr[i, s]).sum())
    return plain, conservative


# ---------------------------------------------------------------------------
# CSV serialization (levels and indices are 1-based on disk)

_TABLE_HEADER = "level,k,z_mean,z_stderr,samples,genie_errors"


def table_to_csv(table: ReliabilityTable, path: str) -> None:
    lines = [_TABLE_HEADER]
    for i in range(table.m):
        for k in range(table.n):
            lines.append(
                f"{i + 1},{k + 1},{table.z_mean[i, k]:.17g},"
                f"{table.z_stderr[i, k]:.17g},{table.samples},{table.genie_errors[i, k]}"
            )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def table_from_csv(path: str) -> ReliabilityTable:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != _TABLE_HEADER:
            raise ValueError(f"unexpected reliability table header: {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    levels = np.array([int(r[0]) for r in rows])
    ks = np.array([int(r[1]) for r in rows])
    m = int(levels.max())
    n = int(ks.max())
    if len(rows) != m * n:
        raise ValueError("reliability table is incomplete")
    z = np.zeros((m, n))
    se = np.zeros((m, n))
    errs = np.zeros((m, n), dtype=np.int64)
    samples = int(rows[0][4])
    for r in rows:
        i, k = int(r[0]) - 1, int(r[1]) - 1
        z[i, k] = float(r[2])
        se[i, k] = float(r[3])
        errs[i, k] = int(r[5])
    return ReliabilityTable(n=n, m=m, z_mean=z, z_stderr=se, samples=samples,
                            genie_errors=errs)
