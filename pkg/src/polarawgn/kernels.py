"""Compiled per-trial kernels: density tables, coset LLRs, and SC passes.

Everything here works on one trial at a time with preallocated scratch
buffers; the chunk loops and all randomness live in the calling modules.
The successive-cancellation pass is an iterative depth-first walk of the
half-split recursion (natural index order, no bit-reversal), with the
exact check-node rule evaluated through log1p/exp.
"""

import math

import numba as nb
import numpy as np

LLR_CLAMP = 60.0

MODE_GENIE = 0
MODE_DECODE = 1


@nb.njit(cache=True, inline="always")
def _boxplus(a, b):
    # exact log-domain check-node combination log((1+e^{a+b})/(e^a+e^b))
    s = min(abs(a), abs(b))
    if (a < 0.0) != (b < 0.0):
        s = -s
    return s + math.log1p(math.exp(-abs(a + b))) - math.log1p(math.exp(-abs(a - b)))


@nb.njit(cache=True, inline="always")
def _bhattacharyya_sample(llr):
    # 2*sqrt(p0*p1) = sech(llr/2), evaluated without overflow
    e = math.exp(-0.5 * abs(llr))
    return 2.0 * e / (1.0 + e * e)


@nb.njit(cache=True, inline="always")
def _ratio_llr(s0, s1):
    if s0 <= 0.0 and s1 <= 0.0:
        return 0.0
    if s0 <= 0.0:
        return -LLR_CLAMP
    if s1 <= 0.0:
        return LLR_CLAMP
    v = math.log(s0) - math.log(s1)
    if v > LLR_CLAMP:
        return LLR_CLAMP
    if v < -LLR_CLAMP:
        return -LLR_CLAMP
    return v


@nb.njit(cache=True)
def sc_pass(chan_llrs, mode, ref_bits, frozen_mask, u_out, x_out, z_out, err_out,
            L, XL, XC):
    """One length-n successive-cancellation pass.

    mode GENIE: every position is re-decided with the true bit (ref_bits)
    fed back; z_out gets the per-position samples 2*sqrt(p0*p1) and
    err_out flags hard-decision mismatches (ties decode to 0); frozen_mask
    is ignored.
    mode DECODE: positions with frozen_mask set are forced to ref_bits,
    the rest are hard decisions; z_out/err_out are untouched.

    u_out receives the decided bits, x_out their transform. L, XL, XC are
    (m+1, n) scratch arrays (float64, uint8, uint8).
    """
    n = chan_llrs.shape[0]
    for j in range(n):
        L[0, j] = chan_llrs[j]
    if n == 1:
        llr = L[0, 0]
        if mode == MODE_GENIE:
            z_out[0] = _bhattacharyya_sample(llr)
            hard = 1 if llr < 0.0 else 0
            err_out[0] = 1 if hard != ref_bits[0] else 0
            bit = ref_bits[0]
        else:
            bit = ref_bits[0] if frozen_mask[0] == 1 else (1 if llr < 0.0 else 0)
        u_out[0] = bit
        x_out[0] = bit
        return
    phase = np.zeros(34, dtype=np.int64)
    k0 = np.zeros(34, dtype=np.int64)
    d = 0
    while True:
        # descend all-left from depth d, combining LLR pairs on the way
        while (n >> d) > 1:
            h = (n >> d) >> 1
            for j in range(h):
                L[d + 1, j] = _boxplus(L[d, j], L[d, j + h])
            phase[d] = 1
            k0[d + 1] = k0[d]
            d += 1
        # leaf: decide bit k0[d]
        k = k0[d]
        llr = L[d, 0]
        if mode == MODE_GENIE:
            z_out[k] = _bhattacharyya_sample(llr)
            hard = 1 if llr < 0.0 else 0
            err_out[k] = 1 if hard != ref_bits[k] else 0
            bit = ref_bits[k]
        else:
            bit = ref_bits[k] if frozen_mask[k] == 1 else (1 if llr < 0.0 else 0)
        u_out[k] = bit
        XC[d, 0] = bit
        # ascend: finish parents until one still needs its right child
        while True:
            p = d - 1
            h = n >> d  # length of the child block
            if phase[p] == 1:
                # left child done: stash its transform, build the right child's LLRs
                for j in range(h):
                    XL[p, j] = XC[d, j]
                    L[d, j] = L[p, h + j] + (1.0 - 2.0 * XL[p, j]) * L[p, j]
                phase[p] = 2
                k0[d] = k0[p] + h
                break
            # right child done: combine transforms [xl ^ xr, xr]
            for j in range(h):
                xr = XC[d, j]
                XC[p, j] = XL[p, j] ^ xr
                XC[p, h + j] = xr
            d = p
            if d == 0:
                for j in range(n):
                    x_out[j] = XC[0, j]
                return


@nb.njit(cache=True)
def density_table(y, amps, out):
    """out[k, a] = exp(-(y_k - amps_a)^2 / 2); shared by all levels of a trial."""
    n = y.shape[0]
    na = amps.shape[0]
    for k in range(n):
        yk = y[k]
        for a in range(na):
            dd = yk - amps[a]
            out[k, a] = math.exp(-0.5 * dd * dd)


@nb.njit(cache=True)
def coset_llrs(dens, prefixes, m, level, out):
    """Channel LLR of bit ``level`` per symbol given each symbol's prefix value."""
    n = dens.shape[0]
    size = 1 << (m - level)
    for k in range(n):
        base = prefixes[k] << (m - level + 1)
        s0 = 0.0
        s1 = 0.0
        for j in range(size):
            s0 += dens[k, base + j]
        for j in range(size):
            s1 += dens[k, base + size + j]
        out[k] = _ratio_llr(s0, s1)


@nb.njit(cache=True)
def genie_trial(y, amps, labels, u_true, m, dens, chan, L, XL, XC,
                prefixes, u_scr, x_scr, dummy_mask, z_out, err_out):
    """All-level genie pass of one trial: true prefixes, true feedback bits.

    z_out and err_out are (m, n) and receive the per-bit-channel samples
    and hard-decision error indicators.
    """
    n = y.shape[0]
    density_table(y, amps, dens)
    for i in range(1, m + 1):
        shift = m - i + 1
        for k in range(n):
            prefixes[k] = labels[k] >> shift
        coset_llrs(dens, prefixes, m, i, chan)
        sc_pass(chan, MODE_GENIE, u_true[i - 1], dummy_mask,
                u_scr, x_scr, z_out[i - 1], err_out[i - 1], L, XL, XC)


@nb.njit(cache=True)
def decode_trial(y, amps, frozen_mask, known_bits, m, dens, chan, L, XL, XC,
                 prefixes, z_scr, e_scr, u_hat, x_hat):
    """Multistage decode of one trial: levels in order, decoded prefixes fed forward.

    frozen_mask/known_bits are (m, n); u_hat and x_hat (m, n) receive the
    decided bit words and their transforms.
    """
    n = y.shape[0]
    density_table(y, amps, dens)
    for k in range(n):
        prefixes[k] = 0
    for i in range(1, m + 1):
        coset_llrs(dens, prefixes, m, i, chan)
        sc_pass(chan, MODE_DECODE, known_bits[i - 1], frozen_mask[i - 1],
                u_hat[i - 1], x_hat[i - 1], z_scr, e_scr, L, XL, XC)
        for k in range(n):
            prefixes[k] = (prefixes[k] << 1) | x_hat[i - 1, k]


def make_scratch(n: int, m: int) -> dict:
    """Preallocated scratch bundle reused across the trials of a chunk."""
    return {
        "dens": np.empty((n, n), dtype=np.float64),
        "chan": np.empty(n, dtype=np.float64),
        "L": np.empty((m + 1, n), dtype=np.float64),
        "XL": np.zeros((m + 1, n), dtype=np.uint8),
        "XC": np.zeros((m + 1, n), dtype=np.uint8),
        "prefixes": np.empty(n, dtype=np.int64),
        "u_scr": np.empty(n, dtype=np.uint8),
        "x_scr": np.empty(n, dtype=np.uint8),
        "dummy_mask": np.zeros(n, dtype=np.uint8),
        "z_scr": np.empty(n, dtype=np.float64),
        "e_scr": np.empty(n, dtype=np.uint8),
    }
