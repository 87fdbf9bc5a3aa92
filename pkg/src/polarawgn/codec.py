"""Encoder with running power clamp and the multistage SC decoder.

Each level's input word carries message bits at its information indices
and shared pseudorandom frozen bits everywhere else; the transformed
words select a constellation label per symbol. Scanning symbols in
order, any symbol whose energy would push the running sum over the
budget is replaced by 0 and logged. The decoder regenerates the frozen
bits from the same keyed streams and decodes levels in order, feeding
each level's re-encoded word into the next level's conditioning.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels, rng
from .constellation import Constellation, constellation_from_json, constellation_to_json
from .construction import InfoSets, _labels_from_level_words
from .transform import transform_rows


@dataclass
class CodeSpec:
    """Everything needed to encode and decode: sizes, sets, seed, constellation."""

    n: int
    m: int
    power: float
    gamma: float
    info_sets: InfoSets
    constellation: Constellation
    master_seed: int
    se_exponent: float = 4.0

    def __post_init__(self):
        if self.info_sets.n != self.n or self.info_sets.m != self.m:
            raise ValueError("info sets do not match the code dimensions")
        cc = self.constellation
        if cc.n != self.n or cc.power != self.power or cc.gamma != self.gamma:
            raise ValueError("constellation does not match (n, P, gamma)")
        for s in self.info_sets.sets:
            if len(s) and (s[0] < 0 or s[-1] >= self.n):
                raise ValueError("info set indices out of range")

    @property
    def rate(self) -> float:
        return self.info_sets.rate

    def message_lengths(self) -> list:
        return [len(s) for s in self.info_sets.sets]


@dataclass
class TransmissionRecord:
    """One end-to-end trial, from message bits to the block-error flag."""

    message_bits: list            # per level, the bits at the information indices
    u_words: np.ndarray           # (m, n)
    x_words: np.ndarray           # (m, n)
    intended_symbols: np.ndarray  # (n,)
    sent_symbols: np.ndarray      # (n,)
    clamp_positions: np.ndarray   # indices where the clamp replaced a symbol
    received: np.ndarray = field(default=None)
    decoded_message_bits: list = field(default=None)
    block_error: bool = False


def _frozen_words(spec: CodeSpec, trial_index: int, masks: np.ndarray) -> np.ndarray:
    """(m, n) array with fresh frozen bits at non-information positions, 0 elsewhere.

    The frozen stream of level i yields one bit per frozen position,
    consumed in ascending index order.
    """
    out = np.zeros((spec.m, spec.n), dtype=np.uint8)
    for i in range(spec.m):
        frozen_idx = np.flatnonzero(masks[i] == 0)
        bits = rng.derive_rng(spec.master_seed, rng.FROZEN, i + 1, trial_index).integers(
            0, 2, len(frozen_idx), dtype=np.uint8
        )
        out[i, frozen_idx] = bits
    return out


def _assemble_u(spec: CodeSpec, message_bits, frozen_words: np.ndarray,
                masks: np.ndarray) -> np.ndarray:
    u = frozen_words.copy()
    for i, s in enumerate(spec.info_sets.sets):
        bits = np.asarray(message_bits[i], dtype=np.uint8)
        if bits.shape != (len(s),):
            raise ValueError(
                f"level {i + 1} expects {len(s)} message bits, got {bits.shape}"
            )
        u[i, s] = bits
    return u


def _apply_power_clamp(intended: np.ndarray, n: int, power: float):
    """Zero out symbols that would push the running energy sum past n*power."""
    budget = n * power
    total = float(np.sum(intended * intended))
    if total <= budget:
        return intended.copy(), np.empty(0, dtype=np.int64)
    sent = intended.copy()
    clamped = []
    running = 0.0
    for k in range(n):
        e = sent[k] * sent[k]
        if running + e > budget:
            sent[k] = 0.0
            clamped.append(k)
        else:
            running += e
    return sent, np.asarray(clamped, dtype=np.int64)


def encode(spec: CodeSpec, message_bits, trial_index: int = None,
           frozen_bits: np.ndarray = None) -> TransmissionRecord:
    """Encode message bits into clamped symbols.

    Frozen bits come either from the keyed stream of ``trial_index`` or
    from an explicit (m, n) array (used by tests and stubs). The returned
    record has its channel fields unset.
    """
    masks = spec.info_sets.masks()
    if frozen_bits is None:
        if trial_index is None:
            raise ValueError("encode needs either trial_index or explicit frozen bits")
        frozen_bits = _frozen_words(spec, trial_index, masks)
    frozen_bits = np.asarray(frozen_bits, dtype=np.uint8)
    u = _assemble_u(spec, message_bits, frozen_bits * (1 - masks), masks)
    x = transform_rows(u)
    labels = _labels_from_level_words(x)
    intended = spec.constellation.amplitudes[labels]
    sent, clamp_positions = _apply_power_clamp(intended, spec.n, spec.power)
    return TransmissionRecord(
        message_bits=[np.asarray(b, dtype=np.uint8).copy() for b in message_bits],
        u_words=u, x_words=x, intended_symbols=intended, sent_symbols=sent,
        clamp_positions=clamp_positions,
    )


def decode(spec: CodeSpec, received, trial_index: int = None,
           frozen_bits: np.ndarray = None) -> list:
    """Decode received samples into per-level message bits.

    The decoder must see the same frozen bits as the encoder: pass the
    trial index for the shared keyed stream, or the explicit array.
    Always returns a decision.
    """
    y = np.ascontiguousarray(received, dtype=np.float64)
    if y.shape != (spec.n,):
        raise ValueError(f"expected {spec.n} received samples, got {y.shape}")
    masks = spec.info_sets.masks()
    if frozen_bits is None:
        if trial_index is None:
            raise ValueError("decode needs either trial_index or explicit frozen bits")
        frozen_bits = _frozen_words(spec, trial_index, masks)
    known = (np.asarray(frozen_bits, dtype=np.uint8) * (1 - masks)).astype(np.uint8)
    frozen_mask = (1 - masks).astype(np.uint8)
    scr = kernels.make_scratch(spec.n, spec.m)
    u_hat = np.empty((spec.m, spec.n), dtype=np.uint8)
    x_hat = np.empty((spec.m, spec.n), dtype=np.uint8)
    kernels.decode_trial(
        y, np.ascontiguousarray(spec.constellation.amplitudes), frozen_mask, known,
        spec.m, scr["dens"], scr["chan"], scr["L"], scr["XL"], scr["XC"],
        scr["prefixes"], scr["z_scr"], scr["e_scr"], u_hat, x_hat,
    )
    return [u_hat[i, s].copy() for i, s in enumerate(spec.info_sets.sets)]


def _draw_messages(spec: CodeSpec, trial_index: int) -> list:
    return [
        rng.derive_rng(spec.master_seed, rng.MESSAGE, i + 1, trial_index).integers(
            0, 2, len(s), dtype=np.uint8
        )
        for i, s in enumerate(spec.info_sets.sets)
    ]


def end_to_end_trial(spec: CodeSpec, trial_index: int,
                     master_seed: int = None) -> TransmissionRecord:
    """Run one reproducible trial: draw, encode, transmit, decode, compare.

    Message, frozen, and noise streams are all keyed by (master_seed,
    purpose, level, trial_index), so the record is a pure function of its
    arguments.
    """
    if master_seed is not None and master_seed != spec.master_seed:
        spec = CodeSpec(
            n=spec.n, m=spec.m, power=spec.power, gamma=spec.gamma,
            info_sets=spec.info_sets, constellation=spec.constellation,
            master_seed=master_seed, se_exponent=spec.se_exponent,
        )
    record = encode(spec, _draw_messages(spec, trial_index), trial_index=trial_index)
    noise = rng.derive_rng(spec.master_seed, rng.NOISE, trial_index).standard_normal(spec.n)
    record.received = record.sent_symbols + noise
    record.decoded_message_bits = decode(spec, record.received, trial_index=trial_index)
    record.block_error = any(
        not np.array_equal(a, b)
        for a, b in zip(record.message_bits, record.decoded_message_bits)
    )
    return record


def simulate_chunk(spec: CodeSpec, t0: int, t1: int, collect: bool = False):
    """Aggregate trials [t0, t1): (errors, trials with clamping, records or None)."""
    masks = spec.info_sets.masks()
    frozen_mask = (1 - masks).astype(np.uint8)
    amps = np.ascontiguousarray(spec.constellation.amplitudes)
    scr = kernels.make_scratch(spec.n, spec.m)
    u_hat = np.empty((spec.m, spec.n), dtype=np.uint8)
    x_hat = np.empty((spec.m, spec.n), dtype=np.uint8)
    errors = 0
    clamped_trials = 0
    records = [] if collect else None
    for t in range(t0, t1):
        frozen = _frozen_words(spec, t, masks)
        msg = _draw_messages(spec, t)
        rec = encode(spec, msg, frozen_bits=frozen)
        noise = rng.derive_rng(spec.master_seed, rng.NOISE, t).standard_normal(spec.n)
        rec.received = rec.sent_symbols + noise
        known = (frozen * (1 - masks)).astype(np.uint8)
        kernels.decode_trial(
            rec.received, amps, frozen_mask, known, spec.m,
            scr["dens"], scr["chan"], scr["L"], scr["XL"], scr["XC"],
            scr["prefixes"], scr["z_scr"], scr["e_scr"], u_hat, x_hat,
        )
        rec.decoded_message_bits = [u_hat[i, s].copy() for i, s in enumerate(spec.info_sets.sets)]
        rec.block_error = any(
            not np.array_equal(a, b)
            for a, b in zip(rec.message_bits, rec.decoded_message_bits)
        )
        errors += int(rec.block_error)
        clamped_trials += int(len(rec.clamp_positions) > 0)
        if collect:
            records.append(rec)
    return errors, clamped_trials, records


# ---------------------------------------------------------------------------
# JSON serialization (levels and indices are 1-based on disk)


def codespec_to_json(spec: CodeSpec) -> str:
    sets_json = ",".join(
        '"%d":[%s]' % (i + 1, ",".join(str(int(k) + 1) for k in s))
        for i, s in enumerate(spec.info_sets.sets)
    )
    gamma_field = (
        "" if spec.info_sets.gamma is None
        else '"rule_gamma":%s,' % format(spec.info_sets.gamma, ".17g")
    )
    return (
        '{"n":%d,"m":%d,"P":%s,"gamma":%s,"rule":"%s","threshold":%s,%s'
        '"se_exponent":%s,"info_sets":{%s},"master_seed":%d,"constellation":%s}'
        % (
            spec.n, spec.m, format(spec.power, ".17g"), format(spec.gamma, ".17g"),
            spec.info_sets.rule, format(spec.info_sets.threshold, ".17g"), gamma_field,
            format(spec.se_exponent, ".17g"), sets_json, spec.master_seed,
            constellation_to_json(spec.constellation),
        )
    )


def codespec_from_json(text: str) -> CodeSpec:
    obj = json.loads(text)
    n = int(obj["n"])
    m = int(obj["m"])
    sets = [np.empty(0, dtype=np.int64)] * m
    for key, idx in obj["info_sets"].items():
        level = int(key)
        if not 1 <= level <= m:
            raise ValueError(f"info set level {level} out of range")
        arr = np.asarray(sorted(int(k) - 1 for k in idx), dtype=np.int64)
        if len(arr) and (arr[0] < 0 or arr[-1] >= n):
            raise ValueError("info set indices out of range")
        sets[level - 1] = arr
    info = InfoSets(
        n=n, m=m, sets=sets, rule=obj["rule"], threshold=float(obj["threshold"]),
        gamma=float(obj["rule_gamma"]) if "rule_gamma" in obj else None,
    )
    return CodeSpec(
        n=n, m=m, power=float(obj["P"]), gamma=float(obj["gamma"]), info_sets=info,
        constellation=constellation_from_json(obj["constellation"]),
        master_seed=int(obj["master_seed"]), se_exponent=float(obj["se_exponent"]),
    )


def codespec_digest(spec: CodeSpec) -> str:
    return hashlib.sha256(codespec_to_json(spec).encode()).hexdigest()[:12]


def record_to_jsonable(rec: TransmissionRecord) -> dict:
    return {
        "message_bits": {str(i + 1): b.tolist() for i, b in enumerate(rec.message_bits)},
        "u_words": rec.u_words.tolist(),
        "x_words": rec.x_words.tolist(),
        "intended_symbols": rec.intended_symbols.tolist(),
        "sent_symbols": rec.sent_symbols.tolist(),
        "clamp_positions": (rec.clamp_positions + 1).tolist(),
        "received": None if rec.received is None else rec.received.tolist(),
        "decoded_message_bits": None if rec.decoded_message_bits is None else {
            str(i + 1): b.tolist() for i, b in enumerate(rec.decoded_message_bits)
        },
        "block_error": bool(rec.block_error),
    }
