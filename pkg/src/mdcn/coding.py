"""Perceptual-domain quantization and Rice entropy coding of envelopes and
coefficients.

Everything here is bit-exact: every encode has a decode that inverts it
exactly on encoder-produced payloads.  Rice codes use a unary quotient
(ones terminated by a zero) followed by ``k`` remainder bits; quotients of
24 or more escape to a raw 20-bit field after a prefix of 24 ones, which
bounds the worst case and matches the +/-2^20 clamp on quantizer indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitReader, BitstreamError, BitWriter
from .perceptual import (
    ENVELOPE_MAX_DB,
    ENVELOPE_MIN_DB,
    ENVELOPE_STEP_DB,
    BandLayout,
    FrameKind,
    PerceptualEnvelope,
)

RICE_ESCAPE_Q = 24
RICE_RAW_BITS = 20
RICE_K_BITS = 4
MAX_RICE_K = (1 << RICE_K_BITS) - 1
MAX_INDEX = (1 << RICE_RAW_BITS) - 1  # |index| clamp, fits the escape field
ENVELOPE_BASE_BITS = 8
SHARING_MAX_DIFF_DB = 1.5


@dataclass(frozen=True)
class QuantizedFrame:
    """Integer quantization indices for one frame in the perceptual domain."""

    indices: np.ndarray  # int64, 768 or 192 entries
    step_db_offset: float

    @property
    def num_lines(self) -> int:
        return self.indices.shape[0]


def quantizer_step(step_db_offset: float) -> float:
    """Linear step size; the base step in the perceptual domain is 1.0."""
    return 10.0 ** (step_db_offset / 20.0)


def quantize_frame(perc_lines: np.ndarray, step_db_offset: float) -> QuantizedFrame:
    x = np.asarray(perc_lines, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot quantize non-finite values")
    idx = np.rint(x / quantizer_step(step_db_offset)).astype(np.int64)
    np.clip(idx, -MAX_INDEX, MAX_INDEX, out=idx)
    return QuantizedFrame(idx, float(step_db_offset))


def dequantize_frame(q: QuantizedFrame) -> np.ndarray:
    return q.indices.astype(np.float64) * quantizer_step(q.step_db_offset)


# ---------------------------------------------------------------- Rice codes

def rice_length(value: int, k: int) -> int:
    q = value >> k
    if q >= RICE_ESCAPE_Q:
        return RICE_ESCAPE_Q + RICE_RAW_BITS
    return q + 1 + k


def rice_encode(writer: BitWriter, value: int, k: int) -> None:
    if value < 0:
        raise ValueError("Rice codes take non-negative values")
    if value > MAX_INDEX:
        raise ValueError(f"value {value} exceeds the {RICE_RAW_BITS}-bit escape field")
    q = value >> k
    if q >= RICE_ESCAPE_Q:
        writer.write_ones(RICE_ESCAPE_Q)
        writer.write_bits(value, RICE_RAW_BITS)
    else:
        writer.write_ones(q)
        writer.write_bit(0)
        writer.write_bits(value & ((1 << k) - 1), k)


def rice_decode(reader: BitReader, k: int) -> int:
    q = 0
    while True:
        if q == RICE_ESCAPE_Q:
            return reader.read_bits(RICE_RAW_BITS)
        if reader.read_bit() == 0:
            break
        q += 1
    return (q << k) | reader.read_bits(k)


def _rice_cost_vector(values: np.ndarray, k: int) -> int:
    q = values >> k
    cost = np.where(q >= RICE_ESCAPE_Q, RICE_ESCAPE_Q + RICE_RAW_BITS, q + 1 + k)
    return int(cost.sum())


def best_rice_k(values: np.ndarray) -> tuple[int, int]:
    """(k, total bits) minimizing the Rice cost of ``values``; ties pick low k."""
    values = np.asarray(values, dtype=np.int64)
    best_k, best_cost = 0, _rice_cost_vector(values, 0)
    for k in range(1, MAX_RICE_K + 1):
        cost = _rice_cost_vector(values, k)
        if cost < best_cost:
            best_k, best_cost = k, cost
    return best_k, best_cost


# ---------------------------------------------------------------- envelopes

def _zigzag(steps: np.ndarray) -> np.ndarray:
    # 0, -1, 1, -2, 2, ...  ->  0, 1, 2, 3, 4, ...
    return np.where(steps > 0, 2 * steps, -2 * steps - (steps < 0)).astype(np.int64)


def _unzigzag(code: int) -> int:
    return (code + 1) // 2 if code & 1 == 0 else -((code + 1) // 2)


def _gain_steps(env: PerceptualEnvelope) -> np.ndarray:
    steps = np.rint(np.asarray(env.band_gains_db) / ENVELOPE_STEP_DB).astype(np.int64)
    min_step = int(round(ENVELOPE_MIN_DB / ENVELOPE_STEP_DB))
    max_step = int(round(ENVELOPE_MAX_DB / ENVELOPE_STEP_DB))
    return np.clip(steps, min_step, max_step)


def decide_envelope_sharing(env: PerceptualEnvelope,
                            prev_env: PerceptualEnvelope | None) -> bool:
    """Reuse the previous envelope when gains moved by at most one grid step.

    Sharing is refused after a SHORT frame and across layout changes, so
    decoded SHORT runs always carry their own envelopes.
    """
    if prev_env is None:
        return False
    if prev_env.layout.frame_kind == FrameKind.SHORT:
        return False
    if prev_env.layout != env.layout:
        return False
    diff = np.abs(np.asarray(env.band_gains_db) - np.asarray(prev_env.band_gains_db))
    return bool(diff.max() <= SHARING_MAX_DIFF_DB + 1e-9)


def envelope_bit_cost(env: PerceptualEnvelope, shared: bool) -> int:
    if shared:
        return 1
    steps = _gain_steps(env)
    zz = _zigzag(np.diff(steps))
    _, cost = best_rice_k(zz)
    return 1 + ENVELOPE_BASE_BITS + RICE_K_BITS + cost


def encode_envelope(writer: BitWriter, env: PerceptualEnvelope, shared: bool) -> None:
    """Sharing bit, then (if novel) base gain index plus Rice-coded deltas."""
    writer.write_bit(1 if shared else 0)
    if shared:
        return
    steps = _gain_steps(env)
    min_step = int(round(ENVELOPE_MIN_DB / ENVELOPE_STEP_DB))
    writer.write_bits(int(steps[0]) - min_step, ENVELOPE_BASE_BITS)
    zz = _zigzag(np.diff(steps))
    k, _ = best_rice_k(zz)
    writer.write_bits(k, RICE_K_BITS)
    for v in zz:
        rice_encode(writer, int(v), k)


def decode_envelope(reader: BitReader, layout: BandLayout,
                    prev_env: PerceptualEnvelope | None) -> PerceptualEnvelope:
    shared = reader.read_bit() == 1
    if shared:
        if prev_env is None or prev_env.layout != layout:
            raise BitstreamError("sharing flag without a compatible previous envelope")
        return PerceptualEnvelope(np.asarray(prev_env.band_gains_db).copy(),
                                  layout, shared_with_previous=True)
    min_step = int(round(ENVELOPE_MIN_DB / ENVELOPE_STEP_DB))
    steps = np.empty(layout.num_bands, dtype=np.int64)
    steps[0] = reader.read_bits(ENVELOPE_BASE_BITS) + min_step
    k = reader.read_bits(RICE_K_BITS)
    for b in range(1, layout.num_bands):
        steps[b] = steps[b - 1] + _unzigzag(rice_decode(reader, k))
    gains = steps * ENVELOPE_STEP_DB
    if gains.min() < ENVELOPE_MIN_DB - 1e-9 or gains.max() > ENVELOPE_MAX_DB + 1e-9:
        raise BitstreamError("decoded envelope gain out of range")
    return PerceptualEnvelope(gains, layout, shared_with_previous=False)


# ---------------------------------------------------------------- coefficients

def coefficient_bit_cost(indices: np.ndarray, layout: BandLayout) -> int:
    """Exact payload size of :func:`encode_coefficients` without emitting bits."""
    mags = np.abs(np.asarray(indices, dtype=np.int64))
    total = 0
    for b in range(layout.num_bands):
        band = mags[layout.band_edges[b] : layout.band_edges[b + 1]]
        _, cost = best_rice_k(band)
        total += RICE_K_BITS + cost + int(np.count_nonzero(band))
    return total


def encode_coefficients(writer: BitWriter, q: QuantizedFrame, layout: BandLayout) -> None:
    """Per band: 4-bit Rice parameter, then per line a magnitude code followed
    by a sign bit (1 = negative) whenever the magnitude is non-zero."""
    idx = np.asarray(q.indices, dtype=np.int64)
    if idx.shape != (layout.num_lines,):
        raise ValueError("quantized frame does not match layout")
    mags = np.abs(idx)
    for b in range(layout.num_bands):
        lo, hi = layout.band_edges[b], layout.band_edges[b + 1]
        k, _ = best_rice_k(mags[lo:hi])
        writer.write_bits(k, RICE_K_BITS)
        for line in range(lo, hi):
            rice_encode(writer, int(mags[line]), k)
            if mags[line]:
                writer.write_bit(1 if idx[line] < 0 else 0)


def decode_coefficients(reader: BitReader, layout: BandLayout,
                        step_db_offset: float) -> QuantizedFrame:
    idx = np.empty(layout.num_lines, dtype=np.int64)
    for b in range(layout.num_bands):
        k = reader.read_bits(RICE_K_BITS)
        for line in range(layout.band_edges[b], layout.band_edges[b + 1]):
            mag = rice_decode(reader, k)
            if mag and reader.read_bit():
                mag = -mag
            idx[line] = mag
    return QuantizedFrame(idx, step_db_offset)
