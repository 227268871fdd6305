"""The ``.mdcn`` stream container.

Layout (all multi-byte header fields little-endian):

    offset  size  field
    0       4     magic "MDCN"
    4       1     version (1)
    5       4     sample rate (48000)
    9       2     target bitrate, kb/s
    11      4     frame count
    15      2     quantizer step offset, signed, units of 1/4 dB
    17      ...   frame records, bit-packed with no per-frame alignment

Each frame record is a 2-bit window type, a perceptual-envelope payload
(sharing bit plus optional body) and a coefficient payload, as produced by
:mod:`mdcn.coding`.  The final byte is zero-padded.  Window types are
validated against the transition grammar while reading so corrupt type
fields are caught before they can desynchronize the payload parse.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import coding
from .bits import BitReader, BitstreamError, BitWriter
from .perceptual import PerceptualEnvelope, layout_for
from .transform import (
    WindowSequence,
    WindowType,
    TransformError,
    _VALID_TRANSITIONS,
)

MAGIC = b"MDCN"
VERSION = 1
HEADER_BYTES = 17
HEADER_BITS = HEADER_BYTES * 8
WINDOW_TYPE_BITS = 2
STEP_QUANTUM_DB = 0.25
_HEADER_FMT = "<4sBIHIh"


def snap_step_offset(step_db_offset: float) -> float:
    """Round an offset to the 1/4 dB grid the header can represent."""
    q = int(np.rint(step_db_offset / STEP_QUANTUM_DB))
    q = max(-(1 << 15), min((1 << 15) - 1, q))
    return q * STEP_QUANTUM_DB


@dataclass(frozen=True)
class StreamHeader:
    target_kbps: int
    frame_count: int
    step_db_offset: float  # snapped to 1/4 dB
    sample_rate: int = 48000
    version: int = VERSION


@dataclass(frozen=True)
class FrameRecord:
    window_type: WindowType
    envelope: PerceptualEnvelope  # effective envelope (previous one if shared)
    shared_envelope: bool
    indices: np.ndarray


def pack_header(header: StreamHeader) -> bytes:
    return struct.pack(
        _HEADER_FMT,
        MAGIC,
        header.version,
        header.sample_rate,
        header.target_kbps,
        header.frame_count,
        int(np.rint(header.step_db_offset / STEP_QUANTUM_DB)),
    )


def unpack_header(data: bytes) -> StreamHeader:
    if len(data) < HEADER_BYTES:
        raise BitstreamError("truncated stream: missing header")
    magic, version, rate, kbps, count, step_q = struct.unpack(
        _HEADER_FMT, data[:HEADER_BYTES]
    )
    if magic != MAGIC:
        raise BitstreamError("not an MDCN stream")
    if version != VERSION:
        raise BitstreamError(f"unsupported version {version}")
    if rate != 48000:
        raise BitstreamError(f"unsupported sample rate {rate}")
    return StreamHeader(kbps, count, step_q * STEP_QUANTUM_DB, rate, version)


def write_stream(header: StreamHeader, records: list[FrameRecord]) -> bytes:
    if header.frame_count != len(records):
        raise ValueError("header frame count does not match records")
    out = bytearray(pack_header(header))
    writer = BitWriter()
    for rec in records:
        writer.write_bits(int(rec.window_type), WINDOW_TYPE_BITS)
        coding.encode_envelope(writer, rec.envelope, rec.shared_envelope)
        q = coding.QuantizedFrame(rec.indices, header.step_db_offset)
        coding.encode_coefficients(writer, q, layout_for(rec.window_type))
    out += writer.getvalue()
    return bytes(out)


def read_stream(data: bytes) -> tuple[StreamHeader, list[FrameRecord]]:
    header = unpack_header(data)
    reader = BitReader(data, start_bit=HEADER_BITS)
    records: list[FrameRecord] = []
    prev_type: WindowType | None = None
    prev_env: PerceptualEnvelope | None = None
    for i in range(header.frame_count):
        try:
            wt = WindowType(reader.read_bits(WINDOW_TYPE_BITS))
            if prev_type is None:
                if wt != WindowType.LONG:
                    raise BitstreamError("corrupt window sequence: must start LONG")
            elif wt not in _VALID_TRANSITIONS[prev_type]:
                raise BitstreamError(
                    f"corrupt window sequence: {prev_type.name}->{wt.name}"
                )
            layout = layout_for(wt)
            env = coding.decode_envelope(reader, layout, prev_env)
            q = coding.decode_coefficients(reader, layout, header.step_db_offset)
        except BitstreamError as exc:
            raise BitstreamError(f"frame {i}: {exc}") from None
        records.append(FrameRecord(wt, env, env.shared_with_previous, q.indices))
        prev_type, prev_env = wt, env
    if reader.bits_remaining >= 8:
        raise BitstreamError("trailing bytes after final frame")
    if reader.bits_remaining and reader.read_bits(reader.bits_remaining) != 0:
        raise BitstreamError("non-zero padding bits")
    try:
        window_sequence(records)
    except TransformError as exc:
        raise BitstreamError(f"corrupt window sequence: {exc}") from None
    return header, records


def window_sequence(records: list[FrameRecord]) -> WindowSequence:
    return WindowSequence(tuple(rec.window_type for rec in records))
