"""MSB-first bit packing used by the entropy coder and the stream container."""

from __future__ import annotations


class BitstreamError(ValueError):
    """Raised when a bitstream is malformed or truncated."""


class BitWriter:
    """Accumulates bits MSB-first; zero-pads the final byte on ``getvalue``."""

    def __init__(self):
        self._buf = bytearray()
        self._current = 0
        self._nbits = 0

    def write_bit(self, bit: int) -> None:
        self._current = (self._current << 1) | (bit & 1)
        self._nbits += 1
        if self._nbits == 8:
            self._buf.append(self._current)
            self._current = 0
            self._nbits = 0

    def write_bits(self, value: int, count: int) -> None:
        if value < 0 or (count < 64 and value >> count):
            raise ValueError(f"value {value} does not fit in {count} bits")
        for i in range(count - 1, -1, -1):
            self.write_bit((value >> i) & 1)

    def write_ones(self, count: int) -> None:
        for _ in range(count):
            self.write_bit(1)

    @property
    def bit_length(self) -> int:
        return len(self._buf) * 8 + self._nbits

    def getvalue(self) -> bytes:
        out = bytearray(self._buf)
        if self._nbits:
            out.append(self._current << (8 - self._nbits))
        return bytes(out)


class BitReader:
    """MSB-first reader over bytes; raises on reads past the end."""

    def __init__(self, data: bytes, start_bit: int = 0):
        self._data = data
        self._pos = start_bit

    @property
    def bit_position(self) -> int:
        return self._pos

    @property
    def bits_remaining(self) -> int:
        return len(self._data) * 8 - self._pos

    def read_bit(self) -> int:
        if self._pos >= len(self._data) * 8:
            raise BitstreamError("truncated stream")
        byte = self._data[self._pos >> 3]
        bit = (byte >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read_bits(self, count: int) -> int:
        value = 0
        for _ in range(count):
            value = (value << 1) | self.read_bit()
        return value
