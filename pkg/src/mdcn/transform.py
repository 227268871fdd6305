"""Block-switched MDCT analysis/synthesis with transient-driven window planning.

The filterbank runs at 48 kHz with two transform sizes: 768 spectral lines
(1536-sample sine window, hop 768) for stationary content and 192 lines
(384-sample window, hop 192) for transients.  START/STOP bridge windows
connect the two sizes so that every adjacent window pair stays power
complementary and overlap-add reconstructs the input exactly.

Frame grid
----------
The signal is split into "slots" of 768 samples.  Each slot owns one frame
position, centred on the slot; a lead-in and lead-out LONG frame cover the
zero padding at both ends, so a signal of S slots yields S + 2 frame
positions before any slot is expanded into four SHORT frames.  Frame i
starts at ``c[i+1] = c[i] + (3*M[i] - M[i+1]) // 2`` in padded coordinates
(M = line count of the frame), which keeps all non-SHORT frames on the
768-sample grid.  The padded buffer is ``PAD ‖ signal ‖ PAD`` with
``PAD = 1152`` samples of silence.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

SAMPLE_RATE = 48000
LINES_LONG = 768
LINES_SHORT = 192
SLOT = LINES_LONG           # new samples contributed by one long frame
PAD = SLOT + SLOT // 2      # zeros before/after the signal (1152)

# attack detector: 8 sub-blocks of 96 samples per slot, energy-ratio trigger
SUB_BLOCKS_PER_SLOT = 8
SUB_BLOCK = SLOT // SUB_BLOCKS_PER_SLOT
TRANSIENT_THRESHOLD = 10.0
_ENERGY_FLOOR = 1e-12
_MEAN_ALPHA = 0.1


class TransformError(ValueError):
    """Raised for inconsistent window sequences or malformed transform input."""


class WindowType(IntEnum):
    LONG = 0
    START = 1
    SHORT = 2
    STOP = 3


# legal window-type successions (AAC-style bridge grammar)
_VALID_TRANSITIONS = {
    WindowType.LONG: {WindowType.LONG, WindowType.START},
    WindowType.START: {WindowType.SHORT},
    WindowType.SHORT: {WindowType.SHORT, WindowType.STOP},
    WindowType.STOP: {WindowType.LONG, WindowType.START},
}


def lines_for(window_type: WindowType) -> int:
    return LINES_SHORT if window_type == WindowType.SHORT else LINES_LONG


@dataclass(frozen=True)
class WindowSequence:
    """Ordered window types for one encoded stream, boundary frames included."""

    frames: tuple[WindowType, ...]

    def __post_init__(self):
        validate_window_sequence(self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    @property
    def num_slots(self) -> int:
        """Number of 768-sample signal slots covered (boundary frames excluded)."""
        short = sum(1 for w in self.frames if w == WindowType.SHORT)
        return (len(self.frames) - short) + short // 4 - 2


def validate_window_sequence(frames) -> None:
    if len(frames) < 2:
        raise TransformError("window sequence needs at least lead-in and lead-out frames")
    if frames[0] != WindowType.LONG or frames[-1] != WindowType.LONG:
        raise TransformError("first and last frame must be LONG")
    for a, b in zip(frames, frames[1:]):
        if b not in _VALID_TRANSITIONS[a]:
            raise TransformError(f"illegal window transition {a.name}->{b.name}")
    run = 0
    for w in frames:
        if w == WindowType.SHORT:
            run += 1
        else:
            if run % 4:
                raise TransformError("SHORT run length must be a multiple of 4")
            run = 0
    if run % 4:
        raise TransformError("SHORT run length must be a multiple of 4")


def num_slots(num_samples: int) -> int:
    if num_samples <= 0:
        raise TransformError("empty signal")
    return -(-num_samples // SLOT)


@lru_cache(maxsize=None)
def build_window(window_type: WindowType) -> np.ndarray:
    """Sample window for one frame; LONG/START/STOP are 1536 long, SHORT 384."""
    long_w = np.sin(np.pi * (np.arange(2 * LINES_LONG) + 0.5) / (2 * LINES_LONG))
    short_w = np.sin(np.pi * (np.arange(2 * LINES_SHORT) + 0.5) / (2 * LINES_SHORT))
    if window_type == WindowType.LONG:
        w = long_w
    elif window_type == WindowType.SHORT:
        w = short_w
    elif window_type == WindowType.START:
        flat = (LINES_LONG - LINES_SHORT) // 2  # 288
        w = np.concatenate([
            long_w[:LINES_LONG],
            np.ones(flat),
            short_w[LINES_SHORT:],
            np.zeros(flat),
        ])
    elif window_type == WindowType.STOP:
        w = build_window(WindowType.START)[::-1]
    else:  # pragma: no cover
        raise TransformError(f"unknown window type {window_type!r}")
    w = np.asarray(w, dtype=np.float64)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def _cosine_basis(num_lines: int) -> np.ndarray:
    """MDCT basis, shape (2M, M): cos(pi/M * (n + 0.5 + M/2) * (k + 0.5))."""
    m = num_lines
    n = np.arange(2 * m, dtype=np.float64)[:, None]
    k = np.arange(m, dtype=np.float64)[None, :]
    basis = np.cos(np.pi / m * (n + 0.5 + m / 2.0) * (k + 0.5))
    basis.setflags(write=False)
    return basis


@lru_cache(maxsize=None)
def _windowed_basis(window_type: WindowType) -> np.ndarray:
    w = build_window(window_type)
    basis = w[:, None] * _cosine_basis(lines_for(window_type))
    basis.setflags(write=False)
    return basis


def detect_transients(samples: np.ndarray) -> np.ndarray:
    """Per-slot attack flags from high-passed sub-block energy ratios.

    The signal is first-difference high-passed, split into 96-sample
    sub-blocks, and a slot is flagged when any of its sub-block energies
    exceeds ``TRANSIENT_THRESHOLD`` times the running mean of sub-block
    energy up to that point.  The running mean is an exponential average
    (alpha = 0.1) seeded with the first sub-block so steady signals never
    trigger.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise TransformError("expected a mono sample vector")
    if x.size == 0:
        raise TransformError("empty signal")
    if not np.all(np.isfinite(x)):
        raise TransformError("samples must be finite")

    slots = num_slots(x.size)
    padded = np.zeros(slots * SLOT)
    padded[: x.size] = x

    hp = np.empty_like(padded)
    hp[0] = 0.0
    hp[1:] = padded[1:] - padded[:-1]
    energies = np.sum(hp.reshape(-1, SUB_BLOCK) ** 2, axis=1)

    flags = np.zeros(slots, dtype=bool)
    mean = energies[0]
    for i, e in enumerate(energies):
        if e > TRANSIENT_THRESHOLD * max(mean, _ENERGY_FLOOR):
            flags[i // SUB_BLOCKS_PER_SLOT] = True
        mean = (1.0 - _MEAN_ALPHA) * mean + _MEAN_ALPHA * e
    return flags


def plan_window_sequence(flags) -> WindowSequence:
    """Expand transient flags into a valid LONG/START/SHORT/STOP sequence.

    Flagged slots become runs of four SHORT frames bracketed by START and
    STOP; adjacent flagged slots merge into one run.  Slots separated by a
    single clear slot are merged as well (the clear slot is flagged), since
    a STOP cannot double as the next run's START.  The first and last slot
    are never flagged, so the boundary frames stay LONG.
    """
    flags = np.array(flags, dtype=bool)
    if flags.ndim != 1 or flags.size == 0:
        raise TransformError("flags must be a non-empty boolean vector")
    slots = flags.size
    flags[0] = False
    flags[-1] = False
    for s in range(1, slots - 1):
        if flags[s - 1] and not flags[s] and s + 1 < slots and flags[s + 1]:
            flags[s] = True
    flags[0] = False
    flags[-1] = False

    # positions: one per slot plus lead-in/lead-out; start all LONG
    kinds: list[list[WindowType]] = [[WindowType.LONG] for _ in range(slots + 2)]
    for s in range(slots):
        if flags[s]:
            kinds[s + 1] = [WindowType.SHORT] * 4
            if kinds[s][0] == WindowType.LONG:
                kinds[s] = [WindowType.START]
            kinds[s + 2] = [WindowType.STOP]
    frames = tuple(w for pos in kinds for w in pos)
    return WindowSequence(frames)


def frame_starts(seq: WindowSequence) -> np.ndarray:
    """Start sample of every frame's window in padded coordinates."""
    starts = np.empty(len(seq), dtype=np.int64)
    c = 0
    for i, w in enumerate(seq):
        starts[i] = c
        if i + 1 < len(seq):
            m_cur = lines_for(w)
            m_next = lines_for(seq.frames[i + 1])
            c += (3 * m_cur - m_next) // 2
    return starts


def _padded_length(seq: WindowSequence) -> int:
    return seq.num_slots * SLOT + 2 * PAD


def mdct_analyze(samples: np.ndarray, seq: WindowSequence) -> list[np.ndarray]:
    """Forward block-switched MDCT; returns one line vector per frame."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise TransformError("empty signal")
    if num_slots(x.size) != seq.num_slots:
        raise TransformError(
            f"sequence covers {seq.num_slots} slots but signal has {num_slots(x.size)}"
        )
    padded = np.zeros(_padded_length(seq))
    padded[PAD : PAD + x.size] = x

    starts = frame_starts(seq)
    out: list[np.ndarray | None] = [None] * len(seq)
    kinds = np.array([int(w) for w in seq])
    for wt in WindowType:
        idx = np.nonzero(kinds == int(wt))[0]
        if idx.size == 0:
            continue
        length = 2 * lines_for(wt)
        gather = starts[idx][:, None] + np.arange(length)[None, :]
        blocks = padded[gather]
        lines = blocks @ _windowed_basis(wt)
        for j, i in enumerate(idx):
            out[i] = lines[j]
    return [np.asarray(f) for f in out]


def mdct_synthesize(frames: list[np.ndarray], seq: WindowSequence) -> np.ndarray:
    """Inverse transform with overlap-add; returns num_slots*768 samples."""
    if len(frames) != len(seq):
        raise TransformError("frame count does not match window sequence")
    starts = frame_starts(seq)
    acc = np.zeros(_padded_length(seq))
    for lines, wt, c in zip(frames, seq, starts):
        m = lines_for(wt)
        lines = np.asarray(lines, dtype=np.float64)
        if lines.shape != (m,):
            raise TransformError(
                f"frame has {lines.shape} lines, expected ({m},) for {wt.name}"
            )
        block = (2.0 / m) * (_cosine_basis(m) @ lines) * build_window(wt)
        acc[c : c + 2 * m] += block
    return acc[PAD : PAD + seq.num_slots * SLOT]


def all_long_sequence(num_samples: int) -> WindowSequence:
    """All-LONG window sequence covering ``num_samples`` of audio."""
    return WindowSequence(tuple([WindowType.LONG] * (num_slots(num_samples) + 2)))
