"""Gammatone masking model, perceptual envelopes, and spectral weighting.

The masking model is a deliberately simple stand-in for a production
psychoacoustic model, but it keeps the architecture intact: band energies
are gathered through fourth-order gammatone magnitude responses on an
ERB-spaced band grid (44 bands for 768-line frames, 19 for 192-line
frames), spread across bands with fixed slopes (+25 dB/band toward lower
bands, -10 dB/band toward higher), offset by -15 dB, and floored at an
absolute hearing threshold.

All dB values are power dB in raw MDCT-line units; the absolute threshold
is referenced to a nominal full-scale sine peaking at ``lines/2`` so that
LONG and SHORT frames are treated consistently.  The resulting envelope is
quantized to a 1.5 dB grid and divides the spectrum line by line, which
defines the perceptual domain used by the quantizer and the generative
decoder.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .transform import LINES_LONG, LINES_SHORT, SAMPLE_RATE, WindowType, lines_for

BANDS_LONG = 44
BANDS_SHORT = 19
ENVELOPE_STEP_DB = 1.5
ENVELOPE_MIN_DB = -120.0
ENVELOPE_MAX_DB = 60.0

_SPREAD_DOWN_DB = 25.0   # per band toward lower frequencies
_SPREAD_UP_DB = 10.0     # per band toward higher frequencies
_MASK_OFFSET_DB = 15.0
_MIN_FIRST_BAND = 4
_ENERGY_EPS = 1e-30
_FULL_SCALE_SPL = 96.0   # nominal SPL of a 0 dBFS sine
_QUIET_CLAMP_SPL = 45.0  # keeps the quiet threshold sane at band edges


class FrameKind(Enum):
    LONG = "long"    # 768 lines, 44 bands (LONG/START/STOP windows)
    SHORT = "short"  # 192 lines, 19 bands


def frame_kind_of(window_type: WindowType) -> FrameKind:
    return FrameKind.SHORT if window_type == WindowType.SHORT else FrameKind.LONG


@dataclass(frozen=True)
class BandLayout:
    """Partition of the line range into contiguous analysis bands."""

    frame_kind: FrameKind
    band_edges: tuple[int, ...]  # len = num_bands + 1, edges[0] == 0

    def __post_init__(self):
        edges = np.asarray(self.band_edges)
        widths = np.diff(edges)
        if edges[0] != 0 or np.any(widths <= 0):
            raise ValueError("band edges must start at 0 and strictly increase")
        if np.any(np.diff(widths) < 0):
            raise ValueError("band widths must be non-decreasing with frequency")

    @property
    def num_bands(self) -> int:
        return len(self.band_edges) - 1

    @property
    def num_lines(self) -> int:
        return self.band_edges[-1]

    @property
    def line_hz(self) -> float:
        return (SAMPLE_RATE / 2.0) / self.num_lines

    def widths(self) -> np.ndarray:
        return np.diff(np.asarray(self.band_edges))

    def band_of_line(self, line: int) -> int:
        return int(np.searchsorted(self.band_edges, line, side="right") - 1)

    def band_centers_hz(self) -> np.ndarray:
        e = np.asarray(self.band_edges, dtype=np.float64)
        return (e[:-1] + e[1:]) / 2.0 * self.line_hz

    def expand(self, per_band: np.ndarray) -> np.ndarray:
        """Spread per-band values out to one value per line."""
        return np.repeat(np.asarray(per_band), self.widths())


@dataclass(frozen=True)
class MaskingThreshold:
    threshold_db: np.ndarray  # per band, power dB
    layout: BandLayout


@dataclass(frozen=True)
class PerceptualEnvelope:
    band_gains_db: np.ndarray  # multiples of 1.5 dB in [-120, 60]
    layout: BandLayout
    shared_with_previous: bool = False

    def __post_init__(self):
        g = np.asarray(self.band_gains_db)
        if g.shape != (self.layout.num_bands,):
            raise ValueError("one gain per band required")
        if np.any(g < ENVELOPE_MIN_DB - 1e-9) or np.any(g > ENVELOPE_MAX_DB + 1e-9):
            raise ValueError("gain outside [-120, 60] dB")
        steps = g / ENVELOPE_STEP_DB
        if np.any(np.abs(steps - np.rint(steps)) > 1e-9):
            raise ValueError("gains must sit on the 1.5 dB grid")


def _erb_rate(freq_hz):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(freq_hz, dtype=np.float64))


def _erb_rate_inv(rate):
    return (10.0 ** (np.asarray(rate, dtype=np.float64) / 21.4) - 1.0) / 0.00437


def _erb_width_hz(freq_hz):
    return 24.7 * (0.00437 * np.asarray(freq_hz, dtype=np.float64) + 1.0)


def _monotone_integer_widths(ideal, total, minimum):
    """Round ideal widths to integers that are non-decreasing, >= minimum,
    and sum exactly to ``total`` (surplus/deficit settled from the top)."""
    w = np.maximum(minimum, np.rint(ideal).astype(int))
    w = np.maximum.accumulate(w)
    deficit = int(w.sum()) - total
    i = len(w) - 1
    while deficit > 0 and i > 0:
        reducible = w[i] - max(w[i - 1], minimum)
        take = min(reducible, deficit)
        w[i] -= take
        deficit -= take
        i -= 1
    if deficit > 0:
        raise ValueError("cannot satisfy width constraints")
    w[-1] += -deficit if deficit < 0 else 0
    return w


@lru_cache(maxsize=None)
def band_layout(frame_kind: FrameKind) -> BandLayout:
    """ERB-spaced band edges for the LONG (44-band) or SHORT (19-band) grid."""
    if frame_kind == FrameKind.LONG:
        num_lines, num_bands = LINES_LONG, BANDS_LONG
    else:
        num_lines, num_bands = LINES_SHORT, BANDS_SHORT
    line_hz = (SAMPLE_RATE / 2.0) / num_lines
    rates = np.linspace(0.0, float(_erb_rate(SAMPLE_RATE / 2.0)), num_bands + 1)
    ideal_edges = _erb_rate_inv(rates) / line_hz
    widths = _monotone_integer_widths(np.diff(ideal_edges), num_lines, _MIN_FIRST_BAND)
    edges = np.concatenate([[0], np.cumsum(widths)])
    return BandLayout(frame_kind, tuple(int(e) for e in edges))


def layout_for(window_type: WindowType) -> BandLayout:
    return band_layout(frame_kind_of(window_type))


@lru_cache(maxsize=None)
def _gammatone_weights(frame_kind: FrameKind) -> np.ndarray:
    """Power-domain band aggregation weights, shape (bands, lines).

    Row b is the squared magnitude response of a fourth-order gammatone
    centred on band b: (1 + ((f - fc)/bw)^2)^-4 with bw = 1.019 ERB(fc).
    """
    layout = band_layout(frame_kind)
    line_freqs = (np.arange(layout.num_lines) + 0.5) * layout.line_hz
    fc = layout.band_centers_hz()
    bw = 1.019 * _erb_width_hz(fc)
    d = (line_freqs[None, :] - fc[:, None]) / bw[:, None]
    w = (1.0 + d**2) ** -4
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def _absolute_floor_db(frame_kind: FrameKind) -> np.ndarray:
    """Quiet threshold per band, power dB in raw line units."""
    layout = band_layout(frame_kind)
    f_khz = layout.band_centers_hz() / 1000.0
    spl = (
        3.64 * f_khz**-0.8
        - 6.5 * np.exp(-0.6 * (f_khz - 3.3) ** 2)
        + 1e-3 * f_khz**4
    )
    spl = np.minimum(spl, _QUIET_CLAMP_SPL)
    # convert SPL to dBFS, then to raw-line units (full-scale sine ~ lines/2)
    dbfs = spl - _FULL_SCALE_SPL
    floor = dbfs + 20.0 * np.log10(layout.num_lines / 2.0)
    floor.setflags(write=False)
    return floor


def compute_masking_threshold(lines: np.ndarray, layout: BandLayout) -> MaskingThreshold:
    """Band masking thresholds for one frame of MDCT lines."""
    x = np.asarray(lines, dtype=np.float64)
    if x.shape != (layout.num_lines,):
        raise ValueError(f"expected {layout.num_lines} lines, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("lines must be finite")

    energy = _gammatone_weights(layout.frame_kind) @ (x**2)
    e_db = 10.0 * np.log10(np.maximum(energy, _ENERGY_EPS))

    spread = e_db.copy()
    for b in range(1, layout.num_bands):               # masker below, maskee above
        spread[b] = max(spread[b], spread[b - 1] - _SPREAD_UP_DB)
    for b in range(layout.num_bands - 2, -1, -1):      # masker above, maskee below
        spread[b] = max(spread[b], spread[b + 1] - _SPREAD_DOWN_DB)

    threshold = np.maximum(spread - _MASK_OFFSET_DB, _absolute_floor_db(layout.frame_kind))
    return MaskingThreshold(threshold, layout)


def absolute_floor_db(layout: BandLayout) -> np.ndarray:
    return _absolute_floor_db(layout.frame_kind).copy()


def envelope_from_threshold(thr: MaskingThreshold) -> PerceptualEnvelope:
    gains = np.rint(np.asarray(thr.threshold_db) / ENVELOPE_STEP_DB) * ENVELOPE_STEP_DB
    gains = np.clip(gains, ENVELOPE_MIN_DB, ENVELOPE_MAX_DB)
    return PerceptualEnvelope(gains, thr.layout, shared_with_previous=False)


def envelope_to_line_gains(env: PerceptualEnvelope) -> np.ndarray:
    """Linear per-line gains (768 or 192 values)."""
    return env.layout.expand(10.0 ** (np.asarray(env.band_gains_db) / 20.0))


def apply_weighting(lines: np.ndarray, env: PerceptualEnvelope) -> np.ndarray:
    """Divide each line by its band gain: MDCT domain -> perceptual domain."""
    x = np.asarray(lines, dtype=np.float64)
    if x.shape != (env.layout.num_lines,):
        raise ValueError("frame does not match envelope layout")
    return x / envelope_to_line_gains(env)


def remove_weighting(lines: np.ndarray, env: PerceptualEnvelope) -> np.ndarray:
    """Exact inverse of :func:`apply_weighting`."""
    x = np.asarray(lines, dtype=np.float64)
    if x.shape != (env.layout.num_lines,):
        raise ValueError("frame does not match envelope layout")
    return x * envelope_to_line_gains(env)


def layout_table(layout: BandLayout) -> str:
    """Human-readable band table (band index, start line, end line)."""
    rows = ["band  start  end  width  centre_hz"]
    widths = layout.widths()
    centers = layout.band_centers_hz()
    for b in range(layout.num_bands):
        rows.append(
            f"{b:4d}  {layout.band_edges[b]:5d}  {layout.band_edges[b + 1]:3d}"
            f"  {widths[b]:5d}  {centers[b]:9.1f}"
        )
    return "\n".join(rows) + "\n"
