import numpy as np
import pytest

from mdcn import perceptual as pc
from mdcn import transform as tr
from mdcn.perceptual import FrameKind

rng = np.random.default_rng(99)


def sine_frame(freq_hz, dbfs):
    n = np.arange(1536)
    x = 10 ** (dbfs / 20.0) * np.sin(2 * np.pi * freq_hz * n / 48000)
    return (x * tr.build_window(tr.WindowType.LONG)) @ tr._cosine_basis(768)


def random_envelope(layout, seed=0):
    r = np.random.default_rng(seed)
    steps = r.integers(-80, 41, layout.num_bands)
    return pc.PerceptualEnvelope(steps * pc.ENVELOPE_STEP_DB, layout)


# ---------------------------------------------------------------- layouts

@pytest.mark.parametrize("kind,bands,lines", [(FrameKind.LONG, 44, 768),
                                              (FrameKind.SHORT, 19, 192)])
def test_layout_partitions_lines(kind, bands, lines):
    layout = pc.band_layout(kind)
    assert layout.num_bands == bands
    assert layout.band_edges[0] == 0
    assert layout.band_edges[-1] == lines
    widths = layout.widths()
    assert widths.sum() == lines
    assert widths[0] >= 4
    assert np.all(np.diff(widths) >= 0)


def test_layout_table_is_complete():
    table = pc.layout_table(pc.band_layout(FrameKind.LONG))
    assert len(table.strip().splitlines()) == 45  # header + 44 bands


# ---------------------------------------------------------------- masking threshold

def test_zero_frame_threshold_is_absolute_floor():
    layout = pc.band_layout(FrameKind.LONG)
    thr = pc.compute_masking_threshold(np.zeros(768), layout)
    assert np.allclose(thr.threshold_db, pc.absolute_floor_db(layout))


def test_sine_threshold_peaks_in_band_of_line_32():
    layout = pc.band_layout(FrameKind.LONG)
    thr = pc.compute_masking_threshold(sine_frame(1000.0, -6.0), layout)
    assert int(np.argmax(thr.threshold_db)) == layout.band_of_line(32)


def test_threshold_is_homogeneous_above_floor():
    layout = pc.band_layout(FrameKind.LONG)
    lines = sine_frame(2000.0, -12.0)
    t1 = pc.compute_masking_threshold(lines, layout).threshold_db
    t2 = pc.compute_masking_threshold(lines * 10 ** (6.0 / 20.0), layout).threshold_db
    floor = pc.absolute_floor_db(layout)
    above = t1 > floor + 1e-9
    assert above.any()
    assert np.allclose(t2[above] - t1[above], 6.0, atol=1e-6)
    assert np.all(t2 >= t1 - 1e-12)


def test_threshold_monotone_in_energy():
    layout = pc.band_layout(FrameKind.SHORT)
    lines = rng.standard_normal(192)
    t1 = pc.compute_masking_threshold(lines, layout).threshold_db
    t2 = pc.compute_masking_threshold(lines * 3.0, layout).threshold_db
    assert np.all(t2 >= t1 - 1e-12)


def test_threshold_never_below_floor():
    layout = pc.band_layout(FrameKind.LONG)
    for _ in range(5):
        lines = rng.standard_normal(768) * 10 ** rng.uniform(-8, 0)
        thr = pc.compute_masking_threshold(lines, layout)
        assert np.all(thr.threshold_db >= pc.absolute_floor_db(layout) - 1e-12)


# ---------------------------------------------------------------- envelopes

@pytest.mark.parametrize("thr_db,expected", [(0.7, 0.0), (2.3, 3.0), (-100.1, -100.5)])
def test_envelope_rounds_to_grid(thr_db, expected):
    layout = pc.band_layout(FrameKind.SHORT)
    thr = pc.MaskingThreshold(np.full(layout.num_bands, thr_db), layout)
    env = pc.envelope_from_threshold(thr)
    assert np.allclose(env.band_gains_db, expected)


def test_envelope_clamps_to_range():
    layout = pc.band_layout(FrameKind.SHORT)
    thr = pc.MaskingThreshold(np.full(layout.num_bands, -500.0), layout)
    env = pc.envelope_from_threshold(thr)
    assert np.all(env.band_gains_db == pc.ENVELOPE_MIN_DB)


def test_envelope_rejects_off_grid_gains():
    layout = pc.band_layout(FrameKind.SHORT)
    with pytest.raises(ValueError, match="grid"):
        pc.PerceptualEnvelope(np.full(layout.num_bands, 0.7), layout)


def test_line_gains_toy_layout():
    layout = pc.BandLayout(FrameKind.SHORT, (0, 4, 8))
    env = pc.PerceptualEnvelope(np.array([0.0, 6.0]), layout)
    gains = pc.envelope_to_line_gains(env)
    assert np.allclose(gains[:4], 1.0)
    assert np.allclose(gains[4:], 10 ** (6.0 / 20.0))


def test_all_zero_envelope_gives_unit_gains():
    layout = pc.band_layout(FrameKind.LONG)
    env = pc.PerceptualEnvelope(np.zeros(44), layout)
    assert np.allclose(pc.envelope_to_line_gains(env), 1.0)


# ---------------------------------------------------------------- weighting

def test_zero_db_envelope_weighting_is_identity():
    layout = pc.band_layout(FrameKind.LONG)
    env = pc.PerceptualEnvelope(np.zeros(44), layout)
    lines = rng.standard_normal(768)
    assert np.allclose(pc.apply_weighting(lines, env), lines)


def test_weighting_scales_band_as_expected():
    layout = pc.band_layout(FrameKind.LONG)
    gains = np.zeros(44)
    gains[10] = 6.0
    env = pc.PerceptualEnvelope(gains, layout)
    lines = np.ones(768)
    weighted = pc.apply_weighting(lines, env)
    lo, hi = layout.band_edges[10], layout.band_edges[11]
    assert np.allclose(weighted[lo:hi], 10 ** (-6.0 / 20.0))
    unweighted = pc.remove_weighting(np.ones(768), env)
    assert np.allclose(unweighted[lo:hi], 10 ** (6.0 / 20.0))


@pytest.mark.parametrize("kind", [FrameKind.LONG, FrameKind.SHORT])
def test_weighting_roundtrip(kind):
    layout = pc.band_layout(kind)
    for seed in range(5):
        env = random_envelope(layout, seed)
        lines = np.random.default_rng(seed).standard_normal(layout.num_lines)
        back = pc.remove_weighting(pc.apply_weighting(lines, env), env)
        assert np.allclose(back, lines, rtol=1e-12, atol=1e-12)
        fwd = pc.apply_weighting(pc.remove_weighting(lines, env), env)
        assert np.allclose(fwd, lines, rtol=1e-12, atol=1e-12)


def test_zero_frame_roundtrips_to_zero():
    layout = pc.band_layout(FrameKind.SHORT)
    env = random_envelope(layout, 3)
    assert np.all(pc.remove_weighting(np.zeros(192), env) == 0.0)
