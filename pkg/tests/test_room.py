import math

import numpy as np
import pytest

from kpderev import (
    DereverbError,
    RoomScene,
    SampleBuffer,
    image_method,
    render_scene,
    sample_scene,
    schroeder_t60,
    split_direct,
    speech_like,
)
from kpderev.room import SOUND_SPEED, Rir

FS = 16000


def scene(src=(4.5, 3.8, 1.6), t60=0.4):
    return RoomScene((7.0, 7.0, 3.0), src, (3.5, 3.5, 1.5), t60)


def test_anechoic_single_tap():
    sc = scene()
    rir = image_method(sc, anechoic=True)
    nz = np.nonzero(rir.taps)[0]
    assert nz.size == 1
    expected_idx = round(FS * sc.distance / SOUND_SPEED)
    assert nz[0] == expected_idx
    assert rir.taps[nz[0]] == pytest.approx(1.0 / (4 * math.pi * sc.distance), rel=1e-12)


def test_direct_tap_amplitude_inverse_distance():
    near = scene(src=(4.0, 3.5, 1.5))  # 0.5 m
    far = scene(src=(4.5, 3.5, 1.5))  # 1.0 m
    a_near = image_method(near, anechoic=True).taps.max()
    a_far = image_method(far, anechoic=True).taps.max()
    assert abs(a_near / a_far - 2.0) < 0.02


def test_schroeder_t60_in_band():
    rir = image_method(scene(t60=0.4))
    est = schroeder_t60(rir.taps, FS)
    assert 0.32 <= est <= 0.48


def test_rir_deterministic():
    a = image_method(scene())
    b = image_method(scene())
    assert np.array_equal(a.taps, b.taps)


def test_split_reconstruction_exact():
    rir = image_method(scene())
    direct, reverb = split_direct(rir)
    np.testing.assert_array_equal(direct.taps + reverb.taps, rir.taps)
    # disjoint supports partition the energy exactly
    assert np.sum(direct.taps**2) + np.sum(reverb.taps**2) == pytest.approx(
        np.sum(rir.taps**2), rel=0, abs=0
    )
    assert np.all(direct.taps[rir.direct_cutoff :] == 0)


def test_split_anechoic_reverb_is_zero():
    rir = image_method(scene(), anechoic=True)
    _, reverb = split_direct(rir, cutoff_ms=1.0)
    assert np.all(reverb.taps == 0)


def test_split_cutoff_out_of_range():
    rir = image_method(scene(), anechoic=True)
    with pytest.raises(ValueError):
        split_direct(rir, cutoff_ms=1000.0)


def test_render_snr_disabled_is_exact_convolution(rng):
    from scipy.signal import fftconvolve

    clean = speech_like(0.5, rng=rng)
    rir = image_method(scene())
    res = render_scene(clean, rir, math.inf)
    # nothing added on top of the rendered convolution
    assert np.all(res.noise.samples == 0)
    np.testing.assert_array_equal(
        res.observed.samples, fftconvolve(clean.samples, rir.taps)[: len(clean)]
    )
    manual = np.convolve(clean.samples, rir.taps)[: len(clean)]
    np.testing.assert_allclose(res.observed.samples, manual, atol=1e-12)


@pytest.mark.parametrize("snr", [0.0, 25.0])
def test_render_snr_exact(rng, snr):
    clean = speech_like(0.5, rng=rng)
    rir = image_method(scene())
    res = render_scene(clean, rir, snr, rng=rng)
    reverberant = res.observed.samples - res.noise.samples
    measured = 10 * np.log10(np.sum(reverberant**2) / np.sum(res.noise.samples**2))
    assert abs(measured - snr) < 0.01


def test_render_direct_truth_uses_direct_part(rng):
    clean = speech_like(0.5, rng=rng)
    rir = image_method(scene())
    direct, reverb = split_direct(rir)
    res = render_scene(clean, rir, math.inf)
    np.testing.assert_allclose(
        res.direct_truth.samples,
        np.convolve(clean.samples, direct.taps)[: len(clean)],
        atol=1e-12,
    )
    np.testing.assert_allclose(
        res.direct_truth.samples + res.reverb_truth.samples,
        res.observed.samples,
        atol=1e-9,
    )


def test_render_matches_direct_sum_oracle(rng):
    # brute-force O(N*L) convolution on a small case
    clean = SampleBuffer(rng.standard_normal(400) * 0.2)
    taps = np.zeros(60)
    taps[3] = 0.8
    taps[17] = -0.3
    taps[44] = 0.12
    rir = Rir(taps, direct_cutoff=10)
    res = render_scene(clean, rir, math.inf)
    oracle = np.zeros(len(clean))
    for n in range(len(clean)):
        for l in range(min(n + 1, taps.size)):
            oracle[n] += taps[l] * clean.samples[n - l]
    np.testing.assert_allclose(res.observed.samples, oracle, atol=1e-9)


def test_render_silent_clean_rejected():
    rir = image_method(scene(), anechoic=True)
    with pytest.raises(DereverbError, match="silent"):
        render_scene(SampleBuffer(np.zeros(1000)), rir, 20.0)


def test_unachievable_t60_rejected():
    with pytest.raises(DereverbError, match="unachievable"):
        image_method(scene(t60=0.01))


def test_source_on_mic_rejected():
    sc = scene(src=(3.5, 3.5, 1.5))
    with pytest.raises(DereverbError, match="coincide"):
        image_method(sc)


def test_scene_validation():
    with pytest.raises(ValueError):
        RoomScene((7, 7, 3), (8.0, 1, 1), (3.5, 3.5, 1.5), 0.4)  # outside
    with pytest.raises(ValueError):
        RoomScene((7, 7, 3), (4, 4, 1.5), (3.5, 3.5, 1.5), -1.0)


def test_sample_scene_ranges(rng):
    for _ in range(20):
        sc = sample_scene(rng)
        assert 5 <= sc.room_dims[0] <= 10
        assert 5 <= sc.room_dims[1] <= 10
        assert 3 <= sc.room_dims[2] <= 4
        assert 0.5 <= sc.distance <= 2.0
        assert 0.3 <= sc.t60 <= 0.8
        assert 1.0 <= sc.mic_pos[2] <= 2.0
