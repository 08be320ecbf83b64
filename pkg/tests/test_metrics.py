import csv
import json
import math

import numpy as np
import pytest

from kpderev import DereverbError, SampleBuffer, delta, fwsnr, segmental_track, speech_like
from kpderev.metrics import (
    FWSNR_CLAMP_DB,
    FWSNR_NFFT,
    MetricsReport,
    mel_filterbank,
    moving_average,
    report,
)


def band_oracle(ref, proc, sr=16000):
    """Brute-force band-by-band evaluation, coded independently of the
    vectorized path: plain loops over frames and bands."""
    frame, hop = int(0.025 * sr), int(0.010 * sr)
    fb = mel_filterbank(sr)
    window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(frame) / frame)
    values = []
    for lo in range(0, len(ref) - frame + 1, hop):
        r = np.fft.rfft(ref[lo : lo + frame] * window, FWSNR_NFFT)
        d = np.fft.rfft((ref - proc)[lo : lo + frame] * window, FWSNR_NFFT)
        num = 0.0
        den = 0.0
        ref_energy = 0.0
        for b in range(fb.shape[0]):
            rp = float(np.sum(fb[b] * np.abs(r) ** 2))
            dp = float(np.sum(fb[b] * np.abs(d) ** 2))
            ref_energy += rp
            w = rp ** 0.1
            num += w * 10 * math.log10((rp + 1e-30) / (dp + 1e-30))
            den += w
        if ref_energy > 1e-30:
            values.append(min(max(num / den, -10.0), 35.0))
    return float(np.mean(values))


def test_identical_signals_hit_ceiling(rng):
    x = speech_like(1.0, rng=rng)
    assert fwsnr(x, x) == FWSNR_CLAMP_DB[1]


def test_sign_flip_value(rng):
    # residual is 2x the reference in every band: 10 log10(1/4) everywhere
    x = speech_like(1.0, rng=rng)
    flipped = SampleBuffer(-x.samples)
    value = fwsnr(x, flipped)
    expected = 10 * math.log10(0.25)
    assert value == pytest.approx(expected, abs=1e-9)
    assert value == pytest.approx(band_oracle(x.samples, flipped.samples), abs=1e-9)


def test_calibrated_ten_db_degradation(rng):
    # error proportional to the reference sits 10 dB down in every band
    x = speech_like(1.5, rng=rng)
    proc = SampleBuffer(x.samples * (1.0 + 10 ** (-0.5)))
    value = fwsnr(x, proc)
    assert abs(value - 10.0) < 0.5
    assert value == pytest.approx(band_oracle(x.samples, proc.samples), abs=1e-9)


def test_oracle_agreement_on_noisy_signal(rng):
    x = speech_like(1.0, rng=rng)
    proc = SampleBuffer(x.samples + rng.standard_normal(len(x)) * 0.01)
    assert fwsnr(x, proc) == pytest.approx(band_oracle(x.samples, proc.samples), abs=1e-9)


def test_invariant_to_common_positive_scaling(rng):
    x = speech_like(1.0, rng=rng)
    proc = SampleBuffer(x.samples + rng.standard_normal(len(x)) * 0.02)
    a = fwsnr(x, proc)
    b = fwsnr(SampleBuffer(x.samples * 7.3), SampleBuffer(proc.samples * 7.3))
    assert abs(a - b) < 1e-9


def test_silent_reference_rejected():
    silent = SampleBuffer(np.zeros(16000))
    with pytest.raises(DereverbError, match="silent"):
        fwsnr(silent, silent)


def test_delta_examples():
    assert delta(5.0, 2.0) == 3.0
    assert delta(4.2, 4.2) == 0.0
    assert delta(4.803, 1.661) == pytest.approx(3.142, abs=1e-12)
    with pytest.raises(ValueError):
        delta(float("nan"), 0.0)


def test_moving_average_examples():
    assert moving_average([0.0, 0.0, 30.0, 0.0, 0.0], 3) == [0.0, 10.0, 10.0, 10.0, 0.0]
    assert moving_average([7.0] * 6, 3) == [7.0] * 6


def test_track_segment_count_and_bounds(rng):
    x = speech_like(20.0, rng=rng)
    proc = SampleBuffer(x.samples + rng.standard_normal(len(x)) * 0.05)
    per_segment, smoothed = segmental_track(x, proc)
    assert len(per_segment) == 20
    assert len(smoothed) == 20
    for (_, v), (_, s) in zip(per_segment, smoothed):
        assert FWSNR_CLAMP_DB[0] <= v <= FWSNR_CLAMP_DB[1]
        assert FWSNR_CLAMP_DB[0] <= s <= FWSNR_CLAMP_DB[1]
    assert [t for t, _ in per_segment] == [float(i) for i in range(20)]


def test_track_rejects_short_signal(rng):
    x = speech_like(0.5, rng=rng)
    with pytest.raises(DereverbError, match="segment"):
        segmental_track(x, x)


def test_report_files(tmp_path, rng):
    ref = speech_like(4.0, rng=rng)
    proc = SampleBuffer(ref.samples + rng.standard_normal(len(ref)) * 0.02)
    obs = SampleBuffer(ref.samples + rng.standard_normal(len(ref)) * 0.2)
    rep = report(ref, proc, obs)
    assert rep.delta_fwsnr_db == pytest.approx(rep.fwsnr_db - rep.fwsnr_observed_db)
    assert rep.pesq is None  # reserved for an external scorer

    rep.to_json(tmp_path / "m.json")
    loaded = json.loads((tmp_path / "m.json").read_text())
    assert loaded["fwsnr_db"] == rep.fwsnr_db

    rep.to_csv(tmp_path / "m.csv")
    with open(tmp_path / "m.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["time_s", "fwsnr_db", "smoothed_db"]
    assert len(rows) == 1 + len(rep.per_segment)
