"""Frequency-weighted segmental SNR and report plumbing.

The measure frames both signals, takes band magnitudes through a mel
filterbank, and averages band SNRs weighted by compressed reference
magnitudes. The per-band noise is the spectrum of the residual
(reference minus processed), so a processed signal equal to the
reference clamps at the ceiling and any residual energy is charged
where it falls in frequency. All constants live in FWSNR_* so the
realization is auditable in one place.
"""

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .audio import SampleBuffer
from .errors import DereverbError

FWSNR_BANDS = 25
FWSNR_FMIN_HZ = 50.0
FWSNR_FMAX_HZ = 8000.0
FWSNR_FRAME_S = 0.025
FWSNR_HOP_S = 0.010
FWSNR_NFFT = 512
FWSNR_WEIGHT_EXP = 0.2
FWSNR_CLAMP_DB = (-10.0, 35.0)
_EPS = 1e-30


def _mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_inv(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, nfft: int = FWSNR_NFFT, bands: int = FWSNR_BANDS,
                   fmin: float = FWSNR_FMIN_HZ, fmax: float = FWSNR_FMAX_HZ) -> np.ndarray:
    """Triangular filters (bands x bins), unit peak, mel-spaced centers."""
    edges_hz = _mel_inv(np.linspace(_mel(fmin), _mel(fmax), bands + 2))
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sample_rate)
    fb = np.zeros((bands, freqs.size))
    for b in range(bands):
        lo, mid, hi = edges_hz[b], edges_hz[b + 1], edges_hz[b + 2]
        rise = (freqs - lo) / max(mid - lo, 1e-9)
        fall = (hi - freqs) / max(hi - mid, 1e-9)
        fb[b] = np.clip(np.minimum(rise, fall), 0.0, 1.0)
    return fb


def _frame_band_values(reference: np.ndarray, processed: np.ndarray, sample_rate: int):
    """Per-frame clamped band-weighted SNR values."""
    frame = int(round(FWSNR_FRAME_S * sample_rate))
    hop = int(round(FWSNR_HOP_S * sample_rate))
    n = min(len(reference), len(processed))
    if n < frame:
        raise DereverbError(f"signals shorter than one {FWSNR_FRAME_S * 1e3:.0f} ms frame")
    ref = reference[:n]
    residual = ref - processed[:n]
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(frame) / frame)
    fb = mel_filterbank(sample_rate)
    n_frames = (n - frame) // hop + 1
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    ref_spec = np.fft.rfft(ref[idx] * window, FWSNR_NFFT, axis=1)
    res_spec = np.fft.rfft(residual[idx] * window, FWSNR_NFFT, axis=1)
    ref_pow = (np.abs(ref_spec) ** 2) @ fb.T      # (frames, bands)
    res_pow = (np.abs(res_spec) ** 2) @ fb.T
    frame_energy = ref_pow.sum(axis=1)
    active = frame_energy > _EPS * max(frame_energy.max(), 1.0)
    if not np.any(active):
        raise DereverbError("reference is silent, the measure is undefined")
    weights = ref_pow[active] ** (FWSNR_WEIGHT_EXP / 2.0)   # |R|^0.2 on magnitudes
    snr_db = 10.0 * np.log10((ref_pow[active] + _EPS) / (res_pow[active] + _EPS))
    values = (weights * snr_db).sum(axis=1) / np.maximum(weights.sum(axis=1), _EPS)
    return np.clip(values, *FWSNR_CLAMP_DB)


def fwsnr(reference: SampleBuffer, processed: SampleBuffer) -> float:
    """Frequency-weighted segmental SNR in dB (clamped per frame)."""
    if reference.sample_rate != processed.sample_rate:
        raise ValueError("sample rates differ")
    values = _frame_band_values(reference.samples, processed.samples, reference.sample_rate)
    return float(values.mean())


def delta(metric_out: float, metric_observed: float) -> float:
    """Improvement of a processed score over the observed score."""
    if not (math.isfinite(metric_out) and math.isfinite(metric_observed)):
        raise ValueError("metric values must be finite")
    return metric_out - metric_observed


def moving_average(values, window: int = 3):
    """Centered moving average, truncated at the edges."""
    if window < 1:
        raise ValueError("window must be >= 1")
    half = window // 2
    n = len(values)
    return [
        float(np.mean(values[max(0, i - half) : min(n, i + half + 1)]))
        for i in range(n)
    ]


def segmental_track(reference: SampleBuffer, processed: SampleBuffer,
                    segment_s: float = 1.0, smooth_s: float = 3.0):
    """Score per non-overlapping segment plus a centered moving average.

    Returns (per_segment, smoothed) where per_segment is a list of
    (time_s, value) pairs and smoothed has the same shape. The smoothing
    window covers smooth_s / segment_s segments, truncated at the edges.
    """
    if reference.sample_rate != processed.sample_rate:
        raise ValueError("sample rates differ")
    seg = int(round(segment_s * reference.sample_rate))
    n = min(len(reference), len(processed))
    n_segments = n // seg
    if n_segments < 1:
        raise DereverbError("signal shorter than one segment")
    values = []
    for i in range(n_segments):
        sl = slice(i * seg, (i + 1) * seg)
        values.append(
            float(
                _frame_band_values(
                    reference.samples[sl], processed.samples[sl], reference.sample_rate
                ).mean()
            )
        )
    smoothed = moving_average(values, max(1, int(round(smooth_s / segment_s))))
    times = [i * segment_s for i in range(n_segments)]
    return list(zip(times, values)), list(zip(times, smoothed))


@dataclass
class MetricsReport:
    fwsnr_db: float
    fwsnr_observed_db: float
    delta_fwsnr_db: float
    per_segment: list
    smoothed: list
    pesq: float | None = None  # merged from an external scorer when available

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s", "fwsnr_db", "smoothed_db"])
            for (t, value), (_, smooth) in zip(self.per_segment, self.smoothed):
                writer.writerow([f"{t:.3f}", f"{value:.6f}", f"{smooth:.6f}"])


def report(reference: SampleBuffer, processed: SampleBuffer, observed: SampleBuffer,
           segment_s: float = 1.0, smooth_s: float = 3.0) -> MetricsReport:
    """Full report of a processed signal against the reference, with the
    observed signal as the improvement baseline."""
    out_score = fwsnr(reference, processed)
    obs_score = fwsnr(reference, observed)
    per_segment, smoothed = segmental_track(reference, processed, segment_s, smooth_s)
    return MetricsReport(
        fwsnr_db=out_score,
        fwsnr_observed_db=obs_score,
        delta_fwsnr_db=delta(out_score, obs_score),
        per_segment=per_segment,
        smoothed=smoothed,
    )
