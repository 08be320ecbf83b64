"""Synthetic test signals.

`speech_like` produces a crude speech surrogate: voiced stretches
(pitch-modulated pulse trains shaped by a few resonators) alternating
with fricative-like noise bursts and short pauses. It is nonstationary
and spectrally dynamic, which is what the adaptive filters and the
segmental metrics need; it is not meant to sound natural.
"""

import numpy as np
from scipy import signal as sps

from .audio import SampleBuffer


def _resonator(freq: float, bw: float, fs: float):
    # Two-pole resonator coefficients.
    r = np.exp(-np.pi * bw / fs)
    theta = 2.0 * np.pi * freq / fs
    a = [1.0, -2.0 * r * np.cos(theta), r * r]
    return [1.0 - r], a


def _voiced(n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    f0 = rng.uniform(90.0, 200.0)
    drift = np.cumsum(rng.standard_normal(n)) * 0.02
    phase = np.cumsum(2.0 * np.pi * (f0 * (1.0 + 0.03 * np.sin(drift))) / fs)
    # Impulse-ish glottal train from the phase wraps.
    pulses = (np.diff(np.floor(phase / (2.0 * np.pi)), prepend=0.0) > 0).astype(float)
    out = np.zeros(n)
    for _ in range(3):
        b, a = _resonator(rng.uniform(300.0, 3000.0), rng.uniform(80.0, 200.0), fs)
        out += sps.lfilter(b, a, pulses) * rng.uniform(0.5, 1.0)
    return out


def _unvoiced(n: int, fs: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.standard_normal(n)
    b, a = sps.butter(2, [2000.0 / (fs / 2), 6000.0 / (fs / 2)], btype="band")
    return sps.lfilter(b, a, noise) * 0.3


def speech_like(duration_s: float, sample_rate: int = 16000, rng=None) -> SampleBuffer:
    """Generate ``duration_s`` seconds of a speech-shaped random signal."""
    rng = np.random.default_rng(rng)
    fs = float(sample_rate)
    total = int(round(duration_s * sample_rate))
    chunks = []
    filled = 0
    while filled < total:
        kind = rng.choice(["voiced", "unvoiced", "pause"], p=[0.65, 0.2, 0.15])
        if kind == "voiced":
            n = int(rng.uniform(0.15, 0.5) * fs)
            seg = _voiced(n, fs, rng)
        elif kind == "unvoiced":
            n = int(rng.uniform(0.05, 0.2) * fs)
            seg = _unvoiced(n, fs, rng)
        else:
            n = int(rng.uniform(0.05, 0.25) * fs)
            seg = np.zeros(n)
        if seg.size:
            ramp = min(160, seg.size // 4)
            if ramp > 0:
                env = np.ones(seg.size)
                env[:ramp] = np.linspace(0.0, 1.0, ramp)
                env[-ramp:] = np.linspace(1.0, 0.0, ramp)
                seg = seg * env
        chunks.append(seg)
        filled += seg.size
    x = np.concatenate(chunks)[:total]
    peak = np.max(np.abs(x))
    if peak > 0:
        x = x * (0.5 / peak)
    return SampleBuffer(x, sample_rate)
