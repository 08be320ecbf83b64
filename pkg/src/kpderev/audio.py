"""Mono 16-bit PCM WAV input/output and the time-domain sample container."""

import wave
from dataclasses import dataclass

import numpy as np

from .errors import AudioFormatError

SUPPORTED_RATE = 16000
_PCM16_SCALE = 32768.0


@dataclass
class SampleBuffer:
    """A mono time-domain signal with its sample rate.

    Samples are float64 with a nominal range of +-1.
    """

    samples: np.ndarray
    sample_rate: int = SUPPORTED_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples contain non-finite values")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path) -> SampleBuffer:
    """Read a mono 16-bit PCM WAV file at 16 kHz.

    Anything else (stereo, other bit depths, other rates, compressed
    encodings) is rejected with a descriptive error.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            comptype = wf.getcomptype()
            n = wf.getnframes()
            raw = wf.readframes(n)
    except wave.Error as err:
        raise AudioFormatError(f"{path}: not a readable WAV file ({err})") from err
    if comptype != "NONE":
        raise AudioFormatError(f"{path}: compressed WAV ({comptype}) not supported, need plain PCM")
    if channels != 1:
        raise AudioFormatError(f"{path}: {channels} channels found, only mono is supported")
    if sampwidth != 2:
        raise AudioFormatError(f"{path}: {8 * sampwidth}-bit samples found, only 16-bit PCM is supported")
    if rate != SUPPORTED_RATE:
        raise AudioFormatError(f"{path}: sample rate {rate} Hz found, only {SUPPORTED_RATE} Hz is supported")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM16_SCALE
    return SampleBuffer(data, rate)


def write_wav(path, buf: SampleBuffer) -> None:
    """Write a SampleBuffer as mono 16-bit PCM. Values are clipped at +-1."""
    if buf.sample_rate != SUPPORTED_RATE:
        raise AudioFormatError(f"{path}: only {SUPPORTED_RATE} Hz output is supported")
    clipped = np.clip(buf.samples, -1.0, 32767.0 / _PCM16_SCALE)
    pcm = np.round(clipped * _PCM16_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(buf.sample_rate)
        wf.writeframes(pcm.tobytes())
