"""Windowed analysis/synthesis transform between samples and TF grids.

Square-root Hann analysis and synthesis windows (WOLA pair) at 75%
overlap give perfect reconstruction on interior samples. Frames are
taken left-aligned, the tail is zero padded, spectra are onesided.
"""

import math
from dataclasses import dataclass

import numpy as np

from .audio import SampleBuffer
from .errors import DereverbError

_WINDOWS = ("sqrt_hann",)


def _sqrt_hann(n: int) -> np.ndarray:
    # Periodic Hann, so shifted squares sum to an exact constant.
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n))


def make_window(name: str, frame_size: int) -> np.ndarray:
    if name not in _WINDOWS:
        raise ValueError(f"unknown window {name!r}, expected one of {_WINDOWS}")
    return _sqrt_hann(frame_size)


@dataclass(frozen=True)
class StftConfig:
    frame_size: int = 512
    hop: int = 128
    window: str = "sqrt_hann"

    def __post_init__(self):
        if self.frame_size < 2 or self.frame_size % 2 != 0:
            raise ValueError("frame_size must be a positive even number")
        if self.hop <= 0 or self.frame_size % self.hop != 0:
            raise ValueError("hop must be positive and divide frame_size")
        if self.frame_size // self.hop < 2:
            raise ValueError("need at least 2x overlap for reconstruction")
        w = make_window(self.window, self.frame_size)
        # WOLA condition: shifted analysis*synthesis products sum to a constant.
        acc = np.zeros(self.frame_size)
        for m in range(0, self.frame_size, self.hop):
            acc += np.roll(w * w, m)
        if np.ptp(acc) > 1e-10 * acc.mean():
            raise ValueError("window pair does not satisfy the overlap-add condition")

    @property
    def bins(self) -> int:
        return self.frame_size // 2 + 1


@dataclass
class TFGrid:
    """Complex time-frequency matrix, frames along axis 0, bins along axis 1."""

    data: np.ndarray
    config: StftConfig
    sample_rate: int = 16000

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2:
            raise ValueError("grid data must be 2-D (frames x bins)")
        if self.data.shape[1] != self.config.bins:
            raise ValueError(
                f"grid has {self.data.shape[1]} bins, config implies {self.config.bins}"
            )

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]

    def require_finite(self) -> None:
        if not np.all(np.isfinite(self.data)):
            raise DereverbError("TF grid contains non-finite entries")


def num_frames(n_samples: int, cfg: StftConfig) -> int:
    if n_samples <= 0:
        raise ValueError("need a non-empty signal")
    return max(1, math.ceil((n_samples - cfg.frame_size) / cfg.hop) + 1)


def analyze(x: SampleBuffer, cfg: StftConfig = StftConfig()) -> TFGrid:
    """Transform a sample buffer into its onesided STFT grid."""
    n = len(x)
    if n == 0:
        raise ValueError("cannot analyze an empty signal")
    t = num_frames(n, cfg)
    padded = np.zeros((t - 1) * cfg.hop + cfg.frame_size)
    padded[:n] = x.samples
    frames = np.lib.stride_tricks.sliding_window_view(padded, cfg.frame_size)[:: cfg.hop]
    w = make_window(cfg.window, cfg.frame_size)
    spec = np.fft.rfft(frames * w, axis=1)
    return TFGrid(spec, cfg, x.sample_rate)


def synthesize(grid: TFGrid, length: int | None = None) -> SampleBuffer:
    """Overlap-add inverse of :func:`analyze`.

    Interior samples of a round trip match the input to float precision;
    the first and last frame regions are attenuated by partial window
    coverage. ``length`` trims or zero-extends the output.
    """
    grid.require_finite()
    cfg = grid.config
    w = make_window(cfg.window, cfg.frame_size)
    frames = np.fft.irfft(grid.data, n=cfg.frame_size, axis=1) * w
    total = (grid.frames - 1) * cfg.hop + cfg.frame_size
    out = np.zeros(total)
    wsum = np.zeros(total)
    for m in range(grid.frames):
        lo = m * cfg.hop
        out[lo : lo + cfg.frame_size] += frames[m]
        wsum[lo : lo + cfg.frame_size] += w * w
    covered = wsum > 1e-8
    out[covered] /= wsum[covered]
    out[~covered] = 0.0
    if length is not None:
        if length <= total:
            out = out[:length]
        else:
            out = np.concatenate([out, np.zeros(length - total)])
    return SampleBuffer(out, grid.sample_rate)
