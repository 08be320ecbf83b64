"""Shoebox room simulation via the image method.

Generates impulse responses for a rectangular room, splits them into
direct-path and reverberant parts, and renders (observed, ground truth)
signal pairs with white noise at an exact SNR.

Wall absorption is initialized from Sabine's formula and then refined
against the measured Schroeder decay of the generated response, because
the raw Sabine inversion leaves the realized T60 systematically long in
small rooms (the late decay is dominated by axial image families rather
than a diffuse field). Reflection coefficients carry a sign flip per
reflection so that coincident image taps do not pile up coherently.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .audio import SampleBuffer
from .errors import DereverbError

SOUND_SPEED = 343.0

# Default gap between the geometric direct arrival and the first taps
# counted as reverberation.
DIRECT_WINDOW_MS = 2.0

# Decibel range of the Schroeder decay used for the T60 line fit.
SCHROEDER_FIT_DB = (-5.0, -25.0)


@dataclass
class RoomScene:
    room_dims: tuple
    source_pos: tuple
    mic_pos: tuple
    t60: float
    sample_rate: int = 16000
    sound_speed: float = SOUND_SPEED

    def __post_init__(self):
        self.room_dims = tuple(float(v) for v in self.room_dims)
        self.source_pos = tuple(float(v) for v in self.source_pos)
        self.mic_pos = tuple(float(v) for v in self.mic_pos)
        if len(self.room_dims) != 3 or any(d <= 0 for d in self.room_dims):
            raise ValueError("room_dims must be three positive lengths")
        for name, pos in (("source_pos", self.source_pos), ("mic_pos", self.mic_pos)):
            if len(pos) != 3:
                raise ValueError(f"{name} must have three coordinates")
            if not all(0.0 < p < d for p, d in zip(pos, self.room_dims)):
                raise ValueError(f"{name} must lie strictly inside the room")
        if self.t60 <= 0:
            raise ValueError("t60 must be positive")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def distance(self) -> float:
        return math.dist(self.source_pos, self.mic_pos)

    def sabine_absorption(self) -> float:
        lx, ly, lz = self.room_dims
        volume = lx * ly * lz
        surface = 2.0 * (lx * ly + lx * lz + ly * lz)
        return 24.0 * math.log(10.0) * volume / (self.sound_speed * surface * self.t60)


@dataclass
class Rir:
    """Impulse response taps plus the index separating direct from reverb."""

    taps: np.ndarray
    direct_cutoff: int
    sample_rate: int = 16000

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.float64)
        if self.taps.ndim != 1 or self.taps.size == 0:
            raise ValueError("taps must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("taps contain non-finite values")
        if not 0 < self.direct_cutoff < self.taps.size:
            raise ValueError("direct_cutoff must fall inside the response")

    @property
    def direct_index(self) -> int:
        """Index of the first nonzero tap (the geometric direct arrival)."""
        nz = np.nonzero(self.taps)[0]
        if nz.size == 0:
            raise DereverbError("impulse response is all zero")
        return int(nz[0])


def schroeder_t60(taps: np.ndarray, sample_rate: int, fit_db=SCHROEDER_FIT_DB) -> float:
    """Estimate T60 by a line fit on the backward-integrated energy decay."""
    taps = np.asarray(taps, dtype=np.float64)
    energy = np.cumsum((taps**2)[::-1])[::-1]
    if energy[0] <= 0:
        raise DereverbError("cannot estimate decay of an all-zero response")
    db = 10.0 * np.log10(np.maximum(energy / energy[0], 1e-30))
    hi, lo = fit_db
    idx = np.where((db <= hi) & (db >= lo))[0]
    if idx.size < 2:
        raise DereverbError("decay range too short for a T60 fit")
    slope = np.polyfit(idx / sample_rate, db[idx], 1)[0]
    if slope >= 0:
        raise DereverbError("energy does not decay, cannot fit T60")
    return -60.0 / slope


def _lattice_rir(scene: RoomScene, beta: float, n_taps: int, max_order=None) -> np.ndarray:
    """Sum all image sources with reflection coefficient ``beta``."""
    fs = scene.sample_rate
    c = scene.sound_speed
    dims = np.asarray(scene.room_dims)
    src = np.asarray(scene.source_pos)
    mic = np.asarray(scene.mic_pos)

    reach = (n_taps - 1) / fs * c
    orders = np.ceil(reach / (2.0 * dims)).astype(int)
    if max_order is not None:
        orders = np.minimum(orders, int(max_order))
    if beta == 0.0:
        orders[:] = 0

    # Per axis: candidate image coordinates and their reflection counts
    # for every (lattice index r, parity p) pair.
    coords, counts = [], []
    for i in range(3):
        r = np.arange(-orders[i], orders[i] + 1, dtype=np.float64)[:, None]
        p = np.array([0.0, 1.0])[None, :]
        pos = (1.0 - 2.0 * p) * src[i] + 2.0 * r * dims[i]
        cnt = np.abs(r + p) + np.abs(r)
        coords.append(pos.ravel())
        counts.append(cnt.ravel())

    dx = coords[0][:, None, None] - mic[0]
    dy = coords[1][None, :, None] - mic[1]
    dz = coords[2][None, None, :] - mic[2]
    dist = np.sqrt(dx * dx + dy * dy + dz * dz).ravel()
    refl = (
        counts[0][:, None, None] + counts[1][None, :, None] + counts[2][None, None, :]
    ).ravel()

    tap_idx = np.rint(dist / c * fs).astype(np.int64)
    keep = (tap_idx >= 0) & (tap_idx < n_taps)
    amp = np.power(beta, refl[keep]) / (4.0 * math.pi * np.maximum(dist[keep], 1e-6))
    h = np.zeros(n_taps)
    np.add.at(h, tap_idx[keep], amp)
    return h


def image_method(
    scene: RoomScene,
    n_taps: int | None = None,
    max_order: int | None = None,
    anechoic: bool = False,
    calibrate: bool = True,
) -> Rir:
    """Generate the room impulse response of ``scene``.

    ``n_taps`` defaults to ceil(t60 * fs). ``anechoic`` keeps the free-field
    direct tap only. ``calibrate`` refines the wall absorption (at most two
    regenerations) until the Schroeder T60 lands within 2% of the target.
    """
    fs = scene.sample_rate
    dist = scene.distance
    if dist < 1e-9:
        raise DereverbError("source and microphone coincide")
    direct_at = int(round(fs * dist / scene.sound_speed))
    window = int(round(DIRECT_WINDOW_MS * 1e-3 * fs))

    if anechoic:
        taps = _lattice_rir(scene, 0.0, direct_at + window + 1, max_order=0)
        return Rir(taps, direct_at + window, fs)

    if n_taps is None:
        n_taps = int(math.ceil(scene.t60 * fs))
    n_taps = max(n_taps, direct_at + window + 2)

    absorption = scene.sabine_absorption()
    if absorption >= 1.0:
        raise DereverbError(
            f"t60 {scene.t60} s is unachievable for this geometry "
            f"(Sabine absorption {absorption:.2f} >= 1)"
        )
    taps = None
    for _ in range(3):
        beta = -math.sqrt(1.0 - min(absorption, 0.999))
        taps = _lattice_rir(scene, beta, n_taps, max_order)
        if not calibrate:
            break
        measured = schroeder_t60(taps, fs)
        if abs(measured / scene.t60 - 1.0) < 0.02:
            break
        absorption = min(0.999, absorption * measured / scene.t60)
    cutoff = min(direct_at + window, n_taps - 1)
    return Rir(taps, cutoff, fs)


def split_direct(rir: Rir, cutoff_ms: float | None = None) -> tuple:
    """Partition a response into (direct, reverb) parts that sum to it exactly.

    ``cutoff_ms`` measures from the direct arrival; when omitted the cutoff
    stored on the response is used.
    """
    if cutoff_ms is None:
        cutoff = rir.direct_cutoff
    else:
        cutoff = rir.direct_index + int(round(cutoff_ms * 1e-3 * rir.sample_rate))
    if not 0 < cutoff < rir.taps.size:
        raise ValueError(f"cutoff {cutoff} falls outside the {rir.taps.size}-tap response")
    direct = np.zeros_like(rir.taps)
    reverb = np.zeros_like(rir.taps)
    direct[:cutoff] = rir.taps[:cutoff]
    reverb[cutoff:] = rir.taps[cutoff:]
    return Rir(direct, cutoff, rir.sample_rate), Rir(reverb, cutoff, rir.sample_rate)


@dataclass
class RenderedScene:
    observed: SampleBuffer
    direct_truth: SampleBuffer
    reverb_truth: SampleBuffer
    noise: SampleBuffer
    snr_db: float


def render_scene(clean: SampleBuffer, rir: Rir, snr_db: float, rng=None) -> RenderedScene:
    """Convolve clean speech with a response and add white noise at ``snr_db``.

    The noise gain is solved exactly from the rendered reverberant energy,
    so the realized SNR matches the request to float precision. Passing
    ``math.inf`` disables the noise entirely.
    """
    if clean.sample_rate != rir.sample_rate:
        raise ValueError("clean signal and impulse response sample rates differ")
    energy_clean = float(np.sum(clean.samples**2))
    if energy_clean <= 0.0:
        raise DereverbError("clean input is silent, SNR is undefined")
    n = len(clean)
    reverberant = fftconvolve(clean.samples, rir.taps)[:n]
    direct_part, reverb_part = split_direct(rir)
    direct = fftconvolve(clean.samples, direct_part.taps)[:n]
    reverb = fftconvolve(clean.samples, reverb_part.taps)[:n]

    if math.isinf(snr_db):
        noise = np.zeros(n)
        observed = reverberant
    else:
        rng = np.random.default_rng(rng)
        noise = rng.standard_normal(n)
        target = float(np.sum(reverberant**2)) / (10.0 ** (snr_db / 10.0))
        noise *= math.sqrt(target / float(np.sum(noise**2)))
        observed = reverberant + noise

    fs = clean.sample_rate
    return RenderedScene(
        observed=SampleBuffer(observed, fs),
        direct_truth=SampleBuffer(direct, fs),
        reverb_truth=SampleBuffer(reverb, fs),
        noise=SampleBuffer(noise, fs),
        snr_db=snr_db,
    )


def sample_scene(rng=None, t60: float | None = None, sample_rate: int = 16000) -> RoomScene:
    """Draw a random scene: room 5-10 x 5-10 x 3-4 m, mic centered at
    1-2 m height, source 0.5-2 m away, T60 0.3-0.8 s."""
    rng = np.random.default_rng(rng)
    dims = (rng.uniform(5.0, 10.0), rng.uniform(5.0, 10.0), rng.uniform(3.0, 4.0))
    mic = np.array([dims[0] / 2.0, dims[1] / 2.0, rng.uniform(1.0, 2.0)])
    margin = 0.3
    while True:
        direction = rng.standard_normal(3)
        direction /= np.linalg.norm(direction)
        src = mic + rng.uniform(0.5, 2.0) * direction
        if all(margin < s < d - margin for s, d in zip(src, dims)):
            break
    if t60 is None:
        t60 = rng.uniform(0.3, 0.8)
    return RoomScene(dims, tuple(src), tuple(mic), t60, sample_rate)
