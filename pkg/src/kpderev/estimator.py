"""Pluggable direct-path estimators.

The filtering stage only needs some causal estimate of the direct-path
spectrum. Two built-in sources are provided: an oracle that degrades the
ground truth by a controllable amount, and the identity (the observation
itself). A precomputed estimate can also be loaded from a WAV file at
the pipeline level, which is where an external system would plug in.
"""

from dataclasses import dataclass

import numpy as np

from .stft import TFGrid

KINDS = ("oracle", "identity", "external")


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str = "oracle"
    degradation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"estimator kind must be one of {KINDS}, got {self.kind!r}")
        if not np.isfinite(self.degradation) or not 0.0 <= self.degradation <= 1.0:
            raise ValueError("degradation must be a finite value in [0, 1]")


def estimate(spec: EstimatorSpec, observed: TFGrid, direct_truth: TFGrid | None = None) -> TFGrid:
    """Produce the direct-path estimate for ``observed``.

    oracle:   (1 - d) * truth + d * e, where e is complex white noise scaled
              per frame to the local RMS of the truth. Each frame's noise is
              drawn independently in frame order, so output frame t depends
              only on input frames <= t.
    identity: the observation itself.
    """
    if spec.kind == "identity":
        return TFGrid(observed.data.copy(), observed.config, observed.sample_rate)
    if spec.kind == "external":
        raise ValueError("external estimates are loaded from file by the pipeline, not computed")
    if direct_truth is None:
        raise ValueError("oracle estimator requires the direct-path ground truth")
    if direct_truth.data.shape != observed.data.shape:
        raise ValueError(
            f"grid shapes differ: truth {direct_truth.data.shape}, observed {observed.data.shape}"
        )
    s = direct_truth.data
    d = spec.degradation
    if d == 0.0:
        return TFGrid(s.copy(), observed.config, observed.sample_rate)
    t, f = s.shape
    rng = np.random.default_rng(spec.seed)
    out = np.empty_like(s)
    for frame in range(t):
        rms = np.sqrt(np.mean(np.abs(s[frame]) ** 2))
        noise = rms * (rng.standard_normal(f) + 1j * rng.standard_normal(f)) / np.sqrt(2.0)
        out[frame] = (1.0 - d) * s[frame] + d * noise
    return TFGrid(out, observed.config, observed.sample_rate)
