"""Per-unit cost weighting for the prediction filters.

Each TF unit is weighted by lambda = |Y|^2 + sigma * M^2 where M is the
running maximum of |Y| over everything observed so far. Grids use a
frame-level pre-pass: the maximum is taken over all bins of frames up to
and including the current one, so bins stay independent within a frame
and bin-parallel processing is order-free. A floor guards silence.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_SIGMA = 0.01
DEFAULT_LAMBDA_FLOOR = 1e-10


@dataclass
class LambdaTracker:
    """Streaming form of the weighting for one sample at a time."""

    sigma: float = DEFAULT_SIGMA
    floor: float = DEFAULT_LAMBDA_FLOOR
    running_max_mag: float = 0.0

    def update(self, y: complex) -> float:
        mag = abs(y)
        if mag > self.running_max_mag:
            self.running_max_mag = mag
        lam = mag * mag + self.sigma * self.running_max_mag**2
        return max(lam, self.floor)


def lambda_grid(
    observed: np.ndarray,
    sigma: float = DEFAULT_SIGMA,
    floor: float = DEFAULT_LAMBDA_FLOOR,
) -> np.ndarray:
    """Weights for a (frames x bins) grid, causal in the frame index."""
    mag = np.abs(observed)
    running_max = np.maximum.accumulate(mag.max(axis=1))
    lam = mag**2 + sigma * (running_max**2)[:, None]
    return np.maximum(lam, floor)
