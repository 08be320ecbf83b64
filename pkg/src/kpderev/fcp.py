"""Full-filter frame-online forward convolutional prediction (baseline).

Per frequency bin, one complex filter of length K predicts the current
observation from the K most recent direct-path estimates via weighted
RLS. The dereverberated output adds back the current estimate:

    out = s_nn + y - g^H [s_nn(t), s_nn(t-1), ..., s_nn(t-K+1)]

with the filter updated before the output is formed. The filter starts
as the first unit vector, so the initial reverberation estimate is zero
and the first outputs equal the observation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericsError
from .rls import DEFAULT_PHI_INV_CAP, rls_update
from .stft import TFGrid
from .weighting import DEFAULT_LAMBDA_FLOOR, DEFAULT_SIGMA, lambda_grid
from . import _backend


@dataclass(frozen=True)
class FcpParams:
    k: int = 81
    alpha: float = 0.95
    sigma: float = DEFAULT_SIGMA
    lambda_floor: float = DEFAULT_LAMBDA_FLOOR
    phi_inv_cap: float = DEFAULT_PHI_INV_CAP

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.lambda_floor <= 0.0:
            raise ValueError("lambda_floor must be > 0")
        if self.phi_inv_cap < 1.0:
            raise ValueError("phi_inv_cap must be >= 1 (the initial inverse is the identity)")


class FcpBinState:
    """Adaptive state of one frequency bin."""

    def __init__(self, params: FcpParams):
        self.params = params
        k = params.k
        self.g = np.zeros(k, dtype=np.complex128)
        self.g[0] = 1.0
        self.phi_inv = np.eye(k, dtype=np.complex128)
        self.history = np.zeros(k, dtype=np.complex128)

    def step(self, y: complex, s_nn: complex, lam: float, counter=None) -> complex:
        """Absorb one frame and return the dereverberated value."""
        h = self.history
        h[1:] = h[:-1]
        h[0] = s_nn
        err = y - np.vdot(self.g, h)
        rls_update(self.phi_inv, self.g, h, err, self.params.alpha, lam, counter,
                   cap=self.params.phi_inv_cap)
        out = s_nn + y - np.vdot(self.g, h)
        if counter is not None:
            counter.add_cc(2 * self.params.k)  # prior error and output dots
        return out


def _process_python(observed, s_nn, lam, params, counter=None):
    t_frames, f_bins = observed.shape
    out = np.empty_like(observed)
    # blow-ups surface as NumericsError, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for f in range(f_bins):
            state = FcpBinState(params)
            y_col = observed[:, f]
            s_col = s_nn[:, f]
            lam_col = lam[:, f]
            for t in range(t_frames):
                val = state.step(y_col[t], s_col[t], lam_col[t], counter)
                if not (np.isfinite(val.real) and np.isfinite(val.imag)):
                    raise NumericsError(t, f, "fcp output")
                out[t, f] = val
    return out


def fcp_process(observed: TFGrid, s_nn: TFGrid, params: FcpParams = FcpParams(),
                backend: str | None = None, workers: int = 1, counter=None) -> TFGrid:
    """Dereverberate a whole grid, threading per-bin state over frames."""
    if observed.data.shape != s_nn.data.shape:
        raise ValueError(
            f"grid shapes differ: observed {observed.data.shape}, estimate {s_nn.data.shape}"
        )
    observed.require_finite()
    s_nn.require_finite()
    lam = lambda_grid(observed.data, params.sigma, params.lambda_floor)
    name = _backend.resolve(backend, counter)
    if name == "python":
        out = _process_python(observed.data, s_nn.data, lam, params, counter)
    else:
        out = _backend.run_native(
            "fcp", observed.data, s_nn.data, lam,
            dict(k=params.k, alpha=params.alpha, cap=params.phi_inv_cap), workers,
        )
    return TFGrid(out, observed.config, observed.sample_rate)
