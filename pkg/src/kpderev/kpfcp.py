"""Frame-online dereverberation with a Kronecker-factored prediction filter.

Instead of adapting one length-K filter per bin, two stacked banks of
short factors are updated in turn each frame:

    1. project the history onto the previous g2 bank  -> s2
    2. weighted RLS step on the stacked g1 (length P*K1) against s2
    3. re-project the history onto the fresh g1 bank  -> s1
    4. weighted RLS step on the stacked g2 (length P*K2) against s1
    5. out = s_nn + y - g2^H s1   (updated g2, fresh s1)

Step 3 uses the updated g1, matching the sequential update order: the
second error and the output both see the current first bank.

Initialization matters here: zero factor blocks are a fixed point of
the interleaved updates (a zero g2 block zeroes the matching s2 block,
so the g1 block never moves, and symmetrically), and identical blocks
stay identical. The second bank therefore starts with a distinct unit
vector per block, g2_p = e_p, while the first bank starts as e_1 with
the remaining blocks zero; the expanded filter is still exactly the
first unit vector, so the initial reverberation estimate is zero.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericsError
from .kron import stacked_regressors
from .rls import DEFAULT_PHI_INV_CAP, rls_update
from .stft import TFGrid
from .weighting import DEFAULT_LAMBDA_FLOOR, DEFAULT_SIGMA, lambda_grid
from . import _backend


@dataclass(frozen=True)
class KpfcpParams:
    p: int = 5
    k1: int = 9
    k2: int = 9
    alpha1: float = 0.95
    alpha2: float = 0.95
    sigma: float = DEFAULT_SIGMA
    lambda_floor: float = DEFAULT_LAMBDA_FLOOR
    phi_inv_cap: float = DEFAULT_PHI_INV_CAP

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("k1 and k2 must be >= 1")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.p > min(self.k1, self.k2):
            raise ValueError(
                f"p={self.p} violates the rank bound p <= min(k1, k2) = {min(self.k1, self.k2)}"
            )
        for name, a in (("alpha1", self.alpha1), ("alpha2", self.alpha2)):
            if not 0.0 < a <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.lambda_floor <= 0.0:
            raise ValueError("lambda_floor must be > 0")
        if self.phi_inv_cap < 1.0:
            raise ValueError("phi_inv_cap must be >= 1 (the initial inverses are the identity)")

    @property
    def k(self) -> int:
        return self.k1 * self.k2


class KpfcpBinState:
    """Adaptive state of one frequency bin: two factor banks, two inverses."""

    def __init__(self, params: KpfcpParams):
        self.params = params
        p, k1, k2 = params.p, params.k1, params.k2
        self.g1 = np.zeros(p * k1, dtype=np.complex128)
        self.g1[0] = 1.0
        self.g2 = np.zeros(p * k2, dtype=np.complex128)
        for block in range(p):  # distinct unit vector per block, see module docstring
            self.g2[block * k2 + block] = 1.0
        self.phi2_inv = np.eye(p * k1, dtype=np.complex128)
        self.phi1_inv = np.eye(p * k2, dtype=np.complex128)
        self.history = np.zeros(params.k, dtype=np.complex128)

    def g1_blocks(self) -> np.ndarray:
        return self.g1.reshape(self.params.p, self.params.k1)

    def g2_blocks(self) -> np.ndarray:
        return self.g2.reshape(self.params.p, self.params.k2)

    def step(self, y: complex, s_nn: complex, lam: float, counter=None) -> complex:
        pr = self.params
        h = self.history
        h[1:] = h[:-1]
        h[0] = s_nn
        s_mat = h.reshape(pr.k2, pr.k1).T

        # first bank against the previous second bank
        s2 = (self.g2_blocks().conj() @ s_mat.T).reshape(-1)
        e1 = y - np.vdot(self.g1, s2)
        rls_update(self.phi2_inv, self.g1, s2, e1, pr.alpha1, lam, counter,
                   cap=pr.phi_inv_cap)

        # second bank against the freshly updated first bank
        s1 = (self.g1_blocks().conj() @ s_mat).reshape(-1)
        e2 = y - np.vdot(self.g2, s1)
        rls_update(self.phi1_inv, self.g2, s1, e2, pr.alpha2, lam, counter,
                   cap=pr.phi_inv_cap)

        out = s_nn + y - np.vdot(self.g2, s1)
        if counter is not None:
            counter.add_cc(2 * pr.p * pr.k)                 # both projections
            counter.add_cc(2 * pr.p * pr.k1 + pr.p * pr.k2)  # error and output dots
        return out


def _process_python(observed, s_nn, lam, params, counter=None):
    t_frames, f_bins = observed.shape
    out = np.empty_like(observed)
    # blow-ups surface as NumericsError, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for f in range(f_bins):
            state = KpfcpBinState(params)
            y_col = observed[:, f]
            s_col = s_nn[:, f]
            lam_col = lam[:, f]
            for t in range(t_frames):
                val = state.step(y_col[t], s_col[t], lam_col[t], counter)
                if not (np.isfinite(val.real) and np.isfinite(val.imag)):
                    raise NumericsError(t, f, "kpfcp output")
                out[t, f] = val
    return out


def kpfcp_process(observed: TFGrid, s_nn: TFGrid, params: KpfcpParams = KpfcpParams(),
                  backend: str | None = None, workers: int = 1, counter=None) -> TFGrid:
    """Dereverberate a whole grid with the Kronecker-factored filter."""
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
            "kpfcp", observed.data, s_nn.data, lam,
            dict(p=params.p, k1=params.k1, k2=params.k2,
                 alpha1=params.alpha1, alpha2=params.alpha2, cap=params.phi_inv_cap),
            workers,
        )
    return TFGrid(out, observed.config, observed.sample_rate)
