"""Frame-online speech dereverberation toolkit.

Pipeline: simulate or load a reverberant recording, estimate the
direct-path spectrum (oracle, identity, or an external file), then
suppress the residual reverberation per frequency bin with either the
full-filter online predictor (`fcp_process`) or its Kronecker-factored
variant (`kpfcp_process`). Closed-form multiply models, a runtime
multiply counter and quality metrics round out the toolkit.
"""

from ._backend import default_backend, have_native
from .audio import SampleBuffer, read_wav, write_wav
from .complexity import (
    GTCRN_MACS_PER_TF_UNIT,
    MacCounter,
    MacModel,
    crossover,
    mac_fcp,
    mac_kpfcp,
    measure_macs,
)
from .errors import AudioFormatError, ConfigError, DereverbError, NumericsError
from .estimator import EstimatorSpec, estimate
from .fcp import FcpBinState, FcpParams, fcp_process
from .kron import kron_expand, stacked_regressors
from .kpfcp import KpfcpBinState, KpfcpParams, kpfcp_process
from .metrics import MetricsReport, delta, fwsnr, segmental_track
from .room import (
    Rir,
    RoomScene,
    image_method,
    render_scene,
    sample_scene,
    schroeder_t60,
    split_direct,
)
from .signals import speech_like
from .stft import StftConfig, TFGrid, analyze, synthesize
from .weighting import LambdaTracker, lambda_grid

__version__ = "0.1.0"

__all__ = [
    "AudioFormatError",
    "ConfigError",
    "DereverbError",
    "EstimatorSpec",
    "FcpBinState",
    "FcpParams",
    "GTCRN_MACS_PER_TF_UNIT",
    "KpfcpBinState",
    "KpfcpParams",
    "LambdaTracker",
    "MacCounter",
    "MacModel",
    "MetricsReport",
    "NumericsError",
    "Rir",
    "RoomScene",
    "SampleBuffer",
    "StftConfig",
    "TFGrid",
    "analyze",
    "crossover",
    "default_backend",
    "delta",
    "estimate",
    "fcp_process",
    "fwsnr",
    "have_native",
    "image_method",
    "kron_expand",
    "kpfcp_process",
    "lambda_grid",
    "mac_fcp",
    "mac_kpfcp",
    "measure_macs",
    "read_wav",
    "render_scene",
    "sample_scene",
    "schroeder_t60",
    "segmental_track",
    "speech_like",
    "split_direct",
    "stacked_regressors",
    "synthesize",
    "write_wav",
]
