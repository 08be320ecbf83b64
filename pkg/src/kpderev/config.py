"""Experiment configuration: JSON document, flag overrides, validation.

Precedence is flags > file > defaults. Validation errors name the full
field path. A run manifest is the same document with every sampled or
derived value resolved, so feeding a manifest back in reproduces the
run exactly.
"""

import copy
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .estimator import KINDS as ESTIMATOR_KINDS
from .estimator import EstimatorSpec
from .fcp import FcpParams
from .kpfcp import KpfcpParams
from .stft import StftConfig

DEFAULTS = {
    "seed": 0,
    "backend": None,
    "workers": 1,
    "instrument_macs": False,
    "input": {
        "type": "scene",
        "room": None,
        "source": None,
        "mic": None,
        "t60": 0.4,
        "snr_db": 25.0,
        "duration_s": 8.0,
        "observed": None,
        "direct": None,
        "s_nn": None,
    },
    "stft": {"frame_size": 512, "hop": 128, "window": "sqrt_hann"},
    "estimator": {"kind": "oracle", "degradation": 0.0, "seed": None},
    "algorithm": {
        "name": "kpfcp",
        "k": 81,
        "p": 5,
        "k1": 9,
        "k2": 9,
        "alpha": 0.95,
        "alpha1": 0.95,
        "alpha2": 0.95,
        "sigma": 0.01,
        "lambda_floor": 1e-10,
        "phi_inv_cap": 16.0,
    },
    "metrics": {"enabled": True, "segment_s": 1.0, "smooth_s": 3.0},
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(str(path), f"cannot load config ({err})") from err
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "config document must be a JSON object")
    # manifests wrap the resolved config under "config"
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return doc


def _require(cond: bool, fieldpath: str, message: str):
    if not cond:
        raise ConfigError(fieldpath, message)


def _number(doc, fieldpath, lo=None, hi=None, integer=False, optional=False):
    parts = fieldpath.split(".")
    value = doc
    for p in parts:
        value = value.get(p) if isinstance(value, dict) else None
    if value is None:
        _require(optional, fieldpath, "value is required")
        return None
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             fieldpath, f"expected a number, got {value!r}")
    if integer:
        _require(float(value).is_integer(), fieldpath, f"expected an integer, got {value!r}")
        value = int(value)
    if lo is not None:
        _require(value >= lo, fieldpath, f"must be >= {lo}, got {value}")
    if hi is not None:
        _require(value <= hi, fieldpath, f"must be <= {hi}, got {value}")
    return value


@dataclass
class SceneInput:
    room: tuple | None
    source: tuple | None
    mic: tuple | None
    t60: float
    snr_db: float
    duration_s: float


@dataclass
class WavInput:
    observed: str
    direct: str | None
    s_nn: str | None


@dataclass
class MetricsSettings:
    enabled: bool
    segment_s: float
    smooth_s: float


@dataclass
class ExperimentConfig:
    seed: int
    backend: str | None
    workers: int
    instrument_macs: bool
    input: object
    stft: StftConfig
    estimator_kind: str
    estimator_degradation: float
    estimator_seed: int | None
    algorithm: str
    fcp: FcpParams | None
    kpfcp: KpfcpParams | None
    metrics: MetricsSettings
    raw: dict = field(repr=False, default_factory=dict)

    def params(self):
        return self.fcp if self.algorithm == "fcp" else self.kpfcp


def _parse_point(doc, fieldpath, dims=3):
    value = doc
    for p in fieldpath.split("."):
        value = value.get(p) if isinstance(value, dict) else None
    if value is None:
        return None
    _require(isinstance(value, (list, tuple)) and len(value) == dims,
             fieldpath, f"expected {dims} coordinates")
    for v in value:
        _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                 fieldpath, f"coordinates must be numbers, got {v!r}")
    return tuple(float(v) for v in value)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a merged config dict into a typed configuration."""
    merged = _merge(DEFAULTS, doc)

    seed = _number(merged, "seed", lo=0, integer=True)
    backend = merged.get("backend")
    _require(backend in (None, "native", "python"), "backend",
             f"expected 'native', 'python' or null, got {backend!r}")
    workers = _number(merged, "workers", lo=1, integer=True)
    instrument = merged.get("instrument_macs")
    _require(isinstance(instrument, bool), "instrument_macs", "expected true or false")

    inp = merged["input"]
    input_type = inp.get("type")
    _require(input_type in ("scene", "wav"), "input.type",
             f"expected 'scene' or 'wav', got {input_type!r}")
    if input_type == "scene":
        room = _parse_point(merged, "input.room")
        source = _parse_point(merged, "input.source")
        mic = _parse_point(merged, "input.mic")
        given = [v is not None for v in (room, source, mic)]
        _require(all(given) or not any(given), "input.room",
                 "room, source and mic must be given together or all omitted")
        snr_raw = inp.get("snr_db")
        if isinstance(snr_raw, str):
            _require(snr_raw == "inf", "input.snr_db", f"expected a number or 'inf', got {snr_raw!r}")
            snr = float("inf")
        else:
            snr = float(_number(merged, "input.snr_db"))
        parsed_input = SceneInput(
            room=room, source=source, mic=mic,
            t60=float(_number(merged, "input.t60", lo=1e-3)),
            snr_db=snr,
            duration_s=float(_number(merged, "input.duration_s", lo=0.5)),
        )
    else:
        observed = inp.get("observed")
        _require(isinstance(observed, str) and observed, "input.observed",
                 "wav input needs an observed file path")
        for key in ("direct", "s_nn"):
            val = inp.get(key)
            _require(val is None or isinstance(val, str), f"input.{key}",
                     "expected a file path or null")
        parsed_input = WavInput(observed=observed, direct=inp.get("direct"), s_nn=inp.get("s_nn"))

    try:
        stft_cfg = StftConfig(
            frame_size=_number(merged, "stft.frame_size", lo=2, integer=True),
            hop=_number(merged, "stft.hop", lo=1, integer=True),
            window=merged["stft"].get("window", "sqrt_hann"),
        )
    except ValueError as err:
        raise ConfigError("stft", str(err)) from err

    est = merged["estimator"]
    kind = est.get("kind")
    _require(kind in ESTIMATOR_KINDS, "estimator.kind",
             f"expected one of {ESTIMATOR_KINDS}, got {kind!r}")
    degradation = float(_number(merged, "estimator.degradation", lo=0.0, hi=1.0))
    est_seed = _number(merged, "estimator.seed", lo=0, integer=True, optional=True)
    if kind == "external":
        _require(input_type == "wav" and parsed_input.s_nn is not None, "estimator.kind",
                 "external estimates need a wav input with an s_nn file")
    if kind == "oracle" and input_type == "wav":
        _require(parsed_input.direct is not None, "estimator.kind",
                 "oracle estimator needs the direct-path reference file")

    algo = merged["algorithm"]
    name = algo.get("name")
    _require(name in ("fcp", "kpfcp"), "algorithm.name",
             f"expected 'fcp' or 'kpfcp', got {name!r}")
    fcp_params = None
    kpfcp_params = None
    try:
        if name == "fcp":
            fcp_params = FcpParams(
                k=_number(merged, "algorithm.k", lo=1, integer=True),
                alpha=float(_number(merged, "algorithm.alpha", lo=0.0, hi=1.0)),
                sigma=float(_number(merged, "algorithm.sigma", lo=0.0)),
                lambda_floor=float(_number(merged, "algorithm.lambda_floor", lo=0.0)),
                phi_inv_cap=float(_number(merged, "algorithm.phi_inv_cap", lo=1.0)),
            )
        else:
            kpfcp_params = KpfcpParams(
                p=_number(merged, "algorithm.p", lo=1, integer=True),
                k1=_number(merged, "algorithm.k1", lo=1, integer=True),
                k2=_number(merged, "algorithm.k2", lo=1, integer=True),
                alpha1=float(_number(merged, "algorithm.alpha1", lo=0.0, hi=1.0)),
                alpha2=float(_number(merged, "algorithm.alpha2", lo=0.0, hi=1.0)),
                sigma=float(_number(merged, "algorithm.sigma", lo=0.0)),
                lambda_floor=float(_number(merged, "algorithm.lambda_floor", lo=0.0)),
                phi_inv_cap=float(_number(merged, "algorithm.phi_inv_cap", lo=1.0)),
            )
    except ValueError as err:
        raise ConfigError("algorithm", str(err)) from err

    met = merged["metrics"]
    _require(isinstance(met.get("enabled"), bool), "metrics.enabled", "expected true or false")
    metrics = MetricsSettings(
        enabled=met["enabled"],
        segment_s=float(_number(merged, "metrics.segment_s", lo=0.1)),
        smooth_s=float(_number(merged, "metrics.smooth_s", lo=0.1)),
    )

    return ExperimentConfig(
        seed=seed,
        backend=backend,
        workers=workers,
        instrument_macs=instrument,
        input=parsed_input,
        stft=stft_cfg,
        estimator_kind=kind,
        estimator_degradation=degradation,
        estimator_seed=est_seed,
        algorithm=name,
        fcp=fcp_params,
        kpfcp=kpfcp_params,
        metrics=metrics,
        raw=merged,
    )


def estimator_spec(cfg: ExperimentConfig, derived_seed: int) -> EstimatorSpec:
    seed = cfg.estimator_seed if cfg.estimator_seed is not None else derived_seed
    return EstimatorSpec(kind=cfg.estimator_kind, degradation=cfg.estimator_degradation, seed=seed)
