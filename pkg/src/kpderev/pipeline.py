"""Experiment orchestration.

`run_experiment` takes a validated configuration, produces the
dereverberated WAV plus metric and complexity records, and writes a
manifest containing every resolved parameter (sampled scene geometry,
derived seeds, chosen backend), so a rerun from the manifest is
bit-identical.
"""

import copy
import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend, metrics
from .audio import SampleBuffer, read_wav, write_wav
from .complexity import GTCRN_MACS_PER_TF_UNIT, MacModel, measure_macs
from .config import ExperimentConfig, SceneInput, WavInput, estimator_spec, parse_config
from .errors import ConfigError, DereverbError
from .estimator import EstimatorSpec, estimate
from .fcp import fcp_process
from .kpfcp import kpfcp_process
from .room import RoomScene, image_method, render_scene, sample_scene, schroeder_t60, split_direct
from .signals import speech_like
from .stft import TFGrid, analyze, synthesize
from .complexity import sweep_rows

# seed-stream indices under the root seed
_SCENE, _CLEAN, _NOISE, _ESTIMATOR = range(4)


def _child_seed(root_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(root_seed).generate_state(4, np.uint32)[index])


@dataclass
class RunResult:
    output: SampleBuffer
    observed: SampleBuffer
    reference: SampleBuffer | None
    report: metrics.MetricsReport | None
    complexity: dict
    manifest: dict
    out_dir: Path | None


def _prepare_scene(cfg: ExperimentConfig):
    """Resolve a scene input into signals plus the resolved description."""
    inp = cfg.input
    scene_rng = np.random.default_rng(_child_seed(cfg.seed, _SCENE))
    if inp.room is None:
        scene = sample_scene(scene_rng, t60=inp.t60)
    else:
        scene = RoomScene(inp.room, inp.source, inp.mic, inp.t60)
    rir = image_method(scene)
    clean = speech_like(inp.duration_s, rng=np.random.default_rng(_child_seed(cfg.seed, _CLEAN)))
    rendered = render_scene(clean, rir, inp.snr_db,
                            rng=np.random.default_rng(_child_seed(cfg.seed, _NOISE)))
    resolved = {
        "type": "scene",
        "room": list(scene.room_dims),
        "source": list(scene.source_pos),
        "mic": list(scene.mic_pos),
        "t60": scene.t60,
        "snr_db": "inf" if math.isinf(inp.snr_db) else inp.snr_db,
        "duration_s": inp.duration_s,
        "observed": None,
        "direct": None,
        "s_nn": None,
    }
    return rendered.observed, rendered.direct_truth, resolved


def _prepare_wav(inp: WavInput):
    observed = read_wav(inp.observed)
    direct = read_wav(inp.direct) if inp.direct else None
    resolved = {
        "type": "wav",
        "observed": inp.observed,
        "direct": inp.direct,
        "s_nn": inp.s_nn,
        "room": None, "source": None, "mic": None,
        "t60": None, "snr_db": None, "duration_s": None,
    }
    return observed, direct, resolved


def _estimate_grid(cfg: ExperimentConfig, observed_grid: TFGrid,
                   direct_grid: TFGrid | None, resolved: dict) -> TFGrid:
    if cfg.estimator_kind == "external":
        ext = read_wav(resolved["s_nn"])
        grid = analyze(ext, observed_grid.config)
        if grid.data.shape != observed_grid.data.shape:
            raise DereverbError(
                f"external estimate has {grid.frames} frames, observed has {observed_grid.frames}; "
                "lengths must match"
            )
        return grid
    spec = estimator_spec(cfg, _child_seed(cfg.seed, _ESTIMATOR))
    if spec.kind == "oracle" and direct_grid is None:
        raise DereverbError("oracle estimator needs the direct-path reference")
    return estimate(spec, observed_grid, direct_grid)


def _process(cfg: ExperimentConfig, observed_grid: TFGrid, s_nn_grid: TFGrid) -> TFGrid:
    if cfg.algorithm == "fcp":
        return fcp_process(observed_grid, s_nn_grid, cfg.fcp,
                           backend=cfg.backend, workers=cfg.workers)
    return kpfcp_process(observed_grid, s_nn_grid, cfg.kpfcp,
                         backend=cfg.backend, workers=cfg.workers)


def _complexity_record(cfg: ExperimentConfig, observed_grid: TFGrid, s_nn_grid: TFGrid) -> dict:
    if cfg.algorithm == "fcp":
        model = MacModel.for_fcp(cfg.fcp.k)
    else:
        model = MacModel.for_kpfcp(cfg.kpfcp.p, cfg.kpfcp.k1, cfg.kpfcp.k2)
    record = {
        "algorithm": model.algorithm,
        "params": list(model.params),
        "model_macs_per_tf_unit": model.macs_per_tf_unit,
        "estimator_stage_macs_per_tf_unit": GTCRN_MACS_PER_TF_UNIT,
        "measured_macs_per_tf_unit": None,
    }
    if cfg.instrument_macs:
        # the per-unit count is frame-invariant, a short prefix suffices
        frames = min(observed_grid.frames, 50)
        sub_obs = TFGrid(observed_grid.data[:frames].copy(), observed_grid.config)
        sub_est = TFGrid(s_nn_grid.data[:frames].copy(), s_nn_grid.config)
        record["measured_macs_per_tf_unit"] = measure_macs(
            cfg.algorithm, sub_obs, sub_est, cfg.params()
        )
    return record


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunResult:
    """Execute one experiment; write outputs when ``out_dir`` is given."""
    if isinstance(cfg.input, SceneInput):
        observed, direct, resolved_input = _prepare_scene(cfg)
    else:
        observed, direct, resolved_input = _prepare_wav(cfg.input)

    observed_grid = analyze(observed, cfg.stft)
    direct_grid = analyze(direct, cfg.stft) if direct is not None else None
    s_nn_grid = _estimate_grid(cfg, observed_grid, direct_grid, resolved_input)
    out_grid = _process(cfg, observed_grid, s_nn_grid)
    output = synthesize(out_grid, length=len(observed))

    report = None
    if cfg.metrics.enabled:
        if direct is None:
            raise DereverbError("metrics require a direct-path reference signal")
        report = metrics.report(direct, output, observed,
                                cfg.metrics.segment_s, cfg.metrics.smooth_s)

    complexity = _complexity_record(cfg, observed_grid, s_nn_grid)

    peak = float(np.max(np.abs(output.samples))) if len(output) else 0.0
    gain = 1.0 if peak <= 0.999 else 0.999 / peak
    written = SampleBuffer(output.samples * gain, output.sample_rate)

    resolved = copy.deepcopy(cfg.raw)
    resolved["input"] = resolved_input
    resolved["backend"] = _backend.resolve(cfg.backend)
    resolved["estimator"]["seed"] = (
        cfg.estimator_seed if cfg.estimator_seed is not None
        else _child_seed(cfg.seed, _ESTIMATOR)
    )
    manifest = {
        "config": resolved,
        "run": {
            "applied_gain": gain,
            "outputs": {
                "wav": "output.wav",
                "metrics_json": "metrics.json" if report else None,
                "metrics_csv": "metrics.csv" if report else None,
                "complexity": "complexity.json",
            },
            "complexity": complexity,
        },
    }

    out_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        write_wav(out_path / "output.wav", written)
        if report is not None:
            report.to_json(out_path / "metrics.json")
            report.to_csv(out_path / "metrics.csv")
        with open(out_path / "complexity.json", "w") as fh:
            json.dump(complexity, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(out_path / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    return RunResult(
        output=written,
        observed=observed,
        reference=direct,
        report=report,
        complexity=complexity,
        manifest=manifest,
        out_dir=out_path,
    )


def sweep_p(cfg: ExperimentConfig, p_values, out_dir=None) -> list:
    """Run the factored algorithm for several P values over one identical
    observed signal; returns the per-P results."""
    if cfg.algorithm != "kpfcp":
        raise ConfigError("algorithm.name", "sweep-p applies to the kpfcp algorithm")
    results = []
    for p in p_values:
        sub = copy.deepcopy(cfg.raw)
        sub["algorithm"]["p"] = int(p)
        sub_cfg = parse_config(sub)
        sub_dir = None if out_dir is None else Path(out_dir) / f"p{p}"
        results.append((int(p), run_experiment(sub_cfg, sub_dir)))
    if out_dir is not None and results:
        summary = Path(out_dir) / "summary.csv"
        with open(summary, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["p", "fwsnr_db", "delta_fwsnr_db", "model_macs_per_tf_unit"])
            for p, res in results:
                writer.writerow([
                    p,
                    f"{res.report.fwsnr_db:.6f}" if res.report else "",
                    f"{res.report.delta_fwsnr_db:.6f}" if res.report else "",
                    res.complexity["model_macs_per_tf_unit"],
                ])
    return results


def write_complexity_csv(path, k1: int, k2: int, p_values) -> None:
    """Model sweep as CSV rows (p, macs_kpfcp, macs_fcp)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "macs_kpfcp", "macs_fcp"])
        for row in sweep_rows(k1, k2, p_values):
            writer.writerow(row)


def make_rir(out_path, t60: float = 0.4, room=None, source=None, mic=None,
             seed: int = 0, sample_rate: int = 16000) -> dict:
    """Generate one impulse response and write it as WAV or raw .npy."""
    if room is None:
        scene = sample_scene(np.random.default_rng(seed), t60=t60, sample_rate=sample_rate)
    else:
        if source is None or mic is None:
            raise ConfigError("room", "explicit rooms need source and mic positions")
        scene = RoomScene(room, source, mic, t60, sample_rate)
    rir = image_method(scene)
    direct, _ = split_direct(rir)
    out_path = Path(out_path)
    info = {
        "room": list(scene.room_dims),
        "source": list(scene.source_pos),
        "mic": list(scene.mic_pos),
        "t60_target": scene.t60,
        "t60_schroeder": schroeder_t60(rir.taps, sample_rate),
        "direct_tap_index": rir.direct_index,
        "direct_cutoff": rir.direct_cutoff,
        "n_taps": int(rir.taps.size),
        "path": str(out_path),
    }
    if out_path.suffix == ".npy":
        np.save(out_path, rir.taps)
    elif out_path.suffix == ".wav":
        peak = float(np.max(np.abs(rir.taps)))
        gain = 0.999 / peak if peak > 0 else 1.0
        write_wav(out_path, SampleBuffer(rir.taps * gain, sample_rate))
        info["applied_gain"] = gain
    else:
        raise ConfigError("out", f"unsupported RIR container {out_path.suffix!r}, use .wav or .npy")
    return info
