"""Command line interface.

Verbs:
    run               one experiment (synthetic scene or WAV input)
    sweep-p           same scene across several decomposition orders
    sweep-complexity  cost-model table as CSV
    make-rir          generate and export a room impulse response

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import sys

from .config import load_config_file, parse_config
from .errors import AudioFormatError, ConfigError, DereverbError, NumericsError
from .pipeline import make_rir, run_experiment, sweep_p, write_complexity_csv


def _add_shared_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config or a manifest from a previous run")
    p.add_argument("--algorithm", choices=["fcp", "kpfcp"])
    p.add_argument("--p", type=int, help="decomposition order")
    p.add_argument("--k1", type=int)
    p.add_argument("--k2", type=int)
    p.add_argument("--k", type=int, help="full filter length (fcp)")
    p.add_argument("--t60", type=float, help="target reverberation time, seconds")
    p.add_argument("--snr", type=float, help="noise level, dB")
    p.add_argument("--duration", type=float, help="synthetic utterance length, seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--estimator", choices=["oracle", "identity", "external"])
    p.add_argument("--degradation", type=float)
    p.add_argument("--backend", choices=["native", "python"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--metrics-csv", help="extra copy of the per-segment CSV")
    p.add_argument("--instrument-macs", action="store_true", default=None)


def _flag_overrides(args) -> dict:
    over: dict = {}

    def put(path, value):
        if value is None:
            return
        node = over
        *heads, leaf = path.split(".")
        for h in heads:
            node = node.setdefault(h, {})
        node[leaf] = value

    put("algorithm.name", args.algorithm)
    put("algorithm.p", args.p)
    put("algorithm.k1", args.k1)
    put("algorithm.k2", args.k2)
    put("algorithm.k", args.k)
    put("input.t60", args.t60)
    put("input.snr_db", args.snr)
    put("input.duration_s", args.duration)
    put("seed", args.seed)
    put("estimator.kind", args.estimator)
    put("estimator.degradation", args.degradation)
    put("backend", args.backend)
    put("workers", args.workers)
    put("instrument_macs", args.instrument_macs)
    return over


def _load_merged(args) -> dict:
    doc = load_config_file(args.config) if args.config else {}
    over = _flag_overrides(args)
    # nested dict merge, flags win
    def merge(base, extra):
        for k, v in extra.items():
            if isinstance(v, dict) and isinstance(base.get(k), dict):
                merge(base[k], v)
            else:
                base[k] = v
        return base

    return merge(doc, over)


def _cmd_run(args) -> int:
    cfg = parse_config(_load_merged(args))
    result = run_experiment(cfg, out_dir=args.out)
    if result.report is not None and args.metrics_csv:
        result.report.to_csv(args.metrics_csv)
    summary = {
        "out_dir": str(result.out_dir) if result.out_dir else None,
        "fwsnr_db": result.report.fwsnr_db if result.report else None,
        "delta_fwsnr_db": result.report.delta_fwsnr_db if result.report else None,
        "model_macs_per_tf_unit": result.complexity["model_macs_per_tf_unit"],
        "measured_macs_per_tf_unit": result.complexity["measured_macs_per_tf_unit"],
    }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_sweep_p(args) -> int:
    merged = _load_merged(args)
    merged.setdefault("algorithm", {})["name"] = "kpfcp"
    cfg = parse_config(merged)
    p_values = [int(v) for v in args.p_list.split(",") if v.strip()]
    if not p_values:
        raise ConfigError("p-list", "need at least one P value")
    results = sweep_p(cfg, p_values, out_dir=args.out)
    for p, res in results:
        line = {"p": p, "delta_fwsnr_db": res.report.delta_fwsnr_db if res.report else None}
        print(json.dumps(line))
    return 0


def _cmd_sweep_complexity(args) -> int:
    if args.p_min > args.p_max + 1:
        raise ConfigError("p-min", "p-min must not exceed p-max + 1")
    p_values = range(args.p_min, args.p_max + 1)
    write_complexity_csv(args.out, args.k1, args.k2, p_values)
    print(f"wrote {args.out}")
    return 0


def _cmd_make_rir(args) -> int:
    room = [float(v) for v in args.room.split(",")] if args.room else None
    source = [float(v) for v in args.source.split(",")] if args.source else None
    mic = [float(v) for v in args.mic.split(",")] if args.mic else None
    info = make_rir(args.out, t60=args.t60, room=room, source=source, mic=mic, seed=args.seed)
    print(json.dumps(info, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpderev", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one dereverberation experiment")
    _add_shared_run_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep-p", help="one scene, several decomposition orders")
    _add_shared_run_flags(p_sweep)
    p_sweep.add_argument("--p-list", default="3,4,5", help="comma separated P values")
    p_sweep.set_defaults(func=_cmd_sweep_p)

    p_cx = sub.add_parser("sweep-complexity", help="cost model table as CSV")
    p_cx.add_argument("--k1", type=int, default=9)
    p_cx.add_argument("--k2", type=int, default=9)
    p_cx.add_argument("--p-min", type=int, default=1)
    p_cx.add_argument("--p-max", type=int, default=9)
    p_cx.add_argument("--out", required=True, help="CSV path")
    p_cx.set_defaults(func=_cmd_sweep_complexity)

    p_rir = sub.add_parser("make-rir", help="generate a room impulse response")
    p_rir.add_argument("--t60", type=float, default=0.4)
    p_rir.add_argument("--room", help="comma separated dimensions, meters")
    p_rir.add_argument("--source", help="comma separated position, meters")
    p_rir.add_argument("--mic", help="comma separated position, meters")
    p_rir.add_argument("--seed", type=int, default=0)
    p_rir.add_argument("--out", required=True, help=".wav or .npy path")
    p_rir.set_defaults(func=_cmd_make_rir)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, AudioFormatError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NumericsError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return 3
    except DereverbError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
