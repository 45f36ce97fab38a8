"""Command-line interface: simulate, label, segment, score, timeline, loss-check.

Every command writes a manifest next to its outputs recording the argv, the
effective configuration and the working directory; ``semvad replay`` re-runs
a manifest and reproduces the data files byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from . import io as fio
from .core import ConfigError, Mode, OffGridError, SegmenterConfig, TimeBase, validate_config
from .labelgen import AlignmentError, derive_labels
from .losses import LossWeights, frame_cross_entropy, joint_loss
from .metrics import ScoreAccumulator
from .segmenter import BACKEND, segment_stream
from .simulator import ScenarioError, ScenarioSpec, generate

EXIT_INPUT = 2
EXIT_IO = 1


class CliError(Exception):
    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or []


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("segmenter configuration (integer milliseconds)")
    g.add_argument("--config", type=Path, help="JSON config file; flags override it")
    g.add_argument("--mode", choices=[m.value for m in Mode])
    g.add_argument("--t-e-ms", type=int)
    g.add_argument("--t-ne-ms", type=int)
    g.add_argument("--t-max-ms", type=int)
    g.add_argument("--frame-shift-ms", type=int)
    g.add_argument("--punc-lookback-frames", type=int)
    g.add_argument("--smoothing-frames", type=int)


def _config_from_args(args) -> SegmenterConfig:
    d: dict[str, Any] = fio.read_json(args.config) if args.config else {}
    for key in ("mode", "t_e_ms", "t_ne_ms", "t_max_ms", "frame_shift_ms",
                "punc_lookback_frames", "smoothing_frames"):
        v = getattr(args, key)
        if v is not None:
            d[key] = v
    try:
        cfg = SegmenterConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError([str(exc)]) from None
    return validate_config(cfg)


def _write_manifest(path: Path, args, argv, config, inputs, outputs, started,
                    seed=None, extra=None) -> None:
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "config": config,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "seed": seed,
        "tool_version": __version__,
        "backend": BACKEND,
        "wall_clock_s": round(time.perf_counter() - started, 6),
    }
    if extra:
        manifest.update(extra)
    fio.write_json(path, manifest)


def sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.json")


def cmd_simulate(args, argv, started):
    cfg = _config_from_args(args)
    spec_dict = fio.read_json(args.spec)
    if not isinstance(spec_dict, dict):
        raise CliError("scenario spec must be a JSON object")
    if args.seed is not None:
        spec_dict["seed"] = args.seed
    spec = ScenarioSpec.from_dict(spec_dict)
    sim = generate(spec, cfg)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    outputs = {
        "alignment": out / "alignment.json",
        "labels": out / "labels.jsonl",
        "posteriors": out / "posteriors.jsonl",
    }
    fio.write_alignment(outputs["alignment"], sim.alignment)
    fio.write_labels(outputs["labels"], sim.labels)
    fio.write_posteriors(outputs["posteriors"], sim.posteriors)
    _write_manifest(out / "manifest.json", args, argv, cfg.to_dict(), {"spec": args.spec}, outputs,
                    started, seed=spec.seed,
                    extra={"scenario": spec.to_dict(), "stats": sim.stats.to_dict()})


def cmd_label(args, argv, started):
    alignment = fio.read_alignment(args.alignment)
    if args.frame_shift_ms is None:
        args.frame_shift_ms = alignment.time_base.frame_shift_ms
    cfg = _config_from_args(args)
    labels = derive_labels(alignment, cfg)
    fio.write_labels(args.output, labels)
    _write_manifest(sidecar(args.output), args, argv, cfg.to_dict(),
                    {"alignment": args.alignment}, {"labels": args.output}, started)


def cmd_segment(args, argv, started):
    cfg = _config_from_args(args)
    stream = fio.read_posteriors(args.posteriors)
    events = segment_stream(stream, cfg)
    fio.write_events(args.output, events)
    _write_manifest(sidecar(args.output), args, argv, cfg.to_dict(),
                    {"posteriors": args.posteriors}, {"events": args.output}, started)


def cmd_score(args, argv, started):
    paths = args.pairs
    if len(paths) % 2:
        raise CliError("score takes EVENTS LABELS pairs")
    acc = ScoreAccumulator()
    inputs = {}
    for k in range(0, len(paths), 2):
        events = fio.read_events(paths[k])
        labels = fio.read_labels(paths[k + 1])
        try:
            acc.add_stream(events, labels.vad)
        except ValueError as exc:
            raise CliError(f"{paths[k]} vs {paths[k + 1]}: {exc}") from None
        inputs[f"events_{k // 2}"] = paths[k]
        inputs[f"labels_{k // 2}"] = paths[k + 1]
    fio.write_report(args.output, acc.report())
    _write_manifest(sidecar(args.output), args, argv, None, inputs, {"report": args.output}, started)


def cmd_merge_reports(args, argv, started):
    acc = ScoreAccumulator()
    for path in args.reports:
        acc = acc.merge(fio.read_report(path).accumulator())
    fio.write_report(args.output, acc.report())
    _write_manifest(sidecar(args.output), args, argv, None,
                    {f"report_{i}": p for i, p in enumerate(args.reports)},
                    {"report": args.output}, started)


TIMELINE_FIELDS = ["stream_id", "mode", "trigger", "segment_end_ms", "decision_ms", "latency_ms"]


def _events_context(path: Path, default_shift: int) -> tuple[str, str, int]:
    """(stream id, mode label, frame shift) from the events file's manifest."""
    man_path = sidecar(path)
    if man_path.exists():
        man = fio.read_json(man_path)
        cfg = man.get("config") or {}
        posteriors = (man.get("inputs") or {}).get("posteriors")
        stream_id = Path(posteriors).parent.name + "/" + Path(posteriors).stem if posteriors else path.stem
        return stream_id, cfg.get("mode", "unknown"), int(cfg.get("frame_shift_ms", default_shift))
    return path.stem, "unknown", default_shift


def cmd_timeline(args, argv, started):
    rows = []
    for path in args.events:
        stream_id, mode, shift = _events_context(path, args.frame_shift_ms)
        for ev in fio.read_events(path):
            rows.append({
                "stream_id": stream_id,
                "mode": mode,
                "trigger": ev.trigger.value,
                "segment_end_ms": ev.segment_end_frame * shift,
                "decision_ms": ev.decision_frame * shift,
                "latency_ms": ev.latency_ms,
            })
    with open(args.output, "w", encoding="utf-8", newline="") as f:
        w = csv.DictWriter(f, fieldnames=TIMELINE_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    _write_manifest(sidecar(args.output), args, argv, None,
                    {f"events_{i}": p for i, p in enumerate(args.events)},
                    {"timeline": args.output}, started)


def cmd_loss_check(args, argv, started):
    try:
        weights = LossWeights(args.mu, args.lam)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    stream = fio.read_posteriors(args.posteriors)
    labels = fio.read_labels(args.labels)
    if len(stream) != len(labels):
        raise CliError(f"{len(stream)} posterior frames vs {len(labels)} label frames")
    l_punc = frame_cross_entropy(stream.punc, labels.punc)
    l_vad = frame_cross_entropy(stream.vad, labels.vad)
    report = {
        "n_frames": len(labels),
        "mu": weights.mu,
        "lambda": weights.lam,
        "l_punc": l_punc,
        "l_vad": l_vad,
        "l_asr": args.l_asr,
        "joint_loss": joint_loss(l_punc, args.l_asr, l_vad, weights),
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.output:
        args.output.write_text(text, encoding="utf-8")
        _write_manifest(sidecar(args.output), args, argv, None,
                        {"posteriors": args.posteriors, "labels": args.labels},
                        {"report": args.output}, started)
    else:
        sys.stdout.write(text)


@contextmanager
def _chdir(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def cmd_replay(args, argv, started):
    man = fio.read_json(args.manifest)
    if not isinstance(man, dict) or "argv" not in man:
        raise CliError(f"{args.manifest} is not a run manifest")
    if man["argv"] and man["argv"][0] == "replay":
        raise CliError("refusing to replay a replay")
    with _chdir(man.get("cwd", os.getcwd())):
        code = main(man["argv"])
    if code:
        raise CliError(f"replayed command exited with status {code}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semvad",
        description="Semantic VAD tail segmentation: simulate, label, segment and score streams.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate alignment, labels and posteriors")
    p.add_argument("spec", type=Path, help="scenario spec (JSON)")
    p.add_argument("--out-dir", "-o", type=Path, required=True)
    p.add_argument("--seed", type=int, help="override the scenario's seed")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("label", help="derive frame labels from an alignment")
    p.add_argument("alignment", type=Path)
    p.add_argument("--output", "-o", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("segment", help="run the segmenter over a posterior stream")
    p.add_argument("posteriors", type=Path)
    p.add_argument("--output", "-o", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("score", help="score events against reference labels")
    p.add_argument("pairs", type=Path, nargs="+", metavar="EVENTS LABELS")
    p.add_argument("--output", "-o", type=Path, required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("merge-reports", help="combine metrics reports from shards")
    p.add_argument("reports", type=Path, nargs="+")
    p.add_argument("--output", "-o", type=Path, required=True)
    p.set_defaults(func=cmd_merge_reports)

    p = sub.add_parser("timeline", help="decision-point table for stem plots")
    p.add_argument("events", type=Path, nargs="+")
    p.add_argument("--output", "-o", type=Path, required=True)
    p.add_argument("--frame-shift-ms", type=int, default=TimeBase().frame_shift_ms,
                   help="used when an events file has no manifest")
    p.set_defaults(func=cmd_timeline)

    p = sub.add_parser("loss-check", help="cross-entropies and the weighted joint loss")
    p.add_argument("posteriors", type=Path)
    p.add_argument("labels", type=Path)
    p.add_argument("--mu", type=float, default=0.2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.2)
    p.add_argument("--l-asr", type=float, default=0.0)
    p.add_argument("--output", "-o", type=Path)
    p.set_defaults(func=cmd_loss_check)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.set_defaults(func=cmd_replay)
    return parser


def _error(kind: str, message: str, details=None) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "details": details or []}) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        args.func(args, argv, started)
    except ConfigError as exc:
        _error("ConfigError", str(exc), exc.errors)
        return EXIT_INPUT
    except ScenarioError as exc:
        _error("ScenarioError", str(exc), exc.errors)
        return EXIT_INPUT
    except CliError as exc:
        _error("UsageError", str(exc), exc.details)
        return EXIT_INPUT
    except (fio.FormatError, OffGridError, AlignmentError, ValueError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_INPUT
    except OSError as exc:
        _error("OSError", str(exc))
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
