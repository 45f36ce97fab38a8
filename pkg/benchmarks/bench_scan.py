"""Compare the compiled and pure-Python segmentation kernels.

    python benchmarks/bench_scan.py --utterances 10000 --repeat 5

Both kernels run on the same simulated stream and must return identical
events; the incremental engine is timed on a slice since it is much slower.
"""

import argparse
import time

from semvad.core import SegmenterConfig
from semvad.segmenter import BACKENDS, segment_incremental, segment_stream
from semvad.simulator import ScenarioSpec, generate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--utterances", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--engine-frames", type=int, default=200_000,
                    help="frames fed to the incremental engine (0 to skip)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cfg = SegmenterConfig()
    spec = ScenarioSpec(n_utterances=args.utterances, endpoint_model_accuracy=0.8, seed=args.seed)
    stream = generate(spec, cfg).posteriors
    n = len(stream)
    print(f"{n} frames, {args.utterances} utterances, best of {args.repeat}")

    results = {}
    for name in sorted(BACKENDS):
        secs, events = best_of(lambda: segment_stream(stream, cfg, backend=name), args.repeat)
        results[name] = events
        print(f"  {name:<12} {secs * 1e3:9.1f} ms  {secs / n * 1e9:7.1f} ns/frame  {len(events)} events")
    assert len({tuple(ev) for ev in results.values()}) == 1, "kernels disagree"

    if args.engine_frames:
        part = stream[: min(n, args.engine_frames)]
        secs, _ = best_of(lambda: segment_incremental(part, cfg), 1)
        print(f"  {'incremental':<12} {secs * 1e3:9.1f} ms  {secs / len(part) * 1e9:7.1f} ns/frame"
              f"  ({len(part)} frames)")


if __name__ == "__main__":
    main()
