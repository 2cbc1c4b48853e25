"""Time the compiled kernel against the pure-Python fallback.

    python3 benchmarks/bench_kernel.py [--repeat N]
"""
import argparse
import statistics
import time

from smclab import config as cfgmod
from smclab.sim import BACKEND, simulate

CONFIGS = ["ch3_stabilization", "ch3_swingup", "vdp_tracking", "tank_level"]


def best_time(scenario, backend, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        simulate(scenario, backend)
        times.append(time.perf_counter() - start)
    return min(times), statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if BACKEND != "cython":
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")
    print(f"{'config':<20}{'steps':>8}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name in CONFIGS:
        sc = cfgmod.build_scenario(cfgmod.load(name))
        py, _ = best_time(sc, "python", args.repeat)
        cy, _ = best_time(sc, "cython", args.repeat)
        steps = round(sc.duration / sc.dt)
        print(f"{name:<20}{steps:>8}{py * 1e3:>12.2f}{cy * 1e3:>12.3f}{py / cy:>10.0f}x")


if __name__ == "__main__":
    main()
